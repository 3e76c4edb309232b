"""B+-tree styled leaf nodes: one block per leaf, sorted pairs, sibling links.

Leaf block layout (little-endian):

    off  0  count     u16
    off  2  reserved  6x
    off  8  prev      u64   left sibling block id, 0 = none
    off 16  next      u64   right sibling block id, 0 = none
    off 24  checksum  u64   crc32 over count/prev/next and the used pairs
    off 32  pairs     count * (key u64, payload u64)

Capacity is (block_size - 32) // 16 pairs: 254 at the default 4 KB block.
Duplicate keys are permitted; inserts append after existing equal keys so
the leftmost occurrence stays put.
"""

from __future__ import annotations

import struct
import zlib
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

import numpy as np

from .blockstore import BlockStore

LEAF_HEADER = struct.Struct("<H6xQQQ")
LEAF_HEADER_SIZE = 32
PAIR_SIZE = 16


class LeafError(Exception):
    pass


def leaf_capacity(block_size: int) -> int:
    return (block_size - LEAF_HEADER_SIZE) // PAIR_SIZE


def merge_threshold(cap: int) -> int:
    """Underflow bound: a leaf below a quarter full wants a borrow or merge."""
    return -(-cap // 4)


@dataclass
class LeafNode:
    keys: list = field(default_factory=list)
    vals: list = field(default_factory=list)
    prev: int = 0
    next: int = 0

    @property
    def count(self) -> int:
        return len(self.keys)

    def max_key(self) -> int:
        return self.keys[-1]

    def pairs(self) -> list:
        return list(zip(self.keys, self.vals))


def _checksum(count: int, prev: int, nxt: int, body: bytes) -> int:
    head = struct.pack("<HQQ", count, prev, nxt)
    return zlib.crc32(body, zlib.crc32(head))


def serialize_leaf(leaf: LeafNode, block_size: int) -> bytes:
    n = leaf.count
    if n > leaf_capacity(block_size):
        raise LeafError(f"{n} pairs exceed leaf capacity")
    arr = np.empty(2 * n, dtype="<u8")
    arr[0::2] = leaf.keys
    arr[1::2] = leaf.vals
    body = arr.tobytes()
    buf = bytearray(block_size)
    LEAF_HEADER.pack_into(buf, 0, n, leaf.prev, leaf.next, _checksum(n, leaf.prev, leaf.next, body))
    buf[LEAF_HEADER_SIZE:LEAF_HEADER_SIZE + len(body)] = body
    return bytes(buf)


def deserialize_leaf(data: bytes) -> LeafNode:
    n, prev, nxt, stored = LEAF_HEADER.unpack_from(data, 0)
    body = data[LEAF_HEADER_SIZE:LEAF_HEADER_SIZE + n * PAIR_SIZE]
    if _checksum(n, prev, nxt, body) != stored:
        raise LeafError("leaf checksum mismatch")
    flat = struct.unpack(f"<{2 * n}Q", body)
    return LeafNode(list(flat[0::2]), list(flat[1::2]), prev, nxt)


def read_leaf(store: BlockStore, bid: int) -> LeafNode:
    return deserialize_leaf(store.read(bid))


def write_leaf(store: BlockStore, bid: int, leaf: LeafNode) -> None:
    store.write(bid, serialize_leaf(leaf, store.block_size))


def leaf_search(leaf: LeafNode, key: int) -> tuple[int, bool]:
    """Position of the first pair with key >= search key, plus a found flag."""
    pos = bisect_left(leaf.keys, key)
    return pos, pos < leaf.count and leaf.keys[pos] == key


def leaf_insert(leaf: LeafNode, key: int, payload: int, cap: int) -> bool:
    """Insert in sorted position (after equal keys); False when the leaf is full."""
    if leaf.count >= cap:
        return False
    pos = bisect_right(leaf.keys, key)
    leaf.keys.insert(pos, key)
    leaf.vals.insert(pos, payload)
    return True


def leaf_delete(leaf: LeafNode, key: int, cap: int) -> tuple[bool, bool]:
    """Remove the first pair matching key; flags (removed, underflow)."""
    pos = bisect_left(leaf.keys, key)
    if pos >= leaf.count or leaf.keys[pos] != key:
        return False, False
    del leaf.keys[pos]
    del leaf.vals[pos]
    return True, leaf.count < merge_threshold(cap)


def split_pairs(leaf: LeafNode, key: int, payload: int, cap: int) -> LeafNode:
    """Split a full leaf merged with a pending pair; returns the new left node.

    The left node takes the smaller floor((cap+1)/2) items, the original
    keeps the larger remainder, so the key registered for the original in
    the inner index still bounds its content.
    """
    if leaf.count != cap:
        raise LeafError("split requires a full leaf")
    pos = bisect_right(leaf.keys, key)
    keys = leaf.keys[:pos] + [key] + leaf.keys[pos:]
    vals = leaf.vals[:pos] + [payload] + leaf.vals[pos:]
    left_n = (cap + 1) // 2
    left = LeafNode(keys[:left_n], vals[:left_n])
    leaf.keys = keys[left_n:]
    leaf.vals = vals[left_n:]
    return left


def leaf_split(store: BlockStore, bid: int, leaf: LeafNode, key: int, payload: int) -> tuple[int, int]:
    """Split the full leaf at ``bid``, stitch siblings, persist everything.

    Returns (new left block id, max key of the left node), the pair the
    caller must register in the inner index.  The original block id keeps
    the larger half, so its existing inner entry stays valid.
    """
    cap = leaf_capacity(store.block_size)
    left = split_pairs(leaf, key, payload, cap)
    left_bid = store.allocate()
    left.prev = leaf.prev
    left.next = bid
    if leaf.prev:
        before = read_leaf(store, leaf.prev)
        before.next = left_bid
        write_leaf(store, leaf.prev, before)
    leaf.prev = left_bid
    write_leaf(store, left_bid, left)
    write_leaf(store, bid, leaf)
    return left_bid, left.max_key()


def leaf_scan_from(store: BlockStore, bid: int, pos: int, end_key: int | None = None,
                   limit: int | None = None) -> list[tuple[int, int]]:
    """Emit pairs in key order from (leaf, pos), following sibling links.

    Stops after the last pair with key <= end_key, or after ``limit`` pairs,
    whichever comes first.  Reads exactly the leaves it touches.
    """
    out: list[tuple[int, int]] = []
    leaf = read_leaf(store, bid)
    while True:
        for i in range(pos, leaf.count):
            k = leaf.keys[i]
            if end_key is not None and k > end_key:
                return out
            out.append((k, leaf.vals[i]))
            if limit is not None and len(out) >= limit:
                return out
        if not leaf.next:
            return out
        leaf = read_leaf(store, leaf.next)
        pos = 0


def pack_leaf_block(keys: np.ndarray, vals: np.ndarray, prev: int, nxt: int, block_size: int) -> bytes:
    """Vectorized leaf serialization for bulkload."""
    n = int(keys.shape[0])
    arr = np.empty(2 * n, dtype="<u8")
    arr[0::2] = keys
    arr[1::2] = vals
    body = arr.tobytes()
    buf = bytearray(block_size)
    LEAF_HEADER.pack_into(buf, 0, n, prev, nxt, _checksum(n, prev, nxt, body))
    buf[LEAF_HEADER_SIZE:LEAF_HEADER_SIZE + len(body)] = body
    return bytes(buf)
