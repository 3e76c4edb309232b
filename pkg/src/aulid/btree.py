"""Baseline on-disk B+-tree over the same block store and leaf format.

Inner nodes are one block each: a 16-byte header (entry count, level) and up
to 255 (pivot, child) entries at 4 KB blocks, where a pivot upper-bounds its
child's subtree.  Every level is a disk read - there is no root cache and no
fast path - so a lookup costs exactly the tree height in blocks.  Splits
keep the smaller half in the original (left) node.

Sharing the leaf layer with the learned index means any measured difference
between the two is attributable to the inner design alone.
"""

from __future__ import annotations

import struct
from bisect import bisect_left, bisect_right

import numpy as np

from .blockstore import BlockStore, INDEX_KIND_BTREE
from .leaf import (
    LeafNode, leaf_capacity, leaf_search, leaf_insert, leaf_delete,
    merge_threshold, read_leaf, write_leaf, pack_leaf_block,
)

BT_HEADER = struct.Struct("<HB13x")
BT_HEADER_SIZE = 16
BT_META = struct.Struct("<QI")


class BTreeError(Exception):
    pass


def bt_fanout(block_size: int) -> int:
    return (block_size - BT_HEADER_SIZE) // 16


class _Inner:
    __slots__ = ("level", "pivots", "children")

    def __init__(self, level: int, pivots: list[int], children: list[int]):
        self.level = level
        self.pivots = pivots
        self.children = children

    @property
    def count(self) -> int:
        return len(self.pivots)


def _read_inner(store: BlockStore, bid: int) -> _Inner:
    data = store.read(bid)
    count, level = BT_HEADER.unpack_from(data, 0)
    flat = struct.unpack_from(f"<{2 * count}Q", data, BT_HEADER_SIZE)
    return _Inner(level, list(flat[0::2]), list(flat[1::2]))


def _write_inner(store: BlockStore, bid: int, node: _Inner) -> None:
    buf = bytearray(store.block_size)
    BT_HEADER.pack_into(buf, 0, node.count, node.level)
    flat = [x for pair in zip(node.pivots, node.children) for x in pair]
    if flat:
        struct.pack_into(f"<{len(flat)}Q", buf, BT_HEADER_SIZE, *flat)
    store.write(bid, bytes(buf))


class BPlusTreeIndex:
    def __init__(self, store: BlockStore):
        self.store = store
        self.root = 0
        self.height = 0  # levels including the leaf level; 1 = root is a leaf
        self._cap = leaf_capacity(store.block_size)
        self._fanout = bt_fanout(store.block_size)

    # -- construction ---------------------------------------------------------

    @classmethod
    def bulkload(cls, store: BlockStore, keys, payloads, leaf_fill: float = 1.0) -> "BPlusTreeIndex":
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        payloads = np.ascontiguousarray(payloads, dtype=np.uint64)
        if keys.shape != payloads.shape:
            raise BTreeError("keys and payloads must have equal length")
        if keys.size > 1 and np.any(keys[1:] < keys[:-1]):
            raise BTreeError("bulkload input must be sorted by key")
        if not 0.0 < leaf_fill <= 1.0:
            raise BTreeError("leaf_fill must be in (0, 1]")
        idx = cls(store)
        store.index_kind = INDEX_KIND_BTREE
        n = int(keys.size)
        if n == 0:
            bid = store.allocate()
            write_leaf(store, bid, LeafNode())
            idx.root, idx.height = bid, 1
            idx.flush()
            return idx
        per = max(1, int(leaf_fill * idx._cap))
        nleaves = -(-n // per)
        first = store.allocate_run(nleaves)
        entries: list[tuple[int, int]] = []
        for i in range(nleaves):
            lo, hi = i * per, min((i + 1) * per, n)
            prev = first + i - 1 if i else 0
            nxt = first + i + 1 if i < nleaves - 1 else 0
            store.write(first + i, pack_leaf_block(keys[lo:hi], payloads[lo:hi], prev, nxt, store.block_size))
            entries.append((int(keys[hi - 1]), first + i))
        level = 1
        while len(entries) > 1:
            entries = idx._build_level(entries, level)
            level += 1
        idx.root = entries[0][1]
        idx.height = level
        idx.flush()
        return idx

    def _build_level(self, entries: list[tuple[int, int]], level: int) -> list[tuple[int, int]]:
        f = self._fanout
        groups = [entries[i:i + f] for i in range(0, len(entries), f)]
        # rebalance an undersized trailing group against its neighbor
        if len(groups) > 1 and len(groups[-1]) < -(-f // 2):
            combined = groups[-2] + groups[-1]
            half = len(combined) // 2
            groups[-2], groups[-1] = combined[:half], combined[half:]
        out = []
        for grp in groups:
            bid = self.store.allocate()
            _write_inner(self.store, bid, _Inner(level, [e[0] for e in grp], [e[1] for e in grp]))
            out.append((grp[-1][0], bid))
        return out

    @classmethod
    def open(cls, store: BlockStore) -> "BPlusTreeIndex":
        idx = cls(store)
        idx.root, idx.height = BT_META.unpack_from(store.app_area(), 0)
        store.reset_counters()
        return idx

    def flush(self) -> None:
        self.store.set_app_area(BT_META.pack(self.root, self.height))
        self.store.flush()

    def close(self) -> None:
        self.flush()
        self.store.close()

    # -- descent ------------------------------------------------------------------

    def _route(self, node: _Inner, key: int) -> int:
        i = bisect_left(node.pivots, key)
        return min(i, node.count - 1)

    def _descend(self, key: int) -> tuple[list[tuple[int, _Inner, int]], int]:
        """Path of (block, node, chosen child index) plus the leaf block."""
        path = []
        bid = self.root
        for _ in range(self.height - 1):
            node = _read_inner(self.store, bid)
            i = self._route(node, key)
            path.append((bid, node, i))
            bid = node.children[i]
        return path, bid

    # -- reads -----------------------------------------------------------------------

    def lookup(self, key: int):
        _, bid = self._descend(key)
        leaf = read_leaf(self.store, bid)
        pos, found = leaf_search(leaf, key)
        return leaf.vals[pos] if found else None

    def scan(self, lo: int, hi: int) -> list[tuple[int, int]]:
        if lo > hi:
            return []
        _, bid = self._descend(lo)
        leaf = read_leaf(self.store, bid)
        pos, _ = leaf_search(leaf, lo)
        out: list[tuple[int, int]] = []
        while True:
            for i in range(pos, leaf.count):
                k = leaf.keys[i]
                if k > hi:
                    return out
                out.append((k, leaf.vals[i]))
            if not leaf.next:
                return out
            leaf = read_leaf(self.store, leaf.next)
            pos = 0

    def scan_count(self, lo: int, n: int) -> list[tuple[int, int]]:
        if n <= 0:
            return []
        _, bid = self._descend(lo)
        leaf = read_leaf(self.store, bid)
        pos, _ = leaf_search(leaf, lo)
        out: list[tuple[int, int]] = []
        while True:
            for i in range(pos, leaf.count):
                out.append((leaf.keys[i], leaf.vals[i]))
                if len(out) >= n:
                    return out
            if not leaf.next:
                return out
            leaf = read_leaf(self.store, leaf.next)
            pos = 0

    # -- writes -----------------------------------------------------------------------

    def insert(self, key: int, payload: int) -> None:
        path, bid = self._descend(key)
        leaf = read_leaf(self.store, bid)
        if leaf_insert(leaf, key, payload, self._cap):
            write_leaf(self.store, bid, leaf)
            return
        # split: the original keeps the smaller half and stays the left node
        pos = bisect_right(leaf.keys, key)
        keys = leaf.keys[:pos] + [key] + leaf.keys[pos:]
        vals = leaf.vals[:pos] + [payload] + leaf.vals[pos:]
        keep = (self._cap + 1) // 2
        right = LeafNode(keys[keep:], vals[keep:], prev=bid, next=leaf.next)
        right_bid = self.store.allocate()
        if leaf.next:
            after = read_leaf(self.store, leaf.next)
            after.prev = right_bid
            write_leaf(self.store, leaf.next, after)
        leaf.keys, leaf.vals, leaf.next = keys[:keep], vals[:keep], right_bid
        write_leaf(self.store, bid, leaf)
        write_leaf(self.store, right_bid, right)
        self._insert_up(path, bid, leaf.max_key(), right_bid, right.max_key())

    def _insert_up(self, path, left_bid: int, left_max: int, right_bid: int, right_max: int) -> None:
        """Register a split with the parent chain, splitting inners as needed."""
        while path:
            bid, node, i = path.pop()
            old_pivot = node.pivots[i]
            node.pivots[i] = left_max
            node.pivots.insert(i + 1, max(old_pivot, right_max))
            node.children.insert(i + 1, right_bid)
            if node.count <= self._fanout:
                _write_inner(self.store, bid, node)
                return
            keep = (node.count + 1) // 2
            right = _Inner(node.level, node.pivots[keep:], node.children[keep:])
            node.pivots, node.children = node.pivots[:keep], node.children[:keep]
            rbid = self.store.allocate()
            _write_inner(self.store, bid, node)
            _write_inner(self.store, rbid, right)
            left_bid, left_max = bid, node.pivots[-1]
            right_bid, right_max = rbid, right.pivots[-1]
        new_root = self.store.allocate()
        _write_inner(self.store, new_root,
                     _Inner(self.height, [left_max, right_max], [left_bid, right_bid]))
        self.root = new_root
        self.height += 1

    def delete(self, key: int) -> bool:
        path, bid = self._descend(key)
        leaf = read_leaf(self.store, bid)
        removed, underflow = leaf_delete(leaf, key, self._cap)
        if not removed:
            return False
        if not underflow or not path:
            write_leaf(self.store, bid, leaf)
            return True
        self._fix_leaf_underflow(path, bid, leaf)
        return True

    def _fix_leaf_underflow(self, path, bid: int, leaf: LeafNode) -> None:
        pbid, parent, i = path[-1]
        # prefer merging with a same-parent sibling when the result fits
        if i > 0:
            lbid = parent.children[i - 1]
            left = read_leaf(self.store, lbid)
            if left.count + leaf.count <= self._cap:
                left.keys += leaf.keys
                left.vals += leaf.vals
                left.next = leaf.next
                if leaf.next:
                    after = read_leaf(self.store, leaf.next)
                    after.prev = lbid
                    write_leaf(self.store, leaf.next, after)
                write_leaf(self.store, lbid, left)
                self.store.free(bid)
                parent.pivots[i - 1] = parent.pivots[i]
                del parent.pivots[i]
                del parent.children[i]
                self._finish_inner(path, pbid, parent)
                return
            take = (left.count + leaf.count) // 2 - leaf.count
            leaf.keys = left.keys[-take:] + leaf.keys
            leaf.vals = left.vals[-take:] + leaf.vals
            del left.keys[-take:]
            del left.vals[-take:]
            write_leaf(self.store, lbid, left)
            write_leaf(self.store, bid, leaf)
            parent.pivots[i - 1] = left.keys[-1]
            _write_inner(self.store, pbid, parent)
            return
        rbid = parent.children[i + 1]
        right = read_leaf(self.store, rbid)
        if leaf.count + right.count <= self._cap:
            leaf.keys += right.keys
            leaf.vals += right.vals
            leaf.next = right.next
            if right.next:
                after = read_leaf(self.store, right.next)
                after.prev = bid
                write_leaf(self.store, right.next, after)
            write_leaf(self.store, bid, leaf)
            self.store.free(rbid)
            parent.pivots[i] = parent.pivots[i + 1]
            del parent.pivots[i + 1]
            del parent.children[i + 1]
            self._finish_inner(path, pbid, parent)
            return
        take = (leaf.count + right.count) // 2 - leaf.count
        leaf.keys += right.keys[:take]
        leaf.vals += right.vals[:take]
        del right.keys[:take]
        del right.vals[:take]
        write_leaf(self.store, bid, leaf)
        write_leaf(self.store, rbid, right)
        parent.pivots[i] = leaf.keys[-1]
        _write_inner(self.store, pbid, parent)

    def _finish_inner(self, path, bid: int, node: _Inner) -> None:
        """Persist an inner node after child removal, rebalancing upward."""
        path = path[:-1]
        min_count = -(-self._fanout // 2)
        while node.count < min_count:
            if not path:
                if node.count == 1 and self.height > 1:
                    self.store.free(bid)
                    self.root = node.children[0]
                    self.height -= 1
                    return
                break
            pbid, parent, i = path.pop()
            merged = False
            if i > 0:
                lbid = parent.children[i - 1]
                left = _read_inner(self.store, lbid)
                if left.count + node.count <= self._fanout:
                    left.pivots += node.pivots
                    left.children += node.children
                    _write_inner(self.store, lbid, left)
                    self.store.free(bid)
                    parent.pivots[i - 1] = parent.pivots[i]
                    del parent.pivots[i]
                    del parent.children[i]
                    bid, node = pbid, parent
                    merged = True
                else:
                    take = (left.count + node.count) // 2 - node.count
                    node.pivots = left.pivots[-take:] + node.pivots
                    node.children = left.children[-take:] + node.children
                    del left.pivots[-take:]
                    del left.children[-take:]
                    _write_inner(self.store, lbid, left)
                    _write_inner(self.store, bid, node)
                    parent.pivots[i - 1] = left.pivots[-1]
                    _write_inner(self.store, pbid, parent)
                    return
            else:
                rbid = parent.children[i + 1]
                right = _read_inner(self.store, rbid)
                if node.count + right.count <= self._fanout:
                    node.pivots += right.pivots
                    node.children += right.children
                    _write_inner(self.store, bid, node)
                    self.store.free(rbid)
                    parent.pivots[i] = parent.pivots[i + 1]
                    del parent.pivots[i + 1]
                    del parent.children[i + 1]
                    bid, node = pbid, parent
                    merged = True
                else:
                    take = (node.count + right.count) // 2 - node.count
                    node.pivots += right.pivots[:take]
                    node.children += right.children[:take]
                    del right.pivots[:take]
                    del right.children[:take]
                    _write_inner(self.store, bid, node)
                    _write_inner(self.store, rbid, right)
                    parent.pivots[i] = node.pivots[-1]
                    _write_inner(self.store, pbid, parent)
                    return
            if not merged:
                break
        _write_inner(self.store, bid, node)

    def update(self, key: int, payload: int) -> bool:
        _, bid = self._descend(key)
        leaf = read_leaf(self.store, bid)
        pos, found = leaf_search(leaf, key)
        if not found:
            return False
        leaf.vals[pos] = payload
        write_leaf(self.store, bid, leaf)
        return True

    def inspect(self) -> dict:
        counts = {"leaf_count": 0, "inner_count": 0}
        level_nodes = [self.root]
        for _ in range(self.height - 1):
            nxt = []
            for bid in level_nodes:
                node = _read_inner(self.store, bid)
                counts["inner_count"] += 1
                nxt.extend(node.children)
            level_nodes = nxt
        counts["leaf_count"] = len(level_nodes)
        counts["height"] = self.height
        counts["file_size"] = self.store.file_size
        counts["kind"] = "btree"
        return counts
