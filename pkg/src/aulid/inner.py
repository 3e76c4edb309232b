"""Inner-node structures: mixed nodes, packed arrays, two-layer B+-tree nodes.

A mixed node routes keys through a linear model into fixed-width slots. Each
slot is NULL, a DATA entry (largest key of a leaf + that leaf's block), or a
reference to a child structure.  Child models are embedded in the parent
slot, never in the child, so reaching any level costs exactly one block.

Slot encoding (32 bytes, little-endian):

    tag u8 | class u8 | pad u16 | num_slots u32 | w1 u64 | w2 u64 | w3 u64

    NULL         all zeros
    DATA         w1 = k_max, w2 = leaf block
    DATA_COPY    as DATA; a read-optimization duplicate of the next entry
    NODE_MIXED   num_slots + w1 = slope (f64), w2 = intercept (f64), w3 = child
    NODE_PACKED  class = size class, w3 = child block
    NODE_BTREE   w3 = child (root record) block

A mixed node occupies consecutively allocated blocks: a 32-byte header
(num_slots, size, init_size, l3_item) followed by the slot array.  Packed
arrays hold 8/16/32/64 sorted entries in one block.  A two-layer B+-tree
node has a root record of up to four (pivot, child) entries and children of
up to 255 entries each, 1020 total at 4 KB blocks.

Conflict buckets escalate DATA -> packed(8->16->32->64) -> two-layer B+-tree
-> child mixed node, and never skip a step.
"""

from __future__ import annotations

import struct
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .blockstore import BlockStore
from .model import LinearModel, build_model

TAG_NULL = 0
TAG_DATA = 1
TAG_DATA_COPY = 2
TAG_NODE_MIXED = 3
TAG_NODE_PACKED = 4
TAG_NODE_BTREE = 5

SLOT_SIZE = 32
MIXED_HEADER = struct.Struct("<IQQQ")
MIXED_HEADER_SIZE = 32
SLOT_INTS = struct.Struct("<BBHIQQQ")
SLOT_MIXED = struct.Struct("<BBHIddQ")

PACKED_HEADER = struct.Struct("<II8x")
PACKED_HEADER_SIZE = 16
BTREE2_COUNT = struct.Struct("<I12x")
BTREE2_RECORD_SIZE = 16
BTREE2_MAX_CHILDREN = 4

KEY_SENTINEL = 2**64 - 1


class InnerError(Exception):
    pass


def packed_capacity(klass: int) -> int:
    return 8 << (klass - 1)


def max_packed_class(block_size: int) -> int:
    k = 4
    while k > 1 and PACKED_HEADER_SIZE + packed_capacity(k) * 16 > block_size:
        k -= 1
    return k


def packed_class_for(count: int, block_size: int) -> int:
    for k in range(1, max_packed_class(block_size) + 1):
        if count <= packed_capacity(k):
            return k
    raise InnerError(f"{count} entries exceed the largest packed array")


def btree2_child_capacity(block_size: int) -> int:
    return (block_size - BTREE2_RECORD_SIZE) // 16


def btree2_max_items(block_size: int) -> int:
    return BTREE2_MAX_CHILDREN * btree2_child_capacity(block_size)


@dataclass
class InnerSlot:
    tag: int
    key: int = 0
    block: int = 0
    klass: int = 0
    model: LinearModel | None = None

    def is_sentinel(self) -> bool:
        return self.tag == TAG_DATA_COPY and self.block == 0

    def pair(self) -> tuple[int, int]:
        return self.key, self.block


NULL_SLOT_BYTES = b"\x00" * SLOT_SIZE


def encode_slot(slot: InnerSlot) -> bytes:
    if slot.tag == TAG_NULL:
        return NULL_SLOT_BYTES
    if slot.tag == TAG_NODE_MIXED:
        m = slot.model
        return SLOT_MIXED.pack(slot.tag, 0, 0, m.num_slots, m.slope, m.intercept, slot.block)
    if slot.tag in (TAG_DATA, TAG_DATA_COPY):
        return SLOT_INTS.pack(slot.tag, 0, 0, 0, slot.key, slot.block, 0)
    return SLOT_INTS.pack(slot.tag, slot.klass, 0, 0, 0, 0, slot.block)


def decode_slot(data: bytes, off: int) -> InnerSlot:
    tag = data[off]
    if tag == TAG_NULL:
        return InnerSlot(TAG_NULL)
    if tag == TAG_NODE_MIXED:
        _, _, _, num_slots, slope, intercept, child = SLOT_MIXED.unpack_from(data, off)
        return InnerSlot(TAG_NODE_MIXED, block=child, model=LinearModel(slope, intercept, num_slots))
    _, klass, _, _, w1, w2, w3 = SLOT_INTS.unpack_from(data, off)
    if tag in (TAG_DATA, TAG_DATA_COPY):
        return InnerSlot(tag, key=w1, block=w2)
    if tag in (TAG_NODE_PACKED, TAG_NODE_BTREE):
        return InnerSlot(tag, klass=klass, block=w3)
    raise InnerError(f"corrupt slot tag {tag}")


def mixed_node_blocks(num_slots: int, block_size: int) -> int:
    return -(-(MIXED_HEADER_SIZE + num_slots * SLOT_SIZE) // block_size)


def slot_location(root: int, j: int, block_size: int) -> tuple[int, int]:
    byte = MIXED_HEADER_SIZE + j * SLOT_SIZE
    return root + byte // block_size, byte % block_size


def fetch_slot(store: BlockStore, root: int, j: int,
               cached: tuple[int, bytes] | None = None) -> tuple[InnerSlot, tuple[int, bytes]]:
    """Decode slot ``j``, reading at most the one block that contains it.

    ``cached`` carries the most recently fetched (block id, bytes) so that
    forward scans within one block cost nothing extra.
    """
    bid, off = slot_location(root, j, store.block_size)
    if cached is None or cached[0] != bid:
        cached = (bid, store.read(bid))
    return decode_slot(cached[1], off), cached


def write_slot(store: BlockStore, root: int, j: int, slot: InnerSlot,
               cached: tuple[int, bytes] | None = None) -> tuple[int, bytes]:
    """Rewrite slot ``j`` in place (read-modify-write of its block)."""
    bid, off = slot_location(root, j, store.block_size)
    if cached is None or cached[0] != bid:
        cached = (bid, store.read(bid))
    buf = bytearray(cached[1])
    buf[off:off + SLOT_SIZE] = encode_slot(slot)
    data = bytes(buf)
    store.write(bid, data)
    return (bid, data)


# -- per-node statistics --------------------------------------------------

@dataclass
class NodeStats:
    num_slots: int
    size: int
    init_size: int
    l3_item: int


@dataclass
class SmoCounters:
    leaf_splits: int = 0
    leaf_merges: int = 0
    leaf_borrows: int = 0
    escalations: int = 0
    mixed_creates: int = 0
    rebuilds: int = 0

    def as_dict(self) -> dict:
        return {
            "leaf_splits": self.leaf_splits,
            "leaf_merges": self.leaf_merges,
            "leaf_borrows": self.leaf_borrows,
            "escalations": self.escalations,
            "mixed_creates": self.mixed_creates,
            "rebuilds": self.rebuilds,
        }


def read_node_stats(store: BlockStore, root: int) -> NodeStats:
    num_slots, size, init_size, l3 = MIXED_HEADER.unpack_from(store.read(root), 0)
    return NodeStats(num_slots, size, init_size, l3)


def write_node_stats(store: BlockStore, root: int, stats: NodeStats) -> None:
    buf = bytearray(store.read(root))
    MIXED_HEADER.pack_into(buf, 0, stats.num_slots, stats.size, stats.init_size, stats.l3_item)
    store.write(root, bytes(buf))


# -- packed arrays ---------------------------------------------------------

def read_packed(store: BlockStore, bid: int) -> tuple[int, list[tuple[int, int]]]:
    data = store.read(bid)
    count, klass = PACKED_HEADER.unpack_from(data, 0)
    flat = struct.unpack_from(f"<{2 * count}Q", data, PACKED_HEADER_SIZE)
    return klass, list(zip(flat[0::2], flat[1::2]))


def write_packed(store: BlockStore, bid: int, klass: int, pairs: list[tuple[int, int]]) -> None:
    if len(pairs) > packed_capacity(klass):
        raise InnerError("packed array overflow")
    buf = bytearray(store.block_size)
    PACKED_HEADER.pack_into(buf, 0, len(pairs), klass)
    flat = [x for pair in pairs for x in pair]
    struct.pack_into(f"<{len(flat)}Q", buf, PACKED_HEADER_SIZE, *flat)
    store.write(bid, bytes(buf))


def make_packed(store: BlockStore, pairs: list[tuple[int, int]]) -> InnerSlot:
    klass = packed_class_for(len(pairs), store.block_size)
    bid = store.allocate()
    write_packed(store, bid, klass, sorted(pairs))
    return InnerSlot(TAG_NODE_PACKED, klass=klass, block=bid)


def packed_insert(store: BlockStore, slot: InnerSlot, pair: tuple[int, int],
                  smo: SmoCounters | None = None,
                  preloaded: tuple[int, list] | None = None) -> InnerSlot:
    """Insert into a packed array, growing its class or escalating when full.

    Returns the (possibly retagged) slot content; the caller persists it in
    the parent.  Duplicate keys are a caller bug: the index layer resolves
    duplicates before structures ever see them.  ``preloaded`` reuses an
    already-read (class, pairs) snapshot of the array block.
    """
    klass, pairs = preloaded if preloaded is not None else read_packed(store, slot.block)
    keys = [p[0] for p in pairs]
    pos = bisect_left(keys, pair[0])
    if pos < len(keys) and keys[pos] == pair[0]:
        raise InnerError(f"duplicate key {pair[0]} in packed array")
    if len(pairs) < packed_capacity(klass):
        pairs.insert(pos, pair)
        write_packed(store, slot.block, klass, pairs)
        return slot
    pairs.insert(pos, pair)
    if klass < max_packed_class(store.block_size):
        new_bid = store.allocate()
        write_packed(store, new_bid, klass + 1, pairs)
        store.free(slot.block)
        if smo:
            smo.escalations += 1
        return InnerSlot(TAG_NODE_PACKED, klass=klass + 1, block=new_bid)
    root = build_btree2(store, pairs)
    store.free(slot.block)
    if smo:
        smo.escalations += 1
    return InnerSlot(TAG_NODE_BTREE, block=root)


def packed_remove(store: BlockStore, slot: InnerSlot, key: int):
    """Remove an exact key.  Returns "missing", "ok", or ("collapse", pair)."""
    klass, pairs = read_packed(store, slot.block)
    keys = [p[0] for p in pairs]
    pos = bisect_left(keys, key)
    if pos >= len(keys) or keys[pos] != key:
        return "missing"
    del pairs[pos]
    if len(pairs) == 1:
        store.free(slot.block)
        return ("collapse", pairs[0])
    write_packed(store, slot.block, klass, pairs)
    return "ok"


# -- two-layer B+-tree nodes ------------------------------------------------

def _read_btree2_root(store: BlockStore, root: int) -> list[tuple[int, int]]:
    data = store.read(root)
    (count,) = BTREE2_COUNT.unpack_from(data, 0)
    flat = struct.unpack_from(f"<{2 * count}Q", data, BTREE2_RECORD_SIZE)
    return list(zip(flat[0::2], flat[1::2]))


def _write_btree2_root(store: BlockStore, root: int, entries: list[tuple[int, int]]) -> None:
    buf = bytearray(store.block_size)
    BTREE2_COUNT.pack_into(buf, 0, len(entries))
    flat = [x for e in entries for x in e]
    struct.pack_into(f"<{len(flat)}Q", buf, BTREE2_RECORD_SIZE, *flat)
    store.write(root, bytes(buf))


def _read_btree2_child(store: BlockStore, bid: int) -> list[tuple[int, int]]:
    data = store.read(bid)
    (count,) = BTREE2_COUNT.unpack_from(data, 0)
    flat = struct.unpack_from(f"<{2 * count}Q", data, BTREE2_RECORD_SIZE)
    return list(zip(flat[0::2], flat[1::2]))


def _write_btree2_child(store: BlockStore, bid: int, pairs: list[tuple[int, int]]) -> None:
    buf = bytearray(store.block_size)
    BTREE2_COUNT.pack_into(buf, 0, len(pairs))
    flat = [x for p in pairs for x in p]
    struct.pack_into(f"<{len(flat)}Q", buf, BTREE2_RECORD_SIZE, *flat)
    store.write(bid, bytes(buf))


def build_btree2(store: BlockStore, pairs: list[tuple[int, int]]) -> int:
    """Build a two-layer node over sorted pairs, spread evenly across children."""
    pairs = sorted(pairs)
    n = len(pairs)
    cap = btree2_child_capacity(store.block_size)
    if n > BTREE2_MAX_CHILDREN * cap:
        raise InnerError(f"{n} entries exceed two-layer node capacity")
    k = min(BTREE2_MAX_CHILDREN, -(-n // cap))
    base, extra = divmod(n, k)
    entries = []
    at = 0
    for i in range(k):
        take = base + (1 if i < extra else 0)
        chunk = pairs[at:at + take]
        at += take
        bid = store.allocate()
        _write_btree2_child(store, bid, chunk)
        entries.append((chunk[-1][0], bid))
    root = store.allocate()
    _write_btree2_root(store, root, entries)
    return root


def btree2_count(store: BlockStore, root: int) -> int:
    entries = _read_btree2_root(store, root)
    return sum(BTREE2_COUNT.unpack_from(store.read(c), 0)[0] for _, c in entries)


def btree2_search(store: BlockStore, root: int, key: int) -> tuple[int, int] | None:
    """First contained pair with k_max >= key, or None when all are smaller."""
    entries = _read_btree2_root(store, root)
    pivots = [e[0] for e in entries]
    i = bisect_left(pivots, key)
    if i >= len(entries):
        return None
    pairs = _read_btree2_child(store, entries[i][1])
    keys = [p[0] for p in pairs]
    pos = bisect_left(keys, key)
    return pairs[pos]


def btree2_min(store: BlockStore, root: int) -> tuple[int, int]:
    entries = _read_btree2_root(store, root)
    return _read_btree2_child(store, entries[0][1])[0]


def btree2_insert(store: BlockStore, root: int, pair: tuple[int, int]) -> bool:
    """Standard two-level insert; False when a fifth child would be needed."""
    entries = _read_btree2_root(store, root)
    cap = btree2_child_capacity(store.block_size)
    pivots = [e[0] for e in entries]
    i = min(bisect_left(pivots, pair[0]), len(entries) - 1)
    pairs = _read_btree2_child(store, entries[i][1])
    if len(pairs) >= cap:
        if len(entries) >= BTREE2_MAX_CHILDREN:
            return False
        mid = len(pairs) // 2
        left, right = pairs[:mid], pairs[mid:]
        right_bid = store.allocate()
        _write_btree2_child(store, right_bid, right)
        entries[i] = (left[-1][0], entries[i][1])
        entries.insert(i + 1, (right[-1][0], right_bid))
        if pair[0] > left[-1][0]:
            i += 1
            pairs = right
        else:
            pairs = left
    keys = [p[0] for p in pairs]
    pos = bisect_left(keys, pair[0])
    if pos < len(keys) and keys[pos] == pair[0]:
        raise InnerError(f"duplicate key {pair[0]} in two-layer node")
    pairs.insert(pos, pair)
    _write_btree2_child(store, entries[i][1], pairs)
    if pairs[-1][0] != entries[i][0]:
        entries[i] = (pairs[-1][0], entries[i][1])
        _write_btree2_root(store, root, entries)
    elif len(entries) != len(pivots):
        _write_btree2_root(store, root, entries)
    return True


def btree2_items(store: BlockStore, root: int) -> tuple[list[tuple[int, int]], list[int]]:
    """All contained pairs in order, plus every block the node owns."""
    entries = _read_btree2_root(store, root)
    items: list[tuple[int, int]] = []
    blocks = [root]
    for _, child in entries:
        items.extend(_read_btree2_child(store, child))
        blocks.append(child)
    return items, blocks


def btree2_update_block(store: BlockStore, root: int, key: int, new_block: int) -> bool:
    """Rewrite the leaf address of an existing entry (duplicate-key policy)."""
    entries = _read_btree2_root(store, root)
    pivots = [e[0] for e in entries]
    i = bisect_left(pivots, key)
    if i >= len(entries):
        return False
    pairs = _read_btree2_child(store, entries[i][1])
    keys = [p[0] for p in pairs]
    pos = bisect_left(keys, key)
    if pos >= len(pairs) or pairs[pos][0] != key:
        return False
    pairs[pos] = (key, new_block)
    _write_btree2_child(store, entries[i][1], pairs)
    return True


def btree2_remove(store: BlockStore, root: int, key: int):
    """Remove an exact key.  Returns "missing", "ok", or ("collapse", pair)."""
    entries = _read_btree2_root(store, root)
    pivots = [e[0] for e in entries]
    i = bisect_left(pivots, key)
    if i >= len(entries):
        return "missing"
    pairs = _read_btree2_child(store, entries[i][1])
    keys = [p[0] for p in pairs]
    pos = bisect_left(keys, key)
    if pos >= len(pairs) or pairs[pos][0] != key:
        return "missing"
    del pairs[pos]
    if pairs:
        _write_btree2_child(store, entries[i][1], pairs)
        if pairs[-1][0] != entries[i][0]:
            entries[i] = (pairs[-1][0], entries[i][1])
            _write_btree2_root(store, root, entries)
    else:
        store.free(entries[i][1])
        del entries[i]
        _write_btree2_root(store, root, entries)
    total = btree2_count(store, root)
    if total == 1:
        last = btree2_min(store, root)
        for _, child in _read_btree2_root(store, root):
            store.free(child)
        store.free(root)
        return ("collapse", last)
    return "ok"


def structure_search(store: BlockStore, slot: InnerSlot, key: int) -> tuple[int, int] | None:
    """Successor search inside a packed array or two-layer node slot."""
    if slot.tag == TAG_NODE_PACKED:
        _, pairs = read_packed(store, slot.block)
        keys = [p[0] for p in pairs]
        pos = bisect_left(keys, key)
        return pairs[pos] if pos < len(pairs) else None
    if slot.tag == TAG_NODE_BTREE:
        return btree2_search(store, slot.block, key)
    raise InnerError(f"structure_search on slot tag {slot.tag}")


def structure_min(store: BlockStore, slot: InnerSlot) -> tuple[int, int]:
    if slot.tag == TAG_NODE_PACKED:
        _, pairs = read_packed(store, slot.block)
        return pairs[0]
    return btree2_min(store, slot.block)


# -- mixed node construction -------------------------------------------------

@dataclass
class CreatedNode:
    root: int
    model: LinearModel
    size: int
    depth_hist: list[int]  # depth_hist[t] = entries at mixed-depth t+1

    @property
    def l3_item(self) -> int:
        return sum(self.depth_hist[2:])


def mixed_create(store: BlockStore, entries: list[tuple[int, int]], *,
                 lippb: bool = False, forced_model: LinearModel | None = None,
                 registry: dict[int, NodeStats] | None = None) -> CreatedNode:
    """Build a mixed node over sorted distinct (k_max, block) entries.

    Conflict buckets become packed arrays, two-layer nodes, or recursive
    child mixed nodes by size; with ``lippb`` every bucket of two or more
    recurses (the inner layout used by the layered-model ablation mode).
    ``forced_model`` lets tests steer all entries into chosen slots.
    """
    n = len(entries)
    if n == 0:
        raise InnerError("mixed_create needs at least one entry")
    keys = np.array([e[0] for e in entries], dtype=np.uint64)
    model = forced_model or build_model(keys, max(64, 2 * n))
    num_slots = model.num_slots
    preds = model.predict_batch(keys)
    nblocks = mixed_node_blocks(num_slots, store.block_size)
    root = store.allocate_run(nblocks)
    if registry is not None and root in registry:
        del registry[root]

    buf = bytearray(nblocks * store.block_size)
    depth_hist = [0]
    bt_max = btree2_max_items(store.block_size)
    pk_max = packed_capacity(max_packed_class(store.block_size))

    bounds = np.flatnonzero(np.diff(preds)) + 1
    groups = np.split(np.arange(n), bounds)
    for grp in groups:
        j = int(preds[grp[0]])
        c = len(grp)
        bucket = entries[grp[0]:grp[-1] + 1]
        if c == 1:
            slot = InnerSlot(TAG_DATA, key=bucket[0][0], block=bucket[0][1])
        elif (lippb and c >= 2) or c > bt_max:
            if c == n:
                raise InnerError(
                    "conflict bucket equals the whole entry set; keys are "
                    "indistinguishable at double precision")
            child = mixed_create(store, bucket, lippb=lippb, registry=registry)
            slot = InnerSlot(TAG_NODE_MIXED, block=child.root, model=child.model)
            for t, cnt in enumerate(child.depth_hist):
                while len(depth_hist) <= t + 1:
                    depth_hist.append(0)
                depth_hist[t + 1] += cnt
        elif c <= pk_max:
            slot = make_packed(store, bucket)
        else:
            slot = InnerSlot(TAG_NODE_BTREE, block=build_btree2(store, bucket))
        if slot.tag in (TAG_DATA, TAG_NODE_PACKED, TAG_NODE_BTREE):
            depth_hist[0] += c
        off = MIXED_HEADER_SIZE + j * SLOT_SIZE
        buf[off:off + SLOT_SIZE] = encode_slot(slot)

    l3 = sum(depth_hist[2:])
    MIXED_HEADER.pack_into(buf, 0, num_slots, n, n, l3)
    bs = store.block_size
    for i in range(nblocks):
        store.write(root + i, bytes(buf[i * bs:(i + 1) * bs]))
    if registry is not None:
        registry[root] = NodeStats(num_slots, n, n, l3)
    return CreatedNode(root, model, n, depth_hist)


# -- subtree traversal -------------------------------------------------------

@dataclass
class SubtreeReport:
    items: list = field(default_factory=list)
    item_costs: list = field(default_factory=list)  # inner block reads per item
    blocks: list = field(default_factory=list)
    mixed_roots: list = field(default_factory=list)
    depth_hist: list = field(default_factory=list)
    fetch_hist: dict = field(default_factory=dict)
    mixed_nodes: int = 0
    packed_nodes: int = 0
    btree_nodes: int = 0
    max_depth: int = 0

    def bump_depth(self, depth: int, count: int) -> None:
        while len(self.depth_hist) < depth:
            self.depth_hist.append(0)
        self.depth_hist[depth - 1] += count
        self.max_depth = max(self.max_depth, depth)

    def bump_fetch(self, fetches: int, count: int) -> None:
        self.fetch_hist[fetches] = self.fetch_hist.get(fetches, 0) + count


def collect_subtree(store: BlockStore, root: int, num_slots: int,
                    depth: int = 1, report: SubtreeReport | None = None) -> SubtreeReport:
    """In-order walk of a mixed subtree: items, owned blocks, depth stats.

    Items skip DATA_COPY slots.  ``fetch_hist`` counts the inner block reads
    needed to reach each entry (one per mixed level, plus one for a packed
    array or two for a two-layer node).
    """
    if report is None:
        report = SubtreeReport()
    report.mixed_nodes += 1
    report.mixed_roots.append(root)
    nblocks = mixed_node_blocks(num_slots, store.block_size)
    report.blocks.extend(range(root, root + nblocks))
    bs = store.block_size
    data = b"".join(store.read(root + i) for i in range(nblocks))
    for j in range(num_slots):
        off = MIXED_HEADER_SIZE + j * SLOT_SIZE
        slot = decode_slot(data, off)
        if slot.tag == TAG_DATA:
            report.items.append(slot.pair())
            report.item_costs.append(depth)
            report.bump_depth(depth, 1)
            report.bump_fetch(depth, 1)
        elif slot.tag == TAG_NODE_PACKED:
            _, pairs = read_packed(store, slot.block)
            report.packed_nodes += 1
            report.blocks.append(slot.block)
            report.items.extend(pairs)
            report.item_costs.extend([depth + 1] * len(pairs))
            report.bump_depth(depth, len(pairs))
            report.bump_fetch(depth + 1, len(pairs))
        elif slot.tag == TAG_NODE_BTREE:
            entries = _read_btree2_root(store, slot.block)
            report.btree_nodes += 1
            report.blocks.append(slot.block)
            for _, child in entries:
                pairs = _read_btree2_child(store, child)
                report.blocks.append(child)
                report.items.extend(pairs)
                report.item_costs.extend([depth + 2] * len(pairs))
                report.bump_depth(depth, len(pairs))
                report.bump_fetch(depth + 2, len(pairs))
        elif slot.tag == TAG_NODE_MIXED:
            collect_subtree(store, slot.block, slot.model.num_slots, depth + 1, report)
    return report


def collect_items(store: BlockStore, root: int, num_slots: int) -> list[tuple[int, int]]:
    return collect_subtree(store, root, num_slots).items


def free_subtree(store: BlockStore, report: SubtreeReport) -> None:
    for bid in report.blocks:
        store.free(bid)
