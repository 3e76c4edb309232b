"""The on-disk learned index: model-routed inner nodes over B+-tree leaves.

A small in-memory metanode holds the root node's address and model plus the
last leaf's address and key range, so appends and tail lookups cost a single
block.  Everything else descends the inner tree one block per level (child
models live in parent slots), lands on a key-block entry, and finishes with
a binary search in one leaf.

Writes follow the single insertion algorithm: non-full leaves absorb the
pair locally; a full leaf splits, keeping the larger half in place so its
registered key never changes, and the new left leaf's (max key, block) entry
is pushed into the first non-mixed slot on its prediction path, escalating
DATA -> packed array -> two-layer node -> child mixed node as conflicts
accumulate.  Per-node statistics gate subtree rebuilds that bound the tree
height under skew.

Two read optimizations are built in: a same-block forward scan that rescues
stale-entry hits without extra I/O, and an optional bulkload pass that fills
empty slots with copies of their in-order successor entry so mispredicted
reads never have to walk to the next occupied slot.
"""

from __future__ import annotations

import struct
import time
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .blockstore import BlockStore, INDEX_KIND_AULID
from .model import LinearModel
from .leaf import (
    LeafNode, leaf_capacity, leaf_search, leaf_insert, leaf_delete,
    leaf_split, read_leaf, write_leaf, pack_leaf_block,
)
from .inner import (
    TAG_NULL, TAG_DATA, TAG_DATA_COPY, TAG_NODE_MIXED, TAG_NODE_PACKED,
    TAG_NODE_BTREE, KEY_SENTINEL, MIXED_HEADER_SIZE, SLOT_SIZE,
    InnerSlot, NodeStats, SmoCounters, SubtreeReport,
    encode_slot, decode_slot, fetch_slot, write_slot, slot_location,
    mixed_create, mixed_node_blocks, collect_subtree, free_subtree,
    read_node_stats, write_node_stats,
    read_packed, write_packed, packed_insert, packed_remove, make_packed,
    btree2_search, btree2_insert, btree2_update_block, btree2_remove,
    btree2_items, structure_search, structure_min,
)

# last_min > last_max marks an empty last leaf
EMPTY_MIN, EMPTY_MAX = 1, 0

META_STRUCT = struct.Struct("<QQQQddIdddB7x6Q")

FLAG_SCANFWARD = 1
FLAG_FULFILL = 2
FLAG_LIPPB = 4


class AulidError(Exception):
    pass


@dataclass
class Config:
    """Index tuning knobs; the defaults are the shipped operating point.

    ``alpha`` and ``beta`` gate subtree rebuilds (rebuild when a node has
    grown by beta and holds alpha deep entries); ``beta = inf`` disables
    adjustment.  ``lippb_mode`` turns every slot conflict into a nested
    model node, disabling packed arrays and two-layer nodes (the ablation
    layout).  ``leaf_fill`` is the bulkload leaf occupancy.
    """

    alpha: float = 0.05
    beta: float = 1.2
    scanfward: bool = True
    fulfill: bool = False
    lippb_mode: bool = False
    leaf_fill: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise AulidError("alpha must be in (0, 1]")
        if self.beta < 1.0:
            raise AulidError("beta must be >= 1")
        if not 0.0 < self.leaf_fill <= 1.0:
            raise AulidError("leaf_fill must be in (0, 1]")

    def flags(self) -> int:
        return ((FLAG_SCANFWARD if self.scanfward else 0)
                | (FLAG_FULFILL if self.fulfill else 0)
                | (FLAG_LIPPB if self.lippb_mode else 0))


@dataclass
class OptCounters:
    """Read-path instrumentation for the optimization ablations."""

    null_scans: int = 0
    null_scan_cross_block: int = 0
    scanfward_rescues: int = 0
    predecessor_fallbacks: int = 0

    def reset(self) -> None:
        self.null_scans = 0
        self.null_scan_cross_block = 0
        self.scanfward_rescues = 0
        self.predecessor_fallbacks = 0


class PhaseTimer:
    """Accumulates nanoseconds per named operation phase."""

    def __init__(self):
        self.ns: dict[str, int] = {}

    def add(self, phase: str, dt: int) -> None:
        self.ns[phase] = self.ns.get(phase, 0) + dt


@dataclass
class _Frame:
    root: int
    num_slots: int
    j: int
    cached: tuple | None


class AulidIndex:
    def __init__(self, store: BlockStore, config: Config | None = None):
        self.store = store
        self.config = config or Config()
        self.root = 0
        self.root_model: LinearModel | None = None
        self.last_leaf = 0
        self.last_min = EMPTY_MIN
        self.last_max = EMPTY_MAX
        self.smo = SmoCounters()
        self.opt = OptCounters()
        self.profiler: PhaseTimer | None = None
        self.on_split = None
        self.on_rebuild = None
        self._stats: dict[int, NodeStats] = {}
        self._cap = leaf_capacity(store.block_size)

    # -- construction --------------------------------------------------------

    @classmethod
    def bulkload(cls, store: BlockStore, keys, payloads, config: Config | None = None) -> "AulidIndex":
        """Build leaves left to right, then the inner tree over their max keys."""
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        payloads = np.ascontiguousarray(payloads, dtype=np.uint64)
        if keys.shape != payloads.shape:
            raise AulidError("keys and payloads must have equal length")
        if keys.size > 1 and np.any(keys[1:] < keys[:-1]):
            raise AulidError("bulkload input must be sorted by key")
        idx = cls(store, config)
        store.index_kind = INDEX_KIND_AULID
        n = int(keys.size)
        if n == 0:
            bid = store.allocate()
            write_leaf(store, bid, LeafNode())
            idx.last_leaf = bid
            idx.flush()
            return idx
        per = max(1, int(idx.config.leaf_fill * idx._cap))
        nleaves = -(-n // per)
        first = store.allocate_run(nleaves)
        for i in range(nleaves):
            lo, hi = i * per, min((i + 1) * per, n)
            prev = first + i - 1 if i else 0
            nxt = first + i + 1 if i < nleaves - 1 else 0
            store.write(first + i, pack_leaf_block(keys[lo:hi], payloads[lo:hi], prev, nxt, store.block_size))
        idx.last_leaf = first + nleaves - 1
        idx.last_min = int(keys[(nleaves - 1) * per])
        idx.last_max = int(keys[-1])
        if nleaves > 1:
            entries = []
            prev_key = None
            for i in range(nleaves - 1):
                km = int(keys[(i + 1) * per - 1])
                if km != prev_key:
                    # duplicate run spanning leaves: keep the first leaf only
                    entries.append((km, first + i))
                    prev_key = km
            created = mixed_create(store, entries, lippb=idx.config.lippb_mode, registry=idx._stats)
            idx.root, idx.root_model = created.root, created.model
            if idx.config.fulfill:
                idx._fulfill_subtree(idx.root, created.model.num_slots, None)
        idx.flush()
        return idx

    @classmethod
    def open(cls, store: BlockStore) -> "AulidIndex":
        idx = cls(store)
        idx._load_meta(store.app_area())
        idx._load_stats()
        store.reset_counters()
        return idx

    # -- metanode persistence --------------------------------------------------

    def flush(self) -> None:
        m = self.root_model or LinearModel(1.0, 0.0, 0)
        c = self.config
        s = self.smo
        self.store.set_app_area(META_STRUCT.pack(
            self.root, self.last_leaf, self.last_min, self.last_max,
            m.slope, m.intercept, m.num_slots,
            c.alpha, c.beta, c.leaf_fill, c.flags(),
            s.leaf_splits, s.leaf_merges, s.leaf_borrows,
            s.escalations, s.mixed_creates, s.rebuilds,
        ))
        self.store.flush()

    def close(self) -> None:
        self.flush()
        self.store.close()

    def _load_meta(self, area: bytes) -> None:
        (self.root, self.last_leaf, self.last_min, self.last_max,
         slope, intercept, num_slots, alpha, beta, leaf_fill, flags,
         splits, merges, borrows, escal, mixed, rebuilds) = META_STRUCT.unpack_from(area, 0)
        self.root_model = LinearModel(slope, intercept, num_slots) if self.root else None
        self.config = Config(
            alpha=alpha, beta=beta,
            scanfward=bool(flags & FLAG_SCANFWARD),
            fulfill=bool(flags & FLAG_FULFILL),
            lippb_mode=bool(flags & FLAG_LIPPB),
            leaf_fill=leaf_fill,
        )
        self.smo = SmoCounters(splits, merges, borrows, escal, mixed, rebuilds)

    def _load_stats(self) -> None:
        if not self.root:
            return
        stack = [(self.root, self.root_model.num_slots)]
        bs = self.store.block_size
        while stack:
            root, num_slots = stack.pop()
            self._stats[root] = read_node_stats(self.store, root)
            nblocks = mixed_node_blocks(num_slots, bs)
            data = b"".join(self.store.read(root + i) for i in range(nblocks))
            for j in range(num_slots):
                slot = decode_slot(data, MIXED_HEADER_SIZE + j * SLOT_SIZE)
                if slot.tag == TAG_NODE_MIXED:
                    stack.append((slot.block, slot.model.num_slots))

    # -- descent and successor search ------------------------------------------

    def _descend(self, key: int) -> tuple[list[_Frame], InnerSlot]:
        """Follow predictions down to the first slot that is not a mixed node."""
        frames: list[_Frame] = []
        root, model = self.root, self.root_model
        while True:
            j = model.predict(key)
            slot, cached = fetch_slot(self.store, root, j)
            frames.append(_Frame(root, model.num_slots, j, cached))
            if slot.tag != TAG_NODE_MIXED:
                return frames, slot
            root, model = slot.block, slot.model

    def _scan_forward(self, frames: list[_Frame], use_copies: bool):
        """Next entry in slot order after frames[-1].j, descending into children.

        Returns (frames, slot, pair) locating the entry's container, or None
        when the rest of the tree is empty.  Copy slots short-circuit the
        scan for reads but are skipped when locating an entry's real home.
        """
        stack = [(f.root, f.num_slots, f.j, f.cached) for f in frames]
        while stack:
            root, num_slots, j, cached = stack.pop()
            j += 1
            while j < num_slots:
                slot, cached = fetch_slot(self.store, root, j, cached)
                tag = slot.tag
                if tag == TAG_NULL:
                    j += 1
                    continue
                if tag == TAG_DATA_COPY:
                    if slot.is_sentinel():
                        break  # rest of this node is empty
                    if use_copies:
                        stack.append((root, num_slots, j, cached))
                        return self._stack_frames(stack), slot, slot.pair()
                    j += 1
                    continue
                if tag == TAG_DATA:
                    stack.append((root, num_slots, j, cached))
                    return self._stack_frames(stack), slot, slot.pair()
                if tag in (TAG_NODE_PACKED, TAG_NODE_BTREE):
                    stack.append((root, num_slots, j, cached))
                    return self._stack_frames(stack), slot, structure_min(self.store, slot)
                # mixed child: scan it from the beginning
                stack.append((root, num_slots, j, cached))
                root, num_slots, j, cached = slot.block, slot.model.num_slots, 0, None
        return None

    @staticmethod
    def _stack_frames(stack) -> list[_Frame]:
        return [_Frame(*entry) for entry in stack]

    def _resolve(self, key: int, use_copies: bool):
        """Locate the successor entry (first with k_max >= key is the common
        case; a stale smaller entry can surface and is handled by callers).

        Returns (frames, slot, pair) or None when no entry qualifies.
        """
        frames, slot = self._descend(key)
        tag = slot.tag
        if tag == TAG_DATA:
            return frames, slot, slot.pair()
        if tag == TAG_DATA_COPY and use_copies and not slot.is_sentinel():
            return frames, slot, slot.pair()
        if tag in (TAG_NODE_PACKED, TAG_NODE_BTREE):
            pair = structure_search(self.store, slot, key)
            if pair is not None:
                return frames, slot, pair
        from_null = tag == TAG_NULL and use_copies
        if from_null:
            self.opt.null_scans += 1
            before = self.store.stats.reads
        found = self._scan_forward(frames, use_copies)
        if from_null and self.store.stats.reads > before:
            self.opt.null_scan_cross_block += 1
        return found

    def _same_block_rescue(self, frame: _Frame, key: int):
        """Forward scan restricted to the already-fetched block (stale hits).

        Returns ("found", pair), ("none", None) when a sentinel proves there
        is no successor, or ("fail", None) when the block runs out or a node
        reference intervenes.
        """
        bid, data = frame.cached
        j = frame.j + 1
        while j < frame.num_slots:
            blk, off = slot_location(frame.root, j, self.store.block_size)
            if blk != bid:
                return "fail", None
            slot = decode_slot(data, off)
            if slot.tag == TAG_NULL:
                j += 1
                continue
            if slot.tag == TAG_DATA_COPY:
                if slot.is_sentinel():
                    return "none", None
                return "found", slot.pair()
            if slot.tag == TAG_DATA:
                return "found", slot.pair()
            return "fail", None
        return "fail", None

    def _locate_leaf(self, key: int, for_insert: bool = False) -> tuple[int, LeafNode]:
        """The leaf where ``key`` resides (or belongs, for inserts)."""
        if self.root == 0:
            return self.last_leaf, read_leaf(self.store, self.last_leaf)
        if for_insert:
            if key >= self.last_min or self.last_min > self.last_max:
                return self.last_leaf, read_leaf(self.store, self.last_leaf)
        elif self.last_min <= key <= self.last_max:
            return self.last_leaf, read_leaf(self.store, self.last_leaf)
        found = self._resolve(key, use_copies=True)
        if found is None:
            return self.last_leaf, read_leaf(self.store, self.last_leaf)
        frames, slot, pair = found
        if pair[0] < key:
            # landed on the predecessor's entry
            if self.config.scanfward and slot.tag in (TAG_DATA, TAG_DATA_COPY):
                status, rescued = self._same_block_rescue(frames[-1], key)
                if status == "found":
                    self.opt.scanfward_rescues += 1
                    return rescued[1], read_leaf(self.store, rescued[1])
                if status == "none":
                    self.opt.scanfward_rescues += 1
                    return self.last_leaf, read_leaf(self.store, self.last_leaf)
            self.opt.predecessor_fallbacks += 1
            pred = read_leaf(self.store, pair[1])
            nxt = pred.next if pred.next else self.last_leaf
            return nxt, read_leaf(self.store, nxt)
        return pair[1], read_leaf(self.store, pair[1])

    # -- reads -----------------------------------------------------------------

    def lookup(self, key: int):
        """Payload of the first pair with this key, or None."""
        _, leaf = self._locate_leaf(key)
        pos, found = leaf_search(leaf, key)
        return leaf.vals[pos] if found else None

    def scan(self, lo: int, hi: int) -> list[tuple[int, int]]:
        """All pairs with lo <= key <= hi, in key order."""
        if lo > hi:
            return []
        _, leaf = self._locate_leaf(lo)
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
        """The first n pairs with key >= lo, in key order."""
        if n <= 0:
            return []
        _, leaf = self._locate_leaf(lo)
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

    # -- writes ------------------------------------------------------------------

    def insert(self, key: int, payload: int) -> None:
        prof = self.profiler
        t = time.perf_counter_ns() if prof else 0
        bid, leaf = self._locate_leaf(key, for_insert=True)
        if prof:
            now = time.perf_counter_ns()
            prof.add("search", now - t)
            t = now
        if leaf.count < self._cap:
            leaf_insert(leaf, key, payload, self._cap)
            write_leaf(self.store, bid, leaf)
            if bid == self.last_leaf:
                if leaf.count == 1:
                    self.last_min = self.last_max = key
                else:
                    self.last_min = min(self.last_min, key)
                    self.last_max = max(self.last_max, key)
            if prof:
                prof.add("leaf", time.perf_counter_ns() - t)
            return
        old_pairs = leaf.pairs() if self.on_split else None
        left_bid, kmax_left = leaf_split(self.store, bid, leaf, key, payload)
        self.smo.leaf_splits += 1
        if bid == self.last_leaf:
            self.last_min = leaf.keys[0]
            self.last_max = leaf.keys[-1]
        if prof:
            now = time.perf_counter_ns()
            prof.add("leaf", now - t)
        self._register_entry(kmax_left, left_bid, origin=bid)
        if self.on_split:
            self.on_split(bid, left_bid, kmax_left, old_pairs, (key, payload))

    def _register_entry(self, kmax: int, new_bid: int, origin: int | None) -> None:
        """Push a (k_max, block) pair into the inner tree.

        ``origin`` is the block whose split produced the pair: when an entry
        with the same key already exists, it is rewritten to the new block
        only if it pointed at the origin (the first occurrence moved left);
        otherwise an earlier leaf already owns the key and nothing changes.
        """
        prof = self.profiler
        if self.root == 0:
            created = mixed_create(self.store, [(kmax, new_bid)],
                                   lippb=self.config.lippb_mode, registry=self._stats)
            self.root, self.root_model = created.root, created.model
            self.smo.mixed_creates += 1
            return
        t = time.perf_counter_ns() if prof else 0
        frames, slot = self._descend(kmax)
        if prof:
            now = time.perf_counter_ns()
            prof.add("inner_search", now - t)
            t = now
        f = frames[-1]
        tag = slot.tag
        hist = None
        if tag in (TAG_NULL, TAG_DATA_COPY):
            if self.config.fulfill:
                self._clear_copies_before(f, include_self=False)
            f.cached = write_slot(self.store, f.root, f.j,
                                  InnerSlot(TAG_DATA, key=kmax, block=new_bid), f.cached)
            if prof:
                prof.add("inner_insert", time.perf_counter_ns() - t)
        elif tag == TAG_DATA:
            if slot.key == kmax:
                if origin is not None and slot.block == origin:
                    write_slot(self.store, f.root, f.j,
                               InnerSlot(TAG_DATA, key=kmax, block=new_bid), f.cached)
                return
            if self.config.fulfill:
                self._clear_copies_before(f, include_self=False)
            if self.config.lippb_mode:
                created = mixed_create(self.store, sorted([slot.pair(), (kmax, new_bid)]),
                                       lippb=True, registry=self._stats)
                self.smo.mixed_creates += 1
                write_slot(self.store, f.root, f.j,
                           InnerSlot(TAG_NODE_MIXED, block=created.root, model=created.model),
                           f.cached)
                hist = created.depth_hist
            else:
                newslot = make_packed(self.store, [slot.pair(), (kmax, new_bid)])
                self.smo.escalations += 1
                write_slot(self.store, f.root, f.j, newslot, f.cached)
            if prof:
                prof.add("inner_create", time.perf_counter_ns() - t)
        elif tag == TAG_NODE_PACKED:
            klass, pairs = read_packed(self.store, slot.block)
            keys = [p[0] for p in pairs]
            pos = bisect_left(keys, kmax)
            if pos < len(keys) and keys[pos] == kmax:
                if origin is not None and pairs[pos][1] == origin:
                    pairs[pos] = (kmax, new_bid)
                    write_packed(self.store, slot.block, klass, pairs)
                return
            if self.config.fulfill:
                self._clear_copies_before(f, include_self=False)
            newslot = packed_insert(self.store, slot, (kmax, new_bid),
                                    smo=self.smo, preloaded=(klass, pairs))
            if newslot is not slot:
                write_slot(self.store, f.root, f.j, newslot, f.cached)
            if prof:
                prof.add("inner_insert", time.perf_counter_ns() - t)
        elif tag == TAG_NODE_BTREE:
            hit = btree2_search(self.store, slot.block, kmax)
            if hit is not None and hit[0] == kmax:
                if origin is not None and hit[1] == origin:
                    btree2_update_block(self.store, slot.block, kmax, new_bid)
                return
            if self.config.fulfill:
                self._clear_copies_before(f, include_self=False)
            if btree2_insert(self.store, slot.block, (kmax, new_bid)):
                if prof:
                    prof.add("inner_insert", time.perf_counter_ns() - t)
            else:
                items, blocks = btree2_items(self.store, slot.block)
                items.append((kmax, new_bid))
                created = mixed_create(self.store, sorted(items),
                                       lippb=self.config.lippb_mode, registry=self._stats)
                self.smo.mixed_creates += 1
                for b in blocks:
                    self.store.free(b)
                write_slot(self.store, f.root, f.j,
                           InnerSlot(TAG_NODE_MIXED, block=created.root, model=created.model),
                           f.cached)
                hist = created.depth_hist
                if prof:
                    prof.add("inner_create", time.perf_counter_ns() - t)
        else:
            raise AulidError(f"entry registration hit slot tag {tag}")
        if prof:
            t = time.perf_counter_ns()
        self._stats_update(frames, +1, hist)
        if prof:
            now = time.perf_counter_ns()
            prof.add("inner_stats", now - t)
            t = now
        self._adjust(frames)
        if prof:
            prof.add("inner_adjust", time.perf_counter_ns() - t)

    def _stats_update(self, frames: list[_Frame], delta: int, hist: list[int] | None = None) -> None:
        """Bump size on the access path and deep-entry counts where the change
        sits three or more model levels below the node."""
        depth_total = len(frames)
        total = sum(hist) if hist else 0
        for i, fr in enumerate(frames):
            st = self._stats[fr.root]
            d = depth_total - i
            st.size += delta
            if hist:
                gained = sum(c for t, c in enumerate(hist, 1) if d + t >= 3)
                lost = (total - 1) if d >= 3 else 0
                st.l3_item += gained - lost
            elif d >= 3:
                st.l3_item += delta
            write_node_stats(self.store, fr.root, st)
            fr.cached = None  # the header write may share the slot block

    # -- adjustment ---------------------------------------------------------------

    def _adjust(self, frames: list[_Frame]) -> None:
        alpha, beta = self.config.alpha, self.config.beta
        for i in range(len(frames) - 1, -1, -1):
            st = self._stats.get(frames[i].root)
            if st is None:
                continue
            if st.size >= beta * st.init_size and st.l3_item >= alpha * st.size:
                self._rebuild_at(frames, i)

    def _rebuild_at(self, frames: list[_Frame], i: int) -> None:
        fr = frames[i]
        report = collect_subtree(self.store, fr.root, fr.num_slots)
        old_hist = report.depth_hist
        created = mixed_create(self.store, report.items,
                               lippb=self.config.lippb_mode, registry=self._stats)
        self.smo.rebuilds += 1
        if self.config.fulfill:
            self._fulfill_subtree(created.root, created.model.num_slots, None)
        if i == 0:
            self.root, self.root_model = created.root, created.model
        else:
            parent = frames[i - 1]
            parent.cached = write_slot(
                self.store, parent.root, parent.j,
                InnerSlot(TAG_NODE_MIXED, block=created.root, model=created.model), None)
        for r in report.mixed_roots:
            self._stats.pop(r, None)
        free_subtree(self.store, report)
        new_hist = created.depth_hist
        width = max(len(old_hist), len(new_hist))
        for a in range(i):
            d = i - a + 1
            delta = 0
            for t in range(1, width + 1):
                if d + t - 1 >= 3:
                    o = old_hist[t - 1] if t - 1 < len(old_hist) else 0
                    nw = new_hist[t - 1] if t - 1 < len(new_hist) else 0
                    delta += nw - o
            if delta:
                st = self._stats[frames[a].root]
                st.l3_item += delta
                write_node_stats(self.store, frames[a].root, st)
                frames[a].cached = None
        frames[i] = _Frame(created.root, created.model.num_slots, fr.j, None)
        if self.on_rebuild:
            self.on_rebuild(report, created.root, created.model)

    # -- deletes and updates ---------------------------------------------------------

    def delete(self, key: int) -> bool:
        """Remove the first pair with this key; False when absent."""
        bid, leaf = self._locate_leaf(key)
        removed, underflow = leaf_delete(leaf, key, self._cap)
        if not removed:
            return False
        if not underflow:
            write_leaf(self.store, bid, leaf)
            if bid == self.last_leaf:
                self.last_min, self.last_max = leaf.keys[0], leaf.keys[-1]
            return True
        self._resolve_underflow(bid, leaf, key)
        return True

    def _resolve_underflow(self, bid: int, leaf: LeafNode, deleted_key: int) -> None:
        cap = self._cap
        store = self.store
        if bid == self.last_leaf:
            if not leaf.prev:
                # a lone leaf may hold any count, including zero
                write_leaf(store, bid, leaf)
                if leaf.count:
                    self.last_min, self.last_max = leaf.keys[0], leaf.keys[-1]
                else:
                    self.last_min, self.last_max = EMPTY_MIN, EMPTY_MAX
                return
            left_bid = leaf.prev
            left = read_leaf(store, left_bid)
            if left.count + leaf.count <= cap:
                # absorb the tail leaf into its left sibling, which becomes last
                probe = left.max_key()
                left.keys += leaf.keys
                left.vals += leaf.vals
                left.next = 0
                write_leaf(store, left_bid, left)
                store.free(bid)
                self.smo.leaf_merges += 1
                self.last_leaf = left_bid
                self.last_min, self.last_max = left.keys[0], left.keys[-1]
                self._remove_entry(probe, left_bid)
                self._maybe_drop_empty_root()
            else:
                take = (left.count + leaf.count) // 2 - leaf.count
                probe = left.max_key()
                leaf.keys = left.keys[-take:] + leaf.keys
                leaf.vals = left.vals[-take:] + leaf.vals
                del left.keys[-take:]
                del left.vals[-take:]
                write_leaf(store, left_bid, left)
                write_leaf(store, bid, leaf)
                self.smo.leaf_borrows += 1
                self.last_min, self.last_max = leaf.keys[0], leaf.keys[-1]
                # the boundary between the two moved down: re-key the donor
                self._remove_entry(probe, left_bid)
                self._register_entry(left.max_key(), left_bid, origin=None)
            return
        right_bid = leaf.next
        right = read_leaf(store, right_bid)
        if leaf.count + right.count <= cap:
            # merge right: the absorbing sibling's entry still bounds everything
            right.keys = leaf.keys + right.keys
            right.vals = leaf.vals + right.vals
            right.prev = leaf.prev
            if leaf.prev:
                before = read_leaf(store, leaf.prev)
                before.next = right_bid
                write_leaf(store, leaf.prev, before)
            write_leaf(store, right_bid, right)
            store.free(bid)
            self.smo.leaf_merges += 1
            if right_bid == self.last_leaf:
                self.last_min = right.keys[0]
            self._remove_entry(deleted_key, bid)
            self._maybe_drop_empty_root()
        else:
            take = (leaf.count + right.count) // 2 - leaf.count
            leaf.keys += right.keys[:take]
            leaf.vals += right.vals[:take]
            del right.keys[:take]
            del right.vals[:take]
            write_leaf(store, bid, leaf)
            write_leaf(store, right_bid, right)
            self.smo.leaf_borrows += 1
            if right_bid == self.last_leaf:
                self.last_min = right.keys[0]
            # our upper boundary grew: re-key our entry
            self._remove_entry(deleted_key, bid)
            self._register_entry(leaf.max_key(), bid, origin=None)

    def _maybe_drop_empty_root(self) -> None:
        if self.root and self._stats[self.root].size == 0:
            report = collect_subtree(self.store, self.root, self.root_model.num_slots)
            for r in report.mixed_roots:
                self._stats.pop(r, None)
            free_subtree(self.store, report)
            self.root, self.root_model = 0, None

    def _remove_entry(self, probe: int, expect_bid: int) -> bool:
        """Purge the inner entry for a merged-away or re-keyed leaf.

        ``probe`` is any key the leaf covered; the successor entry is the
        leaf's entry if it has one.  Leaves inside a duplicate run carry no
        entry, in which case nothing changes.
        """
        found = self._resolve(probe, use_copies=False)
        if found is None:
            return False
        frames, slot, pair = found
        if pair[1] != expect_bid:
            return False
        f = frames[-1]
        if self.config.fulfill:
            self._clear_copies_before(f, include_self=False)
        if slot.tag == TAG_DATA:
            f.cached = write_slot(self.store, f.root, f.j, InnerSlot(TAG_NULL), f.cached)
        elif slot.tag == TAG_NODE_PACKED:
            res = packed_remove(self.store, slot, pair[0])
            if res == "missing":
                return False
            if isinstance(res, tuple):
                k, b = res[1]
                f.cached = write_slot(self.store, f.root, f.j,
                                      InnerSlot(TAG_DATA, key=k, block=b), f.cached)
        elif slot.tag == TAG_NODE_BTREE:
            res = btree2_remove(self.store, slot.block, pair[0])
            if res == "missing":
                return False
            if isinstance(res, tuple):
                k, b = res[1]
                f.cached = write_slot(self.store, f.root, f.j,
                                      InnerSlot(TAG_DATA, key=k, block=b), f.cached)
        else:
            return False
        self._stats_update(frames, -1)
        return True

    def update(self, key: int, payload: int) -> bool:
        """In-place payload rewrite of the first pair with this key."""
        bid, leaf = self._locate_leaf(key)
        pos, found = leaf_search(leaf, key)
        if not found:
            return False
        leaf.vals[pos] = payload
        write_leaf(self.store, bid, leaf)
        return True

    def update_key(self, old_key: int, new_key: int, payload: int) -> bool:
        if not self.delete(old_key):
            return False
        self.insert(new_key, payload)
        return True

    # -- copy maintenance (fulfill mode) ----------------------------------------------

    def _clear_copies_before(self, frame: _Frame, include_self: bool) -> None:
        """Reset stale successor copies in the slots before a mutation point.

        Any entry change at slot j invalidates the copies filling the empty
        slots immediately before it, since they name a successor that is no
        longer the next entry for keys predicted there.
        """
        store = self.store
        j = frame.j if include_self else frame.j - 1
        cached = frame.cached
        dirty: dict[int, bytearray] = {}
        while j >= 0:
            bid, off = slot_location(frame.root, j, store.block_size)
            if bid in dirty:
                data = dirty[bid]
            else:
                if cached is not None and cached[0] == bid:
                    data = bytearray(cached[1])
                else:
                    data = bytearray(store.read(bid))
                cached = None
            slot = decode_slot(bytes(data[off:off + SLOT_SIZE]), 0)
            if slot.tag != TAG_DATA_COPY:
                break
            data[off:off + SLOT_SIZE] = b"\x00" * SLOT_SIZE
            dirty[bid] = data
            j -= 1
        for bid, data in dirty.items():
            store.write(bid, bytes(data))
            if frame.cached is not None and frame.cached[0] == bid:
                frame.cached = (bid, bytes(data))

    def _fulfill_subtree(self, root: int, num_slots: int, carry) -> tuple[int, int] | None:
        """Fill empty slots with a copy of the next entry in key order.

        Walks slots right to left carrying the upcoming entry; slots past the
        last entry get a terminator copy that marks the node exhausted.
        Returns the subtree's first entry for the caller's own carry.
        """
        store = self.store
        bs = store.block_size
        nblocks = mixed_node_blocks(num_slots, bs)
        data = bytearray(b"".join(store.read(root + i) for i in range(nblocks)))
        first = None
        for j in range(num_slots - 1, -1, -1):
            off = MIXED_HEADER_SIZE + j * SLOT_SIZE
            slot = decode_slot(data, off)
            if slot.tag in (TAG_NULL, TAG_DATA_COPY):
                if carry is not None:
                    copy = InnerSlot(TAG_DATA_COPY, key=carry[0], block=carry[1])
                else:
                    copy = InnerSlot(TAG_DATA_COPY, key=KEY_SENTINEL, block=0)
                data[off:off + SLOT_SIZE] = encode_slot(copy)
            elif slot.tag == TAG_DATA:
                carry = slot.pair()
                first = carry
            elif slot.tag in (TAG_NODE_PACKED, TAG_NODE_BTREE):
                carry = structure_min(store, slot)
                first = carry
            elif slot.tag == TAG_NODE_MIXED:
                sub_first = self._fulfill_subtree(slot.block, slot.model.num_slots, carry)
                if sub_first is not None:
                    carry = sub_first
                    first = carry
        for i in range(nblocks):
            store.write(root + i, bytes(data[i * bs:(i + 1) * bs]))
        return first

    # -- structure report ---------------------------------------------------------------

    def inspect(self) -> dict:
        """Full-traversal structure report: node counts, entry depths, the
        block cost to reach each leaf, file size, and cumulative SMO counts."""
        report = SubtreeReport()
        if self.root:
            report = collect_subtree(self.store, self.root, self.root_model.num_slots)
        first = self.last_leaf
        if report.items:
            first = report.items[0][1]
            probe = read_leaf(self.store, first)
            while probe.prev:
                first = probe.prev
                probe = read_leaf(self.store, first)
        leaves = 0
        leaf_items = 0
        bid = first
        while bid:
            node = read_leaf(self.store, bid)
            leaves += 1
            leaf_items += node.count
            bid = node.next
        total = len(report.items)
        avg_depth = (sum((i + 1) * c for i, c in enumerate(report.depth_hist)) / total) if total else 0.0
        deep = sum(report.depth_hist[3:]) if len(report.depth_hist) > 3 else 0
        return {
            "kind": "aulid",
            "leaf_count": leaves,
            "leaf_items": leaf_items,
            "mixed_nodes": report.mixed_nodes if self.root else 0,
            "packed_nodes": report.packed_nodes,
            "btree_nodes": report.btree_nodes,
            "data_entries": total,
            "avg_data_depth": avg_depth,
            "max_data_depth": report.max_depth,
            "depth_hist": list(report.depth_hist),
            "deep_entry_fraction": (deep / total) if total else 0.0,
            "leaf_fetch_hist": {k + 1: v for k, v in sorted(report.fetch_hist.items())},
            "file_size": self.store.file_size,
            "smo": self.smo.as_dict(),
            "opt": {
                "null_scans": self.opt.null_scans,
                "null_scan_cross_block": self.opt.null_scan_cross_block,
                "scanfward_rescues": self.opt.scanfward_rescues,
                "predecessor_fallbacks": self.opt.predecessor_fallbacks,
            },
            "config": {
                "alpha": self.config.alpha,
                "beta": self.config.beta,
                "scanfward": self.config.scanfward,
                "fulfill": self.config.fulfill,
                "lippb_mode": self.config.lippb_mode,
                "leaf_fill": self.config.leaf_fill,
            },
        }

    def audit_stats(self) -> None:
        """Debug check: persisted per-node statistics match a fresh traversal."""
        if not self.root:
            return
        stack = [(self.root, self.root_model.num_slots)]
        while stack:
            root, num_slots = stack.pop()
            report = collect_subtree(self.store, root, num_slots)
            st = self._stats[root]
            if st.size != len(report.items):
                raise AulidError(f"node {root}: size {st.size} != {len(report.items)} items")
            deep = sum(report.depth_hist[2:]) if len(report.depth_hist) > 2 else 0
            if st.l3_item != deep:
                raise AulidError(f"node {root}: l3_item {st.l3_item} != {deep}")
            data = b"".join(self.store.read(root + i)
                            for i in range(mixed_node_blocks(num_slots, self.store.block_size)))
            for j in range(num_slots):
                slot = decode_slot(data, MIXED_HEADER_SIZE + j * SLOT_SIZE)
                if slot.tag == TAG_NODE_MIXED:
                    stack.append((slot.block, slot.model.num_slots))
