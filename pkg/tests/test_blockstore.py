import os
import random

import pytest

from aulid.blockstore import BlockStore, BlockStoreError, probe


def test_create_starts_allocation_at_one(store):
    assert store.allocate() == 1
    assert store.allocate() == 2


def test_block_size_mismatch_on_reopen(tmp_path):
    path = str(tmp_path / "a.idx")
    BlockStore.open(path, 4096, create=True).close()
    with pytest.raises(BlockStoreError, match="mismatch"):
        BlockStore.open(path, 8192)


def test_open_missing_file(tmp_path):
    with pytest.raises(BlockStoreError, match="no such"):
        BlockStore.open(str(tmp_path / "nope.idx"), 4096)


def test_bad_block_size_rejected(tmp_path):
    with pytest.raises(BlockStoreError):
        BlockStore.open(str(tmp_path / "b.idx"), 1000, create=True)
    with pytest.raises(BlockStoreError):
        BlockStore.open(str(tmp_path / "c.idx"), 256, create=True)


def test_free_list_reuse_smallest(store):
    a = store.allocate()
    b = store.allocate()
    store.allocate()
    store.free(b)
    store.free(a)
    assert store.allocate() == a
    assert store.allocate() == b


def test_double_free_and_unallocated_free(store):
    a = store.allocate()
    store.free(a)
    with pytest.raises(BlockStoreError, match="double free"):
        store.free(a)
    with pytest.raises(BlockStoreError, match="never-allocated"):
        store.free(7)
    with pytest.raises(BlockStoreError):
        store.free(0)


def test_watermark_after_thousand_allocations(store):
    for _ in range(1000):
        store.allocate()
    assert store.watermark == 1001


def test_read_write_round_trip_and_counters(store):
    bid = store.allocate()
    data = bytes(range(256)) * 16
    store.write(bid, data)
    assert store.read(bid) == data
    assert store.counters().reads == 1
    assert store.counters().writes == 1
    store.read(bid)
    assert store.counters().reads == 2  # repeat reads are not cached away
    store.reset_counters()
    c = store.counters()
    assert (c.reads, c.writes) == (0, 0)


def test_counter_exactness_random_ops(store):
    rng = random.Random(7)
    live = [store.allocate() for _ in range(20)]
    reads = writes = 0
    for _ in range(500):
        bid = rng.choice(live)
        if rng.random() < 0.5:
            store.write(bid, bytes([rng.randrange(256)]) * 4096)
            writes += 1
        else:
            store.read(bid)
            reads += 1
    c = store.counters()
    assert (c.reads, c.writes) == (reads, writes)


def test_write_wrong_length(store):
    bid = store.allocate()
    with pytest.raises(BlockStoreError, match="block_size"):
        store.write(bid, b"short")


def test_read_unallocated(store):
    with pytest.raises(BlockStoreError, match="unallocated"):
        store.read(5)
    bid = store.allocate()
    store.free(bid)
    with pytest.raises(BlockStoreError, match="unallocated"):
        store.read(bid)


def test_durability_across_reopen(tmp_path):
    path = str(tmp_path / "d.idx")
    s = BlockStore.open(path, 4096, create=True)
    bid = s.allocate()
    payload = b"\xab" * 4096
    s.write(bid, payload)
    s.set_app_area(b"meta!")
    s.close()
    s2 = BlockStore.open(path, 4096)
    assert s2.read(bid) == payload
    assert s2.app_area()[:5] == b"meta!"
    assert s2.counters().reads == 1
    s2.close()


def test_free_list_persists_across_reopen(tmp_path):
    path = str(tmp_path / "f.idx")
    s = BlockStore.open(path, 4096, create=True)
    ids = [s.allocate() for _ in range(50)]
    freed = sorted(random.Random(3).sample(ids, 20))
    for bid in freed:
        s.free(bid)
    s.close()
    s2 = BlockStore.open(path, 4096)
    assert s2.free_ids() == freed
    assert s2.allocate() == freed[0]
    s2.close()


def test_free_list_spills_into_chain_blocks(tmp_path):
    path = str(tmp_path / "spill.idx")
    s = BlockStore.open(path, 4096, create=True)
    n = 2000  # far beyond the inline header capacity
    ids = [s.allocate() for _ in range(n)]
    for bid in ids:
        s.free(bid)
    s.close()
    s2 = BlockStore.open(path, 4096)
    assert s2.free_ids() == ids
    s2.close()


def test_allocation_and_free_list_stay_disjoint(store):
    rng = random.Random(11)
    live = set()
    for _ in range(400):
        if live and rng.random() < 0.4:
            bid = rng.choice(sorted(live))
            store.free(bid)
            live.discard(bid)
        else:
            bid = store.allocate()
            assert bid not in live
            live.add(bid)
        assert live.isdisjoint(store.free_ids())


def test_allocate_run_is_contiguous(store):
    first = store.allocate_run(5)
    assert first == 1
    later = store.allocate_run(3)
    assert later == 6
    # a contiguous hole in the free list is reused
    for bid in (2, 3, 4):
        store.free(bid)
    assert store.allocate_run(3) == 2
    # but a fragmented hole is not
    store.free(7)
    assert store.allocate_run(2) == store.watermark - 2


def test_truncated_file_rejected(tmp_path):
    path = str(tmp_path / "trunc.idx")
    s = BlockStore.open(path, 4096, create=True)
    s.allocate()
    s.close()
    with open(path, "ab") as f:
        f.write(b"\x00" * 100)  # trailing partial block
    with pytest.raises(BlockStoreError, match="whole number"):
        BlockStore.open(path, 4096)


def test_probe(tmp_path):
    path = str(tmp_path / "p.idx")
    s = BlockStore.open(path, 8192, create=True)
    s.index_kind = 2
    s.close()
    assert probe(path) == (8192, 2)
