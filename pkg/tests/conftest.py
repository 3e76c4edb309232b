import numpy as np
import pytest

from aulid.blockstore import BlockStore


@pytest.fixture
def store(tmp_path):
    s = BlockStore.open(str(tmp_path / "t.idx"), 4096, create=True)
    yield s
    if not s._f.closed:
        s.close()


def make_store(tmp_path, name="x.idx", block_size=4096):
    return BlockStore.open(str(tmp_path / name), block_size, create=True)


def sorted_unique(rng, n, hi=1 << 50):
    keys = rng.integers(1, hi, size=n * 2, dtype=np.uint64)
    keys = np.unique(keys)[:n]
    while keys.size < n:
        extra = rng.integers(1, hi, size=n, dtype=np.uint64)
        keys = np.unique(np.concatenate([keys, extra]))[:n]
    return keys
