"""Block-aligned file storage with exact I/O accounting.

Every structure in the index file lives in fixed-size blocks. Block 0 is the
header; it persists the store bookkeeping (watermark, free list) plus an
opaque application area used by the index layers for their metadata.

Header block layout (all integers little-endian):

    off   0  magic            8s   b"AULIDX01"
    off   8  format version   u32
    off  12  block_size       u32
    off  16  watermark        u64   next never-allocated block id
    off  24  free_head        u64   first free-chain block id, 0 = none
    off  32  free_inline      u32   number of free ids stored inline
    off  36  index_kind       u8    0 = unset, 1 = learned index, 2 = b+tree
    off  37  reserved         27x
    off  64  app area         256s  opaque metadata for the index layer
    off 320  inline free ids  u64 * free_inline

When the free list outgrows the inline region it spills into chain blocks
drawn from the free ids themselves.  A chain block holds:

    off  0  next chain block  u64   0 = end
    off  8  id count          u32
    off 12  reserved          4x
    off 16  free ids          u64 * count

Chain host blocks are themselves free; loading the chain recovers both the
hosts and the ids they list.  The chain is rewritten from scratch on every
flush, so stale chain contents are never trusted.

There is deliberately no block cache here: the read/write counters are the
measurement oracle for every benchmark, and a cache would falsify them.
"""

from __future__ import annotations

import heapq
import os
import struct
from dataclasses import dataclass

MAGIC = b"AULIDX01"
FORMAT_VERSION = 1
DEFAULT_BLOCK_SIZE = 4096

HEADER_FIXED = struct.Struct("<8sIIQQIB27x")
APP_AREA_OFF = 64
APP_AREA_SIZE = 256
INLINE_IDS_OFF = APP_AREA_OFF + APP_AREA_SIZE
CHAIN_HEADER = struct.Struct("<QI4x")

INDEX_KIND_NONE = 0
INDEX_KIND_AULID = 1
INDEX_KIND_BTREE = 2


class BlockStoreError(Exception):
    """Raised for allocation misuse, format mismatches, and I/O failures."""


def probe(path: str) -> tuple[int, int]:
    """Read (block_size, index_kind) from an index file's header."""
    with open(path, "rb") as f:
        head = f.read(HEADER_FIXED.size)
    if len(head) < HEADER_FIXED.size:
        raise BlockStoreError(f"{path} is too short to be an index file")
    magic, version, block_size, _, _, _, kind = HEADER_FIXED.unpack_from(head, 0)
    if magic != MAGIC:
        raise BlockStoreError(f"{path} is not an index file (bad magic)")
    if version != FORMAT_VERSION:
        raise BlockStoreError(f"unsupported format version {version}")
    return block_size, kind


@dataclass
class IoStats:
    """Counts of read()/write() calls since the last reset."""

    reads: int = 0
    writes: int = 0


class BlockStore:
    """A single file of fixed-size blocks with allocate/free and counters.

    One instance owns one file exclusively; all access is single-threaded.
    ``read`` and ``write`` each bump the matching counter by exactly one,
    including repeat reads of the same block.  Header maintenance (open,
    flush) bypasses the counters so they only ever reflect index work.
    """

    def __init__(self, path: str, block_size: int, create: bool):
        if block_size < 512 or block_size & (block_size - 1):
            raise BlockStoreError(f"block_size must be a power of two >= 512, got {block_size}")
        self.path = path
        self.block_size = block_size
        self.stats = IoStats()
        self.index_kind = INDEX_KIND_NONE
        self._app_area = b"\x00" * APP_AREA_SIZE
        self._free_heap: list[int] = []
        self._free_set: set[int] = set()

        if create:
            self._f = open(path, "w+b")
            self.watermark = 1
            self._write_raw(0, self._encode_header())
        else:
            if not os.path.exists(path):
                raise BlockStoreError(f"no such index file: {path}")
            self._f = open(path, "r+b")
            self._load_header()

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def open(cls, path: str, block_size: int = DEFAULT_BLOCK_SIZE, create: bool = False) -> "BlockStore":
        return cls(path, block_size, create)

    def flush(self) -> None:
        """Persist the header (watermark, free list, app area) and sync."""
        self._persist_free_list()
        self._f.flush()
        os.fsync(self._f.fileno())

    def close(self) -> None:
        if not self._f.closed:
            self.flush()
            self._f.close()

    def __enter__(self) -> "BlockStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- allocation --------------------------------------------------------

    def allocate(self) -> int:
        """Return the smallest free id, else extend the file at the watermark."""
        if self._free_heap:
            bid = heapq.heappop(self._free_heap)
            self._free_set.discard(bid)
            return bid
        return self._extend(1)

    def allocate_run(self, n: int) -> int:
        """Allocate ``n`` consecutive block ids and return the first.

        Multi-block nodes address their slots by arithmetic on the first id,
        so the run must be contiguous.  The free list is searched for the
        lowest run of length ``n``; otherwise the file is extended.
        """
        if n <= 0:
            raise BlockStoreError("allocate_run needs n >= 1")
        if n == 1:
            return self.allocate()
        free = sorted(self._free_set)
        run_start = 0
        run_len = 0
        for bid in free:
            if run_len and bid == run_start + run_len:
                run_len += 1
            else:
                run_start, run_len = bid, 1
            if run_len == n:
                for b in range(run_start, run_start + n):
                    self._free_set.discard(b)
                self._free_heap = list(self._free_set)
                heapq.heapify(self._free_heap)
                return run_start
        return self._extend(n)

    def free(self, bid: int) -> None:
        if bid == 0:
            raise BlockStoreError("cannot free the header block")
        if bid >= self.watermark:
            raise BlockStoreError(f"free of never-allocated block {bid}")
        if bid in self._free_set:
            raise BlockStoreError(f"double free of block {bid}")
        self._free_set.add(bid)
        heapq.heappush(self._free_heap, bid)

    def _extend(self, n: int) -> int:
        first = self.watermark
        self.watermark += n
        self._f.seek(first * self.block_size)
        self._f.write(b"\x00" * (n * self.block_size))
        return first

    # -- block I/O ---------------------------------------------------------

    def read(self, bid: int) -> bytes:
        if bid != 0 and (bid >= self.watermark or bid in self._free_set):
            raise BlockStoreError(f"read of unallocated block {bid}")
        self.stats.reads += 1
        return self._read_raw(bid)

    def write(self, bid: int, data: bytes) -> None:
        if bid != 0 and (bid >= self.watermark or bid in self._free_set):
            raise BlockStoreError(f"write to unallocated block {bid}")
        if len(data) != self.block_size:
            raise BlockStoreError(f"write of {len(data)} bytes, block_size is {self.block_size}")
        self.stats.writes += 1
        self._write_raw(bid, data)

    def counters(self) -> IoStats:
        return IoStats(self.stats.reads, self.stats.writes)

    def reset_counters(self) -> None:
        self.stats = IoStats()

    # -- app metadata ------------------------------------------------------

    def app_area(self) -> bytes:
        return self._app_area

    def set_app_area(self, data: bytes) -> None:
        if len(data) > APP_AREA_SIZE:
            raise BlockStoreError(f"app area limited to {APP_AREA_SIZE} bytes")
        self._app_area = data.ljust(APP_AREA_SIZE, b"\x00")

    @property
    def file_size(self) -> int:
        return self.watermark * self.block_size

    def free_ids(self) -> list[int]:
        return sorted(self._free_set)

    # -- header / free-list persistence ------------------------------------

    def _read_raw(self, bid: int) -> bytes:
        self._f.seek(bid * self.block_size)
        data = self._f.read(self.block_size)
        if len(data) != self.block_size:
            raise BlockStoreError(f"short read of block {bid}")
        return data

    def _write_raw(self, bid: int, data: bytes) -> None:
        self._f.seek(bid * self.block_size)
        self._f.write(data)

    def _encode_header(self, free_head: int = 0, inline_ids: list[int] | None = None) -> bytes:
        inline_ids = inline_ids or []
        buf = bytearray(self.block_size)
        HEADER_FIXED.pack_into(
            buf, 0, MAGIC, FORMAT_VERSION, self.block_size,
            self.watermark, free_head, len(inline_ids), self.index_kind,
        )
        buf[APP_AREA_OFF:APP_AREA_OFF + APP_AREA_SIZE] = self._app_area
        if inline_ids:
            struct.pack_into(f"<{len(inline_ids)}Q", buf, INLINE_IDS_OFF, *inline_ids)
        return bytes(buf)

    def _inline_capacity(self) -> int:
        return (self.block_size - INLINE_IDS_OFF) // 8

    def _chain_capacity(self) -> int:
        return (self.block_size - CHAIN_HEADER.size) // 8

    def _persist_free_list(self) -> None:
        ids = sorted(self._free_set)
        cap = self._inline_capacity()
        inline, rest = ids[:cap], ids[cap:]
        head = 0
        per = self._chain_capacity()
        while rest:
            host = rest.pop()
            take = rest[:per]
            rest = rest[per:]
            buf = bytearray(self.block_size)
            CHAIN_HEADER.pack_into(buf, 0, head, len(take))
            if take:
                struct.pack_into(f"<{len(take)}Q", buf, CHAIN_HEADER.size, *take)
            self._write_raw(host, bytes(buf))
            head = host
        self._write_raw(0, self._encode_header(head, inline))

    def _load_header(self) -> None:
        size = os.path.getsize(self.path)
        if size < self.block_size or size % self.block_size:
            raise BlockStoreError(f"file size {size} is not a whole number of {self.block_size}-byte blocks")
        data = self._read_raw(0)
        magic, version, bs, watermark, free_head, n_inline, kind = HEADER_FIXED.unpack_from(data, 0)
        if magic != MAGIC:
            raise BlockStoreError("not an index file (bad magic)")
        if version != FORMAT_VERSION:
            raise BlockStoreError(f"unsupported format version {version}")
        if bs != self.block_size:
            raise BlockStoreError(f"block_size mismatch: file has {bs}, requested {self.block_size}")
        if size != watermark * self.block_size:
            raise BlockStoreError("file length disagrees with recorded watermark")
        self.watermark = watermark
        self.index_kind = kind
        self._app_area = bytes(data[APP_AREA_OFF:APP_AREA_OFF + APP_AREA_SIZE])
        ids = list(struct.unpack_from(f"<{n_inline}Q", data, INLINE_IDS_OFF)) if n_inline else []
        host = free_head
        while host:
            chain = self._read_raw(host)
            nxt, count = CHAIN_HEADER.unpack_from(chain, 0)
            ids.append(host)
            if count:
                ids.extend(struct.unpack_from(f"<{count}Q", chain, CHAIN_HEADER.size))
            host = nxt
        self._free_set = set(ids)
        self._free_heap = list(self._free_set)
        heapq.heapify(self._free_heap)
