"""Per-block QBER of a sifted key pair, for monitoring error drift over time."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class BlockQberSeries:
    block_size_bytes: int
    errors: tuple[int, ...]
    bits: tuple[int, ...]

    @property
    def series(self) -> list[float]:
        return [e / b for e, b in zip(self.errors, self.bits)]

    @property
    def mean(self) -> float:
        s = self.series
        return sum(s) / len(s) if s else 0.0

    @property
    def max(self) -> float:
        return max(self.series, default=0.0)

    @property
    def overall(self) -> float:
        total = sum(self.bits)
        return sum(self.errors) / total if total else 0.0


def block_qber(alice: bytes, bob: bytes, block_size_bytes: int = 5000) -> BlockQberSeries:
    """Bit mismatch fraction of consecutive blocks of two packed-bit keys.

    A trailing partial block is kept as a shorter final block.
    """
    if block_size_bytes <= 0:
        raise ValueError("block size must be positive")
    if len(alice) != len(bob):
        raise ValueError(f"key lengths differ: {len(alice)} vs {len(bob)} bytes")
    a = np.frombuffer(alice, dtype=np.uint8)
    b = np.frombuffer(bob, dtype=np.uint8)
    flips = np.unpackbits(np.bitwise_xor(a, b)).astype(np.int64)
    # per-byte error counts, then summed per block
    per_byte = flips.reshape(-1, 8).sum(axis=1)
    starts = np.arange(0, len(a), block_size_bytes)
    errors = np.add.reduceat(per_byte, starts) if len(a) else np.array([], dtype=np.int64)
    sizes = np.minimum(block_size_bytes, len(a) - starts) * 8
    return BlockQberSeries(
        block_size_bytes=block_size_bytes,
        errors=tuple(int(e) for e in errors),
        bits=tuple(int(s) for s in sizes),
    )


def block_qber_files(alice_path: str | Path, bob_path: str | Path, block_size_bytes: int = 5000) -> BlockQberSeries:
    return block_qber(Path(alice_path).read_bytes(), Path(bob_path).read_bytes(), block_size_bytes)
