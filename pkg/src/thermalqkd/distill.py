"""Amplitude slicing and repetition-based advantage distillation.

Keys come from the measurement amplitudes z = sqrt(x^2 + p^2), which are
invariant under the cluster rotations the parties reveal publicly. Slicing
thresholds at the per-detector median over the whole run; values exactly
equal to the median map to 0, and the even-length median is the lower-middle
order statistic, so golden outputs are byte-stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels


@dataclass
class PartyRecord:
    """Aligned measurement record for one party."""

    x: np.ndarray
    p: np.ndarray
    z: np.ndarray
    bits: np.ndarray

    def __post_init__(self):
        lengths = {len(self.x), len(self.p), len(self.z), len(self.bits)}
        if len(lengths) != 1:
            raise ValueError(f"record field lengths differ: {sorted(lengths)}")

    def __len__(self) -> int:
        return len(self.z)


def amplitude(x, p):
    """sqrt(x^2 + p^2), elementwise on arrays."""
    xa = np.asarray(x, dtype=float)
    pa = np.asarray(p, dtype=float)
    z = np.sqrt(xa * xa + pa * pa)
    return float(z) if z.ndim == 0 else z


def median_slice(zs) -> np.ndarray:
    """Threshold at the run median: bit = 1 iff z > median(zs)."""
    z = np.asarray(zs, dtype=float)
    if z.ndim != 1 or z.size < 2:
        raise ValueError(f"need at least 2 samples to slice, got shape {z.shape}")
    k = (z.size - 1) // 2
    med = np.partition(z, k)[k]
    return (z > med).astype(np.uint8)


def bit_error_rate(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.size == 0:
        raise ValueError(f"bit strings must have equal nonzero length, got {a.shape} and {b.shape}")
    return float(np.count_nonzero(a != b) / a.size)


def advantage_distill(a, b, block: int = 2, rng=None):
    """Repetition-protocol distillation over blocks of size ``block``.

    Alice publishes each block XORed with a fresh random bit repeated
    blockwise; Bob accepts when his block XOR the published string is
    constant and decodes that constant. Returns (alice_kept, bob_kept,
    kept_fraction). A trailing partial block is dropped.
    """
    a_bits = np.ascontiguousarray(a, dtype=np.uint8)
    b_bits = np.ascontiguousarray(b, dtype=np.uint8)
    if a_bits.shape != b_bits.shape:
        raise ValueError(f"length mismatch: {a_bits.shape} vs {b_bits.shape}")
    if block < 2:
        raise ValueError(f"block must be >= 2, got {block}")
    n_blocks = a_bits.size // block
    if n_blocks == 0:
        raise ValueError(f"need at least one block of {block} bits, got {a_bits.size}")
    if rng is None:
        rng = np.random.default_rng()
    r = rng.integers(0, 2, n_blocks, dtype=np.uint8)
    a_kept, b_kept, kept = kernels.distill_scan(a_bits, b_bits, r, block)
    return a_kept, b_kept, kept / n_blocks


def write_bits_text(bits, path) -> None:
    """One '0' or '1' character per line."""
    b = np.asarray(bits, dtype=np.uint8)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(np.char.mod("%d", b).tolist()))
        if b.size:
            fh.write("\n")


def read_bits_text(path) -> np.ndarray:
    text = Path(path).read_text(encoding="ascii").split()
    return np.array([int(tok) for tok in text], dtype=np.uint8)


def write_bits_packed(bits, path) -> None:
    """8 bits per byte, big-endian within the byte; a one-byte header keeps
    the count of padding bits in the final byte."""
    b = np.asarray(bits, dtype=np.uint8)
    pad = (-b.size) % 8
    with open(path, "wb") as fh:
        fh.write(bytes([pad]))
        fh.write(np.packbits(b).tobytes())


def read_bits_packed(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    pad = raw[0]
    bits = np.unpackbits(np.frombuffer(raw[1:], dtype=np.uint8))
    return bits[:bits.size - pad] if pad else bits
