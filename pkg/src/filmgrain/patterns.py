"""Grain pattern database: one low-passed 64x64 noise block per cutoff pair.

A single Gaussian coefficient block is generated once from the seed, then for
every cutoff pair (h, v) in [2, 14]^2 the coefficients outside the low-pass
region are zeroed and the block is inverse transformed. Two views of each
pattern are kept:

* ``patterns`` holds the exact unshifted integer transform output (int64, at
  2^32 scale). Forward-transforming these with the matching exact basis shows
  bit-exact zeros outside the cutoff region, which is the property the
  database is built around.
* ``blocks`` holds the same patterns renormalized to the working amplitude
  (int16, standard deviation about 36 at cutoffs (8, 8)). Synthesis reads its
  8x8 windows from these.

``sigma_db`` is the measured standard deviation of the (8, 8) working block;
the analyzer uses it to convert measured grain amplitude into scaling
factors, closing the loop with synthesis.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import dct, prng

CUTOFF_MIN = 2
CUTOFF_MAX = 14
N_CUTOFFS = CUTOFF_MAX - CUTOFF_MIN + 1  # 13 per axis, 169 pairs

PATTERN_SIZE = 64
_COEF_SCALE = 256  # Gaussian draws are quantized to 8 fractional bits
_BLOCK_SHIFT = 34  # patterns sit at 2^32 scale; >>34 leaves ~64x unit noise

_CACHE_MAGIC = b"FGDB"
_CACHE_VERSION = 1


def cutoff_index(comp_model_value: int) -> int:
    """Map a signalled cutoff (2..14) to its last kept coefficient index.

    With h = value - 2, the kept region along that axis is 0..((h+3) << 2) - 1.
    Value 14 gives 59, so every mask fits a 64-coefficient axis.
    """
    if not CUTOFF_MIN <= comp_model_value <= CUTOFF_MAX:
        raise ValueError(f"cutoff {comp_model_value} outside [{CUTOFF_MIN}, {CUTOFF_MAX}]")
    h = comp_model_value - 2
    return ((h + 3) << 2) - 1


@dataclass(frozen=True)
class GrainPatternDb:
    seed: int
    patterns: np.ndarray  # (13, 13, 64, 64) int64, exact transform output, [h-2][v-2]
    blocks: np.ndarray  # (13, 13, 64, 64) int16, working amplitude
    sigma_db: float

    def pattern(self, h_cutoff: int, v_cutoff: int) -> np.ndarray:
        return self.patterns[h_cutoff - CUTOFF_MIN, v_cutoff - CUTOFF_MIN]

    def block(self, h_cutoff: int, v_cutoff: int) -> np.ndarray:
        return self.blocks[h_cutoff - CUTOFF_MIN, v_cutoff - CUTOFF_MIN]


def _coefficient_block(seed: int) -> np.ndarray:
    g = prng.gaussian_block(seed, (PATTERN_SIZE, PATTERN_SIZE))
    return np.rint(g * _COEF_SCALE)


def build_database(seed: int) -> GrainPatternDb:
    """Build all 169 patterns from one seeded coefficient block."""
    coeffs = _coefficient_block(seed)
    patterns = np.empty((N_CUTOFFS, N_CUTOFFS, PATTERN_SIZE, PATTERN_SIZE), dtype=np.int64)
    for h in range(CUTOFF_MIN, CUTOFF_MAX + 1):
        h_c = cutoff_index(h)
        for v in range(CUTOFF_MIN, CUTOFF_MAX + 1):
            v_c = cutoff_index(v)
            masked = np.zeros_like(coeffs)
            # x indexes the horizontal frequency (columns), y the vertical
            masked[: v_c + 1, : h_c + 1] = coeffs[: v_c + 1, : h_c + 1]
            patterns[h - CUTOFF_MIN, v - CUTOFF_MIN] = dct.idct_unscaled(masked)
    half = np.int64(1) << (_BLOCK_SHIFT - 1)
    blocks = ((patterns + half) >> _BLOCK_SHIFT).astype(np.int16)
    ref = blocks[8 - CUTOFF_MIN, 8 - CUTOFF_MIN]
    sigma_db = float(np.std(ref.astype(np.float64)))
    return GrainPatternDb(seed=seed, patterns=patterns, blocks=blocks, sigma_db=sigma_db)


def save_database(db: GrainPatternDb, path) -> None:
    """Cache layout: magic, version u32, seed u64, sigma_db f64, then the
    169 working blocks as int16 little-endian, h-major then v."""
    with open(path, "wb") as f:
        f.write(_CACHE_MAGIC)
        f.write(struct.pack("<I", _CACHE_VERSION))
        f.write(struct.pack("<Q", db.seed))
        f.write(struct.pack("<d", db.sigma_db))
        f.write(np.ascontiguousarray(db.blocks, dtype="<i2").tobytes())


def load_database(path) -> GrainPatternDb:
    """Load a cache and verify it by rebuilding from the stored seed.

    The exact patterns are not stored (they are derived data); the rebuild
    both restores them and cross-checks the stored working blocks, so a
    corrupt or stale cache is rejected rather than silently used.
    """
    with open(path, "rb") as f:
        data = f.read()
    head = len(_CACHE_MAGIC) + 4 + 8 + 8
    body = N_CUTOFFS * N_CUTOFFS * PATTERN_SIZE * PATTERN_SIZE * 2
    if len(data) != head + body or data[:4] != _CACHE_MAGIC:
        raise ValueError(f"{path}: not a grain database cache")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != _CACHE_VERSION:
        raise ValueError(f"{path}: cache version {version}, expected {_CACHE_VERSION}")
    (seed,) = struct.unpack_from("<Q", data, 8)
    (sigma_db,) = struct.unpack_from("<d", data, 16)
    stored = np.frombuffer(data, dtype="<i2", offset=head).reshape(
        N_CUTOFFS, N_CUTOFFS, PATTERN_SIZE, PATTERN_SIZE
    )
    db = build_database(seed)
    if not np.array_equal(db.blocks, stored) or abs(db.sigma_db - sigma_db) > 1e-9:
        raise ValueError(f"{path}: cache contents do not match a rebuild from seed {seed}")
    return db
