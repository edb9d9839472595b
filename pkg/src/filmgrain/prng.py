"""splitmix64-based deterministic random streams.

The generator is the published splitmix64: state advances by the golden-ratio
increment and each output is a finalizing avalanche of the state. A stream
seeded the same way yields the same numbers on every platform, which is what
makes parallel block processing reproducible: every (frame, component, block)
gets its own stream derived by hashing, no shared state anywhere.
"""

from __future__ import annotations

import numpy as np

_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1

OFFSET_RANGE = 57  # valid 8x8 window origins inside a 64x64 pattern: 0..56


def mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def stream(seed: int, count: int) -> np.ndarray:
    """First `count` outputs of splitmix64 seeded with `seed`, as uint64."""
    idx = np.arange(1, count + 1, dtype=np.uint64)
    z = np.uint64(seed & _MASK) + idx * np.uint64(_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


ROW_SALT = 0xD1B54A32D192ED03
COL_SALT = 0x8CB92BA72F3D8DD7


def seed_base(master_seed: int, frame_index: int, component: int) -> int:
    """The per-(frame, component) hash every block seed is derived from."""
    return mix64(mix64(master_seed) ^ mix64(frame_index * _GAMMA + component + 1))


def block_seeds(master_seed: int, frame_index: int, component: int, n_rows: int, n_cols: int) -> np.ndarray:
    """Independent 64-bit seed per block of an (n_rows, n_cols) grid."""
    return seeds_from_base(seed_base(master_seed, frame_index, component), n_rows, n_cols)


def seeds_from_base(base: int, n_rows: int, n_cols: int) -> np.ndarray:
    rows = np.arange(n_rows, dtype=np.uint64)[:, None]
    cols = np.arange(n_cols, dtype=np.uint64)[None, :]
    z = np.uint64(base) ^ (rows * np.uint64(ROW_SALT)) ^ (cols * np.uint64(COL_SALT))
    z = z + np.uint64(_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def window_offsets(seeds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-seed (ox, oy) pattern window origins, each uniform over [0, 56]."""
    s = seeds.astype(np.uint64)
    r1 = (s ^ (s >> np.uint64(30))) * np.uint64(_MIX1)
    r1 = (r1 ^ (r1 >> np.uint64(27))) * np.uint64(_MIX2)
    r1 = r1 ^ (r1 >> np.uint64(31))
    r2 = (r1 ^ (r1 >> np.uint64(30))) * np.uint64(_MIX1)
    r2 = (r2 ^ (r2 >> np.uint64(27))) * np.uint64(_MIX2)
    r2 = r2 ^ (r2 >> np.uint64(31))
    ox = (r1 % np.uint64(OFFSET_RANGE)).astype(np.int64)
    oy = (r2 % np.uint64(OFFSET_RANGE)).astype(np.int64)
    return ox, oy


def gaussian_block(seed: int, shape: tuple[int, int]) -> np.ndarray:
    """Unit-variance Gaussian noise via Box-Muller over a splitmix64 stream.

    Deterministic given the seed; used once at database build time.
    """
    count = shape[0] * shape[1]
    raw = stream(seed, 2 * count)
    # 53-bit mantissas; the +0.5 keeps u1 away from zero for the log
    u1 = ((raw[:count] >> np.uint64(11)).astype(np.float64) + 0.5) / float(1 << 53)
    u2 = (raw[count:] >> np.uint64(11)).astype(np.float64) / float(1 << 53)
    g = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    return g.reshape(shape)
