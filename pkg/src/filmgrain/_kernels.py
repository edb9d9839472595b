"""Numba kernels for the blend hot path.

Importing this module compiles (or loads from cache) the jitted functions;
synthesis falls back to the numpy route when the import fails or
FILMGRAIN_NO_NUMBA is set. Both routes must produce bit-identical planes.

The banded kernel handles the default configuration (vertical-only seam
smoothing or none). It never materializes a full grain plane: each 8-row band
is blended directly from the prescaled patterns and the two columns astride
every seam are then recomputed with the smoothing filter. The generic kernel
covers horizontal smoothing, which needs cross-band neighbor access.

Window offsets are derived inline, block by block, with the same splitmix64
hash chain the numpy route gets from seeds_from_base + window_offsets; the
scalar form keeps the whole derivation in registers.
"""

from __future__ import annotations

import numpy as np
from numba import njit

BLOCK = 8

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_ROW_SALT = np.uint64(0xD1B54A32D192ED03)
_COL_SALT = np.uint64(0x8CB92BA72F3D8DD7)
_OFFSET_RANGE = np.uint64(57)


@njit(cache=True, nogil=True, inline="always")
def _avalanche(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True, inline="always")
def _window_offset(base, by, bx):
    z = base ^ (np.uint64(by) * _ROW_SALT) ^ (np.uint64(bx) * _COL_SALT)
    seed = _avalanche(z + _GAMMA)
    r1 = _avalanche(seed)
    r2 = _avalanche(r1)
    return np.int64(r1 % _OFFSET_RANGE), np.int64(r2 % _OFFSET_RANGE)


@njit(cache=True, nogil=True)
def blend_plane_banded(src, out, prescaled, iv_lut, seed_base, bd_shift, max_value, deblock_v):
    h, w = src.shape
    n_by = (h + BLOCK - 1) // BLOCK
    n_bx = (w + BLOCK - 1) // BLOCK
    n_bx_full = w // BLOCK
    band = np.zeros((BLOCK, w), np.int16)
    base = np.uint64(seed_base)
    grained = 0
    skipped = 0
    lo = np.int32(0)
    hi = np.int32(max_value)
    shift = np.int32(bd_shift)
    for by in range(n_by):
        y0 = by * BLOCK
        bh = min(BLOCK, h - y0)
        full_row = bh == BLOCK
        # pick the interval for every block of the band, then fill the band
        # with pattern windows (zeros where no interval matches)
        for bx in range(n_bx):
            x0 = bx * BLOCK
            if full_row and bx < n_bx_full:
                acc = np.int32(0)
                for y in range(BLOCK):
                    for x in range(BLOCK):
                        acc += src[y0 + y, x0 + x]
                idx = iv_lut[(acc >> 6) >> shift]
            else:
                bw = min(BLOCK, w - x0)
                acc = np.int32(0)
                for y in range(bh):
                    for x in range(bw):
                        acc += src[y0 + y, x0 + x]
                idx = iv_lut[(acc // (bh * bw)) >> shift]
            if idx < 0:
                skipped += 1
                if bx < n_bx_full:
                    for y in range(BLOCK):
                        for x in range(BLOCK):
                            band[y, x0 + x] = 0
                else:
                    bw = w - x0
                    for y in range(BLOCK):
                        for x in range(bw):
                            band[y, x0 + x] = 0
                continue
            grained += 1
            px, py = _window_offset(base, by, bx)
            if bx < n_bx_full:
                for y in range(BLOCK):
                    for x in range(BLOCK):
                        band[y, x0 + x] = prescaled[idx, py + y, px + x]
            else:
                bw = w - x0
                for y in range(BLOCK):
                    for x in range(bw):
                        band[y, x0 + x] = prescaled[idx, py + y, px + x]
        if deblock_v:
            for sx in range(BLOCK, w - 1, BLOCK):
                for y in range(BLOCK):
                    a = band[y, sx - 2]
                    b = band[y, sx - 1]
                    c = band[y, sx]
                    d = band[y, sx + 1]
                    band[y, sx - 1] = (a + 2 * b + c + 2) >> 2
                    band[y, sx] = (b + 2 * c + d + 2) >> 2
        if full_row:
            if shift == 0:
                for y in range(BLOCK):
                    ys = y0 + y
                    for x in range(w):
                        v = np.int32(src[ys, x]) + np.int32(band[y, x])
                        out[ys, x] = min(max(v, lo), hi)
            else:
                for y in range(BLOCK):
                    ys = y0 + y
                    for x in range(w):
                        v = np.int32(src[ys, x]) + (np.int32(band[y, x]) << shift)
                        out[ys, x] = min(max(v, lo), hi)
        else:
            for y in range(bh):
                ys = y0 + y
                for x in range(w):
                    v = np.int32(src[ys, x]) + (np.int32(band[y, x]) << shift)
                    out[ys, x] = min(max(v, lo), hi)
    return grained, skipped


@njit(cache=True, nogil=True)
def blend_plane_generic(src, out, prescaled, iv_lut, seed_base, bd_shift, max_value, deblock_v, deblock_h):
    h, w = src.shape
    n_by = (h + BLOCK - 1) // BLOCK
    n_bx = (w + BLOCK - 1) // BLOCK
    grain = np.zeros((h, w), np.int16)
    base = np.uint64(seed_base)
    grained = 0
    skipped = 0
    lo = np.int32(0)
    hi = np.int32(max_value)
    shift = np.int32(bd_shift)
    for by in range(n_by):
        y0 = by * BLOCK
        bh = min(BLOCK, h - y0)
        for bx in range(n_bx):
            x0 = bx * BLOCK
            bw = min(BLOCK, w - x0)
            acc = np.int32(0)
            for y in range(bh):
                for x in range(bw):
                    acc += src[y0 + y, x0 + x]
            idx = iv_lut[(acc // (bh * bw)) >> shift]
            if idx < 0:
                skipped += 1
                continue
            grained += 1
            px, py = _window_offset(base, by, bx)
            for y in range(bh):
                for x in range(bw):
                    grain[y0 + y, x0 + x] = prescaled[idx, py + y, px + x]
    if deblock_v:
        for sx in range(BLOCK, w - 1, BLOCK):
            for y in range(h):
                a = grain[y, sx - 2]
                b = grain[y, sx - 1]
                c = grain[y, sx]
                d = grain[y, sx + 1]
                grain[y, sx - 1] = (a + 2 * b + c + 2) >> 2
                grain[y, sx] = (b + 2 * c + d + 2) >> 2
    if deblock_h:
        for sy in range(BLOCK, h - 1, BLOCK):
            for x in range(w):
                a = grain[sy - 2, x]
                b = grain[sy - 1, x]
                c = grain[sy, x]
                d = grain[sy + 1, x]
                grain[sy - 1, x] = (a + 2 * b + c + 2) >> 2
                grain[sy, x] = (b + 2 * c + d + 2) >> 2
    for y in range(h):
        for x in range(w):
            v = np.int32(src[y, x]) + (np.int32(grain[y, x]) << shift)
            out[y, x] = min(max(v, lo), hi)
    return grained, skipped
