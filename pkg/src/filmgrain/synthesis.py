"""Grain synthesis and additive blending.

Per 8x8 block of each signalled component: average the decoded samples, find
the intensity interval, cut a pseudo-random 8x8 window out of the interval's
64x64 pattern (with the interval's gain pre-applied to the whole pattern),
smooth the two grain columns astride each block seam, and add the result to
the frame under the bit-depth clip.

Two implementations produce bit-identical planes: a vectorized numpy path
(always available) and a numba path used when the package is importable and
FILMGRAIN_NO_NUMBA is unset. Parallelism across frames never changes output
because every block's randomness comes from hashing (seed, frame, component,
block position).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from . import prng
from .frame_io import Frame
from .patterns import GrainPatternDb
from .sei import FgcParams, Interval, IntervalModel

BLOCK = 8


@dataclass(frozen=True)
class SynthesisConfig:
    master_seed: int = 0
    deblock_enabled: bool = True
    deblock_horizontal: bool = False
    threads: int = 1
    use_numba: bool | None = None  # None = auto-detect


@dataclass
class PlaneStats:
    blocks_grained: int = 0
    blocks_skipped_no_interval: int = 0


@dataclass
class BlendReport:
    frame_index: int
    passthrough: bool = False
    seed_digest: str = ""
    y: PlaneStats = field(default_factory=PlaneStats)
    cb: PlaneStats = field(default_factory=PlaneStats)
    cr: PlaneStats = field(default_factory=PlaneStats)

    def to_dict(self) -> dict:
        def plane(p: PlaneStats) -> dict:
            return {
                "blocks_grained": p.blocks_grained,
                "blocks_skipped_no_interval": p.blocks_skipped_no_interval,
            }

        return {
            "frame_index": self.frame_index,
            "passthrough": self.passthrough,
            "seed_digest": self.seed_digest,
            "Y": plane(self.y),
            "Cb": plane(self.cb),
            "Cr": plane(self.cr),
        }


def select_interval(model: IntervalModel, block_avg: int) -> Interval | None:
    """The interval whose [lower, upper] contains the 8-bit block average."""
    for iv in model.intervals:
        if iv.lower_bound <= block_avg <= iv.upper_bound:
            return iv
        if iv.lower_bound > block_avg:
            break
    return None


def grain_block(db: GrainPatternDb, interval: Interval, seed: int) -> np.ndarray:
    """One 8x8 grain window for a block whose PRNG seed is `seed`."""
    ox, oy = prng.window_offsets(np.array([seed], dtype=np.uint64))
    pat = db.block(interval.h_cutoff, interval.v_cutoff)
    x, y = int(ox[0]), int(oy[0])
    return pat[y : y + BLOCK, x : x + BLOCK].copy()


def scale_and_shift(block: np.ndarray, sf: int, log2_scale_factor: int) -> np.ndarray:
    """Apply the signalled gain: (sf * sample) >> (log2_scale_factor + 6).

    The shift is arithmetic, so negative samples round toward minus infinity.
    Width analysis: |sample| <= 250 for every database block and sf <= 255,
    so |product| <= 63750 < 2^16; int32 holds it with a wide margin, and the
    result after the shift (at least 8) fits in 9 bits.
    """
    prod = block.astype(np.int32) * np.int32(sf)
    return prod >> (log2_scale_factor + 6)


def _deblock_plane(grain: np.ndarray, horizontal: bool) -> None:
    """Smooth the two columns (and optionally rows) astride each seam, in place.

    Filter is (a + 2b + c + 2) >> 2 with all reads from pre-filter values.
    Columns written at a seam are never read by another seam, so the update
    order cannot matter.
    """
    h, w = grain.shape
    seams = np.arange(BLOCK, w, BLOCK)
    seams = seams[seams + 1 < w]  # a 1-wide partial block has no room for the filter
    if seams.size:
        a = grain[:, seams - 2]
        b = grain[:, seams - 1]
        c = grain[:, seams]
        d = grain[:, seams + 1]
        left = (a + 2 * b + c + 2) >> 2
        right = (b + 2 * c + d + 2) >> 2
        grain[:, seams - 1] = left
        grain[:, seams] = right
    if horizontal:
        seams = np.arange(BLOCK, h, BLOCK)
        seams = seams[seams + 1 < h]
        if seams.size:
            a = grain[seams - 2, :]
            b = grain[seams - 1, :]
            c = grain[seams, :]
            d = grain[seams + 1, :]
            top = (a + 2 * b + c + 2) >> 2
            bottom = (b + 2 * c + d + 2) >> 2
            grain[seams - 1, :] = top
            grain[seams, :] = bottom


def deblock_grain(grain: np.ndarray, horizontal: bool = False) -> np.ndarray:
    """Pure version of the seam filter for a full grain plane."""
    out = np.array(grain, dtype=np.int32, copy=True)
    _deblock_plane(out, horizontal)
    return out


def prescaled_patterns(
    db: GrainPatternDb, model: IntervalModel, log2_scale_factor: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-interval grain patterns with the gain already applied.

    The gain (sf * sample) >> (log2_scale_factor + 6) acts per sample, so it
    can be applied once to each interval's 64x64 pattern instead of to every
    extracted window; the blended result is identical. Returns the 256-entry
    intensity -> interval index table (-1 where no interval matches) and an
    int16 array of shape (n_intervals, 64, 64).
    """
    shift = log2_scale_factor + 6
    iv_lut = np.full(256, -1, dtype=np.int16)
    scaled = np.empty((len(model.intervals), 64, 64), dtype=np.int16)
    for i, iv in enumerate(model.intervals):
        iv_lut[iv.lower_bound : iv.upper_bound + 1] = i
        pat = db.block(iv.h_cutoff, iv.v_cutoff).astype(np.int32)
        scaled[i] = (pat * np.int32(iv.scaling_factor)) >> shift
    return iv_lut, scaled


def _block_grid(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    return np.arange(0, h, BLOCK), np.arange(0, w, BLOCK)


def _blend_plane_numpy(
    src: np.ndarray,
    prescaled: np.ndarray,
    iv_lut: np.ndarray,
    ox: np.ndarray,
    oy: np.ndarray,
    bd_shift: int,
    max_value: int,
    deblock_v: bool,
    deblock_h: bool,
) -> tuple[np.ndarray, int, int]:
    h, w = src.shape
    row_starts, col_starts = _block_grid(h, w)
    row_counts = np.minimum(row_starts + BLOCK, h) - row_starts
    col_counts = np.minimum(col_starts + BLOCK, w) - col_starts
    sums = np.add.reduceat(np.add.reduceat(src.astype(np.int64), row_starts, axis=0), col_starts, axis=1)
    counts = row_counts[:, None] * col_counts[None, :]
    avg8 = ((sums // counts) >> bd_shift).astype(np.intp)

    iv = iv_lut[avg8]
    active = iv >= 0
    grained = int(active.sum())
    skipped = int(active.size - grained)

    rel = np.arange(BLOCK)
    iy = oy[:, :, None, None] + rel[None, None, :, None]
    ix = ox[:, :, None, None] + rel[None, None, None, :]
    g = prescaled[np.where(active, iv, 0)[:, :, None, None], iy, ix].astype(np.int32)
    g[~active] = 0

    nby, nbx = len(row_starts), len(col_starts)
    grain = np.ascontiguousarray(g.transpose(0, 2, 1, 3).reshape(nby * BLOCK, nbx * BLOCK))[:h, :w]
    if deblock_v:
        _deblock_plane(grain, deblock_h)

    out = src.astype(np.int32) + (grain << bd_shift)
    return np.clip(out, 0, max_value).astype(src.dtype), grained, skipped


_NUMBA_STATE: dict = {}


def _kernels_module():
    """The numba twin of the numpy path, or None when unavailable/disabled."""
    if "mod" not in _NUMBA_STATE:
        mod = None
        if not os.environ.get("FILMGRAIN_NO_NUMBA"):
            try:
                from . import _kernels as mod
            except ImportError:
                mod = None
        _NUMBA_STATE["mod"] = mod
    return _NUMBA_STATE["mod"]


def _blend_plane(src, prescaled, iv_lut, base, bd_shift, max_value, deblock_v, deblock_h, use_numba):
    kern = _kernels_module() if use_numba in (None, True) else None
    if kern is not None:
        out = np.empty_like(src)
        base_u64 = np.uint64(base)
        if deblock_h:
            grained, skipped = kern.blend_plane_generic(
                src, out, prescaled, iv_lut, base_u64, bd_shift, max_value, deblock_v, deblock_h
            )
        else:
            grained, skipped = kern.blend_plane_banded(
                src, out, prescaled, iv_lut, base_u64, bd_shift, max_value, deblock_v
            )
        return out, int(grained), int(skipped)
    nby = (src.shape[0] + BLOCK - 1) // BLOCK
    nbx = (src.shape[1] + BLOCK - 1) // BLOCK
    ox, oy = prng.window_offsets(prng.seeds_from_base(base, nby, nbx))
    return _blend_plane_numpy(
        src, prescaled, iv_lut, ox, oy, bd_shift, max_value, deblock_v, deblock_h
    )


def blend_frame(
    decoded: Frame,
    params: FgcParams | None,
    db: GrainPatternDb,
    cfg: SynthesisConfig,
    frame_index: int = 0,
) -> tuple[Frame, BlendReport]:
    """Blend grain onto one frame; components without a model pass through."""
    report = BlendReport(frame_index=frame_index)
    report.seed_digest = f"{prng.mix64(cfg.master_seed ^ prng.mix64(frame_index)):016x}"
    if params is None or all(m is None for m in params.component_models):
        report.passthrough = params is None
        return decoded, report

    fmt = decoded.format
    bd_shift = fmt.bit_depth - 8
    out_planes = []
    stats = (report.y, report.cb, report.cr)
    for comp, plane in enumerate(decoded.planes):
        model = params.component_models[comp]
        if model is None:
            out_planes.append(plane)
            continue
        iv_lut, prescaled = prescaled_patterns(db, model, params.log2_scale_factor)
        base = prng.seed_base(cfg.master_seed, frame_index, comp)
        out_plane, grained, skipped = _blend_plane(
            plane,
            prescaled,
            iv_lut,
            base,
            bd_shift,
            fmt.max_value,
            cfg.deblock_enabled,
            cfg.deblock_enabled and cfg.deblock_horizontal,
            cfg.use_numba,
        )
        stats[comp].blocks_grained = grained
        stats[comp].blocks_skipped_no_interval = skipped
        out_planes.append(out_plane)
    return Frame(fmt, *out_planes), report


def synthesize_sequence(
    frames: Iterable[Frame],
    params_stream: Iterable[FgcParams | None],
    db: GrainPatternDb,
    cfg: SynthesisConfig,
) -> Iterator[tuple[Frame, BlendReport]]:
    """Blend a whole sequence, frame-parallel when cfg.threads > 1.

    The params stream runs in step with the frames; when it runs short the
    remaining frames pass through untouched.
    """
    params_iter = iter(params_stream)

    if cfg.threads <= 1:
        for i, frame in enumerate(frames):
            yield blend_frame(frame, next(params_iter, None), db, cfg, i)
        return

    # keep a bounded window of in-flight frames so memory stays flat
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        pending: deque = deque()
        for i, frame in enumerate(frames):
            # params must be drawn in frame order, not inside the pool
            p = next(params_iter, None)
            pending.append(pool.submit(blend_frame, frame, p, db, cfg, i))
            if len(pending) >= cfg.threads * 2:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()
