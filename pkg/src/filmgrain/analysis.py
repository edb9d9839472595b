"""Grain parameter estimation from source video.

The pipeline per analysis epoch: temporally denoise the target frame against
its neighbors, mask out structured regions, measure the DCT-domain variance of
the residual per intensity band, fit a curve to the grain standard deviation,
and quantize it into intensity intervals with scaling factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.fft
import scipy.ndimage

from .frame_io import Frame, FormatError
from .sei import FgcParams, Interval, IntervalModel

_CUTOFF_DEFAULT = 8
_LUMA_SIGMA_FLOOR = 0.25  # below this the component is treated as grain-free


@dataclass(frozen=True)
class DenoiseConfig:
    """Block-matching temporal averaging settings.

    Attributes:
        temporal_radius: Frames used on each side of the target.
        match_block: Side of the square matching block, in pixels. 16 keeps
            the noise-driven SAD minimum shallow enough for zero_mv_bias to
            reject; at 8 the best of a few hundred offsets routinely beats
            the undisplaced match on grain alone.
        search_range: Full-search motion range, in pixels each direction.
        blend_strength: Fraction of the motion-aligned average blended into
            the target; 1.0 is a plain average.
        zero_mv_bias: A displaced candidate replaces the undisplaced one only
            when its SAD is below zero_mv_bias times the undisplaced SAD.
            Full search over pure grain always digs up spuriously good
            matches (the minimum of a few hundred noise SADs sits well below
            their mean), and averaging those correlates the result with the
            target's own grain, deflating every variance measured from the
            residual. Genuine motion improves SAD by far more than this
            margin. 1.0 disables the bias.
    """

    temporal_radius: int = 2
    match_block: int = 16
    search_range: int = 8
    blend_strength: float = 1.0
    zero_mv_bias: float = 0.7

    def __post_init__(self):
        if self.temporal_radius < 1:
            raise ValueError("temporal_radius must be at least 1")
        if self.search_range < 0:
            raise ValueError("search_range cannot be negative")
        if not 0.0 < self.blend_strength <= 1.0:
            raise ValueError("blend_strength must be in (0, 1]")
        if not 0.0 < self.zero_mv_bias <= 1.0:
            raise ValueError("zero_mv_bias must be in (0, 1]")


@dataclass(frozen=True)
class AnalysisConfig:
    """Masking, measurement, and quantization settings.

    Attributes:
        block_size: Measurement block side; the synthesis grid is 8, keep it 8
            unless experimenting.
        edge_threshold: Gradient magnitude above which a pixel counts as an
            edge (8-bit scale).
        dilation_radius: How far (pixels) the dropped-block set grows around
            edges.
        poly_order: Degree of the standard-deviation fit.
        max_intervals: Upper bound on emitted intensity intervals.
        analysis_stride_frames: Distance between full analysis epochs.
        intensity_bins: Histogram resolution over [0, 255].
        min_bin_blocks: Bins with fewer measured blocks are discarded.
        chroma_sigma_floor: Chroma grain below this 8-bit sigma is not
            signalled.
    """

    block_size: int = 8
    edge_threshold: float = 32.0
    dilation_radius: int = 8
    poly_order: int = 3
    max_intervals: int = 10
    analysis_stride_frames: int = 32
    intensity_bins: int = 32
    min_bin_blocks: int = 10
    chroma_sigma_floor: float = 1.0

    def __post_init__(self):
        if not 1 <= self.max_intervals <= 10:
            raise ValueError("max_intervals must be in [1, 10]")
        if not 1 <= self.poly_order <= 5:
            raise ValueError("poly_order must be in [1, 5]")


@dataclass
class VariancePoints:
    """Aggregated per-intensity grain variance measurements for one plane.

    points holds (mean_intensity, grain_variance, block_count) tuples in
    increasing intensity order. The energy marginals are the mean squared
    DCT coefficients of the measured blocks, summed down each axis; the
    cutoff estimate is derived from them.
    """

    points: list[tuple[float, float, int]] = field(default_factory=list)
    col_energy: np.ndarray | None = None
    row_energy: np.ndarray | None = None
    n_blocks: int = 0

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class DenoiseResult:
    frame: Frame
    weights: tuple[np.ndarray, np.ndarray, np.ndarray]  # per-plane block grids
    passthrough: bool = False


def _block_reduce_sum(arr: np.ndarray, block: int) -> np.ndarray:
    rows = np.arange(0, arr.shape[0], block)
    cols = np.arange(0, arr.shape[1], block)
    return np.add.reduceat(np.add.reduceat(arr, rows, axis=0), cols, axis=1)


def _best_matches(
    target: np.ndarray, neighbor: np.ndarray, block: int, rng: int, zero_bias: float = 0.7
):
    """Full-search SAD alignment of neighbor onto target, per block.

    A non-zero displacement wins only when its SAD is below zero_bias times
    the undisplaced SAD (see DenoiseConfig.zero_mv_bias). Returns the
    per-block SAD of the chosen offset and the aligned neighbor samples
    assembled into a plane.
    """
    h, w = target.shape
    t = target.astype(np.int32)
    padded = np.pad(neighbor.astype(np.int32), rng, mode="edge")
    nby = (h + block - 1) // block
    nbx = (w + block - 1) // block
    best_sad = np.full((nby, nbx), np.iinfo(np.int32).max, dtype=np.int32)
    best_dy = np.zeros((nby, nbx), dtype=np.int32)
    best_dx = np.zeros((nby, nbx), dtype=np.int32)
    sad_zero = None
    for dy in range(-rng, rng + 1):
        for dx in range(-rng, rng + 1):
            cand = padded[rng + dy : rng + dy + h, rng + dx : rng + dx + w]
            # block SADs stay under 2^31 even at 10 bits (64 * 1023 per block)
            sad = _block_reduce_sum(np.abs(cand - t), block)
            if dy == 0 and dx == 0:
                sad_zero = sad
            better = sad < best_sad
            best_sad[better] = sad[better]
            best_dy[better] = dy
            best_dx[better] = dx
    keep_zero = best_sad >= zero_bias * sad_zero
    best_sad = np.where(keep_zero, sad_zero, best_sad)
    best_dy = np.where(keep_zero, 0, best_dy)
    best_dx = np.where(keep_zero, 0, best_dx)
    aligned = np.empty_like(t)
    for by in range(nby):
        y0 = by * block
        y1 = min(y0 + block, h)
        for bx in range(nbx):
            x0 = bx * block
            x1 = min(x0 + block, w)
            dy = best_dy[by, bx]
            dx = best_dx[by, bx]
            aligned[y0:y1, x0:x1] = padded[
                rng + dy + y0 : rng + dy + y1, rng + dx + x0 : rng + dx + x1
            ]
    return best_sad, aligned


def temporal_denoise(
    window: Sequence[Frame], cfg: DenoiseConfig, center: int | None = None
) -> DenoiseResult:
    """Denoise the window's center frame by motion-aligned temporal averaging.

    Each neighbor frame contributes its best-matching block when that match
    is credible (SAD within twice the per-frame median); occluded or badly
    matched blocks are left out. The per-block count of averaged frames is
    returned so variance measurements can undo the averaging bias: averaging
    W independent grains leaves the residual with (1 - 1/W) of the true
    variance.

    A window shorter than 3 frames cannot be averaged and passes the center
    frame through, flagged.
    """
    if center is None:
        center = len(window) // 2
    target_frame = window[center]
    fmt = target_frame.format
    mb = cfg.match_block
    if len(window) < 3:
        ones = tuple(
            np.ones(
                ((p.shape[0] + mb - 1) // mb, (p.shape[1] + mb - 1) // mb),
                dtype=np.int32,
            )
            for p in target_frame.planes
        )
        return DenoiseResult(frame=target_frame, weights=ones, passthrough=True)
    for f in window:
        if f.format != fmt:
            raise FormatError("denoise window mixes formats")

    out_planes = []
    weight_grids = []
    for comp in range(3):
        target = target_frame.planes[comp]
        h, w = target.shape
        acc = target.astype(np.int64)
        count = np.ones(((h + mb - 1) // mb, (w + mb - 1) // mb), dtype=np.int32)
        per_neighbor = []
        for i, f in enumerate(window):
            if i == center:
                continue
            sad, aligned = _best_matches(
                target, f.planes[comp], mb, cfg.search_range, cfg.zero_mv_bias
            )
            per_neighbor.append((sad, aligned))
        if per_neighbor:
            all_sads = np.stack([s for s, _ in per_neighbor])
            gate = 2 * np.median(all_sads) + 1
            for sad, aligned in per_neighbor:
                include = sad <= gate
                pix = np.repeat(np.repeat(include, mb, axis=0), mb, axis=1)[:h, :w]
                acc += np.where(pix, aligned, 0)
                count += include.astype(np.int32)
        count_pix = np.repeat(np.repeat(count, mb, axis=0), mb, axis=1)[:h, :w]
        mean = acc / count_pix
        if cfg.blend_strength != 1.0:
            mean = target + cfg.blend_strength * (mean - target)
        out_planes.append(np.clip(np.rint(mean), 0, fmt.max_value).astype(fmt.dtype))
        weight_grids.append(count)
    return DenoiseResult(
        frame=Frame(fmt, *out_planes), weights=tuple(weight_grids), passthrough=False
    )


def mask_flat_regions(frame: Frame, cfg: AnalysisConfig, component: int = 0) -> np.ndarray:
    """Keep/drop decision per measurement block for one plane.

    Blocks containing strong edges, or within dilation_radius of one, are
    dropped (False); smooth blocks where grain is measurable are kept (True).
    """
    plane = frame.planes[component].astype(np.float64)
    if frame.format.bit_depth > 8:
        plane = plane / (1 << (frame.format.bit_depth - 8))
    smooth = scipy.ndimage.uniform_filter(plane, size=3, mode="nearest")
    gx = np.zeros_like(smooth)
    gy = np.zeros_like(smooth)
    gx[:, :-1] = np.abs(np.diff(smooth, axis=1)) * 3.0
    gy[:-1, :] = np.abs(np.diff(smooth, axis=0)) * 3.0
    edges = np.maximum(gx, gy) > cfg.edge_threshold

    block = cfg.block_size
    rows = np.arange(0, edges.shape[0], block)
    cols = np.arange(0, edges.shape[1], block)
    has_edge = (
        np.add.reduceat(np.add.reduceat(edges.astype(np.int32), rows, axis=0), cols, axis=1) > 0
    )
    if cfg.dilation_radius > 0:
        iterations = max(1, int(np.ceil(cfg.dilation_radius / block)))
        has_edge = scipy.ndimage.binary_dilation(
            has_edge, structure=np.ones((3, 3), dtype=bool), iterations=iterations
        )
    return ~has_edge


def extract_residual(original: Frame, denoised: Frame) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Signed residual planes, original minus denoised."""
    if original.format != denoised.format:
        raise FormatError("residual requires frames of identical format")
    return tuple(
        o.astype(np.int32) - d.astype(np.int32)
        for o, d in zip(original.planes, denoised.planes)
    )


def measure_variance(
    residual: np.ndarray,
    mask: np.ndarray,
    denoised_plane: np.ndarray,
    cfg: AnalysisConfig,
    bit_depth: int = 8,
    weights: np.ndarray | None = None,
) -> VariancePoints:
    """DCT-domain grain variance per intensity bin for one plane.

    Each kept full block is transformed with the orthonormal DCT. A bin's
    variance is the mean AC energy of its blocks plus the fluctuation of
    their DC terms around the bin mean, divided by the block pixel count.
    The DC part matters: film grain is band-limited, so a visible share of
    its energy sits in each block's local mean, which AC coefficients alone
    cannot see. Centering DC per bin keeps systematic brightness error from
    the denoiser out of the estimate while the random part is kept in.

    When the per-block averaging weights from denoising are provided, each
    block's contribution is corrected by W / (W - 1) to undo the residual
    shrinkage; blocks averaged from a single frame carry no residual and
    are skipped.
    """
    block = cfg.block_size
    h, w = residual.shape
    nfy, nfx = h // block, w // block
    if nfy == 0 or nfx == 0:
        return VariancePoints()
    kept = mask[:nfy, :nfx].copy()
    if weights is not None:
        kept &= weights[:nfy, :nfx] >= 2
    if not kept.any():
        return VariancePoints()

    grid = (
        residual[: nfy * block, : nfx * block]
        .reshape(nfy, block, nfx, block)
        .transpose(0, 2, 1, 3)
    )
    blocks = grid[kept].astype(np.float64)
    coeffs = scipy.fft.dctn(blocks, type=2, norm="ortho", axes=(1, 2))
    sq = coeffs * coeffs
    n_px = block * block
    dc = coeffs[:, 0, 0]
    ac_energy = sq.sum(axis=(1, 2)) - dc * dc
    if weights is not None:
        wsel = weights[:nfy, :nfx][kept].astype(np.float64)
        kappa = wsel / (wsel - 1.0)
    else:
        kappa = np.ones(len(blocks))

    means = (
        denoised_plane[: nfy * block, : nfx * block]
        .reshape(nfy, block, nfx, block)
        .transpose(0, 2, 1, 3)[kept]
        .astype(np.float64)
        .mean(axis=(1, 2))
    )
    if bit_depth > 8:
        means = means / (1 << (bit_depth - 8))

    energy = sq.mean(axis=0)
    col_energy = energy.sum(axis=0)
    row_energy = energy.sum(axis=1)

    edges = np.linspace(0.0, 256.0, cfg.intensity_bins + 1)
    which = np.clip(np.searchsorted(edges, means, side="right") - 1, 0, cfg.intensity_bins - 1)
    points = []
    for b in range(cfg.intensity_bins):
        sel = which == b
        n = int(sel.sum())
        if n < cfg.min_bin_blocks:
            continue
        e_ac = float((ac_energy[sel] * kappa[sel]).mean())
        u = dc[sel] * np.sqrt(kappa[sel])
        e_dc = float(u.var(ddof=1)) if n > 1 else 0.0
        points.append((float(means[sel].mean()), (e_ac + e_dc) / n_px, n))
    return VariancePoints(
        points=points,
        col_energy=col_energy,
        row_energy=row_energy,
        n_blocks=int(kept.sum()),
    )


# Normalized AC-energy centroid of the 8x8 DCT marginal for grain synthesized
# at each diagonal cutoff 2..14, measured once on a flat field at unit gain
# from the reference pattern construction. Deblocking moves these by under
# 0.003, so one table serves both. The estimator inverts the mapping by
# nearest value.
_CUTOFF_CENTROIDS = (
    0.1939, 0.2053, 0.2250, 0.2587, 0.2934, 0.3239, 0.3589,
    0.3936, 0.4280, 0.4599, 0.4926, 0.5228, 0.5512,
)


def _estimate_cutoffs(points: VariancePoints) -> tuple[int, int]:
    """Cutoff pair from the AC energy centroid of the measured blocks."""
    out = []
    table = np.asarray(_CUTOFF_CENTROIDS)
    for marg in (points.col_energy, points.row_energy):
        if marg is None or marg[1:].sum() <= 0:
            out.append(_CUTOFF_DEFAULT)
            continue
        idx = np.arange(1, len(marg))
        centroid = float((marg[1:] * idx).sum() / marg[1:].sum()) / (len(marg) - 1)
        out.append(2 + int(np.argmin(np.abs(table - centroid))))
    return out[0], out[1]


def _lloyd_max(xs: np.ndarray, ys: np.ndarray, ws: np.ndarray, levels: int) -> np.ndarray:
    """Weighted Lloyd-Max of the sampled curve; returns per-sample level values.

    Uniform initialization over the value range, alternating centroid and
    boundary updates, at most 100 iterations or until the levels move less
    than half an LSB of an 8-bit quantization of the range. Empty cells are
    dropped, so the effective level count can shrink.
    """
    ymin, ymax = float(ys.min()), float(ys.max())
    if ymax - ymin <= 1e-12 or levels <= 1:
        rep = np.average(ys, weights=np.maximum(ws, 1e-9))
        return np.full_like(ys, rep)
    reps = ymin + (np.arange(levels) + 0.5) * (ymax - ymin) / levels
    tol = 0.5 * (ymax - ymin) / 255.0
    w_eff = np.maximum(ws, 1e-9)
    for _ in range(100):
        bounds = (reps[:-1] + reps[1:]) / 2.0
        # side="left" sends a value sitting exactly on a boundary to the
        # lower cell, the round-down tie rule
        assign = np.searchsorted(bounds, ys, side="left")
        new_reps = []
        for j in range(len(reps)):
            sel = assign == j
            if not sel.any():
                continue  # empty cell merges away
            new_reps.append(np.average(ys[sel], weights=w_eff[sel]))
        new_reps = np.array(new_reps)
        if len(new_reps) == len(reps) and np.abs(new_reps - reps).max() < tol:
            reps = new_reps
            break
        reps = new_reps
        if len(reps) == 1:
            break
    bounds = (reps[:-1] + reps[1:]) / 2.0 if len(reps) > 1 else np.array([])
    assign = np.searchsorted(bounds, ys, side="left")
    return reps[assign]


def _fit_sigma_curve(points: VariancePoints, cfg: AnalysisConfig):
    """Fit sqrt(variance) vs intensity; returns (xs, fitted sigma, weights, coefs)."""
    pts = points.points
    intensities = np.array([p[0] for p in pts])
    sigmas = np.sqrt(np.maximum([p[1] for p in pts], 0.0))
    counts = np.array([p[2] for p in pts], dtype=np.float64)
    lo = int(np.clip(np.floor(intensities.min()), 0, 255))
    hi = int(np.clip(np.ceil(intensities.max()), 0, 255))
    xs = np.arange(lo, hi + 1, dtype=np.float64)
    if len(pts) < cfg.poly_order + 1:
        level = float(np.sqrt(max(np.average([p[1] for p in pts], weights=counts), 0.0)))
        return xs, np.full_like(xs, level), np.ones_like(xs), np.array([level])
    degree = min(cfg.poly_order, len(pts) - 1)
    coefs = np.polyfit(intensities, sigmas, degree, w=np.sqrt(counts))
    fitted = np.clip(np.polyval(coefs, xs), 0.0, None)
    bin_width = 256.0 / cfg.intensity_bins
    weight_by_bin = {}
    for inten, _var, n in pts:
        weight_by_bin[int(inten // bin_width)] = weight_by_bin.get(int(inten // bin_width), 0) + n
    ws = np.array([weight_by_bin.get(int(x // bin_width), 0) for x in xs], dtype=np.float64)
    return xs, fitted, ws, coefs


def pick_log2_scale_factor(sigma_max: float, sigma_db: float) -> int:
    """Largest shift in [2, 7] that keeps the scaling factor within 8 bits."""
    for l2 in range(7, 1, -1):
        if round(sigma_max * (1 << (l2 + 6)) / sigma_db) <= 255:
            return l2
    return 2


def fit_and_quantize(
    points: VariancePoints,
    cfg: AnalysisConfig,
    sigma_db: float,
    log2_scale_factor: int | None = None,
) -> IntervalModel | None:
    """Turn variance measurements into an interval model for one component.

    Fits the grain standard deviation curve, quantizes it into at most
    max_intervals piecewise-constant levels (Lloyd-Max), converts each level
    into a scaling factor via the synthesis gain law
    sf = sigma * 2^(log2_scale_factor + 6) / sigma_db, and attaches the
    cutoff estimate. Returns None when there is nothing to model.
    """
    if len(points) == 0:
        return None
    xs, fitted, ws, _coefs = _fit_sigma_curve(points, cfg)
    quantized = _lloyd_max(xs, fitted, ws, cfg.max_intervals)
    if log2_scale_factor is None:
        log2_scale_factor = pick_log2_scale_factor(float(quantized.max()), sigma_db)

    # contiguous runs of one level become intervals
    runs: list[list] = []
    for i, x in enumerate(xs):
        if runs and quantized[i] == runs[-1][2]:
            runs[-1][1] = int(x)
        else:
            runs.append([int(x), int(x), quantized[i], 0.0])
    for run in runs:
        sel = (xs >= run[0]) & (xs <= run[1])
        run[3] = float(ws[sel].sum())
    while len(runs) > cfg.max_intervals:
        # merge the lightest run into whichever neighbor sits closer in level
        i = min(range(len(runs)), key=lambda k: runs[k][3])
        neighbors = [j for j in (i - 1, i + 1) if 0 <= j < len(runs)]
        j = min(neighbors, key=lambda k: abs(runs[k][2] - runs[i][2]))
        lo_i, hi_i = min(i, j), max(i, j)
        merged_w = runs[lo_i][3] + runs[hi_i][3]
        level = (runs[lo_i][2] * runs[lo_i][3] + runs[hi_i][2] * runs[hi_i][3]) / max(merged_w, 1e-9)
        runs[lo_i] = [runs[lo_i][0], runs[hi_i][1], level, merged_w]
        del runs[hi_i]

    h_cut, v_cut = _estimate_cutoffs(points)
    gain = (1 << (log2_scale_factor + 6)) / sigma_db
    intervals = tuple(
        Interval(
            lower_bound=run[0],
            upper_bound=run[1],
            scaling_factor=int(np.clip(round(run[2] * gain), 0, 255)),
            h_cutoff=h_cut,
            v_cutoff=v_cut,
        )
        for run in runs
    )
    return IntervalModel(intervals=intervals, num_model_values=3)


def _sigma_peak(points: VariancePoints, cfg: AnalysisConfig) -> float:
    if len(points) == 0:
        return 0.0
    xs, fitted, ws, _ = _fit_sigma_curve(points, cfg)
    quantized = _lloyd_max(xs, fitted, ws, cfg.max_intervals)
    return float(quantized.max())


def analyze_sequence(
    frames: Iterable[Frame],
    denoise_cfg: DenoiseConfig,
    analysis_cfg: AnalysisConfig,
    sigma_db: float,
) -> tuple[list[FgcParams], dict]:
    """Run epoch-based analysis over a frame stream.

    A full analysis runs at frame 0 and then every analysis_stride_frames;
    every frame gets the parameters of the latest completed epoch (they are
    re-sent per frame because nothing persists). Memory stays bounded by the
    denoising window, not the sequence length.

    Returns (per-frame parameter list, diagnostics dict).
    """
    radius = denoise_cfg.temporal_radius
    stride = max(1, analysis_cfg.analysis_stride_frames)
    buffer: list[tuple[int, Frame]] = []
    epoch_params: list[tuple[int, FgcParams]] = []
    diagnostics: dict = {"epochs": []}
    n_frames = 0

    def run_epoch(target_index: int) -> None:
        indices = [i for i, _ in buffer]
        pos = indices.index(target_index)
        lo = max(0, pos - radius)
        hi = min(len(buffer), pos + radius + 1)
        window = [f for _, f in buffer[lo:hi]]
        den = temporal_denoise(window, denoise_cfg, center=pos - lo)
        original = buffer[pos][1]
        residuals = extract_residual(original, den.frame)
        models: list[IntervalModel | None] = []
        sigmas: list[float] = []
        all_points: list[VariancePoints] = []
        coverage = []
        for comp in range(3):
            mask = mask_flat_regions(den.frame, analysis_cfg, component=comp)
            coverage.append(float(mask.mean()))
            # the weight grid can feed the measurement grid only when match
            # blocks tile exactly over measurement blocks
            usable_weights = None
            if not den.passthrough and denoise_cfg.match_block % analysis_cfg.block_size == 0:
                k = denoise_cfg.match_block // analysis_cfg.block_size
                usable_weights = den.weights[comp]
                if k > 1:
                    usable_weights = np.repeat(np.repeat(usable_weights, k, axis=0), k, axis=1)
            pts = measure_variance(
                residuals[comp],
                mask,
                den.frame.planes[comp],
                analysis_cfg,
                bit_depth=original.format.bit_depth,
                weights=usable_weights,
            )
            all_points.append(pts)
            sigmas.append(_sigma_peak(pts, analysis_cfg))
        floor = [_LUMA_SIGMA_FLOOR, analysis_cfg.chroma_sigma_floor, analysis_cfg.chroma_sigma_floor]
        usable = [s if s >= f else 0.0 for s, f in zip(sigmas, floor)]
        peak = max(usable)
        l2sf = pick_log2_scale_factor(peak, sigma_db) if peak > 0 else 7
        for comp in range(3):
            if usable[comp] <= 0.0:
                models.append(None)
                continue
            models.append(
                fit_and_quantize(all_points[comp], analysis_cfg, sigma_db, log2_scale_factor=l2sf)
            )
        params = FgcParams(
            log2_scale_factor=l2sf,
            component_models=tuple(models),
        )
        epoch_params.append((target_index, params))
        diagnostics["epochs"].append(
            {
                "frame": target_index,
                "mask_coverage": coverage,
                "sigma_levels": sigmas,
                "log2_scale_factor": l2sf,
                "points": [p.points for p in all_points],
                "denoise_passthrough": den.passthrough,
            }
        )

    next_epoch = 0
    for index, frame in enumerate(frames):
        n_frames = index + 1
        buffer.append((index, frame))
        # an epoch is ready once its lookahead is buffered
        while next_epoch <= index - radius:
            run_epoch(next_epoch)
            next_epoch += stride
        while buffer and buffer[0][0] < next_epoch - radius:
            buffer.pop(0)
    while next_epoch < n_frames:
        run_epoch(next_epoch)
        next_epoch += stride

    per_frame: list[FgcParams] = []
    if n_frames:
        boundaries = [i for i, _ in epoch_params]
        for f in range(n_frames):
            k = int(np.searchsorted(boundaries, f, side="right")) - 1
            k = max(k, 0)
            per_frame.append(epoch_params[k][1])
    diagnostics["n_frames"] = n_frames
    return per_frame, diagnostics
