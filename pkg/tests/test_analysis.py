import numpy as np
import pytest
import scipy.ndimage

from filmgrain.analysis import (
    AnalysisConfig,
    DenoiseConfig,
    analyze_sequence,
    extract_residual,
    fit_and_quantize,
    mask_flat_regions,
    measure_variance,
    pick_log2_scale_factor,
    temporal_denoise,
    VariancePoints,
)
from filmgrain.frame_io import Frame, FormatError, VideoFormat, flat_frame, make_frame
from filmgrain.sei import Interval, IntervalModel
from filmgrain.synthesis import FgcParams, SynthesisConfig, blend_frame

from conftest import noise_frame


def test_denoise_config_validation():
    with pytest.raises(ValueError):
        DenoiseConfig(temporal_radius=0)
    with pytest.raises(ValueError):
        DenoiseConfig(search_range=-1)
    with pytest.raises(ValueError):
        DenoiseConfig(blend_strength=0.0)
    with pytest.raises(ValueError):
        DenoiseConfig(blend_strength=1.5)


def test_analysis_config_validation():
    with pytest.raises(ValueError):
        AnalysisConfig(max_intervals=0)
    with pytest.raises(ValueError):
        AnalysisConfig(max_intervals=11)
    with pytest.raises(ValueError):
        AnalysisConfig(poly_order=0)


def test_denoise_identical_frames_is_identity():
    fmt = VideoFormat(64, 32)
    frame = noise_frame(fmt, 128, 5.0, seed=1)
    result = temporal_denoise([frame] * 5, DenoiseConfig())
    assert not result.passthrough
    assert np.array_equal(result.frame.y, frame.y)
    assert all(np.all(w == 5) for w in result.weights)


def test_denoise_short_window_passes_through():
    fmt = VideoFormat(32, 32)
    frame = noise_frame(fmt, 100, 3.0, seed=2)
    result = temporal_denoise([frame, frame], DenoiseConfig())
    assert result.passthrough
    assert result.frame is frame
    assert all(np.all(w == 1) for w in result.weights)


def test_denoise_rejects_mixed_formats():
    a = flat_frame(VideoFormat(32, 32), 10)
    b = flat_frame(VideoFormat(64, 32), 10)
    with pytest.raises(FormatError):
        temporal_denoise([a, b, a], DenoiseConfig())


def test_denoise_averages_independent_noise_down():
    fmt = VideoFormat(64, 64)
    clean = 128
    window = [noise_frame(fmt, clean, 6.0, seed=10 + i) for i in range(5)]
    result = temporal_denoise(window, DenoiseConfig())
    target_err = float(np.std(window[2].y.astype(np.float64) - clean))
    den_err = float(np.std(result.frame.y.astype(np.float64) - clean))
    # five-way averaging should cut the noise roughly in half or better
    assert den_err < 0.6 * target_err


def test_denoise_tracks_horizontal_pan():
    fmt = VideoFormat(128, 128)
    rng = np.random.default_rng(31)
    texture = scipy.ndimage.gaussian_filter(rng.uniform(60, 200, (128, 128)), 6.0)
    mid = np.full((64, 64), 128, np.uint8)
    window = []
    for i in range(5):
        shifted = np.roll(texture, (i - 2) * 3, axis=1)
        noisy = shifted + rng.normal(0, 4.0, shifted.shape)
        window.append(
            make_frame(fmt, np.clip(np.rint(noisy), 0, 255), mid, mid)
        )
    result = temporal_denoise(window, DenoiseConfig())
    target_err = float(np.abs(window[2].y.astype(np.float64) - texture).mean())
    den_err = float(np.abs(result.frame.y.astype(np.float64) - texture).mean())
    assert den_err < 0.7 * target_err
    # most blocks found at least two credible neighbors
    assert float((result.weights[0] >= 3).mean()) > 0.8


def test_mask_keeps_flat_regions():
    frame = noise_frame(VideoFormat(64, 64), 128, 2.0, seed=3)
    mask = mask_flat_regions(frame, AnalysisConfig())
    assert mask.shape == (8, 8)
    assert mask.all()


def test_mask_drops_edges_and_their_surroundings():
    fmt = VideoFormat(128, 64)
    y = np.full((64, 128), 60, np.uint8)
    y[:, 64:] = 200  # hard vertical edge at column 64
    frame = make_frame(fmt, y, np.full((32, 64), 128), np.full((32, 64), 128))
    cfg = AnalysisConfig()
    mask = mask_flat_regions(frame, cfg)
    block_cols = np.arange(mask.shape[1]) * cfg.block_size
    near = np.abs(block_cols - 64) <= cfg.dilation_radius
    assert not mask[:, near].any()
    assert mask[:, 0].all()
    assert mask[:, -1].all()


def test_mask_scales_10bit_before_thresholding():
    fmt = VideoFormat(64, 64, 10)
    frame = noise_frame(fmt, 512, 8.0, seed=4)  # sigma 2 in 8-bit terms
    assert mask_flat_regions(frame, AnalysisConfig()).all()


def test_extract_residual_signed_difference():
    fmt = VideoFormat(16, 16)
    a = flat_frame(fmt, 100)
    b = flat_frame(fmt, 103)
    res = extract_residual(a, b)
    assert np.all(res[0] == -3)
    assert res[0].dtype == np.int32
    with pytest.raises(FormatError):
        extract_residual(a, flat_frame(VideoFormat(32, 16), 0))


def _all_keep_mask(h, w, block=8):
    return np.ones((h // block, w // block), dtype=bool)


def test_measure_variance_recovers_iid_noise():
    rng = np.random.default_rng(40)
    h = w = 128
    residual = np.rint(rng.normal(0, 5.0, (h, w))).astype(np.int32)
    denoised = np.full((h, w), 128, np.uint8)
    pts = measure_variance(residual, _all_keep_mask(h, w), denoised, AnalysisConfig())
    assert pts.n_blocks == 16 * 16
    assert len(pts) == 1
    mean, var, count = pts.points[0]
    assert mean == pytest.approx(128, abs=0.5)
    assert count == 256
    assert var == pytest.approx(25.0, rel=0.10)


def test_measure_variance_uniform_offset_cancels():
    # a constant brightness error across the plane is systematic, not grain
    h = w = 64
    residual = np.full((h, w), 3, dtype=np.int32)
    denoised = np.full((h, w), 90, np.uint8)
    pts = measure_variance(residual, _all_keep_mask(h, w), denoised, AnalysisConfig())
    assert len(pts) == 1
    assert pts.points[0][1] == pytest.approx(0.0, abs=1e-9)


def test_measure_variance_counts_block_mean_fluctuation():
    # grain whose energy sits entirely in each block's local mean must still
    # be measured; only the across-bin systematic part cancels
    rng = np.random.default_rng(77)
    h = w = 160
    levels = np.rint(rng.normal(0, 4.0, (h // 8, w // 8)))
    residual = np.repeat(np.repeat(levels, 8, axis=0), 8, axis=1).astype(np.int32)
    denoised = np.full((h, w), 90, np.uint8)
    pts = measure_variance(residual, _all_keep_mask(h, w), denoised, AnalysisConfig())
    assert len(pts) == 1
    assert pts.points[0][1] == pytest.approx(float(levels.var(ddof=1)), rel=1e-6)


def test_measure_variance_weight_correction_factor():
    rng = np.random.default_rng(41)
    h = w = 96
    residual = np.rint(rng.normal(0, 4.0, (h, w))).astype(np.int32)
    denoised = np.full((h, w), 70, np.uint8)
    raw = measure_variance(residual, _all_keep_mask(h, w), denoised, AnalysisConfig())
    weights = np.full((h // 8, w // 8), 2, np.int32)
    corrected = measure_variance(
        residual, _all_keep_mask(h, w), denoised, AnalysisConfig(), weights=weights
    )
    assert corrected.points[0][1] == pytest.approx(2.0 * raw.points[0][1], rel=1e-12)


def test_measure_variance_skips_single_weight_blocks():
    h = w = 64
    residual = np.ones((h, w), np.int32)
    denoised = np.full((h, w), 70, np.uint8)
    weights = np.ones((8, 8), np.int32)
    pts = measure_variance(residual, _all_keep_mask(h, w), denoised, AnalysisConfig(), weights=weights)
    assert len(pts) == 0
    assert pts.n_blocks == 0


def test_measure_variance_separates_intensity_bins():
    rng = np.random.default_rng(42)
    h, w = 64, 128
    denoised = np.full((h, w), 64, np.uint8)
    denoised[:, 64:] = 192
    residual = np.empty((h, w), np.int32)
    residual[:, :64] = np.rint(rng.normal(0, 3.0, (h, 64)))
    residual[:, 64:] = np.rint(rng.normal(0, 7.0, (h, 64)))
    pts = measure_variance(residual, _all_keep_mask(h, w), denoised, AnalysisConfig())
    assert len(pts) == 2
    (m1, v1, _), (m2, v2, _) = pts.points
    assert m1 == pytest.approx(64, abs=1)
    assert m2 == pytest.approx(192, abs=1)
    assert v1 == pytest.approx(9.0, rel=0.15)
    assert v2 == pytest.approx(49.0, rel=0.15)


def test_measure_variance_empty_when_nothing_kept():
    h = w = 32
    residual = np.zeros((h, w), np.int32)
    denoised = np.full((h, w), 70, np.uint8)
    pts = measure_variance(residual, np.zeros((4, 4), bool), denoised, AnalysisConfig())
    assert len(pts) == 0


def test_pick_log2_scale_factor_extremes():
    sigma_db = 36.0
    assert pick_log2_scale_factor(0.01, sigma_db) == 7
    # sigma equal to the database sigma needs sf 2^(l2+6) > 255 at every
    # legal shift, so the chooser falls back to the smallest
    assert pick_log2_scale_factor(36.0, sigma_db) == 2
    # largest sigma still representable at the widest shift
    edge = 255.0 * sigma_db / 8192.0
    assert pick_log2_scale_factor(edge, sigma_db) == 7
    assert pick_log2_scale_factor(edge * 1.05, sigma_db) == 6
    values = [pick_log2_scale_factor(s, sigma_db) for s in np.linspace(0.01, 40, 200)]
    assert all(b <= a for a, b in zip(values, values[1:]))


def _points_from_sigma(profile, count=40):
    """VariancePoints with the given (intensity, sigma) samples."""
    return VariancePoints(points=[(x, s * s, count) for x, s in profile])


def test_fit_and_quantize_constant_curve(db):
    sigma = 2.5
    pts = _points_from_sigma([(float(x), sigma) for x in range(20, 240, 8)])
    model = fit_and_quantize(pts, AnalysisConfig(), db.sigma_db, log2_scale_factor=4)
    assert model is not None
    assert len(model.intervals) == 1
    iv = model.intervals[0]
    assert iv.lower_bound == 20
    assert iv.upper_bound == 236
    expect_sf = round(sigma * (1 << 10) / db.sigma_db)
    assert abs(iv.scaling_factor - expect_sf) <= 1
    # no spectral measurements: the default cutoff pair
    assert (iv.h_cutoff, iv.v_cutoff) == (8, 8)


def test_fit_and_quantize_two_plateaus(db):
    profile = [(float(x), 2.0 if x < 128 else 6.0) for x in range(16, 240, 4)]
    cfg = AnalysisConfig(poly_order=3, max_intervals=2)
    model = fit_and_quantize(_points_from_sigma(profile), cfg, db.sigma_db, log2_scale_factor=4)
    assert len(model.intervals) == 2
    lo, hi = model.intervals
    assert hi.lower_bound == lo.upper_bound + 1
    assert abs(hi.lower_bound - 128) <= 8
    gain = (1 << 10) / db.sigma_db
    assert lo.scaling_factor == pytest.approx(2.0 * gain, rel=0.35)
    assert hi.scaling_factor == pytest.approx(6.0 * gain, rel=0.35)
    assert lo.scaling_factor < hi.scaling_factor


def test_fit_and_quantize_respects_max_intervals(db):
    rng = np.random.default_rng(5)
    profile = [(float(x), float(1 + 5 * rng.random())) for x in range(10, 250, 5)]
    for cap in (1, 3, 10):
        model = fit_and_quantize(
            _points_from_sigma(profile),
            AnalysisConfig(max_intervals=cap, poly_order=5),
            db.sigma_db,
            log2_scale_factor=3,
        )
        assert 1 <= len(model.intervals) <= cap
        bounds = [(iv.lower_bound, iv.upper_bound) for iv in model.intervals]
        assert bounds == sorted(bounds)
        for a, b in zip(model.intervals, model.intervals[1:]):
            assert b.lower_bound == a.upper_bound + 1


def test_fit_and_quantize_empty_points(db):
    assert fit_and_quantize(VariancePoints(), AnalysisConfig(), db.sigma_db) is None


def test_closed_loop_single_block_recovery(db):
    # inject known grain on a flat field, measure it straight back
    injected_sf, l2sf, cut = 40, 3, 8
    params = FgcParams(
        log2_scale_factor=l2sf,
        component_models=(
            IntervalModel((Interval(0, 255, injected_sf, cut, cut),), 3),
            None,
            None,
        ),
    )
    frame = flat_frame(VideoFormat(256, 256), 128)
    out, _ = blend_frame(frame, params, db, SynthesisConfig(master_seed=11, deblock_enabled=False))
    residual = out.y.astype(np.int32) - 128
    denoised = np.full((256, 256), 128, np.uint8)
    pts = measure_variance(residual, _all_keep_mask(256, 256), denoised, AnalysisConfig())
    model = fit_and_quantize(pts, AnalysisConfig(), db.sigma_db, log2_scale_factor=l2sf)
    assert len(model.intervals) == 1
    iv = model.intervals[0]
    assert iv.scaling_factor == pytest.approx(injected_sf, rel=0.25)
    assert abs(iv.h_cutoff - cut) <= 2
    assert abs(iv.v_cutoff - cut) <= 2


def test_analyze_sequence_epoch_schedule():
    fmt = VideoFormat(32, 32)
    frames = [noise_frame(fmt, 128, 2.0, seed=i) for i in range(100)]
    cfg = AnalysisConfig(analysis_stride_frames=32, min_bin_blocks=1)
    params, diag = analyze_sequence(frames, DenoiseConfig(), cfg, sigma_db=36.0)
    assert len(params) == 100
    assert diag["n_frames"] == 100
    epochs = [e["frame"] for e in diag["epochs"]]
    assert epochs == [0, 32, 64, 96]
    # every frame carries the latest completed epoch's parameters
    assert params[31] is params[0]
    assert params[32] is not params[31] or params[32] == params[31]
    assert params[99] is params[96]


def test_analyze_sequence_finds_luma_noise_only():
    fmt = VideoFormat(64, 64)
    rng = np.random.default_rng(50)
    frames = []
    mid = np.full((32, 32), 128, np.uint8)
    for i in range(5):
        y = np.clip(np.rint(128 + rng.normal(0, 4.0, (64, 64))), 0, 255).astype(np.uint8)
        frames.append(Frame(fmt, y, mid, mid))
    params, diag = analyze_sequence(
        frames, DenoiseConfig(), AnalysisConfig(min_bin_blocks=1), sigma_db=36.0
    )
    p = params[0]
    assert p.component_models[0] is not None
    assert p.component_models[1] is None
    assert p.component_models[2] is None
    sf = p.component_models[0].intervals[0].scaling_factor
    sigma = sf * 36.0 / (1 << (p.log2_scale_factor + 6))
    assert sigma == pytest.approx(4.0, rel=0.4)


def test_analyze_sequence_clean_video_signals_nothing():
    fmt = VideoFormat(32, 32)
    frames = [flat_frame(fmt, 100) for _ in range(5)]
    params, _ = analyze_sequence(frames, DenoiseConfig(), AnalysisConfig(), sigma_db=36.0)
    assert all(m is None for m in params[0].component_models)


def test_analyze_sequence_single_frame():
    frames = [noise_frame(VideoFormat(32, 32), 128, 3.0, seed=9)]
    params, diag = analyze_sequence(frames, DenoiseConfig(), AnalysisConfig(), sigma_db=36.0)
    assert len(params) == 1
    assert diag["epochs"][0]["denoise_passthrough"]
