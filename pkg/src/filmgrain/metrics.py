"""Objective measurements: PSNR between frames, grain-strength probe."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.ndimage

from .analysis import AnalysisConfig, mask_flat_regions
from .frame_io import Frame, FormatError

# Laplacian-style mask whose response to an image with iid noise sigma has
# standard deviation 6*sigma while cancelling constant and linear content.
_NOISE_KERNEL = np.array([[1, -2, 1], [-2, 4, -2], [1, -2, 1]], dtype=np.float64)
_MAD_TO_SIGMA = 0.6744897501960817  # median(|N(0,1)|)


@dataclass
class MetricReport:
    frame_count: int
    psnr_y: float
    psnr_cb: float
    psnr_cr: float
    grain_sigma: tuple[float | None, float | None, float | None] = (None, None, None)

    def to_dict(self) -> dict:
        return {
            "frame_count": self.frame_count,
            "psnr": {"Y": self.psnr_y, "Cb": self.psnr_cb, "Cr": self.psnr_cr},
            "grain_sigma": {
                "Y": self.grain_sigma[0],
                "Cb": self.grain_sigma[1],
                "Cr": self.grain_sigma[2],
            },
        }


def psnr(ref: Frame, test: Frame) -> tuple[float, float, float]:
    """Per-component PSNR in dB; math.inf for identical planes."""
    if ref.format != test.format:
        raise FormatError("psnr requires identical formats")
    peak = float(ref.format.max_value)
    out = []
    for a, b in zip(ref.planes, test.planes):
        mse = float(np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2))
        out.append(math.inf if mse == 0.0 else 10.0 * math.log10(peak * peak / mse))
    return tuple(out)


def sequence_psnr(ref_frames, test_frames) -> tuple[int, tuple[float, float, float]]:
    """Mean per-component PSNR over frames with a finite value (inf if all identical)."""
    sums = [0.0, 0.0, 0.0]
    counts = [0, 0, 0]
    n = 0
    for ref, test in zip(ref_frames, test_frames):
        vals = psnr(ref, test)
        for c, v in enumerate(vals):
            if math.isinf(v):
                continue
            sums[c] += v
            counts[c] += 1
        n += 1
    if n == 0:
        raise ValueError("no frame pairs to compare")
    means = tuple(math.inf if counts[c] == 0 else sums[c] / counts[c] for c in range(3))
    return n, means


def grain_sigma(frame: Frame, cfg: AnalysisConfig | None = None) -> tuple[float | None, float | None, float | None]:
    """Robust per-component noise sigma estimate in the 8-bit domain.

    High-pass filters each plane, keeps only blocks the flat-region mask
    accepts, and converts the median absolute response to a Gaussian sigma.
    Returns None for a component with no flat blocks to measure.
    """
    cfg = cfg or AnalysisConfig()
    out = []
    for comp, plane in enumerate(frame.planes):
        data = plane.astype(np.float64)
        if frame.format.bit_depth > 8:
            data = data / (1 << (frame.format.bit_depth - 8))
        mask = mask_flat_regions(frame, cfg, component=comp)
        block = cfg.block_size
        h, w = data.shape
        nfy, nfx = h // block, w // block
        kept = mask[:nfy, :nfx]
        if nfy == 0 or nfx == 0 or not kept.any():
            out.append(None)
            continue
        resp = scipy.ndimage.convolve(data, _NOISE_KERNEL, mode="nearest")
        grid = (
            np.abs(resp[: nfy * block, : nfx * block])
            .reshape(nfy, block, nfx, block)
            .transpose(0, 2, 1, 3)[kept]
        )
        med = float(np.median(grid))
        out.append(med / (6.0 * _MAD_TO_SIGMA))
    return tuple(out)
