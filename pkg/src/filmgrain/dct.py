"""Fixed-point 64-point 2-D DCT pair used by the grain pattern machinery.

The forward transform uses an integer table T = round(256 * C), where C is the
orthonormal DCT-II matrix, so the constants carry 8 fractional bits. Because T
is a rounded matrix, T^T is not its inverse to the accuracy required here; the
inverse instead uses its own table U = round(2^24 * T^-1). Both directions run
as float64 matrix products whose intermediate values stay far below 2^53, so
every arithmetic step is exact integer math and the results are independent of
summation order, BLAS backend, and thread count.

Scaling contract:
    fwd_dct64:  x (integers, |x| < 2^11)  ->  Y = round-ish(4096 * DCT2(x))
    inv_dct64:  Y                         ->  x recovered, error <= 1 LSB
    idct_unscaled: Q -> U Q U^T exactly (value = 2^32 * IDCT2(Q)), no rounding

All right shifts round half up (add 2^(k-1), floor), applied symmetrically on
negatives, which keeps the pair deterministic and platform-independent.
"""

from __future__ import annotations

import numpy as np
import scipy.fft

N = 64
FRAC_FWD = 8  # fractional bits in the forward table
FRAC_INV = 24  # fractional bits in the inverse table

# Interchange format: fwd output carries 12 fractional bits relative to the
# orthonormal coefficients. T x T^T sits at 2^16 scale, so the forward shift
# is 4; the inverse must then strip 24 + 24 - 4 = 44 bits, split 14 + 30 so
# both matrix products stay exactly representable.
_FWD_SHIFT = 4
_INV_SHIFT_1 = 14
_INV_SHIFT_2 = 30


def _float_basis() -> np.ndarray:
    return scipy.fft.dct(np.eye(N), type=2, norm="ortho", axis=0)


def _build_tables() -> tuple[np.ndarray, np.ndarray]:
    c = _float_basis()
    t = np.rint(c * (1 << FRAC_FWD))
    u = np.rint(np.linalg.inv(t) * (1 << FRAC_INV))
    return t, u

T, U = _build_tables()


def _shift_round(x: np.ndarray, bits: int) -> np.ndarray:
    return np.floor((x + float(1 << (bits - 1))) / float(1 << bits))


def fwd_dct64(blocks: np.ndarray) -> np.ndarray:
    """Forward transform of (..., 64, 64) integer blocks, output at q12 scale."""
    x = np.asarray(blocks, dtype=np.float64)
    if np.abs(x).max(initial=0.0) >= (1 << 11):
        raise ValueError("forward DCT input must satisfy |x| < 2^11")
    y = np.matmul(np.matmul(T, x), T.T)
    return _shift_round(y, _FWD_SHIFT)


def inv_dct64(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of fwd_dct64. Round-trip error is at most 1 per sample."""
    y = np.asarray(coeffs, dtype=np.float64)
    a = _shift_round(np.matmul(U, y), _INV_SHIFT_1)
    return _shift_round(np.matmul(a, U.T), _INV_SHIFT_2)


def idct_unscaled(coeffs: np.ndarray) -> np.ndarray:
    """Exact integer product U @ coeffs @ U^T, as int64.

    The result equals 2^32 times the orthonormal inverse transform of
    coeffs (up to the table rounding frozen into U). Inputs must be small
    enough that the product stays below 2^53; |coeffs| <= 2^13 is ample.
    """
    q = np.asarray(coeffs, dtype=np.float64)
    if np.abs(q).max(initial=0.0) > (1 << 13):
        raise ValueError("idct_unscaled input must satisfy |q| <= 2^13")
    p = np.matmul(np.matmul(U, q), U.T)
    return np.rint(p).astype(np.int64)


def float_dct2(blocks: np.ndarray) -> np.ndarray:
    """Orthonormal floating 2-D DCT used as the reference transform in tests."""
    return scipy.fft.dctn(np.asarray(blocks, dtype=np.float64), type=2, norm="ortho", axes=(-2, -1))
