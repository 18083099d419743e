"""Hot numeric kernels: numba-jitted loops with a pure-numpy fallback.

The backend is chosen once at import time from the environment variable
``QDIFFRACT_NUMBA`` ("0" disables JIT and selects the numpy path). Both
backends are importable directly for benchmarking and cross-checking; see
``benchmarks/bench_kernels.py``.

Everything here is plain array math; all physics lives in the calling
modules.
"""

from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("QDIFFRACT_NUMBA", "1") != "0"


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------

def rect_union_factor_numpy(kx, ky, widths, heights, cxs, cys, scale):
    """Fourier amplitude of a union of axis-aligned rectangles.

    Returns scale * sum_i w_i h_i sinc(kx w_i/2) sinc(ky h_i/2)
    exp(-i (kx cx_i + ky cy_i)) evaluated elementwise over kx, ky.
    sinc is the unnormalized sin(u)/u.
    """
    out = np.zeros(np.broadcast(kx, ky).shape, dtype=np.complex128)
    for w, h, cx, cy in zip(widths, heights, cxs, cys):
        amp = w * h * np.sinc(kx * (w / 2) / np.pi) * np.sinc(ky * (h / 2) / np.pi)
        out += amp * np.exp(-1j * (kx * cx + ky * cy))
    return scale * out


def pattern_quadratic_numpy(factors, coeffs):
    """Mean-occupation pattern sum_ij conj(F_i[k]) C_ij F_j[k] per point k.

    factors: (n_in, n_k) complex, coeffs: (n_in, n_in) Hermitian.
    Returns a real (n_k,) array (imaginary part discarded; it is zero for
    Hermitian coeffs up to rounding).
    """
    return np.einsum("ik,ij,jk->k", factors.conj(), coeffs, factors).real


def abs2_sum_numpy(values):
    """Sum of |v|^2 over a complex array."""
    return float(np.sum(values.real**2 + values.imag**2))


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _sinc(u):
        if u == 0.0:
            return 1.0
        return np.sin(u) / u

    @njit(cache=True)
    def _rect_union_factor_flat(kx, ky, widths, heights, cxs, cys, scale):
        n = kx.shape[0]
        m = widths.shape[0]
        out = np.empty(n, dtype=np.complex128)
        for p in range(n):
            acc = 0.0 + 0.0j
            for i in range(m):
                amp = (widths[i] * heights[i]
                       * _sinc(kx[p] * widths[i] * 0.5)
                       * _sinc(ky[p] * heights[i] * 0.5))
                phase = -(kx[p] * cxs[i] + ky[p] * cys[i])
                acc += amp * (np.cos(phase) + 1j * np.sin(phase))
            out[p] = scale * acc
        return out

    def rect_union_factor_numba(kx, ky, widths, heights, cxs, cys, scale):
        kx = np.asarray(kx, dtype=np.float64)
        ky = np.asarray(ky, dtype=np.float64)
        kxb, kyb = np.broadcast_arrays(kx, ky)
        shape = kxb.shape
        out = _rect_union_factor_flat(
            np.ascontiguousarray(kxb).ravel(),
            np.ascontiguousarray(kyb).ravel(),
            np.asarray(widths, dtype=np.float64),
            np.asarray(heights, dtype=np.float64),
            np.asarray(cxs, dtype=np.float64),
            np.asarray(cys, dtype=np.float64),
            float(scale),
        )
        return out.reshape(shape)

    @njit(cache=True)
    def _pattern_quadratic(factors, coeffs):
        n_in, n_k = factors.shape
        out = np.empty(n_k, dtype=np.float64)
        for p in range(n_k):
            acc = 0.0 + 0.0j
            for i in range(n_in):
                fi = np.conj(factors[i, p])
                for j in range(n_in):
                    acc += fi * coeffs[i, j] * factors[j, p]
            out[p] = acc.real
        return out

    def pattern_quadratic_numba(factors, coeffs):
        return _pattern_quadratic(
            np.ascontiguousarray(factors, dtype=np.complex128),
            np.ascontiguousarray(coeffs, dtype=np.complex128),
        )

    @njit(cache=True)
    def _abs2_sum(values):
        acc = 0.0
        for p in range(values.shape[0]):
            v = values[p]
            acc += v.real * v.real + v.imag * v.imag
        return acc

    def abs2_sum_numba(values):
        return float(_abs2_sum(
            np.ascontiguousarray(values, dtype=np.complex128).ravel()))

    rect_union_factor = rect_union_factor_numba
    pattern_quadratic = pattern_quadratic_numba
    abs2_sum = abs2_sum_numba
else:
    rect_union_factor = rect_union_factor_numpy
    pattern_quadratic = pattern_quadratic_numpy
    abs2_sum = abs2_sum_numpy
