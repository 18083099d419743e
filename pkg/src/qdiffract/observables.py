"""Photon-number observables of the diffraction field.

Closed forms for the quantities a photodetection experiment would record:
the mean-occupation pattern over the grid, the pairwise photon-number
correlation coefficient of two diffraction modes, the residual variance
left by linear regression of one mode on the other, and the
signal-idler coincidence pattern behind ghost diffraction.

For a single occupied incident mode, two diffraction modes see the photon
stream through couplings 1/h_i = lam |f(k_i - k0')|^2 < 1, and their
correlation coefficient depends on the input only through its Fano factor:

    eta = (F - 1) / sqrt((F + h1 - 1) (F + h2 - 1)),

zero for coherent light, negative for sub-Poissonian input, approaching 1
for bright thermal light.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .apertures import Aperture, ModeGrid, diffraction_factor
from .diffraction import OffGridError
from .states import ModeIndex, MultiModeInputState, SPDCPair


class PatternNullError(ValueError):
    """Diffraction mode sits on a pattern null; h diverges there."""


def h_factor(aperture: Aperture, mode: ModeIndex,
             incident_mode: ModeIndex, plane_side: float | None = None) -> float:
    """Inverse coupling 1/(lam |f(k - k0')|^2) of a diffraction mode.

    Raises ``PatternNullError`` at zeros of the diffraction factor, where
    the mode receives no light and the correlation coefficient is
    undefined. Modes are grid indices; the wavevector spacing comes from
    the aperture's plane side unless overridden.
    """
    side = aperture.plane_side if plane_side is None else plane_side
    dk = 2 * np.pi / side
    f = diffraction_factor(aperture, dk * (mode[0] - incident_mode[0]),
                           dk * (mode[1] - incident_mode[1]))
    lam = aperture.transmissivity
    coupling = lam * abs(f) ** 2
    if coupling <= 1e-20 * lam**2:
        raise PatternNullError(
            f"mode {tuple(mode)} lies on a null of the pattern "
            f"(lam |f|^2 = {coupling:.3g}); h is singular there")
    return 1.0 / coupling


def number_correlation(fano: float, h1: float, h2: float) -> float:
    """Photon-number correlation coefficient of two diffraction modes.

    Requires the physically realizable coupling region 1/h1 + 1/h2 <= 1:
    any two distinct modes of a lossy map satisfy it strictly (their
    couplings are two terms of a sum below 1), and a balanced beam
    splitter sits exactly on the boundary, where eta reaches -1 for
    photon-number input. Outside that region the formula can leave
    [-1, 1], so such inputs are rejected.
    """
    if fano < 0:
        raise ValueError(f"Fano factor must be >= 0, got {fano}")
    if min(h1, h2) <= 1 or 1 / h1 + 1 / h2 > 1 + 1e-12:
        raise ValueError(f"couplings h1={h1}, h2={h2} not realizable: "
                         "need h > 1 and 1/h1 + 1/h2 <= 1")
    d1 = fano + h1 - 1.0
    d2 = fano + h2 - 1.0
    if d1 <= 0 or d2 <= 0:
        raise ValueError(f"non-positive variance denominator: "
                         f"F + h - 1 gave {d1}, {d2}")
    return (fano - 1.0) / math.sqrt(d1 * d2)


@dataclass(frozen=True)
class CorrelationReport:
    """Photon-number statistics of a diffraction-mode pair."""

    fano: float
    h1: float
    h2: float
    mean_n1: float
    mean_n2: float
    variance_n1: float
    variance_n2: float
    covariance: float
    correlation: float
    residual_variance: float
    beta1: float
    beta2: float


def correlation_report(mean_n: float, fano: float, h1: float,
                       h2: float) -> CorrelationReport:
    """Full second-order statistics for one incident mode seen at two
    diffraction modes with inverse couplings h1, h2."""
    if mean_n <= 0:
        raise ValueError(f"incident mean occupation must be > 0, got {mean_n}")
    eta = number_correlation(fano, h1, h2)
    mean1, mean2 = mean_n / h1, mean_n / h2
    var1 = mean_n * (fano + h1 - 1.0) / h1**2
    var2 = mean_n * (fano + h2 - 1.0) / h2**2
    cov = mean_n * (fano - 1.0) / (h1 * h2)
    resid = var1 * (1.0 - eta**2)
    beta1 = cov / var2
    beta2 = mean1 - beta1 * mean2
    if not -1.0 <= eta <= 1.0 or resid < 0:
        raise ValueError("inconsistent correlation statistics: "
                         f"eta={eta}, residual={resid}")
    return CorrelationReport(fano, h1, h2, mean1, mean2, var1, var2, cov,
                             eta, resid, beta1, beta2)


def residual_variance(mean_n: float, fano: float, h1: float,
                      h2: float) -> tuple[float, float, float]:
    """Regression residual Var(n1 - beta1 n2 - beta2) and the coefficients."""
    rep = correlation_report(mean_n, fano, h1, h2)
    return rep.residual_variance, rep.beta1, rep.beta2


@dataclass(frozen=True)
class PatternResult:
    """Mean photon number per diffraction mode plus provenance metadata."""

    modes: tuple[ModeIndex, ...]
    mean_n: np.ndarray
    aperture: Aperture
    grid: ModeGrid
    state: MultiModeInputState
    transmissivity: float
    decorrelated: bool

    def __getitem__(self, mode: ModeIndex) -> float:
        return float(self.mean_n[self.modes.index(tuple(mode))])

    def total(self) -> float:
        return float(np.sum(self.mean_n))

    def visibility(self) -> float:
        """(max - min) / (max + min) over the computed modes."""
        hi, lo = float(np.max(self.mean_n)), float(np.min(self.mean_n))
        if hi + lo == 0:
            raise ValueError("visibility undefined for an all-dark pattern")
        return (hi - lo) / (hi + lo)


def mean_photon_pattern(state: MultiModeInputState, aperture: Aperture,
                        grid: ModeGrid, modes=None,
                        decorrelate: bool = False) -> PatternResult:
    """Diffraction (or interference) pattern <n_k> over the listed modes.

    Computed from the input's second moments: <n_k> = lam sum_{i,j}
    conj(f(k - k'_i)) C_ij f(k - k'_j) with C = <a_i^dag a_j> over the
    occupied incident modes. ``decorrelate`` replaces the input by the
    product of its single-mode marginals, which kills the interference
    cross terms; correlated inputs superpose coherently, decorrelated ones
    add intensities.
    """
    if abs(grid.plane_side - aperture.plane_side) > 1e-12:
        raise ValueError("grid and aperture use different plane sides: "
                         f"{grid.plane_side} vs {aperture.plane_side}")
    incident = state.signal_modes if isinstance(state, SPDCPair) else state.modes
    for m in incident:
        if not grid.contains(m):
            raise OffGridError(f"incident mode {m} outside grid "
                               f"half-extent {grid.half_extent}")
    if modes is None:
        modes = tuple(grid.indices())
    else:
        modes = tuple(tuple(m) for m in modes)
        for m in modes:
            if not grid.contains(m):
                raise OffGridError(f"pattern mode {m} outside grid "
                                   f"half-extent {grid.half_extent}")
    dk = grid.spacing
    out = np.asarray(modes, dtype=np.float64)
    factors = np.stack([
        np.atleast_1d(diffraction_factor(
            aperture, dk * (out[:, 0] - m[0]), dk * (out[:, 1] - m[1])))
        for m in incident])
    coeffs = state.second_moments(decorrelate=decorrelate)
    lam = aperture.transmissivity
    values = lam * _kernels.pattern_quadratic(factors, coeffs)
    if np.min(values) < -1e-12:
        raise ValueError(f"negative mean occupation {np.min(values):.3g}: "
                         "inconsistent second moments")
    values = np.clip(values, 0.0, None)
    return PatternResult(modes, values, aperture, grid, state, lam,
                         decorrelate)


@dataclass(frozen=True)
class GhostResult:
    """Coincidence rate between a fixed diffraction mode and scanned idlers.

    ``leading_order`` is lam |F|^2 |f(k - k')|^2, the small-amplitude
    coincidence rate; ``exact`` divides by the pair-state normalization
    1 + M |F|^2 and is what the brute-force engine reproduces. Both are
    reported so the approximation stays auditable.
    """

    fixed_mode: ModeIndex
    idler_modes: tuple[ModeIndex, ...]
    leading_order: np.ndarray
    exact: np.ndarray
    aperture: Aperture
    grid: ModeGrid
    state: SPDCPair


def ghost_g2(state: SPDCPair, aperture: Aperture, grid: ModeGrid,
             fixed_mode: ModeIndex, idler_modes=None) -> GhostResult:
    """Signal-idler coincidence pattern: fix the diffraction mode, scan idlers.

    The scanned idler modes must belong to the state's pair list. The
    coincidence rate is proportional to |f(k - k')|^2, so the aperture's
    diffraction pattern appears while scanning the beam that never touched
    it.
    """
    if abs(grid.plane_side - aperture.plane_side) > 1e-12:
        raise ValueError("grid and aperture use different plane sides: "
                         f"{grid.plane_side} vs {aperture.plane_side}")
    fixed_mode = tuple(fixed_mode)
    if not grid.contains(fixed_mode):
        raise OffGridError(f"diffraction mode {fixed_mode} outside grid")
    if idler_modes is None:
        idler_modes = state.pair_modes
    else:
        idler_modes = tuple(tuple(m) for m in idler_modes)
        missing = [m for m in idler_modes if m not in state.pair_modes]
        if missing:
            raise ValueError(f"scanned idler modes {missing} are not in the "
                             "state's pair list")
    dk = grid.spacing
    scan = np.asarray(idler_modes, dtype=np.float64)
    f = np.atleast_1d(diffraction_factor(
        aperture, dk * (fixed_mode[0] - scan[:, 0]),
        dk * (fixed_mode[1] - scan[:, 1])))
    lam = aperture.transmissivity
    leading = lam * abs(state.amplitude) ** 2 * np.abs(f) ** 2
    exact = leading / state.norm_squared
    return GhostResult(fixed_mode, idler_modes, leading, exact, aperture,
                       grid, state)
