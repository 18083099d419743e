"""Overlap lemma and Schlienz-Mahler correlation measure.

For boson states, tr(rho1 rho2) equals the phase-space integral of
chi1(xi) chi2(-xi) exp(-sum |xi_i|^2) over (d^2 xi / pi)^m. Gaussian
normal forms chi(xi) = exp(-xi^dag A xi) make the integral a determinant,
1/det(A1 + A2 + I); ``overlap_quadrature`` evaluates the same integral
numerically for arbitrary characteristic functions and serves as the
lemma's independent oracle.

The Schlienz-Mahler measure gamma is the normalized Frobenius distance
between a bipartite state and the product of its marginals. It measures
total correlation, not inseparability: classically correlated mixtures
score above zero too. For the thermal diffraction pair everything is
closed form; ``schlienz_mahler_fock`` recomputes gamma from an explicit
truncated density matrix.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .fock import FockDensity, partial_trace


class GaussianFormError(ValueError):
    """Matrix is not a valid (Hermitian PSD) Gaussian normal form."""


class QuadratureError(RuntimeError):
    """Phase-space quadrature failed to converge to the requested tolerance."""


@dataclass(frozen=True)
class GaussianNormalForm:
    """Hermitian PSD matrix A representing chi(xi) = exp(-xi^dag A xi)."""

    matrix: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise GaussianFormError(f"form must be square, got shape {a.shape}")
        if np.max(np.abs(a - a.conj().T)) > 1e-12:
            raise GaussianFormError("form is not Hermitian")
        a = (a + a.conj().T) / 2
        if a.shape[0] and np.min(np.linalg.eigvalsh(a)) < -1e-12:
            raise GaussianFormError("form has a negative eigenvalue")
        object.__setattr__(self, "matrix", a)

    @property
    def num_modes(self) -> int:
        return self.matrix.shape[0]

    def char(self, xi):
        """exp(-xi^dag A xi); xi has the mode index on its last axis."""
        xi = np.asarray(xi, dtype=np.complex128)
        quad = np.einsum("...i,ij,...j->...", xi.conj(), self.matrix, xi)
        return np.exp(-quad)


def thermal_form(mean_n: float) -> GaussianNormalForm:
    """Single-mode thermal state with the given mean occupation."""
    if mean_n < 0:
        raise GaussianFormError(f"mean occupation must be >= 0, got {mean_n}")
    return GaussianNormalForm(np.array([[mean_n]], dtype=np.complex128))


@dataclass(frozen=True)
class ThermalPairForm:
    """Two diffraction modes of a thermal incident beam, plus the scalars
    that the closed-form purity algebra runs on.

    ``mean_n1``/``mean_n2`` are the diffracted mean occupations
    mean_n * lam * |f_i|^2 and ``cross_mean`` their geometric mean,
    mean_n * lam * |f1 f2|; equal couplings make all three coincide.
    """

    form: GaussianNormalForm
    mean_n1: float
    mean_n2: float
    cross_mean: float


def thermal_diffraction_form(mean_n: float, transmissivity: float,
                             f1: complex, f2: complex) -> ThermalPairForm:
    """Gaussian form of two diffraction modes fed by one thermal mode.

    The joint characteristic function is exp(-mean_n * lam *
    |xi1 f1 + xi2 f2|^2), a rank-one form: the pair stays perfectly
    correlated in amplitude even though each marginal is thermal.
    """
    if mean_n < 0:
        raise GaussianFormError(f"mean occupation must be >= 0, got {mean_n}")
    if not 0 < transmissivity <= 1:
        raise GaussianFormError(f"transmissivity must be in (0, 1], "
                                f"got {transmissivity}")
    v = np.array([f1, f2], dtype=np.complex128)
    a = mean_n * transmissivity * np.outer(v.conj(), v)
    return ThermalPairForm(GaussianNormalForm(a),
                           mean_n * transmissivity * abs(f1) ** 2,
                           mean_n * transmissivity * abs(f2) ** 2,
                           mean_n * transmissivity * abs(f1 * f2))


def marginal_form(form: GaussianNormalForm, keep) -> GaussianNormalForm:
    """Reduced state on the kept modes: delete the other rows and columns.

    Valid for normal-ordered forms because setting the dropped xi
    components to zero is exactly the partial trace.
    """
    keep = tuple(keep) if not isinstance(keep, int) else (keep,)
    return GaussianNormalForm(form.matrix[np.ix_(keep, keep)])


def product_form(*forms: GaussianNormalForm) -> GaussianNormalForm:
    """Tensor product of independent Gaussian states: block diagonal."""
    n = sum(f.num_modes for f in forms)
    out = np.zeros((n, n), dtype=np.complex128)
    at = 0
    for f in forms:
        m = f.num_modes
        out[at:at + m, at:at + m] = f.matrix
        at += m
    return GaussianNormalForm(out)


def overlap_gaussian(form1: GaussianNormalForm,
                     form2: GaussianNormalForm) -> float:
    """tr(rho1 rho2) = 1/det(A1 + A2 + I), exactly."""
    if form1.num_modes != form2.num_modes:
        raise GaussianFormError(f"mode counts differ: {form1.num_modes} "
                                f"vs {form2.num_modes}")
    total = form1.matrix + form2.matrix + np.eye(form1.num_modes)
    eigs = np.linalg.eigvalsh(total)
    if np.min(eigs) <= 0:
        raise GaussianFormError("overlap integral diverges: combined form "
                                "not positive definite")
    return float(1.0 / np.prod(eigs))


_GH_ORDERS = (12, 24, 48, 96, 192)


def overlap_quadrature(chi1, chi2, num_modes: int,
                       abs_tol: float = 1e-6) -> float:
    """tr(rho1 rho2) by numerical phase-space integration.

    Evaluates the overlap integral with tensor Gauss-Hermite rules of
    increasing order until two successive estimates agree within the
    absolute tolerance; the exp(-|xi|^2) factor is the quadrature weight,
    so Gaussian-dominated integrands converge geometrically. The
    characteristic functions must be vectorized over a trailing mode axis.
    Independent of the determinant evaluation by construction.
    """
    if num_modes not in (1, 2):
        raise ValueError(f"quadrature oracle supports 1 or 2 modes, "
                         f"got {num_modes}")
    previous = None
    for order in _GH_ORDERS:
        if num_modes == 2 and order > 96:
            break
        value = _gh_overlap(chi1, chi2, num_modes, order)
        if abs(value.imag) <= abs_tol and previous is not None \
                and abs(value - previous) <= abs_tol / 2:
            return float(value.real)
        previous = value
    raise QuadratureError(
        f"overlap quadrature did not converge to {abs_tol:.1g} "
        f"(last change {abs(value - previous):.3g})")


def _gh_overlap(chi1, chi2, num_modes: int, order: int) -> complex:
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    if num_modes == 1:
        xi = (nodes[:, None] + 1j * nodes[None, :])[..., None]
        w = weights[:, None] * weights[None, :]
        total = np.sum(w * chi1(xi) * chi2(-xi))
    else:
        w3 = (weights[:, None, None] * weights[None, :, None]
              * weights[None, None, :])
        im1, re2, im2 = np.meshgrid(nodes, nodes, nodes, indexing="ij")
        xi = np.empty(im1.shape + (2,), dtype=np.complex128)
        xi[..., 1] = re2 + 1j * im2
        total = 0.0 + 0.0j
        for i in range(order):
            xi[..., 0] = nodes[i] + 1j * im1
            total += weights[i] * np.sum(w3 * chi1(xi) * chi2(-xi))
    return complex(total) / np.pi**num_modes


def thermal_overlap_terms(mean_n: float, transmissivity: float, f1: complex,
                          f2: complex) -> tuple[float, float, float]:
    """The three overlaps entering gamma^2 for the thermal diffraction pair.

    Returns (tr(rho^2), tr(rho rho_a x rho_b), tr((rho_a x rho_b)^2)),
    each via the exact Gaussian determinant.
    """
    pair = thermal_diffraction_form(mean_n, transmissivity, f1, f2)
    marginals = product_form(marginal_form(pair.form, 0),
                             marginal_form(pair.form, 1))
    return (overlap_gaussian(pair.form, pair.form),
            overlap_gaussian(pair.form, marginals),
            overlap_gaussian(marginals, marginals))


def _gamma_from_scalars(mean1: float, mean2: float, cross: float) -> float:
    x1 = 2 * mean1 + 1
    x2 = 2 * mean2 + 1
    g2 = (1.0 / (x1 * x2 - 4 * cross**2)
          - 2.0 / (x1 * x2 - cross**2)
          + 1.0 / (x1 * x2))
    if g2 < -1e-10:
        warnings.warn(f"correlation measure squared came out {g2:.3g} < 0; "
                      "clamping to 0", RuntimeWarning, stacklevel=3)
    return math.sqrt(max(g2, 0.0))


def schlienz_mahler_thermal(mean_n: float, transmissivity: float,
                            f1: complex, f2: complex) -> float:
    """Correlation measure of two diffraction modes, thermal input.

    Closed form from the three Gaussian overlaps; the infinite-dimensional
    limit makes the dimension prefactor 1. Vanishes at zero and at
    infinite incident brightness, peaking in between.
    """
    pair = thermal_diffraction_form(mean_n, transmissivity, f1, f2)
    return _gamma_from_scalars(pair.mean_n1, pair.mean_n2, pair.cross_mean)


def symmetric_gamma(cross_mean):
    """gamma for equal couplings, as a function of the diffracted-mode
    mean occupation (vectorized)."""
    y = np.asarray(cross_mean, dtype=np.float64)
    if np.any(y < 0):
        raise ValueError("mean occupation must be >= 0")
    g2 = (1.0 / (4 * y + 1)
          - 2.0 / ((3 * y + 1) * (y + 1))
          + 1.0 / (2 * y + 1) ** 2)
    out = np.sqrt(np.clip(g2, 0.0, None))
    return float(out) if out.ndim == 0 else out


def schlienz_mahler_fock(rho: FockDensity) -> float:
    """Correlation measure from an explicit two-mode density matrix.

    gamma = sqrt(N/(N-1) tr[(rho - rho_a x rho_b)^2]) with N the matrix
    dimension; marginals by partial trace. Finite-dimensional counterpart
    of the thermal closed form (whose dimension prefactor is 1).
    """
    if rho.num_modes != 2:
        raise ValueError(f"measure defined for bipartite states, "
                         f"got {rho.num_modes} modes")
    n = rho.dimension
    if n <= 1:
        raise ValueError("dimension factor N/(N-1) degenerate at N=1")
    full = rho.matrix / rho.trace
    rho_a = partial_trace(rho, (0,))
    rho_b = partial_trace(rho, (1,))
    prod = np.kron(rho_a.matrix / rho_a.trace, rho_b.matrix / rho_b.trace)
    diff = full - prod
    fro2 = float(np.sum(np.abs(diff) ** 2))
    return math.sqrt(n / (n - 1) * fro2)
