"""Brute-force truncated-Fock-space engine.

States and channels are explicit dense matrices on m modes with per-mode
occupation 0..cutoff-1 (total dimension cutoff**m), giving independent
ground truth for every closed form in the package. A lossy mode map is
realized exactly: the map is completed to a unitary with vacuum ancillas,
the unitary is lifted to Fock space by exponentiating its quadratic
generator, and loss modes are traced out. The lifted unitary conserves
photon number within the block of modes it mixes, so the channel is exact
whenever the mapped modes jointly hold at most cutoff-1 photons; support
above that is detected and reported instead of silently clipped.

Deliberately small-scale: intended for total dimensions up to a few
thousand, not for production simulation.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, schur

from .diffraction import dilate_contraction
from .states import (BeamSplitterFock, Coherent, FockState, ModeMismatchError,
                     ProductState, SPDCPair, Thermal, UndefinedMomentError)


class CutoffTooSmallError(ValueError):
    """The requested state does not fit under the occupation cutoff."""


class CutoffOverflowError(RuntimeError):
    """Channel input has support above the cutoff; result would be clipped."""


class CutoffAccuracyError(RuntimeError):
    """Tail-sensitivity estimate of a cutoff-limited value exceeds tolerance."""


@dataclass(frozen=True)
class FockDensity:
    """Dense density operator on ``num_modes`` modes at a common cutoff.

    ``declared_defect`` carries the tail mass removed by truncating an
    infinite-tailed state (thermal, coherent); the trace is allowed to fall
    short of 1 by exactly that amount.
    """

    matrix: np.ndarray
    num_modes: int
    cutoff: int
    declared_defect: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        dim = self.cutoff**self.num_modes
        if m.shape != (dim, dim):
            raise ValueError(f"matrix shape {m.shape} does not match "
                             f"{self.num_modes} modes at cutoff {self.cutoff}")
        herm = np.max(np.abs(m - m.conj().T)) if dim else 0.0
        if herm > 1e-12:
            raise ValueError(f"matrix not Hermitian: residual {herm:.3g}")
        m = (m + m.conj().T) / 2
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > self.declared_defect + 1e-9:
            raise ValueError(f"trace {tr} not within declared defect "
                             f"{self.declared_defect} of 1")
        if np.min(np.linalg.eigvalsh(m)) < -1e-10:
            raise ValueError("matrix has a negative eigenvalue beyond "
                             "tolerance: not a density operator")
        object.__setattr__(self, "matrix", m)

    @property
    def dimension(self) -> int:
        return self.cutoff**self.num_modes

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)


def annihilation(cutoff: int) -> np.ndarray:
    """Single-mode annihilation operator at the given cutoff."""
    return np.diag(np.sqrt(np.arange(1.0, cutoff)), k=1).astype(np.complex128)


def lift_operator(op: np.ndarray, mode: int, num_modes: int,
                  cutoff: int) -> np.ndarray:
    """Embed a single-mode operator into the full tensor-product space."""
    eye = np.eye(cutoff, dtype=np.complex128)
    out = np.array([[1.0 + 0j]])
    for j in range(num_modes):
        out = np.kron(out, op if j == mode else eye)
    return out


def _occupations(num_modes: int, cutoff: int) -> np.ndarray:
    """(dim, num_modes) array of occupation tuples in flat-index order."""
    grids = np.indices((cutoff,) * num_modes).reshape(num_modes, -1).T
    return grids


def _flat_index(occ, cutoff: int) -> int:
    idx = 0
    for n in occ:
        idx = idx * cutoff + int(n)
    return idx


def _coherent_ket(alpha: complex, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff)
    log_fact = np.cumsum(np.concatenate([[0.0], np.log(np.arange(1, cutoff))]))
    amps = np.exp(-abs(alpha) ** 2 / 2) * alpha**n / np.exp(log_fact / 2)
    return amps.astype(np.complex128)


def build_state(state, cutoff: int, tail_bound: float = 1e-10) -> FockDensity:
    """Explicit density matrix for any supported input-state description.

    Single-mode states build one mode; multi-mode descriptions build their
    full mode list in ``state.modes`` order. Truncation tails (thermal,
    coherent) must fall below ``tail_bound`` and are recorded as the
    declared defect; states that do not fit at all raise.
    """
    if cutoff < 1:
        raise CutoffTooSmallError(f"cutoff must be >= 1, got {cutoff}")
    if isinstance(state, (Coherent, Thermal, FockState)):
        mat, defect = _single_mode_matrix(state, cutoff, tail_bound)
        return FockDensity(mat, 1, cutoff, defect)
    if isinstance(state, ProductState):
        mat = np.array([[1.0 + 0j]])
        survive = 1.0
        for s in state.states:
            block, defect = _single_mode_matrix(s, cutoff, tail_bound)
            mat = np.kron(mat, block)
            survive *= 1.0 - defect
        return FockDensity(mat, len(state.states), cutoff, 1.0 - survive)
    if isinstance(state, BeamSplitterFock):
        if state.n >= cutoff:
            raise CutoffTooSmallError(
                f"cutoff {cutoff} cannot hold occupation {state.n}")
        ket = np.zeros(cutoff**2, dtype=np.complex128)
        ket[_flat_index((state.n, 0), cutoff)] = 1.0
        u = mode_transform_unitary(
            np.array([[state.r, state.t], [-state.t, state.r]]), cutoff)
        ket = u @ ket
        return FockDensity(np.outer(ket, ket.conj()), 2, cutoff)
    if isinstance(state, SPDCPair):
        if cutoff < 2:
            raise CutoffTooSmallError("pair state needs cutoff >= 2")
        m = state.num_pairs
        ket = np.zeros(cutoff**(2 * m), dtype=np.complex128)
        ket[0] = 1.0
        for j in range(m):
            occ = [0] * (2 * m)
            occ[j] = 1
            occ[m + j] = 1
            ket[_flat_index(occ, cutoff)] = state.amplitude
        ket /= np.sqrt(state.norm_squared)
        return FockDensity(np.outer(ket, ket.conj()), 2 * m, cutoff)
    raise TypeError(f"unsupported state description {type(state).__name__}")


def _single_mode_matrix(state, cutoff: int,
                        tail_bound: float) -> tuple[np.ndarray, float]:
    if isinstance(state, FockState):
        if state.n >= cutoff:
            raise CutoffTooSmallError(
                f"cutoff {cutoff} cannot hold occupation {state.n}")
        mat = np.zeros((cutoff, cutoff), dtype=np.complex128)
        mat[state.n, state.n] = 1.0
        return mat, 0.0
    if isinstance(state, Thermal):
        if state.mean_n == 0:
            mat = np.zeros((cutoff, cutoff), dtype=np.complex128)
            mat[0, 0] = 1.0
            return mat, 0.0
        q = state.mean_n / (state.mean_n + 1.0)
        tail = q**cutoff
        if tail > tail_bound:
            raise CutoffTooSmallError(
                f"thermal tail {tail:.3g} exceeds bound {tail_bound:.3g} "
                f"at cutoff {cutoff}")
        weights = (1 - q) * q ** np.arange(cutoff)
        return np.diag(weights).astype(np.complex128), tail
    if isinstance(state, Coherent):
        ket = _coherent_ket(state.amplitude, cutoff)
        tail = max(1.0 - float(np.sum(np.abs(ket) ** 2)), 0.0)
        if tail > tail_bound:
            raise CutoffTooSmallError(
                f"coherent tail {tail:.3g} exceeds bound {tail_bound:.3g} "
                f"at cutoff {cutoff}")
        return np.outer(ket, ket.conj()), tail
    raise TypeError(f"unsupported single-mode state {type(state).__name__}")


def _unitary_log(u: np.ndarray) -> np.ndarray:
    """Principal logarithm of a unitary matrix via its Schur form."""
    tri, z = schur(np.asarray(u, dtype=np.complex128), output="complex")
    w = np.diag(tri)
    if np.max(np.abs(tri - np.diag(w))) > 1e-8 or \
            np.max(np.abs(np.abs(w) - 1.0)) > 1e-8:
        raise ValueError("matrix is not unitary; cannot take a stable log")
    w = w / np.abs(w)
    return (z * np.log(w)) @ z.conj().T


def mode_transform_unitary(transform: np.ndarray, cutoff: int) -> np.ndarray:
    """Fock-space unitary implementing a linear mode transformation.

    ``transform`` is an m x m single-particle unitary T; the returned U
    satisfies U^dag a_k U = sum_j T[k, j] a_j, so applying U rho U^dag
    sends the state of the input modes to the state of the T-transformed
    modes. Built as expm of the quadratic generator, which conserves total
    photon number and is exact within the cutoff on every conserved sector.
    """
    t = np.asarray(transform, dtype=np.complex128)
    num_modes = t.shape[0]
    if t.shape != (num_modes, num_modes):
        raise ValueError(f"transform must be square, got {t.shape}")
    k = _unitary_log(t)
    ops = [lift_operator(annihilation(cutoff), j, num_modes, cutoff)
           for j in range(num_modes)]
    dim = cutoff**num_modes
    gen = np.zeros((dim, dim), dtype=np.complex128)
    for i in range(num_modes):
        for j in range(num_modes):
            if abs(k[i, j]) > 1e-15:
                gen += k[i, j] * (ops[i].conj().T @ ops[j])
    return expm(gen)


def _partial_trace_raw(mat: np.ndarray, num_modes: int, cutoff: int,
                       keep) -> np.ndarray:
    keep = tuple(keep)
    letters = string.ascii_letters
    bra = list(letters[:num_modes])
    ket = list(letters[num_modes:2 * num_modes])
    for i in range(num_modes):
        if i not in keep:
            ket[i] = bra[i]
    sub = ("".join(bra) + "".join(ket) + "->"
           + "".join(bra[i] for i in keep) + "".join(ket[i] for i in keep))
    tensor = mat.reshape((cutoff,) * (2 * num_modes))
    reduced = np.einsum(sub, tensor)
    dim = cutoff**len(keep)
    return reduced.reshape(dim, dim)


def partial_trace(rho: FockDensity, keep) -> FockDensity:
    """Reduced state on the listed modes, in the order given."""
    keep = tuple(keep)
    if not keep or len(set(keep)) != len(keep) or \
            any(i < 0 or i >= rho.num_modes for i in keep):
        raise ValueError(f"invalid mode subset {keep} for "
                         f"{rho.num_modes} modes")
    out = _partial_trace_raw(rho.matrix, rho.num_modes, rho.cutoff, keep)
    return FockDensity(out, len(keep), rho.cutoff, rho.declared_defect)


def _permute_raw(mat: np.ndarray, num_modes: int, cutoff: int,
                 order) -> np.ndarray:
    axes = list(order) + [num_modes + i for i in order]
    tensor = mat.reshape((cutoff,) * (2 * num_modes))
    return tensor.transpose(axes).reshape(mat.shape)


def total_occupation_distribution(rho: FockDensity) -> np.ndarray:
    """Probability mass per total photon number 0..num_modes*(cutoff-1)."""
    totals = _occupations(rho.num_modes, rho.cutoff).sum(axis=1)
    pops = np.diag(rho.matrix).real
    tr = pops.sum()
    out = np.zeros(rho.num_modes * (rho.cutoff - 1) + 1)
    np.add.at(out, totals, pops / tr)
    return out


def apply_linear_channel(rho: FockDensity, matrix: np.ndarray,
                         acting_modes=None, overflow_tol: float = 1e-9,
                         max_dimension: int = 6000) -> FockDensity:
    """Send ``rho`` through a contractive mode map, exactly.

    ``matrix`` (r x c) maps the c ``acting_modes`` (default: all) to r new
    modes; other modes pass through untouched. The output mode order is the
    r mapped modes followed by the untouched modes in their original order.
    Raises ``CutoffOverflowError`` if the input carries more than
    ``overflow_tol`` probability above total occupation cutoff-1, where the
    lifted unitary would clip.
    """
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.ndim != 2:
        raise ValueError(f"mode map must be a matrix, got shape {matrix.shape}")
    r, c = matrix.shape
    m, d = rho.num_modes, rho.cutoff
    acting = tuple(acting_modes) if acting_modes is not None else tuple(range(m))
    if len(acting) != c or len(set(acting)) != len(acting) or \
            any(i < 0 or i >= m for i in acting):
        raise ValueError(f"acting modes {acting} incompatible with a "
                         f"{r} x {c} map on {m} modes")
    spectators = tuple(i for i in range(m) if i not in acting)
    s = len(spectators)
    n_tot = c + s + r
    if d**n_tot > max_dimension:
        raise ValueError(
            f"channel needs {n_tot} modes at cutoff {d} "
            f"(dimension {d**n_tot}); beyond the {max_dimension} cap of "
            "this brute-force engine")

    # The lifted unitary only moves photons within the acting + ancilla
    # registers, so clipping occurs exactly when the acting modes jointly
    # hold more than cutoff-1 photons.
    acting_totals = _occupations(m, d)[:, list(acting)].sum(axis=1)
    pops = np.diag(rho.matrix).real
    mass_above = float(pops[acting_totals > d - 1].sum() / pops.sum())
    if mass_above > overflow_tol:
        raise CutoffOverflowError(
            f"input carries {mass_above:.3g} probability above total "
            f"occupation {d - 1} on the mapped modes; the cutoff-{d} "
            f"channel would clip it (tolerance {overflow_tol:.3g})")

    # Register layout [spectators, acting, ancillas]: the generator is
    # built from the dilated core alone, so spectator registers are never
    # mixed and the evolution is exact wherever the acting block fits.
    rho_in = _permute_raw(rho.matrix, m, d, spectators + acting)
    vac = np.zeros((d**r, d**r), dtype=np.complex128)
    vac[0, 0] = 1.0
    rho_tot = np.kron(rho_in, vac)

    k_core = _unitary_log(dilate_contraction(matrix))
    ops = [lift_operator(annihilation(d), s + i, n_tot, d)
           for i in range(c + r)]
    gen = np.zeros((d**n_tot, d**n_tot), dtype=np.complex128)
    for i in range(c + r):
        for j in range(c + r):
            if abs(k_core[i, j]) > 1e-15:
                gen += k_core[i, j] * (ops[i].conj().T @ ops[j])
    u = expm(gen)
    evolved = u @ rho_tot @ u.conj().T

    # registers are now [spectators(s), mapped(r), loss(c)]
    kept = _partial_trace_raw(evolved, n_tot, d, range(s + r))
    reordered = _permute_raw(kept, s + r, d,
                             tuple(range(s, s + r)) + tuple(range(s)))
    return FockDensity(reordered, r + s, d, rho.declared_defect)


def displacement_product(xi: complex, cutoff: int) -> np.ndarray:
    """exp(i conj(xi) a^dag) exp(i xi a) at the cutoff; exact elementwise.

    Normal ordering makes truncation lossless: the lowering factor acts
    first, so no intermediate state climbs past the cutoff.
    """
    a = annihilation(cutoff)
    lower = np.eye(cutoff, dtype=np.complex128)
    term = np.eye(cutoff, dtype=np.complex128)
    for k in range(1, cutoff):
        term = term @ ((1j * xi) * a) / k
        lower += term
    adag = a.conj().T
    upper = np.eye(cutoff, dtype=np.complex128)
    term = np.eye(cutoff, dtype=np.complex128)
    for k in range(1, cutoff):
        term = term @ ((1j * np.conj(xi)) * adag) / k
        upper += term
    return upper @ lower


def char_function(rho: FockDensity, xi, check_tail_tol: float | None = None):
    """Normal characteristic function tr(rho prod_j D_j) / tr(rho).

    With ``check_tail_tol`` set, re-evaluates on the state projected below
    its top occupation level and raises ``CutoffAccuracyError`` when the
    two values differ by more than the tolerance (the value is then
    cutoff-limited rather than converged).
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=np.complex128))
    if xi.shape != (rho.num_modes,):
        raise ModeMismatchError(f"xi must have length {rho.num_modes}, "
                                f"got shape {xi.shape}")
    op = np.array([[1.0 + 0j]])
    for j in range(rho.num_modes):
        op = np.kron(op, displacement_product(complex(xi[j]), rho.cutoff))
    value = complex(np.trace(rho.matrix @ op) / rho.trace)
    if check_tail_tol is not None:
        occ = _occupations(rho.num_modes, rho.cutoff)
        inside = np.all(occ < rho.cutoff - 1, axis=1)
        proj = rho.matrix[np.ix_(inside, inside)]
        tr = float(np.trace(proj).real)
        if tr < 1e-12:
            raise CutoffAccuracyError(
                "state lives entirely on the top occupation level; "
                "increase the cutoff to estimate tail sensitivity")
        lowered = complex(np.trace(proj @ op[np.ix_(inside, inside)]) / tr)
        if abs(value - lowered) > check_tail_tol:
            raise CutoffAccuracyError(
                f"tail sensitivity {abs(value - lowered):.3g} exceeds "
                f"tolerance {check_tail_tol:.3g}; value is cutoff-limited")
    return value


def expectation(rho: FockDensity, operator: np.ndarray) -> complex:
    """tr(rho O) / tr(rho)."""
    return complex(np.trace(rho.matrix @ operator) / rho.trace)


def _number_operator(rho: FockDensity, mode: int) -> np.ndarray:
    a = lift_operator(annihilation(rho.cutoff), mode, rho.num_modes, rho.cutoff)
    return a.conj().T @ a


def mean_occupation(rho: FockDensity, mode: int) -> float:
    return expectation(rho, _number_operator(rho, mode)).real


def cross_moment(rho: FockDensity, i: int, j: int) -> complex:
    """<a_i^dag a_j>."""
    ai = lift_operator(annihilation(rho.cutoff), i, rho.num_modes, rho.cutoff)
    aj = lift_operator(annihilation(rho.cutoff), j, rho.num_modes, rho.cutoff)
    return expectation(rho, ai.conj().T @ aj)


def coincidence(rho: FockDensity, i: int, j: int) -> float:
    """Second-order coincidence rate <n_i n_j> for distinct modes."""
    if i == j:
        raise ValueError("coincidence needs two distinct modes")
    ni = _number_operator(rho, i)
    nj = _number_operator(rho, j)
    return expectation(rho, ni @ nj).real


def occupation_covariance(rho: FockDensity, i: int, j: int) -> float:
    """Covariance of n_i and n_j (variance when i == j)."""
    ni = _number_operator(rho, i)
    nj = ni if i == j else _number_operator(rho, j)
    return (expectation(rho, ni @ nj).real
            - expectation(rho, ni).real * expectation(rho, nj).real)


def fano_factor(rho: FockDensity, mode: int) -> float:
    mean = mean_occupation(rho, mode)
    if mean <= 0:
        raise UndefinedMomentError(
            "Fano factor undefined for zero mean occupation")
    return occupation_covariance(rho, mode, mode) / mean


def number_correlation(rho: FockDensity, i: int, j: int) -> float:
    """Pearson correlation of the photon numbers of two modes."""
    var_i = occupation_covariance(rho, i, i)
    var_j = occupation_covariance(rho, j, j)
    if var_i <= 0 or var_j <= 0:
        raise UndefinedMomentError("number correlation needs both modes to "
                                   "have positive photon-number variance")
    return occupation_covariance(rho, i, j) / math.sqrt(var_i * var_j)
