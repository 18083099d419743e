"""Incident-field state models.

Every state exposes its normal characteristic function, the expectation of
the normally ordered displacement exponentials exp(i conj(xi) a^dag)
exp(i xi a), which fully determines the state: coherent states give a pure
phase, thermal states a Gaussian, Fock states a Laguerre polynomial.
Multi-mode preparations cover independent products, the two-mode entangled
state made by sending a Fock state through a beam splitter, and the
vacuum-plus-photon-pair superposition of a parametric down-conversion
source (signal modes paired one-to-one with idler modes).

Characteristic functions are vectorized: ``xi`` may be a scalar (single
mode) or an array whose last axis runs over the state's mode list.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np
from scipy.special import eval_laguerre

ModeIndex = tuple[int, int]


class UndefinedMomentError(ValueError):
    """A photon-number moment was requested where it is undefined."""


class ModeMismatchError(ValueError):
    """Argument indexed inconsistently with a state's mode list."""


@dataclass(frozen=True)
class PhotonMoments:
    """Mean and variance of the photon number; Fano factor on demand."""

    mean: float
    variance: float

    @property
    def fano(self) -> float:
        if self.mean <= 0:
            raise UndefinedMomentError(
                "Fano factor undefined for zero mean occupation")
        return self.variance / self.mean


@dataclass(frozen=True)
class Coherent:
    amplitude: complex

    def char(self, xi):
        xi = np.asarray(xi, dtype=np.complex128)
        a = complex(self.amplitude)
        return np.exp(1j * (np.conj(xi) * np.conj(a) + xi * a))

    def moments(self) -> PhotonMoments:
        mean = abs(self.amplitude) ** 2
        return PhotonMoments(mean, mean)

    @property
    def mean_amplitude(self) -> complex:
        return complex(self.amplitude)


@dataclass(frozen=True)
class Thermal:
    mean_n: float

    def __post_init__(self):
        if self.mean_n < 0:
            raise ValueError(f"thermal mean occupation must be >= 0, "
                             f"got {self.mean_n}")

    def char(self, xi):
        xi = np.asarray(xi, dtype=np.complex128)
        return np.exp(-self.mean_n * np.abs(xi) ** 2) + 0j

    def moments(self) -> PhotonMoments:
        return PhotonMoments(self.mean_n, self.mean_n**2 + self.mean_n)

    @property
    def mean_amplitude(self) -> complex:
        return 0j


@dataclass(frozen=True)
class FockState:
    n: int

    def __post_init__(self):
        if self.n < 0 or int(self.n) != self.n:
            raise ValueError(f"occupation must be a non-negative integer, "
                             f"got {self.n}")

    def char(self, xi):
        xi = np.asarray(xi, dtype=np.complex128)
        return eval_laguerre(self.n, np.abs(xi) ** 2) + 0j

    def moments(self) -> PhotonMoments:
        return PhotonMoments(float(self.n), 0.0)

    @property
    def mean_amplitude(self) -> complex:
        return 0j


SingleModeState = Union[Coherent, Thermal, FockState]


def normal_char_single(state: SingleModeState, xi):
    """Normal characteristic function of a single-mode state at xi."""
    return state.char(xi)


def photon_moments(state: SingleModeState) -> PhotonMoments:
    """Photon-number mean and variance; Fano factor via ``.fano``."""
    return state.moments()


def _check_unit(r: float, t: float):
    if abs(r * r + t * t - 1.0) > 1e-12:
        raise ValueError(f"beam splitter amplitudes must satisfy "
                         f"r^2 + t^2 = 1, got r={r}, t={t}")


def beam_splitter_transform(chi_in, r: float, t: float):
    """Pull a two-mode characteristic function through a beam splitter.

    Output modes are b1 = r a1 + t a2, b2 = -t a1 + r a2; the returned
    callable evaluates chi_out(xi1, xi2) = chi_in(r xi1 - t xi2,
    t xi1 + r xi2).
    """
    _check_unit(r, t)

    def chi_out(xi1, xi2):
        return chi_in(r * xi1 - t * xi2, t * xi1 + r * xi2)

    return chi_out


@dataclass(frozen=True)
class ProductState:
    """Independent single-mode states on listed grid modes (rest vacuum)."""

    assignments: tuple[tuple[ModeIndex, SingleModeState], ...]

    def __post_init__(self):
        items = self.assignments
        if isinstance(items, Mapping):
            items = items.items()
        items = tuple(sorted(((tuple(m), s) for m, s in items)))
        if len({m for m, _ in items}) != len(items):
            raise ValueError("duplicate mode in product state")
        if not items:
            raise ValueError("product state needs at least one occupied mode")
        object.__setattr__(self, "assignments", items)

    @property
    def modes(self) -> tuple[ModeIndex, ...]:
        return tuple(m for m, _ in self.assignments)

    @property
    def states(self) -> tuple[SingleModeState, ...]:
        return tuple(s for _, s in self.assignments)

    def char(self, xi):
        xi = _as_mode_vector(xi, len(self.assignments))
        out = np.ones(xi.shape[:-1], dtype=np.complex128)
        for i, (_, s) in enumerate(self.assignments):
            out = out * s.char(xi[..., i])
        return out

    def second_moments(self, decorrelate: bool = False) -> np.ndarray:
        """Matrix of <a_i^dag a_j> over the occupied modes."""
        amps = np.array([s.mean_amplitude for s in self.states])
        c = np.outer(amps.conj(), amps)
        np.fill_diagonal(c, [s.moments().mean for s in self.states])
        return c


@dataclass(frozen=True)
class BeamSplitterFock:
    """Fock state |n> split over two grid modes: r a1 + t a2 carries it.

    The two-mode characteristic function is L_n(|r xi1 - t xi2|^2), an
    entangled state for 0 < r, t < 1.
    """

    n: int
    r: float
    t: float
    modes: tuple[ModeIndex, ModeIndex]

    def __post_init__(self):
        if self.n < 0 or int(self.n) != self.n:
            raise ValueError(f"occupation must be a non-negative integer, "
                             f"got {self.n}")
        _check_unit(self.r, self.t)
        object.__setattr__(self, "modes", tuple(tuple(m) for m in self.modes))
        if self.modes[0] == self.modes[1]:
            raise ValueError("beam splitter output modes must differ")

    def char(self, xi):
        xi = _as_mode_vector(xi, 2)
        u = self.r * xi[..., 0] - self.t * xi[..., 1]
        return eval_laguerre(self.n, np.abs(u) ** 2) + 0j

    def second_moments(self, decorrelate: bool = False) -> np.ndarray:
        r, t, n = self.r, self.t, self.n
        if decorrelate:
            return np.diag([n * r * r, n * t * t]).astype(np.complex128)
        return n * np.array([[r * r, -r * t], [-r * t, t * t]],
                            dtype=np.complex128)


@dataclass(frozen=True)
class SPDCPair:
    """Down-conversion output: vacuum plus one photon pair per mode pair.

    Signal mode j is paired with idler mode j; the (normalized) state is
    (|vac> + F sum_j |1_sig_j, 1_idl_j>) / sqrt(1 + M |F|^2) for M pairs.
    The mode list runs over all signal modes first, then all idler modes.
    """

    amplitude: complex
    pair_modes: tuple[ModeIndex, ...]

    def __post_init__(self):
        pm = tuple(tuple(m) for m in self.pair_modes)
        if not pm:
            raise ValueError("down-conversion state needs at least one mode pair")
        if len(set(pm)) != len(pm):
            raise ValueError("duplicate mode in pair list")
        object.__setattr__(self, "pair_modes", pm)

    @property
    def num_pairs(self) -> int:
        return len(self.pair_modes)

    @property
    def signal_modes(self) -> tuple[ModeIndex, ...]:
        return self.pair_modes

    @property
    def modes(self) -> tuple[ModeIndex, ...]:
        return self.pair_modes + self.pair_modes

    @property
    def norm_squared(self) -> float:
        """<Psi|Psi> of the raw vacuum-plus-pairs superposition."""
        return 1.0 + self.num_pairs * abs(self.amplitude) ** 2

    def char(self, xi):
        # Exact for the normalized state: the pair expansion terminates at
        # two photons, so no small-amplitude truncation is involved.
        m = self.num_pairs
        xi = _as_mode_vector(xi, 2 * m)
        xs = xi[..., :m]
        xc = xi[..., m:]
        F = complex(self.amplitude)
        pair_sum = np.sum(xs * xc, axis=-1)
        out = (np.abs(1.0 - F * pair_sum) ** 2
               + abs(F) ** 2 * np.sum(1.0 - np.abs(xs) ** 2 - np.abs(xc) ** 2,
                                      axis=-1))
        return (out + 0j) / self.norm_squared

    def second_moments(self, decorrelate: bool = False) -> np.ndarray:
        """<a_i^dag a_j> over the signal modes only."""
        mean = abs(self.amplitude) ** 2 / self.norm_squared
        return mean * np.eye(self.num_pairs, dtype=np.complex128)


MultiModeInputState = Union[ProductState, BeamSplitterFock, SPDCPair]


def normal_char_multi(state: MultiModeInputState, xi):
    """Normal characteristic function at xi, indexed by ``state.modes``."""
    return state.char(xi)


def _as_mode_vector(xi, num_modes: int) -> np.ndarray:
    xi = np.asarray(xi, dtype=np.complex128)
    if xi.ndim == 0 or xi.shape[-1] != num_modes:
        raise ModeMismatchError(
            f"xi must have last axis of length {num_modes}, "
            f"got shape {xi.shape}")
    return xi
