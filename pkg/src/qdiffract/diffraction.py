"""The diffraction transform between incident and far-field modes.

An aperture couples incident mode k' to diffraction mode k with complex
weight sqrt(lam) f(k - k'). Collecting the weights into a matrix M gives a
lossy linear mode map b = M a + vacuum: the joint characteristic function
of the diffraction modes is the incident one evaluated at the substituted
arguments xi'_{k'} = sum_k xi_k M[k, k'].

The map is strictly contractive for any proper aperture (column norms
squared equal the transmissivity, not 1), so unlike a beam splitter it is
not a canonical transformation; ``dilate_contraction`` completes it to a
unitary on an enlarged mode set with vacuum ancillas, which is how the
brute-force Fock engine realizes the channel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .apertures import Aperture, ModeGrid, diffraction_factor
from .states import ModeIndex, ModeMismatchError, MultiModeInputState, SPDCPair


class OffGridError(ValueError):
    """A referenced mode does not lie on the grid."""


class DilationError(ValueError):
    """Mode map is not contractive, so no lossless embedding exists."""


@dataclass(frozen=True)
class ModeMap:
    """Complex matrix linking occupied incident modes to diffraction modes.

    ``matrix[row, col] = sqrt(lam) f(k_row - k'_col)``. Rows may cover the
    whole grid or any retained subset; columns are the occupied incident
    modes in the order given at build time.
    """

    matrix: np.ndarray
    output_modes: tuple[ModeIndex, ...]
    input_modes: tuple[ModeIndex, ...]
    transmissivity: float
    grid: ModeGrid

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        object.__setattr__(self, "matrix", m)
        if m.shape != (len(self.output_modes), len(self.input_modes)):
            raise ValueError(f"matrix shape {m.shape} does not match "
                             f"{len(self.output_modes)} output / "
                             f"{len(self.input_modes)} input modes")
        col_norms = np.sum(np.abs(m) ** 2, axis=0)
        if np.any(col_norms > self.transmissivity + 1e-12):
            raise ValueError("column norm exceeds the transmissivity: "
                             "grid or normalization bug")

    @property
    def num_outputs(self) -> int:
        return len(self.output_modes)

    @property
    def num_inputs(self) -> int:
        return len(self.input_modes)

    def column_norms_squared(self) -> np.ndarray:
        return np.sum(np.abs(self.matrix) ** 2, axis=0)


def build_mode_map(aperture: Aperture, grid: ModeGrid,
                   incident_modes, output_modes=None) -> ModeMap:
    """Assemble the incident-to-diffraction mode map over the grid.

    ``output_modes`` defaults to the full grid in deterministic (nx, ny)
    order; pass an explicit list to retain a subset (the usual case for the
    Fock-space cross-check, which must keep the mode count small).
    """
    if abs(grid.plane_side - aperture.plane_side) > 1e-12:
        raise ValueError("grid and aperture use different plane sides: "
                         f"{grid.plane_side} vs {aperture.plane_side}")
    incident_modes = tuple(tuple(m) for m in incident_modes)
    for m in incident_modes:
        if not grid.contains(m):
            raise OffGridError(f"incident mode {m} outside grid "
                               f"half-extent {grid.half_extent}")
    if output_modes is None:
        output_modes = tuple(grid.indices())
    else:
        output_modes = tuple(tuple(m) for m in output_modes)
        for m in output_modes:
            if not grid.contains(m):
                raise OffGridError(f"output mode {m} outside grid "
                                   f"half-extent {grid.half_extent}")
    dk = grid.spacing
    out = np.asarray(output_modes, dtype=np.float64)
    lam = aperture.transmissivity
    cols = []
    for m in incident_modes:
        kx = dk * (out[:, 0] - m[0])
        ky = dk * (out[:, 1] - m[1])
        cols.append(np.sqrt(lam) * np.atleast_1d(
            diffraction_factor(aperture, kx, ky)))
    matrix = np.stack(cols, axis=1)
    return ModeMap(matrix, output_modes, incident_modes, lam, grid)


def substituted_arguments(mode_map: ModeMap,
                          xi: Mapping[ModeIndex, complex]) -> np.ndarray:
    """Map sparse diffraction-mode xi to incident-mode arguments.

    Returns xi'_{k'} = sum_k xi_k M[k, k'] as a vector over the map's input
    modes. Modes absent from ``xi`` count as zero.
    """
    row_of = {m: i for i, m in enumerate(mode_map.output_modes)}
    vec = np.zeros(mode_map.num_outputs, dtype=np.complex128)
    for mode, value in xi.items():
        mode = tuple(mode)
        if mode not in row_of:
            raise ModeMismatchError(f"mode {mode} is not a retained "
                                    "diffraction mode of this map")
        vec[row_of[mode]] = value
    return mode_map.matrix.T @ vec


def diffracted_char(state: MultiModeInputState, mode_map: ModeMap,
                    xi: Mapping[ModeIndex, complex],
                    xi_extra: Mapping[ModeIndex, complex] | None = None):
    """Joint characteristic function of the diffraction modes.

    ``xi`` assigns values to retained diffraction modes (sparse; others
    zero). The map's input modes must be exactly the state's modes on the
    incident grid. For a down-conversion state the map acts on the signal
    modes and ``xi_extra`` may address the untouched idler modes.
    """
    substituted = substituted_arguments(mode_map, xi)
    if isinstance(state, SPDCPair):
        if mode_map.input_modes != state.signal_modes:
            raise ModeMismatchError("map input modes must match the "
                                    "state's signal modes")
        idler = np.zeros(state.num_pairs, dtype=np.complex128)
        if xi_extra:
            pos = {m: i for i, m in enumerate(state.pair_modes)}
            for mode, value in xi_extra.items():
                mode = tuple(mode)
                if mode not in pos:
                    raise ModeMismatchError(f"mode {mode} is not an idler "
                                            "mode of this state")
                idler[pos[mode]] = value
        full = np.concatenate([substituted, idler])
    else:
        if xi_extra:
            raise ModeMismatchError("xi_extra only applies to "
                                    "down-conversion states")
        if mode_map.input_modes != state.modes:
            raise ModeMismatchError("map input modes must match the "
                                    "state's occupied modes")
        full = substituted
    return complex(state.char(full))


def dilate_contraction(matrix: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Complete a contraction to a unitary with vacuum ancilla modes.

    For an (r x c) matrix M with singular values <= 1 this returns an
    (r + c) x (r + c) unitary whose upper-left r x c block equals M.
    Inputs are ordered [c originals, r ancillas]; outputs are ordered
    [r retained, c loss modes]. Built from the SVD, one rotation per
    singular value, so an exactly unitary M dilates to the identity
    extension and the ancilla ordering is deterministic.
    """
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {m.shape}")
    r, c = m.shape
    w, s, vh = np.linalg.svd(m)
    if s.size and s[0] > 1 + tol:
        raise DilationError(f"largest singular value {s[0]:.6g} exceeds 1: "
                            "not a physical (contractive) mode map")
    s = np.clip(s, 0.0, 1.0)
    sines = np.sqrt(1.0 - s**2)
    p = len(s)
    core = np.zeros((r + c, r + c), dtype=np.complex128)
    for i in range(p):
        core[i, i] = s[i]
        core[i, c + i] = -sines[i]
        core[r + i, i] = sines[i]
        core[r + i, c + i] = s[i]
    for i in range(p, r):        # extra retained rows fed by ancillas
        core[i, c + i] = 1.0
    for i in range(p, c):        # extra input columns routed to loss
        core[r + i, i] = 1.0
    basis_out = np.zeros((r + c, r + c), dtype=np.complex128)
    basis_out[:r, :r] = w
    basis_out[r:, r:] = vh.conj().T
    basis_in = np.zeros((r + c, r + c), dtype=np.complex128)
    basis_in[:c, :c] = vh.conj().T
    basis_in[c:, c:] = w
    return basis_out @ core @ basis_in.conj().T


def isometric_dilation(mode_map: ModeMap) -> np.ndarray:
    """Unitary embedding of the mode map; see ``dilate_contraction``."""
    return dilate_contraction(mode_map.matrix)
