"""Mode map, characteristic-function substitution, and unitary dilation."""

import numpy as np
import pytest

from qdiffract import fock
from qdiffract.apertures import (Aperture, DoubleSlit, ModeGrid, Rectangle,
                                 diffraction_factor, diffraction_factor_table,
                                 normalization_defect)
from qdiffract.diffraction import (DilationError, OffGridError,
                                   build_mode_map, diffracted_char,
                                   dilate_contraction, isometric_dilation)
from qdiffract.states import (BeamSplitterFock, Coherent, FockState,
                              ModeMismatchError, ProductState, Thermal)

SLIT = Aperture(DoubleSlit(0.05, 0.2))
GRID = ModeGrid(1.0, 8)


def sparse_xi(rng, modes, k=3, scale=0.6):
    chosen = rng.choice(len(modes), size=min(k, len(modes)), replace=False)
    return {modes[i]: complex(rng.normal(0, scale), rng.normal(0, scale))
            for i in chosen}


def test_full_plane_map_is_identity():
    aperture = Aperture(Rectangle(1.0, 1.0))
    mm = build_mode_map(aperture, GRID, [(0, 0), (1, 2)],
                        [(0, 0), (1, 2), (3, 3)])
    expected = np.zeros((3, 2))
    expected[0, 0] = expected[1, 1] = 1.0
    np.testing.assert_allclose(mm.matrix, expected, atol=1e-14)


def test_column_norms_equal_transmissivity_minus_defect():
    mm = build_mode_map(SLIT, GRID, [(0, 0)])
    table = diffraction_factor_table(SLIT, GRID)
    defect = normalization_defect(table)
    lam = SLIT.transmissivity
    norm2 = mm.column_norms_squared()[0]
    assert norm2 == pytest.approx(lam * (1 - defect), rel=1e-12)
    assert norm2 < lam  # strictly lossy for a proper aperture


def test_diagonal_entry_is_transmissivity():
    mm = build_mode_map(SLIT, GRID, [(2, 0)], [(2, 0)])
    assert mm.matrix[0, 0] == pytest.approx(SLIT.transmissivity)


def test_off_grid_rejected():
    with pytest.raises(OffGridError):
        build_mode_map(SLIT, GRID, [(99, 0)])
    with pytest.raises(OffGridError):
        build_mode_map(SLIT, GRID, [(0, 0)], [(0, 99)])


class TestDiffractedChar:
    def test_zero_xi_is_one(self):
        mm = build_mode_map(SLIT, GRID, [(0, 0)], [(1, 0)])
        state = ProductState((((0, 0), Thermal(0.7)),))
        assert diffracted_char(state, mm, {}) == pytest.approx(1.0)

    def test_single_thermal_mode_gives_attenuated_thermal(self, rng):
        # one nonzero xi picks out chi(sqrt(lam) f xi): thermal with
        # mean lam |f|^2 nbar
        nbar = 0.9
        state = ProductState((((0, 0), Thermal(nbar)),))
        mm = build_mode_map(SLIT, GRID, [(0, 0)], [(1, 0), (2, 0)])
        lam = SLIT.transmissivity
        f = diffraction_factor(SLIT, GRID.spacing, 0.0)
        for _ in range(10):
            xi = complex(rng.normal(0, 0.8), rng.normal(0, 0.8))
            value = diffracted_char(state, mm, {(1, 0): xi})
            expected = np.exp(-nbar * lam * abs(f) ** 2 * abs(xi) ** 2)
            assert value == pytest.approx(expected, abs=1e-14)

    @pytest.mark.parametrize("state", [Thermal(0.6), Coherent(0.5 - 0.2j),
                                       FockState(2)], ids=str)
    def test_single_mode_substitution_law(self, state, rng):
        # chi_out(xi at mode k) = chi_in(sqrt(lam) xi f(k - k0'))
        incident = (1, 0)
        wrapped = ProductState(((incident, state),))
        probe = (3, 0)
        mm = build_mode_map(SLIT, GRID, [incident], [probe])
        dk = GRID.spacing
        f = diffraction_factor(SLIT, dk * (probe[0] - incident[0]),
                               dk * (probe[1] - incident[1]))
        root_lam = np.sqrt(SLIT.transmissivity)
        for _ in range(10):
            xi = complex(rng.normal(0, 0.8), rng.normal(0, 0.8))
            value = diffracted_char(wrapped, mm, {probe: xi})
            assert value == pytest.approx(state.char(root_lam * xi * f),
                                          abs=1e-14)

    def test_identity_map_returns_input_char(self, rng):
        aperture = Aperture(Rectangle(1.0, 1.0))
        state = BeamSplitterFock(2, 0.6, 0.8, ((0, 0), (1, 0)))
        mm = build_mode_map(aperture, GRID, state.modes, state.modes)
        for _ in range(10):
            vals = rng.normal(0, 0.6, 2) + 1j * rng.normal(0, 0.6, 2)
            xi = dict(zip(state.modes, vals))
            assert diffracted_char(state, mm, xi) == pytest.approx(
                complex(state.char(vals)), abs=1e-14)

    def test_coherent_factorizes_fock_does_not(self, rng):
        aperture = Aperture(Rectangle(0.5, 0.5))
        modes = tuple(GRID.indices())
        coherent = ProductState((((0, 0), Coherent(0.7 + 0.2j)),))
        fockstate = ProductState((((0, 0), FockState(2)),))
        mm = build_mode_map(aperture, GRID, [(0, 0)])
        worst = 0.0
        for _ in range(100):
            xi = sparse_xi(rng, modes, scale=1.2)
            joint = diffracted_char(coherent, mm, xi)
            product = np.prod([diffracted_char(coherent, mm, {m: v})
                               for m, v in xi.items()])
            assert abs(joint - product) <= 1e-12
            joint_f = diffracted_char(fockstate, mm, xi)
            product_f = np.prod([diffracted_char(fockstate, mm, {m: v})
                                 for m, v in xi.items()])
            worst = max(worst, abs(joint_f - product_f))
        assert worst > 1e-3  # photon-number input entangles the modes

    def test_unknown_mode_rejected(self):
        mm = build_mode_map(SLIT, GRID, [(0, 0)], [(1, 0)])
        state = ProductState((((0, 0), Thermal(0.7)),))
        with pytest.raises(ModeMismatchError):
            diffracted_char(state, mm, {(5, 5): 0.3})


class TestDilation:
    def test_identity_dilates_to_identity(self):
        np.testing.assert_allclose(dilate_contraction(np.eye(3)),
                                   np.eye(6), atol=1e-14)

    def test_single_column_completion(self):
        mm = build_mode_map(SLIT, GRID, [(0, 0)], [(1, 0), (0, 1), (2, 0)])
        u = isometric_dilation(mm)
        n = u.shape[0]
        assert n == 4
        np.testing.assert_allclose(u.conj().T @ u, np.eye(n), atol=1e-12)
        np.testing.assert_allclose(u[:3, :1], mm.matrix, atol=1e-12)

    def test_double_slit_two_column_dilation(self, rng):
        mm = build_mode_map(SLIT, GRID, [(1, 0), (-1, 0)],
                            [(0, 0), (1, 0), (2, 0), (3, 0)])
        u = isometric_dilation(mm)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(6), atol=1e-12)
        np.testing.assert_allclose(u @ u.conj().T, np.eye(6), atol=1e-12)
        np.testing.assert_allclose(u[:4, :2], mm.matrix, atol=1e-12)

    def test_non_contractive_rejected(self):
        with pytest.raises(DilationError):
            dilate_contraction(np.array([[1.2]]))


def test_oracle_equivalence_small_instance(rng):
    # 2 incident modes, 3 retained, cutoff 4: joint char from the dilated
    # unitary matches the substitution law at random sparse xi
    state = BeamSplitterFock(2, 0.6, 0.8, ((1, 0), (-1, 0)))
    retained = [(0, 0), (1, 0), (2, 0)]
    mm = build_mode_map(SLIT, GRID, state.modes, retained)
    rho = fock.apply_linear_channel(fock.build_state(state, 4), mm.matrix)
    for _ in range(50):
        vals = rng.normal(0, 0.5, 3) + 1j * rng.normal(0, 0.5, 3)
        xi = dict(zip(retained, vals))
        closed = diffracted_char(state, mm, xi)
        oracle = fock.char_function(rho, vals)
        assert abs(closed - oracle) <= 1e-8
