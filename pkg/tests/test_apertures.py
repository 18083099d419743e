"""Aperture factors: closed forms vs quadrature, normalization, symmetry."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from qdiffract.apertures import (Aperture, ApertureError, Disk, DoubleSlit,
                                 ModeGrid, Rectangle, SingleSlit,
                                 UnionOfRectangles, diffraction_factor,
                                 diffraction_factor_quadrature,
                                 diffraction_factor_table,
                                 normalization_defect, transmissivity)


def make_shapes():
    return [
        Aperture(Rectangle(0.3, 0.2)),
        Aperture(Rectangle(0.2, 0.15, (0.1, -0.2))),
        Aperture(SingleSlit(0.08)),
        Aperture(DoubleSlit(0.05, 0.2)),
        Aperture(Disk(0.2)),
        Aperture(Disk(0.12, (0.15, 0.1))),
        Aperture(UnionOfRectangles((Rectangle(0.1, 0.3, (-0.25, 0.0)),
                                    Rectangle(0.15, 0.1, (0.2, 0.2))))),
    ]


@pytest.mark.parametrize("aperture", make_shapes(),
                         ids=lambda a: type(a.shape).__name__)
def test_zero_mode_value_is_root_transmissivity(aperture):
    f0 = diffraction_factor(aperture, 0.0, 0.0)
    assert f0 == pytest.approx(np.sqrt(aperture.transmissivity), abs=1e-15)
    assert abs(f0.imag) < 1e-15 or abs(f0) <= np.sqrt(aperture.transmissivity)


def test_rectangle_closed_form_vs_quadrature(rng):
    aperture = Aperture(Rectangle(0.3, 0.2))
    for _ in range(50):
        kx, ky = rng.uniform(-30, 30, 2)
        closed = diffraction_factor(aperture, kx, ky)
        oracle = diffraction_factor_quadrature(aperture, kx, ky)
        assert abs(closed - oracle) <= 1e-9


def test_rectangle_closed_form_is_sinc_product(rng):
    a, b = 0.3, 0.2
    aperture = Aperture(Rectangle(a, b))
    lam = aperture.transmissivity
    for _ in range(20):
        kx, ky = rng.uniform(-40, 40, 2)
        expected = (np.sqrt(lam) * np.sinc(kx * a / 2 / np.pi)
                    * np.sinc(ky * b / 2 / np.pi))
        assert diffraction_factor(aperture, kx, ky) == pytest.approx(
            expected, abs=1e-14)


def test_double_slit_closed_form_vs_quadrature(rng):
    w, d = 0.05, 0.2
    aperture = Aperture(DoubleSlit(w, d))
    lam = aperture.transmissivity
    for _ in range(10):
        kx = rng.uniform(-40, 40)
        closed = diffraction_factor(aperture, kx, 0.0)
        expected = (np.sqrt(lam) * np.sinc(kx * w / 2 / np.pi)
                    * np.cos(kx * d / 2))
        assert closed == pytest.approx(expected, abs=1e-13)
        oracle = diffraction_factor_quadrature(aperture, kx, 0.0)
        assert abs(closed - oracle) <= 1e-9


@pytest.mark.parametrize("aperture", [
    Aperture(Disk(0.2)),
    Aperture(Disk(0.12, (0.15, 0.1))),
    Aperture(UnionOfRectangles((Rectangle(0.1, 0.3, (-0.25, 0.0)),
                                Rectangle(0.15, 0.1, (0.2, 0.2))))),
], ids=["disk", "offset_disk", "union"])
def test_other_shapes_vs_quadrature(aperture, rng):
    for _ in range(6):
        kx, ky = rng.uniform(-25, 25, 2)
        closed = diffraction_factor(aperture, kx, ky)
        oracle = diffraction_factor_quadrature(aperture, kx, ky)
        assert abs(closed - oracle) <= 1e-9


def test_offset_rectangle_is_centered_times_phase():
    x0, y0 = 0.12, -0.08
    grid = ModeGrid(1.0, 6)
    centered = diffraction_factor_table(Aperture(Rectangle(0.3, 0.2)), grid)
    offset = diffraction_factor_table(
        Aperture(Rectangle(0.3, 0.2, (x0, y0))), grid)
    kx, ky = grid.wavevector_mesh()
    expected = centered.values * np.exp(-1j * (kx * x0 + ky * y0))
    np.testing.assert_allclose(offset.values, expected, atol=1e-13)


@pytest.mark.parametrize("aperture", [
    Aperture(Rectangle(0.3, 0.2)),
    Aperture(DoubleSlit(0.05, 0.2)),
    Aperture(Disk(0.2)),
], ids=["rect", "slits", "disk"])
def test_table_hermitian_symmetry_and_bound(aperture):
    # real indicator symmetric under inversion: f(-k) = conj(f(k))
    table = diffraction_factor_table(aperture, ModeGrid(1.0, 5))
    values = table.values
    np.testing.assert_allclose(values[::-1, ::-1], values.conj(), atol=1e-14)
    assert np.max(np.abs(values)) <= np.sqrt(aperture.transmissivity) + 1e-12


def test_table_lookup_and_order():
    grid = ModeGrid(1.0, 2)
    table = diffraction_factor_table(Aperture(Rectangle(0.25, 0.25)), grid)
    assert table[(0, 0)] == pytest.approx(0.25)  # sqrt(1/16)
    items = list(table.items())
    assert [m for m, _ in items] == list(grid.indices())
    assert items[0][0] == (-2, -2)
    with pytest.raises(KeyError):
        table[(3, 0)]


def test_full_plane_table_is_kronecker_delta():
    table = diffraction_factor_table(Aperture(Rectangle(1.0, 1.0)),
                                     ModeGrid(1.0, 6))
    assert table[(0, 0)] == pytest.approx(1.0, abs=1e-15)
    off = table.values.copy()
    off[6, 6] = 0.0
    assert np.max(np.abs(off)) < 1e-15
    assert normalization_defect(table) == 0.0


def test_rectangle_defect_small_and_strictly_decreasing():
    aperture = Aperture(Rectangle(0.25, 0.25))
    defects = [normalization_defect(
        diffraction_factor_table(aperture, ModeGrid(1.0, n)))
        for n in (64, 128, 256)]
    assert defects[2] <= 1e-2
    assert defects[0] > defects[1] > defects[2]


def test_defect_non_increasing_generally():
    aperture = Aperture(Rectangle(0.3, 0.2, (0.05, 0.1)))
    defects = [normalization_defect(
        diffraction_factor_table(aperture, ModeGrid(1.0, n)))
        for n in (8, 16, 32, 64)]
    assert all(a >= b - 1e-15 for a, b in zip(defects, defects[1:]))


@pytest.mark.parametrize("aperture,n_max,bound", [
    (Aperture(SingleSlit(0.08)), 128, 1.1e-2),
    (Aperture(DoubleSlit(0.05, 0.2)), 128, 1.7e-2),
    (Aperture(Disk(0.2)), 128, 3.6e-3),
    (Aperture(UnionOfRectangles((Rectangle(0.1, 0.3, (-0.25, 0.0)),
                                 Rectangle(0.15, 0.1, (0.2, 0.2))))),
     128, 1.2e-2),
], ids=["single_slit", "double_slit", "disk", "union"])
def test_defect_bound_per_shape(aperture, n_max, bound):
    defect = normalization_defect(
        diffraction_factor_table(aperture, ModeGrid(1.0, n_max)))
    assert defect <= bound


def test_transmissivity_values():
    assert transmissivity(Aperture(Rectangle(1.0, 1.0))) == pytest.approx(1.0)
    slit = Aperture(DoubleSlit(0.05, 0.2))
    assert slit.transmissivity == pytest.approx(2 * 0.05 * 1.0)
    disk = Aperture(Disk(np.sqrt(0.1 / np.pi)))
    assert disk.transmissivity == pytest.approx(0.1)


def test_construction_errors():
    with pytest.raises(ApertureError):
        Rectangle(0.0, 0.1)
    with pytest.raises(ApertureError):
        DoubleSlit(0.2, 0.1)  # overlapping slits
    with pytest.raises(ApertureError):
        Aperture(Rectangle(0.5, 0.5, (0.4, 0.0)))  # escapes the plane
    with pytest.raises(ApertureError):
        Aperture(Disk(0.6))
    with pytest.raises(ApertureError):
        UnionOfRectangles((Rectangle(0.2, 0.2), Rectangle(0.2, 0.2, (0.1, 0))))
    with pytest.raises(ApertureError):
        Aperture(Rectangle(0.1, 0.1), plane_side=-1.0)
    with pytest.raises(ApertureError):
        ModeGrid(1.0, -1)


def test_grid_contains_zero_and_symmetric():
    grid = ModeGrid(2.0, 4)
    assert grid.contains((0, 0))
    indices = set(grid.indices())
    assert all((-nx, -ny) in indices for nx, ny in indices)
    assert grid.spacing == pytest.approx(np.pi)
    assert grid.size == 81


@settings(max_examples=40, deadline=None)
@given(width=hst.floats(0.01, 0.9), height=hst.floats(0.01, 0.9),
       kx=hst.floats(-60, 60), ky=hst.floats(-60, 60))
def test_factor_bounded_by_root_transmissivity(width, height, kx, ky):
    aperture = Aperture(Rectangle(width, height))
    value = diffraction_factor(aperture, kx, ky)
    assert abs(value) <= np.sqrt(aperture.transmissivity) * (1 + 1e-12)
    assert diffraction_factor(aperture, 0.0, 0.0) == pytest.approx(
        np.sqrt(aperture.transmissivity))
