"""Diffraction-plane geometry and far-field aperture factors.

The diffraction plane is an L x L box of area S = L^2; the open region of
area Sigma transmits the field, the rest of the screen absorbs it. Each
aperture exposes

* the energy transmissivity ``lam = Sigma / S``, and
* the far-field factor ``f(k) = (sqrt(lam)/Sigma) * integral_Sigma
  exp(-i(kx x + ky y)) dx dy``,

with closed analytic forms (sinc products for rectangular shapes, a Bessel
J1 profile for the disk). ``diffraction_factor_quadrature`` evaluates the
same integral by adaptive 2-D quadrature and is used only as a cross-check
oracle, never on hot paths.

All lengths are dimensionless; the default plane side is 1, which makes the
transverse mode spacing 2*pi.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

import numpy as np
from scipy import integrate
from scipy.special import j1

from . import _kernels


class ApertureError(ValueError):
    """Invalid aperture geometry (zero area, overlap, or out of plane)."""


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned open rectangle, width along x, height along y."""

    width: float
    height: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ApertureError(f"rectangle sides must be positive, got "
                                f"{self.width} x {self.height}")

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax)."""
        cx, cy = self.center
        return (cx - self.width / 2, cx + self.width / 2,
                cy - self.height / 2, cy + self.height / 2)


@dataclass(frozen=True)
class SingleSlit:
    """Vertical slit of the given width spanning the full plane height."""

    width: float

    def __post_init__(self):
        if self.width <= 0:
            raise ApertureError(f"slit width must be positive, got {self.width}")


@dataclass(frozen=True)
class DoubleSlit:
    """Two full-height slits of equal width with centers `separation` apart."""

    width: float
    separation: float

    def __post_init__(self):
        if self.width <= 0:
            raise ApertureError(f"slit width must be positive, got {self.width}")
        if self.separation < self.width:
            raise ApertureError("slits overlap: separation "
                                f"{self.separation} < width {self.width}")


@dataclass(frozen=True)
class Disk:
    """Circular opening of the given radius."""

    radius: float
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.radius <= 0:
            raise ApertureError(f"disk radius must be positive, got {self.radius}")

    @property
    def area(self) -> float:
        return np.pi * self.radius**2


@dataclass(frozen=True)
class UnionOfRectangles:
    """Disjoint union of open rectangles; overlap is a construction error."""

    rectangles: tuple[Rectangle, ...]

    def __post_init__(self):
        rects = tuple(self.rectangles)
        if not rects:
            raise ApertureError("union needs at least one rectangle")
        object.__setattr__(self, "rectangles", rects)
        for i in range(len(rects)):
            for j in range(i + 1, len(rects)):
                if _rects_overlap(rects[i], rects[j]):
                    raise ApertureError(
                        f"rectangles {i} and {j} overlap; union components "
                        "must be disjoint")


def _rects_overlap(a: Rectangle, b: Rectangle) -> bool:
    ax0, ax1, ay0, ay1 = a.bounds
    bx0, bx1, by0, by1 = b.bounds
    return (min(ax1, bx1) - max(ax0, bx0) > 1e-15
            and min(ay1, by1) - max(ay0, by0) > 1e-15)


ApertureShape = Union[Rectangle, SingleSlit, DoubleSlit, Disk, UnionOfRectangles]


@dataclass(frozen=True)
class Aperture:
    """An open region within the L x L diffraction plane."""

    shape: ApertureShape
    plane_side: float = 1.0
    open_area: float = field(init=False)
    transmissivity: float = field(init=False)

    def __post_init__(self):
        if self.plane_side <= 0:
            raise ApertureError(f"plane side must be positive, got "
                                f"{self.plane_side}")
        rects = self._component_rectangles()
        if rects is not None:
            area = sum(r.area for r in rects)
            for r in rects:
                self._check_bounds(*r.bounds)
        else:
            disk = self.shape
            area = disk.area
            cx, cy = disk.center
            self._check_bounds(cx - disk.radius, cx + disk.radius,
                               cy - disk.radius, cy + disk.radius)
        plane_area = self.plane_side**2
        if not 0 < area <= plane_area * (1 + 1e-12):
            raise ApertureError(
                f"open area {area} must lie in (0, {plane_area}]")
        object.__setattr__(self, "open_area", float(area))
        object.__setattr__(self, "transmissivity",
                           min(float(area / plane_area), 1.0))

    def _check_bounds(self, xmin, xmax, ymin, ymax):
        half = self.plane_side / 2 * (1 + 1e-12)
        if xmin < -half or xmax > half or ymin < -half or ymax > half:
            raise ApertureError("open region extends beyond the "
                                f"{self.plane_side} x {self.plane_side} plane")

    def _component_rectangles(self) -> tuple[Rectangle, ...] | None:
        """Rectangle decomposition, or None for the disk."""
        s = self.shape
        if isinstance(s, Rectangle):
            return (s,)
        if isinstance(s, SingleSlit):
            return (Rectangle(s.width, self.plane_side),)
        if isinstance(s, DoubleSlit):
            return (Rectangle(s.width, self.plane_side, (-s.separation / 2, 0.0)),
                    Rectangle(s.width, self.plane_side, (+s.separation / 2, 0.0)))
        if isinstance(s, UnionOfRectangles):
            return s.rectangles
        if isinstance(s, Disk):
            return None
        raise ApertureError(f"unsupported shape {type(s).__name__}")


def transmissivity(aperture: Aperture) -> float:
    """Energy transmissivity Sigma/S of the open region."""
    return aperture.transmissivity


def diffraction_factor(aperture: Aperture, kx, ky):
    """Far-field factor f(k) at transverse wavevector (kx, ky).

    Closed analytic evaluation; accepts scalars or broadcastable arrays and
    returns complex values with f(0, 0) = sqrt(transmissivity).
    """
    kx = np.asarray(kx, dtype=np.float64)
    ky = np.asarray(ky, dtype=np.float64)
    rects = aperture._component_rectangles()
    scale = np.sqrt(aperture.transmissivity) / aperture.open_area
    if rects is not None:
        widths = np.array([r.width for r in rects])
        heights = np.array([r.height for r in rects])
        cxs = np.array([r.center[0] for r in rects])
        cys = np.array([r.center[1] for r in rects])
        out = _kernels.rect_union_factor(kx, ky, widths, heights, cxs, cys, scale)
    else:
        disk = aperture.shape
        q = np.hypot(kx, ky)
        qr = q * disk.radius
        with np.errstate(invalid="ignore", divide="ignore"):
            radial = np.where(qr == 0.0, 1.0, 2.0 * j1(qr) / np.where(qr == 0, 1.0, qr))
        cx, cy = disk.center
        out = (scale * disk.area * radial
               * np.exp(-1j * (kx * cx + ky * cy)))
    if out.ndim == 0:
        return complex(out)
    return out


def diffraction_factor_quadrature(aperture: Aperture, kx: float, ky: float,
                                  tol: float = 1e-10) -> complex:
    """f(k) by adaptive 2-D quadrature over the open region.

    Cross-check oracle for the closed forms; slow by design.
    """
    scale = np.sqrt(aperture.transmissivity) / aperture.open_area
    rects = aperture._component_rectangles()

    def integrate_region(func_y_lo, func_y_hi, xmin, xmax):
        re, _ = integrate.dblquad(
            lambda y, x: np.cos(kx * x + ky * y),
            xmin, xmax, func_y_lo, func_y_hi, epsabs=tol / 10, epsrel=0)
        im, _ = integrate.dblquad(
            lambda y, x: -np.sin(kx * x + ky * y),
            xmin, xmax, func_y_lo, func_y_hi, epsabs=tol / 10, epsrel=0)
        return re + 1j * im

    total = 0.0 + 0.0j
    if rects is not None:
        for r in rects:
            xmin, xmax, ymin, ymax = r.bounds
            total += integrate_region(lambda x: ymin, lambda x: ymax, xmin, xmax)
    else:
        disk = aperture.shape
        cx, cy = disk.center
        R = disk.radius
        total += integrate_region(
            lambda x: cy - np.sqrt(max(R**2 - (x - cx)**2, 0.0)),
            lambda x: cy + np.sqrt(max(R**2 - (x - cx)**2, 0.0)),
            cx - R, cx + R)
    return complex(scale * total)


@dataclass(frozen=True)
class ModeGrid:
    """Square grid of transverse modes k = 2*pi/L * (nx, ny).

    Indices run over nx, ny in [-half_extent, half_extent]; the grid always
    contains the zero mode and is inversion symmetric.
    """

    plane_side: float = 1.0
    half_extent: int = 8

    def __post_init__(self):
        if self.plane_side <= 0:
            raise ApertureError(f"plane side must be positive, got "
                                f"{self.plane_side}")
        if self.half_extent < 0 or int(self.half_extent) != self.half_extent:
            raise ApertureError(f"half_extent must be a non-negative integer, "
                                f"got {self.half_extent}")

    @property
    def spacing(self) -> float:
        return 2 * np.pi / self.plane_side

    @property
    def side(self) -> int:
        return 2 * self.half_extent + 1

    @property
    def size(self) -> int:
        return self.side**2

    def contains(self, index: tuple[int, int]) -> bool:
        nx, ny = index
        return abs(nx) <= self.half_extent and abs(ny) <= self.half_extent

    def indices(self) -> Iterator[tuple[int, int]]:
        """All grid indices in lexicographic (nx, ny) order."""
        n = self.half_extent
        for nx in range(-n, n + 1):
            for ny in range(-n, n + 1):
                yield (nx, ny)

    def index_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(NX, NY) integer meshes of shape (side, side), [ix, iy] layout."""
        n = self.half_extent
        axis = np.arange(-n, n + 1)
        return np.meshgrid(axis, axis, indexing="ij")

    def wavevector(self, index: tuple[int, int]) -> tuple[float, float]:
        nx, ny = index
        return (self.spacing * nx, self.spacing * ny)

    def wavevector_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        nxs, nys = self.index_mesh()
        return (self.spacing * nxs, self.spacing * nys)


@dataclass(frozen=True)
class FactorTable:
    """Closed-form f table over a mode grid, [nx + n, ny + n] layout."""

    aperture: Aperture
    grid: ModeGrid
    values: np.ndarray

    def __getitem__(self, index: tuple[int, int]) -> complex:
        nx, ny = index
        if not self.grid.contains(index):
            raise KeyError(f"mode {index} outside grid "
                           f"[-{self.grid.half_extent}, {self.grid.half_extent}]^2")
        n = self.grid.half_extent
        return complex(self.values[nx + n, ny + n])

    def items(self) -> Iterator[tuple[tuple[int, int], complex]]:
        """(index, value) pairs in deterministic (nx, ny) order."""
        n = self.grid.half_extent
        for nx, ny in self.grid.indices():
            yield (nx, ny), complex(self.values[nx + n, ny + n])

    def sum_abs2(self) -> float:
        return _kernels.abs2_sum(self.values)


def diffraction_factor_table(aperture: Aperture, grid: ModeGrid) -> FactorTable:
    """Tabulate f(k) over every grid mode."""
    if abs(grid.plane_side - aperture.plane_side) > 1e-12:
        raise ApertureError("grid and aperture use different plane sides: "
                            f"{grid.plane_side} vs {aperture.plane_side}")
    kxs, kys = grid.wavevector_mesh()
    values = diffraction_factor(aperture, kxs, kys)
    return FactorTable(aperture, grid, np.asarray(values, dtype=np.complex128))


def normalization_defect(table: FactorTable) -> float:
    """|sum_k |f(k)|^2 - 1| over the table's (truncated) grid.

    The full-grid sum is exactly 1; the defect is the truncated tail and
    shrinks to zero as the grid half-extent grows.
    """
    return abs(table.sum_abs2() - 1.0)
