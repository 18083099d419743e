"""Backend equivalence: jitted kernels against the numpy reference path."""

import os
import subprocess
import sys

import numpy as np
import pytest

from qdiffract import _kernels

needs_numba = pytest.mark.skipif(not _kernels.USE_NUMBA,
                                 reason="numba backend disabled by env flag")


@needs_numba
def test_rect_union_factor_backends_agree(rng):
    kx = rng.uniform(-80, 80, (37, 11))
    ky = rng.uniform(-80, 80, (37, 11))
    widths = rng.uniform(0.01, 0.4, 3)
    heights = rng.uniform(0.01, 0.4, 3)
    cxs = rng.uniform(-0.3, 0.3, 3)
    cys = rng.uniform(-0.3, 0.3, 3)
    a = _kernels.rect_union_factor_numba(kx, ky, widths, heights, cxs, cys, 2.1)
    b = _kernels.rect_union_factor_numpy(kx, ky, widths, heights, cxs, cys, 2.1)
    np.testing.assert_allclose(a, b, atol=1e-14)
    assert a.shape == kx.shape


@needs_numba
def test_pattern_quadratic_backends_agree(rng):
    factors = rng.normal(0, 1, (4, 200)) + 1j * rng.normal(0, 1, (4, 200))
    c = rng.normal(0, 1, (4, 4)) + 1j * rng.normal(0, 1, (4, 4))
    c = c @ c.conj().T
    a = _kernels.pattern_quadratic_numba(factors, c)
    b = _kernels.pattern_quadratic_numpy(factors, c)
    np.testing.assert_allclose(a, b, atol=1e-11)


@needs_numba
def test_abs2_sum_backends_agree(rng):
    values = rng.normal(0, 1, (64, 64)) + 1j * rng.normal(0, 1, (64, 64))
    assert _kernels.abs2_sum_numba(values) == pytest.approx(
        _kernels.abs2_sum_numpy(values), rel=1e-13)


def test_env_flag_selects_numpy_fallback():
    code = (
        "from qdiffract import _kernels\n"
        "assert not _kernels.USE_NUMBA\n"
        "assert _kernels.rect_union_factor is _kernels.rect_union_factor_numpy\n"
        "from qdiffract.apertures import Aperture, DoubleSlit, diffraction_factor\n"
        "value = diffraction_factor(Aperture(DoubleSlit(0.05, 0.2)), 3.7, -1.2)\n"
        "print(repr(complex(value)))\n"
    )
    env = dict(os.environ, QDIFFRACT_NUMBA="0")
    result = subprocess.run([sys.executable, "-c", code], env=env,
                            capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
    from qdiffract.apertures import Aperture, DoubleSlit, diffraction_factor
    here = complex(diffraction_factor(Aperture(DoubleSlit(0.05, 0.2)),
                                      3.7, -1.2))
    assert complex(result.stdout.strip().strip("()")) == pytest.approx(here)
