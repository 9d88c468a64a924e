import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doublelambda import doppler, kernel, suscept
from doublelambda.doppler import VelocityGrid
from doublelambda.errors import ConfigError, MisuseError, ResolutionWarning
from doublelambda.scheme import MHZ, FieldState, na2_hinze


def test_grid_weights_normalized(na2):
    for g in (VelocityGrid.for_params(na2), VelocityGrid.for_params(na2, "gauss_hermite")):
        assert g.weights.sum() == pytest.approx(1.0, abs=1e-14)
        assert np.dot(g.weights, g.nodes) == pytest.approx(0.0, abs=1e-9 * g.u)
        # second moment of the Maxwell distribution is u^2/2
        assert np.dot(g.weights, g.nodes ** 2) == pytest.approx(g.u ** 2 / 2, rel=1e-6)


def test_bad_grid_rejected(na2):
    with pytest.raises(ConfigError):
        VelocityGrid.uniform(0, 500.0)
    with pytest.raises(ConfigError):
        VelocityGrid.for_params(na2, "simpson")


def test_coarse_grid_warns(na2):
    with pytest.warns(ResolutionWarning):
        doppler.average_susceptibility(na2, FieldState(), VelocityGrid.for_params(na2, "gauss_hermite"))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        doppler.check_resolution(na2, VelocityGrid.for_params(na2))


def test_undriven_probe_normalized(na2, grid):
    chi = doppler.average_susceptibility(na2, FieldState(), grid)
    assert chi.alpha[3] == pytest.approx(1.0, rel=1e-12)


def test_single_class_reduces_to_homogeneous(na2):
    f = FieldState((200, 0.1, 30, 0.1), 150.0, 20.0, 80.0)
    a = doppler.average_susceptibility(na2, f, VelocityGrid.single(0.0))
    b = suscept.chi_all(na2, f)
    np.testing.assert_allclose(a.sigma, b.sigma, rtol=1e-12)
    np.testing.assert_allclose(a.coupling, b.coupling, rtol=1e-12)


@pytest.mark.skipif(kernel.BACKEND != "cython", reason="compiled kernel not built")
def test_backends_agree(na2, grid):
    f = FieldState.from_mhz((60, 0, 20, 1), 0, 0, 35)
    a = doppler.average_susceptibility(na2, f, grid, backend="cython")
    b = doppler.average_susceptibility(na2, f, grid, backend="numpy")
    np.testing.assert_allclose(a.sigma, b.sigma, rtol=1e-11)
    np.testing.assert_allclose(a.coupling, b.coupling, rtol=1e-11)


def test_unknown_backend(na2, grid):
    with pytest.raises(ConfigError):
        doppler.average_susceptibility(na2, FieldState(), grid, backend="fortran")


def test_default_grid_converged(na2):
    f = FieldState.from_mhz((1000, 0, 242, 1), 2140, 2140, 2000)
    u = doppler.thermal_speed(na2)
    a = doppler.average_susceptibility(na2, f, VelocityGrid.uniform(1801, u))
    b = doppler.average_susceptibility(na2, f, VelocityGrid.uniform(3601, u))
    assert np.max(np.abs(a.sigma - b.sigma) / np.abs(b.sigma)) < 1e-4


def test_compensation_residual_zero_at_matched_drive(na2):
    k1, k2 = na2.doppler_coefficients[:2]
    O1 = 1000.0
    G1 = O1 * math.sqrt((k1 - k2) / k1)
    assert doppler.compensation_residual(na2, FieldState((G1, 0, 0, 0), O1)) == pytest.approx(0.0, abs=1e-12)
    assert doppler.compensation_residual(na2, FieldState((0, 0, 0, 0), O1)) == pytest.approx(-1.0)
    with pytest.raises(MisuseError):
        doppler.compensation_residual(na2, FieldState((G1, 0, 0, 0), 0.0))


def test_velocity_profile_shapes(na2):
    grid = VelocityGrid.for_params(na2, n=301)
    prof = doppler.velocity_profile(na2, FieldState((60 * MHZ, 0, 20 * MHZ, 0)), grid, "dr2")
    assert prof.values.shape == (301,)
    rows = list(prof.rows())
    assert len(rows) == 301 and len(rows[0]) == 4
    with pytest.raises(ConfigError):
        doppler.velocity_profile(na2, FieldState(), grid, "entropy")


def test_undriven_profile_is_flat(na2):
    grid = VelocityGrid.for_params(na2, n=101)
    prof = doppler.velocity_profile(na2, FieldState(), grid, "dr4")
    np.testing.assert_allclose(prof.values.real, na2.zero_field_differences()[3], rtol=1e-12)


@settings(max_examples=40, deadline=None)
@given(x0=st.floats(-5, 5), w=st.floats(0.2, 3), h=st.floats(0.1, 10))
def test_peak_fwhm_lorentzian(x0, w, h):
    x = np.linspace(-20, 20, 40001)
    y = h / (1 + ((x - x0) / (w / 2)) ** 2)
    pk = doppler.peak_fwhm(x, y, baseline="zero")
    assert pk.position == pytest.approx(x0, abs=1e-3)
    assert pk.fwhm == pytest.approx(w, rel=1e-3)


def test_peak_fwhm_without_maximum():
    x = np.linspace(0, 1, 11)
    with pytest.raises(MisuseError):
        doppler.peak_fwhm(x, x)
