import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doublelambda.errors import ConfigError
from doublelambda.scheme import (
    MHZ,
    FieldState,
    Topology,
    boltzmann_fraction,
    doppler_fwhm,
    frequency_matching_residual,
    homogeneous_fwhm_mhz,
    na2_hinze,
    shifted_detunings,
    thermal_speed,
)


def test_thermal_speed(na2):
    assert thermal_speed(na2) == pytest.approx(497.06, rel=1e-4)


def test_doppler_widths(na2):
    assert doppler_fwhm(na2, 4) == pytest.approx(1.7243, rel=1e-4)
    assert doppler_fwhm(na2, (1, 2)) * 1e3 == pytest.approx(168.81, rel=1e-4)


def test_homogeneous_raman_width():
    assert homogeneous_fwhm_mhz(20.0) == pytest.approx(6.366, rel=1e-3)


def test_boltzmann_fraction(na2):
    assert boltzmann_fraction(na2, "n", "l") == pytest.approx(0.013627, rel=1e-4)
    with pytest.raises(ConfigError):
        boltzmann_fraction(na2, "l", "n")


def test_frequency_matching_enforced(na2):
    assert frequency_matching_residual(na2.wavelengths_nm) < 5e-4
    with pytest.raises(ConfigError, match="frequency matching"):
        na2_hinze(wavelengths_nm=(655.0, 756.0, 532.0, 504.0))


@pytest.mark.parametrize(
    "change",
    [
        {"level_width": {"l": 20.0, "g": -1.0, "n": 20.0, "m": 120.0}},
        {"coherence_width": {"lg": 70.0, "ng": 70.0, "nm": 70.0, "lm": 0.0, "ln": 20.0, "gm": 120.0}},
        {"gamma_partial": {"gl": 70.0, "gn": 60.0, "mn": 5.0, "ml": 10.0}},
        {"propagation_sign": (1, 1, 2, 1)},
        {"topology": "sideways"},
        {"alpha0": (1.0, 0.0, 1.0, 1.0)},
        {"pump": (1.0, 0.0, 0.2, 0.0)},
    ],
)
def test_invalid_scheme_rejected(change):
    with pytest.raises(ConfigError):
        na2_hinze(**change)


def test_open_scheme_needs_positive_pump():
    with pytest.raises(ConfigError):
        na2_hinze(topology=Topology.OPEN, pump=(0.0, 0.0, 0.0, 0.0))


def test_equal_dipole_alpha0(na2):
    np.testing.assert_allclose(na2.alpha0, (0.7328, 0.008652, 0.012295, 1.0), rtol=1e-3)
    assert na2.alpha0[3] == 1.0


def test_omega2_is_derived():
    f = FieldState((1, 0, 1, 0), 10.0, 3.0, 4.0)
    assert f.Omega2 == 9.0
    with pytest.raises(ConfigError):
        f.replace(Omega2=1.0)


def test_mhz_round_trip():
    f = FieldState.from_mhz((60, 0, 20, 1), 1000, -1000, -2500)
    assert f.G[0] == pytest.approx(60 * 2 * math.pi)
    assert f.Omega4 == pytest.approx(-2500 * MHZ)
    G, O1, O3, O4 = f.to_mhz()
    assert G[0] == pytest.approx(60) and O3 == pytest.approx(-1000)


def test_nonfinite_fields_rejected():
    with pytest.raises(ConfigError):
        FieldState((float("nan"), 0, 0, 0))
    with pytest.raises(ConfigError):
        FieldState(Omega1=float("inf"))


@settings(max_examples=50, deadline=None)
@given(v=st.floats(-3000, 3000), O=st.tuples(*[st.floats(-1e4, 1e4)] * 3))
def test_shifted_detunings_keep_frequency_matching(v, O):
    # the four Doppler shifts cancel up to the wavelength residual
    params = na2_hinze()
    f = FieldState((0, 0, 0, 0), *O)
    s = shifted_detunings(params, f, v)
    k = params.doppler_coefficients
    loop = (s[0] - s[1] + s[2] - s[3]) - (f.Omega1 - f.Omega2 + f.Omega3 - f.Omega4)
    assert loop == pytest.approx(-(k[0] - k[1] + k[2] - k[3]) * v, abs=1e-9 * (1 + abs(v)))
    assert abs(k[0] - k[1] + k[2] - k[3]) <= 5e-4 * abs(k[3])


def test_params_pickle_round_trip(na2):
    import pickle

    assert pickle.loads(pickle.dumps(na2)) == na2
