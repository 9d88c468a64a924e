import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doublelambda import densmat
from doublelambda.densmat import COHERENCE_KEYS, as_dict, node_response, steady_state
from doublelambda.errors import MisuseError
from doublelambda.oracle import oracle_mixing, solve_oracle
from doublelambda.scheme import FieldState, na2_hinze

from conftest import random_fields, random_scheme

N_DRAWS = 1000
RTOL = 1e-10


def _worst_relative(a, b) -> tuple:
    da, db = as_dict(a), as_dict(b)
    worst, key = 0.0, None
    pop_scale = max(abs(db[k]) for k in ("r_l", "r_g", "r_n", "r_m"))
    coh_scale = max(abs(db[k]) for k in COHERENCE_KEYS)
    for k, ref in db.items():
        scale = coh_scale if k in COHERENCE_KEYS else pop_scale
        err = abs(da[k] - ref) / max(abs(ref), 1e-6 * scale)
        if err > worst:
            worst, key = err, k
    return worst, key


@pytest.mark.parametrize("topology", ["open", "closed"])
def test_closed_forms_match_dense_solve(topology):
    rng = np.random.default_rng(2024 if topology == "open" else 7)
    worst = (0.0, None)
    for _ in range(N_DRAWS):
        params = random_scheme(rng, topology)
        fields = random_fields(rng)
        v = rng.uniform(-800, 800)
        err = _worst_relative(steady_state(params, fields, v), solve_oracle(params, fields, v))
        worst = max(worst, err, key=lambda t: t[0])
    assert worst[0] < RTOL, f"worst relative deviation {worst[0]:.3g} in {worst[1]}"


@pytest.mark.parametrize("topology", ["open", "closed"])
def test_mixing_kernels_match_second_order_solve(topology):
    rng = np.random.default_rng(11)
    for _ in range(200):
        params = random_scheme(rng, topology)
        f = random_fields(rng)
        resp = node_response(params, f.G[0], f.G[2], *f.detunings)
        x_lg, x_nm = oracle_mixing(params, f)
        h1, h3 = np.ravel(resp.mix[0])[0], np.ravel(resp.mix[2])[0]
        assert abs(h1 * np.conj(f.G[2]) - x_lg) <= RTOL * abs(x_lg)
        assert abs(h3 * np.conj(f.G[0]) - x_nm) <= RTOL * abs(x_nm)


def _population_error(params, fields, uncorrected):
    fn = densmat.populations_open if params.topology.value == "open" else densmat.populations_closed
    sol = fn(params, fields, uncorrected=uncorrected)
    ref = solve_oracle(params, fields)
    return np.max(np.abs(sol.populations - ref.populations) / np.abs(ref.populations))


@pytest.mark.parametrize("topology", ["open", "closed"])
def test_uncorrected_population_forms_deviate(topology):
    # the corrected forms agree with the dense solve, the uncorrected ones do not
    rng = np.random.default_rng(5)
    params = random_scheme(rng, topology)
    fields = random_fields(rng)
    assert _population_error(params, fields, False) < RTOL
    assert _population_error(params, fields, True) > 1e-4


def test_uncorrected_dressing_factor_deviates():
    rng = np.random.default_rng(3)
    params = random_scheme(rng, "closed")
    f = random_fields(rng)
    den = densmat.ResonanceDenominators.at(params, f)
    g_ok, _ = densmat.dressing_factors(f.G[0], f.G[2], den)
    g_pr, _ = densmat.dressing_factors(f.G[0], f.G[2], den, uncorrected=True)
    assert g_ok[:5] == g_pr[:5]
    assert abs(g_ok[5] - g_pr[5]) > 1e-3 * abs(g_ok[5])


def test_zero_drive_reduces_to_zero_field(na2):
    sol = steady_state(na2, FieldState((0j, 0.1, 0j, 0.1), 10.0, 0.0, 5.0))
    np.testing.assert_allclose(sol.populations, na2.zero_field_populations(), rtol=1e-14)
    assert sol.coherences["r1"] == 0 and sol.coherences["r3"] == 0


def test_na2_zero_field_populations(na2):
    p = na2.zero_field_populations()
    assert p.sum() == pytest.approx(1.0, abs=1e-14)
    assert p[0] == pytest.approx(0.98656, abs=2e-5)
    assert p[2] == pytest.approx(0.013444, abs=2e-6)


def test_open_population_check_rejects_closed(na2):
    with pytest.raises(MisuseError):
        densmat.populations_open(na2, FieldState())


@settings(max_examples=60, deadline=None)
@given(
    G1=st.floats(0, 2000),
    G3=st.floats(0, 2000),
    O=st.tuples(*[st.floats(-3000, 3000)] * 3),
    v=st.floats(-2000, 2000),
)
def test_closed_populations_are_probabilities(G1, G3, O, v):
    params = na2_hinze()
    sol = steady_state(params, FieldState((G1, 0j, G3, 0j), *O), v)
    assert np.all(sol.populations >= -1e-12)
    assert sol.populations.sum() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(phase=st.floats(0, 2 * np.pi), G1=st.floats(1, 500), G3=st.floats(1, 500))
def test_populations_independent_of_drive_phase(phase, G1, G3):
    params = na2_hinze()
    a = steady_state(params, FieldState((G1, 0j, G3, 0j), 30.0, -20.0, 5.0))
    b = steady_state(params, FieldState((G1 * np.exp(1j * phase), 0j, G3, 0j), 30.0, -20.0, 5.0))
    np.testing.assert_allclose(a.populations, b.populations, rtol=1e-12)
