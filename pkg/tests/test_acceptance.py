"""Acceptance gate: each test checks one criterion at its stated tolerance."""

import math
import warnings

import numpy as np
import pytest
from scipy.signal import find_peaks

from doublelambda import doppler, harness, suscept
from doublelambda.densmat import steady_state
from doublelambda.doppler import average_susceptibility, peak_fwhm, velocity_profile
from doublelambda.oracle import solve_oracle
from doublelambda.propagate import (
    OpaCoefficients,
    analytic_opa,
    integrate,
    integrate_constant,
    manley_rowe_report,
    switching_curve,
)
from doublelambda.scheme import MHZ, FieldState, boltzmann_fraction, doppler_fwhm, homogeneous_fwhm_mhz, na2_hinze

from conftest import random_fields, random_scheme
from test_densmat import _worst_relative


def test_c01_doppler_width(acceptance):
    w = doppler_fwhm(na2_hinze(), 4)
    ok = abs(w - 1.7) <= 0.02 * 1.7
    acceptance(1, ok, f"probe Doppler FWHM {w:.4f} GHz (target 1.7 +- 2%)")
    assert ok


def test_c02_raman_widths(acceptance):
    p = na2_hinze()
    dop = doppler_fwhm(p, (1, 2)) * 1e3
    hom = homogeneous_fwhm_mhz(p.coherence_width["ln"])
    ok = abs(dop - 170) <= 0.02 * 170 and abs(hom - 6.4) <= 0.02 * 6.4
    acceptance(2, ok, f"Raman Doppler FWHM {dop:.1f} MHz (170 +- 2%), homogeneous {hom:.3f} MHz (6.4 +- 2%)")
    assert ok


def test_c03_boltzmann_fraction(acceptance):
    f = 100 * boltzmann_fraction(na2_hinze(), "n", "l")
    ok = abs(f - 1.4) <= 0.1
    acceptance(3, ok, f"thermal fraction of level n {f:.3f}% (1.4 +- 0.1)")
    assert ok


def test_c04_oracle_equivalence(acceptance):
    worst = {}
    for topology, seed in (("open", 101), ("closed", 202)):
        rng = np.random.default_rng(seed)
        w = 0.0
        for _ in range(1000):
            params = random_scheme(rng, topology)
            fields = random_fields(rng)
            v = rng.uniform(-800, 800)
            w = max(w, _worst_relative(steady_state(params, fields, v), solve_oracle(params, fields, v))[0])
        worst[topology] = w
    ok = max(worst.values()) < 1e-10
    acceptance(4, ok, f"1000 draws per topology, worst relative deviation open {worst['open']:.2e}, closed {worst['closed']:.2e} (< 1e-10)")
    assert ok


def test_c05_frozen_propagation_matches_analytic(acceptance):
    cfg = harness.load_config(preset="transparency_gain")
    p, f, grid = cfg.params, cfg.fields, cfg.grid
    tr = integrate(p, f, grid, 30.0, 0.01, frozen=True, sample_every=50)
    c = OpaCoefficients.from_susceptibility(average_susceptibility(p, f, grid))
    medium = 0.0
    for z, G in zip(tr.z, tr.G):
        E4 = analytic_opa(f.G[3], 0j, c, z)[1]
        medium = max(medium, abs(G[3] - E4) / abs(E4))
    # degenerate branch R = 0
    d = OpaCoefficients(1.0, -1.0, 0.0, 0.0, 0.5, -0.5)
    tr = integrate_constant(1.0, 0.3, d, 30.0, 0.01, sample_every=10)
    degenerate = 0.0
    for z, G in zip(tr.z, tr.G):
        E2c, E4 = analytic_opa(1.0, 0.3, d, z)
        degenerate = max(degenerate, abs(G[3] - E4) / abs(E4), abs(np.conj(G[1]) - E2c) / abs(E2c))
    ok = medium < 1e-8 and degenerate < 1e-8 and d.R == 0
    acceptance(5, ok, f"Z in [0, 30]: Doppler-averaged medium {medium:.2e}, R = 0 branch {degenerate:.2e} (< 1e-8)")
    assert ok


def test_c06_sum_rule(acceptance):
    p = na2_hinze()
    rng = np.random.default_rng(66)
    errs = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for _ in range(10):
            G1, G3 = rng.uniform(0, 2000, 2)
            O1, O3 = rng.uniform(-3000, 3000, 2)
            errs.append(suscept.integrated_absorption(p, FieldState((G1, 0, G3, 0), O1, O3, 0.0)).relative_error)
    ok = max(errs) < 1e-3
    acceptance(6, ok, f"10 random drive settings, worst relative error {max(errs):.2e} (< 1e-3)")
    assert ok


def _mr(preset):
    cfg = harness.load_config(preset=preset)
    rep = manley_rowe_report(harness.propagate_config(cfg, linear=False))
    return rep.relative_defect[1:]


def test_c07_manley_rowe_dichotomy(acceptance):
    off = _mr("mr_detuned")
    res = _mr("mr_resonant")
    ok = np.nanmax(off) < 0.05 and np.nanmax(res) > 0.5
    acceptance(7, ok, f"max D/|dN4| off resonance {np.nanmax(off):.3f} (< 0.05), resonant {np.nanmax(res):.2f} (> 0.5)")
    assert ok


@pytest.mark.slow
def test_c08_transparency_then_gain(acceptance):
    cfg = harness.load_config(preset="transparency_gain")
    tr = harness.propagate_config(cfg)
    T = tr.transmission[:, 3]
    z = tr.z
    above = np.flatnonzero(T > 1)
    cross = math.nan
    if len(above):
        i = above[0]
        cross = z[i - 1] + (1 - T[i - 1]) * (z[i] - z[i - 1]) / (T[i] - T[i - 1])
    stays = len(above) > 0 and np.all(T[above[0]:] > 1)
    flat = harness.load_config(preset="transparency_gain_resonant")
    Tflat = harness.propagate_config(flat).transmission[:, 3]
    ok = abs(cross - 4) <= 2 and stays and np.all(Tflat[1:] <= 1)
    acceptance(8, ok, f"Omega4 = 35 MHz: T4 crosses 1 at Z = {cross:.2f} (4 +- 2), T4(Z=10) = {T[-1]:.2f}; "
                      f"Omega4 = 0: max T4 over 0 < Z <= 30 is {Tflat[1:].max():.3f} (<= 1)")
    assert ok


@pytest.mark.slow
def test_c09_switching_depth(acceptance):
    cfg = harness.load_config(preset="switching")
    s = cfg.propagation
    coarse = switching_curve(cfg.params, cfg.fields, cfg.grid, s.z_max, "Omega4", cfg.scan.values() * MHZ, s.step,
                             options=s.options)
    x0 = coarse.values[np.argmin(coarse.transmission)]
    fine = switching_curve(cfg.params, cfg.fields, cfg.grid, s.z_max, "Omega4",
                           np.linspace(x0 - MHZ, x0 + MHZ, 41), s.step, options=s.options)
    T = min(coarse.transmission.min(), fine.transmission.min())
    at = fine.values[np.argmin(fine.transmission)] / MHZ
    ok = T < 1e-2
    acceptance(9, ok, f"minimum T4 at Z = 2 is {T:.3g} at Omega4 = {at:.2f} MHz (< 1e-2)")
    assert ok


def _narrow_peak(cfg):
    x = cfg.scan.values()

    def alpha4(o):
        return average_susceptibility(cfg.params, cfg.fields.replace(Omega4=o * MHZ), cfg.grid, mixing=False,
                                      check=False).alpha[3]

    a = np.array([alpha4(o) for o in x])
    idx, _ = find_peaks(a, prominence=0.02 * np.ptp(a))
    w = min((peak_fwhm(x, a, (x[k] - 0.5, x[k] + 0.5)) for k in idx), key=lambda w: w.fwhm)
    # refine on a grid 20 times finer than the width
    xf = np.linspace(w.position - 1.5 * w.fwhm, w.position + 1.5 * w.fwhm, 61)
    xf = np.union1d(xf, x[(x > xf[0] - 3 * w.fwhm) & (x < xf[-1] + 3 * w.fwhm)])
    af = np.array([alpha4(o) for o in xf])
    return peak_fwhm(xf, af, (w.position - w.fwhm / 2, w.position + w.fwhm / 2))


@pytest.mark.slow
def test_c10_sub_doppler_narrowing(acceptance):
    targets = {"narrowing_g1_1500": 98.0, "narrowing_g1_1000": 17.6, "narrowing_g1_500": 133.0}
    peaks = {name: _narrow_peak(harness.load_config(preset=name)) for name in targets}
    widths = {k: w.fwhm for k, w in peaks.items()}
    within = all(abs(widths[k] - t) <= 0.3 * t for k, t in targets.items())
    nonmono = widths["narrowing_g1_1000"] < widths["narrowing_g1_1500"] and widths["narrowing_g1_1000"] < widths["narrowing_g1_500"]
    cfg = harness.load_config(preset="narrowing_g1_1000")
    prof = velocity_profile(cfg.params, cfg.fields.replace(Omega4=peaks["narrowing_g1_1000"].position * MHZ), cfg.grid, "alpha4",
                            remove_maxwell=False)
    y, v = prof.values.real, prof.v_over_u
    band = v[y >= y.max() / 2]
    central = y[np.abs(v) <= 0.5].sum() / y.sum()
    participates = band.min() < 0 < band.max() and central > 0.5
    ok = within and nonmono and participates
    acceptance(10, ok, "FWHM at G1 = 1500/1000/500 MHz: " + "/".join(f"{widths[k]:.1f}" for k in targets)
               + f" MHz (98/17.6/133 +- 30%); G1 = 1000 half-max velocity band [{band.min():.2f}, {band.max():.2f}] u, "
               f"|v| <= u/2 carries {central:.0%} of the absorption")
    assert ok
