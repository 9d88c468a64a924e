"""Normalized susceptibilities, propagation coefficients and three-level limits.

Each transition j couples to the medium through

    dG_j/dZ = i K_j rho_j,        K_j = alpha_j0 Gamma_j / (2 dn_j)

where rho_j is the coherence carrying its polarization and Z is length in
units of the probe absorption length.  With rho_j = lin_j G_j + (mixing)
this gives sigma_j = K_j lin_j = dk_j + i alpha_j / 2.  Gain means
Im sigma < 0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import densmat
from .densmat import DmSolution, ResonanceDenominators
from .errors import ConfigError, MisuseError, TruncationWarning
from .scheme import FieldState, SchemeParams


@dataclass(frozen=True)
class SusceptibilitySet:
    """Susceptibilities and coupled-wave coefficients at one field setting.

    Attributes
    ----------
    chi_norm : (4,) complex
        chi_j / chi_j0, equal to 1 for a resonant unperturbed transition
        (before any Doppler normalization).
    chi_fwm_2, chi_fwm_4 : complex
        Dimensionless cross couplings, ``gamma_j = (i alpha_j0 / 2) chi_fwm_j``.
    sigma : (4,) complex
        Linear propagation coefficients per unit Z.
    gamma_2, gamma_4 : complex
        Parametric couplings: ``dG4/dZ = i sigma_4 G4 + i gamma_4 G2*``.
    coupling : (4,) complex
        c_j multiplying the triple products G4 G2 G3*, G1 G3 G4*, G4 G2 G1*,
        G1 G3 G2* in the equations for G1..G4.
    scale : (4,) float
        K_j, coherence-to-amplitude conversion per unit Z.
    """

    chi_norm: np.ndarray
    chi_fwm_2: complex
    chi_fwm_4: complex
    sigma: np.ndarray
    gamma_2: complex
    gamma_4: complex
    coupling: np.ndarray
    scale: np.ndarray

    @property
    def alpha(self) -> np.ndarray:
        return 2 * self.sigma.imag

    @property
    def delta_k(self) -> np.ndarray:
        return self.sigma.real

    @property
    def stokes_gain(self) -> float:
        return -self.alpha[1]


def transition_scales(params: SchemeParams, norm: float = 1.0) -> np.ndarray:
    """K_j = alpha_j0 Gamma_j / (2 dn_j), divided by ``norm``.

    ``norm`` is the velocity-averaged resonant probe response at zero drive,
    so that alpha_4 = 1 per unit Z at line centre in the absence of fields.
    """
    dn = params.zero_field_differences()
    if np.any(dn == 0):
        raise ConfigError(f"a transition has no zero-field population difference {dn}; chi normalization undefined")
    return np.asarray(params.alpha0) * params.transition_widths / (2 * dn) / norm


def from_response(params: SchemeParams, fields: FieldState, lin, mix, norm: float = 1.0) -> SusceptibilitySet:
    """Build a :class:`SusceptibilitySet` from (averaged) per-field responses.

    ``lin`` and ``mix`` are the (4,) arrays of rho_j / G_j and of the mixing
    kernels (h1, k2, h3, k4).
    """
    lin = np.asarray(lin, dtype=complex)
    mix = np.asarray(mix, dtype=complex)
    G1, _, G3, _ = fields.G
    K = transition_scales(params, norm)
    dn = params.zero_field_differences()
    w = params.transition_widths
    chi_norm = w * lin / (1j * dn) / norm
    sigma = K * lin
    coupling = K * mix
    chi_fwm_2 = w[1] * mix[1] * G1 * G3 / (1j * dn[1]) / norm
    chi_fwm_4 = w[3] * mix[3] * G1 * G3 / (1j * dn[3]) / norm
    return SusceptibilitySet(
        chi_norm=chi_norm,
        chi_fwm_2=complex(chi_fwm_2),
        chi_fwm_4=complex(chi_fwm_4),
        sigma=sigma,
        gamma_2=complex(coupling[1] * G1 * G3),
        gamma_4=complex(coupling[3] * G1 * G3),
        coupling=coupling,
        scale=K,
    )


def chi_all(params: SchemeParams, fields: FieldState, dm: DmSolution | None = None, v=0.0) -> SusceptibilitySet:
    """Susceptibility set of a single velocity class."""
    if dm is None or dm.R is None:
        dm = densmat.steady_state(params, fields, v)
    den = ResonanceDenominators.at(params, fields, v)
    R2, R4 = dm.R
    dr1, _, dr3, _ = dm.deltas
    lin = [1j * dr1 / den.P1, 1j * R2 / den.P2, 1j * dr3 / den.P3, 1j * R4 / den.P4]
    nr = densmat.node_response(params, fields.G[0], fields.G[2], *_shifted(params, fields, v))
    k2, k4 = dm.fwm_kernel
    mix = [nr.mix[0], k2, nr.mix[2], k4]
    return from_response(params, fields, lin, mix)


def _shifted(params, fields, v):
    from .scheme import shifted_detunings

    return shifted_detunings(params, fields, v)


def _require_g3_off(fields):
    if fields.G[2] != 0:
        raise MisuseError("three-level limit requires G3 = 0")


def _g(params, fields, v):
    den = ResonanceDenominators.at(params, fields, v)
    g, _ = densmat.dressing_factors(fields.G[0], 0.0, den)
    return den, g


def chi_v_scheme_forms(params: SchemeParams, fields: FieldState, dm: DmSolution, v=0.0):
    """Both algebraic forms of the V-scheme probe susceptibility.

    Returns ``(ratio_form, fraction_form, fraction_form_uncorrected)``; the
    uncorrected fraction form has P1 where P1* is required and agrees with the
    other two only when Omega1 = 0.
    """
    _require_g3_off(fields)
    den, g = _g(params, fields, v)
    dn4 = params.zero_field_differences()[3]
    w4 = params.coherence_width["lm"]
    dr1, _, _, dr4 = dm.deltas
    a1 = abs(fields.G[0]) ** 2
    ratio = w4 / den.P4 * (dr4 - g[0] * dr1) / (dn4 * (1 + g[3]))
    frac = (w4 / dn4) * (dr4 * den.P41 - dr1 * a1 / np.conj(den.P1)) / (den.P41 * den.P4 + a1)
    frac_pub = (w4 / dn4) * (dr4 * den.P41 - dr1 * a1 / den.P1) / (den.P41 * den.P4 + a1)
    return complex(ratio), complex(frac), complex(frac_pub)


def chi_v_scheme(params: SchemeParams, fields: FieldState, dm: DmSolution | None = None, v=0.0) -> complex:
    """Probe susceptibility chi_4 / chi_40 of the V scheme l-g, l-m (G3 = 0)."""
    _require_g3_off(fields)
    dm = dm if dm is not None else densmat.populations(params, fields, v)
    ratio, frac, _ = chi_v_scheme_forms(params, fields, dm, v)
    assert abs(ratio - frac) <= 1e-9 * max(abs(ratio), 1e-300), (ratio, frac)
    return ratio


def chi_lambda_scheme_forms(params: SchemeParams, fields: FieldState, dm: DmSolution, v=0.0):
    """Ratio and fraction forms of the Lambda-scheme Stokes susceptibility."""
    _require_g3_off(fields)
    den, g = _g(params, fields, v)
    dn2 = params.zero_field_differences()[1]
    w2 = params.coherence_width["ng"]
    dr1, dr2, _, _ = dm.deltas
    a1 = abs(fields.G[0]) ** 2
    P12c = np.conj(den.P12)
    ratio = w2 / den.P2 * (dr2 - g[2] * dr1) / (dn2 * (1 + g[1]))
    frac = (w2 / dn2) * (dr2 * P12c - dr1 * a1 / np.conj(den.P1)) / (P12c * den.P2 + a1)
    return complex(ratio), complex(frac)


def chi_lambda_scheme(params: SchemeParams, fields: FieldState, dm: DmSolution | None = None, v=0.0) -> complex:
    """Stokes susceptibility chi_2 / chi_20 of the Lambda scheme l-g, g-n (G3 = 0)."""
    _require_g3_off(fields)
    dm = dm if dm is not None else densmat.populations(params, fields, v)
    ratio, frac = chi_lambda_scheme_forms(params, fields, dm, v)
    assert abs(ratio - frac) <= 1e-9 * max(abs(ratio), 1e-300), (ratio, frac)
    return ratio


def stokes_denominator(params: SchemeParams, fields: FieldState, v=0.0, form: str = "p2") -> complex:
    """Velocity-dependent factor P12'* + |G1|^2 / P' governing the Raman resonance.

    ``form="p2"`` uses P2' exactly as in the Lambda-scheme denominator
    1 + g2; ``form="p1"`` substitutes P1'*, the alternative reading.
    """
    den = ResonanceDenominators.at(params, fields, v)
    a1 = abs(fields.G[0]) ** 2
    if form == "p2":
        return complex(np.conj(den.P12) + a1 / den.P2)
    if form == "p1":
        return complex(np.conj(den.P12) + a1 / np.conj(den.P1))
    raise ConfigError(f"unknown form {form!r}; expected 'p2' or 'p1'")


def raman_limit(params: SchemeParams, fields: FieldState, dm: DmSolution | None = None, *, strict: bool = True) -> float:
    """Far-detuned two-term approximation of alpha_4 / alpha_40 (G3 = 0).

    The first term is the wing of the bare probe line, the second the
    Raman resonance l -> m via g, which is gain when r_m > r_g.
    """
    _require_g3_off(fields)
    dm = dm if dm is not None else densmat.populations(params, fields)
    cw = params.coherence_width
    w4, wgm, w1 = cw["lm"], cw["gm"], cw["lg"]
    O1, O4 = fields.Omega1, fields.Omega4
    if strict:
        den, g = _g(params, fields, 0.0)
        if min(abs(O1) / w1, abs(O4) / w4) < 10:
            raise MisuseError("raman_limit needs |Omega1|, |Omega4| >= 10 Gamma")
        if max(abs(g[0]), abs(g[3])) >= 0.1:
            raise MisuseError("raman_limit needs |g1|, |g4| << 1")
    dn4 = params.zero_field_differences()[3]
    dr4 = dm.deltas[3]
    a1 = abs(fields.G[0]) ** 2
    bare = w4 ** 2 * dr4 / (O4 ** 2 * dn4)
    raman = wgm * w4 / (wgm ** 2 + (O4 - O1) ** 2) * a1 * (dm.r_m - dm.r_g) / (O4 ** 2 * dn4)
    return float(bare - raman)


@dataclass(frozen=True)
class SumRule:
    absorptive: float  # integral of Re chi_4/chi_40 over Omega4
    dispersive: float  # integral of Im chi_4/chi_40 over Omega4
    expected: float  # pi Gamma_4 dr_4 / dn_4
    tail: float  # analytic tail added beyond the integration span

    @property
    def relative_error(self) -> float:
        return abs(self.absorptive - self.expected) / abs(self.expected)


def integrated_absorption(params: SchemeParams, fields: FieldState, span: float | None = None) -> SumRule:
    """Integrate the probe susceptibility of one velocity class over Omega4.

    Populations do not depend on Omega4, and every Omega4 pole of R4 / P4 lies
    in the same half plane, so the absorptive integral equals
    pi Gamma_4 dr_4 / dn_4 regardless of the drive structure.  The finite
    range [-span/2, span/2] is integrated adaptively and the 1/Omega4^2 wings
    beyond it are added analytically.
    """
    G1, _, G3, _ = fields.G
    cw = params.coherence_width
    need = 200 * max(max(cw.values()), abs(G1), abs(G3))
    if span is None:
        span = max(need, 4 * (abs(fields.Omega1) + abs(fields.Omega3))) * 2
    dm = densmat.populations(params, fields)
    dn4 = params.zero_field_differences()[3]
    w4 = cw["lm"]

    def chi(O4):
        f = fields.replace(Omega4=O4)
        den = ResonanceDenominators.at(params, f)
        g, vv = densmat.dressing_factors(G1, G3, den)
        _, R4 = densmat.R_combinations(dm.deltas, g, vv)
        return w4 * R4 / (den.P4 * dn4)

    half = span / 2
    pts = sorted({x for x in (fields.Omega1, fields.Omega3, fields.Omega1 + fields.Omega3, 0.0) if abs(x) < half})
    # breakpoints around every resonance and Autler-Townes component
    extra = []
    for c in pts:
        for d in (abs(G1), abs(G3), abs(G1) + abs(G3), abs(abs(G1) - abs(G3))):
            extra += [c - d, c + d]
    pts = sorted({x for x in pts + extra if -half < x < half})
    re = integrate.quad(lambda x: chi(x).real, -half, half, points=pts, limit=2000, epsabs=0, epsrel=1e-10)[0]
    # the dispersive integral is near zero, so give it an absolute floor
    im = integrate.quad(lambda x: chi(x).imag, -half, half, points=pts, limit=2000, epsabs=1e-10 * abs(re), epsrel=1e-10)[0]
    # wings fall off as a / Omega4^2
    tail = (chi(half).real + chi(-half).real) * half
    if span < need:
        warnings.warn(
            f"integration span {span:.3g} below 200 max(Gamma, G) = {need:.3g}; "
            f"estimated truncation {abs(tail):.3g} of {abs(re):.3g}",
            TruncationWarning,
            stacklevel=2,
        )
    expected = math.pi * w4 * dm.deltas[3] / dn4
    return SumRule(re + tail, im, float(expected), float(tail))

