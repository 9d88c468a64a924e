"""Steady-state density matrix of one velocity class in closed form.

The strong fields G1 (l-g) and G3 (n-m) are kept to all orders; the weak
fields G2 (g-n) and G4 (m-l) enter to first order.  The mixing drive on the
strong transitions, proportional to G4*G2, is obtained at second order in
the weak fields.

Every function accepts scalar or array detunings so that whole velocity
grids are evaluated in one call.  An independent brute-force solver lives in
:mod:`doublelambda.oracle`.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .errors import MisuseError, SingularSaturationError
from .scheme import FieldState, SchemeParams, Topology, shifted_detunings

COHERENCE_KEYS = ("r1", "r2", "r3", "r4", "rt2", "rt4", "r12", "r43", "r32", "r41")

conj = np.conj


@dataclass(frozen=True)
class ResonanceDenominators:
    """Complex resonance denominators at (possibly Doppler-shifted) detunings."""

    P1: complex
    P2: complex
    P3: complex
    P4: complex
    P12: complex
    P43: complex
    P32: complex
    P41: complex
    d2: complex
    d4: complex

    @classmethod
    def from_detunings(cls, params: SchemeParams, O1, O2, O3, O4) -> "ResonanceDenominators":
        cw = params.coherence_width
        return cls(
            P1=cw["lg"] + 1j * O1,
            P2=cw["ng"] + 1j * O2,
            P3=cw["nm"] + 1j * O3,
            P4=cw["lm"] + 1j * O4,
            P12=cw["ln"] + 1j * (O1 - O2),
            P43=cw["ln"] + 1j * (O4 - O3),
            P32=cw["gm"] + 1j * (O3 - O2),
            P41=cw["gm"] + 1j * (O4 - O1),
            d2=cw["ng"] + 1j * (O1 + O3 - O4),
            d4=cw["lm"] + 1j * (O1 - O2 + O3),
        )

    @classmethod
    def at(cls, params: SchemeParams, fields: FieldState, v=0.0) -> "ResonanceDenominators":
        return cls.from_detunings(params, *shifted_detunings(params, fields, v))


@dataclass(frozen=True)
class SaturationFactors:
    """Dimensionless saturation and dressing factors.

    ``g`` and ``v`` hold g_1..g_8 and v_1..v_8 (index 0 is g_1).  The real
    branching constants ``a``, ``b`` apply to the open scheme, ``b_closed``
    and ``beta`` to the closed one; the unused ones are ``nan``.
    """

    g: tuple
    v: tuple
    ae1: float
    ae3: float
    ae1_0: float
    ae3_0: float
    a: tuple
    b: tuple
    b_closed: float
    beta: float


@dataclass(frozen=True)
class DmSolution:
    """Populations, population differences and (optionally) coherences.

    ``coherences`` maps ``r1, r2, r3, r4, rt2, rt4, r12, r43, r32, r41`` to
    complex amplitudes; it is ``None`` for a populations-only result.
    ``R`` holds the combinations (R2, R4) and ``fwm_kernel`` the factors
    (k2, k4) with ``rt2 = k2 G1 G3 G4*`` and ``rt4 = k4 G1 G3 G2*``.
    """

    populations: np.ndarray
    deltas: np.ndarray
    coherences: Mapping[str, complex] | None = None
    R: tuple | None = None
    fwm_kernel: tuple | None = None

    @property
    def r_l(self):
        return self.populations[0]

    @property
    def r_g(self):
        return self.populations[1]

    @property
    def r_n(self):
        return self.populations[2]

    @property
    def r_m(self):
        return self.populations[3]


# -- populations ---------------------------------------------------------------


def saturation_parameters(params: SchemeParams, G1, G3, den: ResonanceDenominators):
    """Return (ae1, ae3, ae1_0, ae3_0) for the configured topology."""
    lw, gp, cw = params.level_width, params.gamma_partial, params.coherence_width
    Gl, Gg, Gn, Gm = lw["l"], lw["g"], lw["n"], lw["m"]
    a1sq, a3sq = np.abs(G1) ** 2, np.abs(G3) ** 2
    if params.topology is Topology.OPEN:
        ae1_0 = 2 * (Gl + Gg - gp["gl"]) * a1sq / (Gl * Gg * cw["lg"])
    else:
        ae1_0 = 2 * a1sq / (cw["lg"] * Gg)
    ae3_0 = 2 * (Gm + Gn - gp["mn"]) * a3sq / (Gm * Gn * cw["nm"])
    ae1 = ae1_0 * cw["lg"] ** 2 / np.abs(den.P1) ** 2
    ae3 = ae3_0 * cw["nm"] ** 2 / np.abs(den.P3) ** 2
    return ae1, ae3, ae1_0, ae3_0


def open_branching(params: SchemeParams, uncorrected: bool = False):
    """Branching constants (a1, a2, a3), (b1, b2, b3) of the open scheme.

    ``uncorrected`` reproduces the uncorrected variant of ``b3`` carrying an
    extra factor Gamma_l; it fails the brute-force comparison and exists only
    so that tests can demonstrate the discrepancy.
    """
    lw, gp = params.level_width, params.gamma_partial
    Gl, Gg, Gn, Gm = lw["l"], lw["g"], lw["n"], lw["m"]
    a1 = gp["gn"] * Gl / (Gn * (Gl + Gg - gp["gl"]))
    a3 = (Gg - gp["gl"]) / (Gl + Gg - gp["gl"])
    a2 = a1 * (Gn - gp["gn"]) / gp["gn"]
    b1 = gp["ml"] * Gn / (Gl * (Gm + Gn - gp["mn"]))
    b2 = (Gm - gp["mn"]) / (Gm + Gn - gp["mn"])
    b3 = b1 * (Gl - gp["ml"]) / gp["ml"]
    if uncorrected:
        b3 = b3 * Gl
    return (a1, a2, a3), (b1, b2, b3)


def _require(topology, params):
    if params.topology is not topology:
        raise MisuseError(f"operation requires {topology.value} topology, params are {params.topology.value}")


def _pops_open(params, G1, G3, den, uncorrected=False):
    nl, ng, nn, nm = params.zero_field_populations()
    dn1, dn2, dn3, dn4 = nl - ng, nn - ng, nn - nm, nl - nm
    ae1, ae3, ae1_0, ae3_0 = saturation_parameters(params, G1, G3, den)
    (a1, a2, a3), (b1, b2, b3) = open_branching(params, uncorrected)
    denom = (1 + ae1) * (1 + ae3) - a1 * ae1 * b1 * ae3
    if np.any(~(denom > 0)):
        raise SingularSaturationError("open-scheme saturation denominator is not positive")
    dr1 = ((1 + ae3) * dn1 + b1 * ae3 * dn3) / denom
    dr3 = ((1 + ae1) * dn3 + a1 * ae1 * dn1) / denom
    dr2 = dn2 - b2 * ae3 * dr3 - a2 * ae1 * dr1
    dr4 = dn4 - a3 * ae1 * dr1 - b3 * ae3 * dr3
    rg = ng + (1 - a3) * ae1 * dr1
    rm = nm + (1 - b2) * ae3 * dr3
    rn = nn - b2 * ae3 * dr3 + a1 * ae1 * dr1
    if uncorrected:
        rl = nl - b1 * ae3 * dr3 + a3 * ae1 * dr1
    else:
        rl = nl + b1 * ae3 * dr3 - a3 * ae1 * dr1
    factors = dict(ae=(ae1, ae3, ae1_0, ae3_0), a=(a1, a2, a3), b=(b1, b2, b3), b_closed=np.nan, beta=np.nan)
    return np.array([rl, rg, rn, rm]), np.array([dr1, dr2, dr3, dr4]), factors


def _pops_closed(params, G1, G3, den, uncorrected=False):
    lw, gp = params.level_width, params.gamma_partial
    Gg, Gn, Gm = lw["g"], lw["n"], lw["m"]
    w = params.pump
    if uncorrected:
        # uncorrected zero-field cascade term divides the m -> n branch by Gamma_n
        wn_eff = w[2] + w[1] * gp["gn"] / Gg + w[3] * gp["mn"] / Gn
        nl = 1.0 / (1.0 + w[3] / Gm + w[1] / Gg + wn_eff / Gn)
        nl, ng, nn, nm = nl, nl * w[1] / Gg, nl * wn_eff / Gn, nl * w[3] / Gm
    else:
        nl, ng, nn, nm = params.zero_field_populations()
    dn1, dn3 = nl - ng, nn - nm
    ae1, ae3, ae1_0, ae3_0 = saturation_parameters(params, G1, G3, den)
    b = Gn / (Gm + Gn - gp["mn"])
    X = dn3 * (1 + ae1) + dn1 * gp["gn"] * ae1 / Gn
    beta = (1 + ae3) * (1 - dn3 + 2 * (nl + nm) * ae1) + (1 + 2 * b * ae3) * X
    if np.any(~(beta > 0)):
        raise SingularSaturationError("closed-scheme normalization beta is not positive")
    rl = nl * (1 + ae3) * (1 + ae1) / beta
    rg = (1 + ae3) * (nl * (1 + ae1) - dn1) / beta
    rn = (nm * (1 + ae3) * (1 + ae1) + X * (1 + b * ae3)) / beta
    rm = (nm * (1 + ae3) * (1 + ae1) + X * b * ae3) / beta
    pops = np.array([rl, rg, rn, rm])
    deltas = np.array([rl - rg, rn - rg, rn - rm, rl - rm])
    nan3 = (np.nan,) * 3
    factors = dict(ae=(ae1, ae3, ae1_0, ae3_0), a=nan3, b=nan3, b_closed=b, beta=beta)
    return pops, deltas, factors


def _pops(params, G1, G3, den, uncorrected=False):
    if params.topology is Topology.OPEN:
        return _pops_open(params, G1, G3, den, uncorrected)
    return _pops_closed(params, G1, G3, den, uncorrected)


def populations_open(params: SchemeParams, fields: FieldState, v=0.0, *, uncorrected=False) -> DmSolution:
    """Open-scheme populations dressed by the strong fields G1, G3."""
    _require(Topology.OPEN, params)
    den = ResonanceDenominators.at(params, fields, v)
    pops, deltas, _ = _pops_open(params, fields.G[0], fields.G[2], den, uncorrected)
    return DmSolution(pops, deltas)


def populations_closed(params: SchemeParams, fields: FieldState, v=0.0, *, uncorrected=False) -> DmSolution:
    """Closed-scheme populations dressed by the strong fields G1, G3."""
    _require(Topology.CLOSED, params)
    den = ResonanceDenominators.at(params, fields, v)
    pops, deltas, _ = _pops_closed(params, fields.G[0], fields.G[2], den, uncorrected)
    return DmSolution(pops, deltas)


def populations(params: SchemeParams, fields: FieldState, v=0.0) -> DmSolution:
    if params.topology is Topology.OPEN:
        return populations_open(params, fields, v)
    return populations_closed(params, fields, v)


# -- first-order coherences ---------------------------------------------------


def dressing_factors(G1, G3, den: ResonanceDenominators, uncorrected: bool = False):
    """g_1..g_8 and v_1..v_8 as two tuples.

    ``uncorrected`` returns the uncorrected g_6 = |G1|^2 P41 d2*, which is
    dimensionally inconsistent with its siblings.
    """
    a1, a3 = np.abs(G1) ** 2, np.abs(G3) ** 2
    P1, P2, P3, P4 = den.P1, den.P2, den.P3, den.P4
    P12c, P32c, P1c, P3c = conj(den.P12), conj(den.P32), conj(P1), conj(P3)
    P41, P43, d2c, d4c = den.P41, den.P43, conj(den.d2), conj(den.d4)
    g = (
        a1 / (P41 * P1c),
        a1 / (P12c * P2),
        a1 / (P12c * P1c),
        a1 / (P41 * P4),
        a1 / (P43 * d2c),
        a1 * P41 * d2c if uncorrected else a1 / (P41 * d2c),
        a1 / (P32c * d4c),
        a1 / (P12c * d4c),
    )
    v = (
        a3 / (P43 * P3c),
        a3 / (P32c * P2),
        a3 / (P32c * P3c),
        a3 / (P43 * P4),
        a3 / (P41 * d2c),
        a3 / (P43 * d2c),
        a3 / (P12c * d4c),
        a3 / (P32c * d4c),
    )
    return g, v


def R_combinations(deltas, g, v):
    """R2 and R4: population-difference combinations entering chi_2, chi_4."""
    dr1, dr2, dr3, dr4 = deltas
    g1, g2, g3, g4, g5, g6, g7, g8 = g
    v1, v2, v3, v4, v5, v6, v7, v8 = v
    R2 = (dr2 * (1 + g7 + v7) - v3 * (1 + v7 - g8) * dr3 - g3 * (1 + g7 - v8) * dr1) / (
        (1 + g2 + v2) + (g7 + g2 * (g7 - v8) + v7 + v2 * (v7 - g8))
    )
    R4 = (dr4 * (1 + v5 + g5) - g1 * (1 + g5 - v6) * dr1 - v1 * (1 + v5 - g6) * dr3) / (
        (1 + g4 + v4) + (v5 + v4 * (v5 - g6) + g5 + g4 * (g5 - v6))
    )
    return R2, R4


def fwm_kernels(deltas, R2, R4, g, v, den: ResonanceDenominators):
    """k2, k4 with rt2 = k2 G1 G3 G4* and rt4 = k4 G1 G3 G2*."""
    dr1, _, dr3, _ = deltas
    P1, P2, P3, P4 = den.P1, den.P2, den.P3, den.P4
    P41c, P43c = conj(den.P41), conj(den.P43)
    k2 = -1j / (den.d2 * (1 + conj(v[4]) + conj(g[4]))) * (
        dr1 / (P1 * P41c) + dr3 / (P3 * P43c) + conj(R4) / conj(P4) * (1 / P41c + 1 / P43c)
    )
    k4 = -1j / (den.d4 * (1 + conj(v[6]) + conj(g[6]))) * (
        dr1 / (P1 * den.P12) + dr3 / (P3 * den.P32) + conj(R2) / conj(P2) * (1 / den.P12 + 1 / den.P32)
    )
    return k2, k4


@dataclass
class _Reduced:
    """First-order responses with the strong-field factors divided out.

    Group A is driven by a unit G4, group B by a unit G2:
    r41 = G1* x41, r43 = G3* x43, conj(rt2) = G1* G3* s (group A);
    conj(r12) = G1* u12, conj(r32) = G3* u32, conj(rt4) = G1* G3* t (group B).
    """

    lin: tuple  # rho_j / G_j for j = 1..4
    x41: complex
    x43: complex
    s: complex
    u12: complex
    u32: complex
    t: complex


def _reduced(G1, G3, deltas, R2, R4, g, v, den):
    dr1, _, dr3, _ = deltas
    P1c, P3c = conj(den.P1), conj(den.P3)
    lin = (1j * dr1 / den.P1, 1j * R2 / den.P2, 1j * dr3 / den.P3, 1j * R4 / den.P4)
    r4, r2 = lin[3], lin[1]
    g5, v5 = g[4], v[4]
    g7, v7 = g[6], v[6]
    a41 = (-1j * r4 + dr1 / P1c) / den.P41
    a43 = (1j * r4 - dr3 / P3c) / den.P43
    detA = (1 + v5) * (1 + g5) - g5 * v5
    x41 = ((1 + g5) * a41 + v5 * a43) / detA
    x43 = ((1 + v5) * a43 + g5 * a41) / detA
    s = 1j * (x41 - x43) / conj(den.d2)
    b12 = (1j * r2 - dr1 / P1c) / conj(den.P12)
    b32 = (dr3 / P3c - 1j * r2) / conj(den.P32)
    detB = (1 + v7) * (1 + g7) - g7 * v7
    u12 = ((1 + g7) * b12 + v7 * b32) / detB
    u32 = ((1 + v7) * b32 + g7 * b12) / detB
    t = 1j * (u32 - u12) / conj(den.d4)
    return _Reduced(lin, x41, x43, s, u12, u32, t)


def _population_matrix(params: SchemeParams, kappa1, kappa3):
    """Rate matrix of the population block including strong-field transfer.

    Returns an array of shape (..., 4, 4); for the closed scheme the l row is
    replaced by the trace condition.
    """
    lw, gp = params.level_width, params.gamma_partial
    kappa1 = np.asarray(kappa1, dtype=float)
    kappa3 = np.asarray(kappa3, dtype=float)
    shape = np.broadcast(kappa1, kappa3).shape
    M = np.zeros(shape + (4, 4))
    for a, key in enumerate(("l", "g", "n", "m")):
        M[..., a, a] = -lw[key]
    M[..., 0, 1] += gp["gl"]
    M[..., 2, 1] += gp["gn"]
    M[..., 2, 3] += gp["mn"]
    M[..., 0, 3] += gp["ml"]
    if params.topology is Topology.CLOSED:
        for a in (1, 2, 3):
            M[..., a, 0] += params.pump[a]
    M[..., 1, 0] += kappa1
    M[..., 1, 1] -= kappa1
    M[..., 0, 0] -= kappa1
    M[..., 0, 1] += kappa1
    M[..., 3, 2] += kappa3
    M[..., 3, 3] -= kappa3
    M[..., 2, 2] -= kappa3
    M[..., 2, 3] += kappa3
    if params.topology is Topology.CLOSED:
        M[..., 0, :] = 1.0
    return M


def mixing_kernels(params: SchemeParams, G1, G3, den, red: _Reduced):
    """h1, h3: strong-transition coherences driven at second order.

    The l-g coherence acquires ``h1 G4 G2 G3*`` and the n-m coherence
    ``h3 G4 G2 G1*``.  The small two-photon loop mismatch is neglected, i.e.
    both first-order groups are combined at the same frequencies.
    """
    a1sq, a3sq = np.abs(G1) ** 2, np.abs(G3) ** 2
    cw = params.coherence_width
    P1, P3 = den.P1, den.P3
    kappa1 = 2 * a1sq * cw["lg"] / np.abs(P1) ** 2
    kappa3 = 2 * a3sq * cw["nm"] / np.abs(P3) ** 2
    e1 = red.u32 - red.x43  # S_lg = -i G3* e1
    e3 = red.x41 - red.u12  # S_nm = -i G1* e3
    Q = np.stack(
        np.broadcast_arrays(
            -1j * red.t + e1 / P1,
            1j * red.s - e1 / P1,
            -1j * red.s + e3 / P3,
            1j * red.t - e3 / P3,
        ),
        axis=-1,
    )
    if params.topology is Topology.CLOSED:
        Q[..., 0] = 0.0
    M = _population_matrix(params, kappa1, kappa3)
    M = np.broadcast_to(M, Q.shape[:-1] + (4, 4))
    rhs = np.stack([-Q.real, -Q.imag], axis=-1)
    sol = np.linalg.solve(M, rhs)
    p = sol[..., 0] + 1j * sol[..., 1]
    D1 = p[..., 0] - p[..., 1]
    D3 = p[..., 2] - p[..., 3]
    h1 = 1j * (a1sq * D1 - e1) / P1
    h3 = 1j * (a3sq * D3 - e3) / P3
    return h1, h3


# -- assembled solutions ------------------------------------------------------


def coherences(params: SchemeParams, fields: FieldState, pops: DmSolution, v=0.0) -> DmSolution:
    """Attach strong- and weak-field coherences to a populations-only solution."""
    G1, G2, G3, G4 = fields.G
    den = ResonanceDenominators.at(params, fields, v)
    g, vv = dressing_factors(G1, G3, den)
    R2, R4 = R_combinations(pops.deltas, g, vv)
    k2, k4 = fwm_kernels(pops.deltas, R2, R4, g, vv, den)
    red = _reduced(G1, G3, pops.deltas, R2, R4, g, vv, den)
    coh = {
        "r1": G1 * red.lin[0],
        "r2": G2 * red.lin[1],
        "r3": G3 * red.lin[2],
        "r4": G4 * red.lin[3],
        "rt2": k2 * G1 * G3 * conj(G4),
        "rt4": k4 * G1 * G3 * conj(G2),
        "r12": G1 * conj(red.u12) * conj(G2),
        "r43": conj(G3) * red.x43 * G4,
        "r32": G3 * conj(red.u32) * conj(G2),
        "r41": conj(G1) * red.x41 * G4,
    }
    return DmSolution(pops.populations, pops.deltas, MappingProxyType(coh), (R2, R4), (k2, k4))


def steady_state(params: SchemeParams, fields: FieldState, v=0.0) -> DmSolution:
    """Full closed-form steady state for velocity ``v`` (m/s)."""
    return coherences(params, fields, populations(params, fields, v), v)


def saturation_factors(params: SchemeParams, fields: FieldState, v=0.0, *, uncorrected=False) -> SaturationFactors:
    den = ResonanceDenominators.at(params, fields, v)
    G1, G3 = fields.G[0], fields.G[2]
    g, vv = dressing_factors(G1, G3, den, uncorrected)
    _, _, f = _pops(params, G1, G3, den)
    ae1, ae3, ae1_0, ae3_0 = f["ae"]
    return SaturationFactors(g, vv, ae1, ae3, ae1_0, ae3_0, f["a"], f["b"], f["b_closed"], f["beta"])


@dataclass
class NodeResponse:
    """Per-velocity-node response used by the averaging kernels.

    ``lin[j]`` is rho_j / G_j; ``mix`` is (h1, k2, h3, k4), the factors
    multiplying the triple products G4 G2 G3*, G1 G3 G4*, G4 G2 G1*,
    G1 G3 G2* in the coherences of transitions 1..4.
    """

    lin: np.ndarray  # (4, n) complex
    mix: np.ndarray  # (4, n) complex
    populations: np.ndarray  # (4, n) real


def node_response(params: SchemeParams, G1, G3, O1, O2, O3, O4, *, mixing: bool = True) -> NodeResponse:
    """Vectorized closed-form response at arrays of shifted detunings."""
    den = ResonanceDenominators.from_detunings(params, O1, O2, O3, O4)
    pops, deltas, _ = _pops(params, G1, G3, den)
    g, vv = dressing_factors(G1, G3, den)
    R2, R4 = R_combinations(deltas, g, vv)
    k2, k4 = fwm_kernels(deltas, R2, R4, g, vv, den)
    red = _reduced(G1, G3, deltas, R2, R4, g, vv, den)
    if mixing:
        h1, h3 = mixing_kernels(params, G1, G3, den, red)
    else:
        h1 = h3 = np.zeros_like(k2)
    lin = np.array(np.broadcast_arrays(*red.lin))
    mix = np.array(np.broadcast_arrays(h1, k2, h3, k4))
    return NodeResponse(lin, mix, np.asarray(pops, dtype=float))


def as_dict(sol: DmSolution) -> dict:
    out = {"r_l": sol.r_l, "r_g": sol.r_g, "r_n": sol.r_n, "r_m": sol.r_m}
    out.update({f"dr{j + 1}": sol.deltas[j] for j in range(4)})
    if sol.coherences is not None:
        out.update(sol.coherences)
    return out


__all__ = [
    "COHERENCE_KEYS",
    "DmSolution",
    "NodeResponse",
    "ResonanceDenominators",
    "SaturationFactors",
    "coherences",
    "dressing_factors",
    "fwm_kernels",
    "mixing_kernels",
    "node_response",
    "open_branching",
    "populations",
    "populations_closed",
    "populations_open",
    "R_combinations",
    "saturation_factors",
    "saturation_parameters",
    "solve_oracle",
    "steady_state",
]


def solve_oracle(params: SchemeParams, fields: FieldState, v=0.0) -> DmSolution:
    """Brute-force dense solve; see :mod:`doublelambda.oracle`."""
    from .oracle import solve_oracle as _solve_oracle

    return _solve_oracle(params, fields, v)
