"""Brute-force steady state from the full 16x16 Liouvillian.

The density matrix is vectorized row-major (``rho[a, b] -> 4 a + b``).
Relaxation, pumping and the coherent part are assembled generically from
the scheme constants; no closed-form result is used.  Weak fields are
treated by linear response around the strong-field steady state, and the
mixing drive on the strong transitions by second-order response.
"""

from __future__ import annotations

from types import MappingProxyType

import numpy as np

from .errors import SingularSystemError
from .scheme import COHERENCES, FieldState, SchemeParams, Topology, shifted_detunings

L, G, N, M = range(4)
_PAIRS = {"lg": (L, G), "ng": (N, G), "nm": (N, M), "lm": (L, M), "ln": (L, N), "gm": (G, M)}
COND_LIMIT = 1e13


def rate_matrix(params: SchemeParams):
    """Population block (A, b) with d p/dt = A p + b from relaxation and pumping."""
    lw, gp = params.level_width, params.gamma_partial
    A = -np.diag([lw["l"], lw["g"], lw["n"], lw["m"]]).astype(float)
    A[L, G] += gp["gl"]
    A[N, G] += gp["gn"]
    A[N, M] += gp["mn"]
    A[L, M] += gp["ml"]
    b = np.zeros(4)
    if params.topology is Topology.OPEN:
        b[:] = params.pump
    else:
        for a in (G, N, M):
            A[a, L] += params.pump[a]
        A[L, :] = -A[1:, :].sum(axis=0)
    return A, b


def hamiltonian(diag, G1=0, G2=0, G3=0, G4=0):
    H = np.diag(np.asarray(diag, dtype=complex))
    for (a, b), g in (((L, G), G1), ((N, G), G2), ((N, M), G3), ((L, M), G4)):
        H[a, b] += g
        H[b, a] += np.conj(g)
    return H


def liouvillian(params: SchemeParams, H):
    eye = np.eye(4)
    Lv = -1j * (np.kron(H, eye) - np.kron(eye, H.T))
    for key in COHERENCES:
        a, b = _PAIRS[key]
        w = params.coherence_width[key]
        Lv[4 * a + b, 4 * a + b] -= w
        Lv[4 * b + a, 4 * b + a] -= w
    A, b = rate_matrix(params)
    for a in range(4):
        for c in range(4):
            Lv[5 * a, 5 * c] += A[a, c]
    src = np.zeros(16, dtype=complex)
    src[[0, 5, 10, 15]] = b
    return Lv, src


def _solve(params, H, source, trace):
    Lv, src = liouvillian(params, H)
    rhs = -(src if source is None else source).astype(complex)
    if params.topology is Topology.CLOSED:
        Lv[0, :] = 0
        Lv[0, [0, 5, 10, 15]] = 1
        rhs[0] = trace
    cond = np.linalg.cond(Lv)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularSystemError(f"Liouvillian is numerically singular (condition number {cond:.3g})", cond)
    return np.linalg.solve(Lv, rhs).reshape(4, 4)


def _comm(A, B):
    return A @ B - B @ A


def _unit(a, b):
    E = np.zeros((4, 4), dtype=complex)
    E[a, b] = 1.0
    return E


def _frames(fields_or_detunings):
    O1, O2, O3, O4 = fields_or_detunings
    # rotating frames in which the G4- and the G2-driven responses are static
    frame_a = [O1, 0.0, O1 + O3 - O4, O1 - O4]
    frame_b = [O1, 0.0, O2, O2 - O3]
    return frame_a, frame_b


def solve_oracle(params: SchemeParams, fields: FieldState, v=0.0):
    """Steady state from dense linear solves, returned as a ``DmSolution``."""
    from .densmat import DmSolution

    G1, G2, G3, G4 = fields.G
    frame_a, frame_b = _frames(shifted_detunings(params, fields, v))
    Ha = hamiltonian(frame_a, G1=G1, G3=G3)
    Hb = hamiltonian(frame_b, G1=G1, G3=G3)
    rho0 = _solve(params, Ha, None, 1.0)
    Wa = hamiltonian(np.zeros(4), G4=G4)
    Wb = hamiltonian(np.zeros(4), G2=G2)
    Xa = _solve(params, Ha, (-1j * _comm(Wa, rho0)).reshape(16), 0.0)
    Xb = _solve(params, Hb, (-1j * _comm(Wb, rho0)).reshape(16), 0.0)
    p = rho0.diagonal().real.copy()
    deltas = np.array([p[L] - p[G], p[N] - p[G], p[N] - p[M], p[L] - p[M]])
    coh = {
        "r1": rho0[L, G],
        "r2": Xb[N, G],
        "r3": rho0[N, M],
        "r4": Xa[L, M],
        "rt2": Xa[N, G],
        "rt4": Xb[L, M],
        "r12": Xb[L, N],
        "r43": Xa[L, N],
        "r32": Xb[G, M],
        "r41": Xa[G, M],
    }
    return DmSolution(p, deltas, MappingProxyType(coh))


def oracle_mixing(params: SchemeParams, fields: FieldState, v=0.0):
    """Second-order coefficients of G4*G2 in rho_lg and rho_nm.

    Obtained by driving the strong-field steady state with unit weak-field
    couplings (non-Hermitian perturbations selecting the positive-frequency
    parts) and solving the second-order response in the G4 frame.
    """
    G1, _, G3, _ = fields.G
    frame_a, _ = _frames(shifted_detunings(params, fields, v))
    H0 = hamiltonian(frame_a, G1=G1, G3=G3)
    rho0 = _solve(params, H0, None, 1.0)
    Ea, Eb = _unit(L, M), _unit(N, G)
    A = _solve(params, H0, (-1j * _comm(Ea, rho0)).reshape(16), 0.0)
    B = _solve(params, H0, (-1j * _comm(Eb, rho0)).reshape(16), 0.0)
    X = _solve(params, H0, (-1j * (_comm(Ea, B) + _comm(Eb, A))).reshape(16), 0.0)
    return X[L, G], X[N, M]
