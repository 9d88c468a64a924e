# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-velocity-node evaluation of the closed-form medium response.

Mirrors :func:`doublelambda.densmat.node_response` node by node and
accumulates Maxwell-weighted sums in node order.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx

cdef inline cplx conj(cplx z) noexcept nogil:
    return z.conjugate()


cdef inline double abs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef int solve4(double[4][4] A, double[4][2] b) noexcept nogil:
    """In-place Gaussian elimination with partial pivoting; result in b."""
    cdef int i, j, k, p
    cdef double t, f, best
    for k in range(4):
        p = k
        best = abs(A[k][k])
        for i in range(k + 1, 4):
            if abs(A[i][k]) > best:
                best = abs(A[i][k])
                p = i
        if best == 0.0:
            return -1
        if p != k:
            for j in range(4):
                t = A[k][j]; A[k][j] = A[p][j]; A[p][j] = t
            for j in range(2):
                t = b[k][j]; b[k][j] = b[p][j]; b[p][j] = t
        for i in range(k + 1, 4):
            f = A[i][k] / A[k][k]
            for j in range(k, 4):
                A[i][j] -= f * A[k][j]
            for j in range(2):
                b[i][j] -= f * b[k][j]
    for k in range(3, -1, -1):
        for j in range(2):
            t = b[k][j]
            for i in range(k + 1, 4):
                t -= A[k][i] * b[i][j]
            b[k][j] = t / A[k][k]
    return 0


cdef int node(const double* r, const double* zf, cplx G1, cplx G3,
              double O1, double O2, double O3, double O4, bint mixing,
              cplx* lin, cplx* mix, double* pops) noexcept nogil:
    cdef double Gl = r[0], Gg = r[1], Gn = r[2], Gm = r[3]
    cdef double ggl = r[4], ggn = r[5], gmn = r[6], gml = r[7]
    cdef double wlg = r[8], wng = r[9], wnm = r[10], wlm = r[11], wln = r[12], wgm = r[13]
    cdef bint closed = r[14] != 0.0
    cdef double nl = zf[0], ng = zf[1], nn = zf[2], nm = zf[3]
    cdef double a1sq = abs2(G1), a3sq = abs2(G3)

    cdef cplx P1 = wlg + 1j * O1
    cdef cplx P2 = wng + 1j * O2
    cdef cplx P3 = wnm + 1j * O3
    cdef cplx P4 = wlm + 1j * O4
    cdef cplx P12 = wln + 1j * (O1 - O2)
    cdef cplx P43 = wln + 1j * (O4 - O3)
    cdef cplx P32 = wgm + 1j * (O3 - O2)
    cdef cplx P41 = wgm + 1j * (O4 - O1)
    cdef cplx d2 = wng + 1j * (O1 + O3 - O4)
    cdef cplx d4 = wlm + 1j * (O1 - O2 + O3)

    # populations
    cdef double ae1_0, ae3_0, ae1, ae3, dn1, dn2, dn3, dn4
    cdef double a1, a2, a3, b1, b2, b3, den, dr1, dr2, dr3, dr4, rl, rg, rn, rm
    cdef double b, X, beta
    if closed:
        ae1_0 = 2 * a1sq / (wlg * Gg)
    else:
        ae1_0 = 2 * (Gl + Gg - ggl) * a1sq / (Gl * Gg * wlg)
    ae3_0 = 2 * (Gm + Gn - gmn) * a3sq / (Gm * Gn * wnm)
    ae1 = ae1_0 * wlg * wlg / abs2(P1)
    ae3 = ae3_0 * wnm * wnm / abs2(P3)
    dn1 = nl - ng
    dn3 = nn - nm
    if closed:
        b = Gn / (Gm + Gn - gmn)
        X = dn3 * (1 + ae1) + dn1 * ggn * ae1 / Gn
        beta = (1 + ae3) * (1 - dn3 + 2 * (nl + nm) * ae1) + (1 + 2 * b * ae3) * X
        if not beta > 0:
            return -1
        rl = nl * (1 + ae3) * (1 + ae1) / beta
        rg = (1 + ae3) * (nl * (1 + ae1) - dn1) / beta
        rn = (nm * (1 + ae3) * (1 + ae1) + X * (1 + b * ae3)) / beta
        rm = (nm * (1 + ae3) * (1 + ae1) + X * b * ae3) / beta
        dr1 = rl - rg
        dr2 = rn - rg
        dr3 = rn - rm
        dr4 = rl - rm
    else:
        dn2 = nn - ng
        dn4 = nl - nm
        a1 = ggn * Gl / (Gn * (Gl + Gg - ggl))
        a3 = (Gg - ggl) / (Gl + Gg - ggl)
        a2 = a1 * (Gn - ggn) / ggn
        b1 = gml * Gn / (Gl * (Gm + Gn - gmn))
        b2 = (Gm - gmn) / (Gm + Gn - gmn)
        b3 = b1 * (Gl - gml) / gml
        den = (1 + ae1) * (1 + ae3) - a1 * ae1 * b1 * ae3
        if not den > 0:
            return -1
        dr1 = ((1 + ae3) * dn1 + b1 * ae3 * dn3) / den
        dr3 = ((1 + ae1) * dn3 + a1 * ae1 * dn1) / den
        dr2 = dn2 - b2 * ae3 * dr3 - a2 * ae1 * dr1
        dr4 = dn4 - a3 * ae1 * dr1 - b3 * ae3 * dr3
        rg = ng + (1 - a3) * ae1 * dr1
        rm = nm + (1 - b2) * ae3 * dr3
        rn = nn - b2 * ae3 * dr3 + a1 * ae1 * dr1
        rl = nl + b1 * ae3 * dr3 - a3 * ae1 * dr1
    pops[0] = rl
    pops[1] = rg
    pops[2] = rn
    pops[3] = rm

    # dressing factors
    cdef cplx P1c = conj(P1), P3c = conj(P3), P12c = conj(P12), P32c = conj(P32)
    cdef cplx d2c = conj(d2), d4c = conj(d4)
    cdef cplx g1 = a1sq / (P41 * P1c), g2 = a1sq / (P12c * P2), g3 = a1sq / (P12c * P1c)
    cdef cplx g4 = a1sq / (P41 * P4), g5 = a1sq / (P43 * d2c), g6 = a1sq / (P41 * d2c)
    cdef cplx g7 = a1sq / (P32c * d4c), g8 = a1sq / (P12c * d4c)
    cdef cplx v1 = a3sq / (P43 * P3c), v2 = a3sq / (P32c * P2), v3 = a3sq / (P32c * P3c)
    cdef cplx v4 = a3sq / (P43 * P4), v5 = a3sq / (P41 * d2c), v6 = a3sq / (P43 * d2c)
    cdef cplx v7 = a3sq / (P12c * d4c), v8 = a3sq / (P32c * d4c)

    cdef cplx R2 = (dr2 * (1 + g7 + v7) - v3 * (1 + v7 - g8) * dr3 - g3 * (1 + g7 - v8) * dr1) / (
        (1 + g2 + v2) + (g7 + g2 * (g7 - v8) + v7 + v2 * (v7 - g8)))
    cdef cplx R4 = (dr4 * (1 + v5 + g5) - g1 * (1 + g5 - v6) * dr1 - v1 * (1 + v5 - g6) * dr3) / (
        (1 + g4 + v4) + (v5 + v4 * (v5 - g6) + g5 + g4 * (g5 - v6)))

    cdef cplx P41c = conj(P41), P43c = conj(P43)
    cdef cplx k2 = -1j / (d2 * (1 + conj(v5) + conj(g5))) * (
        dr1 / (P1 * P41c) + dr3 / (P3 * P43c) + conj(R4) / conj(P4) * (1 / P41c + 1 / P43c))
    cdef cplx k4 = -1j / (d4 * (1 + conj(v7) + conj(g7))) * (
        dr1 / (P1 * P12) + dr3 / (P3 * P32) + conj(R2) / conj(P2) * (1 / P12 + 1 / P32))

    lin[0] = 1j * dr1 / P1
    lin[1] = 1j * R2 / P2
    lin[2] = 1j * dr3 / P3
    lin[3] = 1j * R4 / P4
    mix[1] = k2
    mix[3] = k4
    if not mixing:
        mix[0] = 0
        mix[2] = 0
        return 0

    # reduced first-order responses of the G4 and G2 groups
    cdef cplx r4 = lin[3], r2 = lin[1]
    cdef cplx a41 = (-1j * r4 + dr1 / P1c) / P41
    cdef cplx a43 = (1j * r4 - dr3 / P3c) / P43
    cdef cplx detA = (1 + v5) * (1 + g5) - g5 * v5
    cdef cplx x41 = ((1 + g5) * a41 + v5 * a43) / detA
    cdef cplx x43 = ((1 + v5) * a43 + g5 * a41) / detA
    cdef cplx s = 1j * (x41 - x43) / d2c
    cdef cplx b12 = (1j * r2 - dr1 / P1c) / P12c
    cdef cplx b32 = (dr3 / P3c - 1j * r2) / P32c
    cdef cplx detB = (1 + v7) * (1 + g7) - g7 * v7
    cdef cplx u12 = ((1 + g7) * b12 + v7 * b32) / detB
    cdef cplx u32 = ((1 + v7) * b32 + g7 * b12) / detB
    cdef cplx t = 1j * (u32 - u12) / d4c

    # second-order populations
    cdef double kappa1 = 2 * a1sq * wlg / abs2(P1)
    cdef double kappa3 = 2 * a3sq * wnm / abs2(P3)
    cdef cplx e1 = u32 - x43, e3 = x41 - u12
    cdef cplx Q[4]
    Q[0] = -1j * t + e1 / P1
    Q[1] = 1j * s - e1 / P1
    Q[2] = -1j * s + e3 / P3
    Q[3] = 1j * t - e3 / P3
    cdef double M[4][4]
    cdef double rhs[4][2]
    cdef int i, j
    for i in range(4):
        for j in range(4):
            M[i][j] = 0.0
    M[0][0] = -Gl
    M[1][1] = -Gg
    M[2][2] = -Gn
    M[3][3] = -Gm
    M[0][1] += ggl
    M[2][1] += ggn
    M[2][3] += gmn
    M[0][3] += gml
    if closed:
        M[1][0] += r[16]
        M[2][0] += r[17]
        M[3][0] += r[18]
    M[1][0] += kappa1
    M[1][1] -= kappa1
    M[0][0] -= kappa1
    M[0][1] += kappa1
    M[3][2] += kappa3
    M[3][3] -= kappa3
    M[2][2] -= kappa3
    M[2][3] += kappa3
    if closed:
        Q[0] = 0
        for j in range(4):
            M[0][j] = 1.0
    for i in range(4):
        rhs[i][0] = -Q[i].real
        rhs[i][1] = -Q[i].imag
    if solve4(M, rhs) != 0:
        return -2
    cdef cplx D1 = (rhs[0][0] - rhs[1][0]) + 1j * (rhs[0][1] - rhs[1][1])
    cdef cplx D3 = (rhs[2][0] - rhs[3][0]) + 1j * (rhs[2][1] - rhs[3][1])
    mix[0] = 1j * (a1sq * D1 - e1) / P1
    mix[2] = 1j * (a3sq * D3 - e3) / P3
    return 0


def average_response(double[::1] rates, double[::1] zero_field, double complex G1, double complex G3,
                     double[:, ::1] detunings, double[::1] weights, bint mixing=True, bint per_node=False):
    """Weighted sums of lin_j and mix_j over velocity nodes.

    ``detunings`` has shape (n, 4) holding the shifted Omega_1..Omega_4.
    Returns ``(lin, mix, status)`` or, with ``per_node``, additionally the
    arrays ``(lin_n, mix_n, pops_n)`` of shape (4, n).
    """
    cdef Py_ssize_t n = detunings.shape[0], i
    cdef int j, status = 0
    cdef cplx lin[4]
    cdef cplx mix[4]
    cdef double pops[4]
    cdef cplx acc_lin[4]
    cdef cplx acc_mix[4]
    cdef double w
    cdef cplx[:, ::1] lin_n
    cdef cplx[:, ::1] mix_n
    cdef double[:, ::1] pops_n
    if weights.shape[0] != n:
        raise ValueError("weights and detunings disagree in length")
    if per_node:
        lin_arr = np.empty((4, n), dtype=np.complex128)
        mix_arr = np.empty((4, n), dtype=np.complex128)
        pops_arr = np.empty((4, n), dtype=np.float64)
        lin_n = lin_arr
        mix_n = mix_arr
        pops_n = pops_arr
    for j in range(4):
        acc_lin[j] = 0
        acc_mix[j] = 0
    with nogil:
        for i in range(n):
            status = node(&rates[0], &zero_field[0], G1, G3,
                          detunings[i, 0], detunings[i, 1], detunings[i, 2], detunings[i, 3],
                          mixing, lin, mix, pops)
            if status != 0:
                break
            w = weights[i]
            for j in range(4):
                acc_lin[j] = acc_lin[j] + w * lin[j]
                acc_mix[j] = acc_mix[j] + w * mix[j]
            if per_node:
                for j in range(4):
                    lin_n[j, i] = lin[j]
                    mix_n[j, i] = mix[j]
                    pops_n[j, i] = pops[j]
    out_lin = np.array([acc_lin[0], acc_lin[1], acc_lin[2], acc_lin[3]])
    out_mix = np.array([acc_mix[0], acc_mix[1], acc_mix[2], acc_mix[3]])
    if per_node:
        return out_lin, out_mix, status, (lin_arr, mix_arr, pops_arr)
    return out_lin, out_mix, status
