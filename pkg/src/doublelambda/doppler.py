"""Maxwell velocity averaging and the Doppler/light-shift compensation diagnostic."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import peak_prominences

from . import kernel
from .errors import ConfigError, MisuseError, ResolutionWarning
from .scheme import FieldState, SchemeParams, thermal_speed
from .suscept import SusceptibilitySet, from_response, transition_scales

DEFAULT_NODES = 1801
DEFAULT_SPAN = 4.5


@dataclass(frozen=True)
class VelocityGrid:
    """Quadrature nodes (m/s) and normalized Maxwell weights.

    ``scheme`` is ``"uniform"`` (trapezoid rule on [-span u, span u]) or
    ``"gauss_hermite"``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    u: float
    scheme: str
    span: float | None = None

    @property
    def n(self) -> int:
        return len(self.nodes)

    @classmethod
    def uniform(cls, n: int, u: float, span: float = DEFAULT_SPAN) -> "VelocityGrid":
        if n < 1 or span <= 0:
            raise ConfigError(f"uniform grid needs n >= 1 and span > 0, got n={n}, span={span}")
        x = np.linspace(-span, span, n) if n > 1 else np.zeros(1)
        w = np.exp(-x * x)
        return cls(x * u, w / w.sum(), float(u), "uniform", float(span))

    @classmethod
    def gauss_hermite(cls, n: int, u: float) -> "VelocityGrid":
        if n < 1:
            raise ConfigError(f"Gauss-Hermite grid needs n >= 1, got {n}")
        x, w = np.polynomial.hermite.hermgauss(n)
        return cls(x * u, w / w.sum(), float(u), "gauss_hermite")

    @classmethod
    def single(cls, v: float = 0.0) -> "VelocityGrid":
        """One velocity class; averaging reduces to the homogeneous result."""
        return cls(np.array([float(v)]), np.ones(1), 1.0, "single")

    @classmethod
    def for_params(cls, params: SchemeParams, scheme: str = "uniform", n: int | None = None, span: float = DEFAULT_SPAN):
        u = thermal_speed(params)
        if scheme == "uniform":
            return cls.uniform(n or DEFAULT_NODES, u, span)
        if scheme == "gauss_hermite":
            return cls.gauss_hermite(n or 64, u)
        raise ConfigError(f"unknown grid scheme {scheme!r}")


def effective_wavevectors(params: SchemeParams) -> dict:
    """Doppler coefficient (rate units per m/s) seen by each coherence."""
    k1, k2, k3, k4 = params.doppler_coefficients
    return {"lg": k1, "ng": k2, "nm": k3, "lm": k4, "ln": k1 - k2, "gm": k3 - k2}


def resolution_ratio(params: SchemeParams, grid: VelocityGrid) -> float:
    """Largest Doppler shift between neighbouring nodes over the coherence width."""
    if grid.n < 2:
        return 0.0
    dv = np.max(np.diff(np.sort(grid.nodes)))
    keff = effective_wavevectors(params)
    return max(abs(k) * dv / params.coherence_width[c] for c, k in keff.items())


def check_resolution(params: SchemeParams, grid: VelocityGrid, stacklevel: int = 3) -> None:
    ratio = resolution_ratio(params, grid)
    if ratio > 1:
        warnings.warn(
            f"velocity grid ({grid.scheme}, n={grid.n}) spaces Doppler shifts {ratio:.3g} times "
            "wider than the narrowest coherence width; narrow structures will be aliased",
            ResolutionWarning,
            stacklevel=stacklevel,
        )


def node_detunings(params: SchemeParams, fields: FieldState, grid: VelocityGrid) -> np.ndarray:
    """(n, 4) array of Doppler-shifted detunings Omega_j - s_j k_j v."""
    return fields.detunings[None, :] - grid.nodes[:, None] * params.doppler_coefficients[None, :]


def doppler_normalization(params: SchemeParams, grid: VelocityGrid) -> float:
    """Averaged resonant response Re <chi_4/chi_40> with all drives off."""
    w4 = params.coherence_width["lm"]
    kv = grid.nodes * params.doppler_coefficients[3]
    return float(np.dot(grid.weights, w4 * w4 / (w4 * w4 + kv * kv)))


@dataclass(frozen=True)
class NodeDump:
    v_over_u: np.ndarray
    weights: np.ndarray
    lin: np.ndarray  # (4, n)
    mix: np.ndarray  # (4, n)
    populations: np.ndarray  # (4, n)


def average_susceptibility(
    params: SchemeParams,
    fields: FieldState,
    grid: VelocityGrid,
    *,
    mixing: bool = True,
    per_node: bool = False,
    backend: str | None = None,
    check: bool = True,
):
    """Velocity-averaged :class:`SusceptibilitySet`.

    Probe absorption is normalized to 1 per unit Z at line centre for the
    undriven Doppler-broadened medium.  With ``per_node`` a
    :class:`NodeDump` is returned as well.
    """
    if check:
        check_resolution(params, grid)
    O = node_detunings(params, fields, grid)
    G1, G3 = fields.G[0], fields.G[2]
    out = kernel.average_response(params, G1, G3, O, grid.weights, mixing=mixing, per_node=per_node, backend=backend)
    norm = doppler_normalization(params, grid)
    chi = from_response(params, fields, out[0], out[1], norm)
    if not per_node:
        return chi
    lin_n, mix_n, pops_n = out[2]
    return chi, NodeDump(grid.nodes / grid.u, grid.weights, lin_n, mix_n, pops_n)


def compensation_residual(params: SchemeParams, fields: FieldState) -> float:
    """Normalized mismatch of light-shift and Doppler slopes of the Raman resonance.

    Returns ((|G1|/Omega1)^2 k1 - (k1 - k2)) / (k1 - k2); zero marks the
    drive strength at which the l-n two-photon resonance no longer depends
    on velocity to first order.
    """
    if fields.Omega1 == 0:
        raise MisuseError("compensation is undefined at Omega1 = 0")
    k1, k2 = params.doppler_coefficients[:2]
    dk = k1 - k2
    if dk == 0:
        raise MisuseError("k1 = k2: the Raman transition has no Doppler shift to compensate")
    return float(((abs(fields.G[0]) / fields.Omega1) ** 2 * k1 - dk) / dk)


PROFILE_QUANTITIES = ("dr1", "dr2", "dr3", "dr4", "dr_ln", "alpha4", "stokes_gain", "chi4", "chi2")


@dataclass(frozen=True)
class VelocityProfile:
    quantity: str
    v_over_u: np.ndarray
    weight: np.ndarray
    values: np.ndarray  # complex

    def rows(self):
        for x, w, q in zip(self.v_over_u, self.weight, self.values):
            yield float(x), float(w), float(q.real), float(q.imag)


def velocity_profile(
    params: SchemeParams,
    fields: FieldState,
    grid: VelocityGrid,
    quantity: str,
    *,
    remove_maxwell: bool = True,
    backend: str | None = None,
) -> VelocityProfile:
    """Per-node contributions along the velocity axis.

    Population quantities are the differences dr_1..dr_4 and r_l - r_n.
    ``alpha4`` and ``stokes_gain`` are per-class absorption and Stokes gain
    in units of the Doppler-broadened probe absorption; ``chi4``/``chi2`` are
    the complex normalized susceptibilities.  Unless ``remove_maxwell`` is
    false, the Maxwell weight is divided out.
    """
    if quantity not in PROFILE_QUANTITIES:
        raise ConfigError(f"unknown profile quantity {quantity!r}; choose from {PROFILE_QUANTITIES}")
    _, dump = average_susceptibility(params, fields, grid, per_node=True, backend=backend, check=False)
    p = dump.populations
    norm = doppler_normalization(params, grid)
    K = transition_scales(params, norm)
    dn = params.zero_field_differences()
    wid = params.transition_widths
    table = {
        "dr1": p[0] - p[1],
        "dr2": p[2] - p[1],
        "dr3": p[2] - p[3],
        "dr4": p[0] - p[3],
        "dr_ln": p[0] - p[2],
        "alpha4": 2 * (K[3] * dump.lin[3]).imag,
        "stokes_gain": -2 * (K[1] * dump.lin[1]).imag,
        "chi4": wid[3] * dump.lin[3] / (1j * dn[3]),
        "chi2": wid[1] * dump.lin[1] / (1j * dn[1]),
    }
    values = np.asarray(table[quantity], dtype=complex)
    if not remove_maxwell:
        values = values * dump.weights
    return VelocityProfile(quantity, dump.v_over_u, dump.weights, values)


@dataclass(frozen=True)
class PeakWidth:
    position: float
    height: float
    fwhm: float
    left: float
    right: float
    reference: float  # level at which the width is taken


def peak_fwhm(x, y, window=None, baseline: str = "prominence") -> PeakWidth:
    """Full width at half maximum of the highest local maximum inside ``window``.

    ``baseline="prominence"`` measures half height above the higher of the two
    flanking minima, ``"zero"`` half of the absolute peak value.  Crossings
    are located by linear interpolation between samples.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lo, hi = (x[0], x[-1]) if window is None else window
    interior = np.flatnonzero((x >= lo) & (x <= hi))
    cand = [i for i in interior if 0 < i < len(x) - 1 and y[i] >= y[i - 1] and y[i] > y[i + 1]]
    if not cand:
        raise MisuseError(f"no local maximum inside window {window}")
    i = max(cand, key=lambda k: y[k])
    if baseline == "prominence":
        prom = peak_prominences(y, [i])[0][0]
        ref = y[i] - prom / 2
    elif baseline == "zero":
        ref = y[i] / 2
    else:
        raise ConfigError(f"unknown baseline {baseline!r}")

    def crossing(step):
        k = i
        while 0 <= k + step < len(x) and y[k + step] > ref:
            k += step
        if not 0 <= k + step < len(x):
            return math.nan
        j = k + step
        return x[k] + (ref - y[k]) * (x[j] - x[k]) / (y[j] - y[k])

    left, right = crossing(-1), crossing(1)
    return PeakWidth(float(x[i]), float(y[i]), float(right - left), float(left), float(right), float(ref))
