"""Coupled-wave propagation of the four Rabi amplitudes along the medium.

In units of the probe absorption length Z the amplitudes obey

    dG1/dZ = i s1 G1 + i c1 G4 G2 G3* e^{+i dk Z}
    dG2/dZ = i s2 G2 + i c2 G1 G3 G4* e^{-i dk Z}
    dG3/dZ = i s3 G3 + i c3 G4 G2 G1* e^{+i dk Z}
    dG4/dZ = i s4 G4 + i c4 G1 G3 G2* e^{-i dk Z}

with s_j = sigma_j and c_j taken from the velocity-averaged medium response
at the local drive amplitudes, and dk an optional geometric wave-vector
mismatch k4 - k3 + k2 - k1 in units of 1/Z.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .doppler import VelocityGrid, average_susceptibility, check_resolution
from .errors import ConfigError, DivergenceError, MisuseError, StabilityError, ValidityWarning
from .scheme import FieldState, SchemeParams
from .suscept import SusceptibilitySet

MAX_STEP_CHANGE = 0.1


@dataclass
class PropagationOptions:
    """Switches of the propagation model.

    frozen : coefficients evaluated once from the input fields and the drives
        G1, G3 held fixed (undepleted-pump parametric approximation).
    linear : when False all sigma_j are forced to zero, keeping only the
        parametric couplings.
    mixing : include the second-order drive on G1 and G3.
    mismatch : geometric phase mismatch k4 - k3 + k2 - k1 per unit Z.
    """

    frozen: bool = False
    linear: bool = True
    mixing: bool = True
    mismatch: float = 0.0
    backend: str | None = None


@dataclass(frozen=True)
class PropagationTrace:
    """Amplitudes sampled along Z with derived phase and photon-number data."""

    z: np.ndarray
    G: np.ndarray  # (len(z), 4) complex
    scale: np.ndarray  # K_j used for photon-number proxies
    mismatch: float = 0.0
    options: PropagationOptions = field(default_factory=PropagationOptions)

    @property
    def theta(self) -> np.ndarray:
        """Relative phase phi4 - phi3 + phi2 - phi1."""
        ph = np.angle(self.G)
        return np.angle(np.exp(1j * (ph[:, 3] - ph[:, 2] + ph[:, 1] - ph[:, 0])))

    @property
    def psi(self) -> np.ndarray:
        return self.theta + self.mismatch * self.z

    @property
    def photon_numbers(self) -> np.ndarray:
        """N_j proportional to |G_j|^2 / K_j, in units of the input probe photons.

        Falls back to the input Stokes (or unit) normalization when no
        probe is injected.
        """
        N = np.abs(self.G) ** 2 / self.scale[None, :]
        ref = N[0, 3] if N[0, 3] > 0 else (N[0, 1] if N[0, 1] > 0 else 1.0)
        return N / ref

    @property
    def transmission(self) -> np.ndarray:
        """|G_j(Z) / G_j(0)|^2 for each field (nan where the input is zero)."""
        G0 = self.G[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(np.abs(G0) > 0, np.abs(self.G / G0) ** 2, np.nan)


class Medium:
    """Local coefficients s_j, c_j as a function of the drive amplitudes."""

    def __init__(self, params: SchemeParams, fields0: FieldState, grid: VelocityGrid, options: PropagationOptions):
        self.params = params
        self.fields0 = fields0
        self.grid = grid
        self.options = options
        self.evaluations = 0
        self._frozen = None
        if options.frozen:
            self._frozen = self._compute(fields0.G)

    def _compute(self, G) -> SusceptibilitySet:
        self.evaluations += 1
        f = self.fields0.with_G(G)
        return average_susceptibility(
            self.params, f, self.grid, mixing=self.options.mixing, backend=self.options.backend, check=False
        )

    def coefficients(self, G):
        chi = self._frozen if self._frozen is not None else self._compute(G)
        s = chi.sigma if self.options.linear else np.zeros(4, dtype=complex)
        return s, chi.coupling, chi


def _rhs(medium: Medium, z: float, G: np.ndarray, rate: bool = False):
    opt = medium.options
    if opt.frozen:
        # drives undepleted: only the weak pair evolves
        G = G.copy()
        G[0], G[2] = medium.fields0.G[0], medium.fields0.G[2]
    s, c, _ = medium.coefficients(G)
    G1, G2, G3, G4 = G
    ph = cmath.exp(1j * opt.mismatch * z) if opt.mismatch else 1.0
    d = np.empty(4, dtype=complex)
    d[0] = 1j * (s[0] * G1 + c[0] * G4 * G2 * G3.conjugate() * ph)
    d[1] = 1j * (s[1] * G2 + c[1] * G1 * G3 * G4.conjugate() / ph)
    d[2] = 1j * (s[2] * G3 + c[2] * G4 * G2 * G1.conjugate() * ph)
    d[3] = 1j * (s[3] * G4 + c[3] * G1 * G3 * G2.conjugate() / ph)
    if opt.frozen:
        d[0] = d[2] = 0.0
    if not rate:
        return d
    return d, _jacobian_rate(s, c, np.abs(G), opt.frozen)


# amplitudes entering the triple product of each equation
_TRIPLES = ((3, 1, 2), (0, 2, 3), (3, 1, 0), (0, 2, 1))


def _jacobian_rate(s, c, a, frozen):
    """Largest row sum of |d(dG/dZ)/dG|: the linearized relative change per unit Z.

    In frozen mode the drives are constants, so only the weak pair counts
    both as rows and as variables.
    """
    live = (1, 3) if frozen else (0, 1, 2, 3)
    rates = []
    for j in live:
        p, q, r = _TRIPLES[j]
        cross = sum(a[x] * a[y] for v, x, y in ((p, q, r), (q, p, r), (r, p, q)) if v in live)
        rates.append(abs(s[j]) + abs(c[j]) * cross)
    return max(rates)


def _rk4_step(medium, z, G, h):
    k1, rate = _rhs(medium, z, G, rate=True)
    if h * rate > MAX_STEP_CHANGE:
        raise StabilityError(
            f"step {h:g} allows a relative change of {h * rate:.2g} per step at Z = {z:.6g} "
            f"(limit {MAX_STEP_CHANGE}); use a smaller step",
            z,
        )
    # overflow is reported as DivergenceError below
    with np.errstate(over="ignore", invalid="ignore"):
        k2 = _rhs(medium, z + h / 2, G + h / 2 * k1)
        k3 = _rhs(medium, z + h / 2, G + h / 2 * k2)
        k4 = _rhs(medium, z + h, G + h * k3)
        incr = h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(incr)):
        raise DivergenceError(f"non-finite amplitude at Z = {z + h:.6g}", z + h)
    return incr


def integrate(
    params: SchemeParams,
    fields0: FieldState,
    grid: VelocityGrid,
    z_max: float,
    step: float = 0.01,
    *,
    sample_every: int = 1,
    options: PropagationOptions | None = None,
    **option_kw,
) -> PropagationTrace:
    """Fixed-step fourth-order Runge-Kutta integration from Z = 0 to ``z_max``.

    Coefficients are recomputed from the local drive amplitudes at every
    stage unless ``options.frozen`` is set.  Extra keyword arguments are
    forwarded to :class:`PropagationOptions`.
    """
    if options is None:
        options = PropagationOptions(**option_kw)
    elif option_kw:
        raise MisuseError("pass either options or option keywords, not both")
    if z_max < 0 or not math.isfinite(z_max):
        raise ConfigError(f"z_max must be finite and non-negative, got {z_max}")
    if step <= 0:
        raise ConfigError(f"step must be positive, got {step}")
    if sample_every < 1:
        raise ConfigError("sample_every must be >= 1")
    check_resolution(params, grid)
    medium = Medium(params, fields0, grid, options)
    scale = average_susceptibility(params, fields0, grid, mixing=False, backend=options.backend, check=False).scale
    zs, Gs = _march(medium, np.array(fields0.G, dtype=complex), z_max, step, sample_every)
    return PropagationTrace(zs, Gs, np.asarray(scale), options.mismatch, options)


def _march(medium, G, z_max, step, sample_every):
    nsteps = int(round(z_max / step))
    if nsteps and abs(nsteps * step - z_max) > 1e-9 * max(1.0, z_max):
        raise ConfigError(f"z_max = {z_max} is not a multiple of step = {step}")
    carry = np.zeros(4, dtype=complex)
    zs, Gs = [0.0], [G.copy()]
    for i in range(nsteps):
        z = i * step
        # compensated summation: drive increments can fall below one ulp of the drive
        y = _rk4_step(medium, z, G, step) - carry
        t = G + y
        carry = (t - G) - y
        G = t
        if (i + 1) % sample_every == 0 or i + 1 == nsteps:
            zs.append((i + 1) * step)
            Gs.append(G.copy())
    return np.array(zs), np.array(Gs)


# -- constant-coefficient reference --------------------------------------------


@dataclass(frozen=True)
class OpaCoefficients:
    """Constant coefficients of the weak-pair equations.

    ``dk_drive`` is the phase rate dk1 + dk3 of the (undepleted) drives; the
    total mismatch entering the solution is dk_drive - dk2 - dk4.
    """

    alpha2: float
    alpha4: float
    dk2: float = 0.0
    dk4: float = 0.0
    gamma2: complex = 0j
    gamma4: complex = 0j
    dk_drive: float = 0.0

    @classmethod
    def from_susceptibility(cls, chi: SusceptibilitySet, drives_rotate: bool = False) -> "OpaCoefficients":
        dk = chi.delta_k
        return cls(
            alpha2=float(chi.alpha[1]),
            alpha4=float(chi.alpha[3]),
            dk2=float(dk[1]),
            dk4=float(dk[3]),
            gamma2=chi.gamma_2,
            gamma4=chi.gamma_4,
            dk_drive=float(dk[0] + dk[2]) if drives_rotate else 0.0,
        )

    @property
    def delta_k(self) -> float:
        return self.dk_drive - self.dk2 - self.dk4

    @property
    def beta(self) -> complex:
        return ((self.alpha4 - self.alpha2) / 2 + 1j * self.delta_k) / 2

    @property
    def gamma_sq(self) -> complex:
        return self.gamma2.conjugate() * self.gamma4

    @property
    def R(self) -> complex:
        return cmath.sqrt(self.beta ** 2 + self.gamma_sq)


class ConstantMedium:
    """Medium with prescribed weak-pair coefficients and unit drives."""

    def __init__(self, coeffs: "OpaCoefficients", mismatch: float = 0.0):
        self.options = PropagationOptions(frozen=True, mismatch=mismatch)
        self.fields0 = FieldState((1.0, 0j, 1.0, 0j))
        self.s = np.array([0, coeffs.dk2 + 0.5j * coeffs.alpha2, 0, coeffs.dk4 + 0.5j * coeffs.alpha4])
        self.c = np.array([0, coeffs.gamma2, 0, coeffs.gamma4], dtype=complex)

    def coefficients(self, G):
        return self.s, self.c, None


def integrate_constant(
    E40: complex, E20c: complex, coeffs: "OpaCoefficients", z_max: float, step: float = 0.01, *, sample_every: int = 1
) -> PropagationTrace:
    """Integrate the weak pair with constant coefficients by the same RK4 marcher.

    Numeric counterpart of :func:`analytic_opa`, valid for any coefficients
    including the degenerate R = 0 case.
    """
    if coeffs.dk_drive:
        raise MisuseError("integrate_constant holds the drives fixed; dk_drive must be 0")
    if step <= 0 or z_max < 0:
        raise ConfigError(f"need step > 0 and z_max >= 0, got {step}, {z_max}")
    G = np.array([1.0, np.conj(E20c), 1.0, E40], dtype=complex)
    zs, Gs = _march(ConstantMedium(coeffs), G, z_max, step, sample_every)
    return PropagationTrace(zs, Gs, np.ones(4))


def _sinhc(R, L):
    """sinh(R L) / R, continuous through R = 0."""
    x = R * L
    if abs(x) < 1e-3:
        x2 = x * x
        return L * (1 + x2 / 6 + x2 * x2 / 120)
    return cmath.sinh(x) / R


def analytic_opa(E40: complex, E20c: complex, coeffs: OpaCoefficients, L: float):
    """Exact constant-coefficient solution for (G4, G2*) after length ``L``.

    Returns ``(E2c, E4)``: the conjugate Stokes amplitude and the probe.
    """
    b = coeffs.beta
    R = coeffs.R
    m = -(coeffs.alpha4 + coeffs.alpha2) / 4 + 1j * (coeffs.dk4 - coeffs.dk2) / 2
    rot = cmath.exp(1j * coeffs.dk_drive * L / 2)
    ch = cmath.cosh(R * L)
    sh = _sinhc(R, L)
    grow = cmath.exp(m * L)
    E4 = grow * rot * (E40 * (ch - b * sh) + 1j * coeffs.gamma4 * E20c * sh)
    E2c = grow / rot * (E20c * (ch + b * sh) - 1j * coeffs.gamma2.conjugate() * E40 * sh)
    return E2c, E4


def opa_gain_estimate(coeffs: OpaCoefficients, L: float) -> float:
    """Weak-coupling probe gain I4/I40 with no Stokes input.

    |exp(-alpha4 L/2) + (gamma^2/(2 beta)^2)(exp(g2 L/2) - exp(-alpha4 L/2))|^2
    """
    q = coeffs.gamma_sq / (2 * coeffs.beta) ** 2
    a = math.exp(-coeffs.alpha4 * L / 2)
    return abs(a + q * (math.exp(-coeffs.alpha2 * L / 2) - a)) ** 2


def fwm_efficiency(coeffs: OpaCoefficients, L: float) -> float:
    """Weak-coupling conversion I4(L)/I20 with no probe input."""
    b = coeffs.beta
    ratio = abs(coeffs.gamma_sq / b ** 2) if b != 0 else math.inf
    if ratio >= 0.3:
        warnings.warn(f"|gamma^2/beta^2| = {ratio:.3g} >= 0.3: weak-coupling formula unreliable", ValidityWarning, stacklevel=2)
    diff = math.exp(-coeffs.alpha2 * L / 2) - math.exp(-coeffs.alpha4 * L / 2)
    return abs(coeffs.gamma4) ** 2 / abs(2 * b) ** 2 * diff ** 2


# -- diagnostics ---------------------------------------------------------------


@dataclass(frozen=True)
class ManleyRoweReport:
    z: np.ndarray
    dN: np.ndarray  # (len(z), 4) photon-number changes in units of input probe photons
    defect: np.ndarray

    @property
    def relative_defect(self) -> np.ndarray:
        """Defect over |dN4| (nan where the probe has not changed)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.defect / np.abs(self.dN[:, 3])

    def rows(self):
        for z, dn, d in zip(self.z, self.dN, self.defect):
            yield (float(z), *map(float, dn), float(d))


def manley_rowe_report(trace: PropagationTrace) -> ManleyRoweReport:
    """Photon-number changes and the defect |dN4-dN2| + |dN4+dN1| + |dN4+dN3|."""
    G0 = trace.G[0]
    # |G|^2 - |G0|^2 without cancellation: strong drives carry ~1e7 times more photons
    dG2 = np.real((trace.G - G0) * np.conj(trace.G + G0))
    N0 = np.abs(G0) ** 2 / trace.scale
    ref = N0[3] if N0[3] > 0 else (N0[1] if N0[1] > 0 else 1.0)
    dN = dG2 / trace.scale[None, :] / ref
    D = np.abs(dN[:, 3] - dN[:, 1]) + np.abs(dN[:, 3] + dN[:, 0]) + np.abs(dN[:, 3] + dN[:, 2])
    return ManleyRoweReport(trace.z, dN, D)


@dataclass(frozen=True)
class SwitchingCurve:
    variable: str
    values: np.ndarray
    transmission: np.ndarray


def switching_curve(
    params: SchemeParams,
    fields0: FieldState,
    grid: VelocityGrid,
    z_fixed: float,
    sweep: str,
    values,
    step: float = 0.01,
    **option_kw,
) -> SwitchingCurve:
    """Probe transmission |G4(Z)/G4(0)|^2 at fixed length versus Omega4, G1 or G3."""
    if z_fixed <= 0:
        raise ConfigError("z_fixed must be positive")
    if sweep not in ("Omega4", "G1", "G3"):
        raise ConfigError(f"sweep must be 'Omega4', 'G1' or 'G3', got {sweep!r}")
    values = np.asarray(values, dtype=float)
    T = np.empty(len(values))
    for i, x in enumerate(values):
        if sweep == "Omega4":
            f = fields0.replace(Omega4=float(x))
        elif sweep in ("G1", "G3"):
            G = list(fields0.G)
            G[0 if sweep == "G1" else 2] = float(x)
            f = fields0.with_G(G)
        else:
            raise ConfigError(f"sweep must be 'Omega4', 'G1' or 'G3', got {sweep!r}")
        tr = integrate(params, f, grid, z_fixed, step, sample_every=max(1, int(round(z_fixed / step))), **option_kw)
        T[i] = tr.transmission[-1, 3]
    return SwitchingCurve(sweep, values, T)
