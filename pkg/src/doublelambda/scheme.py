"""Medium and field parameters of the four-level double-Lambda scheme.

Levels are indexed ``l, g, n, m`` (0..3).  The four optical transitions are

    1: l-g (strong drive)     2: g-n (weak Stokes / idler)
    3: n-m (strong drive)     4: m-l (weak probe)

All rates, widths, Rabi amplitudes and detunings are angular frequencies in
units of 1e6 s^-1.  Reported spectral widths are converted to ordinary
frequency.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from dataclasses import fields as dc_fields
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np
from scipy import constants as sc

from .errors import ConfigError

LEVELS = ("l", "g", "n", "m")
PARTIAL_DECAYS = ("gl", "gn", "mn", "ml")
COHERENCES = ("lg", "ng", "nm", "lm", "ln", "gm")
# coherence width attached to each optical transition
TRANSITION_COHERENCE = ("lg", "ng", "nm", "lm")
# (lower, upper) level of each optical transition as (row, column) of the
# density-matrix element that carries its polarization
TRANSITION_LEVELS = (("l", "g"), ("n", "g"), ("n", "m"), ("l", "m"))

RATE_UNIT = 1e6  # internal angular-frequency unit, s^-1
FREQ_MATCH_TOL = 5e-4
MHZ = 2 * math.pi  # one cyclic MHz in internal angular units


class Topology(str, enum.Enum):
    OPEN = "open"
    CLOSED = "closed"


def _frozen_map(values: Mapping[str, float], keys: Sequence[str], what: str):
    missing = [k for k in keys if k not in values]
    extra = [k for k in values if k not in keys]
    if missing or extra:
        raise ConfigError(f"{what}: expected keys {list(keys)}, missing {missing}, unknown {extra}")
    return MappingProxyType({k: float(values[k]) for k in keys})


def _quad(values, what, cast=float):
    try:
        out = tuple(cast(x) for x in values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: {exc}") from None
    if len(out) != 4:
        raise ConfigError(f"{what}: expected 4 values, got {len(out)}")
    return out


def _rebuild_params(kw):
    return SchemeParams(**kw)


@dataclass(frozen=True)
class SchemeParams:
    """Relaxation constants, pumping, kinematics and absorption anchors.

    Parameters
    ----------
    topology : Topology
        ``closed`` when ``l`` is the ground state (pumps ``w_j`` transfer
        population out of ``l``), ``open`` when all four levels are excited
        states fed by independent pumps ``q_j``.
    wavelengths_nm : 4-tuple
        Vacuum wavelengths of transitions 1..4.
    gamma_partial : mapping
        Partial decay rates ``gl, gn, mn, ml`` (``gl`` is g -> l, ...).
    level_width : mapping
        Total level decay rates ``l, g, n, m``.
    coherence_width : mapping
        Coherence half-widths ``lg, ng, nm, lm, ln, gm``.
    pump : 4-tuple
        Per-level pump rates ordered ``l, g, n, m``.  For the closed scheme
        ``pump[0]`` must be zero.
    temperature : float
        Kelvin.
    molar_mass : float
        Molecular mass in atomic mass units.
    alpha0 : 4-tuple or None
        Resonant zero-field intensity absorption coefficients in units of the
        probe one.  ``None`` selects the equal-dipole default
        ``alpha_j0 ~ k_j dn_j / Gamma_j`` scaled to ``alpha_40 = 1``.
    propagation_sign : 4-tuple of +-1
        Projection of each wave vector on the common axis.
    occupancy : float or None
        Open scheme only: if given, pumps are rescaled so that the zero-field
        populations sum to this value.
    """

    topology: Topology
    wavelengths_nm: tuple
    gamma_partial: Mapping[str, float]
    level_width: Mapping[str, float]
    coherence_width: Mapping[str, float]
    pump: tuple
    temperature: float
    molar_mass: float
    alpha0: tuple | None = None
    propagation_sign: tuple = (1, 1, 1, 1)
    occupancy: float | None = None

    def __post_init__(self):
        try:
            topo = Topology(self.topology)
        except ValueError:
            raise ConfigError(f"unknown topology {self.topology!r}") from None
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("topology", topo)
        set_("wavelengths_nm", _quad(self.wavelengths_nm, "wavelengths_nm"))
        set_("gamma_partial", _frozen_map(self.gamma_partial, PARTIAL_DECAYS, "gamma_partial"))
        set_("level_width", _frozen_map(self.level_width, LEVELS, "level_width"))
        set_("coherence_width", _frozen_map(self.coherence_width, COHERENCES, "coherence_width"))
        set_("pump", _quad(self.pump, "pump"))
        set_("propagation_sign", _quad(self.propagation_sign, "propagation_sign", int))
        set_("temperature", float(self.temperature))
        set_("molar_mass", float(self.molar_mass))
        self._validate()
        if topo is Topology.OPEN and self.occupancy is not None:
            total = sum(_zero_field_open(self.pump, self.level_width, self.gamma_partial))
            set_("pump", tuple(q * self.occupancy / total for q in self.pump))
        if self.alpha0 is None:
            set_("alpha0", equal_dipole_alpha0(self))
        else:
            a0 = _quad(self.alpha0, "alpha0")
            if not all(a > 0 and math.isfinite(a) for a in a0):
                raise ConfigError(f"alpha0 must be positive and finite, got {a0}")
            set_("alpha0", a0)

    def __reduce__(self):
        # mapping proxies do not pickle; rebuild from plain dicts (worker processes)
        kw = {f.name: getattr(self, f.name) for f in dc_fields(self)}
        for k in ("gamma_partial", "level_width", "coherence_width"):
            kw[k] = dict(kw[k])
        return (_rebuild_params, (kw,))

    def _validate(self):
        for name, group in (
            ("gamma_partial", self.gamma_partial),
            ("level_width", self.level_width),
            ("coherence_width", self.coherence_width),
        ):
            for k, x in group.items():
                if not (x > 0 and math.isfinite(x)):
                    raise ConfigError(f"{name}[{k}] must be positive and finite, got {x}")
        if not all(lam > 0 and math.isfinite(lam) for lam in self.wavelengths_nm):
            raise ConfigError(f"wavelengths must be positive, got {self.wavelengths_nm}")
        res = frequency_matching_residual(self.wavelengths_nm)
        if res >= FREQ_MATCH_TOL:
            raise ConfigError(
                f"frequency matching 1/l4 + 1/l2 = 1/l1 + 1/l3 violated: residual {res:.3g} >= {FREQ_MATCH_TOL}"
            )
        gp, lw = self.gamma_partial, self.level_width
        for upper, chans in (("g", ("gl", "gn")), ("m", ("mn", "ml"))):
            for c in chans:
                if gp[c] > lw[upper]:
                    raise ConfigError(f"partial decay gamma_{c}={gp[c]} exceeds level width Gamma_{upper}={lw[upper]}")
            if sum(gp[c] for c in chans) > lw[upper]:
                raise ConfigError(f"partial decays out of {upper} exceed its total width")
        if not all(q >= 0 and math.isfinite(q) for q in self.pump):
            raise ConfigError(f"pump rates must be non-negative, got {self.pump}")
        if self.topology is Topology.CLOSED and self.pump[0] != 0:
            raise ConfigError("closed topology: pump rates are w_j out of the ground state l, so pump[l] must be 0")
        if self.topology is Topology.OPEN and not any(q > 0 for q in self.pump):
            raise ConfigError("open topology needs at least one positive pump rate q_j")
        if self.occupancy is not None:
            if self.topology is not Topology.OPEN:
                raise ConfigError("occupancy applies to the open topology only")
            if not 0 < self.occupancy <= 1:
                raise ConfigError(f"occupancy must lie in (0, 1], got {self.occupancy}")
        if not all(s in (-1, 1) for s in self.propagation_sign):
            raise ConfigError(f"propagation_sign entries must be +-1, got {self.propagation_sign}")
        if not (self.temperature > 0 and math.isfinite(self.temperature)):
            raise ConfigError(f"temperature must be positive, got {self.temperature}")
        if not (self.molar_mass > 0 and math.isfinite(self.molar_mass)):
            raise ConfigError(f"molar_mass must be positive, got {self.molar_mass}")

    # -- derived quantities ------------------------------------------------
    @property
    def wavenumbers(self) -> np.ndarray:
        """Vacuum wave numbers k_j in 1/m."""
        return 2 * np.pi / (np.asarray(self.wavelengths_nm) * 1e-9)

    @property
    def doppler_coefficients(self) -> np.ndarray:
        """Signed k_j projections converting velocity (m/s) to internal rate units."""
        return np.asarray(self.propagation_sign) * self.wavenumbers / RATE_UNIT

    @property
    def transition_widths(self) -> np.ndarray:
        return np.array([self.coherence_width[c] for c in TRANSITION_COHERENCE])

    def zero_field_populations(self) -> np.ndarray:
        """Populations n_l, n_g, n_n, n_m with all fields off."""
        if self.topology is Topology.OPEN:
            return np.array(_zero_field_open(self.pump, self.level_width, self.gamma_partial))
        return np.array(_zero_field_closed(self.pump, self.level_width, self.gamma_partial))

    def zero_field_differences(self) -> np.ndarray:
        """dn_1..dn_4 = n_l-n_g, n_n-n_g, n_n-n_m, n_l-n_m."""
        nl, ng, nn, nm = self.zero_field_populations()
        return np.array([nl - ng, nn - ng, nn - nm, nl - nm])

    def rate_vector(self) -> np.ndarray:
        """Flat float64 vector consumed by the compiled kernel."""
        lw, gp, cw = self.level_width, self.gamma_partial, self.coherence_width
        return np.array(
            [lw[k] for k in LEVELS]
            + [gp[k] for k in PARTIAL_DECAYS]
            + [cw[k] for k in COHERENCES]
            + [1.0 if self.topology is Topology.CLOSED else 0.0]
            + list(self.pump),
            dtype=np.float64,
        )

    def replace(self, **changes) -> "SchemeParams":
        if "alpha0" not in changes and not _alpha0_explicit(self):
            changes["alpha0"] = None
        return replace(self, **changes)


def _alpha0_explicit(params: SchemeParams) -> bool:
    return params.alpha0 != equal_dipole_alpha0(params)


def _zero_field_open(q, lw, gp):
    ng = q[1] / lw["g"]
    nm = q[3] / lw["m"]
    nn = (q[2] + gp["gn"] * ng + gp["mn"] * nm) / lw["n"]
    nl = (q[0] + gp["gl"] * ng + gp["ml"] * nm) / lw["l"]
    return nl, ng, nn, nm


def _zero_field_closed(w, lw, gp):
    # population reaching n either directly or by cascade through g and m
    wn_eff = w[2] + w[1] * gp["gn"] / lw["g"] + w[3] * gp["mn"] / lw["m"]
    nl = 1.0 / (1.0 + w[3] / lw["m"] + w[1] / lw["g"] + wn_eff / lw["n"])
    return nl, nl * w[1] / lw["g"], nl * wn_eff / lw["n"], nl * w[3] / lw["m"]


def equal_dipole_alpha0(params: SchemeParams) -> tuple:
    """alpha_j0 for equal transition dipoles, in units of alpha_40.

    The resonant homogeneous absorption coefficient scales as
    ``k_j |d|^2 dn_j / Gamma_j``.
    """
    dn = params.zero_field_differences()
    k = params.wavenumbers
    w = params.transition_widths
    raw = k * dn / w
    if raw[3] == 0:
        raise ConfigError("probe transition has no zero-field population difference; alpha0 must be given")
    out = raw / raw[3]
    return tuple(float(x) for x in out)


@dataclass(frozen=True)
class FieldState:
    """Complex Rabi amplitudes G_1..G_4 and detunings of fields 1, 3, 4.

    The Stokes detuning is never stored; it follows from frequency matching
    as ``Omega2 = Omega1 + Omega3 - Omega4``.
    """

    G: tuple = (0j, 0j, 0j, 0j)
    Omega1: float = 0.0
    Omega3: float = 0.0
    Omega4: float = 0.0

    def __post_init__(self):
        G = _quad(self.G, "G", complex)
        if not all(math.isfinite(abs(g)) for g in G):
            raise ConfigError(f"Rabi amplitudes must be finite, got {G}")
        object.__setattr__(self, "G", G)
        for name in ("Omega1", "Omega3", "Omega4"):
            x = float(getattr(self, name))
            if not math.isfinite(x):
                raise ConfigError(f"{name} must be finite")
            object.__setattr__(self, name, x)

    @property
    def Omega2(self) -> float:
        return self.Omega1 + self.Omega3 - self.Omega4

    @property
    def detunings(self) -> np.ndarray:
        return np.array([self.Omega1, self.Omega2, self.Omega3, self.Omega4])

    @classmethod
    def from_mhz(cls, G=(0, 0, 0, 0), Omega1=0.0, Omega3=0.0, Omega4=0.0) -> "FieldState":
        """Build from cyclic-frequency values in MHz (Rabi frequencies and detunings)."""
        return cls(tuple(complex(g) * MHZ for g in G), Omega1 * MHZ, Omega3 * MHZ, Omega4 * MHZ)

    def to_mhz(self) -> tuple:
        """(G, Omega1, Omega3, Omega4) in cyclic MHz."""
        return tuple(g / MHZ for g in self.G), self.Omega1 / MHZ, self.Omega3 / MHZ, self.Omega4 / MHZ

    def with_G(self, G) -> "FieldState":
        return replace(self, G=tuple(G))

    def replace(self, **changes) -> "FieldState":
        if "Omega2" in changes:
            raise ConfigError("Omega2 is derived from Omega1 + Omega3 - Omega4 and cannot be set")
        return replace(self, **changes)


def shifted_detunings(params: SchemeParams, fields: FieldState, v) -> tuple:
    """Detunings seen by molecules moving with velocity ``v`` (m/s)."""
    v = np.asarray(v, dtype=float)
    kv = params.doppler_coefficients
    O = fields.detunings
    return tuple(O[j] - kv[j] * v for j in range(4))


def frequency_matching_residual(wavelengths_nm) -> float:
    l1, l2, l3, l4 = wavelengths_nm
    return abs(1 / l4 + 1 / l2 - 1 / l1 - 1 / l3) * l4


def thermal_speed(params: SchemeParams) -> float:
    """Most probable speed u = sqrt(2 k_B T / m) in m/s."""
    if not (params.temperature > 0 and params.molar_mass > 0):
        raise ConfigError("temperature and molar mass must be positive")
    m = params.molar_mass * sc.atomic_mass
    return math.sqrt(2 * sc.k * params.temperature / m)


def doppler_fwhm(params: SchemeParams, transition) -> float:
    """Doppler FWHM in GHz (ordinary frequency).

    ``transition`` is an index 1..4, or a pair ``(a, b)`` for a two-photon
    resonance whose effective wave vector is ``k_a - k_b``.
    """
    k = params.wavenumbers * np.asarray(params.propagation_sign)
    if isinstance(transition, tuple):
        a, b = (_check_index(t) for t in transition)
        keff = abs(k[a] - k[b])
    else:
        keff = abs(k[_check_index(transition)])
    u = thermal_speed(params)
    return 2 * math.sqrt(math.log(2)) * keff * u / (2 * math.pi) / 1e9


def homogeneous_fwhm_mhz(width: float) -> float:
    """FWHM in MHz (ordinary frequency) of a Lorentzian with angular half-width ``width``."""
    return 2 * width * RATE_UNIT / (2 * math.pi) / 1e6


def _check_index(j) -> int:
    if j not in (1, 2, 3, 4):
        raise ConfigError(f"transition index must be 1..4, got {j!r}")
    return j - 1


def level_energies(params: SchemeParams) -> dict:
    """Level energies in joules relative to l, from the transition wavelengths."""
    hc = sc.h * sc.c
    l1, l2, l3, _ = (x * 1e-9 for x in params.wavelengths_nm)
    Eg = hc / l1
    En = Eg - hc / l2
    Em = En + hc / l3
    return {"l": 0.0, "g": Eg, "n": En, "m": Em}


def boltzmann_fraction(params: SchemeParams, upper: str, lower: str) -> float:
    """Thermal population ratio exp(-(E_upper - E_lower) / k_B T)."""
    E = level_energies(params)
    if upper not in E or lower not in E:
        raise ConfigError(f"levels must be among {LEVELS}")
    dE = E[upper] - E[lower]
    if dE < 0:
        raise ConfigError(f"level {upper} lies below {lower}; swap the arguments")
    return math.exp(-dE / (sc.k * params.temperature))


# Na2 transitions X(0,45) - A(6,45) - X(14,45) - B(5,45) at 410 C
NA2_WAVELENGTHS = (655.0, 756.0, 532.0, 480.0)
NA2_GAMMA_PARTIAL = {"gl": 7.0, "gn": 4.0, "mn": 5.0, "ml": 10.0}
NA2_LEVEL_WIDTH = {"l": 20.0, "g": 120.0, "n": 20.0, "m": 120.0}
NA2_COHERENCE_WIDTH = {"lg": 70.0, "ng": 70.0, "nm": 70.0, "lm": 70.0, "ln": 20.0, "gm": 120.0}
NA2_TEMPERATURE = 683.15
NA2_MOLAR_MASS = 2 * 22.98976928


def na2_hinze(**overrides) -> SchemeParams:
    """Closed Na2 scheme with the thermal population of level n.

    Level n is populated only thermally: ``w_n`` is set so that
    ``n_n / n_l`` equals the Boltzmann factor at the cell temperature.
    """
    base = dict(
        topology=Topology.CLOSED,
        wavelengths_nm=NA2_WAVELENGTHS,
        gamma_partial=NA2_GAMMA_PARTIAL,
        level_width=NA2_LEVEL_WIDTH,
        coherence_width=NA2_COHERENCE_WIDTH,
        pump=(0.0, 0.0, 0.0, 0.0),
        temperature=NA2_TEMPERATURE,
        molar_mass=NA2_MOLAR_MASS,
    )
    base.update(overrides)
    if "pump" not in overrides:
        probe = SchemeParams(**base)
        frac = boltzmann_fraction(probe, "n", "l")
        base["pump"] = (0.0, 0.0, frac * NA2_LEVEL_WIDTH["n"], 0.0)
    return SchemeParams(**base)
