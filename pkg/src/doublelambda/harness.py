"""Configuration files, named scenario presets, scan drivers and CSV output.

Configuration is INI with the sections ``[scheme]``, ``[fields]``,
``[grid]``, ``[scan]``, ``[propagation]`` and ``[velocity]``; see the README
for the schema.  Field values are in cyclic MHz unless ``[fields] units``
says ``rad/us``.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .doppler import (
    DEFAULT_NODES,
    DEFAULT_SPAN,
    PROFILE_QUANTITIES,
    VelocityGrid,
    average_susceptibility,
    check_resolution,
    resolution_ratio,
    velocity_profile,
)
from .errors import ConfigError
from .propagate import PropagationOptions, integrate, manley_rowe_report, switching_curve
from .scheme import (
    COHERENCES,
    FREQ_MATCH_TOL,
    LEVELS,
    MHZ,
    NA2_COHERENCE_WIDTH,
    NA2_GAMMA_PARTIAL,
    NA2_LEVEL_WIDTH,
    NA2_WAVELENGTHS,
    PARTIAL_DECAYS,
    FieldState,
    SchemeParams,
    frequency_matching_residual,
    na2_hinze,
)

SCAN_VARIABLES = ("Omega4", "Z", "G1", "G3", "v")
UNITS = {"mhz": MHZ, "rad/us": 1.0}
NA2_GROUPS = {"level_width": NA2_LEVEL_WIDTH, "coherence_width": NA2_COHERENCE_WIDTH, "gamma_partial": NA2_GAMMA_PARTIAL}
SECTIONS = ("scheme", "fields", "grid", "scan", "propagation", "velocity")


# -- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class ScanSpec:
    """One scan: variable, inclusive range in field units, and sample count."""

    variable: str
    start: float
    stop: float
    count: int
    fields: FieldState
    params: SchemeParams
    output: str | None = None

    def __post_init__(self):
        if self.variable not in SCAN_VARIABLES:
            raise ConfigError(f"scan variable must be one of {SCAN_VARIABLES}, got {self.variable!r}")
        if self.count < 2:
            raise ConfigError(f"scan count must be >= 2, got {self.count}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ConfigError("scan range must be finite")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class PropagationSettings:
    z_max: float = 10.0
    step: float = 0.01
    sample_every: int = 10
    options: PropagationOptions = field(default_factory=PropagationOptions)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration of one run."""

    name: str
    params: SchemeParams
    fields: FieldState  # internal angular units
    unit: float  # internal units per configured field unit
    unit_label: str
    grid: VelocityGrid
    scan: ScanSpec | None
    propagation: PropagationSettings
    quantities: tuple
    sweep: str
    source: str  # normalized INI text of the inputs

    def echo(self) -> list[str]:
        """Human-readable summary of resolved values with units."""
        p, f = self.params, self.fields
        G, O1, O3, O4 = (tuple(g / self.unit for g in f.G), f.Omega1 / self.unit, f.Omega3 / self.unit, f.Omega4 / self.unit)
        out = [
            f"topology = {p.topology.value}",
            f"wavelengths_nm = {', '.join(f'{x:g}' for x in p.wavelengths_nm)}",
            f"temperature_K = {p.temperature:g}",
            f"level_width [1e6/s] = {dict(p.level_width)}",
            f"coherence_width [1e6/s] = {dict(p.coherence_width)}",
            f"gamma_partial [1e6/s] = {dict(p.gamma_partial)}",
            f"pump [1e6/s] = {', '.join(f'{x:.6g}' for x in p.pump)}",
            f"alpha0 = {', '.join(f'{x:.6g}' for x in p.alpha0)}",
            f"G [{self.unit_label}] = {', '.join(_fmt_complex(g) for g in G)}",
            f"Omega1, Omega3, Omega4 [{self.unit_label}] = {O1:g}, {O3:g}, {O4:g} (Omega2 = {O1 + O3 - O4:g})",
            f"grid = {self.grid.scheme}, n = {self.grid.n}",
        ]
        return out


def _fmt_complex(z: complex) -> str:
    return f"{z.real:g}" if z.imag == 0 else f"{z.real:g}{z.imag:+g}j"


def preset_names() -> list[str]:
    return sorted(p.name[:-4] for p in (resources.files("doublelambda") / "presets").iterdir() if p.name.endswith(".ini"))


def preset_text(name: str) -> str:
    path = resources.files("doublelambda") / "presets" / f"{name}.ini"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return path.read_text()


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[(.+)\]", s)
        if m:
            current = m.group(1).strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return i
    return None


class _Reader:
    """Typed access to an INI parser with line numbers in error messages."""

    def __init__(self, text: str, origin: str):
        self.text, self.origin = text, origin
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text, source=origin)
        except configparser.Error as exc:
            raise ConfigError(f"{origin}: {exc}") from None
        unknown = [s for s in cp.sections() if s not in SECTIONS]
        if unknown:
            raise ConfigError(f"{origin}: unknown section(s) {unknown}; expected {SECTIONS}")
        self.cp = cp

    def _where(self, section, key):
        line = _line_of(self.text, section, key)
        return f"{self.origin}, line {line}" if line else self.origin

    def has(self, section, key):
        return self.cp.has_option(section, key)

    def get(self, section, key, cast=str, default=None):
        if not self.has(section, key):
            return default
        raw = self.cp.get(section, key)
        try:
            return cast(raw)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{self._where(section, key)}: [{section}] {key} = {raw!r}: {exc}") from None

    def keys(self, section):
        return list(self.cp[section].keys()) if self.cp.has_section(section) else []


def _floats(raw: str) -> tuple:
    return tuple(float(x) for x in raw.replace(",", " ").split())


def _ints(raw: str) -> tuple:
    return tuple(int(x) for x in raw.replace(",", " ").split())


def _bool(raw: str) -> bool:
    v = raw.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _scheme_kwargs(r: _Reader) -> tuple[str, dict]:
    preset = r.get("scheme", "preset", default="na2_hinze")
    kw = {}
    for key in ("topology",):
        if r.has("scheme", key):
            kw[key] = r.get("scheme", key)
    for key in ("temperature", "molar_mass", "occupancy"):
        if r.has("scheme", key):
            kw[key] = r.get("scheme", key, float)
    for key in ("wavelengths_nm", "pump", "alpha0"):
        if r.has("scheme", key):
            kw[key] = r.get("scheme", key, _floats)
    if r.has("scheme", "propagation_sign"):
        kw["propagation_sign"] = r.get("scheme", "propagation_sign", _ints)
    groups = {"level_width": LEVELS, "coherence_width": COHERENCES, "gamma_partial": PARTIAL_DECAYS}
    for group, names in groups.items():
        sub = {n: r.get("scheme", f"{group}.{n}", float) for n in names if r.has("scheme", f"{group}.{n}")}
        if sub:
            kw[group] = sub
    known = {"preset", "topology", "temperature", "molar_mass", "occupancy", "wavelengths_nm", "pump", "alpha0", "propagation_sign"}
    for key in r.keys("scheme"):
        base = key.split(".")[0]
        if key not in known and base not in groups:
            raise ConfigError(f"{r._where('scheme', key)}: unknown key [scheme] {key}")
    return preset, kw


def _build_params(preset: str, kw: dict) -> SchemeParams:
    if preset == "na2_hinze":
        merged = {g: {**NA2_GROUPS[g], **kw[g]} for g in NA2_GROUPS if g in kw}
        return na2_hinze(**{**kw, **merged})
    if preset == "none":
        missing = [k for k in ("topology", "wavelengths_nm", "level_width", "coherence_width", "gamma_partial", "pump",
                               "temperature", "molar_mass") if k not in kw]
        if missing:
            raise ConfigError(f"[scheme] preset = none requires {missing}")
        return SchemeParams(**kw)
    raise ConfigError(f"unknown scheme preset {preset!r}; expected 'na2_hinze' or 'none'")


def parse_config(text: str, origin: str = "<config>", *, nodes: int | None = None, step: float | None = None) -> RunConfig:
    """Resolve INI text into a :class:`RunConfig`.  ``nodes``/``step`` override the file."""
    r = _Reader(text, origin)
    preset, kw = _scheme_kwargs(r)
    params = _build_params(preset, kw)

    unit_name = r.get("fields", "units", default="MHz").strip().lower()
    if unit_name not in UNITS:
        raise ConfigError(f"{r._where('fields', 'units')}: units must be 'MHz' or 'rad/us'")
    unit = UNITS[unit_name]
    G = tuple(r.get("fields", f"G{j}", complex, 0j) * unit for j in range(1, 5))
    O = {k: r.get("fields", k, float, 0.0) * unit for k in ("Omega1", "Omega3", "Omega4")}
    if r.has("fields", "Omega2"):
        raise ConfigError(f"{r._where('fields', 'Omega2')}: Omega2 is derived (Omega1 + Omega3 - Omega4) and cannot be set")
    fields = FieldState(G, **O)

    scheme_name = r.get("grid", "scheme", default="uniform")
    n = nodes if nodes is not None else r.get("grid", "nodes", int, None)
    span = r.get("grid", "span", float, DEFAULT_SPAN)
    if scheme_name == "single":
        grid = VelocityGrid.single(r.get("grid", "v", float, 0.0))
    else:
        if n is not None and n < 1:
            raise ConfigError(f"grid nodes must be >= 1, got {n}")
        grid = VelocityGrid.for_params(params, scheme_name, n or (DEFAULT_NODES if scheme_name == "uniform" else None), span)

    scan = None
    if r.cp.has_section("scan"):
        var = r.get("scan", "variable", default="Omega4")
        start = r.get("scan", "start", float)
        stop = r.get("scan", "stop", float)
        count = r.get("scan", "count", int, 2)
        if start is None or stop is None:
            raise ConfigError(f"{origin}: [scan] needs start and stop")
        scan = ScanSpec(var, start, stop, count, fields, params)

    dz = step if step is not None else r.get("propagation", "step", float, 0.01)
    opts = PropagationOptions(
        frozen=r.get("propagation", "frozen", _bool, False),
        linear=r.get("propagation", "linear", _bool, True),
        mixing=r.get("propagation", "mixing", _bool, True),
        mismatch=r.get("propagation", "mismatch", float, 0.0),
    )
    prop = PropagationSettings(
        z_max=r.get("propagation", "z_max", float, 10.0),
        step=dz,
        sample_every=r.get("propagation", "sample_every", int, 10),
        options=opts,
    )
    if prop.step <= 0 or prop.z_max < 0 or prop.sample_every < 1:
        raise ConfigError(f"{origin}: [propagation] needs step > 0, z_max >= 0, sample_every >= 1")

    qs = tuple(q.strip() for q in r.get("velocity", "quantities", default="alpha4").split(",") if q.strip())
    bad = [q for q in qs if q not in PROFILE_QUANTITIES]
    if bad:
        raise ConfigError(f"{r._where('velocity', 'quantities')}: unknown quantities {bad}; choose from {PROFILE_QUANTITIES}")
    sweep = r.get("propagation", "sweep", default="Omega4")

    buf = io.StringIO()
    r.cp.write(buf)
    return RunConfig(origin, params, fields, unit, "MHz" if unit == MHZ else "rad/us", grid, scan, prop, qs, sweep,
                     buf.getvalue())


def load_config(path=None, preset: str | None = None, **overrides) -> RunConfig:
    """Load a config file or a named preset (not both)."""
    if (path is None) == (preset is None):
        raise ConfigError("give exactly one of a config path or a preset name")
    if preset is not None:
        return parse_config(preset_text(preset), f"preset:{preset}", **overrides)
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror or exc}") from None
    return parse_config(text, str(p), **overrides)


# -- validation ----------------------------------------------------------------


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)  # (name, ok, detail)
    echo: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def add(self, name, ok, detail=""):
        self.checks.append((name, bool(ok), detail))

    def lines(self):
        for name, ok, detail in self.checks:
            yield f"[{'PASS' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else "")
        for e in self.echo:
            yield f"  {e}"


def _validate_raw_scheme(rep: ValidationReport, kw: dict, preset: str):
    if preset == "na2_hinze":
        lw, cw, gp = ({**NA2_GROUPS[g], **kw.get(g, {})} for g in ("level_width", "coherence_width", "gamma_partial"))
        wl = kw.get("wavelengths_nm", NA2_WAVELENGTHS)
    else:
        lw, cw, gp = kw.get("level_width", {}), kw.get("coherence_width", {}), kw.get("gamma_partial", {})
        wl = kw.get("wavelengths_nm")
    if wl is not None and len(wl) == 4:
        res = frequency_matching_residual(wl)
        rep.add("frequency matching 1/l1 - 1/l2 + 1/l3 = 1/l4", abs(res) <= FREQ_MATCH_TOL,
                f"relative residual {res:.2e} (tolerance {FREQ_MATCH_TOL:g})")
    neg = {f"{g}.{k}": v for g, d in (("level_width", lw), ("coherence_width", cw), ("gamma_partial", gp))
           for k, v in d.items() if not v > 0}
    rep.add("rate positivity", not neg, f"non-positive: {neg}" if neg else "all rates > 0")
    if "temperature" in kw:
        rep.add("temperature positivity", kw["temperature"] > 0, f"{kw['temperature']} K")


def validate_config(path=None, preset: str | None = None, text: str | None = None) -> ValidationReport:
    """Run every invariant check and collect the results instead of stopping at the first."""
    rep = ValidationReport()
    origin = "<text>"
    try:
        if text is None:
            if preset is not None:
                text, origin = preset_text(preset), f"preset:{preset}"
            else:
                p = Path(path)
                text, origin = p.read_text(), str(p)
    except OSError as exc:
        rep.add("readable", False, f"{path}: {exc.strerror or exc}")
        return rep
    except ConfigError as exc:
        rep.add("readable", False, str(exc))
        return rep
    try:
        r = _Reader(text, origin)
        preset_name, kw = _scheme_kwargs(r)
    except ConfigError as exc:
        rep.add("parse", False, str(exc))
        return rep
    rep.add("parse", True)
    _validate_raw_scheme(rep, kw, preset_name)
    try:
        cfg = parse_config(text, origin)
    except ConfigError as exc:
        rep.add("resolve", False, str(exc))
        return rep
    rep.add("resolve", True, "scheme, fields, grid and scan constructed")
    ratio = resolution_ratio(cfg.params, cfg.grid)
    rep.add("velocity grid resolution", ratio <= 1, f"Doppler shift between nodes / narrowest width = {ratio:.3g}")
    rep.echo = cfg.echo()
    return rep


# -- CSV output ----------------------------------------------------------------


def _header(cfg: RunConfig, verb: str, notes=()) -> list[str]:
    lines = [f"doublelambda {verb}", f"source: {cfg.name}"]
    lines += [f"note: {n}" for n in notes]
    lines += cfg.echo()
    lines += ["config:"] + [f"  {ln}" for ln in cfg.source.strip().splitlines() if ln.strip()]
    return [f"# {ln}" for ln in lines]


def write_csv(path, header_lines, columns, rows) -> str:
    """Write comment header, column names and rows; ``path=None`` returns the text."""
    buf = io.StringIO()
    for ln in header_lines:
        buf.write(ln + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([f"{x:.10g}" if isinstance(x, float) else x for x in row])
    text = buf.getvalue()
    if path is not None:
        p = Path(path)
        try:
            p.write_text(text)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write output {p}: {exc.strerror}") from None
    return text


def read_csv(path):
    """Return (header comment lines, column names, float array) of a written CSV."""
    lines = Path(path).read_text().splitlines()
    header = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    cols = body[0].split(",")
    data = np.array([[float(x) for x in ln.split(",")] for ln in body[1:]], dtype=float)
    return header, cols, data.reshape(-1, len(cols))


# -- drivers -------------------------------------------------------------------


def _pool_map(fn, items, workers: int):
    """Ordered map, optionally over a process pool."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


@dataclass(frozen=True)
class _SpectrumTask:
    params: SchemeParams
    fields: FieldState
    grid: VelocityGrid

    def __call__(self, omega4):
        f = self.fields.replace(Omega4=float(omega4))
        c = average_susceptibility(self.params, f, self.grid, mixing=False, check=False)
        a = c.alpha
        dk = c.delta_k
        return float(a[3]), float(-a[1]), float(dk[3]), float(dk[1])


SPECTRUM_COLUMNS = ("Omega4", "alpha4", "g2", "delta_k4", "delta_k2")


def spectrum_rows(cfg: RunConfig, workers: int = 1):
    scan = cfg.scan
    if scan is None or scan.variable != "Omega4":
        raise ConfigError("spectrum needs a [scan] over Omega4")
    x = scan.values()
    check_resolution(cfg.params, cfg.grid)
    res = _pool_map(_SpectrumTask(cfg.params, cfg.fields, cfg.grid), list(x * cfg.unit), workers)
    return [(float(xi), *r) for xi, r in zip(x, res)]


def run_spectrum(cfg: RunConfig, out=None, workers: int = 1) -> str:
    """Omega4 scan of alpha4, Stokes gain g2 and dispersion, in units of alpha_40."""
    rows = spectrum_rows(cfg, workers)
    notes = [f"Omega4 in {cfg.unit_label}; Omega2 = Omega1 + Omega3 - Omega4",
             "alpha4, g2, delta_k4, delta_k2 per unit Z (resonant undriven probe absorption = 1)"]
    return write_csv(out, _header(cfg, "spectrum", notes), SPECTRUM_COLUMNS, rows)


TRACE_COLUMNS = ("Z", "G1_re", "G1_im", "G2_re", "G2_im", "G3_re", "G3_im", "G4_re", "G4_im", "T4", "T1",
                 "N1", "N2", "N3", "N4", "theta", "psi")


def trace_rows(trace, unit: float):
    T = trace.transmission
    N = trace.photon_numbers
    for i, z in enumerate(trace.z):
        G = trace.G[i] / unit
        yield (float(z), *(float(v) for g in G for v in (g.real, g.imag)), float(T[i, 3]), float(T[i, 0]),
               *(float(x) for x in N[i]), float(trace.theta[i]), float(trace.psi[i]))


def propagate_config(cfg: RunConfig, **option_changes):
    s = cfg.propagation
    opts = s.options if not option_changes else PropagationOptions(**{**s.options.__dict__, **option_changes})
    return integrate(cfg.params, cfg.fields, cfg.grid, s.z_max, s.step, sample_every=s.sample_every, options=opts)


def run_propagation(cfg: RunConfig, out=None) -> str:
    """Propagation trace along Z."""
    trace = propagate_config(cfg)
    notes = [f"G in {cfg.unit_label}; N_j = photon-number proxy / input probe photons",
             f"step = {cfg.propagation.step:g}, options = {cfg.propagation.options}"]
    return write_csv(out, _header(cfg, "propagate", notes), TRACE_COLUMNS, trace_rows(trace, cfg.unit))


@dataclass(frozen=True)
class _SwitchTask:
    cfg: RunConfig

    def __call__(self, value):
        c = self.cfg
        curve = switching_curve(c.params, c.fields, c.grid, c.propagation.z_max, c.sweep, [value], c.propagation.step,
                                options=c.propagation.options)
        return float(curve.transmission[0])


def run_switching(cfg: RunConfig, out=None, workers: int = 1) -> str:
    """Probe transmission at Z = z_max versus the swept Omega4, G1 or G3."""
    scan = cfg.scan
    if scan is None or scan.variable != cfg.sweep:
        raise ConfigError(f"switching needs a [scan] whose variable matches [propagation] sweep = {cfg.sweep}")
    x = scan.values()
    T = _pool_map(_SwitchTask(cfg), list(x * cfg.unit), workers)
    notes = [f"{cfg.sweep} in {cfg.unit_label}; T4 = |G4(Z)/G4(0)|^2 at Z = {cfg.propagation.z_max:g}"]
    return write_csv(out, _header(cfg, "switching", notes), (cfg.sweep, "T4"), zip(map(float, x), T))


def run_velocity(cfg: RunConfig, out=None) -> str:
    """Velocity profiles of the configured quantities over the grid nodes."""
    profiles = [velocity_profile(cfg.params, cfg.fields, cfg.grid, q) for q in cfg.quantities]
    x = profiles[0].v_over_u
    keep = np.ones(len(x), dtype=bool)
    if cfg.scan is not None and cfg.scan.variable == "v":
        keep = (x >= cfg.scan.start) & (x <= cfg.scan.stop)
    cols = ["v_over_u", "maxwell_weight"]
    for q in cfg.quantities:
        cols += [f"{q}_re", f"{q}_im"] if q.startswith("chi") else [q]
    rows = []
    for i in np.flatnonzero(keep):
        row = [float(x[i]), float(profiles[0].weight[i])]
        for p in profiles:
            v = p.values[i]
            row += [float(v.real), float(v.imag)] if p.quantity.startswith("chi") else [float(v.real)]
        rows.append(row)
    notes = ["Maxwell weight divided out; weight column gives the normalized node weight"]
    return write_csv(out, _header(cfg, "velocity", notes), cols, rows)


MR_COLUMNS = ("Z", "dN1", "dN2", "dN3", "dN4", "defect", "defect_over_dN4")


def run_manley_rowe(cfg: RunConfig, out=None) -> str:
    """Photon-number bookkeeping with absorption and refraction switched off."""
    trace = propagate_config(cfg, linear=False)
    rep = manley_rowe_report(trace)
    rows = [(*r, float(q)) for r, q in zip(rep.rows(), rep.relative_defect)]
    notes = ["sigma_j forced to 0; dN in units of input probe photons",
             "defect = |dN4-dN2| + |dN4+dN1| + |dN4+dN3|"]
    return write_csv(out, _header(cfg, "manley-rowe", notes), MR_COLUMNS, rows)


__all__ = [
    "ScanSpec", "PropagationSettings", "RunConfig", "ValidationReport", "parse_config", "load_config",
    "preset_names", "preset_text", "validate_config", "run_spectrum", "run_propagation", "run_switching",
    "run_velocity", "run_manley_rowe", "spectrum_rows", "write_csv", "read_csv", "SPECTRUM_COLUMNS",
    "TRACE_COLUMNS", "MR_COLUMNS",
]
