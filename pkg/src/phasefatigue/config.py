"""Run configuration files.

A configuration is a sectioned ``key = value`` text file (the INI dialect
read by :mod:`configparser`)::

    [grid]
    L = 1.0
    n_cells = 50

    [material]
    rho = 1.0
    kappa = 10.0          # scalar, or n_cells comma-separated cell values
    F0 = 0.01
    a = 1.0
    # c, k_q, varkappa, theta_ref : all four switch on the thermal model

    [load]
    amplitude = 0.6
    omega = 4.0
    shape = half-sine     # uniform | half-sine | gaussian
    center = 0.5          # gaussian only
    width = 0.1           # gaussian only
    heat_supply = 0.0     # thermal runs only

    [controls]
    dt = auto             # or a positive number
    t_end = 20.0
    phase_scheme = semi-implicit-diffusion
    sample_every = 10
    cfl_safety = 0.5
    freeze_phase = false

    [initial]
    u0_kind = zero        # zero | half-sine
    u0_amplitude = 0.0
    phi0_const = 0.0
    theta0_const = 1.0    # thermal runs; defaults to theta_ref

    [outputs]
    trajectory_path = trajectory.csv
    fields_path = none
    probe_node = 10

Every key outside this list is rejected, so a misspelt key cannot fall back
to a default silently.  Errors are collected and reported together as
``section.key: message``.
"""

import configparser
from dataclasses import dataclass, replace
import math
from typing import Optional

import numpy as np

from .errors import ConfigError, InvalidArgument
from .model import (LOAD_SHAPES, FieldState, Grid1D, LoadProgram, MaterialParams,
                    ThermalParams, initial_state, validate)
from .solver import PHASE_SCHEMES, StepControls, stable_dt

SECTIONS = ("grid", "material", "load", "controls", "initial", "outputs")
SWEEP_AXES = ("rho", "omega", "amplitude", "F0", "kappa")
U0_KINDS = ("zero", "half-sine")
THERMAL_KEYS = ("c", "k_q", "varkappa", "theta_ref")

_KEYS = {
    "grid": ("L", "n_cells"),
    "material": ("rho", "kappa", "F0", "a") + THERMAL_KEYS,
    "load": ("amplitude", "omega", "shape", "center", "width", "heat_supply"),
    "controls": ("dt", "t_end", "phase_scheme", "sample_every", "cfl_safety", "freeze_phase"),
    "initial": ("u0_kind", "u0_amplitude", "phi0_const", "theta0_const"),
    "outputs": ("trajectory_path", "fields_path", "probe_node"),
}
_REQUIRED = {
    "grid": ("L", "n_cells"),
    "material": ("rho", "kappa", "F0", "a"),
    "load": ("amplitude", "omega"),
    "controls": ("dt", "t_end"),
    "initial": (),
    "outputs": ("trajectory_path",),
}


@dataclass(frozen=True)
class RunConfig:
    """A fully validated run description.

    Material entries are floats (uniform) or tuples of per-cell values.
    ``dt`` is always resolved; ``dt_auto`` remembers that it was derived
    from the stability limit, so derived configurations (sweeps) re-resolve
    it.
    """

    L: float
    n_cells: int
    rho: object
    kappa: object
    F0: object
    a: object
    thermal: Optional[ThermalParams]
    amplitude: float
    omega: float
    shape: str
    center: float
    width: float
    heat_supply: float
    dt: float
    dt_auto: bool
    t_end: float
    phase_scheme: str
    sample_every: int
    cfl_safety: float
    freeze_phase: bool
    u0_kind: str
    u0_amplitude: float
    phi0_const: float
    theta0_const: Optional[float]
    trajectory_path: str
    fields_path: Optional[str]
    probe_node: int

    @property
    def is_thermal(self) -> bool:
        return self.thermal is not None

    def grid(self) -> Grid1D:
        return Grid1D(self.L, self.n_cells)

    def params(self) -> MaterialParams:
        return MaterialParams.uniform(self.grid(), rho=self.rho, kappa=self.kappa,
                                      F0=self.F0, a=self.a, thermal=self.thermal)

    def load(self) -> LoadProgram:
        return LoadProgram(self.amplitude, self.omega, self.shape, self.center,
                           self.width, self.heat_supply)

    def controls(self) -> StepControls:
        return StepControls(dt=self.dt, t_end=self.t_end, cfl_safety=self.cfl_safety,
                            phase_scheme=self.phase_scheme, sample_every=self.sample_every,
                            freeze_phase=self.freeze_phase)

    def initial_state(self) -> FieldState:
        grid = self.grid()
        u0 = 0.0
        if self.u0_kind == "half-sine":
            u0 = self.u0_amplitude * np.sin(np.pi * grid.x / grid.L)
            u0[0] = u0[-1] = 0.0
        return initial_state(grid, u0=u0, phi0=self.phi0_const,
                             theta0=self.theta0_const if self.is_thermal else None)

    def with_value(self, axis: str, value: float) -> "RunConfig":
        """Copy with one sweep parameter replaced (dt re-resolved if auto)."""
        if axis not in SWEEP_AXES:
            raise InvalidArgument(f"sweep axis must be one of {SWEEP_AXES}, got {axis!r}")
        cfg = replace(self, **{axis: float(value)})
        problems = [f"material.{m}" for m in validate(cfg.params(), cfg.grid())]
        if problems:
            raise ConfigError(problems)
        if cfg.dt_auto:
            cfg = replace(cfg, dt=_auto_dt(cfg))
        return cfg


def _auto_dt(cfg: RunConfig) -> float:
    return StepControls.auto(cfg.params(), cfg.grid(), cfg.t_end, cfg.cfl_safety,
                             phase_scheme=cfg.phase_scheme).dt


class _Reader:
    """Typed access to the parsed sections with error collection."""

    def __init__(self, parser: configparser.ConfigParser):
        self.parser = parser
        self.errors = []

    def has(self, section, key):
        return self.parser.has_option(section, key)

    def raw(self, section, key, default=None):
        if self.has(section, key):
            return self.parser.get(section, key).strip()
        if key in _REQUIRED[section]:
            self.errors.append(f"{section}.{key}: missing required key")
        return default

    def number(self, section, key, default=None, cast=float):
        text = self.raw(section, key)
        if text is None:
            return default
        try:
            if cast is int:
                value = int(text)
            else:
                value = float(text)
        except ValueError:
            kind = "integer" if cast is int else "number"
            self.errors.append(f"{section}.{key}: cannot parse {text!r} as a {kind}")
            return None
        if not math.isfinite(value):
            self.errors.append(f"{section}.{key}: must be finite, got {text!r}")
            return None
        return value

    def field(self, section, key):
        """Scalar or comma-separated list of floats."""
        text = self.raw(section, key)
        if text is None:
            return None
        parts = [p.strip() for p in text.split(",") if p.strip()]
        try:
            values = [float(p) for p in parts]
        except ValueError:
            self.errors.append(f"{section}.{key}: cannot parse {text!r} as a number or list")
            return None
        if not values:
            self.errors.append(f"{section}.{key}: empty value")
            return None
        if not all(math.isfinite(v) for v in values):
            self.errors.append(f"{section}.{key}: must be finite")
            return None
        return values[0] if len(values) == 1 and "," not in text else tuple(values)

    def boolean(self, section, key, default=False):
        if not self.has(section, key):
            return default
        try:
            return self.parser.getboolean(section, key)
        except ValueError:
            self.errors.append(f"{section}.{key}: expected true/false")
            return default

    def choice(self, section, key, options, default):
        text = self.raw(section, key, default)
        if text not in options:
            self.errors.append(f"{section}.{key}: must be one of {', '.join(options)}, got {text!r}")
            return default
        return text


def _optional_path(text):
    if text is None or text.lower() in ("none", ""):
        return None
    return text


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    """Parse configuration text; raise :class:`ConfigError` listing every problem."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str  # keys are case sensitive (F0)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from None

    errors = []
    for section in parser.sections():
        if section not in _KEYS:
            errors.append(f"{section}: unknown section")
            continue
        for key in parser.options(section):
            if key not in _KEYS[section]:
                errors.append(f"{section}.{key}: unknown key")
    for section in SECTIONS:
        if not parser.has_section(section):
            if _REQUIRED[section]:
                errors.append(f"{section}: missing section")
            parser.add_section(section)

    r = _Reader(parser)
    L = r.number("grid", "L")
    n_cells = r.number("grid", "n_cells", cast=int)
    mat = {k: r.field("material", k) for k in ("rho", "kappa", "F0", "a")}

    present = [k for k in THERMAL_KEYS if r.has("material", k)]
    thermal = None
    if present and len(present) < len(THERMAL_KEYS):
        for k in THERMAL_KEYS:
            if k not in present:
                r.errors.append(f"material.{k}: required when any thermal constant is given")
    elif present:
        vals = [r.number("material", k) for k in THERMAL_KEYS]
        if None not in vals:
            thermal = ThermalParams(*vals)

    amplitude = r.number("load", "amplitude")
    omega = r.number("load", "omega")
    shape = r.choice("load", "shape", LOAD_SHAPES, "uniform")
    center = r.number("load", "center", 0.5)
    width = r.number("load", "width", 0.1)
    heat_supply = r.number("load", "heat_supply", 0.0)

    dt_text = r.raw("controls", "dt")
    dt_auto = dt_text is not None and dt_text.lower() == "auto"
    dt = None if dt_auto or dt_text is None else r.number("controls", "dt")
    t_end = r.number("controls", "t_end")
    phase_scheme = r.choice("controls", "phase_scheme", PHASE_SCHEMES, "explicit")
    sample_every = r.number("controls", "sample_every", 1, cast=int)
    cfl_safety = r.number("controls", "cfl_safety", 0.5)
    freeze_phase = r.boolean("controls", "freeze_phase")

    u0_kind = r.choice("initial", "u0_kind", U0_KINDS, "zero")
    u0_amplitude = r.number("initial", "u0_amplitude", 0.0)
    phi0 = r.number("initial", "phi0_const", 0.0)
    theta0 = r.number("initial", "theta0_const", None)

    traj_path = r.raw("outputs", "trajectory_path")
    fields_path = _optional_path(r.raw("outputs", "fields_path"))
    probe = r.number("outputs", "probe_node", None, cast=int)
    errors.extend(r.errors)

    # Value checks that need parsed numbers.
    def check(ok, where, message):
        if not ok:
            errors.append(f"{where}: {message}")

    if L is not None:
        check(L > 0, "grid.L", "L must be > 0")
    if n_cells is not None:
        check(n_cells >= 4, "grid.n_cells", "n_cells must be >= 4")
    grid_ok = L is not None and n_cells is not None and L > 0 and n_cells >= 4
    if grid_ok:
        for k, v in mat.items():
            if isinstance(v, tuple) and len(v) != n_cells:
                errors.append(f"material.{k}: expected 1 or {n_cells} values, got {len(v)}")
                mat[k] = None
    if omega is not None:
        check(omega >= 0, "load.omega", "omega must be >= 0")
    if shape == "gaussian" and width is not None:
        check(width > 0, "load.width", "width must be > 0")
    if dt is not None:
        check(dt > 0, "controls.dt", "dt must be > 0 or 'auto'")
    if t_end is not None:
        check(t_end > 0, "controls.t_end", "t_end must be > 0")
    if sample_every is not None:
        check(sample_every >= 1, "controls.sample_every", "sample_every must be >= 1")
    if cfl_safety is not None:
        check(0 < cfl_safety <= 1, "controls.cfl_safety", "cfl_safety must lie in (0, 1]")
    if phi0 is not None:
        check(0.0 <= phi0 <= 1.0, "initial.phi0_const",
              f"phi0 must lie in the admissible range [0, 1], got {phi0!r}")
    if thermal is not None:
        if theta0 is None and not r.has("initial", "theta0_const"):
            theta0 = thermal.theta_ref
        if theta0 is not None:
            check(theta0 > 0, "initial.theta0_const", "theta0 must be > 0")
    elif theta0 is not None:
        errors.append("initial.theta0_const: only meaningful with thermal material constants")
    if grid_ok and probe is not None:
        check(0 <= probe <= n_cells, "outputs.probe_node", f"probe_node must lie in [0, {n_cells}]")

    if grid_ok and None not in mat.values():
        grid = Grid1D(L, n_cells)
        params = MaterialParams.uniform(grid, thermal=thermal, **mat)
        for message in validate(params, grid):
            name = message.split()[0]
            if name.startswith("thermal."):
                name = name[len("thermal."):]
            errors.append(f"material.{name}: {message}")

    if errors:
        raise ConfigError(errors)

    cfg = RunConfig(
        L=L, n_cells=n_cells, thermal=thermal, amplitude=amplitude, omega=omega, shape=shape,
        center=center, width=width, heat_supply=heat_supply, dt=dt if dt is not None else 0.0,
        dt_auto=dt_auto, t_end=t_end, phase_scheme=phase_scheme, sample_every=sample_every,
        cfl_safety=cfl_safety, freeze_phase=freeze_phase, u0_kind=u0_kind,
        u0_amplitude=u0_amplitude, phi0_const=phi0,
        theta0_const=theta0 if thermal is not None else None,
        trajectory_path=traj_path, fields_path=fields_path,
        probe_node=n_cells // 2 if probe is None else probe, **mat)
    if dt_auto:
        cfg = replace(cfg, dt=_auto_dt(cfg))
    else:
        explicit = phase_scheme == "explicit" and not freeze_phase
        limit = cfl_safety * stable_dt(cfg.params(), cfg.grid(), include_phase=explicit)
        if dt > limit * (1 + 1e-12):
            raise ConfigError([f"controls.dt: dt = {dt!r} exceeds the stability limit {limit!r}"])
    return cfg


def parse_config(path) -> RunConfig:
    """Read and validate a configuration file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"file: cannot read {path}: {exc.strerror}"]) from None
    return parse_config_text(text, source=str(path))


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(cfg: RunConfig) -> str:
    """Canonical text of ``cfg``; :func:`parse_config_text` inverts it exactly."""
    lines = ["[grid]", f"L = {_fmt(cfg.L)}", f"n_cells = {cfg.n_cells}", "", "[material]"]
    for k in ("rho", "kappa", "F0", "a"):
        lines.append(f"{k} = {_fmt(getattr(cfg, k))}")
    if cfg.thermal is not None:
        for k in THERMAL_KEYS:
            lines.append(f"{k} = {_fmt(float(getattr(cfg.thermal, k)))}")
    lines += ["", "[load]"]
    for k in ("amplitude", "omega", "shape", "center", "width", "heat_supply"):
        lines.append(f"{k} = {_fmt(getattr(cfg, k))}")
    lines += ["", "[controls]", f"dt = {'auto' if cfg.dt_auto else _fmt(cfg.dt)}"]
    for k in ("t_end", "phase_scheme", "sample_every", "cfl_safety", "freeze_phase"):
        lines.append(f"{k} = {_fmt(getattr(cfg, k))}")
    lines += ["", "[initial]"]
    for k in ("u0_kind", "u0_amplitude", "phi0_const"):
        lines.append(f"{k} = {_fmt(getattr(cfg, k))}")
    if cfg.theta0_const is not None:
        lines.append(f"theta0_const = {_fmt(cfg.theta0_const)}")
    lines += ["", "[outputs]", f"trajectory_path = {cfg.trajectory_path}",
              f"fields_path = {cfg.fields_path or 'none'}", f"probe_node = {cfg.probe_node}", ""]
    return "\n".join(lines)


@dataclass(frozen=True)
class SweepSpec:
    """One parameter axis swept around a base configuration."""

    base: RunConfig
    axis: str
    values: tuple
    snapshot_time: float

    def __post_init__(self):
        problems = []
        if self.axis not in SWEEP_AXES:
            problems.append(f"axis: must be one of {', '.join(SWEEP_AXES)}, got {self.axis!r}")
        if len(self.values) == 0:
            problems.append("values: at least one value is required")
        elif not all(math.isfinite(v) for v in self.values):
            problems.append("values: must be finite")
        if not (math.isfinite(self.snapshot_time) and 0 <= self.snapshot_time <= self.base.t_end):
            problems.append(f"snapshot: must lie in [0, t_end = {self.base.t_end!r}]")
        if problems:
            raise ConfigError(problems)

    def member(self, value: float) -> RunConfig:
        return self.base.with_value(self.axis, value)
