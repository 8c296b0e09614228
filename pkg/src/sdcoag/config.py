"""Run configuration: flat-sectioned key=value files.

A config file is INI-style text with the sections below; every key has a
default, unknown sections or keys are rejected, and validation errors
name the offending key.  ``auto`` stands for "derive at run time" where a
numeric override is optional.

    [theta]       form=power | a | p
    [kappa]       form=zero|scaled_product | c
    [init]        family=monodisperse|geometric|power_tail | a | r | q
    [run]         n | T | samples | tail_cutoffs | eta | delta
    [integrator]  method | rel_tol | abs_tol | h | h_init | h_min | h_max | clamp_tol
    [checks]      bounds | kappa0 | C | zeta | B | n_probe
    [sweep]       n_list | delta
    [output]      dir | head_size

Table-valued kernels and initial data are in-process API only; configs
cover the parametric families.
"""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields

from .diagnostics import BOUND_IDS
from .errors import ConfigError
from .integrate import IntegratorConfig
from .kernels import KappaModel, KernelSpec, ThetaSequence
from .system import InitialData


@dataclass(frozen=True)
class ThetaConfig:
    form: str = "power"
    a: float = 1.0
    p: float = 1.0


@dataclass(frozen=True)
class KappaConfig:
    form: str = "zero"
    c: float = 0.0


@dataclass(frozen=True)
class InitConfig:
    family: str = "monodisperse"
    a: float = 1.0
    r: float = 0.5
    q: float = 1.5


@dataclass(frozen=True)
class RunSection:
    n: int = 64
    T: float = 1.0
    samples: int = 201
    tail_cutoffs: tuple[int, ...] = (1, 2, 4, 8)
    eta: float = 0.5
    delta: float = 0.01


@dataclass(frozen=True)
class IntegratorSection:
    method: str = "adaptive_embedded_45"
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    h: float = 1e-3
    h_init: float | None = None
    h_min: float = 1e-14
    h_max: float | None = None
    clamp_tol: float | None = None


@dataclass(frozen=True)
class ChecksSection:
    bounds: tuple[str, ...] = BOUND_IDS
    kappa0: float = 1.5
    C: float | None = None
    zeta: float | None = None
    B: float | None = None
    n_probe: int | None = None


@dataclass(frozen=True)
class SweepSection:
    n_list: tuple[int, ...] = ()
    delta: float = 0.1


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"
    head_size: int = 8


@dataclass(frozen=True)
class RunConfig:
    theta: ThetaConfig = field(default_factory=ThetaConfig)
    kappa: KappaConfig = field(default_factory=KappaConfig)
    init: InitConfig = field(default_factory=InitConfig)
    run: RunSection = field(default_factory=RunSection)
    integrator: IntegratorSection = field(default_factory=IntegratorSection)
    checks: ChecksSection = field(default_factory=ChecksSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    output: OutputSection = field(default_factory=OutputSection)

    def kernel_spec(self) -> KernelSpec:
        theta = ThetaSequence.power(self.theta.a, self.theta.p)
        if self.kappa.form == "zero":
            kappa = KappaModel.zero()
        else:
            kappa = KappaModel.scaled_product(self.kappa.c)
        return KernelSpec(theta=theta, kappa=kappa)

    def initial_data(self) -> InitialData:
        c = self.init
        if c.family == "monodisperse":
            return InitialData.monodisperse(c.a)
        if c.family == "geometric":
            return InitialData.geometric(c.a, c.r)
        return InitialData.power_tail(c.a, c.q)

    def integrator_config(self) -> IntegratorConfig:
        s = self.integrator
        try:
            return IntegratorConfig(
                method=s.method,
                rel_tol=s.rel_tol,
                abs_tol=s.abs_tol,
                h=s.h,
                h_init=s.h_init,
                h_min=s.h_min,
                h_max=s.h_max,
                clamp_tol=s.clamp_tol,
            )
        except ValueError as exc:
            raise ConfigError(f"integrator: {exc}") from exc


_SECTIONS = {
    "theta": ThetaConfig,
    "kappa": KappaConfig,
    "init": InitConfig,
    "run": RunSection,
    "integrator": IntegratorSection,
    "checks": ChecksSection,
    "sweep": SweepSection,
    "output": OutputSection,
}

_OPTIONAL_FLOATS = {
    ("integrator", "h_init"),
    ("integrator", "h_max"),
    ("integrator", "clamp_tol"),
    ("checks", "C"),
    ("checks", "zeta"),
    ("checks", "B"),
}
_OPTIONAL_INTS = {("checks", "n_probe")}
_INT_TUPLES = {("run", "tail_cutoffs"), ("sweep", "n_list")}
_STR_TUPLES = {("checks", "bounds")}


def _parse_value(section: str, key: str, raw: str, default):
    raw = raw.strip()
    where = f"{section}.{key}"
    if (section, key) in _OPTIONAL_FLOATS or (section, key) in _OPTIONAL_INTS:
        if raw == "auto":
            return None
        caster = int if (section, key) in _OPTIONAL_INTS else float
        try:
            return caster(raw)
        except ValueError as exc:
            raise ConfigError(f"{where}: expected a number or 'auto', got {raw!r}") from exc
    if (section, key) in _INT_TUPLES:
        if raw == "":
            return ()
        try:
            return tuple(int(tok.strip()) for tok in raw.split(","))
        except ValueError as exc:
            raise ConfigError(f"{where}: expected comma-separated integers, got {raw!r}") from exc
    if (section, key) in _STR_TUPLES:
        if raw == "":
            return ()
        return tuple(tok.strip() for tok in raw.split(","))
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{where}: expected an integer, got {raw!r}") from exc
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{where}: expected a number, got {raw!r}") from exc
    return raw


def _validate(cfg: RunConfig) -> RunConfig:
    def bad(key: str, why: str):
        raise ConfigError(f"{key}: {why}")

    if cfg.theta.form != "power":
        bad("theta.form", f"config kernels are power-law only, got {cfg.theta.form!r}")
    if not cfg.theta.a > 0:
        bad("theta.a", "must be positive")
    if cfg.theta.p < 0:
        bad("theta.p", "must be nonnegative")
    if cfg.kappa.form not in ("zero", "scaled_product"):
        bad("kappa.form", f"must be zero or scaled_product, got {cfg.kappa.form!r}")
    if cfg.kappa.c < 0:
        bad("kappa.c", "must be nonnegative")
    if cfg.init.family not in ("monodisperse", "geometric", "power_tail"):
        bad("init.family", f"unknown family {cfg.init.family!r}")
    if cfg.init.a < 0:
        bad("init.a", "must be nonnegative")
    if cfg.init.family == "geometric" and not (0.0 < cfg.init.r < 1.0):
        bad("init.r", "must lie in (0, 1)")
    if cfg.init.family == "power_tail" and not (cfg.init.q > 1.0):
        bad("init.q", "must exceed 1")
    if cfg.run.n < 1:
        bad("run.n", "must be a positive truncation size")
    if not cfg.run.T > 0:
        bad("run.T", "must be positive")
    if cfg.run.samples < 2:
        bad("run.samples", "need at least 2 sample times")
    if any(r < 1 for r in cfg.run.tail_cutoffs):
        bad("run.tail_cutoffs", "cutoffs must be positive sizes")
    if not (0.0 < cfg.run.eta < 1.0):
        bad("run.eta", "must lie strictly between 0 and 1")
    if not (0.0 < cfg.run.delta < 1.0):
        bad("run.delta", "must lie strictly between 0 and 1")
    unknown = [b for b in cfg.checks.bounds if b not in BOUND_IDS]
    if unknown:
        bad("checks.bounds", f"unknown bound ids {unknown}; known: {list(BOUND_IDS)}")
    if not (1.0 < cfg.checks.kappa0 < 2.0):
        bad("checks.kappa0", "must lie strictly between 1 and 2")
    if cfg.checks.n_probe is not None and cfg.checks.n_probe < 8:
        bad("checks.n_probe", "must be at least 8")
    if cfg.sweep.n_list and any(
        b <= a for a, b in zip(cfg.sweep.n_list, cfg.sweep.n_list[1:])
    ):
        bad("sweep.n_list", "must be strictly ascending")
    if not (0.0 < cfg.sweep.delta < 1.0):
        bad("sweep.delta", "must lie strictly between 0 and 1")
    if cfg.output.head_size < 0:
        bad("output.head_size", "must be nonnegative")
    cfg.integrator_config()  # IntegratorConfig consistency rules
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse and validate config text; defaults fill unspecified keys."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    kwargs = {}
    for name in parser.sections():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]; known: {sorted(_SECTIONS)}")
        cls = _SECTIONS[name]
        defaults = cls()
        known = {f.name for f in fields(cls)}
        values = {}
        for key, raw in parser.items(name):
            if key not in known:
                raise ConfigError(f"{name}.{key}: unknown key; known: {sorted(known)}")
            values[key] = _parse_value(name, key, raw, getattr(defaults, key))
        kwargs[name] = cls(**values)
    return _validate(RunConfig(**kwargs))


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _format_value(section: str, key: str, value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(cfg: RunConfig) -> str:
    """Canonical text form; parse_config(emit_config(cfg)) == cfg."""
    out = io.StringIO()
    for name, _cls in _SECTIONS.items():
        section = getattr(cfg, name)
        out.write(f"[{name}]\n")
        for f in fields(section):
            out.write(f"{f.name} = {_format_value(name, f.name, getattr(section, f.name))}\n")
        out.write("\n")
    return out.getvalue()
