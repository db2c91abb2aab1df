"""Job configuration: defaults, flat TOML files and flag overrides."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ConfigError
from .finsler import CATALOG

JOBS = ("average", "classify", "ode-average", "fiber-integrate", "check")
FORMATS = ("text", "jsonl", "csv")


@dataclass
class JobConfig:
    job: str = "average"
    # Finsler jobs
    metric: str | None = None
    expr: str | None = None
    dim: int | None = None
    b: list | None = None
    a: list | None = None
    eps_quartic: float = 0.1
    x: list | None = None
    order: object = None
    probes: int | None = None
    tol_riemannian: float = 1e-6
    tol_berwald: float = 1e-5
    base_step: float | None = None
    # ODE averaging
    k: int = 1
    m: int = 1
    omega: str = "1"
    g: str | None = None
    f: str | None = None
    eps: list = field(default_factory=lambda: [0.05])
    t_end: float | None = None
    dt: float | None = None
    grid: int = 64
    I0: list = field(default_factory=lambda: [1.0])
    phi0: list | None = None
    # fiber integration
    base_index: list = field(default_factory=list)
    radius: float = 8.0
    step: float = 1e-4
    # output
    out: str | None = None
    format: str = "text"
    seed: int = 0

    def as_dict(self):
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in dataclasses.fields(JobConfig)}
_FLOAT_LISTS = {"b", "x", "eps", "I0", "phi0"}
_INT_LISTS = {"base_index"}
_INTS = {"dim", "probes", "k", "m", "grid", "seed"}
_FLOATS = {"eps_quartic", "tol_riemannian", "tol_berwald", "base_step", "t_end", "dt", "radius", "step"}


def _normalise_key(key):
    return key.replace("-", "_")


def _float_list(value, key):
    if isinstance(value, str):
        value = [v for v in value.replace(";", ",").split(",") if v.strip()]
    if isinstance(value, (int, float)):
        value = [value]
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a list of numbers, got {value!r}") from None


def _matrix(value, key):
    if isinstance(value, str):
        value = [row.split(",") for row in value.split(";") if row.strip()]
    try:
        rows = [[float(v) for v in row] for row in value]
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a matrix like '4,0;0,1'") from None
    if any(len(r) != len(rows) for r in rows):
        raise ConfigError(f"{key}: matrix must be square")
    return rows


def _order(value):
    if value is None:
        return None
    if isinstance(value, str):
        parts = [p for p in value.replace("x", ",").split(",") if p.strip()]
        value = [int(p) for p in parts]
        return value[0] if len(value) == 1 else value
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    return int(value)


def coerce(key, value):
    key = _normalise_key(key)
    if key not in _FIELDS:
        raise ConfigError(f"unknown configuration key {key!r}")
    if value is None:
        return key, None
    try:
        if key in _FLOAT_LISTS:
            return key, _float_list(value, key)
        if key in _INT_LISTS:
            return key, [int(v) for v in _float_list(value, key)]
        if key == "a":
            return key, _matrix(value, key)
        if key == "order":
            return key, _order(value)
        if key in _INTS:
            return key, int(value)
        if key in _FLOATS:
            return key, float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from None
    return key, str(value)


def load_file(path) -> dict:
    """Read a flat TOML file into coerced configuration values."""
    try:
        with open(Path(path), "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid config {path}: {exc}") from None
    values = {}
    for key, value in raw.items():
        if isinstance(value, dict):
            raise ConfigError(f"config must be flat; found table [{key}]")
        k, v = coerce(key, value)
        values[k] = v
    return values


def build_config(job: str, file_values: dict | None = None, flag_values: dict | None = None) -> JobConfig:
    """Defaults, then file values, then explicit flags; validated."""
    config = JobConfig(job=job)
    for source in (file_values or {}, flag_values or {}):
        for key, value in source.items():
            if value is None:
                continue
            k, v = coerce(key, value)
            setattr(config, k, v)
    config.job = job
    validate(config)
    return config


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def validate(c: JobConfig):
    _require(c.job in JOBS, f"unknown job {c.job!r}")
    _require(c.format in FORMATS, f"format must be one of {FORMATS}")
    if c.job in ("average", "classify"):
        _require((c.metric is None) != (c.expr is None), "give exactly one of --metric or --expr")
        if c.metric is not None:
            _require(c.metric in CATALOG, f"unknown metric {c.metric!r}; choose from {sorted(CATALOG)}")
        if c.dim is None:
            if c.x is not None:
                c.dim = len(c.x)
            elif c.a is not None:
                c.dim = len(c.a)
            elif c.b is not None:
                c.dim = len(c.b)
            else:
                c.dim = 2
        if c.metric in ("riemannian-exp2d", "randers-general"):
            _require(c.dim == 2, f"{c.metric} is two-dimensional")
        if c.metric in ("randers-flat", "randers-general"):
            _require(c.b is not None, f"{c.metric} needs --b")
            _require(len(c.b) == c.dim, "--b has the wrong dimension")
        if c.metric == "riemannian-constant":
            _require(c.a is not None, "riemannian-constant needs --a")
            _require(len(c.a) == c.dim, "--a has the wrong dimension")
        _require(c.dim in (2, 3), "quadrature is available in dimensions 2 and 3")
        if c.x is None:
            c.x = [0.0] * c.dim
        _require(len(c.x) == c.dim, "--x has the wrong dimension")
        if c.order is None:
            from .indicatrix import default_order

            order = default_order(c.dim)
            c.order = list(order) if isinstance(order, tuple) else order
        minimum = 3 if c.dim == 2 else 2
        orders = c.order if isinstance(c.order, list) else [c.order]
        _require(all(o >= minimum for o in orders), f"order must be >= {minimum}")
        if c.probes is None:
            c.probes = 16 if c.dim == 2 else 26
        _require(c.probes >= 1, "probes must be positive")
        _require(c.tol_riemannian > 0 and c.tol_berwald > 0, "tolerances must be positive")
        _require(c.base_step is None or c.base_step > 0, "base_step must be positive")
    if c.job == "ode-average":
        _require(c.g is not None, "ode-average needs --g")
        _require(c.k >= 1 and c.m >= 1, "k and m must be positive")
        _require(len(c.eps) >= 1 and all(e > 0 for e in c.eps), "eps values must be positive")
        _require(c.t_end is None or c.t_end > 0, "t_end must be positive")
        _require(c.dt is None or c.dt > 0, "dt must be positive")
        _require(c.grid >= 4, "grid must be >= 4")
        if c.phi0 is None:
            c.phi0 = [0.0] * c.k
        _require(len(c.I0) == c.m, "--I0 has the wrong dimension")
        _require(len(c.phi0) == c.k, "--phi0 has the wrong dimension")
    if c.job == "fiber-integrate":
        _require(c.expr is not None, "fiber-integrate needs --expr for the fiber coefficient")
        if c.dim is None:
            c.dim = len(c.x) if c.x is not None else 1
        if c.x is None:
            c.x = [0.0] * c.dim
        _require(len(c.x) == c.dim, "--x has the wrong dimension")
        _require(c.k >= 1, "k must be positive")
        _require(all(1 <= i <= c.dim for i in c.base_index), "base indices run from 1 to dim")
        _require(len(set(c.base_index)) == len(c.base_index), "base indices must be distinct")
        if c.order is None:
            c.order = 64
        _require(isinstance(c.order, int) and c.order >= 2, "order must be an integer >= 2")
        _require(c.radius > 0 and c.step > 0, "radius and step must be positive")
    for name in _FLOATS:
        value = getattr(c, name)
        _require(value is None or math.isfinite(value), f"{name} must be finite")
    return c
