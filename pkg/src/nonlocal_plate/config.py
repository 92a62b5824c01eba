"""Line-based ``section.key = value`` run configuration.

Blank lines and ``#`` comments are ignored; lists are comma separated.  Every key
has a default (see ``DEFAULTS``); unknown keys are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError
from .geometry import Disk, Rectangle
from .kernel import Family
from .operators import QUADRATURES
from .solver import PRECONDITIONERS, PROBLEM_KINDS

DEFAULTS = {
    "domain.shape": "square",
    "domain.x0": "0.0",
    "domain.y0": "0.0",
    "domain.x1": "1.0",
    "domain.y1": "1.0",
    "domain.cx": "0.0",
    "domain.cy": "0.0",
    "domain.radius": "1.0",
    "kernel.family": "bump",
    "kernel.delta": "0.1",
    "kernel.dim": "2",
    "grid.m": "6",
    "grid.h": "",
    "grid.quadrature": "ring_corrected",
    "problem.kind": "poisson",
    "problem.forcing": "lap_of:sine_square(1,1)",
    "problem.collar": "one_delta",
    "solver.tol": "1e-10",
    "solver.max_iter": "",
    "solver.preconditioner": "none",
    "study.kind": "pointwise_laplacian",
    "study.deltas": "0.2,0.1,0.05",
    "study.case": "sine_square(1,1)",
    "identities.pairs": "20",
    "identities.fields": "1000",
    "output.csv": "",
    "output.nodes": "",
    "output.matrix": "",
    "debug.break_symmetry": "false",
}

STUDY_KINDS = ("pointwise_laplacian", "pointwise_biharmonic", "solution")
COLLARS = ("one_delta", "two_delta")


def parse_text(text):
    """Raw ``{key: value}`` pairs from config text."""
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or "." not in key:
            raise ConfigurationError(f"line {lineno}: expected 'section.key = value'")
        if key not in DEFAULTS:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value.strip()
    return raw


def _float(key, v, positive=False):
    try:
        x = float(v)
    except ValueError:
        raise ConfigurationError(f"{key}: expected a number, got {v!r}") from None
    if not math.isfinite(x) or (positive and x <= 0):
        raise ConfigurationError(f"{key}: expected a positive number, got {v!r}")
    return x


def _int(key, v, minimum=None):
    try:
        x = int(v)
    except ValueError:
        raise ConfigurationError(f"{key}: expected an integer, got {v!r}") from None
    if minimum is not None and x < minimum:
        raise ConfigurationError(f"{key}: must be >= {minimum}, got {x}")
    return x


def _choice(key, v, options):
    if v not in options:
        raise ConfigurationError(f"{key}: expected one of {tuple(options)}, got {v!r}")
    return v


def _bool(key, v):
    if v.lower() in ("true", "yes", "1"):
        return True
    if v.lower() in ("false", "no", "0"):
        return False
    raise ConfigurationError(f"{key}: expected true or false, got {v!r}")


@dataclass
class Config:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def echo(self):
        return "\n".join(f"{k} = {self.values[k]}" for k in sorted(self.values))

    # typed views ---------------------------------------------------------

    @property
    def domain(self):
        v = self.values
        if v["domain.shape"] == "square":
            return Rectangle(*(_float(k, v[k]) for k in
                               ("domain.x0", "domain.y0", "domain.x1", "domain.y1")))
        return Disk(_float("domain.cx", v["domain.cx"]), _float("domain.cy", v["domain.cy"]),
                    _float("domain.radius", v["domain.radius"], positive=True))

    @property
    def families(self):
        return [Family(f) for f in _list(self.values["kernel.family"])]

    @property
    def deltas(self):
        return [_float("kernel.delta", d, positive=True) for d in _list(self.values["kernel.delta"])]

    @property
    def dims(self):
        return [_int("kernel.dim", d, 2) for d in _list(self.values["kernel.dim"])]

    def single(self, key):
        items = _list(self.values[key])
        if len(items) != 1:
            raise ConfigurationError(f"{key}: expected a single value for this command")
        return items[0]

    @property
    def h(self):
        delta = _float("kernel.delta", self.single("kernel.delta"), positive=True)
        if self.values["grid.h"]:
            return _float("grid.h", self.values["grid.h"], positive=True)
        return delta / _int("grid.m", self.values["grid.m"], 1)

    @property
    def tol(self):
        return _float("solver.tol", self.values["solver.tol"], positive=True)

    @property
    def max_iter(self):
        v = self.values["solver.max_iter"]
        return _int("solver.max_iter", v, 1) if v else None

    @property
    def preconditioner(self):
        p = self.values["solver.preconditioner"]
        return None if p == "none" else p

    @property
    def study_deltas(self):
        return [_float("study.deltas", d, positive=True) for d in _list(self.values["study.deltas"])]


def _list(v):
    return [s.strip() for s in v.split(",") if s.strip()]


def resolve(raw, overrides=None):
    """Fill defaults, apply overrides and validate every field."""
    values = dict(DEFAULTS)
    values.update(raw)
    values.update(overrides or {})
    v = values
    _choice("domain.shape", v["domain.shape"], ("square", "disk"))
    for f in _list(v["kernel.family"]):
        _choice("kernel.family", f, [x.value for x in Family])
    if not _list(v["kernel.family"]):
        raise ConfigurationError("kernel.family: empty")
    cfg = Config(values)
    if not cfg.deltas:
        raise ConfigurationError("kernel.delta: empty")
    cfg.dims
    cfg.domain
    _int("grid.m", v["grid.m"], 1)
    if v["grid.h"]:
        _float("grid.h", v["grid.h"], positive=True)
    _choice("grid.quadrature", v["grid.quadrature"], QUADRATURES)
    _choice("problem.kind", v["problem.kind"], PROBLEM_KINDS)
    _choice("problem.collar", v["problem.collar"], COLLARS)
    parse_forcing(v["problem.forcing"])
    cfg.tol
    cfg.max_iter
    _choice("solver.preconditioner", v["solver.preconditioner"], PRECONDITIONERS)
    _choice("study.kind", v["study.kind"], STUDY_KINDS)
    cfg.study_deltas
    _int("identities.pairs", v["identities.pairs"], 1)
    _int("identities.fields", v["identities.fields"], 1)
    v["debug.break_symmetry"] = str(_bool("debug.break_symmetry", v["debug.break_symmetry"])).lower()
    return cfg


def load(path=None, overrides=None):
    raw = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = parse_text(fh.read())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return resolve(raw, overrides)


def parse_forcing(spec):
    """``zero``, ``constant:<v>``, ``lap_of:<case>`` or ``bilap_of:<case>`` -> callable."""
    from .analysis import make_case

    kind, _, arg = spec.partition(":")
    kind = kind.strip()
    if kind == "zero" and not arg:
        return lambda x, y: 0.0 * x
    if kind == "constant":
        c = _float("problem.forcing", arg)
        return lambda x, y: c + 0.0 * x
    if kind == "lap_of":
        return make_case(arg).lap
    if kind == "bilap_of":
        return make_case(arg).bilap
    raise ConfigurationError(f"problem.forcing: expected zero, constant:<v>, lap_of:<case> "
                             f"or bilap_of:<case>, got {spec!r}")
