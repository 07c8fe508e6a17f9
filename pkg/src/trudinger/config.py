"""Run configuration: a strict INI grammar mapped onto frozen dataclasses.

Every section is a dataclass whose fields are the only accepted keys; the
field type picks the value parser.  Unknown sections or keys are fatal.
"""

import configparser
import dataclasses
import difflib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .discretization import REGISTRY, boundary_from_tag
from .errors import ConfigError, InvalidArgument
from .solver import P2_MODE
from .stepper import SolveConfig

MODES = ("standard", "p2")
ORACLES = ("none", "heat", "separable")
FORMATS = ("csv", "json", "both")
ZETAS = ("bubble", "bubble-exp", "bubble-cos")


@dataclass(frozen=True)
class ProblemConfig:
    p: float = None
    mode: str = "standard"
    a: float = 0.0
    b: float = 1.0
    T: float = 0.1
    boundary: str = "sin-bump"
    params: tuple = ()


@dataclass(frozen=True)
class DiscretizationConfig:
    m_t: int = 100
    n_elements: int = 32
    quad_order: int = 4
    lumped: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    gammas: tuple = (0.2, 0.1, 0.05)
    ladder: tuple = ((50, 16), (100, 32), (200, 64))
    cutoffs: tuple = ()
    oracle: str = "none"
    zeta: str = "bubble"
    samples: int = 10000
    ineq_p: tuple = (2.5, 3.0, 4.0)
    dims: tuple = (1, 2, 3)
    seed: Optional[int] = None


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"
    format: str = "json"


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    discretization: DiscretizationConfig = field(default_factory=DiscretizationConfig)
    solver: SolveConfig = field(default_factory=SolveConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self):
        return {s: dataclasses.asdict(getattr(self, s)) for s in SECTIONS}


SECTIONS = {
    "problem": ProblemConfig,
    "discretization": DiscretizationConfig,
    "solver": SolveConfig,
    "experiment": ExperimentConfig,
    "output": OutputConfig,
}

# value kinds per key; anything not listed is inferred from the default
_KINDS = {
    ("problem", "p"): "float",
    ("problem", "params"): "floats",
    ("experiment", "gammas"): "floats",
    ("experiment", "cutoffs"): "floats",
    ("experiment", "ineq_p"): "floats",
    ("experiment", "dims"): "ints",
    ("experiment", "ladder"): "ladder",
    ("experiment", "seed"): "int",
}


def _kind(section, f):
    if (section, f.name) in _KINDS:
        return _KINDS[(section, f.name)]
    default = f.default
    for t, name in ((bool, "bool"), (int, "int"), (float, "float"), (str, "str")):
        if isinstance(default, t):
            return name
    raise AssertionError(f"no parser for {section}.{f.name}")


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"{s!r} is not finite")
    return v


def _list(s, conv):
    s = s.strip()
    return tuple(conv(x) for x in re.split(r"[,\s]+", s)) if s else ()


def _rung(s):
    m = re.fullmatch(r"(\d+)\s*[xX]\s*(\d+)", s)
    if not m:
        raise ValueError(f"ladder rung {s!r} is not of the form <m_t>x<n_elements>")
    return int(m.group(1)), int(m.group(2))


_PARSERS = {
    "float": _float,
    "int": int,
    "str": str.strip,
    "bool": lambda s: configparser.ConfigParser.BOOLEAN_STATES[s.strip().lower()],
    "floats": lambda s: _list(s, _float),
    "ints": lambda s: _list(s, int),
    "ladder": lambda s: tuple(_rung(x.strip()) for x in s.split(",") if x.strip()),
}


def _format_value(kind, v):
    if kind == "bool":
        return "true" if v else "false"
    if kind == "float":
        return repr(float(v))
    if kind == "floats":
        return ", ".join(repr(float(x)) for x in v)
    if kind == "ints":
        return ", ".join(str(int(x)) for x in v)
    if kind == "ladder":
        return ", ".join(f"{m}x{n}" for m, n in v)
    return str(v)


def _line_of(text, section, key=None):
    """Line number of ``key`` inside ``[section]`` (of the header if no key), or None."""
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.fullmatch(r"\[([^\]]+)\]", s)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s):
            return i
    return None


class _Errors:
    def __init__(self, text, source):
        self.text, self.source = text, source

    def __call__(self, section, key, msg):
        line = _line_of(self.text, section, key)
        where = f"{self.source}:{line}: " if line else f"{self.source}: "
        name = f"{section}.{key}" if key else section
        return ConfigError(f"{where}{name}: {msg}")


def parse_config(text, source="<config>"):
    """Parse and validate configuration text; raises ConfigError."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                       inline_comment_prefixes=("#",), empty_lines_in_values=False)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        msg = str(exc).splitlines()[0]
        raise ConfigError(f"{source}:{line}: parse error: {msg}" if line else f"{source}: parse error: {msg}") from None
    err = _Errors(text, source)
    if parser.defaults():
        raise err("DEFAULT", None, "a [DEFAULT] section is not supported")
    for section in parser.sections():
        if section not in SECTIONS:
            hint = difflib.get_close_matches(section, SECTIONS, n=1)
            raise err(section, None, "unknown section" + (f" (did you mean [{hint[0]}]?)" if hint else ""))
    built = {}
    for section, cls in SECTIONS.items():
        fields = {f.name: f for f in dataclasses.fields(cls)}
        values = {}
        if parser.has_section(section):
            for key, raw in parser.items(section):
                if key not in fields:
                    hint = difflib.get_close_matches(key, fields, n=1)
                    raise err(section, key, "unknown key" + (f" (did you mean '{section}.{hint[0]}'?)" if hint else "")
                              + f"; known keys: {', '.join(fields)}")
                kind = _kind(section, fields[key])
                try:
                    values[key] = _PARSERS[kind](raw)
                except (ValueError, KeyError) as exc:
                    raise err(section, key, f"cannot read {raw!r} as {kind}: {exc}") from None
        try:
            built[section] = cls(**values)
        except (InvalidArgument, ValueError) as exc:
            raise err(section, None, str(exc)) from None
    cfg = RunConfig(**built)
    if cfg.problem.mode == "p2" and cfg.problem.p is None:
        cfg = dataclasses.replace(cfg, problem=dataclasses.replace(cfg.problem, p=P2_MODE))
    validate(cfg, err)
    return cfg


def validate(cfg, err=None):
    err = err or _Errors("", "<config>")
    pr, d, ex, out = cfg.problem, cfg.discretization, cfg.experiment, cfg.output
    if pr.mode not in MODES:
        raise err("problem", "mode", f"must be one of {MODES}, got {pr.mode!r}")
    if pr.p is None:
        raise err("problem", "p", "is required (or set mode = p2)")
    if pr.mode == "p2" and pr.p != P2_MODE:
        raise err("problem", "p", "must not be set when mode = p2")
    if pr.mode == "standard" and not pr.p > 2:
        raise err("problem", "p", f"must be > 2, got {pr.p}")
    if not pr.a < pr.b:
        raise err("problem", "b", f"interval needs a < b, got a={pr.a}, b={pr.b}")
    if not pr.T > 0:
        raise err("problem", "T", f"must be positive, got {pr.T}")
    if ex.oracle not in ORACLES:
        raise err("experiment", "oracle", f"must be one of {ORACLES}, got {ex.oracle!r}")
    if pr.boundary == "oracle":
        if ex.oracle == "none":
            raise err("problem", "boundary", "'oracle' needs experiment.oracle = heat or separable")
        if pr.params:
            raise err("problem", "params", "must be empty for boundary = oracle")
    elif pr.boundary not in REGISTRY:
        hint = difflib.get_close_matches(pr.boundary, REGISTRY, n=1)
        raise err("problem", "boundary", f"unknown family {pr.boundary!r}"
                  + (f" (did you mean '{hint[0]}'?)" if hint else "") + f"; known: {', '.join(sorted(REGISTRY))}")
    else:
        try:
            boundary_from_tag(pr.boundary, pr.params)
        except InvalidArgument as exc:
            raise err("problem", "params", str(exc)) from None
    if ex.oracle == "heat" and pr.mode != "p2":
        raise err("experiment", "oracle", "the heat oracle needs problem.mode = p2")
    if ex.oracle == "separable" and pr.mode != "standard":
        raise err("experiment", "oracle", "the separable oracle needs problem.mode = standard")
    if ex.oracle != "none" and (pr.a, pr.b) != (0.0, 1.0):
        raise err("problem", "a", "oracles live on the interval (0, 1)")
    for key in ("m_t", "n_elements"):
        if getattr(d, key) < 1:
            raise err("discretization", key, f"must be >= 1, got {getattr(d, key)}")
    if not 1 <= d.quad_order <= 10:
        raise err("discretization", "quad_order", f"must lie in 1..10, got {d.quad_order}")
    g = ex.gammas
    if not g or any(v <= 0 for v in g) or any(b >= a for a, b in zip(g, g[1:])):
        raise err("experiment", "gammas", f"must be positive and strictly decreasing, got {list(g)}")
    if len(ex.ladder) < 2:
        raise err("experiment", "ladder", "needs at least two rungs")
    for (m0, n0), (m1, n1) in zip(ex.ladder, ex.ladder[1:]):
        if min(m0, n0) < 1 or m1 < m0 or n1 < n0 or (m0, n0) == (m1, n1):
            raise err("experiment", "ladder", f"not refining at {m0}x{n0} -> {m1}x{n1}")
    if any(not 0 < t <= pr.T for t in ex.cutoffs):
        raise err("experiment", "cutoffs", f"cutoffs must lie in (0, T], got {list(ex.cutoffs)}")
    if ex.zeta not in ZETAS:
        raise err("experiment", "zeta", f"must be one of {ZETAS}, got {ex.zeta!r}")
    if ex.samples < 1:
        raise err("experiment", "samples", "must be >= 1")
    if not ex.ineq_p or any(not p > 2 for p in ex.ineq_p):
        raise err("experiment", "ineq_p", f"exponents must all be > 2, got {list(ex.ineq_p)}")
    if not ex.dims or any(d_ < 1 for d_ in ex.dims):
        raise err("experiment", "dims", "dimensions must be >= 1")
    if ex.seed is not None and not 0 <= ex.seed < 2**64:
        raise err("experiment", "seed", "must be an unsigned 64-bit integer")
    if out.format not in FORMATS:
        raise err("output", "format", f"must be one of {FORMATS}, got {out.format!r}")
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from None
    return parse_config(text, source=str(path))


def dump_config(cfg):
    """INI text that parses back to ``cfg``."""
    lines = []
    for section, cls in SECTIONS.items():
        lines.append(f"[{section}]")
        obj = getattr(cfg, section)
        for f in dataclasses.fields(cls):
            v = getattr(obj, f.name)
            if v is None or (section, f.name) == ("problem", "p") and cfg.problem.mode == "p2":
                continue
            lines.append(f"{f.name} = {_format_value(_kind(section, f), v)}")
        lines.append("")
    return "\n".join(lines)
