"""
Experiment configuration files.

A configuration is a YAML document (JSON is accepted too, being a subset).
Every entry is validated against :data:`SCHEMA`; errors carry the line of
the offending entry.  See ``README.md`` for the full schema.
"""
from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml

from .errors import ConfigError

__all__ = ["EXPERIMENTS", "SCHEMA", "ExperimentConfig", "load_config", "parse_config"]

EXPERIMENTS = ("kernel", "sample", "convergence", "bounds", "stein-check",
               "chaining-check", "regularize-check")

# leaf spec: (type or tuple of types, default, allowed values or None)
_num = (int, float)
_list = list
_NONE = object()

SCHEMA: Dict[str, Any] = {
    "experiment": (str, _NONE, EXPERIMENTS),
    "seed": (int, 0, None),
    "repetitions": (int, 1, None),
    "output": (str, "out", None),
    "grid": {
        "n": (int, 1, None),
        "size": (int, 16, None),
        "construction": (str, "equiangular",
                         ("equiangular", "product-quadrature", "fibonacci", "uniform-random")),
    },
    "network": {
        "widths": (_list, [2, 64, 1], None),
        "c_w": ((_list, float, int), [1.0, 2.0], None),
        "c_b": ((_list, float, int), [0.0, 0.0], None),
        "weight_law": (str, "gaussian", ("gaussian", "rademacher", "uniform", "student-t")),
        "activation": (str, "relu", ("relu", "tanh", "identity")),
        "df": (_num, 5.0, None),
        "seed": ((int, type(None)), None, None),
    },
    "spectral": {
        "iota": (_num, 1.0, None),
        "truncation_K": ((int, type(None)), None, None),
        "include_constant_mode": (bool, True, None),
    },
    "mc": {
        "draws": (int, 10000, None),
        "bootstrap": (int, 20, None),
        "permutations": (int, 200, None),
    },
    "sweep": {
        "n1": (_list, [8, 64, 512, 4096], None),
    },
    "kernel": {
        "type": (str, "nngp", ("nngp", "smoothing", "heat")),
        "epsilon": (_num, 0.1, None),
        "method": (str, "auto", ("auto", "closed", "polar", "hermite")),
    },
    "sample": {
        "type": (str, "network", ("network", "limit", "smoothing-kl", "smoothing-cholesky")),
        "d": (int, 1, None),
    },
    "bounds": {
        "p": (_num, 1e9, None),
        "iota": (_num, 1e-9, None),
        "constant_c": (_num, 1.0, None),
        "variant": (str, "statement", ("statement", "induction")),
        "lip_sigma": ((_num, type(None)), None, None),
        "opnorm_moments": ((_list, type(None)), None, None),
        "opnorm3_moments": ((_list, type(None)), None, None),
        "opnorm_reps": (int, 30, None),
        "third_moment_sup": (_num, 1.0, None),
        "eps": (_num, 0.5, None),
        "delta": (_num, 0.5, None),
        "dF": (_num, 1e-3, None),
        "modF": (_num, 0.0, None),
        "modH": (_num, 0.0, None),
        "d": (int, 1, None),
        "chaining": {
            "alpha": (_num, 1.0, None),
            "beta": (_num, 4.0, None),
            "gamma": (_num, 4.0, None),
            "theta": (_num, 0.1, None),
            "lambda": (_num, 1.0, None),
            "k": (_num, 1.0, None),
            "d": (int, 1, None),
        },
    },
    "stein": {
        "count": (int, 20, None),
        "trials": (int, 6, None),
    },
    "chaining": {
        "p": (int, 2, None),
        "iota": (_num, 3.0, None),
        "truncation_K": (int, 64, None),
        "grid_size": (int, 128, None),
        "draws": (int, 10000, None),
        "thetas": (_list, [0.1, 0.2, 0.4, 0.8, 1.6], None),
        "lambda_scales": (_list, [0.5, 1.0, 1.5, 2.0, 3.0], None),
        "slack_sigmas": (_num, 3.0, None),
    },
    "regularize": {
        "epsilons": (_list, [0.05, 0.1, 0.2], None),
        "max_degree": (int, 8, None),
        "grid_size": (int, 64, None),
        "tol": (_num, 1e-7, None),
    },
}

class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads ``1e9`` and ``1e-9`` as floats (YAML 1.2 / JSON)."""


_Loader.yaml_implicit_resolvers = {k: list(v) for k, v in yaml.SafeLoader.yaml_implicit_resolvers.items()}
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"),
    list("-+0123456789"),
)

_POSITIVE = {
    ("repetitions",), ("grid", "size"), ("grid", "n"), ("mc", "draws"), ("spectral", "iota"),
    ("kernel", "epsilon"), ("sample", "d"), ("stein", "count"), ("stein", "trials"),
    ("chaining", "draws"), ("chaining", "grid_size"), ("chaining", "truncation_K"),
    ("regularize", "grid_size"), ("bounds", "opnorm_reps"),
}


def _line_map(node, path=(), out=None) -> Dict[Tuple, int]:
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = k.value
            out[path + (key,)] = k.start_mark.line + 1
            _line_map(v, path + (key,), out)
            out[path + (key,)] = k.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_map(v, path + (i,), out)
    return out


def _line(lines, path):
    while path and path not in lines:
        path = path[:-1]
    return lines.get(path)


def _merge(schema, data, lines, path, src) -> Dict[str, Any]:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"'{'.'.join(path)}' must be a mapping", _line(lines, path), src)
    out = {}
    for key in data:
        if key not in schema:
            where = ".".join(path + (str(key),))
            raise ConfigError(f"unknown key '{where}'", _line(lines, path + (key,)), src)
    for key, spec in schema.items():
        p = path + (key,)
        if isinstance(spec, dict):
            out[key] = _merge(spec, data.get(key), lines, p, src)
            continue
        types, default, choices = spec
        if key not in data:
            if default is _NONE:
                raise ConfigError(f"missing required key '{'.'.join(p)}'", _line(lines, path), src)
            out[key] = copy.deepcopy(default)
            continue
        v = data[key]
        types = types if isinstance(types, tuple) else (types,)
        flat = []
        for t in types:
            flat.extend(t if isinstance(t, tuple) else (t,))
        ok = isinstance(v, tuple(flat)) and not (isinstance(v, bool) and bool not in flat)
        if float in flat and isinstance(v, int) and not isinstance(v, bool):
            v = float(v)
            ok = True
        if not ok:
            names = "/".join(t.__name__ if t is not type(None) else "null" for t in flat)
            raise ConfigError(f"'{'.'.join(p)}' must be {names}, got {v!r}", _line(lines, p), src)
        if choices is not None and v not in choices:
            raise ConfigError(f"'{'.'.join(p)}' must be one of {list(choices)}, got {v!r}",
                              _line(lines, p), src)
        if p in _POSITIVE and not v > 0:
            raise ConfigError(f"'{'.'.join(p)}' must be positive", _line(lines, p), src)
        if isinstance(v, list):
            for i, item in enumerate(v):
                if isinstance(item, bool) or not isinstance(item, (int, float)):
                    raise ConfigError(f"'{'.'.join(p)}[{i}]' must be a number",
                                      _line(lines, p + (i,)), src)
        out[key] = v
    return out


@dataclass
class ExperimentConfig:
    """Validated configuration with defaults filled in."""

    experiment: str
    values: Dict[str, Any]
    source: Optional[str] = None
    lines: Dict[Tuple, int] = field(default_factory=dict, repr=False)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seed(self) -> int:
        return int(self.values["seed"])

    def line_of(self, *path) -> Optional[int]:
        return _line(self.lines, tuple(path))

    def error(self, message: str, *path) -> ConfigError:
        return ConfigError(message, self.line_of(*path), self.source)

    def echo(self) -> Dict[str, Any]:
        return copy.deepcopy(self.values)


def parse_config(text: str, source: Optional[str] = None, experiment: Optional[str] = None) -> ExperimentConfig:
    """Parse and validate configuration text.

    ``experiment`` (from the command line) fills in or must agree with the
    ``experiment`` key.
    """
    try:
        node = yaml.compose(text, Loader=_Loader)
        data = yaml.load(text, Loader=_Loader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"syntax error: {exc.problem}", line, source) from None
    lines = _line_map(node) if node is not None else {}
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", _line(lines, ()), source)
    if experiment is not None:
        if "experiment" in data and data["experiment"] != experiment:
            raise ConfigError(
                f"config is for experiment '{data['experiment']}', not '{experiment}'",
                _line(lines, ("experiment",)), source)
        data = dict(data, experiment=experiment)
    values = _merge(SCHEMA, data, lines, (), source)
    return ExperimentConfig(values["experiment"], values, source, lines)


def load_config(path, experiment: Optional[str] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_config(text, str(path), experiment)
