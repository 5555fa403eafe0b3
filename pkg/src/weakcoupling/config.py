"""Run configuration: parsing, validation and potential construction.

Two equivalent syntaxes are accepted:

* a JSON object, or
* ``key = value`` lines with dotted keys (``potential.kind = box``); values are
  JSON literals, bare words are strings, ``#`` starts a comment.

Every config carries ``schema = 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .potential import (Potential, PotentialError, box_1d, box_2d, complex_box_1d,
                        gaussian_1d, gaussian_2d, grid_potential, v_alpha)
from .birman_schwinger import DENSE_CAP

SCHEMA_VERSION = 1
_TOP_KEYS = {"schema", "dimension", "potential", "beta", "discretization", "constants",
             "output", "region", "calibration"}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{': '.join([', '.join(where), message]) if where else message}")
        self.line = line
        self.field = field


@dataclass
class RunConfig:
    dimension: int
    potential: dict
    betas: list[complex] = field(default_factory=list)
    order: int = 10
    panels: int = 20
    quad_order: int = 16
    R: float = 1.0
    Rprime: float = 1.0
    epsilon: float | None = None
    K: float = 1.0
    fmt: str = "csv"
    out: str | None = None
    region: dict = field(default_factory=dict)
    calibration: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)
    lines: dict = field(default_factory=dict, repr=False)

    @property
    def nodes(self) -> int:
        return self.order * self.panels

    def build_potential(self) -> Potential:
        return build_potential(self.potential, self.dimension, self.lines, "potential")


def _parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_text(text: str) -> tuple[dict, dict]:
    """Parse config text into a nested dict plus a map from dotted key to line number."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from None
        if not isinstance(data, dict):
            raise ConfigError("top level must be an object")
        return data, {}
    data: dict = {}
    lines: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or any(not part for part in key.split(".")):
            raise ConfigError("empty key segment", lineno, key or None)
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError("key conflicts with an earlier scalar", lineno, key)
        if parts[-1] in node:
            raise ConfigError("duplicate key", lineno, key)
        node[parts[-1]] = _parse_value(value)
        lines[key] = lineno
    return data, lines


def _err(msg, key, lines):
    return ConfigError(msg, lines.get(key), key)


def _get_number(d: dict, key: str, prefix: str, lines, default=None, kind=float,
                positive=False):
    full = f"{prefix}.{key}" if prefix else key
    if key not in d:
        if default is None:
            raise _err("missing required value", full, lines)
        return default
    v = d[key]
    try:
        if isinstance(v, bool):
            raise TypeError
        out = kind(v)
        if kind is int and out != v:
            raise ValueError
    except (TypeError, ValueError):
        raise _err(f"expected {kind.__name__}, got {v!r}", full, lines) from None
    if isinstance(out, float) and not math.isfinite(out):
        raise _err("value must be finite", full, lines)
    if positive and not out > 0:
        raise _err("value must be positive", full, lines)
    return out


def parse_complex(v, key: str = "", lines=None) -> complex:
    lines = lines or {}
    try:
        if isinstance(v, bool):
            raise TypeError
        if isinstance(v, (list, tuple)) and len(v) == 2:
            c = complex(float(v[0]), float(v[1]))
        elif isinstance(v, str):
            c = complex(v.replace(" ", "").replace("i", "j"))
        else:
            c = complex(v)
    except (TypeError, ValueError):
        raise _err(f"cannot read complex number from {v!r}", key, lines) from None
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        raise _err("complex value must be finite", key, lines)
    return c


def _box(v, d, key, lines):
    try:
        arr = np.asarray(v, dtype=float)
        if d == 1 and arr.shape == (2,):
            arr = arr.reshape(1, 2)
        if arr.shape != (d, 2) or np.any(arr[:, 1] <= arr[:, 0]) or not np.all(np.isfinite(arr)):
            raise ValueError
    except (TypeError, ValueError):
        raise _err(f"expected a non-degenerate box of {d} interval(s), got {v!r}", key, lines) \
            from None
    return tuple(map(tuple, arr))


def build_potential(table: dict, d: int, lines=None, prefix: str = "potential") -> Potential:
    lines = lines or {}
    if not isinstance(table, dict):
        raise _err("expected a potential table", prefix, lines)
    kind = table.get("kind")
    num = lambda k, default=None, **kw: _get_number(table, k, prefix, lines, default, **kw)
    try:
        if kind == "box":
            box = _box(table.get("box", [[0, 1]] * d), d, f"{prefix}.box", lines)
            h = parse_complex(table.get("height", 1.0), f"{prefix}.height", lines)
            return box_1d(*box[0], height=h) if d == 1 else box_2d(box, h)
        if kind == "gaussian":
            amp = parse_complex(table.get("amplitude", 1.0), f"{prefix}.amplitude", lines)
            sigma = num("sigma", 1.0, positive=True)
            cutoff = num("cutoff", 8.0, positive=True)
            if d == 1:
                return gaussian_1d(amp, sigma, num("center", 0.0), cutoff)
            center = table.get("center", [0.0, 0.0])
            normalized = bool(table.get("normalized", False))
            return gaussian_2d(amp, sigma, tuple(center), cutoff, normalized)
        if kind == "complex_box":
            if d != 1:
                raise _err("complex_box is one-dimensional", f"{prefix}.kind", lines)
            pieces = table.get("pieces")
            if not isinstance(pieces, list) or not pieces:
                raise _err("expected a list of [a, b, re, im] pieces", f"{prefix}.pieces", lines)
            parsed = []
            for p in pieces:
                if not isinstance(p, list) or len(p) not in (3, 4):
                    raise _err(f"bad piece {p!r}", f"{prefix}.pieces", lines)
                val = complex(p[2], p[3] if len(p) == 4 else 0.0)
                parsed.append((float(p[0]), float(p[1]), val))
            return complex_box_1d(parsed)
        if kind == "grid":
            values = np.asarray(table.get("values"), dtype=float)
            if "values_imag" in table:
                values = values + 1j * np.asarray(table["values_imag"], dtype=float)
            box = _box(table.get("box"), d, f"{prefix}.box", lines)
            return grid_potential(values, box)
        if kind == "v_alpha":
            alpha = num("alpha")
            re_part = build_potential(table.get("re"), d, lines, f"{prefix}.re")
            im_part = build_potential(table.get("im"), d, lines, f"{prefix}.im")
            return v_alpha(re_part, im_part, alpha)
    except PotentialError as exc:
        raise _err(str(exc), prefix, lines) from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise _err(str(exc), prefix, lines) from None
    raise _err(f"unknown potential kind {kind!r} "
               "(expected box, gaussian, complex_box, grid or v_alpha)", f"{prefix}.kind", lines)


def _betas(table, lines) -> list[complex]:
    if table is None:
        return []
    if not isinstance(table, dict):
        raise _err("expected a beta table", "beta", lines)
    if "values" in table:
        vals = table["values"]
        if not isinstance(vals, list):
            raise _err("expected a list", "beta.values", lines)
        betas = [parse_complex(v, "beta.values", lines) for v in vals]
    elif "theta" in table or "theta_pi" in table:
        key = "theta" if "theta" in table else "theta_pi"
        thetas = table[key]
        eps = table.get("epsilon")
        if not isinstance(thetas, list) or not isinstance(eps, list):
            raise _err("polar family needs lists theta (or theta_pi) and epsilon", "beta", lines)
        scale = math.pi if key == "theta_pi" else 1.0
        betas = [float(e) * complex(math.cos(scale * float(t)), math.sin(scale * float(t)))
                 for e in eps for t in thetas]
    else:
        raise _err("expected beta.values or beta.theta/beta.epsilon", "beta", lines)
    for b in betas:
        if b == 0:
            raise _err("beta values must be nonzero", "beta", lines)
    return betas


def load_config(text: str) -> RunConfig:
    data, lines = parse_text(text)
    unknown = set(data) - _TOP_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise _err("unknown top-level key", key, lines)
    schema = data.get("schema")
    if schema != SCHEMA_VERSION:
        raise _err(f"unsupported schema {schema!r}; expected {SCHEMA_VERSION}", "schema", lines)
    d = _get_number(data, "dimension", "", lines, kind=int)
    if d not in (1, 2):
        raise _err("dimension must be 1 or 2", "dimension", lines)
    pot = data.get("potential")
    if pot is None:
        raise _err("missing potential table", "potential", lines)
    disc = data.get("discretization", {})
    consts = data.get("constants", {})
    out = data.get("output", {})
    default_order, default_panels = (10, 20) if d == 1 else (8, 4)
    cfg = RunConfig(
        dimension=d,
        potential=pot,
        betas=_betas(data.get("beta"), lines),
        order=_get_number(disc, "order", "discretization", lines, default_order, int, True),
        panels=_get_number(disc, "panels", "discretization", lines, default_panels, int, True),
        quad_order=_get_number(disc, "quad_order", "discretization", lines, 16, int, True),
        R=_get_number(consts, "R", "constants", lines, 1.0, positive=True),
        Rprime=_get_number(consts, "Rprime", "constants", lines, 1.0, positive=True),
        epsilon=(_get_number(consts, "epsilon", "constants", lines, positive=True)
                 if "epsilon" in consts else None),
        K=_get_number(consts, "K", "constants", lines, 1.0, positive=True),
        fmt=str(out.get("format", "csv")),
        out=out.get("path"),
        region=data.get("region", {}),
        calibration=data.get("calibration", {}),
        raw=data,
        lines=lines,
    )
    if cfg.fmt not in ("csv", "json"):
        raise _err("format must be csv or json", "output.format", lines)
    check_node_cap(cfg)
    cfg.build_potential()  # validate eagerly
    return cfg


def check_node_cap(cfg: RunConfig) -> None:
    total = cfg.nodes ** cfg.dimension
    if total > DENSE_CAP:
        raise ConfigError(f"{total} Nystrom nodes exceed the dense cap of {DENSE_CAP}",
                          cfg.lines.get("discretization.panels"), "discretization")
