"""Run configuration: a flat ``key = value`` text format with optional [section] headers.

Section headers only group keys for readability; every key name is unique
across sections.  ``#`` starts a comment.  Lists are comma separated.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError

SECTIONS = {
    "potential": ("potential", "delta_ch", "eps_w"),
    "grid": ("lx", "n", "nx", "ly", "ny"),
    "solver": ("el_tol", "pde_tol", "v_tol", "neumann_tol", "constraint_tol", "boundary_tol",
               "cluster_eps", "starts", "max_iter"),
    "run": ("c_rel", "seed", "out"),
}


@dataclass(frozen=True)
class RunConfig:
    potential: str = "channel"
    delta_ch: float = 0.9
    eps_w: float = 0.05
    lx: float = 20.0
    n: int = 2001
    nx: int = 401
    ly: float = 15.0
    ny: int = 301
    el_tol: float = 1e-8
    pde_tol: float = 1e-8
    # v_tol and constraint_tol are fractions of the action scale m_star - m
    v_tol: float = 1e-6
    neumann_tol: float = 1e-3
    constraint_tol: float = 1e-2
    boundary_tol: float = 1e-3
    cluster_eps: float = 0.2
    starts: int = 10
    max_iter: int = 200
    c_rel: tuple = (0.0, 0.5)
    seed: str = "strata"
    out: str = "out"

    def validate(self):
        if self.potential not in ("gl", "channel"):
            raise ConfigError(f"unknown potential '{self.potential}' (expected gl or channel)",
                              key="potential")
        for name in ("el_tol", "pde_tol", "v_tol", "neumann_tol", "constraint_tol",
                     "boundary_tol", "cluster_eps"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive", key=name)
        if self.n % 2 == 0 or self.n < 129:
            raise ConfigError("n must be odd and at least 129", key="n")
        if self.nx % 2 == 0 or self.nx < 129:
            raise ConfigError("nx must be odd and at least 129", key="nx")
        if self.ny < 65:
            raise ConfigError("ny must be at least 65", key="ny")
        if not (self.lx > 0 and self.ly > 0):
            raise ConfigError("lx and ly must be positive", key="lx" if self.lx <= 0 else "ly")
        if not self.delta_ch > 0:
            raise ConfigError("delta_ch must be positive", key="delta_ch")
        if self.eps_w < 0:
            raise ConfigError("eps_w must be nonnegative", key="eps_w")
        if self.starts < 8:
            raise ConfigError("starts must be at least 8", key="starts")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be positive", key="max_iter")
        if not self.c_rel:
            raise ConfigError("c_rel needs at least one value", key="c_rel")
        for t in self.c_rel:
            if not 0.0 <= t <= 1.0:
                raise ConfigError(f"c_rel value {t} outside [0, 1]", key="c_rel")
        return self

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw).validate()


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key, raw, line):
    kind = _TYPES[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "tuple":
            items = [s.strip() for s in raw.split(",") if s.strip()]
            return tuple(float(s) for s in items)
    except ValueError:
        raise ConfigError(f"malformed value '{raw}'", key=key, line=line) from None
    return raw


def parse_config(text):
    """Parse configuration text into a validated ``RunConfig``."""
    values = {}
    seen = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header '{line}'", line=lineno)
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section '{section}'", line=lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got '{line}'", line=lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError("unknown key", key=key, line=lineno)
        if section is not None and key not in SECTIONS[section]:
            raise ConfigError(f"key does not belong to section [{section}]", key=key, line=lineno)
        if key in seen:
            raise ConfigError(f"duplicate key (first set on line {seen[key]})", key=key, line=lineno)
        seen[key] = lineno
        values[key] = _convert(key, val, lineno)
    cfg = RunConfig(**values)
    try:
        return cfg.validate()
    except ConfigError as exc:
        if exc.key in seen:
            raise ConfigError(exc.message, key=exc.key, line=seen[exc.key]) from None
        raise


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _fmt(v):
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_config(cfg):
    lines = []
    for section, keys in SECTIONS.items():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {_fmt(getattr(cfg, k))}" for k in keys)
        lines.append("")
    return "\n".join(lines)
