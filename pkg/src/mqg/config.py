"""Flat ``key = value`` run configuration."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path

from .ensemble import random_field, single_mode, two_mode
from .grid import GridSpec, SpectralField, forward_transform
from .io import read_field_csv, read_snapshot
from .solver import SolverConfig
from .spectral import Variant

BUILTIN_INITIAL = ("single_mode", "two_mode", "random_h1")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.key = key


@dataclass(frozen=True)
class RunConfig:
    n: int = 128
    domain_length: float = 2 * math.pi
    alpha: float = 0.5
    variant: str = "MQG"
    dt: float = 1e-3
    t_end: float = 0.5
    dealias: bool = True
    snapshot_every: int = 10
    seed: int = 0
    initial: str = "random_h1"

    def grid(self) -> GridSpec:
        return GridSpec(self.n, self.domain_length)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            alpha=self.alpha,
            dt=self.dt,
            t_end=self.t_end,
            variant=Variant(self.variant),
            dealias_on=self.dealias,
            snapshot_every=self.snapshot_every,
        )

    def echo(self) -> dict:
        return asdict(self)


def _parse_bool(v: str) -> bool:
    low = v.lower()
    if low in ("on", "true", "yes", "1"):
        return True
    if low in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {v!r}")


_PARSERS = {
    "n": int,
    "domain_length": float,
    "alpha": float,
    "variant": lambda v: Variant(v.upper()).value,
    "dt": float,
    "t_end": float,
    "dealias": _parse_bool,
    "snapshot_every": int,
    "seed": int,
    "initial": str,
}


def _check_ranges(cfg: RunConfig, lines: dict[str, int]):
    def fail(key, msg):
        raise ConfigError(msg, lines.get(key), key)

    if cfg.n < 8 or cfg.n & (cfg.n - 1):
        fail("n", f"must be a power of two >= 8, got {cfg.n}")
    if not cfg.domain_length > 0:
        fail("domain_length", "must be positive")
    if not 0 < cfg.alpha <= 1:
        fail("alpha", f"must lie in (0, 1], got {cfg.alpha}")
    if not cfg.dt > 0:
        fail("dt", "must be positive")
    if not cfg.t_end > cfg.dt:
        fail("t_end", "must exceed dt")
    m = round(cfg.t_end / cfg.dt)
    if abs(m * cfg.dt - cfg.t_end) > 1e-9 * cfg.t_end:
        fail("t_end", "must be an integer multiple of dt")
    if cfg.snapshot_every < 1:
        fail("snapshot_every", "must be >= 1")


def parse_config(text: str) -> RunConfig:
    """Parse config text; unknown keys and bad values raise ConfigError."""
    values: dict = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError("unknown key", lineno, key)
        if key in values:
            raise ConfigError("duplicate key", lineno, key)
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(str(exc), lineno, key) from None
        lines[key] = lineno
    cfg = RunConfig(**values)
    _check_ranges(cfg, lines)
    return cfg


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def format_config(cfg: RunConfig) -> str:
    out = []
    for k, v in cfg.echo().items():
        if isinstance(v, bool):
            v = "on" if v else "off"
        out.append(f"{k} = {v!r}" if isinstance(v, float) else f"{k} = {v}")
    return "\n".join(out) + "\n"


def initial_field(cfg: RunConfig, base_dir=None) -> SpectralField:
    """Build the initial data named by ``cfg.initial``: builtin or file path."""
    g = cfg.grid()
    name = cfg.initial
    if name == "single_mode":
        return forward_transform(single_mode(g))
    if name == "two_mode":
        return forward_transform(two_mode(g))
    if name == "random_h1":
        return random_field(g, cfg.seed, decay=3.0, h1_norm=1.0)
    path = Path(name)
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    if not path.exists():
        raise ConfigError(f"not a builtin ({', '.join(BUILTIN_INITIAL)}) or existing file", key="initial")
    field = read_field_csv(path, cfg.domain_length) if path.suffix == ".csv" else read_snapshot(path)
    if field.grid != g:
        raise ConfigError(f"file holds {field.grid}, config describes {g}", key="initial")
    F = forward_transform(field)
    c = F.coefficients.copy()
    c[0, 0] = 0.0  # solver runs in the mean-zero subspace
    return F.with_coefficients(c)
