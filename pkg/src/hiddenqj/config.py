"""Run configuration files.

The format is INI with three sections. Every key is optional; missing keys
take the defaults shown here::

    [model]
    omega0 = 1.0
    beta_x_hot = 1.0
    beta_x_cold = 2.0
    beta_y_hot = 0.5
    beta_y_cold = 4.0
    gamma_x = 0.0
    gamma_y = 0.0
    lam = 0.0
    bath_rates = 1.0, 1.0, 1.0, 1.0
    drive = false
    drive_strength = 1.0

    [run]
    horizon = 3.0
    n_trajectories = 1000
    seed = 0
    threads = 1            # or "auto"
    output_dir = out
    grid_dt = 0.01
    all_visible = false
    hist_min = -12.0
    hist_max = 12.0
    hist_width = 0.25

    [sweep]                # only needed by the sweep command
    gamma_x = 0.0, 0.5, 1.0
    gamma_y = 0.0, 0.5, 1.0
    diagonal = false

Lists are comma separated. In a diagonal sweep ``gamma_y`` may be omitted
and then equals ``gamma_x``. Unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError
from .model import DemonParams

__all__ = ["SweepSpec", "RunConfig", "parse_config", "load_config", "serialize_config", "with_overrides"]

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class SweepSpec:
    gamma_x: tuple[float, ...]
    gamma_y: tuple[float, ...]
    diagonal: bool = False


@dataclass(frozen=True)
class RunConfig:
    model: DemonParams = field(default_factory=DemonParams)
    horizon: float = 3.0
    n_trajectories: int = 1000
    seed: int = 0
    threads: int | str = 1
    output_dir: str = "out"
    grid_dt: float = 0.01
    all_visible: bool = False
    hist_min: float = -12.0
    hist_max: float = 12.0
    hist_width: float = 0.25
    sweep: SweepSpec | None = None

    def __post_init__(self):
        if not self.horizon > 0:
            raise ConfigError("horizon must be positive", key="run.horizon")
        if self.n_trajectories < 1:
            raise ConfigError("n_trajectories must be at least 1", key="run.n_trajectories")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer", key="run.seed")
        if self.threads != "auto" and not (isinstance(self.threads, int) and self.threads >= 1):
            raise ConfigError("threads must be a positive integer or 'auto'", key="run.threads")
        if not self.grid_dt > 0:
            raise ConfigError("grid_dt must be positive", key="run.grid_dt")
        if not self.hist_width > 0:
            raise ConfigError("hist_width must be positive", key="run.hist_width")
        if not self.hist_min < self.hist_max:
            raise ConfigError("hist_min must be below hist_max", key="run.hist_max")
        if self.sweep is not None:
            for name in ("gamma_x", "gamma_y"):
                vals = getattr(self.sweep, name)
                if not vals:
                    raise ConfigError("sweep grid is empty", key=f"sweep.{name}")
                if any(not 0.0 <= g <= 1.0 for g in vals):
                    raise ConfigError("sweep values must lie in [0, 1]", key=f"sweep.{name}")
            if self.sweep.diagonal and len(self.sweep.gamma_x) != len(self.sweep.gamma_y):
                raise ConfigError("diagonal sweep needs lists of equal length", key="sweep.gamma_y")

    @property
    def workers(self) -> int:
        if self.threads == "auto":
            return os.cpu_count() or 1
        return int(self.threads)


_MODEL_KEYS = {f.name: f.type for f in fields(DemonParams)}
_RUN_KEYS = ("horizon", "n_trajectories", "seed", "threads", "output_dir", "grid_dt",
             "all_visible", "hist_min", "hist_max", "hist_width")


def _as_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}", key=key) from None


def _as_int(raw: str, key: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}", key=key) from None


def _as_bool(raw: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise ConfigError(f"{key}: expected true or false, got {raw!r}", key=key)


def _as_list(raw: str, key: str) -> tuple[float, ...]:
    items = [s for s in (x.strip() for x in raw.split(",")) if s]
    return tuple(_as_float(s, key) for s in items)


def _parse_model(sec) -> DemonParams:
    kw = {}
    for key, raw in sec.items():
        full = f"model.{key}"
        if key not in _MODEL_KEYS:
            raise ConfigError(f"unknown key {full}", key=full)
        if key == "bath_rates":
            kw[key] = _as_list(raw, full)
            if len(kw[key]) != 4:
                raise ConfigError(f"{full}: expected four rates", key=full)
        elif key == "drive":
            kw[key] = _as_bool(raw, full)
        else:
            kw[key] = _as_float(raw, full)
    try:
        return DemonParams(**kw)
    except ValueError as exc:
        msg = str(exc)
        key = next((k for k in _MODEL_KEYS if msg.startswith(k) or f" {k} " in f" {msg} "), None)
        raise ConfigError(f"model.{key}: {msg}" if key else msg,
                          key=f"model.{key}" if key else None) from None


def _parse_run(sec) -> dict:
    kw = {}
    for key, raw in sec.items():
        full = f"run.{key}"
        if key not in _RUN_KEYS:
            raise ConfigError(f"unknown key {full}", key=full)
        if key in ("n_trajectories", "seed"):
            kw[key] = _as_int(raw, full)
        elif key == "threads":
            kw[key] = "auto" if raw.strip().lower() == "auto" else _as_int(raw, full)
        elif key == "output_dir":
            kw[key] = raw.strip()
        elif key == "all_visible":
            kw[key] = _as_bool(raw, full)
        else:
            kw[key] = _as_float(raw, full)
    return kw


def _parse_sweep(sec) -> SweepSpec:
    for key in sec:
        if key not in ("gamma_x", "gamma_y", "diagonal"):
            raise ConfigError(f"unknown key sweep.{key}", key=f"sweep.{key}")
    if "gamma_x" not in sec:
        raise ConfigError("sweep.gamma_x is required", key="sweep.gamma_x")
    diagonal = _as_bool(sec["diagonal"], "sweep.diagonal") if "diagonal" in sec else False
    gx = _as_list(sec["gamma_x"], "sweep.gamma_x")
    if "gamma_y" in sec:
        gy = _as_list(sec["gamma_y"], "sweep.gamma_y")
    elif diagonal:
        gy = gx
    else:
        raise ConfigError("sweep.gamma_y is required unless diagonal = true", key="sweep.gamma_y")
    return SweepSpec(gx, gy, diagonal)


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; raises :class:`ConfigError` naming the bad key."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    for name in cp.sections():
        if name not in ("model", "run", "sweep"):
            raise ConfigError(f"unknown section [{name}]", key=name)
    model = _parse_model(cp["model"]) if cp.has_section("model") else DemonParams()
    run = _parse_run(cp["run"]) if cp.has_section("run") else {}
    sweep = _parse_sweep(cp["sweep"]) if cp.has_section("sweep") else None
    return RunConfig(model=model, sweep=sweep, **run)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, tuple):
        return ", ".join(repr(float(v)) for v in x)
    return str(x)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; ``parse_config(serialize_config(c)) == c``."""
    lines = ["[model]"]
    lines += [f"{f.name} = {_fmt(getattr(cfg.model, f.name))}" for f in fields(DemonParams)]
    lines += ["", "[run]"]
    lines += [f"{key} = {_fmt(getattr(cfg, key))}" for key in _RUN_KEYS]
    if cfg.sweep is not None:
        lines += ["", "[sweep]",
                  f"gamma_x = {_fmt(cfg.sweep.gamma_x)}",
                  f"gamma_y = {_fmt(cfg.sweep.gamma_y)}",
                  f"diagonal = {_fmt(cfg.sweep.diagonal)}"]
    return "\n".join(lines) + "\n"


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    """Copy of ``cfg`` with the non-``None`` keyword values replaced."""
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
