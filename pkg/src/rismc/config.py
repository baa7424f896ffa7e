"""Experiment specification and the flat key = value config format.

A config file is UTF-8 text, one ``key = value`` pair per line; blank
lines and lines starting with ``#`` are ignored. Unknown keys are
rejected. Every key has a default, so an empty file is a valid spec (one
reflective power point at 50 dBm). The run manifest written next to the
results is itself a config file and reloads to the identical spec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .errors import ConfigError

MODES = ("reflective", "transmissive")
CHANNEL_MODELS = ("parametric", "geometric")
SWEEPS = ("power", "elements", "users")
BASELINES = ("proposed", "fixed_mc", "conventional")


def dbm_to_watts(dbm: float) -> float:
    """10^((dBm - 30)/10)."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved experiment: sweep definition plus every physical and
    solver parameter. Field names double as config-file keys."""

    mode: str = "reflective"
    channel_model: str = "parametric"
    baselines: tuple[str, ...] = ()          # empty = all applicable to mode
    sweep: str = "power"
    values: tuple[float, ...] = (50.0,)      # dBm for power, M for elements, K for users
    trials: int = 1
    seed: int = 0
    out: str = "results"

    N: int = 8
    M: int = 16
    K: int = 2
    P_dbm: float = 50.0
    noise_dbm: float = -100.0
    Q_br: int = 8
    Q_ru: int = 2
    d_ris: float = 500.0
    d_user_min: float = 10.0
    d_user_max: float = 50.0
    C0_db: float = -30.0
    d0: float = 1.0
    eta: float = 2.5
    eta_direct: float = 3.7
    num_bs: int = 4
    geo_elevation: float = 0.0

    train_samples: int = 10
    outer_iters: int = 50
    mu: float = 10.0
    redraw_per_iter: bool = True
    halve_on_increase: bool = False
    keep_best: bool = True
    val_samples: int = 16

    inner_iters: int = 200
    inner_tol: float = 1e-6
    phase_step: float = 0.1
    backtrack: float = 0.5

    eval_samples: int = 10
    workers: int = 1

    def resolved_baselines(self) -> tuple[str, ...]:
        if self.baselines:
            return self.baselines
        if self.mode == "transmissive":
            return ("proposed", "conventional")
        return BASELINES


_BOOL_WORDS = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_bool(key, text):
    try:
        return _BOOL_WORDS[text.strip().lower()]
    except KeyError:
        raise ConfigError(f"{key}: expected true/false, got {text!r}") from None


def _parse_value(key: str, text: str, kind):
    text = text.strip()
    try:
        if kind is bool:
            return _parse_bool(key, text)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        if kind is str:
            return text
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind.__name__}") from None
    if kind is tuple:
        return text
    raise ConfigError(f"{key}: unsupported value type")


def _split_list(text: str) -> list[str]:
    return [part.strip() for part in str(text).split(",") if part.strip()]


def parse_pairs(pairs: dict[str, str]) -> ExperimentSpec:
    """Build and validate a spec from raw string key/value pairs."""
    known = {f.name: f.type for f in fields(ExperimentSpec)}
    kinds = {
        f.name: type(getattr(ExperimentSpec(), f.name)) for f in fields(ExperimentSpec)
    }
    resolved = {}
    for key, text in pairs.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        kind = kinds[key]
        if key in ("values", "baselines"):
            resolved[key] = text  # handled below
        else:
            resolved[key] = _parse_value(key, str(text), kind)

    if "values" in resolved:
        try:
            resolved["values"] = tuple(float(v) for v in _split_list(resolved["values"]))
        except ValueError as exc:
            raise ConfigError(f"values: {exc}") from None
    if "baselines" in resolved:
        resolved["baselines"] = tuple(_split_list(resolved["baselines"]))

    spec = replace(ExperimentSpec(), **resolved)
    validate_spec(spec)
    return spec


def validate_spec(spec: ExperimentSpec) -> None:
    if spec.mode not in MODES:
        raise ConfigError(f"mode: must be one of {MODES}, got {spec.mode!r}")
    if spec.channel_model not in CHANNEL_MODELS:
        raise ConfigError(
            f"channel_model: must be one of {CHANNEL_MODELS}, got {spec.channel_model!r}"
        )
    if spec.sweep not in SWEEPS:
        raise ConfigError(f"sweep: must be one of {SWEEPS}, got {spec.sweep!r}")
    for b in spec.baselines:
        if b not in BASELINES:
            raise ConfigError(f"baselines: unknown baseline {b!r} (choose from {BASELINES})")
    if spec.mode == "transmissive" and "fixed_mc" in spec.baselines:
        raise ConfigError(
            "baselines: fixed_mc is a reflective-only benchmark "
            "(the transmissive model has no port-side coupling)"
        )
    if not spec.values:
        raise ConfigError("values: list must be non-empty")
    if spec.trials < 1:
        raise ConfigError("trials: must be >= 1")
    if spec.seed < 0:
        raise ConfigError("seed: must be non-negative")

    def require_square(m, label):
        m = int(m)
        r = math.isqrt(m)
        if r * r != m:
            raise ConfigError(f"{label}: RIS element count must be a perfect square, got {m}")

    require_square(spec.M, "M")
    if spec.K > spec.N:
        raise ConfigError(f"K: user count {spec.K} must not exceed N={spec.N}")
    if spec.M < spec.K:
        raise ConfigError(f"M: element count {spec.M} must be at least K={spec.K}")
    if spec.sweep == "elements":
        for v in spec.values:
            if v != int(v):
                raise ConfigError(f"values: element counts must be integers, got {v}")
            require_square(int(v), "values")
            if int(v) < spec.K:
                raise ConfigError(f"values: element count {int(v)} below user count K={spec.K}")
    if spec.sweep == "users":
        for v in spec.values:
            if v != int(v) or int(v) < 1:
                raise ConfigError(f"values: user counts must be positive integers, got {v}")
            if int(v) > spec.N:
                raise ConfigError(f"values: user count {int(v)} exceeds N={spec.N}")
            if int(v) > spec.M:
                raise ConfigError(f"values: user count {int(v)} exceeds M={spec.M}")

    for name in ("d_ris", "d0", "d_user_min", "d_user_max"):
        if getattr(spec, name) <= 0:
            raise ConfigError(f"{name}: must be strictly positive")
    if spec.d_user_min > spec.d_user_max:
        raise ConfigError("d_user_min: must not exceed d_user_max")
    if spec.Q_br < 1 or spec.Q_ru < 1:
        raise ConfigError("Q_br/Q_ru: path counts must be >= 1")
    if spec.num_bs < 1:
        raise ConfigError("num_bs: must be >= 1")
    if spec.channel_model == "geometric" and spec.N % spec.num_bs != 0:
        raise ConfigError(f"num_bs: N={spec.N} must be divisible by num_bs={spec.num_bs}")
    if spec.train_samples < 1 or spec.eval_samples < 1 or spec.val_samples < 1:
        raise ConfigError("train_samples/eval_samples/val_samples: must be >= 1")
    if spec.outer_iters < 1:
        raise ConfigError("outer_iters: must be >= 1")
    if spec.mu < 0:
        raise ConfigError("mu: must be non-negative")
    if spec.inner_iters < 1:
        raise ConfigError("inner_iters: must be >= 1")
    if spec.inner_tol <= 0 or spec.phase_step <= 0:
        raise ConfigError("inner_tol/phase_step: must be positive")
    if not 0 < spec.backtrack < 1:
        raise ConfigError("backtrack: must lie in (0, 1)")
    if spec.workers < 1:
        raise ConfigError("workers: must be >= 1")


def load_config(path) -> ExperimentSpec:
    """Parse a config file into a validated spec; errors carry line numbers."""
    pairs = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key in pairs:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            pairs[key] = value.strip()
    try:
        return parse_pairs(pairs)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def spec_to_pairs(spec: ExperimentSpec) -> dict[str, str]:
    """Serialize a spec back to config-file pairs (loadable by load_config)."""
    out = {}
    for f in fields(ExperimentSpec):
        val = getattr(spec, f.name)
        if f.name in ("values", "baselines"):
            out[f.name] = ",".join(_format_number(v) if f.name == "values" else str(v) for v in val)
        elif isinstance(val, bool):
            out[f.name] = "true" if val else "false"
        elif isinstance(val, float):
            out[f.name] = _format_number(val)
        else:
            out[f.name] = str(val)
    if not spec.baselines:
        out["baselines"] = ",".join(spec.resolved_baselines())
    return out


def _format_number(x: float) -> str:
    return f"{x:.17g}"
