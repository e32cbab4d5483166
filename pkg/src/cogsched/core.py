"""Shared domain types, scenario configuration and static validation.

Units follow a normalized convention: one subcarrier carries
``log2(1 + SINR)`` rate units per slot, and one packet equals one rate unit.
All C/I values are linear (not dB).
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np

SCHEMA = "cogsched-scenario-v1"

# per-SU and per-PU vector fields; scalars given for these are broadcast
SU_FIELDS = ("theta", "phi", "lambda_o", "lambda_p", "rho")
PU_FIELDS = ("lambda_pu",)

MODES = ("coca", "coca-e")
STEP_RULES = ("adaptive", "constant")
PU_POLICIES = ("fixed", "random")


class ConfigError(ValueError):
    """Raised for malformed scenario documents or overrides."""


def _freeze(*arrays: np.ndarray) -> None:
    for arr in arrays:
        arr.setflags(write=False)


@dataclass(frozen=True)
class ScenarioConfig:
    """All static parameters of one scenario.

    Per-SU fields (``theta``, ``phi``, ``lambda_o``, ``lambda_p``, ``rho``) are
    tuples of length ``num_sus``; ``lambda_pu`` has length ``num_pus``. A scalar
    passed for any of them is broadcast.
    """

    num_subcarriers: int = 64
    num_sus: int = 8
    num_pus: int = 1
    slot_count: int = 4500

    p_max: float = 1.0
    p_avg: float = 0.8
    v: float = 50.0

    theta: tuple = 1.0  # private-data weight
    phi: tuple = 0.8  # open-data weight
    lambda_o: tuple = 0.0
    lambda_p: tuple = 0.0
    mu_max: float = 50.0  # open arrival bound
    d_max: float = 20.0  # private arrival bound
    lambda_pu: tuple = 140.0
    d_max_pu: float = 200.0
    q_max_o: float = 200.0
    q_max_p: float = 1000.0
    rho: tuple = 60.0  # delay bound, slots

    # channel model (linear C/I means before shadowing)
    su_mean_ci: float = 1000.0
    pu_mean_ci: float = 60.0
    shadowing_std_db: float = 10.0
    cross_pu_mean: float = 0.35  # CBS -> PU cross link
    cross_su_mean: float = 21.0  # PBS -> SU cross link
    cross_std_db: float = 0.0
    pbs_power: float = 1.0  # PBS power per occupied subcarrier
    pu_policy: str = "fixed"
    pu_subcarriers: int = 32  # per PU, fixed policy
    pu_fraction: float = 0.5  # random policy

    # dual solver
    step: float = 0.01
    step_rule: str = "adaptive"
    delta_tol: float = 1e-3
    delta_init: float = 0.0
    max_iter: int = 500
    grid_points: int = 256

    iota: float = 0.01
    mode: str = "coca"
    rng_seed: int = 0

    def __post_init__(self) -> None:
        for name in SU_FIELDS:
            object.__setattr__(self, name, _as_tuple(getattr(self, name), self.num_sus))
        for name in PU_FIELDS:
            object.__setattr__(self, name, _as_tuple(getattr(self, name), self.num_pus))

    def vec(self, name: str) -> np.ndarray:
        """Return a per-user field as a float array."""
        return np.asarray(getattr(self, name), dtype=float)

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {"schema": SCHEMA}
        for f in dataclasses.fields(self):
            val = getattr(self, f.name)
            out[f.name] = list(val) if isinstance(val, tuple) else val
        return out


def _as_tuple(value: Any, n: int) -> tuple:
    if np.isscalar(value):
        return tuple(float(value) for _ in range(n))
    return tuple(float(x) for x in value)


FIELD_NAMES = {f.name for f in dataclasses.fields(ScenarioConfig)}
_FIELD_TYPES = {f.name: f.default for f in dataclasses.fields(ScenarioConfig)}


@dataclass(frozen=True)
class ChannelState:
    """Per-slot channel realization.

    ``owner[m]`` is the PU occupying subcarrier ``m`` (``-1`` when free) and
    ``pu_power[k, m]`` the PBS power towards PU ``k`` (zero off its set).
    ``b``/``b_np`` belong to the strongest other SU on each subcarrier.
    """

    a: np.ndarray
    A: np.ndarray
    a_ks: np.ndarray
    a_np: np.ndarray
    b: np.ndarray
    b_np: np.ndarray
    owner: np.ndarray
    pu_power: np.ndarray

    def __post_init__(self) -> None:
        _freeze(self.a, self.A, self.a_ks, self.a_np, self.b, self.b_np, self.owner, self.pu_power)

    @property
    def num_sus(self) -> int:
        return self.a.shape[0]

    @property
    def num_subcarriers(self) -> int:
        return self.a.shape[1]

    @property
    def num_pus(self) -> int:
        return self.A.shape[0]

    @property
    def occupied(self) -> np.ndarray:
        return self.owner >= 0

    @property
    def pu_occupied(self) -> list[set[int]]:
        return [set(np.flatnonzero(self.owner == k).tolist()) for k in range(self.num_pus)]

    def interference_power(self) -> np.ndarray:
        """PBS power on each subcarrier, shape ``(M,)``."""
        m = np.arange(self.num_subcarriers)
        k = np.where(self.owner >= 0, self.owner, 0)
        return np.where(self.owner >= 0, self.pu_power[k, m], 0.0)


@dataclass(frozen=True)
class QueueState:
    Q_pu: np.ndarray
    Q_o: np.ndarray
    Q_p: np.ndarray
    X_o: np.ndarray
    X_p: np.ndarray
    Y: float
    Z: np.ndarray

    def __post_init__(self) -> None:
        _freeze(self.Q_pu, self.Q_o, self.Q_p, self.X_o, self.X_p, self.Z)

    @classmethod
    def zeros(cls, num_sus: int, num_pus: int) -> "QueueState":
        z = lambda n: np.zeros(n)  # noqa: E731
        return cls(z(num_pus), z(num_sus), z(num_sus), z(num_sus), z(num_sus), 0.0, z(num_sus))

    @classmethod
    def build(cls, num_sus: int, num_pus: int, **values: Any) -> "QueueState":
        """Zero state with selected entries overridden (scalars broadcast)."""
        base = cls.zeros(num_sus, num_pus)
        kw = {}
        for f in dataclasses.fields(cls):
            cur = getattr(base, f.name)
            if f.name in values:
                val = values[f.name]
                kw[f.name] = float(val) if f.name == "Y" else np.broadcast_to(
                    np.asarray(val, dtype=float), np.shape(cur)).copy()
            else:
                kw[f.name] = cur if f.name == "Y" else cur.copy()
        return cls(**kw)


@dataclass(frozen=True)
class ControlAction:
    p: np.ndarray  # (N, M) watts
    w: np.ndarray  # (N, M) 0/1
    zeta: np.ndarray  # (N,)
    T_o: np.ndarray
    T_p: np.ndarray
    mu_o: np.ndarray
    mu_p: np.ndarray

    def __post_init__(self) -> None:
        _freeze(self.p, self.w, self.zeta, self.T_o, self.T_p, self.mu_o, self.mu_p)

    @classmethod
    def idle(cls, num_sus: int, num_subcarriers: int) -> "ControlAction":
        n, m = num_sus, num_subcarriers
        return cls(np.zeros((n, m)), np.zeros((n, m), dtype=int), np.zeros(n, dtype=int),
                   np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n))


def check_action(action: ControlAction, p_max: float) -> list[str]:
    """List violations of the assignment and peak-power constraints."""
    problems = []
    if np.any(action.w.sum(axis=0) > 1):
        problems.append("subcarrier assigned to more than one SU")
    if np.any(action.p < 0):
        problems.append("negative power")
    if np.any((action.p > 0) & (action.w == 0)):
        problems.append("power on an unassigned (n, m) pair")
    if action.p.sum() > p_max:
        problems.append(f"total power {action.p.sum():.12g} exceeds P_max={p_max}")
    return problems


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def __bool__(self) -> bool:
        return self.ok


def validate_config(cfg: ScenarioConfig) -> ValidationReport:
    """Check the static invariants of a scenario; never raises."""
    rep = ValidationReport()
    err = rep.errors.append

    for name in ("num_subcarriers", "num_sus", "num_pus", "grid_points", "max_iter"):
        if getattr(cfg, name) < 1:
            err(f"{name} must be a positive integer")
    if cfg.slot_count < 0:
        err("slot_count must be nonnegative")
    if cfg.p_max <= 0:
        err("P_max must be positive")
    if cfg.p_avg < 0 or cfg.p_avg > cfg.p_max:
        err("P_avg must satisfy 0 <= P_avg <= P_max")
    if cfg.v < 0:
        err("V must be nonnegative")

    for name in SU_FIELDS:
        vals = getattr(cfg, name)
        if len(vals) != cfg.num_sus:
            err(f"{name} has {len(vals)} entries, expected num_sus={cfg.num_sus}")
        if any(x < 0 for x in vals):
            err(f"{name} entries must be nonnegative")
    if len(cfg.lambda_pu) != cfg.num_pus:
        err(f"lambda_pu has {len(cfg.lambda_pu)} entries, expected num_pus={cfg.num_pus}")
    for name in ("mu_max", "d_max", "d_max_pu", "q_max_o", "q_max_p", "iota", "step",
                 "delta_tol", "delta_init", "pbs_power", "shadowing_std_db", "cross_std_db"):
        if getattr(cfg, name) < 0:
            err(f"{name} must be nonnegative")
    for name in ("su_mean_ci", "pu_mean_ci", "cross_pu_mean", "cross_su_mean"):
        if getattr(cfg, name) <= 0:
            err(f"{name} must be positive")

    if cfg.q_max_o <= cfg.mu_max:
        err("q_max^o must exceed mu_max")
    if cfg.q_max_p < cfg.d_max:
        err("q_max^p must be at least D_max")
    if any(x > cfg.mu_max for x in cfg.lambda_o):
        err("lambda_o must not exceed mu_max")
    if any(x > cfg.d_max for x in cfg.lambda_p):
        err("lambda_p must not exceed D_max")
    if any(x > cfg.d_max_pu for x in cfg.lambda_pu):
        err("lambda_pu must not exceed D_max^PU")

    if cfg.mode not in MODES:
        err(f"mode must be one of {MODES}")
    if cfg.step_rule not in STEP_RULES:
        err(f"step_rule must be one of {STEP_RULES}")
    if cfg.pu_policy not in PU_POLICIES:
        err(f"pu_policy must be one of {PU_POLICIES}")
    elif cfg.pu_policy == "fixed" and cfg.num_pus * cfg.pu_subcarriers > cfg.num_subcarriers:
        err("fixed PU occupancy over-subscribes the subcarriers")
    if not 0 <= cfg.pu_fraction <= 1:
        err("pu_fraction must lie in [0, 1]")

    # Performance-bound threshold: need q_max^o - mu_max > (C^2 + mu^2) / (2 eps).
    # Report the smallest eps admitted by the buffer sizes under a crude rate cap.
    if cfg.q_max_o > cfg.mu_max and cfg.su_mean_ci > 0:
        c_cap = cfg.num_subcarriers * np.log2(1 + cfg.p_max * cfg.su_mean_ci)
        eps_o = (c_cap**2 + cfg.mu_max**2) / (2 * (cfg.q_max_o - cfg.mu_max))
        if eps_o > max(cfg.lambda_o, default=0.0):
            rep.warnings.append(
                f"open-buffer threshold needs eps > {eps_o:.3g} under the rate cap {c_cap:.3g}; "
                "performance bound is not guaranteed (queue bound still holds)")
    return rep


# ---------------------------------------------------------------------------
# scenario documents: one ``key = <json value>`` pair per line, '#' comments


def _parse_value(text: str) -> Any:
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        lowered = text.lower()
        if lowered in ("true", "false"):
            return lowered == "true"
        if text.startswith("[") or text.startswith("{"):
            raise ConfigError(f"cannot parse value {text!r}") from None
        return text.strip("'\"")


def _coerce(name: str, value: Any) -> Any:
    default = _FIELD_TYPES[name]
    if name in SU_FIELDS or name in PU_FIELDS:
        if isinstance(value, (list, tuple)):
            return tuple(float(x) for x in value)
        return float(value)
    if isinstance(default, bool):
        return bool(value)
    if isinstance(default, int):
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{name} must be an integer, got {value}")
        return int(value)
    if isinstance(default, float):
        return float(value)
    return str(value)


def _resolve_key(key: str) -> tuple[str, int | None]:
    k = key.strip().lower()
    if k in FIELD_NAMES:
        return k, None
    m = re.fullmatch(r"(.+)_(\d+)", k)
    if m and m.group(1) in SU_FIELDS + PU_FIELDS:
        idx = int(m.group(2))
        if idx < 1:
            raise ConfigError(f"user index in {key!r} is 1-based")
        return m.group(1), idx - 1
    raise ConfigError(f"unknown key {key!r}")


def config_from_mapping(values: Mapping[str, Any], base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Build a config from a flat mapping; unknown keys raise ``ConfigError``."""
    values = dict(values)
    schema = values.pop("schema", SCHEMA)
    if schema != SCHEMA:
        raise ConfigError(f"unsupported schema {schema!r}, expected {SCHEMA!r}")
    cfg = base or ScenarioConfig()
    whole: dict[str, Any] = {}
    indexed: list[tuple[str, int, Any]] = []
    for key, val in values.items():
        name, idx = _resolve_key(key)
        if idx is None:
            whole[name] = _coerce(name, val)
        else:
            indexed.append((name, idx, val))
    # resizing N or K without new vectors broadcasts the first entry
    for size_key, names in (("num_sus", SU_FIELDS), ("num_pus", PU_FIELDS)):
        if size_key in whole:
            for name in names:
                if name not in whole and len(getattr(cfg, name)) != whole[size_key]:
                    cur = getattr(cfg, name)
                    whole[name] = cur[0] if cur else 0.0
    cfg = dataclasses.replace(cfg, **whole)
    for name, idx, val in indexed:
        vec = list(getattr(cfg, name))
        if idx >= len(vec):
            raise ConfigError(f"{name}_{idx + 1} is out of range (length {len(vec)})")
        vec[idx] = float(val)
        cfg = dataclasses.replace(cfg, **{name: tuple(vec)})
    return cfg


def parse_config_text(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    values: dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = line.split("=", 1)
        key = key.strip()
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(val)
    if values.get("schema") != SCHEMA:
        raise ConfigError(f"missing or wrong schema line (expected schema = \"{SCHEMA}\")")
    return config_from_mapping(values, base)


def load_config(path: str | Path) -> ScenarioConfig:
    return parse_config_text(Path(path).read_text())


def format_config(cfg: ScenarioConfig) -> str:
    lines = [f"{k} = {json.dumps(v)}" for k, v in cfg.to_dict().items()]
    return "\n".join(lines) + "\n"


def dump_config(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(format_config(cfg))


def apply_overrides(cfg: ScenarioConfig, overrides: Iterable[str]) -> ScenarioConfig:
    """Apply ``key=value`` strings on top of ``cfg``."""
    values = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, val = item.split("=", 1)
        values[key.strip()] = _parse_value(val)
    return config_from_mapping(values, cfg)
