"""Closed-loop slotted simulation of the cognitive base station."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelModelParams, OccupancyPolicy, pu_occupancy, sample_channel
from .core import ChannelState, ControlAction, QueueState, ScenarioConfig, check_action
from .estimator import EstimatorState, update_estimate
from .flow_control import actual_admission, virtual_admission
from .queueing import (Arrivals, RunningAverages, SlotSample, sample_arrivals, update_averages,
                       update_queues, write_long_csv)
from .rates import RateOutcome, slot_rates
from .resource_alloc import Allocation, solve_allocation


@dataclass(frozen=True)
class SimState:
    slot: int
    queues: QueueState
    estimator: EstimatorState
    averages: RunningAverages
    delta: float = 0.0  # last peak-power multiplier, reused as a warm start

    @classmethod
    def initial(cls, cfg: ScenarioConfig) -> "SimState":
        return cls(0, QueueState.zeros(cfg.num_sus, cfg.num_pus),
                   EstimatorState.initial(cfg.num_pus, cfg.iota),
                   RunningAverages.empty(cfg.num_sus, cfg.num_pus))


@dataclass(frozen=True)
class SlotMetrics:
    slot: int
    channel: ChannelState
    arrivals: Arrivals
    action: ControlAction
    allocation: Allocation
    rates: RateOutcome
    violations: tuple


def hard_violations(q: QueueState, action: ControlAction, cfg: ScenarioConfig) -> list[str]:
    """Buffer caps on the actual queues and feasibility of the action."""
    out = check_action(action, cfg.p_max)
    if np.any(q.Q_o > cfg.q_max_o):
        out.append(f"open backlog {q.Q_o.max():.6g} exceeds q_max^o={cfg.q_max_o}")
    if np.any(q.Q_p > cfg.q_max_p):
        out.append(f"private backlog {q.Q_p.max():.6g} exceeds q_max^p={cfg.q_max_p}")
    return out


def run_slot(state: SimState, cfg: ScenarioConfig, channel_params: ChannelModelParams | None = None,
             policy: OccupancyPolicy | None = None) -> tuple[SimState, SlotMetrics]:
    """Advance one slot: observe, admit, allocate, transmit, update."""
    if channel_params is None:
        channel_params = ChannelModelParams.from_config(cfg)
    if policy is None:
        policy = OccupancyPolicy.from_config(cfg)
    t, q = state.slot, state.queues
    owner, pu_power = pu_occupancy(policy, t, q.Q_pu, cfg.num_subcarriers, seed=cfg.rng_seed)
    channel = sample_channel(channel_params, t, seed=cfg.rng_seed, owner=owner, pu_power=pu_power)
    arr = sample_arrivals(cfg, t)

    T_o, T_p = actual_admission(q.Q_o, q.Q_p, arr.D_o, arr.D_p, cfg)
    mu_o, mu_p = virtual_admission(q.X_o, q.X_p, q.Z, arr.D_o, arr.D_p, cfg)
    pu_w = state.estimator.Qhat if cfg.mode == "coca-e" else q.Q_pu
    alloc = solve_allocation(channel, q, cfg, pu_weights=pu_w, delta_init=max(state.delta, cfg.delta_init))
    action = ControlAction(alloc.p, alloc.w, alloc.zeta, T_o, T_p, mu_o, mu_p)
    rates = slot_rates(channel, action)
    nq = update_queues(q, action, rates, arr, cfg)
    est = update_estimate(state.estimator, rates.R_pu, nq.Q_pu == 0, cfg.vec("lambda_pu"))
    avg = update_averages(state.averages, SlotSample(T_o, T_p, rates.R_o, rates.R_p, mu_o, mu_p,
                                                     rates.E, rates.R_pu, q.Q_o))
    viol = tuple(hard_violations(nq, action, cfg))
    return SimState(t + 1, nq, est, avg, alloc.delta), SlotMetrics(t, channel, arr, action, alloc, rates, viol)


# per-slot series recorded by run_scenario: name -> (width key, dtype)
_SERIES = {
    "Q_o": "su", "Q_p": "su", "X_o": "su", "X_p": "su", "Z": "su", "Y": None,
    "Q_pu": "pu", "Qhat": "pu",
    "T_o": "su", "T_p": "su", "mu_o": "su", "mu_p": "su",
    "R_o": "su", "R_p": "su", "R_pu": "pu", "E": None, "zeta": "su",
    "delta": None, "iterations": None, "objective": None, "utility": None,
}
QUEUE_SERIES = ("Q_o", "Q_p", "X_o", "X_p", "Z", "Y", "Q_pu", "Qhat")
RATE_SERIES = ("T_o", "T_p", "mu_o", "mu_p", "R_o", "R_p", "R_pu", "E", "zeta", "delta",
               "iterations", "utility")


@dataclass
class RunMetrics:
    """Everything recorded over one run; queue series hold end-of-slot values."""

    cfg: ScenarioConfig
    series: dict
    averages: RunningAverages
    violations: list = field(default_factory=list)  # (slot, message)
    unconverged_slots: list = field(default_factory=list)
    final_state: SimState | None = None

    @property
    def slot_count(self) -> int:
        return len(self.series["E"])

    def tail(self, name: str, fraction: float = 0.5) -> np.ndarray:
        s = self.series[name]
        return s[int(len(s) * (1 - fraction)):]

    def tail_mean(self, name: str, fraction: float = 0.5) -> np.ndarray:
        return self.tail(name, fraction).mean(axis=0)

    def converged_averages(self, fraction: float = 0.5) -> dict:
        """Means over the last ``fraction`` of slots."""
        out = {k: self.tail_mean(k, fraction) for k in ("T_o", "T_p", "R_o", "R_p", "R_pu", "E")}
        with np.errstate(divide="ignore", invalid="ignore"):
            t_o = out["T_o"]
            q = self.tail_mean("Q_o_start", fraction)
            out["delay_o"] = np.where(t_o > 0, q / np.where(t_o > 0, t_o, 1.0), np.nan)
        return out

    def summary(self) -> dict:
        avg = self.averages
        s = self.series
        n = self.slot_count

        def lst(x):
            return np.asarray(x, dtype=float).tolist()

        out = {
            "slots": n, "mode": self.cfg.mode, "seed": self.cfg.rng_seed, "V": self.cfg.v,
            "averages": {"t_o": lst(avg.t_o), "t_p": lst(avg.t_p), "r_o": lst(avg.r_o),
                         "r_p": lst(avg.r_p), "e": avg.e, "r_pu": lst(avg.r_pu),
                         "delay_o": [None if np.isnan(x) else x for x in lst(avg.delay_o)]},
            "violations": [{"slot": t, "message": m} for t, m in self.violations],
            "unconverged_slots": len(self.unconverged_slots),
        }
        if n:
            r0_max = float(s["R_pu"].max()) if s["R_pu"].size else 0.0
            c_o, c_p = float(s["R_o"].max()), float(s["R_p"].max())
            B = drift_bound_B(self.cfg, r0_max)
            out["max"] = {"Q_o": float(s["Q_o"].max()), "Q_p": float(s["Q_p"].max()),
                          "Y": float(s["Y"].max()), "Z": float(s["Z"].max()),
                          "X_o": float(s["X_o"].max()), "X_p": float(s["X_p"].max()),
                          "Q_pu": lst(s["Q_pu"].max(axis=0)), "E": float(s["E"].max())}
            out["bound"] = {"B": B, "B_over_V": B / self.cfg.v if self.cfg.v > 0 else None,
                            "C_max_o": c_o, "C_max_p": c_p, "R_0max": r0_max,
                            "eps_threshold": eps_threshold(self.cfg, c_o, c_p)}
        return out

    def write(self, out_dir: str | Path) -> None:
        """Write ``queues.csv``, ``rates.csv`` and ``summary.json``."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_long_csv(out / "queues.csv", {k: self.series[k] for k in QUEUE_SERIES})
        write_long_csv(out / "rates.csv", {k: self.series[k] for k in RATE_SERIES})
        (out / "summary.json").write_text(json.dumps(self.summary(), indent=2))


def _empty_series(cfg: ScenarioConfig, length: int) -> dict:
    widths = {"su": cfg.num_sus, "pu": cfg.num_pus}
    out = {}
    for name, kind in _SERIES.items():
        shape = (length,) if kind is None else (length, widths[kind])
        out[name] = np.zeros(shape)
    out["Q_o_start"] = np.zeros((length, cfg.num_sus))
    return out


def run_scenario(cfg: ScenarioConfig, slot_count: int | None = None, progress=None) -> RunMetrics:
    """Simulate ``slot_count`` slots (default ``cfg.slot_count``) from empty queues."""
    n = cfg.slot_count if slot_count is None else slot_count
    params, policy = ChannelModelParams.from_config(cfg), OccupancyPolicy.from_config(cfg)
    state = SimState.initial(cfg)
    s = _empty_series(cfg, n)
    theta, phi = cfg.vec("theta"), cfg.vec("phi")
    metrics = RunMetrics(cfg, s, state.averages)
    for t in range(n):
        q0 = state.queues
        state, m = run_slot(state, cfg, params, policy)
        q, a, r = state.queues, m.action, m.rates
        for name in ("Q_o", "Q_p", "X_o", "X_p", "Z", "Q_pu"):
            s[name][t] = getattr(q, name)
        s["Y"][t] = q.Y
        s["Qhat"][t] = state.estimator.Qhat
        s["Q_o_start"][t] = q0.Q_o
        for name in ("T_o", "T_p", "mu_o", "mu_p", "zeta"):
            s[name][t] = getattr(a, name)
        for name in ("R_o", "R_p", "R_pu"):
            s[name][t] = getattr(r, name)
        s["E"][t] = r.E
        s["delta"][t] = m.allocation.delta
        s["iterations"][t] = m.allocation.iterations
        s["objective"][t] = m.allocation.objective
        s["utility"][t] = float(theta @ a.T_p + phi @ a.T_o)
        metrics.violations.extend((t, v) for v in m.violations)
        if not m.allocation.converged:
            metrics.unconverged_slots.append(t)
        if progress is not None:
            progress(t)
    metrics.averages = state.averages
    metrics.final_state = state
    return metrics


# ---------------------------------------------------------------------------
# diagnostics


def drift_bound_B(cfg: ScenarioConfig, r0_max: float) -> float:
    """Constant term of the one-slot drift bound."""
    mu, D = cfg.mu_max, cfg.d_max
    qo, qp = cfg.q_max_o, cfg.q_max_p
    n = cfg.num_sus
    rho = cfg.vec("rho")
    B = 0.5 * (cfg.d_max_pu**2 + r0_max**2 + cfg.p_max**2 + cfg.p_avg**2)
    if n:
        per = 0.5 * qo * mu + 0.5 * qp * D
        per += (1 - mu / qo) * mu**2 if qo > 0 else 0.0
        per += (1 - D / qp) * D**2 if qp > 0 else 0.0
        B += n * per + 0.5 * float(np.sum(rho**2 * mu**2 + qo**2))
    return float(B)


def eps_threshold(cfg: ScenarioConfig, c_max_o: float, c_max_p: float) -> float:
    """Smallest slack ``eps`` for which the buffer sizes support the utility bound.

    Returns ``inf`` when a buffer leaves no room above its arrival bound.
    """
    room_o, room_p = cfg.q_max_o - cfg.mu_max, cfg.q_max_p - cfg.d_max
    if room_o <= 0 or room_p <= 0:
        return float("inf")
    return float(max((c_max_o**2 + cfg.mu_max**2) / (2 * room_o),
                     (c_max_p**2 + cfg.d_max**2) / (2 * room_p)))


@dataclass(frozen=True)
class TrendResult:
    slope: float
    stderr: float
    upper: float  # slope + k * stderr allowance
    ok: bool


def trend_test(series, fraction: float = 0.5, k: float = 3.0) -> TrendResult:
    """Least-squares slope over the last ``fraction`` of a series.

    ``ok`` means no significant upward drift: ``slope <= k * stderr``.
    """
    y = np.asarray(series, dtype=float)
    y = y[int(len(y) * (1 - fraction)):]
    if len(y) < 3:
        return TrendResult(0.0, 0.0, 0.0, True)
    x = np.arange(len(y), dtype=float)
    x -= x.mean()
    sxx = float(x @ x)
    slope = float(x @ (y - y.mean()) / sxx)
    resid = y - y.mean() - slope * x
    se = float(np.sqrt(resid @ resid / (len(y) - 2) / sxx))
    return TrendResult(slope, se, k * se, slope <= k * se)
