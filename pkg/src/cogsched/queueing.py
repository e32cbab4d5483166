"""Queue recursions, arrival sampling and running time averages."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .channel import STREAM_ARRIVALS, slot_rng
from .core import ControlAction, QueueState, ScenarioConfig
from .rates import RateOutcome


@dataclass(frozen=True)
class Arrivals:
    D_o: np.ndarray
    D_p: np.ndarray
    D_pu: np.ndarray


def two_point(mean, bound, rng: np.random.Generator) -> np.ndarray:
    """``bound`` with probability ``mean / bound``, else 0 (mean exactly ``mean``)."""
    mean = np.asarray(mean, dtype=float)
    if bound <= 0:
        return np.zeros_like(mean)
    return np.where(rng.random(mean.shape) < mean / bound, float(bound), 0.0)


def sample_arrivals(cfg: ScenarioConfig, slot: int, rng: np.random.Generator | None = None) -> Arrivals:
    if rng is None:
        rng = slot_rng(cfg.rng_seed, slot, STREAM_ARRIVALS)
    return Arrivals(two_point(cfg.vec("lambda_o"), cfg.mu_max, rng),
                    two_point(cfg.vec("lambda_p"), cfg.d_max, rng),
                    two_point(cfg.vec("lambda_pu"), cfg.d_max_pu, rng))


def _pos(x):
    return np.maximum(x, 0.0)


def update_queues(q: QueueState, action: ControlAction, rates: RateOutcome, arrivals: Arrivals,
                  cfg: ScenarioConfig) -> QueueState:
    """End-of-slot update of every actual and virtual queue.

    All right-hand sides use the slot-start state; in particular the delay
    queue adds the old open backlog.
    """
    return QueueState(
        Q_pu=_pos(q.Q_pu - rates.R_pu) + arrivals.D_pu,
        Q_o=_pos(q.Q_o - rates.R_o) + action.T_o,
        Q_p=_pos(q.Q_p - rates.R_p) + action.T_p,
        X_o=_pos(q.X_o - action.T_o) + action.mu_o,
        # drained by private admissions (the printed T^o reads as a typo)
        X_p=_pos(q.X_p - action.T_p) + action.mu_p,
        Y=float(max(q.Y - cfg.p_avg, 0.0) + rates.E),
        Z=_pos(q.Z - cfg.vec("rho") * action.mu_o) + q.Q_o,
    )


@dataclass(frozen=True)
class SlotSample:
    """Per-slot quantities folded into the running averages."""

    T_o: np.ndarray
    T_p: np.ndarray
    R_o: np.ndarray
    R_p: np.ndarray
    mu_o: np.ndarray
    mu_p: np.ndarray
    E: float
    R_pu: np.ndarray
    Q_o: np.ndarray  # slot-start backlog


@dataclass(frozen=True)
class RunningAverages:
    count: int
    t_o: np.ndarray
    t_p: np.ndarray
    r_o: np.ndarray
    r_p: np.ndarray
    nu_o: np.ndarray
    nu_p: np.ndarray
    e: float
    r_pu: np.ndarray
    q_o_avg: np.ndarray

    @classmethod
    def empty(cls, num_sus: int, num_pus: int) -> "RunningAverages":
        z = np.zeros(num_sus)
        return cls(0, z, z, z, z, z, z, 0.0, np.zeros(num_pus), z)

    @property
    def delay_o(self) -> np.ndarray:
        """Little's-law mean open-data delay; NaN where nothing was admitted."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.t_o > 0, self.q_o_avg / np.where(self.t_o > 0, self.t_o, 1.0), np.nan)


_AVG_MAP = {"t_o": "T_o", "t_p": "T_p", "r_o": "R_o", "r_p": "R_p", "nu_o": "mu_o",
            "nu_p": "mu_p", "e": "E", "r_pu": "R_pu", "q_o_avg": "Q_o"}


def update_averages(avg: RunningAverages, sample: SlotSample) -> RunningAverages:
    n = avg.count + 1
    new = {}
    for name, src in _AVG_MAP.items():
        cur = getattr(avg, name)
        val = getattr(sample, src)
        upd = cur + (np.asarray(val, dtype=float) - cur) / n
        new[name] = float(upd) if name == "e" else upd
    return replace(avg, count=n, **new)


def write_long_csv(path: str | Path, series: dict[str, np.ndarray], entity_prefix: str = "su") -> None:
    """Write ``{metric: (T,) or (T, n)}`` as rows ``slot, entity, metric, value``.

    One-dimensional series are tagged with entity ``system``; columns of 2-D
    series get ``<prefix><i>`` with 1-based ``i``.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["slot", "entity", "metric", "value"])
        if not series:
            return
        length = len(next(iter(series.values())))
        for t in range(length):
            for metric, arr in series.items():
                row = arr[t]
                if np.ndim(row) == 0:
                    w.writerow([t, "system", metric, repr(float(row))])
                else:
                    prefix = "pu" if metric.endswith("_pu") or metric == "Qhat" else entity_prefix
                    for i, val in enumerate(row, 1):
                        w.writerow([t, f"{prefix}{i}", metric, repr(float(val))])
