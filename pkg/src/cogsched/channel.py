"""Per-slot channel generation and PU subcarrier occupancy.

Direct links use Rayleigh block fading with log-normal shadowing, drawn
i.i.d. per (link, subcarrier, slot). Cross links use long-scale fading only:
a fixed mean with optional log-normal jitter.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import ChannelState, ScenarioConfig

# independent RNG streams derived from (seed, stream, slot)
STREAM_CHANNEL = 0
STREAM_ARRIVALS = 1
STREAM_OCCUPANCY = 2


def slot_rng(seed: int, slot: int, stream: int) -> np.random.Generator:
    """Generator that depends only on ``(seed, stream, slot)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream), int(slot)]))


@dataclass(frozen=True)
class ChannelModelParams:
    num_sus: int
    num_pus: int
    num_subcarriers: int
    su_mean: float = 1000.0
    pu_mean: float = 60.0
    shadowing_std_db: float = 10.0
    cross_pu_mean: float = 0.35
    cross_su_mean: float = 21.0
    cross_std_db: float = 0.0

    def __post_init__(self) -> None:
        if self.shadowing_std_db < 0 or self.cross_std_db < 0:
            raise ValueError("shadowing std must be nonnegative")
        if min(self.su_mean, self.pu_mean, self.cross_pu_mean, self.cross_su_mean) <= 0:
            raise ValueError("mean C/I values must be positive")

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "ChannelModelParams":
        return cls(cfg.num_sus, cfg.num_pus, cfg.num_subcarriers, cfg.su_mean_ci, cfg.pu_mean_ci,
                   cfg.shadowing_std_db, cfg.cross_pu_mean, cfg.cross_su_mean, cfg.cross_std_db)


@dataclass(frozen=True)
class OccupancyPolicy:
    """How the PBS picks subcarriers for each busy PU.

    ``fixed``: PU ``k`` always uses the block ``[k*count, (k+1)*count)``.
    ``random``: each subcarrier is occupied with probability ``fraction`` and
    handed to a uniformly chosen busy PU.
    """

    kind: str = "fixed"
    count: int = 32
    fraction: float = 0.5
    power: float = 1.0

    @classmethod
    def from_config(cls, cfg: ScenarioConfig) -> "OccupancyPolicy":
        return cls(cfg.pu_policy, cfg.pu_subcarriers, cfg.pu_fraction, cfg.pbs_power)


def fading_gains(mean: float, shape, shadowing_std_db: float, rng: np.random.Generator,
                 rayleigh: bool = True) -> np.ndarray:
    """``mean * |h|^2 * 10^(S/10)`` with ``|h|^2 ~ Exp(1)`` and ``S ~ N(0, std^2)`` dB."""
    g = np.full(shape, float(mean))
    if rayleigh:
        g = g * rng.exponential(1.0, size=shape)
    if shadowing_std_db > 0:
        g = g * 10.0 ** (rng.normal(0.0, shadowing_std_db, size=shape) / 10.0)
    return g


def strongest_eavesdropper(a: np.ndarray, a_np: np.ndarray):
    """For each (n, m), the strongest other SU and its C/I values.

    Returns ``(b, b_np, idx)``; with a single SU there is no eavesdropper,
    ``b = b_np = 0`` and ``idx = -1``.
    """
    n_su, n_sc = a.shape
    if n_su < 2:
        z = np.zeros_like(a)
        return z, z.copy(), np.full(a.shape, -1)
    order = np.argsort(-a, axis=0, kind="stable")
    first, second = order[0], order[1]
    rows = np.arange(n_su)[:, None]
    idx = np.where(rows == first[None, :], second[None, :], first[None, :])
    cols = np.broadcast_to(np.arange(n_sc), a.shape)
    return a[idx, cols], a_np[idx, cols], idx


def sample_channel(params: ChannelModelParams, slot: int, rng: np.random.Generator | None = None,
                   seed: int = 0, owner: np.ndarray | None = None,
                   pu_power: np.ndarray | None = None) -> ChannelState:
    """Draw one slot of channel state.

    When ``rng`` is omitted the draw is a pure function of ``(seed, slot)``.
    ``owner``/``pu_power`` attach a PU occupancy pattern; by default every
    subcarrier is free.
    """
    if rng is None:
        rng = slot_rng(seed, slot, STREAM_CHANNEL)
    n, k, m = params.num_sus, params.num_pus, params.num_subcarriers
    a = fading_gains(params.su_mean, (n, m), params.shadowing_std_db, rng)
    A = fading_gains(params.pu_mean, (k, m), params.shadowing_std_db, rng)
    a_ks = fading_gains(params.cross_pu_mean, (k, m), params.cross_std_db, rng, rayleigh=False)
    a_np = fading_gains(params.cross_su_mean, (n, m), params.cross_std_db, rng, rayleigh=False)
    b, b_np, _ = strongest_eavesdropper(a, a_np)
    if owner is None:
        owner = np.full(m, -1)
    if pu_power is None:
        pu_power = np.zeros((k, m))
    return ChannelState(a, A, a_ks, a_np, b, b_np, np.asarray(owner, dtype=int).copy(),
                        np.asarray(pu_power, dtype=float).copy())


def pu_occupancy(policy: OccupancyPolicy, slot: int, Q_pu: np.ndarray, num_subcarriers: int,
                 rng: np.random.Generator | None = None, seed: int = 0):
    """Occupied subcarrier sets for this slot.

    Returns ``(owner, pu_power)``: ``owner[m]`` is the PU on ``m`` or ``-1``.
    A PU with an empty queue is idle and occupies nothing.
    """
    Q_pu = np.asarray(Q_pu, dtype=float)
    n_pu = Q_pu.size
    owner = np.full(num_subcarriers, -1)
    busy = np.flatnonzero(Q_pu > 0)
    if policy.kind == "fixed":
        if n_pu * policy.count > num_subcarriers:
            raise ValueError("PU occupancy over-subscribes the subcarriers")
        for k in busy:
            owner[k * policy.count:(k + 1) * policy.count] = k
    elif policy.kind == "random":
        if rng is None:
            rng = slot_rng(seed, slot, STREAM_OCCUPANCY)
        used = rng.random(num_subcarriers) < policy.fraction
        pick = rng.integers(0, max(len(busy), 1), size=num_subcarriers)
        if len(busy):
            owner = np.where(used, busy[pick], -1)
    else:
        raise ValueError(f"unknown occupancy policy {policy.kind!r}")
    pu_power = np.zeros((n_pu, num_subcarriers))
    cols = np.flatnonzero(owner >= 0)
    pu_power[owner[cols], cols] = policy.power
    return owner, pu_power


# ---------------------------------------------------------------------------
# trace replay: long-form CSV with columns slot, link, index, subcarrier, value

_TRACE_FIELDS = ("a", "A", "a_ks", "a_np", "pu_power")


def write_channel_trace(path: str | Path, states: list[ChannelState], first_slot: int = 0) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["slot", "link", "index", "subcarrier", "value"])
        for t, st in enumerate(states, first_slot):
            for name in _TRACE_FIELDS:
                arr = getattr(st, name)
                for (i, m), val in np.ndenumerate(arr):
                    w.writerow([t, name, i, m, repr(float(val))])
            for m, k in enumerate(st.owner):
                w.writerow([t, "owner", 0, m, int(k)])


def read_channel_trace(path: str | Path) -> dict[int, ChannelState]:
    """Inverse of :func:`write_channel_trace`; eavesdropper terms are recomputed."""
    rows: dict[int, dict[str, list]] = {}
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            rows.setdefault(int(r["slot"]), {}).setdefault(r["link"], []).append(
                (int(r["index"]), int(r["subcarrier"]), float(r["value"])))
    out = {}
    for t, links in rows.items():
        arrays = {}
        for name in _TRACE_FIELDS:
            entries = links[name]
            shape = (max(e[0] for e in entries) + 1, max(e[1] for e in entries) + 1)
            arr = np.zeros(shape)
            for i, m, v in entries:
                arr[i, m] = v
            arrays[name] = arr
        owner_entries = sorted(links["owner"], key=lambda e: e[1])
        owner = np.array([int(e[2]) for e in owner_entries])
        b, b_np, _ = strongest_eavesdropper(arrays["a"], arrays["a_np"])
        out[t] = ChannelState(arrays["a"], arrays["A"], arrays["a_ks"], arrays["a_np"], b, b_np,
                              owner, arrays["pu_power"])
    return out
