"""Sufficient-condition analysis for full overlay and a static brute-force check.

``overlay_constants`` gives the per-(SU, subcarrier) thresholds on the
CBS-to-PU cross gain below which transmitting concurrently with the PU is
optimal. ``static_overlay_oracle`` searches PU activity fractions and SU
powers on a grid for a tiny static instance, so the threshold can be checked
empirically.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .channel import strongest_eavesdropper
from .core import ChannelState

HIGH_SINR_LINEAR = 10.0


def overlay_constants(a, b, a_np, b_np, P0, p_max):
    """Return ``(C1, C2)``; a zero gain makes its constant ``+inf``."""
    a, b, a_np, b_np, P0 = (np.asarray(x, dtype=float) for x in (a, b, a_np, b_np, P0))

    def const(g, g_np):
        x = g * p_max
        with np.errstate(divide="ignore", invalid="ignore"):
            val = g / ((1.0 + P0 * g_np + x) * np.log2(1.0 + x))
        return np.where(x > 0, val, np.inf)

    c1, c2 = const(b, b_np), const(a, a_np)
    if c1.ndim == 0:
        return float(c1), float(c2)
    return c1, c2


@dataclass
class OverlayReport:
    C1: np.ndarray  # (N, M)
    C2: np.ndarray
    a_0s: np.ndarray  # (M,)
    condition_holds: np.ndarray  # (N, M)
    subcarrier_holds: np.ndarray  # (M,)
    system_holds: bool
    low_sinr: bool  # some occupied subcarrier has P_0 A_0 below the high-SINR mark

    def to_dict(self) -> dict:
        def clean(x):
            arr = np.asarray(x, dtype=float)
            return np.where(np.isinf(arr), None, arr).tolist()
        return {"C1": clean(self.C1), "C2": clean(self.C2), "a_0S": self.a_0s.tolist(),
                "condition_holds": self.condition_holds.tolist(),
                "subcarrier_holds": self.subcarrier_holds.tolist(),
                "system_holds": bool(self.system_holds), "low_sinr": bool(self.low_sinr)}

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            fh.write("su,subcarrier,C1,C2,a_0S,condition_holds\n")
            n_su, n_sc = self.C1.shape
            for n in range(n_su):
                for m in range(n_sc):
                    fh.write(f"{n + 1},{m},{self.C1[n, m]!r},{self.C2[n, m]!r},"
                             f"{self.a_0s[m]!r},{int(self.condition_holds[n, m])}\n")


def check_full_overlay(channel: ChannelState, p_max: float) -> OverlayReport:
    """Evaluate the full-overlay sufficient condition for a single-PU channel."""
    if channel.num_pus != 1:
        raise ValueError("full-overlay check is defined for a single PU")
    P0 = channel.pu_power[0]
    C1, C2 = overlay_constants(channel.a, channel.b, channel.a_np, channel.b_np, P0[None, :], p_max)
    a_0s = channel.a_ks[0]
    holds = a_0s[None, :] <= np.minimum(C1, C2)
    per_m = holds.all(axis=0)
    occ = channel.occupied
    low = bool(np.any(P0[occ] * channel.A[0, occ] < HIGH_SINR_LINEAR))
    return OverlayReport(C1, C2, a_0s.copy(), holds, per_m, bool(per_m.all()), low)


# ---------------------------------------------------------------------------
# static grid-search oracle


@dataclass
class StaticInstance:
    """Static single-PU network; arrays are (N, M) for SU links and (M,) per subcarrier."""

    a: np.ndarray
    a_np: np.ndarray
    A0: np.ndarray
    P0: np.ndarray  # zero on subcarriers the PU does not use
    a_0s: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    lambda0: float
    p_max: float = 1.0

    @property
    def b(self) -> np.ndarray:
        return strongest_eavesdropper(self.a, self.a_np)[0]

    @property
    def b_np(self) -> np.ndarray:
        return strongest_eavesdropper(self.a, self.a_np)[1]

    @property
    def occupied(self) -> np.ndarray:
        return self.P0 > 0

    def condition_holds(self) -> bool:
        """Whether ``a_0S <= min_n min(C1, C2)`` on every subcarrier."""
        C1, C2 = overlay_constants(self.a, self.b, self.a_np, self.b_np, self.P0[None, :], self.p_max)
        return bool(np.all(self.a_0s[None, :] <= np.minimum(C1, C2)))


@dataclass
class OracleResult:
    feasible: bool
    kappa: float
    objective: float
    powers: np.ndarray
    assignment: np.ndarray
    zeta: np.ndarray

    def to_dict(self) -> dict:
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(self).items()}


def _power_vectors(grid: np.ndarray, n_sc: int, p_max: float) -> np.ndarray:
    combos = np.array(list(itertools.product(grid, repeat=n_sc)), dtype=float)
    return combos[combos.sum(axis=1) <= p_max + 1e-12]


def pu_rate_static(inst: StaticInstance, powers: np.ndarray) -> np.ndarray:
    """PU rate while active, for each row of ``powers`` (shape (..., M))."""
    occ = inst.occupied
    r = np.log2(1.0 + inst.A0 * inst.P0 / (1.0 + inst.a_0s * powers))
    return np.where(occ, r, 0.0).sum(axis=-1)


def static_overlay_oracle(inst: StaticInstance, power_grid=None, kappa_grid=None) -> OracleResult:
    """Brute-force the static weighted-throughput problem over (kappa, powers).

    ``kappa`` is the fraction of time the PU transmits; the PU must still
    receive at least ``lambda0``. Subcarrier assignment and the secrecy flags
    are enumerated as well. Among equal objectives the largest ``kappa`` wins.
    """
    if power_grid is None:
        power_grid = np.linspace(0.0, inst.p_max, 11)
    if kappa_grid is None:
        kappa_grid = np.linspace(0.0, 1.0, 21)
    power_grid = np.asarray(power_grid, dtype=float)
    kappa_grid = np.asarray(kappa_grid, dtype=float)
    n_su, n_sc = inst.a.shape
    occ = inst.occupied
    b, b_np = inst.b, inst.b_np

    P = _power_vectors(power_grid, n_sc, inst.p_max)  # (V, M)
    assigns = np.array(list(itertools.product(range(n_su), repeat=n_sc)))  # (S, M)
    cols = np.arange(n_sc)
    a_s, b_s = inst.a[assigns, cols], b[assigns, cols]  # (S, M)
    anp_s, bnp_s = inst.a_np[assigns, cols], b_np[assigns, cols]
    pp = P[None, :, :]  # (1, V, M)
    a_, b_, anp, bnp = (x[:, None, :] for x in (a_s, b_s, anp_s, bnp_s))
    clean = np.log2(1 + a_ * pp)
    clean_sec = np.maximum(clean - np.log2(1 + b_ * pp), 0.0)
    intf = np.log2(1 + a_ * pp / (1 + inst.P0 * anp))
    intf_sec = np.maximum(intf - np.log2(1 + b_ * pp / (1 + inst.P0 * bnp)), 0.0)
    # (S, V, M) -> per-kappa SU rates on each subcarrier
    k = kappa_grid[:, None, None, None]  # (Kg, 1, 1, 1)
    cap = np.where(occ, k * intf + (1 - k) * clean, clean)
    sec = np.where(occ, k * intf_sec + (1 - k) * clean_sec, clean_sec)
    onehot = assigns[..., None] == np.arange(n_su)  # (S, M, N)
    cap_n = np.einsum("ksvm,smn->ksvn", cap, onehot)
    sec_n = np.einsum("ksvm,smn->ksvn", sec, onehot)
    # weighted objective: phi*cap + zeta*(theta - phi)*sec, zeta chosen per SU
    gain = (inst.theta - inst.phi) * sec_n
    zeta = (gain > 0).astype(int)
    obj = (inst.phi * cap_n + np.maximum(gain, 0.0)).sum(axis=-1)  # (Kg, S, V)
    r0 = kappa_grid[:, None] * pu_rate_static(inst, P)[None, :]  # (Kg, V)
    feasible = (r0 >= inst.lambda0 - 1e-12)[:, None, :]
    obj = np.where(feasible, obj, -np.inf)
    if not np.isfinite(obj).any():
        return OracleResult(False, np.nan, -np.inf, np.full(n_sc, np.nan), np.full(n_sc, -1),
                            np.zeros(n_su, dtype=int))
    best = obj.max()
    tol = 1e-9 * max(1.0, abs(best))
    kg, s, v = np.nonzero(obj >= best - tol)
    j = np.argmax(kappa_grid[kg])
    kg, s, v = kg[j], s[j], v[j]
    return OracleResult(True, float(kappa_grid[kg]), float(obj[kg, s, v]), P[v].copy(),
                        assigns[s].copy(), zeta[kg, s, v].copy())


def full_overlay_demand(inst: StaticInstance, power_grid=None) -> float:
    """PU rate under the most harmful grid power vector.

    Using it as ``lambda0`` means concurrent transmission always keeps the PU
    served, whatever powers the SUs pick.
    """
    if power_grid is None:
        power_grid = np.linspace(0.0, inst.p_max, 11)
    P = _power_vectors(np.asarray(power_grid, dtype=float), inst.a.shape[1], inst.p_max)
    return float(pu_rate_static(inst, P).min())


def random_static_instance(rng: np.random.Generator, num_sus: int = 2, num_subcarriers: int = 3,
                           num_occupied: int = 2, satisfy_condition: bool = True,
                           p_max: float = 1.0, power_grid=None) -> StaticInstance:
    """Draw a tiny static instance in the high-SINR regime.

    With ``satisfy_condition`` the cross gain on each subcarrier is a random
    fraction of its threshold; otherwise it is drawn large. The PU demand is
    set with :func:`full_overlay_demand`.
    """
    n, m = num_sus, num_subcarriers
    a = 10 ** rng.uniform(-0.5, 2.0, size=(n, m))
    a_np = 10 ** rng.uniform(-1.0, 1.0, size=(n, m))
    P0 = np.zeros(m)
    occ = rng.choice(m, size=min(num_occupied, m), replace=False)
    P0[occ] = 1.0
    A0 = 10 ** rng.uniform(1.5, 3.0, size=m)
    theta = rng.uniform(0.0, 2.0, size=n)
    phi = rng.uniform(0.0, 2.0, size=n)
    inst = StaticInstance(a, a_np, A0, P0, np.zeros(m), theta, phi, 0.0, p_max)
    C1, C2 = overlay_constants(a, inst.b, a_np, inst.b_np, P0[None, :], p_max)
    bound = np.minimum(C1, C2).min(axis=0)
    if satisfy_condition:
        inst.a_0s = rng.uniform(0.0, 1.0, size=m) * bound
    else:
        inst.a_0s = bound * 10 ** rng.uniform(1.5, 3.0, size=m)
    inst.lambda0 = full_overlay_demand(inst, power_grid)
    return inst
