"""Per-slot secrecy control, power allocation and subcarrier assignment.

The weighted-sum-rate problem is relaxed on the peak-power constraint with a
multiplier ``delta``. For fixed ``delta`` it splits into independent
one-dimensional problems, one per (SU, subcarrier):

    J(p) = w_o * R_o(p) + w_p * R_p(p) + Q_pu * R_pu(p) - (Y + delta) * p

solved exactly on interference-free subcarriers (the stationarity condition is
a quadratic in ``p``) and by grid search plus golden-section refinement on
PU-occupied ones. Each subcarrier then goes to the SU with the largest
optimal ``J`` and ``delta`` follows a projected subgradient step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ChannelState, ControlAction, QueueState, ScenarioConfig
from .rates import slot_rates

LN2 = np.log(2.0)
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class DualState:
    delta: float = 0.0
    iteration: int = 0
    last_subgradient: float = np.nan

    def __post_init__(self) -> None:
        if self.delta < 0:
            raise ValueError("multiplier must be nonnegative")


@dataclass(frozen=True)
class Allocation:
    """Outcome of :func:`solve_allocation` plus solver diagnostics."""

    p: np.ndarray
    w: np.ndarray
    zeta: np.ndarray
    delta: float
    iterations: int
    converged: bool
    E: float
    objective: float
    delta_trace: list = field(default_factory=list, repr=False)


def urgency_weights(queues: QueueState, cfg: ScenarioConfig):
    """Transmission urgency of open and private data, ``X * Q / q_max``."""
    return queues.X_o * queues.Q_o / cfg.q_max_o, queues.X_p * queues.Q_p / cfg.q_max_p


def secrecy_control(w_o, w_p) -> np.ndarray:
    """Send private data iff its urgency is at least the open-data urgency."""
    return (np.asarray(w_p) - np.asarray(w_o) >= 0).astype(int)


# ---------------------------------------------------------------------------
# per-(n, m) subproblem


@dataclass(frozen=True)
class _Terms:
    """Coefficients of J for every (n, m); arrays of shape (N, M)."""

    alpha: np.ndarray  # SU SINR per watt
    beta: np.ndarray  # eavesdropper SINR per watt
    w_o: np.ndarray
    s: np.ndarray  # extra weight on the secrecy rate, zero when it vanishes
    pu_w: np.ndarray  # weight of the PU rate on m (0 on free subcarriers)
    pu_snr: np.ndarray  # P_k^m A_k^m
    a_ks: np.ndarray
    occupied: np.ndarray  # (M,)


def _terms(channel: ChannelState, w_o, w_p, zeta, pu_weights) -> _Terms:
    n, m = channel.a.shape
    occ = channel.occupied
    P = channel.interference_power()
    alpha = channel.a / (1.0 + P * channel.a_np)
    beta = channel.b / (1.0 + P * channel.b_np)
    w_o = np.broadcast_to(np.asarray(w_o, dtype=float).reshape(-1, 1), (n, m))
    coef = (np.asarray(zeta) * (np.asarray(w_p, dtype=float) - np.asarray(w_o[:, 0])))[:, None]
    s = np.where(alpha > beta, coef, 0.0)
    cols = np.arange(m)
    k = np.where(occ, channel.owner, 0)
    pu_weights = np.atleast_1d(np.asarray(pu_weights, dtype=float))
    row = lambda v: np.broadcast_to(np.where(occ, v, 0.0), (n, m))  # noqa: E731
    return _Terms(alpha, beta, w_o, s,
                  row(pu_weights[k] if pu_weights.size else 0.0),
                  row(channel.pu_power[k, cols] * channel.A[k, cols]),
                  row(channel.a_ks[k, cols]), occ)


def _objective(p, c, alpha, beta, w_o, s, pu_w, pu_snr, a_ks):
    """J evaluated elementwise (all arguments broadcast)."""
    su = (w_o + s) * np.log2(1.0 + alpha * p) - s * np.log2(1.0 + beta * p)
    pu = pu_w * np.log2(1.0 + pu_snr / (1.0 + a_ks * p))
    return su + pu - c * p


def _stationary_points(c, alpha, beta, w_o, s):
    """Roots of dJ/dp = 0 without a PU term: a quadratic in p.

    (w_o + s) a/(1 + a p) - s b/(1 + b p) = c ln2, cleared of denominators.
    Returns two candidate arrays (NaN where a root does not exist).
    """
    cl = c * LN2
    A2 = cl * alpha * beta
    A1 = cl * (alpha + beta) - w_o * alpha * beta
    A0 = cl - (w_o + s) * alpha + s * beta
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        disc = A1 * A1 - 4.0 * A2 * A0
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        q = -0.5 * (A1 + np.where(A1 >= 0, 1.0, -1.0) * sq)
        quad = A2 != 0
        r1 = np.where(quad, q / A2, np.where(A1 != 0, -A0 / A1, np.nan))
        r2 = np.where(quad & (q != 0), A0 / q, np.nan)
    return r1, r2


def _best_of(cands, c, t: _Terms, idx=None):
    """Pick, per element, the candidate power with the largest J (first wins ties)."""
    sel = (lambda x: x) if idx is None else (lambda x: x[idx])
    args = (sel(t.alpha), sel(t.beta), sel(t.w_o), sel(t.s), sel(t.pu_w), sel(t.pu_snr), sel(t.a_ks))
    vals = np.stack([_objective(p, c, *args) for p in cands])
    j = np.argmax(vals, axis=0)
    stacked = np.stack(cands)
    pick = np.take_along_axis(stacked, j[None], 0)[0]
    best = np.take_along_axis(vals, j[None], 0)[0]
    return pick, best


class _FreeSolver:
    """Closed-form optimum on PU-free subcarriers (J(0) = 0 there)."""

    def __init__(self, t: _Terms, idx, p_max: float):
        self.alpha, self.beta = t.alpha[idx], t.beta[idx]
        self.w_o, self.s = t.w_o[idx], t.s[idx]
        self.p_max = p_max

    def _value(self, p, c):
        return ((self.w_o + self.s) * np.log2(1.0 + self.alpha * p)
                - self.s * np.log2(1.0 + self.beta * p) - c * p)

    def solve(self, c):
        r1, r2 = _stationary_points(c, self.alpha, self.beta, self.w_o, self.s)
        best_p = np.zeros_like(self.alpha)
        best = np.zeros_like(self.alpha)
        for r in (r1, r2, None):
            p = np.full_like(best, self.p_max) if r is None else np.clip(
                np.where(np.isnan(r), 0.0, r), 0.0, self.p_max)
            v = self._value(p, c)
            better = v > best
            best_p = np.where(better, p, best_p)
            best = np.where(better, v, best)
        return best_p, best


class _OccupiedSolver:
    """Grid search with golden-section refinement for PU-occupied subcarriers.

    The price-free part of J is tabulated once per slot, so each dual
    iteration costs one subtraction and an argmax over the grid.
    """

    def __init__(self, t: _Terms, idx, p_max: float, grid_points: int):
        self.t, self.idx, self.p_max = t, idx, p_max
        self.grid = np.linspace(0.0, p_max, max(int(grid_points), 2))
        args = [x[idx][..., None] for x in (t.alpha, t.beta, t.w_o, t.s, t.pu_w, t.pu_snr, t.a_ks)]
        self.base = _objective(self.grid, 0.0, *args)

    def solve(self, c, refine: bool):
        vals = self.base - np.asarray(c)[..., None] * self.grid
        j = np.argmax(vals, axis=-1)
        p = self.grid[j]
        best = np.take_along_axis(vals, j[..., None], -1)[..., 0]
        if not refine or p.size == 0:
            return p, best
        h = self.grid[1] - self.grid[0]
        lo = np.clip(p - h, 0.0, self.p_max)
        hi = np.clip(p + h, 0.0, self.p_max)
        t, idx = self.t, self.idx
        args = tuple(x[idx] for x in (t.alpha, t.beta, t.w_o, t.s, t.pu_w, t.pu_snr, t.a_ks))
        x1, x2 = hi - _GOLDEN * (hi - lo), lo + _GOLDEN * (hi - lo)
        f1, f2 = _objective(x1, c, *args), _objective(x2, c, *args)
        for _ in range(30):
            left = f1 >= f2
            # keep [lo, x2] when the left probe wins, else [x1, hi]; reuse one probe
            hi, lo = np.where(left, x2, hi), np.where(left, lo, x1)
            new_x = np.where(left, hi - _GOLDEN * (hi - lo), lo + _GOLDEN * (hi - lo))
            f_new = _objective(new_x, c, *args)
            x1, x2, f1, f2 = (np.where(left, new_x, x2), np.where(left, x1, new_x),
                              np.where(left, f_new, f2), np.where(left, f1, f_new))
        return _best_of([p, 0.5 * (lo + hi)], c, t, idx)


class _Subproblems:
    def __init__(self, t: _Terms, Y: float, p_max: float, grid_points: int):
        self.t, self.Y, self.p_max = t, Y, p_max
        n, m = t.alpha.shape
        occ2 = np.broadcast_to(t.occupied, (n, m))
        self.free_idx = np.nonzero(~occ2)
        self.occ_idx = np.nonzero(occ2)
        self.free = _FreeSolver(t, self.free_idx, p_max)
        self.occ = _OccupiedSolver(t, self.occ_idx, p_max, grid_points)
        self.shape = (n, m)

    def solve(self, delta: float, refine: bool):
        """Optimal power and J for every (n, m) at multiplier ``delta``."""
        c = self.Y + delta
        p = np.zeros(self.shape)
        J = np.zeros(self.shape)
        if self.free_idx[0].size:
            p[self.free_idx], J[self.free_idx] = self.free.solve(c)
        if self.occ_idx[0].size:
            p[self.occ_idx], J[self.occ_idx] = self.occ.solve(c, refine)
        return p, J


# ---------------------------------------------------------------------------
# public per-subcarrier operations


def _single_terms(channel, n, m, w_o, w_p, zeta, pu_weight):
    weights = np.zeros(channel.num_pus) + pu_weight
    wo = np.zeros(channel.num_sus)
    wp = np.zeros(channel.num_sus)
    z = np.zeros(channel.num_sus, dtype=int)
    wo[n], wp[n], z[n] = w_o, w_p, zeta
    return _terms(channel, wo, wp, z, weights)


def power_free_subcarrier(n, m, channel: ChannelState, w_o, w_p, zeta, Y, delta, p_max) -> float:
    """Optimal SU ``n`` power on interference-free subcarrier ``m``."""
    if channel.occupied[m]:
        raise ValueError(f"subcarrier {m} is occupied by a PU")
    t = _single_terms(channel, n, m, w_o, w_p, zeta, 0.0)
    p, _ = _FreeSolver(t, (np.array([n]), np.array([m])), p_max).solve(Y + delta)
    return float(p[0])


def power_occupied_subcarrier(n, m, channel: ChannelState, w_o, w_p, zeta, pu_weight, Y, delta,
                              p_max, grid_points: int = 256) -> float:
    """Optimal SU ``n`` power on PU-occupied subcarrier ``m`` (grid + refinement)."""
    if not channel.occupied[m]:
        raise ValueError(f"subcarrier {m} is not occupied")
    t = _single_terms(channel, n, m, w_o, w_p, zeta, pu_weight)
    solver = _OccupiedSolver(t, (np.array([n]), np.array([m])), p_max, grid_points)
    p, _ = solver.solve(np.array([Y + delta]), refine=True)
    return float(p[0])


def assign_subcarriers(J) -> np.ndarray:
    """Give each subcarrier to the SU with the largest J; ties go to the lowest index."""
    J = np.asarray(J, dtype=float)
    w = np.zeros(J.shape, dtype=int)
    if J.size:
        w[np.argmax(J, axis=0), np.arange(J.shape[1])] = 1
    return w


def _fit_peak_power(p: np.ndarray, p_max: float) -> np.ndarray:
    total = p.sum()
    if total <= p_max:
        return p
    p = p * (p_max / total)
    while p.sum() > p_max:
        p = p * (1.0 - 1e-15)
    return p


def solve_allocation(channel: ChannelState, queues: QueueState, cfg: ScenarioConfig,
                     pu_weights=None, trace: bool = False, delta_init: float | None = None) -> Allocation:
    """Secrecy flags, power and assignment for one slot.

    ``pu_weights`` defaults to the true PU backlogs; pass an estimate for the
    estimated-queue variant. The returned power always satisfies the peak
    limit; if the subgradient loop stalls the best feasible iterate is used.
    ``delta_init`` overrides the configured starting multiplier, e.g. to
    warm-start from the previous slot.
    """
    if pu_weights is None:
        pu_weights = queues.Q_pu
    w_o, w_p = urgency_weights(queues, cfg)
    zeta = secrecy_control(w_o, w_p)
    sub = _Subproblems(_terms(channel, w_o, w_p, zeta, pu_weights), queues.Y, cfg.p_max,
                       cfg.grid_points)
    cols = np.arange(channel.num_subcarriers)

    dual = DualState(max(cfg.delta_init if delta_init is None else delta_init, 0.0))
    step = cfg.step
    if cfg.step_rule == "adaptive":
        step *= max(1.0, dual.delta)
    prev_sign = 0.0
    bracketed = False
    best_feasible = None  # (objective, delta)
    last_infeasible = None  # largest delta with E > p_max
    converged = False
    deltas = []
    for i in range(1, cfg.max_iter + 1):
        delta = dual.delta
        p, J = sub.solve(delta, refine=False)
        n_star = np.argmax(J, axis=0)
        E = float(p[n_star, cols].sum())
        g = cfg.p_max - E
        dual = DualState(delta, i, g)
        if trace:
            deltas.append((delta, E))
        if g >= 0:
            U = float(J[n_star, cols].sum()) + delta * E
            if best_feasible is None or U > best_feasible[0]:
                best_feasible = (U, delta)
        elif last_infeasible is None or delta > last_infeasible:
            last_infeasible = delta
        # stop on a small subgradient, or on a slack constraint with delta = 0
        if abs(g) <= cfg.delta_tol or (delta <= 0.0 and g >= 0):
            converged = True
            break
        sign = np.sign(g)
        if cfg.step_rule == "adaptive" and prev_sign:
            # expand until the sign first flips, then contract on every flip
            if sign != prev_sign:
                bracketed = True
                step *= 0.5
            elif not bracketed:
                step *= 2.0
        prev_sign = sign
        new_delta = max(delta - step * g, 0.0)
        if abs(new_delta - delta) <= 1e-7 * (1.0 + delta):
            break
        dual = DualState(new_delta, i, g)

    final_delta = dual.delta if converged or best_feasible is None else best_feasible[1]
    candidates = [final_delta]
    if not converged and last_infeasible is not None and last_infeasible != final_delta:
        # E jumps across the stall point; the scaled-down side can win
        candidates.append(last_infeasible)
    best = None
    for d in candidates:
        p, J = sub.solve(d, refine=True)
        w = assign_subcarriers(J)
        p = _fit_peak_power(p * w, cfg.p_max)
        action = ControlAction(p, w, zeta, *(np.zeros(channel.num_sus) for _ in range(4)))
        U = ps_objective(channel, queues, action, cfg, pu_weights)
        if best is None or U > best[0]:
            best = (U, d, p, w)
    U, final_delta, p, w = best
    return Allocation(p, w, zeta, final_delta, dual.iteration, converged, float(p.sum()), U, deltas)


def ps_objective(channel: ChannelState, queues: QueueState, action: ControlAction,
                 cfg: ScenarioConfig, pu_weights=None) -> float:
    """Queue-weighted sum rate minus priced power for one action.

    Covers any number of PUs; with one PU it is the single-PU objective.
    """
    if pu_weights is None:
        pu_weights = queues.Q_pu
    w_o, w_p = urgency_weights(queues, cfg)
    r = slot_rates(channel, action)
    return float(np.dot(w_o, r.R_o) + np.dot(w_p, r.R_p)
                 + np.dot(np.asarray(pu_weights, dtype=float), r.R_pu) - queues.Y * r.E)


def mps_objective(channel: ChannelState, queues: QueueState, action: ControlAction,
                  cfg: ScenarioConfig, pu_weights=None) -> float:
    if cfg.num_pus < 1:
        raise ValueError("need at least one PU")
    return ps_objective(channel, queues, action, cfg, pu_weights)
