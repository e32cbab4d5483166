"""Instantaneous rate formulas for the PU link, SU links and secrecy rates.

All per-subcarrier functions broadcast over numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ChannelState, ControlAction, check_action


@dataclass(frozen=True)
class RateOutcome:
    R_pu: np.ndarray  # (K,)
    C: np.ndarray  # (N, M) capacity
    Rhat_p: np.ndarray  # (N, M) secrecy rate
    R_p: np.ndarray  # (N,)
    R_o: np.ndarray  # (N,)
    E: float


def pu_subcarrier_rate(A, P, a_ks, p_interferer, occupied=True):
    """``log2(1 + P A / (1 + a_kS p))`` on an occupied subcarrier, else 0."""
    r = np.log2(1.0 + np.multiply(P, A) / (1.0 + np.multiply(a_ks, p_interferer)))
    return np.where(occupied, r, 0.0)


def su_subcarrier_capacity(a, p, a_np, P, occupied):
    """SU capacity; PBS interference ``P a_nP`` applies on occupied subcarriers."""
    interference = np.where(occupied, np.multiply(P, a_np), 0.0)
    return np.log2(1.0 + np.multiply(p, a) / (1.0 + interference))


def secrecy_subcarrier_rate(C, b, p, b_np, P, occupied):
    """``[C - eavesdropper rate]^+`` on one subcarrier."""
    eve = su_subcarrier_capacity(b, p, b_np, P, occupied)
    return np.maximum(np.asarray(C) - eve, 0.0)


def slot_rates(channel: ChannelState, action: ControlAction, p_max: float | None = None) -> RateOutcome:
    """Aggregate rates and power for one slot under ``action``.

    Raises ``ValueError`` if the action breaks the one-SU-per-subcarrier rule
    or (when ``p_max`` is given) the peak power limit.
    """
    problems = check_action(action, np.inf if p_max is None else p_max)
    if problems:
        raise ValueError("; ".join(problems))
    p = action.p * (action.w > 0)
    occ = channel.occupied[None, :]
    P = channel.interference_power()[None, :]
    C = su_subcarrier_capacity(channel.a, p, channel.a_np, P, occ)
    Rhat = secrecy_subcarrier_rate(C, channel.b, p, channel.b_np, P, occ)
    R_p = action.zeta * Rhat.sum(axis=1)
    R_o = C.sum(axis=1) - R_p

    # the PU on subcarrier m sees the (single) SU transmitting there
    p_on_m = p.sum(axis=0)
    R_pu = np.zeros(channel.num_pus)
    for k in range(channel.num_pus):
        mask = channel.owner == k
        R_pu[k] = pu_subcarrier_rate(channel.A[k, mask], channel.pu_power[k, mask],
                                     channel.a_ks[k, mask], p_on_m[mask]).sum()
    return RateOutcome(R_pu, C, Rhat, R_p, np.maximum(R_o, 0.0), float(p.sum()))
