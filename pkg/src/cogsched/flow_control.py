"""Admission control for actual and virtual traffic.

Each rule minimizes a linear function of the admitted amount over
``[0, D]``, so the solution is all-or-nothing. A score of exactly zero blocks.
"""

from __future__ import annotations

import numpy as np

from .core import ScenarioConfig


def actual_admission(Q_o, Q_p, D_o, D_p, cfg: ScenarioConfig):
    """Admit everything unless the backlog is within one max-batch of its cap."""
    T_o = np.where(np.asarray(Q_o) - cfg.q_max_o + cfg.mu_max >= 0, 0.0, D_o)
    T_p = np.where(np.asarray(Q_p) - cfg.q_max_p + cfg.d_max >= 0, 0.0, D_p)
    return T_o, T_p


def virtual_admission(X_o, X_p, Z, D_o, D_p, cfg: ScenarioConfig):
    score_o = ((cfg.q_max_o - cfg.mu_max) / cfg.q_max_o * np.asarray(X_o)
               - cfg.vec("rho") * np.asarray(Z) - cfg.v * cfg.vec("phi"))
    score_p = (cfg.q_max_p - cfg.d_max) / cfg.q_max_p * np.asarray(X_p) - cfg.v * cfg.vec("theta")
    mu_o = np.where(score_o >= 0, 0.0, D_o)
    mu_p = np.where(score_p >= 0, 0.0, D_p)
    return mu_o, mu_p
