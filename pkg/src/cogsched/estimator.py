"""CBS-side estimate of the PU backlogs for the estimated-queue variant."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EstimatorState:
    Qhat: np.ndarray
    iota: float = 0.0

    def __post_init__(self) -> None:
        if self.iota < 0:
            raise ValueError("iota must be nonnegative")
        if np.any(np.asarray(self.Qhat) < 0):
            raise ValueError("estimates must be nonnegative")

    @classmethod
    def initial(cls, num_pus: int, iota: float) -> "EstimatorState":
        return cls(np.zeros(num_pus), iota)


def update_estimate(state: EstimatorState, R_pu, pu_idle, lambda_pu) -> EstimatorState:
    """Advance the estimate by one slot.

    A busy PU is assumed to receive ``lambda + iota`` packets; an idle PU is
    observed directly, so its estimate snaps to zero.
    """
    nxt = np.maximum(np.asarray(state.Qhat, dtype=float) - R_pu, 0.0) + np.asarray(lambda_pu) + state.iota
    nxt = np.where(np.asarray(pu_idle, dtype=bool), 0.0, nxt)
    return EstimatorState(nxt, state.iota)
