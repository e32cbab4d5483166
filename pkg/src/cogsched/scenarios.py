"""Named scenario presets.

``multi_su`` is the eight-user, 64-subcarrier network used for the queue
and constraint checks. ``single_su_v`` and ``single_su_weights`` are the
one-user networks used for the control-parameter and weight sweeps. The
arrival bounds of the single-user presets are raised so that the large open
arrival rates stay admissible.
"""

from __future__ import annotations

import numpy as np

from .core import ScenarioConfig


def multi_su(**changes) -> ScenarioConfig:
    n = np.arange(1, 9)
    base = ScenarioConfig(num_sus=8, num_subcarriers=64, num_pus=1, slot_count=4500, v=50.0,
                          theta=1.0, phi=0.8, lambda_o=tuple(5.0 * n), lambda_p=tuple(2.0 * n))
    return base.replace(**changes) if changes else base


def single_su_v(**changes) -> ScenarioConfig:
    base = ScenarioConfig(num_sus=1, num_subcarriers=64, num_pus=1, slot_count=1500, v=380.0,
                          theta=1.0, phi=0.8, lambda_o=250.0, lambda_p=10.0,
                          mu_max=500.0, q_max_o=1000.0, d_max=20.0, q_max_p=1000.0)
    return base.replace(**changes) if changes else base


def single_su_weights(**changes) -> ScenarioConfig:
    base = single_su_v(lambda_o=260.0, lambda_p=8.0, phi=450.0, theta=450.0)
    return base.replace(**changes) if changes else base


PRESETS = {"multi-su": multi_su, "single-su-v": single_su_v, "single-su-weights": single_su_weights}


def preset(name: str, **changes) -> ScenarioConfig:
    try:
        return PRESETS[name](**changes)
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
