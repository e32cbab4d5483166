import math

import numpy as np
import pytest

from cogsched.channel import ChannelModelParams, OccupancyPolicy, pu_occupancy, sample_channel
from cogsched.core import ChannelState, ControlAction
from cogsched.rates import (pu_subcarrier_rate, secrecy_subcarrier_rate, slot_rates,
                            su_subcarrier_capacity)
from tests import oracles


def test_pu_rate_examples():
    assert pu_subcarrier_rate(1.0, 1.0, 0.0, 0.0) == 1.0
    assert pu_subcarrier_rate(3.0, 1.0, 1.0, 1.0) == pytest.approx(oracles.log2p(3.0 / 2.0))
    assert pu_subcarrier_rate(3.0, 1.0, 1.0, 1.0) == pytest.approx(1.3219, abs=1e-4)
    assert pu_subcarrier_rate(3.0, 1.0, 1.0, 1.0, occupied=False) == 0.0


def test_su_capacity_examples():
    assert su_subcarrier_capacity(5.0, 0.0, 1.0, 1.0, True) == 0.0
    assert su_subcarrier_capacity(1.0, 3.0, 0.0, 0.0, False) == 2.0
    assert su_subcarrier_capacity(2.0, 1.0, 1.0, 1.0, True) == pytest.approx(1.0)


def test_secrecy_examples():
    c = su_subcarrier_capacity(3.0, 1.0, 0.0, 0.0, False)
    assert secrecy_subcarrier_rate(c, 3.0, 1.0, 0.0, 0.0, False) == 0.0
    assert secrecy_subcarrier_rate(c, 1.0, 1.0, 0.0, 0.0, False) == pytest.approx(1.0)
    c_occ = su_subcarrier_capacity(3.0, 1.0, 0.0, 1.0, True)
    val = secrecy_subcarrier_rate(c_occ, 3.0, 1.0, 1.0, 1.0, True)
    assert val == pytest.approx(2.0 - math.log2(2.5))
    assert val == pytest.approx(0.678, abs=1e-3)


def _one_su_channel(a, b):
    one = np.array([[a]])
    return ChannelState(one, np.zeros((1, 1)), np.zeros((1, 1)), np.zeros((1, 1)),
                        np.array([[b]]), np.zeros((1, 1)), np.array([-1]), np.zeros((1, 1)))


def test_zero_action_gives_zero_rates():
    ch = sample_channel(ChannelModelParams(3, 1, 4), 0, seed=0)
    out = slot_rates(ch, ControlAction.idle(3, 4))
    assert out.E == 0.0 and not out.R_o.any() and not out.R_p.any() and not out.R_pu.any()


def test_single_su_secrecy_split():
    act = ControlAction(np.array([[1.0]]), np.array([[1]]), np.array([1]),
                        *(np.zeros(1) for _ in range(4)))
    out = slot_rates(_one_su_channel(3.0, 1.0), act)
    assert out.R_p[0] == pytest.approx(1.0) and out.R_o[0] == pytest.approx(1.0)


def test_rejects_double_assignment():
    act = ControlAction(np.ones((2, 1)) * 0.1, np.ones((2, 1), dtype=int), np.zeros(2),
                        *(np.zeros(2) for _ in range(4)))
    ch = sample_channel(ChannelModelParams(2, 1, 1), 0, seed=0)
    with pytest.raises(ValueError):
        slot_rates(ch, act)


def test_matches_loop_reference_on_network_instance():
    rng = np.random.default_rng(11)
    params = ChannelModelParams(8, 1, 64)
    owner, power = pu_occupancy(OccupancyPolicy("fixed", 32), 0, np.array([3.0]), 64)
    ch = sample_channel(params, 0, seed=11, owner=owner, pu_power=power)
    users = rng.integers(0, 8, size=64)
    p = np.zeros((8, 64))
    p[users, np.arange(64)] = rng.dirichlet(np.ones(64)) * 0.9
    zeta = rng.integers(0, 2, size=8)
    act = ControlAction(p, (p > 0).astype(int), zeta, *(np.zeros(8) for _ in range(4)))
    out = slot_rates(ch, act, p_max=1.0)
    R_pu, R_o, R_p, E = oracles.rates(ch, p.tolist(), zeta.tolist())
    np.testing.assert_allclose(out.R_pu, R_pu, rtol=1e-12)
    np.testing.assert_allclose(out.R_o, R_o, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(out.R_p, R_p, rtol=1e-12, atol=1e-12)
    assert out.E == pytest.approx(E)
