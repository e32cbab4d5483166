import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogsched.channel import strongest_eavesdropper
from cogsched.core import ChannelState, ControlAction, QueueState, ScenarioConfig
from cogsched.resource_alloc import (assign_subcarriers, mps_objective, power_free_subcarrier,
                                     power_occupied_subcarrier, ps_objective, secrecy_control,
                                     solve_allocation, urgency_weights)
from tests import oracles


def make_channel(a, a_np=None, A=None, a_ks=None, owner=None, P=1.0):
    a = np.asarray(a, dtype=float)
    n, m = a.shape
    a_np = np.zeros((n, m)) if a_np is None else np.asarray(a_np, dtype=float)
    owner = np.full(m, -1) if owner is None else np.asarray(owner)
    A = np.ones((1, m)) if A is None else np.asarray(A, dtype=float).reshape(1, m)
    a_ks = np.zeros((1, m)) if a_ks is None else np.asarray(a_ks, dtype=float).reshape(1, m)
    pu_power = np.where(owner[None, :] == 0, P, 0.0)
    b, b_np, _ = strongest_eavesdropper(a, a_np)
    return ChannelState(a, A, a_ks, a_np, b, b_np, owner, pu_power)


def test_secrecy_control_examples():
    q = QueueState.zeros(1, 1)
    cfg = ScenarioConfig(num_sus=1)
    assert secrecy_control(*urgency_weights(q, cfg))[0] == 1
    assert secrecy_control([3.0], [2.0])[0] == 0
    cfg = ScenarioConfig(num_sus=1, q_max_o=200.0, q_max_p=1000.0)
    q = QueueState.build(1, 1, X_p=[100.0], Q_p=[500.0], X_o=[60.0], Q_o=[160.0])
    w_o, w_p = urgency_weights(q, cfg)
    assert (w_o[0], w_p[0]) == (48.0, 50.0)
    assert secrecy_control(w_o, w_p)[0] == 1


def test_free_power_closed_form():
    ch = make_channel([[1.0]])
    p = power_free_subcarrier(0, 0, ch, math.log(2.0), 0.0, 0, 0.5, 0.0, p_max=5.0)
    assert p == pytest.approx(1.0)
    assert power_free_subcarrier(0, 0, ch, math.log(2.0), 0.0, 0, 1e6, 0.0, p_max=5.0) == 0.0


def test_free_power_rejects_occupied():
    with pytest.raises(ValueError):
        power_free_subcarrier(0, 0, make_channel([[1.0]], owner=[0]), 1.0, 1.0, 0, 0.1, 0.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 100.0), st.floats(0.0, 1.0), st.floats(0.0, 20.0), st.floats(0.0, 20.0),
       st.integers(0, 1), st.floats(0.05, 20.0))
def test_free_power_matches_grid(a, b_frac, w_o, w_p, zeta, c):
    b = a * b_frac
    ch = make_channel([[a], [b]])
    p = power_free_subcarrier(0, 0, ch, w_o, w_p, zeta, c, 0.0, p_max=1.0)
    f = lambda x: oracles.single_objective(x, a, b, w_o, w_p, zeta, c)
    _, best = oracles.grid_argmax(f, 1.0, 10_001)
    assert f(p) >= best - 1e-6 * (1.0 + abs(best))


def test_occupied_power_protects_pu():
    ch = make_channel([[5.0]], a_np=[[0.5]], A=[30.0], a_ks=[2.0], owner=[0])
    p = power_occupied_subcarrier(0, 0, ch, 1.0, 0.0, 0, 1e9, 0.01, 0.0, p_max=1.0)
    assert p == 0.0


def test_occupied_without_pu_weight_reduces_to_free():
    a, b, a_np, b_np, P = 8.0, 3.0, 0.4, 1.3, 1.0
    occ = make_channel([[a], [b]], a_np=[[a_np], [b_np]], A=[10.0], a_ks=[1.0], owner=[0], P=P)
    free = make_channel([[a / (1 + P * a_np)], [b / (1 + P * b_np)]])
    for w_o, w_p, zeta, c in ((3.0, 5.0, 1, 0.7), (4.0, 0.0, 0, 1.2), (0.5, 9.0, 1, 0.2)):
        p_occ = power_occupied_subcarrier(0, 0, occ, w_o, w_p, zeta, 0.0, c, 0.0, p_max=1.0)
        p_free = power_free_subcarrier(0, 0, free, w_o, w_p, zeta, c, 0.0, p_max=1.0)
        assert p_occ == pytest.approx(p_free, abs=1e-5)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.5, 100.0), st.floats(0.0, 1.0), st.floats(0.0, 2.0), st.floats(0.0, 2.0),
       st.floats(1.0, 50.0), st.floats(0.0, 5.0), st.floats(0.0, 20.0), st.floats(0.0, 20.0),
       st.integers(0, 1), st.floats(0.0, 10.0), st.floats(0.05, 10.0))
def test_occupied_power_matches_fine_grid(a, b_frac, a_np, b_np, A, a_ks, w_o, w_p, zeta, pu_w, c):
    b = a * b_frac
    ch = make_channel([[a], [b]], a_np=[[a_np], [b_np]], A=[A], a_ks=[a_ks], owner=[0])
    p = power_occupied_subcarrier(0, 0, ch, w_o, w_p, zeta, pu_w, c, 0.0, p_max=1.0)
    f = lambda x: oracles.single_objective(x, a / (1 + a_np), b / (1 + b_np), w_o, w_p, zeta, c,
                                           pu_w, A, a_ks)
    _, best = oracles.grid_argmax(f, 1.0, 100_001)
    assert f(p) >= best - 1e-6 * (1.0 + abs(best))


def test_assignment_rules():
    assert assign_subcarriers(np.array([[1.0, -2.0, 0.0]])).tolist() == [[1, 1, 1]]
    assert assign_subcarriers(np.array([[3.0], [3.0]])).tolist() == [[1], [0]]
    rng = np.random.default_rng(4)
    J = rng.normal(size=(5, 40))
    w = assign_subcarriers(J)
    for m in range(40):
        col = J[:, m].tolist()
        assert w[col.index(max(col)), m] == 1 and w[:, m].sum() == 1


def test_dead_channel_allocates_nothing():
    ch = make_channel(np.zeros((2, 3)))
    q = QueueState.build(2, 1, X_o=[5, 5], Q_o=[5, 5])
    alloc = solve_allocation(ch, q, ScenarioConfig(num_sus=2, num_subcarriers=3))
    assert alloc.E == 0.0 and not alloc.p.any() and alloc.converged and alloc.iterations == 1


@pytest.mark.parametrize("Y", [0.05, 3.0])
def test_single_su_two_channels_is_water_filling(Y):
    gains = [9.0, 2.5]
    ch = make_channel([gains])
    cfg = ScenarioConfig(num_sus=1, num_subcarriers=2, q_max_o=100.0, p_max=1.0, delta_tol=1e-9,
                         max_iter=2000)
    q = QueueState.build(1, 1, X_o=[10.0], Q_o=[50.0], Y=Y)  # w_o = 5
    alloc = solve_allocation(ch, q, cfg)
    assert alloc.zeta[0] == 0
    ref, _ = oracles.waterfill(gains, 5.0, Y, 1.0)
    np.testing.assert_allclose(alloc.p[0], ref, atol=2e-4)


def _random_tiny(rng, n, m):
    a = 10.0 ** rng.uniform(-0.5, 1.5, size=(n, m))
    owner = np.where(rng.random(m) < 0.5, 0, -1)
    ch = make_channel(a, a_np=rng.uniform(0, 2, size=(n, m)), A=10.0 ** rng.uniform(0.5, 2, m),
                      a_ks=rng.uniform(0, 3, m), owner=owner)
    q = QueueState.build(n, 1, X_o=rng.uniform(0, 50, n), Q_o=rng.uniform(0, 200, n),
                         X_p=rng.uniform(0, 50, n), Q_p=rng.uniform(0, 1000, n),
                         Q_pu=[rng.uniform(0, 20)], Y=rng.uniform(0, 10))
    return ch, q


def test_tiny_instance_close_to_exhaustive():
    rng = np.random.default_rng(21)
    cfg = ScenarioConfig(num_sus=2, num_subcarriers=2, p_max=1.0)
    for _ in range(10):
        ch, q = _random_tiny(rng, 2, 2)
        alloc = solve_allocation(ch, q, cfg)
        best, _ = oracles.exhaustive_ps(ch, q, cfg.q_max_o, cfg.q_max_p, 1.0,
                                        np.linspace(0, 1, 5), alloc.zeta)
        base = oracles.ps_value(ch, q, cfg.q_max_o, cfg.q_max_p, np.zeros((2, 2)), alloc.zeta)
        assert alloc.objective - base >= 0.98 * (best - base) - 1e-9
        assert alloc.E <= 1.0


def test_objective_zero_action_and_reference():
    rng = np.random.default_rng(8)
    ch, q = _random_tiny(rng, 2, 3)
    cfg = ScenarioConfig(num_sus=2, num_subcarriers=3)
    idle = ControlAction.idle(2, 3)
    assert ps_objective(ch, q.__class__.build(2, 1), idle, cfg) == 0.0
    alloc = solve_allocation(ch, q, cfg)
    act = ControlAction(alloc.p, alloc.w, alloc.zeta, *(np.zeros(2) for _ in range(4)))
    ref = oracles.ps_value(ch, q, cfg.q_max_o, cfg.q_max_p, alloc.p.tolist(), alloc.zeta.tolist())
    assert ps_objective(ch, q, act, cfg) == pytest.approx(ref)
    assert mps_objective(ch, q, act, cfg) == pytest.approx(ref)
    assert alloc.objective == pytest.approx(ref)


def test_table_oracle_agrees_with_loop_oracle():
    rng = np.random.default_rng(3)
    cfg = ScenarioConfig(num_sus=2, num_subcarriers=2)
    grid = np.linspace(0, 1, 5)
    for _ in range(4):
        ch, q = _random_tiny(rng, 2, 2)
        zeta = solve_allocation(ch, q, cfg).zeta
        slow, _ = oracles.exhaustive_ps(ch, q, cfg.q_max_o, cfg.q_max_p, 1.0, grid, zeta)
        fast = oracles.exhaustive_ps_table(ch, q, cfg.q_max_o, cfg.q_max_p, 1.0, list(grid), zeta)
        assert fast == pytest.approx(slow, rel=1e-12)
