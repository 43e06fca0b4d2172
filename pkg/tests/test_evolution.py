from __future__ import annotations

import math
from fractions import Fraction as F

import numpy as np
import pytest

from causalgeom.dynamics import alpha, make_field, relent_potential
from causalgeom.evolution import (
    AllOffspringDegenerate,
    EmpiricalMachine,
    GwfConfig,
    _batched_selection,
    empirical_machine,
    expectation_trajectory,
    gwf_step,
    offspring_arrays,
    run_gwf_chain,
)
from causalgeom.machine import Alphabet, DfaType, Machine

TERN = DfaType.from_code("111", Alphabet.of_size(3))
T2121 = DfaType.from_code("2121", Alphabet.of_size(2))
Q_INF = Machine.from_array(TERN, [0.2, 0.6, 0.2])


def test_empirical_machine_from_edges():
    em = empirical_machine(T2121, [(0, 1), (0, 0), (1, 0), (1, 1), (0, 1)])
    assert em.counts == (1, 2, 1, 1)
    assert em.length == 5
    assert em.probs == (F(1, 3), F(2, 3), F(1, 2), F(1, 2))
    assert not em.is_degenerate


def test_empirical_machine_unvisited_state():
    em = empirical_machine(T2121, [(0, 1), (0, 1)])
    assert em.unvisited == (1,)
    assert em.probs[2] is None and em.is_degenerate
    parent = Machine(T2121, (F(1, 5), F(4, 5), F(3, 5), F(2, 5)))
    assert em.to_machine(parent).probs == (0, 1, F(3, 5), F(2, 5))
    with pytest.raises(ValueError):
        em.to_machine()


def test_empirical_machine_rejects_broken_sequence():
    with pytest.raises(ValueError):
        empirical_machine(T2121, [(0, 0), (0, 1)])
    with pytest.raises(ValueError):
        EmpiricalMachine(T2121, (1, 2, 3))


def test_offspring_arrays_inherit_parent():
    parent = np.array([0.2, 0.8, 0.6, 0.4])
    counts = np.array([[1, 3, 0, 0], [2, 2, 1, 3]])
    probs, missing = offspring_arrays(T2121, counts, parent)
    assert np.allclose(probs[0], [0.25, 0.75, 0.6, 0.4])
    assert np.allclose(probs[1], [0.5, 0.5, 0.25, 0.75])
    assert missing.tolist() == [True, False]


def test_config_defaults_and_validation():
    cfg = GwfConfig(L=400, N=3, phi=relent_potential(Q_INF))
    assert cfg.beta_value == pytest.approx(alpha(3) ** 2)
    assert cfg.step == pytest.approx(alpha(3) / 20.0)
    assert GwfConfig(L=400, N=3, phi=relent_potential(Q_INF), tau=0.1).step == 0.1
    with pytest.raises(ValueError):
        GwfConfig(L=400, N=1, phi=relent_potential(Q_INF))
    with pytest.raises(ValueError):
        GwfConfig(L=400, N=2, phi=relent_potential(Q_INF), degenerate_policy="drop")


def test_gwf_step_selects_the_fittest():
    cfg = GwfConfig(L=200, N=5, phi=relent_potential(Q_INF))
    q, fit, offs = gwf_step(Machine.from_array(TERN, [0.6, 0.2, 0.2]), cfg, np.random.default_rng(1))
    assert offs.shape == (5,)
    assert fit == offs.max()
    assert cfg.phi.evaluate(q) == pytest.approx(fit)


def test_chain_is_reproducible():
    cfg = GwfConfig(L=100, N=3, phi=relent_potential(Q_INF), generations=6, seed=42)
    q0 = Machine.from_array(TERN, [0.6, 0.2, 0.2])
    a, b = run_gwf_chain(q0, cfg), run_gwf_chain(q0, cfg)
    assert len(a) == 7
    assert all(np.array_equal(x, y) for x, y in zip(a.points, b.points))
    c = run_gwf_chain(q0, GwfConfig(L=100, N=3, phi=relent_potential(Q_INF), generations=6, seed=43))
    assert not all(np.array_equal(x, y) for x, y in zip(a.points, c.points))


def test_reject_resample_gives_full_offspring():
    q = Machine.from_array(T2121, [0.05, 0.95, 0.6, 0.4])
    phi = relent_potential(Machine.from_array(T2121, [0.2, 0.8, 0.6, 0.4]))
    cfg = GwfConfig(L=6, N=4, phi=phi, degenerate_policy="reject-resample")
    sel = _batched_selection(q, cfg, np.random.default_rng(0), 200)
    assert np.all(np.isfinite(sel))
    assert np.allclose(sel[:, 0] + sel[:, 1], 1.0) and np.allclose(sel[:, 2] + sel[:, 3], 1.0)


def test_reject_resample_gives_up():
    q = Machine.from_array(T2121, [0.0005, 0.9995, 0.6, 0.4])
    phi = relent_potential(Machine.from_array(T2121, [0.2, 0.8, 0.6, 0.4]))
    cfg = GwfConfig(L=2, N=8, phi=phi, degenerate_policy="reject-resample")
    with pytest.raises(AllOffspringDegenerate):
        gwf_step(q, cfg, np.random.default_rng(0))


def test_mean_displacement_follows_asymptotic_field():
    q = Machine.from_array(TERN, [0.6, 0.2, 0.2])
    cfg = GwfConfig(L=1000, N=2, phi=relent_potential(Q_INF))
    sel = _batched_selection(q, cfg, np.random.default_rng(3), 40000)
    disp = sel.mean(axis=0) - q.q
    pred = cfg.step * make_field("gwf", TERN, q_inf=Q_INF, N=2).func(q.q)
    cos = disp @ pred / (np.linalg.norm(disp) * np.linalg.norm(pred))
    assert cos > 0.99
    assert np.linalg.norm(disp) == pytest.approx(np.linalg.norm(pred), rel=0.05)


def test_expectation_trajectory_shape_and_errors():
    q0 = Machine.from_array(TERN, [0.6, 0.2, 0.2])
    cfg = GwfConfig(L=500, N=2, phi=relent_potential(Q_INF), generations=5, mc_runs=200, seed=7)
    flow = expectation_trajectory(q0, cfg)
    assert flow.points.shape == (6, 3)
    assert np.allclose(flow.times, cfg.step * np.arange(6))
    se = flow.extra["se"]
    assert np.all(se[0] == 0) and np.all(se[1:] > 0)
    assert flow.params["tau"] == pytest.approx(math.sqrt(alpha(2) ** 2 / 500))
    with pytest.raises(ValueError):
        expectation_trajectory(q0, GwfConfig(L=500, N=2, phi=relent_potential(Q_INF), mc_runs=1))
