from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from causalgeom.dynamics import (
    FitnessPotential,
    GradientCheckFailed,
    alpha,
    asymptotic_gwf_field,
    integrate_flow,
    linear_payoff_potential,
    lyapunov_values,
    make_field,
    quadratic_game_potential,
    relent_potential,
    relent_replicator_field,
    replicator_field,
    stability_check,
)
from causalgeom.figures import nemo_dfa
from causalgeom.geometry import metric_diagonal, norm
from causalgeom.machine import Alphabet, DfaType, Machine
from causalgeom.validate import random_interior

TERN = DfaType.from_code("111", Alphabet.of_size(3))
T2121 = DfaType.from_code("2121", Alphabet.of_size(2))
Q_INF = Machine.from_array(TERN, [0.2, 0.6, 0.2])
Q_START = Machine.from_array(TERN, [0.6, 0.2, 0.2])


def test_alpha_closed_forms():
    assert alpha(1) == 0.0
    assert alpha(2) == pytest.approx(1 / math.sqrt(math.pi), abs=1e-10)
    assert alpha(3) == pytest.approx(3 / (2 * math.sqrt(math.pi)), abs=1e-10)


def test_alpha_tabulated_values():
    # expected maxima of 5 and 10 standard normals, computed by direct quadrature of
    # N x phi(x) Phi(x)^(N-1) and frozen
    assert alpha(5) == pytest.approx(1.1629644736405196, abs=1e-9)
    assert alpha(10) == pytest.approx(1.5387527308351729, abs=1e-9)


def test_alpha_matches_order_statistic_density():
    from scipy.stats import norm as nd

    for n in (4, 7):
        ref = integrate.quad(lambda x: n * x * nd.pdf(x) * nd.cdf(x) ** (n - 1), -np.inf, np.inf)[0]
        assert alpha(n) == pytest.approx(ref, abs=1e-9)


def test_alpha_rejects_bad_n():
    with pytest.raises(ValueError):
        alpha(0)


def test_relent_gradient_analytic_matches_differences():
    rng = np.random.default_rng(0)
    q_inf = random_interior(nemo_dfa(), rng)
    phi = relent_potential(q_inf)
    q = random_interior(nemo_dfa(), rng)
    assert phi.check_gradient(q) < 1e-6


def test_wrong_gradient_is_rejected():
    with pytest.raises(GradientCheckFailed):
        FitnessPotential("bad", TERN, lambda q: float(q[0] ** 2), lambda q: np.array([1.0, 0.0, 0.0]),
                         check_at=Machine.uniform(TERN))


def test_finite_difference_gradient_fallback():
    phi = FitnessPotential("sq", TERN, lambda q: float(q[0] ** 2 + q[1]))
    q = Machine.from_array(TERN, [0.3, 0.3, 0.4])
    f = phi.grad(q.q)
    # chart derivative along e_0 - e_2 and e_1 - e_2
    assert f[0] - f[2] == pytest.approx(0.6, abs=1e-6)
    assert f[1] - f[2] == pytest.approx(1.0, abs=1e-6)


def test_relent_replicator_equals_generic_replicator():
    rng = np.random.default_rng(3)
    for d in (T2121, nemo_dfa()):
        q_inf, q = random_interior(d, rng), random_interior(d, rng)
        a = relent_replicator_field(q, q_inf).components
        b = replicator_field(q, relent_potential(q_inf)).components
        assert np.allclose(a, b, atol=1e-12)


def test_replicator_classical_one_state():
    r = np.array([1.0, 2.0, 4.0])
    q = Machine.from_array(TERN, [0.5, 0.3, 0.2])
    v = replicator_field(q, linear_payoff_potential(TERN, r)).components
    assert np.allclose(v, q.q * (r - q.q @ r))


def test_gwf_field_has_constant_speed():
    rng = np.random.default_rng(8)
    phi = relent_potential(Q_INF)
    for _ in range(3):
        q = random_interior(TERN, rng)
        v = asymptotic_gwf_field(q, phi, 3, alpha(3) ** 2)
        assert norm(q, v) == pytest.approx(1.0, rel=1e-12)
        v2 = asymptotic_gwf_field(q, phi, 2, 0.25)
        assert norm(q, v2) == pytest.approx(alpha(2) / 0.5, rel=1e-12)
    with pytest.raises(ValueError):
        asymptotic_gwf_field(Q_INF, phi, 2, 1.0)


def _segment_length(p, p2):
    def speed(t):
        c = (1 - t) * p + t * p2
        return math.sqrt(float(np.sum((p2 - p) ** 2 / c)))

    return integrate.quad(speed, 0, 1, epsabs=1e-12)[0]


def test_one_state_gwf_flow_is_unit_speed_segment():
    flow = integrate_flow(make_field("gwf", TERN, q_inf=Q_INF, N=2), Q_START, 10.0, 0.01)
    assert flow.termination == "rest"
    assert flow.times[-1] == pytest.approx(_segment_length(Q_START.q, Q_INF.q), abs=1e-4)
    d = Q_INF.q - Q_START.q
    rel = flow.points - Q_START.q
    cross = rel[:, 0] * d[1] - rel[:, 1] * d[0]
    assert np.max(np.abs(cross)) < 1e-10
    assert np.allclose(flow.points[-1], Q_INF.q, atol=1e-7)


def test_relent_flow_converges_and_lyapunov_decreases():
    rng = np.random.default_rng(6)
    q_inf, q0 = random_interior(nemo_dfa(), rng), random_interior(nemo_dfa(), rng)
    flow = integrate_flow(make_field("relent", q0.dfa, q_inf=q_inf), q0, 20.0, 0.05)
    lv = lyapunov_values(flow, q_inf)
    assert np.all(np.diff(lv) <= 1e-12)
    assert lv[-1] < 1e-6 * lv[0]


def test_flow_stops_at_boundary():
    phi = linear_payoff_potential(TERN, [0.0, 0.0, 1.0])
    flow = integrate_flow(make_field("replicator", TERN, phi), Machine.uniform(TERN), 100.0, 0.05)
    assert flow.termination == "boundary"
    assert flow.points[-1, 2] > 0.99


def test_flow_rejects_boundary_start():
    with pytest.raises(ValueError):
        integrate_flow(make_field("relent", TERN, q_inf=Q_INF), Machine.from_array(TERN, [0.5, 0.5, 0.0]), 1, 0.1)


def test_stability_at_relent_maximum():
    rep = stability_check(Q_INF, relent_potential(Q_INF), radius=0.3, samples=256)
    assert rep.stable
    q_nemo = Machine.from_coordinates(nemo_dfa(), [0.2, 0.6])
    assert stability_check(q_nemo, relent_potential(q_nemo), radius=0.2, samples=256).stable


def test_stability_fails_away_from_maximum():
    q = Machine.from_array(TERN, [0.4, 0.4, 0.2])
    assert not stability_check(q, relent_potential(Q_INF), radius=0.2, samples=256).stable


def test_quadratic_game_gradient():
    r = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.0], [2.0, 1.0, 0.0]])
    phi = quadratic_game_potential(TERN, r)
    q = Machine.from_array(TERN, [0.2, 0.3, 0.5])
    assert np.allclose(phi.grad(q.q), r @ q.q)


def test_gwf_field_rest_detection():
    fld = make_field("gwf", T2121, q_inf=Machine.from_coordinates(T2121, [0.2, 0.6]))
    assert fld.rest(Machine.from_coordinates(T2121, [0.2, 0.6]).q)
    q = Machine.from_coordinates(T2121, [0.3, 0.7]).q
    assert not fld.rest(q)
    v = fld.func(q)
    assert math.sqrt(float(np.sum(metric_diagonal(q, T2121) * v * v))) == pytest.approx(1.0)
