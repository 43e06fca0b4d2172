"""Fitness potentials, process-replicator fields and their integral curves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special
from scipy.stats import norm as normal_dist, qmc

from .geometry import (Chart, Covector, Curve, TangentVector, metric_diagonal, relative_entropy_rate,
                       sharp_array, stationary_batch)
from .machine import DfaType, Machine, stationary_array

GRADIENT_FD_STEP = 1e-6
REST_TOL = 1e-8
BOUNDARY_TOL = 1e-6
LOCAL_TOL = 1e-8


class GradientCheckFailed(ValueError):
    pass


# ---------------------------------------------------------------------------
# fitness potentials
# ---------------------------------------------------------------------------


@dataclass
class FitnessPotential:
    """A function on one face together with its differential.

    ``evaluate`` and ``gradient`` act on ambient arrays.  ``gradient`` returns
    a covector representative ``f_e``; when omitted it is obtained by central
    differences in the elimination chart.  Passing ``check_at`` validates the
    gradient against directional differences on construction.
    """

    name: str
    dfa: DfaType
    evaluate_array: Callable[[np.ndarray], float]
    gradient_array: Callable[[np.ndarray], np.ndarray] | None = None
    params: dict = field(default_factory=dict)
    check_at: Machine | None = None
    evaluate_batch: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        self._chart = Chart(self.dfa)
        self.analytic = self.gradient_array is not None
        if self.check_at is not None:
            self.check_gradient(self.check_at)

    def __call__(self, q: Machine) -> float:
        return self.evaluate(q)

    def evaluate(self, q: Machine) -> float:
        return float(self.evaluate_array(q.q))

    def gradient(self, q: Machine) -> Covector:
        return Covector(q, self.grad(q.q))

    def grad(self, q: np.ndarray) -> np.ndarray:
        if self.gradient_array is not None:
            return np.asarray(self.gradient_array(q), dtype=float)
        return self._fd_gradient(q)

    def _fd_gradient(self, q: np.ndarray) -> np.ndarray:
        chart = self._chart
        x = chart.from_ambient(q)
        h = min(GRADIENT_FD_STEP, 0.25 * float(q.min()))
        out = np.zeros(len(self.dfa.edges))
        for i, e in enumerate(chart.free):
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            out[e] = (self.evaluate_array(chart.to_ambient(xp)) - self.evaluate_array(chart.to_ambient(xm))) / (2 * h)
        return out

    def check_gradient(self, q: Machine, n_dirs: int = 10, rtol: float = 1e-4, seed: int = 0) -> float:
        """Compare ``f . v`` with a central difference of ``Phi`` along random tangent ``v``."""
        rng = np.random.default_rng(seed)
        basis = self._chart.basis
        f = self.grad(q.q)
        worst = 0.0
        for _ in range(n_dirs):
            v = basis @ rng.standard_normal(basis.shape[1])
            v /= np.max(np.abs(v))
            h = min(1e-5, 0.25 * float(q.q.min()))
            fd = (self.evaluate_array(q.q + h * v) - self.evaluate_array(q.q - h * v)) / (2 * h)
            an = float(f @ v)
            err = abs(fd - an) / max(abs(fd), abs(an), 1e-8)
            worst = max(worst, err)
        if worst > rtol:
            raise GradientCheckFailed(f"gradient of {self.name} fails directional check (relative error {worst:.2e})")
        return worst


def relent_potential(q_inf: Machine, check: bool = True) -> FitnessPotential:
    """``Phi(q) = -h(q_inf || q)`` with its analytic gradient ``pi_j(q_inf) q_inf / q``."""
    dfa = q_inf.dfa
    qi = q_inf.q
    w = stationary_array(q_inf)[dfa.edge_state] * qi

    def value(q):
        q = np.asarray(q, dtype=float)
        pos = qi > 0
        if np.any(q[pos] <= 0):
            return -math.inf
        return -float(np.sum(w[pos] * np.log(qi[pos] / q[pos])))

    def grad(q):
        return w / np.asarray(q, dtype=float)

    def batch(qs):
        qs = np.asarray(qs, dtype=float)
        pos = qi > 0
        with np.errstate(divide="ignore"):
            terms = w[pos] * (np.log(qi[pos]) - np.log(qs[..., pos]))
        return -terms.sum(axis=-1)

    return FitnessPotential("relent", dfa, value, grad, params={"q_inf": tuple(qi.tolist())},
                            check_at=Machine.uniform(dfa) if check else None, evaluate_batch=batch)


def linear_payoff_potential(dfa: DfaType, payoff, check: bool = True) -> FitnessPotential:
    """One-state linear fitness ``Phi(q) = r . q``."""
    r = np.asarray(payoff, dtype=float)
    return FitnessPotential("linear", dfa, lambda q: float(r @ q), lambda q: r.copy(),
                            params={"payoff": tuple(r.tolist())}, check_at=Machine.uniform(dfa) if check else None)


def quadratic_game_potential(dfa: DfaType, matrix, check: bool = True) -> FitnessPotential:
    """Symmetric game potential ``Phi(q) = 1/2 q^T R q``."""
    r = np.asarray(matrix, dtype=float)
    r = 0.5 * (r + r.T)
    return FitnessPotential("quadratic", dfa, lambda q: 0.5 * float(q @ r @ q), lambda q: r @ q,
                            params={"matrix": r.tolist()}, check_at=Machine.uniform(dfa) if check else None)


def constant_potential(dfa: DfaType, value: float = 0.0) -> FitnessPotential:
    return FitnessPotential("constant", dfa, lambda q: value, lambda q: np.zeros(len(dfa.edges)))


# ---------------------------------------------------------------------------
# vector fields
# ---------------------------------------------------------------------------


def _replicator_array(dfa: DfaType, q: np.ndarray, f: np.ndarray, pi: np.ndarray | None = None) -> np.ndarray:
    if pi is None:
        pi = stationary_batch(dfa, q)
    return sharp_array(dfa, q, f, pi)


def replicator_field(q: Machine, phi: FitnessPotential) -> TangentVector:
    """``qdot^{j,a} = (q^{j,a}/pi_j)(f_{j,a} - fbar_j)``."""
    if q.is_boundary:
        raise ValueError("replicator field needs an interior machine")
    return TangentVector(q, _replicator_array(q.dfa, q.q, phi.grad(q.q), stationary_array(q)))


def relent_replicator_field(q: Machine, q_inf: Machine) -> TangentVector:
    """``qdot^{j,a} = (pi_j(q_inf)/pi_j(q)) (q_inf^{j,a} - q^{j,a})``."""
    if q.dfa != q_inf.dfa:
        raise ValueError("machines live on different DFA-types")
    if q.is_boundary or q_inf.is_boundary:
        raise ValueError("relative-entropy field needs interior machines")
    ratio = stationary_array(q_inf) / stationary_array(q)
    return TangentVector(q, ratio[q.dfa.edge_state] * (q_inf.q - q.q))


def _g_norm(dfa: DfaType, q: np.ndarray, v: np.ndarray) -> float:
    return math.sqrt(float(np.sum(metric_diagonal(q, dfa) * v * v)))


def alpha(N: int) -> float:
    """Expected maximum of ``N`` independent standard normal variables.

    Evaluated as ``N 2^{2-N}/sqrt(2 pi) sum_l C(N-1, 2l-1) int x e^{-x^2} erf(x)^{2l-1} dx``
    over the real line by adaptive Gauss-Kronrod quadrature (the integrand is
    even, so twice the half-line integral is used).
    """
    N = int(N)
    if N < 1:
        raise ValueError("N must be at least 1")
    if N > 64:
        raise ValueError("alpha is only evaluated for N <= 64")
    if N == 1:
        return 0.0
    total = 0.0
    for l in range(1, N // 2 + 1):
        k = 2 * l - 1
        val, _ = integrate.quad(lambda x: x * math.exp(-x * x) * special.erf(x) ** k, 0.0, np.inf,
                                epsabs=1e-14, epsrel=1e-13, limit=200)
        total += math.comb(N - 1, k) * 2.0 * val
    return N * 2.0 ** (2 - N) / math.sqrt(2 * math.pi) * total


def asymptotic_gwf_field(q: Machine, phi: FitnessPotential, N: int, beta: float) -> TangentVector:
    """``(alpha(N)/sqrt(beta)) grad Phi / |grad Phi|_g``."""
    if N < 2:
        raise ValueError("N must be at least 2")
    if beta <= 0:
        raise ValueError("beta must be positive")
    grad = replicator_field(q, phi).components
    nrm = _g_norm(q.dfa, q.q, grad)
    if nrm <= 1e-10:
        raise ValueError(f"gradient vanishes at q (|grad|_g = {nrm:.3e}); field undefined")
    return TangentVector(q, alpha(N) / math.sqrt(beta) * grad / nrm)


# ---------------------------------------------------------------------------
# flows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VectorField:
    """Named field on ambient arrays; ``rest`` reports whether a rest point is reached."""

    name: str
    dfa: DfaType
    func: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)
    rest: Callable[[np.ndarray], bool] | None = None


def make_field(kind: str, dfa: DfaType, phi: FitnessPotential | None = None, q_inf: Machine | None = None,
               N: int = 2, beta: float | None = None) -> VectorField:
    """Build one of ``replicator``, ``relent`` or ``gwf`` as an ambient-array field."""
    if kind == "zero":
        return VectorField("zero", dfa, lambda q: np.zeros_like(q))
    if kind == "relent":
        if q_inf is None:
            raise ValueError("relent field needs q_inf")
        pi_inf = stationary_array(q_inf)
        qi = q_inf.q

        def f(q):
            pi = stationary_batch(dfa, q)
            return (pi_inf / pi)[dfa.edge_state] * (qi - q)

        return VectorField("relent", dfa, f, {"q_inf": tuple(qi.tolist())})
    if phi is None:
        if q_inf is None:
            raise ValueError(f"{kind} field needs a potential or q_inf")
        phi = relent_potential(q_inf)
    if kind == "replicator":
        return VectorField("replicator", dfa, lambda q: _replicator_array(dfa, q, phi.grad(q)),
                           {"phi": phi.name, **phi.params})
    if kind == "gwf":
        beta = alpha(N) ** 2 if beta is None else float(beta)
        speed = alpha(N) / math.sqrt(beta)

        def grad_g(q):
            return _replicator_array(dfa, q, phi.grad(q))

        def f(q):
            gv = grad_g(q)
            nrm = _g_norm(dfa, q, gv)
            if nrm <= 1e-300:
                return np.zeros_like(q)
            return speed * gv / nrm

        def rest(q):
            return _g_norm(dfa, q, grad_g(q)) < REST_TOL

        return VectorField("gwf", dfa, f, {"phi": phi.name, "N": N, "beta": beta, **phi.params}, rest)
    raise ValueError(f"unknown field kind {kind!r}")


@dataclass(frozen=True)
class FlowCurve:
    curve: Curve
    field: str
    params: dict
    termination: str
    stats: dict
    extra: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.curve.times

    @property
    def points(self) -> np.ndarray:
        return self.curve.points

    def meta(self) -> dict:
        out = {"field": self.field, "termination": self.termination}
        out.update({k: v for k, v in self.params.items()})
        out.update(self.stats)
        return out


def _rk4(func, y, h, stages: list | None = None):
    k1 = func(y)
    k2 = func(y + 0.5 * h * k1)
    k3 = func(y + 0.5 * h * k2)
    k4 = func(y + h * k3)
    if stages is not None:
        stages.extend((k1, k2, k3, k4))
    return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_flow(field: VectorField, q0: Machine, t_end: float, dt: float, tol: float = LOCAL_TOL,
                   boundary_tol: float = BOUNDARY_TOL, max_steps: int = 200000) -> FlowCurve:
    """RK4 with step doubling.  Stops at ``t_end``, near the boundary, or at a rest point."""
    if q0.is_boundary:
        raise ValueError("flow needs an interior starting point")
    if field.dfa != q0.dfa:
        raise ValueError("field and start point live on different DFA-types")
    dfa = field.dfa
    func = field.func
    y = q0.q.copy()
    t = 0.0
    h = float(dt)
    ts, ys = [0.0], [y.copy()]
    reason = "t_end"
    accepted = rejected = 0
    min_h = 1e-14 * max(1.0, abs(t_end))

    def project(v):
        # keep rows summing to one exactly despite rounding
        s = np.bincount(dfa.edge_state, weights=v, minlength=dfa.n_states)
        cnt = np.bincount(dfa.edge_state, minlength=dfa.n_states)
        return v - ((s - 1.0) / cnt)[dfa.edge_state]

    if field.rest is not None and field.rest(y):
        reason = "rest"
    else:
        while t < t_end - 1e-15 * max(1.0, t_end):
            if accepted + rejected > max_steps:
                reason = "max_steps"
                break
            h = min(h, t_end - t)
            try:
                stages: list = []
                full = _rk4(func, y, h, stages)
                half = _rk4(func, _rk4(func, y, 0.5 * h, stages), 0.5 * h, stages)
                err = float(np.max(np.abs(half - full))) / 15.0
                ok = bool(np.all(np.isfinite(half)) and np.all(half > 0))
                if ok and field.rest is not None:
                    # a stage pointing backwards means the step straddles a rest point
                    ok = min(float(stages[0] @ k) for k in stages) > 0
            except (np.linalg.LinAlgError, FloatingPointError, ValueError):
                ok, err = False, math.inf
            if ok and err <= tol:
                y = project(half + (half - full) / 15.0)
                if np.any(y <= 0):
                    y = project(half)
                t += h
                ts.append(t)
                ys.append(y.copy())
                accepted += 1
                if np.any(y < boundary_tol):
                    reason = "boundary"
                    break
                if field.rest is not None and field.rest(y):
                    reason = "rest"
                    break
                grow = 2.0 if err < tol / 32 else 1.0
                h = min(h * grow, float(dt))
            else:
                rejected += 1
                h *= 0.5
                if h < min_h:
                    reason = "step_underflow"
                    break
    curve = Curve(dfa, np.array(ts), np.array(ys))
    stats = {"accepted_steps": accepted, "rejected_steps": rejected, "dt": dt, "t_final": ts[-1]}
    return FlowCurve(curve, field.name, dict(field.params), reason, stats)


# ---------------------------------------------------------------------------
# stability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    worst_margin: float
    worst_point: np.ndarray
    samples: int

    def __bool__(self) -> bool:
        return self.stable


def _orthonormal_frame(q: Machine) -> np.ndarray:
    """Columns: ambient tangent vectors orthonormal for g at q."""
    chart = Chart(q.dfa)
    b = chart.basis
    gmat = b.T @ (metric_diagonal(q)[:, None] * b)
    l = np.linalg.cholesky(gmat)
    return b @ np.linalg.inv(l).T


def stability_check(q: Machine, phi: FitnessPotential, radius: float, samples: int = 512,
                    seed: int = 0, row_tol: float = 1e-14) -> StabilityReport:
    """Sampled test of ``sum_a q^{j,a} f_{j,a}(q') > fbar_j(q')`` on a g-ball around ``q``.

    For rows where ``q'`` agrees with ``q`` (including single-edge states)
    both sides coincide, so only non-negativity is demanded there.  The
    ball is covered with scrambled Sobol points mapped to uniform radii.
    """
    if q.is_boundary:
        raise ValueError("stability check needs an interior machine")
    dfa = q.dfa
    frame = _orthonormal_frame(q)
    d = frame.shape[1]
    if d == 0:
        return StabilityReport(True, math.inf, q.q.copy(), 0)
    sob = qmc.Sobol(d + 1, scramble=True, seed=seed)
    u = sob.random(samples)
    u = np.clip(u, 1e-12, 1 - 1e-12)
    dirs = normal_dist.ppf(u[:, :d])
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    radii = radius * u[:, d] ** (1.0 / d)
    worst = math.inf
    worst_pt = q.q.copy()
    stable = True
    for dvec, r in zip(dirs, radii):
        qp = q.q + r * (frame @ dvec)
        if np.any(qp <= 0):
            continue
        f = phi.grad(qp)
        lhs = np.bincount(dfa.edge_state, weights=q.q * f, minlength=dfa.n_states)
        rhs = np.bincount(dfa.edge_state, weights=qp * f, minlength=dfa.n_states)
        diff = np.bincount(dfa.edge_state, weights=np.abs(qp - q.q), minlength=dfa.n_states)
        margins = lhs - rhs
        moved = diff > row_tol
        if np.any(moved):
            m = float(margins[moved].min())
            if m <= 0:
                stable = False
        else:
            continue
        if np.any(margins[~moved] < -1e-12):
            stable = False
            m = min(m, float(margins[~moved].min()))
        if m < worst:
            worst, worst_pt = m, qp
    return StabilityReport(stable, worst, worst_pt, samples)


def lyapunov_values(flow: FlowCurve, q_inf: Machine) -> np.ndarray:
    """``h(q_inf || q(t))`` along a flow curve."""
    return np.array([relative_entropy_rate(q_inf, flow.curve.machine(i)) for i in range(len(flow.curve))])
