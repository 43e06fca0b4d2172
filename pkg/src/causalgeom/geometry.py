"""Relative entropy rate, the entropy rate metric, and geodesics on a configuration face.

Ambient coordinates are the edge probabilities ``q[e]`` for ``e`` in
``dfa.edges``.  For ODE work a :class:`Chart` drops the last edge of every
state; tangent vectors are recovered in ambient form through
:func:`causalgeom.machine.tangent_basis`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .machine import DfaType, Machine, stationary_array, tangent_basis

TANGENT_TOL = 1e-12
FD_STEP = 1e-5
ENDPOINT_TOL = 1e-8


class GeodesicFailure(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (best residual {residual:.3e})")
        self.residual = residual


def _require_interior(q: np.ndarray, what: str = "point"):
    if np.any(q <= 0):
        raise ValueError(f"{what} is not strictly interior (min coordinate {q.min():.3e})")


def _check_same_face(a: Machine, b: Machine):
    if a.dfa != b.dfa:
        raise ValueError("machines live on different DFA-types")


# ---------------------------------------------------------------------------
# vectors and curves
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TangentVector:
    base: Machine
    components: np.ndarray

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=float).copy()
        if comp.shape != (len(self.base.dfa.edges),):
            raise ValueError("tangent vector has the wrong number of components")
        sums = np.bincount(self.base.dfa.edge_state, weights=comp, minlength=self.base.dfa.n_states)
        scale = max(1.0, float(np.abs(comp).max(initial=0.0)))
        if np.max(np.abs(sums)) > TANGENT_TOL * scale:
            raise ValueError(f"tangent vector rows do not sum to zero (max {np.abs(sums).max():.3e})")
        comp.setflags(write=False)
        object.__setattr__(self, "components", comp)

    def __add__(self, other: "TangentVector") -> "TangentVector":
        return TangentVector(self.base, self.components + other.components)

    def __mul__(self, s: float) -> "TangentVector":
        return TangentVector(self.base, self.components * s)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Covector:
    """Per-edge coefficients, defined up to adding a constant on each state's edges."""

    base: Machine
    components: np.ndarray

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=float).copy()
        if comp.shape != (len(self.base.dfa.edges),):
            raise ValueError("covector has the wrong number of components")
        comp.setflags(write=False)
        object.__setattr__(self, "components", comp)

    def pair(self, v: TangentVector) -> float:
        return float(self.components @ v.components)


@dataclass(frozen=True)
class Curve:
    """Sampled curve on one face: ``times`` (strictly increasing) and ambient ``points``."""

    dfa: DfaType
    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        p = np.asarray(self.points, dtype=float)
        if p.ndim != 2 or p.shape[0] != t.size or p.shape[1] != len(self.dfa.edges):
            raise ValueError("curve samples have inconsistent shapes")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("curve times must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", p)

    def __len__(self) -> int:
        return self.times.size

    def machine(self, i: int) -> Machine:
        return Machine.from_array(self.dfa, self.points[i])

    @property
    def start(self) -> Machine:
        return self.machine(0)

    @property
    def end(self) -> Machine:
        return self.machine(-1)

    @classmethod
    def from_function(cls, dfa: DfaType, func: Callable[[float], np.ndarray], n: int,
                      t0: float = 0.0, t1: float = 1.0) -> "Curve":
        ts = np.linspace(t0, t1, n + 1)
        return cls(dfa, ts, np.array([np.asarray(func(t), dtype=float) for t in ts]))


# ---------------------------------------------------------------------------
# vectorised stationary distribution (internal fast path)
# ---------------------------------------------------------------------------


def stationary_batch(dfa: DfaType, qs: np.ndarray) -> np.ndarray:
    """Stationary distributions for a stack of ambient points, shape ``(..., n)``."""
    qs = np.asarray(qs, dtype=float)
    n = dfa.n_states
    lead = qs.shape[:-1]
    flat = qs.reshape(-1, qs.shape[-1])
    if n == 1:
        return np.ones(lead + (1,))
    mats = np.zeros((flat.shape[0], n, n))
    for e, (j, k) in enumerate(zip(dfa.edge_state, dfa.edge_target)):
        mats[:, j, k] += flat[:, e]
    a = np.swapaxes(np.eye(n) - mats, 1, 2)
    a[:, -1, :] = 1.0
    b = np.zeros((flat.shape[0], n, 1))
    b[:, -1, 0] = 1.0
    return np.linalg.solve(a, b)[..., 0].reshape(lead + (n,))


def metric_diagonal(q: Machine | np.ndarray, dfa: DfaType | None = None) -> np.ndarray:
    """Diagonal coefficients ``pi_j / q^{j,a}`` of the metric in ambient coordinates."""
    if isinstance(q, Machine):
        dfa, arr = q.dfa, q.q
        pi = stationary_array(q)
    else:
        arr = np.asarray(q, dtype=float)
        pi = stationary_batch(dfa, arr)
    return pi[..., dfa.edge_state] / arr


# ---------------------------------------------------------------------------
# relative entropy and entropy rates
# ---------------------------------------------------------------------------


def relative_entropy_rate(q_target: Machine, q_base: Machine) -> float:
    """``sum_j pi_j(q') sum_a q'^{j,a} log(q'^{j,a} / q^{j,a})``.

    Zero target entries contribute zero (continuous extension).  A zero base
    entry under a positive target entry returns ``math.inf``.
    """
    _check_same_face(q_target, q_base)
    qt, qb = q_target.q, q_base.q
    pos = qt > 0
    if np.any(qb[pos] <= 0):
        return math.inf
    pi = stationary_array(q_target)
    # q' log(q'/q) - q' + q: same row sums, but every term is O((q'-q)^2)
    terms = qb.copy()
    terms[pos] = qb[pos] * _xlogx_excess((qt[pos] - qb[pos]) / qb[pos])
    val = float(np.sum(pi[q_target.dfa.edge_state] * terms))
    return max(val, 0.0)


def _xlogx_excess(x: np.ndarray) -> np.ndarray:
    """``(1 + x) log(1 + x) - x`` without cancellation for small ``|x|``."""
    x = np.asarray(x, dtype=float)
    out = (1.0 + x) * np.log1p(x) - x
    small = np.abs(x) < 1e-2
    if np.any(small):
        xs = x[small]
        series = np.zeros_like(xs)
        for n in range(9, 1, -1):
            series = series * xs + (-1.0) ** n / (n * (n - 1))
        out[small] = series * xs * xs
    return out


def entropy_rate(m: Machine) -> float:
    q = m.q
    pi = stationary_array(m)
    pos = q > 0
    return float(-np.sum(pi[m.dfa.edge_state][pos] * q[pos] * np.log(q[pos])))


# ---------------------------------------------------------------------------
# metric, index raising
# ---------------------------------------------------------------------------


def metric_apply(q: Machine, v: TangentVector, w: TangentVector) -> float:
    _require_interior(q.q)
    return float(np.sum(metric_diagonal(q) * v.components * w.components))


def norm(q: Machine, v: TangentVector) -> float:
    return math.sqrt(max(metric_apply(q, v, v), 0.0))


def flat(q: Machine, v: TangentVector) -> Covector:
    return Covector(q, metric_diagonal(q) * v.components)


def sharp(q: Machine, eta: Covector) -> TangentVector:
    """Raise the index: ``(q^{j,a}/pi_j)(eta_{j,a} - sum_b q^{j,b} eta_{j,b})``."""
    _require_interior(q.q)
    return TangentVector(q, sharp_array(q.dfa, q.q, eta.components, stationary_array(q)))


def sharp_array(dfa: DfaType, q: np.ndarray, eta: np.ndarray, pi: np.ndarray) -> np.ndarray:
    mean = np.bincount(dfa.edge_state, weights=q * eta, minlength=dfa.n_states)
    out = q / pi[dfa.edge_state] * (eta - mean[dfa.edge_state])
    # remove rounding drift so the result is tangent to working precision
    drift = np.bincount(dfa.edge_state, weights=out, minlength=dfa.n_states)
    counts = np.bincount(dfa.edge_state, minlength=dfa.n_states)
    return out - (drift / counts)[dfa.edge_state]


def tangent_from_ambient(q: Machine, components) -> TangentVector:
    return TangentVector(q, np.asarray(components, dtype=float))


# ---------------------------------------------------------------------------
# curve energy
# ---------------------------------------------------------------------------


def curve_energy(c: Curve) -> float:
    """``1/2 int g(c) (c')^2 dt`` on times rescaled to ``[0, 1]``.

    Midpoint rule for the metric, chord velocities between samples.
    """
    if len(c) < 2:
        raise ValueError("curve energy needs at least two samples")
    _require_interior(c.points, "curve sample")
    t = (c.times - c.times[0]) / (c.times[-1] - c.times[0])
    dt = np.diff(t)
    dq = np.diff(c.points, axis=0)
    mid = 0.5 * (c.points[1:] + c.points[:-1])
    g = metric_diagonal(mid, c.dfa)
    return float(0.5 * np.sum(np.sum(g * dq * dq, axis=1) / dt))


def curve_energy_richardson(dfa: DfaType, func: Callable[[float], np.ndarray], n: int = 64) -> tuple[float, float]:
    """Richardson-extrapolated energy of a smooth curve on ``[0, 1]``.

    Returns ``(estimate, error_indicator)``; the composite rule is second order.
    """
    e1 = curve_energy(Curve.from_function(dfa, func, n))
    e2 = curve_energy(Curve.from_function(dfa, func, 2 * n))
    est = (4.0 * e2 - e1) / 3.0
    return est, abs(e2 - e1) / 3.0


def jet_slope(q: Machine, v: TangentVector, rel_scale: float = 2e-4, decades: float = 2.0,
              n: int = 9) -> float:
    """Log-log slope of ``|h(q + t v || q) - t^2 g(v, v) / 2|`` against ``t``.

    The window ends where ``t |v| / q`` first reaches ``rel_scale`` in some
    coordinate and spans ``decades`` below that.  The expected slope is 3.
    """
    _require_interior(q.q)
    ratio = float(np.max(np.abs(v.components) / q.q))
    if ratio == 0.0:
        raise ValueError("zero tangent vector")
    t_hi = rel_scale / ratio
    ts = np.logspace(math.log10(t_hi) - decades, math.log10(t_hi), n)
    quad = 0.5 * metric_apply(q, v, v)
    d = np.array([abs(relative_entropy_rate(q.with_probs(q.q + t * v.components), q) - quad * t * t)
                  for t in ts])
    if np.any(d <= 0):
        return math.nan
    return float(np.polyfit(np.log(ts), np.log(d), 1)[0])


# ---------------------------------------------------------------------------
# chart, Christoffel symbols, exponential map
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Chart:
    """Coordinates keeping every edge but the last one of each state."""

    dfa: DfaType
    free: np.ndarray = field(init=False)
    basis: np.ndarray = field(init=False)
    offset: np.ndarray = field(init=False)

    def __post_init__(self):
        dfa = self.dfa
        free = [i for i, (j, a) in enumerate(dfa.edges) if a != dfa.symbols_at(j)[-1]]
        offset = np.zeros(len(dfa.edges))
        for j in range(dfa.n_states):
            offset[dfa.edge_index[(j, dfa.symbols_at(j)[-1])]] = 1.0
        object.__setattr__(self, "free", np.array(free, dtype=np.intp))
        object.__setattr__(self, "basis", tangent_basis(dfa))
        object.__setattr__(self, "offset", offset)

    @property
    def dim(self) -> int:
        return self.free.size

    def to_ambient(self, x: np.ndarray) -> np.ndarray:
        return self.offset + np.asarray(x) @ self.basis.T

    def from_ambient(self, q: np.ndarray) -> np.ndarray:
        return np.asarray(q)[..., self.free]

    def metric(self, x: np.ndarray) -> np.ndarray:
        """Chart metric matrices, accepts a stack of points ``(..., d)``."""
        q = self.to_ambient(x)
        gd = metric_diagonal(q, self.dfa)
        return np.einsum("ei,...e,ej->...ij", self.basis, gd, self.basis)


def christoffel(q: Machine | np.ndarray, chart: Chart | None = None, h: float = FD_STEP) -> np.ndarray:
    """Christoffel symbols ``G[k, i, j]`` of the metric in the elimination chart.

    Metric derivatives come from central differences; the step shrinks near
    the boundary so that the stencil stays interior.
    """
    if isinstance(q, Machine):
        chart = chart or Chart(q.dfa)
        x = chart.from_ambient(q.q)
    else:
        if chart is None:
            raise ValueError("a chart is required for raw coordinates")
        x = np.asarray(q, dtype=float)
    return _christoffel_x(chart, x, h)


def _christoffel_x(chart: Chart, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    d = chart.dim
    qa = chart.to_ambient(x)
    margin = float(qa.min())
    step = min(h, 0.25 * margin)
    if step < 1e-9:
        raise ValueError(f"point too close to the face boundary for the stencil (margin {margin:.3e}, need > 4e-9)")
    pts = np.empty((2 * d + 1, d))
    pts[0] = x
    for i in range(d):
        pts[1 + 2 * i] = x
        pts[2 + 2 * i] = x
        pts[1 + 2 * i, i] += step
        pts[2 + 2 * i, i] -= step
    gs = chart.metric(pts)
    g = gs[0]
    dg = np.empty((d, d, d))  # dg[l, i, j] = d_l g_ij
    for l in range(d):
        dg[l] = (gs[1 + 2 * l] - gs[2 + 2 * l]) / (2 * step)
    # first kind, indexed [l, i, j]: 1/2 (d_i g_lj + d_j g_li - d_l g_ij)
    first = 0.5 * (np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg)
    return np.linalg.solve(g, first.reshape(d, d * d)).reshape(d, d, d)


def _geodesic_rhs(chart: Chart, y: np.ndarray) -> np.ndarray:
    d = chart.dim
    x, v = y[:d], y[d:]
    gam = _christoffel_x(chart, x)
    return np.concatenate([v, -np.einsum("kij,i,j->k", gam, v, v)])


def geodesic_residual(c: Curve, chart: Chart | None = None) -> float:
    """Max norm of ``x'' + Gamma(x', x')`` along a sampled curve (finite differences)."""
    chart = chart or Chart(c.dfa)
    x = chart.from_ambient(c.points)
    t = c.times
    worst = 0.0
    for i in range(1, len(t) - 1):
        h0, h1 = t[i] - t[i - 1], t[i + 1] - t[i]
        v = (x[i + 1] - x[i - 1]) / (h0 + h1)
        acc = 2 * (h0 * x[i + 1] - (h0 + h1) * x[i] + h1 * x[i - 1]) / (h0 * h1 * (h0 + h1))
        gam = _christoffel_x(chart, x[i])
        worst = max(worst, float(np.max(np.abs(acc + np.einsum("kij,i,j->k", gam, v, v)))))
    return worst


@dataclass(frozen=True)
class GeodesicRun:
    curve: Curve
    velocities: np.ndarray  # chart velocities at the samples
    exited: bool


def _integrate_geodesic(chart: Chart, x0: np.ndarray, v0: np.ndarray, steps: int) -> GeodesicRun:
    d = chart.dim
    y = np.concatenate([x0, v0])
    dt = 1.0 / steps
    xs, vs = [x0.copy()], [v0.copy()]
    exited = False
    try:
        for _ in range(steps):
            k1 = _geodesic_rhs(chart, y)
            k2 = _geodesic_rhs(chart, y + 0.5 * dt * k1)
            k3 = _geodesic_rhs(chart, y + 0.5 * dt * k2)
            k4 = _geodesic_rhs(chart, y + dt * k3)
            y_new = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if np.any(chart.to_ambient(y_new[:d]) <= 0) or not np.all(np.isfinite(y_new)):
                exited = True
                break
            y = y_new
            xs.append(y[:d].copy())
            vs.append(y[d:].copy())
    except (ValueError, np.linalg.LinAlgError):
        exited = True
    xs = np.array(xs)
    times = np.linspace(0.0, 1.0, steps + 1)[: len(xs)]
    pts = chart.to_ambient(xs)
    return GeodesicRun(Curve(chart.dfa, times, pts), np.array(vs), exited)


@dataclass(frozen=True)
class ExpMapResult:
    curve: Curve
    exited: bool


def exp_map(q: Machine, v: TangentVector, steps: int = 128) -> ExpMapResult:
    """Geodesic ``t -> Exp_q(t v)`` for ``t`` in ``[0, 1]`` by RK4 in the chart.

    When the curve leaves the face, the interior part is returned with
    ``exited = True``.
    """
    _require_interior(q.q)
    chart = Chart(q.dfa)
    run = _integrate_geodesic(chart, chart.from_ambient(q.q), chart.from_ambient(v.components), steps)
    return ExpMapResult(run.curve, run.exited)


def _simpson_energy(chart: Chart, run: GeodesicRun) -> float:
    x = chart.from_ambient(run.curve.points)
    gs = chart.metric(x)
    speed2 = np.einsum("ni,nij,nj->n", run.velocities, gs, run.velocities)
    n = speed2.size - 1
    h = 1.0 / n
    if n % 2 == 0:
        s = speed2[0] + speed2[-1] + 4 * speed2[1:-1:2].sum() + 2 * speed2[2:-1:2].sum()
        integral = s * h / 3.0
    else:
        integral = np.trapz(speed2, dx=h)
    return 0.5 * float(integral)


@dataclass(frozen=True)
class GeodesicResult:
    curve: Curve
    energy: float
    residual: float
    iterations: int
    seed: str


CONTINUATION_STAGES = (4, 16)


def geodesic_bvp(q0: Machine, q1: Machine, steps: int = 64, max_iter: int = 40,
                 tol: float = ENDPOINT_TOL) -> GeodesicResult:
    """Shortest geodesic between two interior machines by Newton shooting.

    Seeds: the ambient chord and the chord in square-root coordinates.  The
    lowest-energy converged solution is returned; if no seed converges a
    :class:`GeodesicFailure` carries the best residual reached.
    """
    _check_same_face(q0, q1)
    _require_interior(q0.q)
    _require_interior(q1.q)
    chart = Chart(q0.dfa)
    x0, x1 = chart.from_ambient(q0.q), chart.from_ambient(q1.q)
    if np.max(np.abs(q1.q - q0.q)) == 0:
        pts = np.repeat(q0.q[None, :], steps + 1, axis=0)
        return GeodesicResult(Curve(q0.dfa, np.linspace(0, 1, steps + 1), pts), 0.0, 0.0, 0, "trivial")
    z0, z1 = np.sqrt(q0.q), np.sqrt(q1.q)
    seeds = {
        "chord": x1 - x0,
        "sqrt-chord": chart.from_ambient(2.0 * z0 * (z1 - z0)),
    }
    best_fail = math.inf
    solutions = []
    for name, v in seeds.items():
        res = _shoot(chart, x0, x1, v, steps, max_iter, tol)
        if res is None:
            continue
        run, resid, it = res
        if resid <= tol:
            solutions.append(GeodesicResult(run.curve, _simpson_energy(chart, run), resid, it, name))
        else:
            best_fail = min(best_fail, resid)
    if not solutions:
        for stages in CONTINUATION_STAGES:
            res = _continuation(chart, x0, z0, z1, seeds["sqrt-chord"], stages, steps, max_iter, tol)
            if res is not None:
                run, resid, it = res
                solutions.append(GeodesicResult(run.curve, _simpson_energy(chart, run), resid, it,
                                                f"continuation-{stages}"))
                break
    if not solutions:
        raise GeodesicFailure("no shooting seed converged", best_fail)
    return min(solutions, key=lambda r: r.energy)


def _continuation(chart: Chart, x0, z0, z1, v, stages, steps, max_iter, tol):
    """Shoot to targets moved out along the square-root chord, reusing each velocity."""
    it_total, s_prev = 0, 0.0
    v = v / stages
    for k in range(1, stages + 1):
        s = k / stages
        z = (1 - s) * z0 + s * z1
        q = z * z
        es = chart.dfa.edge_state
        q = q / np.bincount(es, weights=q)[es]
        res = _shoot(chart, x0, chart.from_ambient(q), v * (s / s_prev if s_prev else 1.0), steps, max_iter, tol)
        if res is None:
            return None
        run, resid, it = res
        it_total += it
        if resid > tol:
            return None
        v, s_prev = run.velocities[0], s
    return run, resid, it_total


def _endpoint(chart: Chart, x0, v, steps):
    run = _integrate_geodesic(chart, x0, v, steps)
    if run.exited:
        return None, run
    return chart.to_ambient(chart.from_ambient(run.curve.points[-1])), run


def _shoot(chart: Chart, x0, x1, v, steps, max_iter, tol):
    target = chart.to_ambient(x1)
    end, run = _endpoint(chart, x0, v, steps)
    if end is None:
        return None
    resid_vec = chart.from_ambient(end) - x1
    resid = float(np.max(np.abs(end - target)))
    d = chart.dim
    it = 0
    while resid > tol and it < max_iter:
        it += 1
        eps = 1e-7 * max(1.0, float(np.linalg.norm(v)))
        jac = np.empty((d, d))
        ok = True
        for i in range(d):
            dv = v.copy()
            dv[i] += eps
            e_i, _ = _endpoint(chart, x0, dv, steps)
            if e_i is None:
                ok = False
                break
            jac[:, i] = (chart.from_ambient(e_i) - chart.from_ambient(end)) / eps
        if not ok:
            return run, resid, it
        try:
            delta = np.linalg.solve(jac, -resid_vec)
        except np.linalg.LinAlgError:
            return run, resid, it
        lam = 1.0
        improved = False
        while lam > 1e-4:
            v_try = v + lam * delta
            e_try, run_try = _endpoint(chart, x0, v_try, steps)
            if e_try is not None:
                r_try = float(np.max(np.abs(e_try - target)))
                if r_try < resid:
                    v, end, run, resid = v_try, e_try, run_try, r_try
                    resid_vec = chart.from_ambient(end) - x1
                    improved = True
                    break
            lam *= 0.5
        if not improved:
            break
    return run, resid, it


def straight_segment(q0: Machine, q1: Machine, n: int = 256) -> Curve:
    return Curve.from_function(q0.dfa, lambda t: (1 - t) * q0.q + t * q1.q, n)


def path_divergence_excess(c: Curve, q_inf: Machine, tol: float = 1e-6, steps: int = 64,
                           geodesic: "GeodesicResult | None" = None) -> float:
    """``curve_energy(c)`` minus the geodesic energy from ``c(0)`` to ``q_inf``.

    A precomputed ``geodesic`` between the same endpoints may be passed in.
    """
    if c.dfa != q_inf.dfa:
        raise ValueError("curve and target live on different DFA-types")
    gap = float(np.max(np.abs(c.points[-1] - q_inf.q)))
    if gap > tol:
        raise ValueError(f"curve ends {gap:.3e} away from the target")
    geo = geodesic if geodesic is not None else geodesic_bvp(c.start, q_inf, steps=steps)
    return curve_energy(c) - geo.energy


# ---------------------------------------------------------------------------
# one-state closed forms (used as oracles and in figure code)
# ---------------------------------------------------------------------------


def sphere_distance(p: np.ndarray, p2: np.ndarray) -> float:
    """Length between two distributions of the one-state metric: ``2 arccos sum sqrt(p p')``."""
    bc = float(np.sum(np.sqrt(np.asarray(p) * np.asarray(p2))))
    return 2.0 * math.acos(min(1.0, bc))


def sphere_geodesic(p: np.ndarray, p2: np.ndarray) -> Callable[[float], np.ndarray]:
    """Great-circle curve in square-root coordinates, returned in probability coordinates."""
    z0, z1 = np.sqrt(np.asarray(p, dtype=float)), np.sqrt(np.asarray(p2, dtype=float))
    theta = math.acos(min(1.0, float(z0 @ z1)))
    if theta < 1e-15:
        return lambda t: z0 * z0
    u = (z1 - math.cos(theta) * z0) / math.sin(theta)

    def curve(t: float) -> np.ndarray:
        z = math.cos(t * theta) * z0 + math.sin(t * theta) * u
        return z * z

    return curve
