"""Validation suites comparing simulations and exact results with their asymptotic laws."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import alpha, integrate_flow, make_field, relent_potential
from .ensemble import DEFAULT_CAP, clt_covariance_check, ldp_rate_check
from .evolution import GwfConfig, expectation_trajectory
from .geometry import geodesic_bvp, jet_slope, sphere_distance, tangent_from_ambient
from .machine import Machine, tangent_basis

SUITES = ("geometry", "ldp", "clt", "trajectory")
JET_SLOPE_RANGE = (2.8, 3.2)
SPHERE_TOL = 1e-5
LDP_TOL = 0.05
CLT_COV_TOL = 0.05
SE_FACTOR = 3.0
FLOW_DT = 0.01
ARRIVAL_FRACTION = 0.9


@dataclass(frozen=True)
class Check:
    label: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.label}: {self.detail}"


@dataclass
class SuiteReport:
    suite: str
    checks: list[Check] = field(default_factory=list)
    tables: dict[str, tuple[list[str], list[list]]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, label: str, passed: bool, detail: str):
        self.checks.append(Check(label, bool(passed), detail))

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]


def random_interior(dfa, rng: np.random.Generator, min_prob: float = 0.05) -> Machine:
    """Uniform point of the face (Dirichlet(1) per state) with every entry above ``min_prob``."""
    while True:
        vals = np.empty(len(dfa.edges))
        for j in range(dfa.n_states):
            idx = np.flatnonzero(dfa.edge_state == j)
            vals[idx] = rng.dirichlet(np.ones(idx.size))
        if vals.min() > min_prob:
            return Machine.from_array(dfa, vals)


def random_tangent(q: Machine, rng: np.random.Generator):
    b = tangent_basis(q.dfa)
    v = b @ rng.normal(size=b.shape[1])
    return tangent_from_ambient(q, v)


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------


def jet_slopes(m: Machine, samples: int, rng: np.random.Generator) -> list[tuple[Machine, float]]:
    out = []
    for i in range(samples):
        q = m if i == 0 else random_interior(m.dfa, rng)
        out.append((q, jet_slope(q, random_tangent(q, rng))))
    return out


def sphere_energy_errors(dfa, pairs: int, rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray, float, float]]:
    """Geodesic energies on a one-state face against ``(2 arccos sum sqrt(q q'))^2 / 2``."""
    rows = []
    for _ in range(pairs):
        a, b = random_interior(dfa, rng), random_interior(dfa, rng)
        e = geodesic_bvp(a, b).energy
        rows.append((a.q, b.q, e, 0.5 * sphere_distance(a.q, b.q) ** 2))
    return rows


def geometry_suite(m: Machine, samples: int = 50, pairs: int = 20, seed: int = 0) -> SuiteReport:
    rep = SuiteReport("geometry")
    rng = np.random.default_rng(seed)
    slopes = jet_slopes(m, samples, rng)
    s = np.array([v for _, v in slopes])
    lo, hi = JET_SLOPE_RANGE
    ok = bool(np.all((s >= lo) & (s <= hi)))
    rep.add("jet slope", ok, f"{samples} samples, slopes in [{np.nanmin(s):.4f}, {np.nanmax(s):.4f}], "
            f"required [{lo}, {hi}]")
    rep.tables["jet_slopes.csv"] = (["sample", "slope"], [[i, v] for i, v in enumerate(s)])
    if m.dfa.n_states == 1:
        rows = sphere_energy_errors(m.dfa, pairs, rng)
        err = max(abs(e - ref) for _, _, e, ref in rows)
        rep.add("sphere geodesic energy", err < SPHERE_TOL, f"{pairs} pairs, max abs error {err:.3e}, tol {SPHERE_TOL:g}")
        rep.tables["sphere_energies.csv"] = (["pair", "energy", "sphere_energy"],
                                             [[i, e, ref] for i, (_, _, e, ref) in enumerate(rows)])
    return rep


# ---------------------------------------------------------------------------
# large deviations
# ---------------------------------------------------------------------------


def ldp_suite(q: Machine, target: Machine, L_grid=(50, 100, 200), cap: int = DEFAULT_CAP,
              tol: float = LDP_TOL) -> SuiteReport:
    rep = SuiteReport("ldp")
    rows = ldp_rate_check(q, target, L_grid, cap)
    errs = [r.rel_error for r in rows]
    rep.add("rate at largest L", errs[-1] < tol, f"L={rows[-1].L} relative error {errs[-1]:.4f}, tol {tol:g}")
    mono = all(b < a for a, b in zip(errs, errs[1:]))
    rep.add("monotone trend", mono, "relative errors " + ", ".join(f"{e:.4f}" for e in errs))
    rep.tables["ldp.csv"] = (
        ["L", "rate", "h", "rel_error", "log_prob"] + [f"support_{i}" for i in range(len(q.dfa.edges))],
        [[r.L, r.rate, r.h, r.rel_error, r.log_prob, *r.support_point] for r in rows])
    return rep


# ---------------------------------------------------------------------------
# central limit
# ---------------------------------------------------------------------------


def clt_suite(q: Machine, L: int = 10**4, n: int = 10**5, seed: int = 0, L_ref: int | None = 10**3) -> SuiteReport:
    rep = SuiteReport("clt")
    res = clt_covariance_check(q, L, n, seed)
    rep.add("covariance", res.max_cov_error < CLT_COV_TOL,
            f"L={L} n={res.n_used} max entry error {res.max_cov_error:.4f}, tol {CLT_COV_TOL:g}")
    bound = SE_FACTOR / math.sqrt(res.n_used)
    worst = float(np.max(np.abs(res.mean)))
    rep.add("mean", worst <= bound, f"max |mean| {worst:.4f}, bound 3/sqrt(n) = {bound:.4f}")
    rows = [[L, res.n_used, res.n_dropped, res.max_cov_error, res.frobenius_error, *res.mean]]
    if L_ref is not None and L_ref < L:
        ref = clt_covariance_check(q, L_ref, n, seed)
        rep.add("covariance error decreases", res.frobenius_error < ref.frobenius_error,
                f"Frobenius error {ref.frobenius_error:.4f} at L={L_ref}, {res.frobenius_error:.4f} at L={L}")
        rows.insert(0, [L_ref, ref.n_used, ref.n_dropped, ref.max_cov_error, ref.frobenius_error, *ref.mean])
    d = res.covariance.shape[0]
    rep.tables["clt.csv"] = (["L", "n_used", "n_dropped", "max_cov_error", "frobenius_error"]
                             + [f"mean_{i}" for i in range(d)], rows)
    return rep


# ---------------------------------------------------------------------------
# expectation trajectory
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrajectoryResult:
    L: int
    times: np.ndarray
    mean: np.ndarray
    reference: np.ndarray
    se: np.ndarray
    arrival: float

    @property
    def deviation(self) -> np.ndarray:
        return self.mean - self.reference

    @property
    def sup_deviation(self) -> float:
        return float(np.max(np.abs(self.deviation)))

    @property
    def pooled_se(self) -> np.ndarray:
        """Per coordinate, the standard errors of all generations pooled in quadrature."""
        return np.sqrt(np.sum(self.se ** 2, axis=0))

    @property
    def within(self) -> bool:
        return bool(np.all(np.max(np.abs(self.deviation), axis=0) <= SE_FACTOR * self.pooled_se))


def trajectory_check(q0: Machine, q_inf: Machine, L: int, mc_runs: int, N: int = 2, beta: float | None = None,
                     seed: int = 0, fraction: float = ARRIVAL_FRACTION) -> TrajectoryResult:
    """Monte Carlo expectation iteration against the asymptotic gWF flow.

    Generations cover ``fraction`` of the flow's arrival time at ``q_inf``,
    so the comparison stays away from the rest point.
    """
    beta = alpha(N) ** 2 if beta is None else float(beta)
    phi = relent_potential(q_inf)
    ref = integrate_flow(make_field("gwf", q0.dfa, phi, N=N, beta=beta), q0, 1e3, FLOW_DT)
    if ref.termination != "rest":
        raise ValueError(f"reference flow did not reach the rest point ({ref.termination})")
    arrival = float(ref.times[-1])
    tau = math.sqrt(beta / L)
    gens = int(math.floor(fraction * arrival / tau))
    cfg = GwfConfig(L=L, N=N, phi=phi, generations=gens, beta=beta, seed=seed, mc_runs=mc_runs)
    exp = expectation_trajectory(q0, cfg)
    refpts = np.column_stack([np.interp(exp.times, ref.times, ref.points[:, k]) for k in range(ref.points.shape[1])])
    return TrajectoryResult(L, exp.times, exp.points, refpts, exp.extra["se"], arrival)


def trajectory_suite(q0: Machine, q_inf: Machine, L: int = 10**4, mc_runs: int = 10**4, N: int = 2,
                     beta: float | None = None, seed: int = 0, L_ref: int | None = 10**3) -> SuiteReport:
    rep = SuiteReport("trajectory")
    res = trajectory_check(q0, q_inf, L, mc_runs, N, beta, seed)
    worst = np.max(np.abs(res.deviation), axis=0)
    ratio = float(np.max(worst / (SE_FACTOR * res.pooled_se)))
    rep.add("within pooled standard errors", res.within,
            f"L={L} generations={len(res.times) - 1} sup deviation {res.sup_deviation:.2e}, "
            f"worst coordinate at {ratio:.2f} of 3 pooled SE")
    results = [res]
    if L_ref is not None and L_ref < L:
        ref = trajectory_check(q0, q_inf, L_ref, mc_runs, N, beta, seed)
        rep.add("sup deviation decreases", res.sup_deviation < ref.sup_deviation,
                f"{ref.sup_deviation:.2e} at L={L_ref}, {res.sup_deviation:.2e} at L={L}")
        results.insert(0, ref)
    d = q0.q.size
    header = (["L", "generation", "t"] + [f"mean_{k}" for k in range(d)] + [f"reference_{k}" for k in range(d)]
              + [f"se_{k}" for k in range(d)])
    rows = []
    for r in results:
        for i, t in enumerate(r.times):
            rows.append([r.L, i, t, *r.mean[i], *r.reference[i], *r.se[i]])
    rep.tables["trajectory.csv"] = (header, rows)
    return rep
