"""Acceptance criteria, each run at its stated tolerance and time budget.

Every test appends one PASS/FAIL line to the summary printed at the end of
the pytest run, then asserts.
"""

from __future__ import annotations

import math
import time
from contextlib import contextmanager
from fractions import Fraction as F

import numpy as np
import pytest

from causalgeom.dynamics import alpha
from causalgeom.ensemble import brute_force_distribution, exact_ensemble_distribution
from causalgeom.figures import FIG4_TYPES, figure_spec, nemo_dfa, run_figure, start_grid
from causalgeom.geometry import Chart, curve_energy, geodesic_bvp, jet_slope, relative_entropy_rate
from causalgeom.io import shipped_machine
from causalgeom.machine import (
    Alphabet,
    DfaType,
    Machine,
    count_dfa_types,
    enumerate_dfa_types,
    is_strongly_connected,
    same_component,
)
from causalgeom.validate import clt_suite, ldp_suite, random_interior, random_tangent, trajectory_suite

from oracles import max_normal_mc, relent_rate_richardson, sphere_energy

SEED = 20240601
BIN = Alphabet.of_size(2)
TERN = DfaType.from_code("111", Alphabet.of_size(3))
T2121 = DfaType.from_code("2121", BIN)

pytestmark = pytest.mark.acceptance


@contextmanager
def criterion(log, number: int, title: str, budget: float):
    """Time the body; the body stores its verdict in the yielded dict."""
    out = {"passed": False, "detail": ""}
    t0 = time.perf_counter()
    yield out
    dt = time.perf_counter() - t0
    in_time = dt < budget
    ok = out["passed"] and in_time
    line = (f"criterion {number:2d} {title}: {'PASS' if ok else 'FAIL'}  {out['detail']}; "
            f"{dt:.1f} s (budget {budget:g} s{'' if in_time else ', exceeded'})")
    log.append(line)
    print(line)
    out["ok"] = ok


def test_c01_face_counts(acceptance_log):
    with criterion(acceptance_log, 1, "face counts", 1.0) as r:
        types = enumerate_dfa_types(2, 2)
        total = count_dfa_types(2, 2)
        top = sum(d.is_top_dimensional for d in types)
        sc = sum(is_strongly_connected(d) for d in types)
        r["passed"] = (total, len(types), top, sc) == (64, 64, 16, 25)
        r["detail"] = f"total {total}, top-dimensional {top}, strongly connected {sc}"
    assert r["ok"]


def _same_component_pairs(dfa, n, rng):
    pairs = []
    while len(pairs) < n:
        a, b = random_interior(dfa, rng), random_interior(dfa, rng)
        if same_component(a, b) == "yes":
            pairs.append((a, b))
    return pairs


def test_c02_relative_entropy_rate(acceptance_log):
    with criterion(acceptance_log, 2, "relative entropy rate", 120.0) as r:
        rng = np.random.default_rng(SEED)
        parts, ok = [], True
        for name, dfa in (("2121", T2121), ("nemo", nemo_dfa())):
            errs = []
            for a, b in _same_component_pairs(dfa, 20, rng):
                ref = relent_rate_richardson(a, b)
                errs.append(abs(relative_entropy_rate(a, b) - ref) / ref)
            errs = np.array(errs)
            bad = int(np.sum(errs >= 1e-3))
            ok &= bad == 0
            parts.append(f"{name}: max rel error {errs.max():.2e}, {bad}/20 above 1e-3")
        r["passed"] = ok
        r["detail"] = "; ".join(parts)
    assert r["ok"]


def test_c03_metric_is_hessian(acceptance_log):
    with criterion(acceptance_log, 3, "jet slope", 30.0) as r:
        rng = np.random.default_rng(SEED)
        parts, ok = [], True
        for name, dfa in (("111", TERN), ("2121", T2121), ("nemo", nemo_dfa())):
            s = []
            for _ in range(50):
                q = random_interior(dfa, rng)
                s.append(jet_slope(q, random_tangent(q, rng)))
            s = np.array(s)
            ok &= bool(np.all((s >= 2.8) & (s <= 3.2)))
            parts.append(f"{name} slopes [{np.nanmin(s):.3f}, {np.nanmax(s):.3f}]")
        r["passed"] = ok
        r["detail"] = "50 samples per face, " + ", ".join(parts)
    assert r["ok"]


def test_c04_alpha(acceptance_log):
    with criterion(acceptance_log, 4, "alpha(N)", 60.0) as r:
        e2 = abs(alpha(2) - 1 / math.sqrt(math.pi))
        e3 = abs(alpha(3) - 3 / (2 * math.sqrt(math.pi)))
        ok = e2 < 1e-10 and e3 < 1e-10
        rng = np.random.default_rng(SEED)
        zs = []
        for n in (2, 5, 10):
            mean, se = max_normal_mc(n, 10**7, rng)
            z = abs(alpha(n) - mean) / se
            zs.append(f"N={n} z={z:.2f}")
            ok &= z < 3
        r["passed"] = ok
        r["detail"] = f"closed-form errors {e2:.1e}, {e3:.1e}; Monte Carlo " + ", ".join(zs)
    assert r["ok"]


def test_c05_exact_ensemble(acceptance_log):
    with criterion(acceptance_log, 5, "exact ensemble", 120.0) as r:
        machines = {
            "2121": Machine(T2121, (F(1, 5), F(4, 5), F(3, 5), F(2, 5))),
            "one-state binary": Machine(DfaType.from_code("11", BIN), (F(3, 10), F(7, 10))),
        }
        ok, n = True, 0
        for m in machines.values():
            for L in range(1, 9):
                ex = exact_ensemble_distribution(m, L)
                ok &= ex.as_dict() == brute_force_distribution(m, L).as_dict() and ex.total() == 1
                n += 1
        r["passed"] = ok
        r["detail"] = f"{n} (machine, L) cases, L = 1..8, exact rational equality"
    assert r["ok"]


def test_c06_ldp(acceptance_log):
    with criterion(acceptance_log, 6, "large deviations", 300.0) as r:
        rep = ldp_suite(shipped_machine("ldp-2121"), shipped_machine("ldp-2121-target"), (50, 100, 200))
        r["passed"] = rep.passed
        r["detail"] = "; ".join(c.detail for c in rep.checks)
    assert r["ok"]


def test_c07_clt(acceptance_log):
    with criterion(acceptance_log, 7, "central limit", 600.0) as r:
        rep = clt_suite(shipped_machine("type-2121"), 10**4, 10**5, SEED, 10**3)
        r["passed"] = rep.passed
        r["detail"] = "; ".join(c.line() for c in rep.checks)
    assert r["ok"]


def test_c08_expectation_trajectory(acceptance_log):
    with criterion(acceptance_log, 8, "expectation trajectory", 900.0) as r:
        q0, q_inf = shipped_machine("fig2-start"), shipped_machine("one-state-ternary")
        assert np.allclose(q_inf.q, [0.2, 0.6, 0.2])
        rep = trajectory_suite(q0, q_inf, 10**4, 10**4, 2, alpha(2) ** 2, SEED, 10**3)
        r["passed"] = rep.passed
        r["detail"] = "; ".join(c.line() for c in rep.checks)
    assert r["ok"]


def test_c09_geodesic_oracle(acceptance_log):
    with criterion(acceptance_log, 9, "geodesic oracle", 120.0) as r:
        rng = np.random.default_rng(SEED)
        errs = []
        for _ in range(20):
            a, b = random_interior(TERN, rng), random_interior(TERN, rng)
            errs.append(abs(geodesic_bvp(a, b).energy - sphere_energy(a.q, b.q)))
        spec = figure_spec("fig2")
        chart = Chart(spec.dfa)
        excess = []
        for x in start_grid(spec):
            a = Machine.from_array(spec.dfa, chart.to_ambient(x))
            b = Machine.from_array(spec.dfa, chart.to_ambient(np.array(spec.target(x))))
            geo = geodesic_bvp(a, b)
            # energy of the computed geodesic minus the exact sphere energy
            excess.append(curve_energy(geo.curve) - sphere_energy(a.q, b.q))
        excess = np.array(excess)
        r["passed"] = max(errs) < 1e-5 and bool(np.all(excess <= 1e-4))
        r["detail"] = (f"20 pairs max energy error {max(errs):.2e}; fig2 grid ({excess.size} starts) "
                       f"geodesic excess in [{excess.min():.1e}, {excess.max():.1e}]")
    assert r["ok"]


def test_c10_figures(acceptance_log):
    with criterion(acceptance_log, 10, "figure reproduction", 1200.0) as r:
        names = ["fig2", *(f"fig4:{c}" for c in FIG4_TYPES), "fig5"]
        ok, parts = True, []
        for name in names:
            res = run_figure(name)
            good = res.success_fraction >= 0.95 and res.min_excess >= -1e-4 and res.lyapunov_ok
            ok &= good
            parts.append(f"{name} {res.success_fraction:.0%} ok, min excess {res.min_excess:.1e}"
                         f"{'' if res.lyapunov_ok else ', Lyapunov violated'}")
            if name == "fig4:2221":
                # starts on each side of the diagonal flow to that side's target
                sides = {}
                for row in res.rows:
                    above = row.start[1] > row.start[0]
                    end = Chart(res.spec.dfa).from_ambient(row.flow.points[-1])
                    sides.setdefault(above, set()).add(tuple(np.round(row.target, 12)))
                    ok &= (end[1] > end[0]) == above
                switch = len(sides) == 2 and all(len(v) == 1 for v in sides.values()) and sides[True] != sides[False]
                ok &= switch
                parts.append(f"2221 target switch {'yes' if switch else 'no'}")
        r["passed"] = ok
        r["detail"] = "; ".join(parts)
    assert r["ok"]
