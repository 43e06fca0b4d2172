"""Figure datasets: gWF trajectories, geodesics and path-divergence excess on start grids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.stats import qmc

from . import io as cio
from . import svg
from .dynamics import FlowCurve, alpha, integrate_flow, lyapunov_values, make_field, relent_potential
from .geometry import Chart, GeodesicFailure, GeodesicResult, geodesic_bvp, path_divergence_excess
from .machine import Alphabet, DfaType, Machine

DEFAULT_GRID = 9
MARGIN = 0.05
FLOW_DT = 0.01
FLOW_T_END = 10.0
LYAPUNOV_TOL = 1e-12
TARGET_A = (0.2, 0.6)
TARGET_B = (0.6, 0.2)
FIG4_TYPES = ("2121", "2221", "1221", "2211")


def nemo_dfa() -> DfaType:
    return DfaType.from_transitions(3, Alphabet.of_size(2), {(0, 0): 1, (0, 1): 0, (1, 0): 2, (2, 0): 0, (2, 1): 0})


@dataclass(frozen=True)
class FigureSpec:
    """Face, start region and target rule of one figure.

    ``region`` and ``target`` act on chart coordinates (free edge
    probabilities).  ``target`` may depend on the start point.
    """

    name: str
    dfa: DfaType
    region: Callable[[np.ndarray], bool]
    target: Callable[[np.ndarray], tuple]
    xlabel: str
    ylabel: str

    @property
    def slug(self) -> str:
        return self.name.replace(":", "_")


def _inside(dfa: DfaType, x: np.ndarray) -> bool:
    chart = Chart(dfa)
    q = chart.to_ambient(x)
    return bool(np.all(q >= MARGIN))


def figure_spec(name: str) -> FigureSpec:
    if name == "fig2":
        dfa = DfaType.from_code("111", Alphabet.of_size(3))
        return FigureSpec(name, dfa, lambda x: _inside(dfa, x), lambda x: TARGET_A, "q^0", "q^1")
    if name == "fig5":
        dfa = nemo_dfa()
        return FigureSpec(name, dfa, lambda x: _inside(dfa, x), lambda x: TARGET_A, "q^{0,0}", "q^{2,0}")
    if name.startswith("fig4:"):
        code = name.split(":", 1)[1]
        if code not in FIG4_TYPES:
            raise ValueError(f"fig4 types are {', '.join(FIG4_TYPES)}, got {code!r}")
        dfa = DfaType.from_code(code, Alphabet.of_size(2))

        def off_diagonal(x):
            return _inside(dfa, x) and abs(x[1] - x[0]) >= MARGIN

        if code == "2221":
            # both sides of the diagonal, each with its own target
            return FigureSpec(name, dfa, off_diagonal,
                              lambda x: TARGET_A if x[1] > x[0] else TARGET_B, "q^{0,0}", "q^{1,0}")
        return FigureSpec(name, dfa, lambda x: off_diagonal(x) and x[0] < x[1],
                          lambda x: TARGET_A, "q^{0,0}", "q^{1,0}")
    raise ValueError(f"unknown figure {name!r}; expected fig2, fig4:<type> or fig5")


def start_grid(spec: FigureSpec, n: int = DEFAULT_GRID) -> np.ndarray:
    """First ``n`` points of the unscrambled Halton sequence inside the start region.

    Points closer than the margin to their own target are skipped.
    """
    if n < 1:
        raise ValueError("grid needs at least one point")
    dim = Chart(spec.dfa).dim
    if dim != 2:
        raise ValueError("figure faces must be two-dimensional")
    sampler = qmc.Halton(d=2, scramble=False)
    sampler.fast_forward(1)  # skip the origin
    out: list[np.ndarray] = []
    while len(out) < n:
        for x in sampler.random(256):
            if spec.region(x) and np.linalg.norm(x - np.array(spec.target(x))) >= MARGIN:
                out.append(x)
                if len(out) == n:
                    break
    return np.array(out)


@dataclass
class StartResult:
    index: int
    start: np.ndarray
    target: np.ndarray
    flow: FlowCurve
    geodesic: GeodesicResult | None
    excess: float
    lyapunov_ok: bool
    status: str

    @property
    def trajectory_length(self) -> float:
        return float(self.flow.times[-1] * alpha(self.flow.params["N"]) / math.sqrt(self.flow.params["beta"]))


@dataclass
class FigureResult:
    spec: FigureSpec
    rows: list[StartResult] = field(default_factory=list)

    @property
    def failures(self) -> int:
        return sum(r.geodesic is None for r in self.rows)

    @property
    def success_fraction(self) -> float:
        return 1.0 - self.failures / len(self.rows)

    @property
    def min_excess(self) -> float:
        vals = [r.excess for r in self.rows if math.isfinite(r.excess)]
        return min(vals) if vals else math.nan

    @property
    def lyapunov_ok(self) -> bool:
        return all(r.lyapunov_ok for r in self.rows)


def run_start(spec: FigureSpec, x0: np.ndarray, index: int = 0, N: int = 2) -> StartResult:
    chart = Chart(spec.dfa)
    tx = np.array(spec.target(x0), dtype=float)
    q0 = Machine.from_array(spec.dfa, chart.to_ambient(x0))
    q_inf = Machine.from_array(spec.dfa, chart.to_ambient(tx))
    fld = make_field("gwf", spec.dfa, relent_potential(q_inf), N=N, beta=alpha(N) ** 2)
    flow = integrate_flow(fld, q0, FLOW_T_END, FLOW_DT)
    lv = lyapunov_values(flow, q_inf)
    lyap_ok = bool(np.all(np.diff(lv) <= LYAPUNOV_TOL))
    try:
        geo = geodesic_bvp(q0, q_inf)
    except GeodesicFailure:
        return StartResult(index, x0, tx, flow, None, math.nan, lyap_ok, "geodesic-failed")
    try:
        exc = path_divergence_excess(flow.curve, q_inf, geodesic=geo)
        status = "ok"
    except ValueError:
        exc, status = math.nan, f"flow-{flow.termination}"
    return StartResult(index, x0, tx, flow, geo, exc, lyap_ok, status)


def run_figure(name: str, grid: int = DEFAULT_GRID) -> FigureResult:
    spec = figure_spec(name)
    res = FigureResult(spec)
    for i, x in enumerate(start_grid(spec, grid)):
        res.rows.append(run_start(spec, x, i))
    return res


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def write_figure(res: FigureResult, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = res.spec
    labels = cio.edge_labels(spec.dfa)
    slug = spec.slug
    paths = []
    paths.append(cio.write_csv(
        out_dir / f"{slug}_starts.csv",
        ["start", "x", "y", "target_x", "target_y", "status", "termination", "trajectory_length",
         "trajectory_energy_excess", "geodesic_energy", "lyapunov_decreasing"],
        [[r.index, r.start[0], r.start[1], r.target[0], r.target[1], r.status, r.flow.termination,
          r.trajectory_length, r.excess, math.nan if r.geodesic is None else r.geodesic.energy,
          int(r.lyapunov_ok)] for r in res.rows]))
    paths.append(cio.write_csv(
        out_dir / f"{slug}_trajectories.csv", ["start", "t"] + labels,
        [[r.index, t, *q] for r in res.rows for t, q in zip(r.flow.times, r.flow.points)]))
    paths.append(cio.write_csv(
        out_dir / f"{slug}_geodesics.csv", ["start", "s"] + labels,
        [[r.index, s, *q] for r in res.rows if r.geodesic is not None
         for s, q in zip(r.geodesic.curve.times, r.geodesic.curve.points)]))
    paths.append(render_svg(res).save(out_dir / f"{slug}.svg"))
    return paths


def render_svg(res: FigureResult) -> svg.Plot:
    spec = res.spec
    chart = Chart(spec.dfa)
    ternary = spec.dfa.n_states == 1
    if ternary:
        plot = svg.Plot((0.0, 1.0), (0.0, 1.0), title=spec.name)
        tri = svg.simplex_xy(np.eye(3))
        plot.polygon(np.vstack([tri, tri[:1]]), "none", "#444444")

        def xy(q):
            return svg.simplex_xy(q)
    else:
        plot = svg.Plot(title=spec.name)
        plot.frame(spec.xlabel, spec.ylabel)
        plot.polyline(np.array([[0, 0], [1, 1]]), "#999999", 0.8, "4 3")

        def xy(q):
            return chart.from_ambient(np.atleast_2d(q))

    vmax = max([r.excess for r in res.rows if math.isfinite(r.excess)] + [1e-12])
    for r in res.rows:
        plot.polyline(xy(r.flow.points), "#000000", 1.4)
        if r.geodesic is not None:
            plot.polyline(xy(r.geodesic.curve.points), "#d62728", 1.0, "3 2")
        sx, sy = xy(r.flow.points[0])[0]
        plot.marker(sx, sy, svg.sequential_color(r.excess, vmax), 5.0)
    for t in {tuple(r.target) for r in res.rows}:
        tx, ty = xy(chart.to_ambient(np.array(t)))[0]
        plot.marker(tx, ty, "#1f77b4", 4.0)
    return plot
