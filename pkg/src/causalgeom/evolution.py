"""Generalized Wright-Fisher iteration: self-resampling, selection, expectation paths."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .dynamics import FitnessPotential, FlowCurve, alpha
from .geometry import Curve
from .machine import DfaType, Edge, Machine, is_strongly_connected, sample_edge_counts

POLICIES = ("inherit-parent-row", "reject-resample")
# offspring on the boundary are scored by the continuous extension of Phi,
# which is -inf where an edge the target uses has probability zero
PHI_BOUNDARY = "continuous-extension"
MAX_RETRIES = 100


class AllOffspringDegenerate(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# empirical machines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalMachine:
    """Relative edge counts of a sampled edge sequence.

    ``probs`` holds exact fractions; entries of unvisited states are ``None``.
    """

    dfa: DfaType
    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != len(self.dfa.edges) or any(c < 0 for c in counts):
            raise ValueError("counts must be nonnegative, one per edge")
        object.__setattr__(self, "counts", counts)

    @property
    def length(self) -> int:
        return sum(self.counts)

    @property
    def visits(self) -> tuple[int, ...]:
        v = [0] * self.dfa.n_states
        for (j, _), c in zip(self.dfa.edges, self.counts):
            v[j] += c
        return tuple(v)

    @property
    def unvisited(self) -> tuple[int, ...]:
        return tuple(j for j, v in enumerate(self.visits) if v == 0)

    @property
    def probs(self) -> tuple:
        vis = self.visits
        return tuple(None if vis[j] == 0 else Fraction(c, vis[j]) for (j, _), c in zip(self.dfa.edges, self.counts))

    @property
    def key(self) -> tuple:
        """Hashable identity of the image point (equal for proportional rows)."""
        return self.probs

    @property
    def is_boundary(self) -> bool:
        return any(p == 0 for p in self.probs if p is not None)

    @property
    def is_degenerate(self) -> bool:
        return bool(self.unvisited) or self.is_boundary

    def to_machine(self, parent: Machine | None = None) -> Machine:
        """Exact machine; unvisited rows are copied from ``parent`` (required then)."""
        probs = []
        for e, p in enumerate(self.probs):
            if p is None:
                if parent is None:
                    raise ValueError(f"states {self.unvisited} unvisited and no parent row to inherit")
                p = parent.probs[e]
            probs.append(p)
        return Machine(self.dfa, tuple(probs))


def empirical_machine(dfa: DfaType, edges: Sequence[Edge]) -> EmpiricalMachine:
    if not edges:
        raise ValueError("edge sequence is empty")
    counts = [0] * len(dfa.edges)
    for i, (j, a) in enumerate(edges):
        k = dfa.target(j, a)
        if k is None:
            raise ValueError(f"edge {(j, a)} not in the DFA-type")
        if i + 1 < len(edges) and edges[i + 1][0] != k:
            raise ValueError(f"edge sequence breaks at position {i}")
        counts[dfa.edge_index[(j, a)]] += 1
    return EmpiricalMachine(dfa, tuple(counts))


def offspring_arrays(dfa: DfaType, counts: np.ndarray, parent: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Float rows ``count(j,a)/count(j)`` for a stack of count vectors.

    Unvisited rows take the parent's values.  Returns ``(probs, unvisited_mask)``
    where the mask marks offspring with at least one unvisited state.
    """
    counts = np.asarray(counts)
    visits = np.zeros(counts.shape[:-1] + (dfa.n_states,), dtype=np.int64)
    for j in range(dfa.n_states):
        visits[..., j] = counts[..., dfa.edge_state == j].sum(axis=-1)
    denom = visits[..., dfa.edge_state]
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = counts / denom
    missing = denom == 0
    probs = np.where(missing, np.broadcast_to(parent, probs.shape), probs)
    return probs, missing.any(axis=-1)


# ---------------------------------------------------------------------------
# configuration and records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GwfConfig:
    L: int
    N: int
    phi: FitnessPotential
    generations: int = 10
    beta: float | None = None
    tau: float | None = None
    seed: int = 20240601
    mc_runs: int = 1000
    degenerate_policy: str = "inherit-parent-row"

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be positive")
        if self.L < self.phi.dfa.n_states:
            raise ValueError("L must be at least the number of states")
        if self.N < 2:
            raise ValueError("N must be at least 2")
        if self.generations < 0:
            raise ValueError("generations must be nonnegative")
        if self.degenerate_policy not in POLICIES:
            raise ValueError(f"degenerate_policy must be one of {POLICIES}")
        if self.mc_runs < 1:
            raise ValueError("mc_runs must be positive")

    @property
    def beta_value(self) -> float:
        return alpha(self.N) ** 2 if self.beta is None else float(self.beta)

    @property
    def step(self) -> float:
        """Generation length: explicit ``tau`` or the schedule ``sqrt(beta / L)``."""
        if self.tau is not None:
            return float(self.tau)
        return math.sqrt(self.beta_value / self.L)


@dataclass
class ChainRecord:
    dfa: DfaType
    generation: list[int] = field(default_factory=list)
    points: list[np.ndarray] = field(default_factory=list)
    fitness: list[float] = field(default_factory=list)
    offspring_fitness: list[np.ndarray] = field(default_factory=list)

    def append(self, gen: int, q: np.ndarray, fit: float, offspring: np.ndarray):
        self.generation.append(gen)
        self.points.append(np.asarray(q, dtype=float).copy())
        self.fitness.append(float(fit))
        self.offspring_fitness.append(np.asarray(offspring, dtype=float).copy())

    def __len__(self) -> int:
        return len(self.generation)

    @property
    def spread(self) -> list[float]:
        return [float(o.max() - o.min()) if o.size else 0.0 for o in self.offspring_fitness]

    def machine(self, i: int) -> Machine:
        return Machine.from_array(self.dfa, self.points[i])


def _evaluate(phi: FitnessPotential, qs: np.ndarray) -> np.ndarray:
    return np.array([phi.evaluate_array(q) for q in qs])


def _select(fit: np.ndarray, rng: np.random.Generator) -> int:
    best = np.flatnonzero(fit == fit.max())
    if best.size == 1:
        return int(best[0])
    return int(best[rng.integers(best.size)])


def _draw_offspring(q: Machine, cfg: GwfConfig, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` offspring arrays, with the configured degenerate-offspring policy."""
    counts = sample_edge_counts(q, cfg.L, size, rng)
    probs, missing = offspring_arrays(q.dfa, counts, q.q)
    if cfg.degenerate_policy == "reject-resample":
        tries = 0
        while missing.any():
            tries += 1
            if tries > MAX_RETRIES:
                raise AllOffspringDegenerate(f"offspring still degenerate after {MAX_RETRIES} resamples")
            idx = np.flatnonzero(missing)
            c2 = sample_edge_counts(q, cfg.L, idx.size, rng)
            p2, m2 = offspring_arrays(q.dfa, c2, q.q)
            probs[idx] = p2
            missing[idx] = m2
    return probs


def gwf_step(q: Machine, cfg: GwfConfig, rng: np.random.Generator) -> tuple[Machine, float, np.ndarray]:
    """One reproduction-selection transition.  Returns ``(selected, fitness, offspring_fitness)``."""
    if not is_strongly_connected(q.dfa):
        raise ValueError("gWF step needs a strongly connected DFA-type")
    if q.dfa != cfg.phi.dfa:
        raise ValueError("potential and machine live on different DFA-types")
    probs = _draw_offspring(q, cfg, rng, cfg.N)
    fit = _evaluate(cfg.phi, probs)
    k = _select(fit, rng)
    return Machine.from_array(q.dfa, probs[k]), float(fit[k]), fit


def run_gwf_chain(q0: Machine, cfg: GwfConfig) -> ChainRecord:
    rec = ChainRecord(q0.dfa)
    rec.append(0, q0.q, cfg.phi.evaluate(q0), np.array([]))
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.generations)
    q = q0
    for g, ss in enumerate(streams, start=1):
        q, fit, offs = gwf_step(q, cfg, np.random.default_rng(ss))
        rec.append(g, q.q, fit, offs)
    return rec


def _batched_selection(q: Machine, cfg: GwfConfig, rng: np.random.Generator, runs: int,
                       chunk: int = 20000) -> np.ndarray:
    """Selected offspring of ``runs`` independent gWF steps from one parent."""
    out = np.empty((runs, len(q.dfa.edges)))
    batch_eval = getattr(cfg.phi, "evaluate_batch", None)
    for start in range(0, runs, chunk):
        b = min(chunk, runs - start)
        probs = _draw_offspring(q, cfg, rng, b * cfg.N).reshape(b, cfg.N, -1)
        if batch_eval is not None:
            fit = batch_eval(probs)
        else:
            fit = _evaluate(cfg.phi, probs.reshape(b * cfg.N, -1)).reshape(b, cfg.N)
        best = fit.max(axis=1, keepdims=True)
        ties = fit == best
        # uniform choice among maximisers: random keys restricted to tied entries
        keys = np.where(ties, rng.random(ties.shape), -1.0)
        pick = keys.argmax(axis=1)
        out[start:start + b] = probs[np.arange(b), pick]
    return out


def expectation_trajectory(q0: Machine, cfg: GwfConfig) -> FlowCurve:
    """Monte Carlo estimate of the expectation iteration, joined linearly in time.

    Each generation averages ``mc_runs`` selected offspring drawn from the
    current mean point.  Per-step standard errors are kept in ``extra``.
    """
    if cfg.mc_runs < 2:
        raise ValueError("mc_runs must be at least 2 to estimate standard errors")
    tau = cfg.step
    q = q0
    pts = [q0.q.copy()]
    ses = [np.zeros(len(q0.dfa.edges))]
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.generations)
    reason = "generations"
    for ss in streams:
        sel = _batched_selection(q, cfg, np.random.default_rng(ss), cfg.mc_runs)
        mean = sel.mean(axis=0)
        se = sel.std(axis=0, ddof=1) / math.sqrt(cfg.mc_runs)
        pts.append(mean)
        ses.append(se)
        if np.any(mean <= 0):
            reason = "boundary"
            break
        q = Machine.from_array(q0.dfa, mean / np.bincount(q0.dfa.edge_state, weights=mean)[q0.dfa.edge_state])
    times = tau * np.arange(len(pts))
    curve = Curve(q0.dfa, times, np.array(pts))
    params = {"N": cfg.N, "L": cfg.L, "beta": cfg.beta_value, "tau": tau, "mc_runs": cfg.mc_runs,
              "phi": cfg.phi.name, "seed": cfg.seed, "degenerate_policy": cfg.degenerate_policy,
              "phi_boundary": PHI_BOUNDARY}
    return FlowCurve(curve, "gwf-expectation", params, reason, {"generations": len(pts) - 1},
                     extra={"se": np.array(ses)})
