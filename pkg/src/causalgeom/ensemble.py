"""Empirical configuration ensembles: exact small-L laws, LDP and CLT checks.

An empirical type is the edge-count vector of a length-``L`` edge sequence,
viewed as a multigraph on the states.  Its number of orderings comes from the
BEST theorem, with arborescences counted by the matrix-tree theorem.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .evolution import EmpiricalMachine
from .geometry import Chart, metric_diagonal, relative_entropy_rate
from .machine import (DEFAULT_CAP, DfaType, EnumerationCapExceeded, Machine, sample_edge_counts,
                      stationary_array, stationary_state)

CYCLE = "cycle"


# ---------------------------------------------------------------------------
# empirical types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmpiricalType:
    """Edge multiplicities admitting an Euler path.

    For closed walks (``is_cycle``) both ``init_state`` and ``term_state`` are
    the lowest state touched by the support.
    """

    dfa: DfaType
    multiplicities: tuple[int, ...]
    init_state: int
    term_state: int
    is_cycle: bool

    @property
    def L(self) -> int:
        return sum(self.multiplicities)

    def out_degrees(self) -> np.ndarray:
        return np.bincount(self.dfa.edge_state, weights=self.multiplicities, minlength=self.dfa.n_states).astype(np.int64)

    def empirical_machine(self) -> EmpiricalMachine:
        return EmpiricalMachine(self.dfa, self.multiplicities)


def _degree_data(dfa: DfaType, x: np.ndarray):
    """Out-degree, in-degree and support mask per state for a stack of count vectors."""
    n = dfa.n_states
    out = np.zeros(x.shape[:-1] + (n,), dtype=np.int64)
    inn = np.zeros_like(out)
    for e in range(len(dfa.edges)):
        out[..., dfa.edge_state[e]] += x[..., e]
        inn[..., dfa.edge_target[e]] += x[..., e]
    return out, inn, (out + inn) > 0


def _connected(dfa: DfaType, x: np.ndarray, support: np.ndarray) -> np.ndarray:
    """Weak connectivity of the support multigraph, vectorised over rows of ``x``."""
    n = dfa.n_states
    m = x.shape[0]
    adj = np.zeros((m, n, n), dtype=bool)
    for e in range(len(dfa.edges)):
        j, k = dfa.edge_state[e], dfa.edge_target[e]
        present = x[:, e] > 0
        adj[:, j, k] |= present
        adj[:, k, j] |= present
    adj |= np.eye(n, dtype=bool)[None]
    reach = adj.copy()
    for _ in range(max(1, math.ceil(math.log2(max(n, 2))))):
        reach = np.einsum("mij,mjk->mik", reach.astype(np.int64), reach.astype(np.int64)) > 0
    first = support.argmax(axis=1)
    comp = reach[np.arange(m), first]
    return np.all(comp | ~support, axis=1)


def compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    bars = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(total + parts - 1), parts - 1)),
                       dtype=np.int64).reshape(-1, parts - 1)
    padded = np.concatenate([np.full((bars.shape[0], 1), -1), bars, np.full((bars.shape[0], 1), total + parts - 1)],
                            axis=1)
    return np.diff(padded, axis=1) - 1


def _feasible_types(dfa: DfaType, L: int, cap: int):
    n_edges = len(dfa.edges)
    count = math.comb(L + n_edges - 1, n_edges - 1)
    if count > cap:
        raise EnumerationCapExceeded(count, cap, "candidate edge-count vectors")
    x = compositions(L, n_edges)
    out, inn, support = _degree_data(dfa, x)
    diff = out - inn
    balanced = np.all(diff == 0, axis=1)
    one_src = ((diff == 1).sum(axis=1) == 1) & ((diff == -1).sum(axis=1) == 1) & (np.abs(diff).sum(axis=1) == 2)
    ok = (balanced | one_src) & _connected(dfa, x, support)
    x, out, inn, support, diff = x[ok], out[ok], inn[ok], support[ok], diff[ok]
    cyc = np.all(diff == 0, axis=1)
    first = support.argmax(axis=1)
    init = np.where(cyc, first, (diff == 1).argmax(axis=1))
    term = np.where(cyc, first, (diff == -1).argmax(axis=1))
    return x, out, support, cyc, init, term


def enumerate_empirical_types(dfa: DfaType, L: int, cap: int = DEFAULT_CAP) -> list[EmpiricalType]:
    if L < 1:
        raise ValueError("L must be positive")
    x, _, _, cyc, init, term = _feasible_types(dfa, L, cap)
    return [EmpiricalType(dfa, tuple(int(v) for v in row), int(i), int(t), bool(c))
            for row, c, i, t in zip(x, cyc, init, term)]


# ---------------------------------------------------------------------------
# Euler path counting
# ---------------------------------------------------------------------------


def _bareiss_det(mat: list[list[int]]) -> int:
    m = [list(r) for r in mat]
    n = len(m)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if m[r][k] != 0), None)
            if swap is None:
                return 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def _laplacian(dfa: DfaType, mult: Sequence[int]) -> list[list[int]]:
    n = dfa.n_states
    lap = [[0] * n for _ in range(n)]
    for e, c in enumerate(mult):
        if c:
            j, k = int(dfa.edge_state[e]), int(dfa.edge_target[e])
            lap[j][j] += c
            lap[j][k] -= c
    return lap


def count_arborescences(dfa: DfaType, mult: Sequence[int], root: int) -> int:
    """Spanning arborescences of the support oriented towards ``root`` (exact)."""
    lap = _laplacian(dfa, mult)
    out, inn, support = _degree_data(dfa, np.asarray(mult)[None])
    keep = [v for v in range(dfa.n_states) if support[0, v] and v != root]
    return _bareiss_det([[lap[r][c] for c in keep] for r in keep])


def _check_type(x: EmpiricalType):
    arr = np.asarray(x.multiplicities)[None]
    out, inn, support = _degree_data(x.dfa, arr)
    diff = (out - inn)[0]
    if x.is_cycle:
        if np.any(diff != 0):
            raise ValueError("cycle type is not balanced")
    else:
        expect = np.zeros_like(diff)
        expect[x.init_state] += 1
        expect[x.term_state] -= 1
        if np.any(diff != expect):
            raise ValueError("degree balance violated for the declared init/term states")
    if not _connected(x.dfa, arr, support)[0]:
        raise ValueError("support is not connected")
    return out[0], support[0]


def count_euler_circuits(x: EmpiricalType) -> int:
    """BEST count of Euler circuits (cyclic orderings of distinguishable edges)."""
    if not x.is_cycle:
        raise ValueError("Euler circuits need a balanced type")
    out, support = _check_type(x)
    arb = count_arborescences(x.dfa, x.multiplicities, x.term_state)
    prod = 1
    for v in np.flatnonzero(support):
        prod *= math.factorial(int(out[v]) - 1)
    return arb * prod


def count_euler_paths(x: EmpiricalType) -> int:
    """Euler trails of distinguishable edges that end at ``term(x)``.

    Trails from ``init`` to ``term`` equal the circuits of the graph closed up
    by one extra edge ``term -> init``; the extra edge never lies on an
    arborescence rooted at ``term``.  For closed types the trails start and end
    at ``term``, ``outdeg(term)`` per circuit.
    """
    out, support = _check_type(x)
    arb = count_arborescences(x.dfa, x.multiplicities, x.term_state)
    deg = out.copy()
    if not x.is_cycle:
        deg[x.term_state] += 1
    prod = 1
    for v in np.flatnonzero(support):
        prod *= math.factorial(int(deg[v]) - 1)
    trails = arb * prod
    if x.is_cycle:
        trails *= int(out[x.term_state])
    return trails


def edge_strings(x: EmpiricalType) -> int:
    """Number of distinct edge-label sequences of type ``x`` ending at ``term``."""
    denom = 1
    for c in x.multiplicities:
        denom *= math.factorial(c)
    n, r = divmod(count_euler_paths(x), denom)
    assert r == 0
    return n


# ---------------------------------------------------------------------------
# exact distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactDistribution:
    dfa: DfaType
    L: int
    support: tuple  # ((EmpiricalMachine, probability), ...)

    def total(self):
        return sum(p for _, p in self.support)

    def as_dict(self) -> dict:
        return {m.key: p for m, p in self.support}

    def __len__(self) -> int:
        return len(self.support)


def type_probability(q: Machine, x: EmpiricalType, pi=None):
    """Probability that a stationary length-L edge sequence has type ``x``.

    Exact (a :class:`~fractions.Fraction`) when ``q`` has rational entries.
    """
    exact = q.exact
    if pi is None:
        pi = stationary_state(q).weights if exact else stationary_array(q)
    out = x.out_degrees()
    if x.is_cycle:
        weight = sum(int(out[v]) * pi[v] for v in range(x.dfa.n_states))
        paths = count_euler_circuits(x)
    else:
        weight = pi[x.init_state]
        paths = count_euler_paths(x)
    denom = 1
    for c in x.multiplicities:
        denom *= math.factorial(c)
    if exact:
        val = Fraction(paths, denom) * weight
        for p, c in zip(q.probs, x.multiplicities):
            val *= Fraction(p) ** c
        return val
    return math.exp(log_type_probability(q, x, pi))


def log_type_probability(q: Machine, x: EmpiricalType, pi=None) -> float:
    if pi is None:
        pi = stationary_array(q)
    out = x.out_degrees()
    if x.is_cycle:
        weight = float(sum(out[v] * pi[v] for v in range(x.dfa.n_states)))
        paths = count_euler_circuits(x)
    else:
        weight = float(pi[x.init_state])
        paths = count_euler_paths(x)
    mult = np.asarray(x.multiplicities)
    logq = np.where(mult > 0, mult * np.log(np.where(mult > 0, q.q, 1.0)), 0.0)
    return math.log(weight) + math.log(paths) - float(gammaln(mult + 1).sum()) + float(logq.sum())


def exact_ensemble_distribution(q: Machine, L: int, cap: int = DEFAULT_CAP) -> ExactDistribution:
    """Law of the empirical machine ``Q^L`` under stationary sampling from ``q``."""
    types = enumerate_empirical_types(q.dfa, L, cap)
    exact = q.exact
    pi = stationary_state(q).weights if exact else stationary_array(q)
    acc: dict = {}
    rep: dict = {}
    for x in types:
        p = type_probability(q, x, pi)
        em = x.empirical_machine()
        k = em.key
        acc[k] = acc.get(k, 0) + p
        rep.setdefault(k, em)
    support = tuple(sorted(((rep[k], acc[k]) for k in acc), key=lambda t: t[0].counts))
    return ExactDistribution(q.dfa, L, support)


def brute_force_distribution(q: Machine, L: int, cap: int = DEFAULT_CAP) -> ExactDistribution:
    """Same law by enumerating every edge path of length ``L`` (oracle)."""
    dfa = q.dfa
    exact = q.exact
    pi = stationary_state(q).weights if exact else stationary_array(q)
    acc: dict = {}
    rep: dict = {}
    n_paths = 0

    def walk(state, depth, counts, prob):
        nonlocal n_paths
        if depth == L:
            n_paths += 1
            if n_paths > cap:
                raise EnumerationCapExceeded(n_paths, cap, "edge paths")
            em = EmpiricalMachine(dfa, tuple(counts))
            k = em.key
            acc[k] = acc.get(k, 0) + prob
            rep.setdefault(k, em)
            return
        for a in dfa.symbols_at(state):
            e = dfa.edge_index[(state, a)]
            counts[e] += 1
            walk(dfa.target(state, a), depth + 1, counts, prob * q.probs[e])
            counts[e] -= 1

    for j in range(dfa.n_states):
        if pi[j] != 0:
            walk(j, 0, [0] * len(dfa.edges), pi[j])
    support = tuple(sorted(((rep[k], acc[k]) for k in acc), key=lambda t: t[0].counts))
    return ExactDistribution(dfa, L, support)


# ---------------------------------------------------------------------------
# large deviations
# ---------------------------------------------------------------------------


def _log_arborescences_batch(dfa: DfaType, x: np.ndarray, support: np.ndarray, root: np.ndarray) -> np.ndarray:
    n = dfa.n_states
    m = x.shape[0]
    lap = np.zeros((m, n, n))
    for e in range(len(dfa.edges)):
        j, k = dfa.edge_state[e], dfa.edge_target[e]
        lap[:, j, j] += x[:, e]
        lap[:, j, k] -= x[:, e]
    # rows/cols of the root and of untouched states are replaced by identity
    drop = ~support.copy()
    drop[np.arange(m), root] = True
    eye = np.eye(n)
    lap = np.where(drop[:, :, None] | drop[:, None, :], eye[None], lap)
    sign, logdet = np.linalg.slogdet(lap)
    return np.where(sign > 0, logdet, -np.inf)


@dataclass(frozen=True)
class LdpRow:
    L: int
    counts: tuple[int, ...]
    support_point: np.ndarray
    log_prob: float
    rate: float
    h: float

    @property
    def rel_error(self) -> float:
        return abs(self.rate - self.h) / self.h if self.h > 0 else abs(self.rate)


def ensemble_log_probabilities(q: Machine, L: int, cap: int = DEFAULT_CAP):
    """Vectorised ``(types, log-probabilities)`` for all empirical types at length ``L``."""
    dfa = q.dfa
    x, out, support, cyc, init, term = _feasible_types(dfa, L, cap)
    pi = stationary_array(q)
    deg = out.copy()
    rows = np.arange(x.shape[0])
    deg[rows[~cyc], term[~cyc]] += 1
    log_fact = np.where(support, gammaln(np.maximum(deg, 1)), 0.0).sum(axis=1)
    log_arb = _log_arborescences_batch(dfa, x, support, term)
    weight = np.where(cyc, out @ pi, pi[init])
    with np.errstate(divide="ignore"):
        logq = np.log(q.q)
    logp = (np.log(weight) + log_arb + log_fact - gammaln(x + 1).sum(axis=1)
            + np.where(x > 0, x * logq, 0.0).sum(axis=1))
    return x, logp


def ldp_rate_check(q: Machine, target: Machine, L_grid: Sequence[int], cap: int = DEFAULT_CAP) -> list[LdpRow]:
    """Compare ``-(1/L) log Pr[Q^L = q_L]`` with ``h(q_L || q)`` for the support point nearest ``target``.

    Nearness is measured with the metric at ``q``.  The probability of
    ``q_L`` sums all types whose rows are proportional to it.
    """
    if q.dfa != target.dfa:
        raise ValueError("machines live on different DFA-types")
    if target.is_boundary:
        raise ValueError("target must be interior")
    dfa = q.dfa
    gdiag = metric_diagonal(q)
    rows = []
    for L in L_grid:
        x, logp = ensemble_log_probabilities(q, L, cap)
        out = np.zeros((x.shape[0], dfa.n_states), dtype=np.int64)
        for j in range(dfa.n_states):
            out[:, j] = x[:, dfa.edge_state == j].sum(axis=1)
        denom = out[:, dfa.edge_state]
        valid = np.all(denom > 0, axis=1) & np.all(x > 0, axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            pts = x / denom
        dist = np.where(valid, np.sum(gdiag * (pts - target.q) ** 2, axis=1), np.inf)
        best = int(np.argmin(dist))
        # all types mapping to the same point: cross-multiplied proportionality per edge
        same = valid & np.all(x * denom[best] == x[best] * denom, axis=1)
        lp = logp[same]
        top = lp.max()
        log_prob = float(top + np.log(np.exp(lp - top).sum()))
        qL = Machine.from_array(dfa, pts[best])
        rows.append(LdpRow(L, tuple(int(v) for v in x[best]), pts[best], log_prob, -log_prob / L,
                           relative_entropy_rate(qL, q)))
    return rows


# ---------------------------------------------------------------------------
# central limit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CltResult:
    covariance: np.ndarray
    mean: np.ndarray
    n_used: int
    n_dropped: int
    skewness: np.ndarray
    excess_kurtosis: np.ndarray

    @property
    def max_cov_error(self) -> float:
        return float(np.max(np.abs(self.covariance - np.eye(self.covariance.shape[0]))))

    @property
    def frobenius_error(self) -> float:
        return float(np.linalg.norm(self.covariance - np.eye(self.covariance.shape[0])))


def orthonormal_coframe(q: Machine) -> tuple[np.ndarray, np.ndarray]:
    """``(frame, coframe)``: g-orthonormal tangent frame (columns) and its g-dual rows."""
    b = Chart(q.dfa).basis
    gd = metric_diagonal(q)
    gmat = b.T @ (gd[:, None] * b)
    chol = np.linalg.cholesky(gmat)
    frame = b @ np.linalg.inv(chol).T
    coframe = (frame * gd[:, None]).T
    return frame, coframe


def clt_covariance_check(q: Machine, L: int, n_samples: int, seed=0, max_drop: float = 0.01) -> CltResult:
    """Sample covariance of ``sqrt(L)(Q^L - q)`` in a g-orthonormal frame at ``q``."""
    if q.is_boundary:
        raise ValueError("CLT check needs an interior machine")
    rng = np.random.default_rng(seed)
    dfa = q.dfa
    counts = sample_edge_counts(q, L, n_samples, rng)
    out = np.zeros((n_samples, dfa.n_states), dtype=np.int64)
    for j in range(dfa.n_states):
        out[:, j] = counts[:, dfa.edge_state == j].sum(axis=1)
    good = np.all(out > 0, axis=1) & np.all(counts > 0, axis=1)
    dropped = int((~good).sum())
    if dropped > max_drop * n_samples:
        raise ValueError(f"{dropped} of {n_samples} draws are degenerate")
    qs = counts[good] / out[good][:, dfa.edge_state]
    v = math.sqrt(L) * (qs - q.q)
    _, coframe = orthonormal_coframe(q)
    y = v @ coframe.T
    mean = y.mean(axis=0)
    cov = np.cov(y, rowvar=False).reshape(y.shape[1], y.shape[1])
    centered = (y - mean) / y.std(axis=0)
    skew = (centered ** 3).mean(axis=0)
    kurt = (centered ** 4).mean(axis=0) - 3.0
    return CltResult(cov, mean, int(good.sum()), dropped, skew, kurt)


def monte_carlo_distribution(q: Machine, L: int, n_samples: int, seed=0) -> dict:
    """Empirical frequencies of ``Q^L`` keys from ``n_samples`` simulated runs."""
    rng = np.random.default_rng(seed)
    counts = sample_edge_counts(q, L, n_samples, rng)
    uniq, freq = np.unique(counts, axis=0, return_counts=True)
    acc: dict = {}
    for row, f in zip(uniq, freq):
        k = EmpiricalMachine(q.dfa, tuple(int(c) for c in row)).key
        acc[k] = acc.get(k, 0) + int(f)
    return {k: v / n_samples for k, v in acc.items()}
