"""Unifilar hidden Markov machines and the combinatorics of their DFA-types.

A :class:`DfaType` is the transition skeleton of a unifilar machine: a partial
map ``(state, symbol) -> state``.  A :class:`Machine` attaches a probability to
every defined edge so that each state's outgoing probabilities sum to one.

States are the integers ``0..n-1``; symbols are referred to by their index in
the :class:`Alphabet`.  Probabilities may be floats or :class:`fractions.Fraction`
instances; exact fractions are kept as-is so that downstream combinatorics can
run in rational arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_CAP = 10**7
ROW_SUM_TOL = 1e-12
PREDICTIVE_TOL = 1e-10

Edge = tuple[int, int]


class EnumerationCapExceeded(ValueError):
    """Raised when an enumeration would produce more objects than allowed."""

    def __init__(self, required: int, cap: int, what: str = "objects"):
        super().__init__(f"enumeration would produce {required} {what}, cap is {cap}")
        self.required = required
        self.cap = cap


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...]

    def __post_init__(self):
        syms = tuple(str(s) for s in self.symbols)
        if not syms:
            raise ValueError("alphabet must be nonempty")
        if len(set(syms)) != len(syms):
            raise ValueError(f"duplicate symbols in alphabet {syms}")
        object.__setattr__(self, "symbols", syms)

    @classmethod
    def of_size(cls, k: int) -> "Alphabet":
        return cls(tuple(str(i) for i in range(k)))

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def index(self, symbol) -> int:
        try:
            return self.symbols.index(str(symbol))
        except ValueError:
            raise KeyError(f"symbol {symbol!r} not in alphabet {self.symbols}") from None


@dataclass(frozen=True)
class DfaType:
    """Partial transition function of a unifilar machine.

    ``table[j][a]`` is the successor of state ``j`` on symbol index ``a`` or
    ``None`` when the edge is absent.  Every state needs one outgoing edge.
    """

    alphabet: Alphabet
    table: tuple[tuple[int | None, ...], ...]

    def __post_init__(self):
        table = tuple(tuple(None if k is None else int(k) for k in row) for row in self.table)
        n = len(table)
        if n == 0:
            raise ValueError("a DFA-type needs at least one state")
        for j, row in enumerate(table):
            if len(row) != len(self.alphabet):
                raise ValueError(f"row {j} has {len(row)} entries, alphabet has {len(self.alphabet)}")
            if all(k is None for k in row):
                raise ValueError(f"state {j} has no outgoing edge")
            for k in row:
                if k is not None and not 0 <= k < n:
                    raise ValueError(f"target state {k} out of range")
        object.__setattr__(self, "table", table)

    # -- construction ---------------------------------------------------

    @classmethod
    def from_transitions(cls, n_states: int, alphabet: Alphabet, transitions: Mapping[Edge, int]) -> "DfaType":
        table = [[None] * len(alphabet) for _ in range(n_states)]
        for (j, a), k in transitions.items():
            table[j][a] = k
        return cls(alphabet, tuple(tuple(r) for r in table))

    @classmethod
    def from_code(cls, code: str, alphabet: Alphabet | None = None) -> "DfaType":
        """Parse the 1-based digit code ``gamma(1,0)gamma(1,1)gamma(2,0)...``.

        ``'.'`` marks an undefined edge, e.g. ``"2121"`` or ``"12.1"``.
        """
        code = code.strip()
        if alphabet is None:
            alphabet = Alphabet.of_size(2)
        k = len(alphabet)
        if len(code) % k:
            raise ValueError(f"code {code!r} length is not a multiple of |A|={k}")
        rows = []
        for i in range(0, len(code), k):
            rows.append(tuple(None if c == "." else int(c) - 1 for c in code[i:i + k]))
        return cls(alphabet, tuple(rows))

    # -- derived data ---------------------------------------------------

    @property
    def n_states(self) -> int:
        return len(self.table)

    @property
    def n_symbols(self) -> int:
        return len(self.alphabet)

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        return tuple((j, a) for j, row in enumerate(self.table) for a, k in enumerate(row) if k is not None)

    @cached_property
    def edge_index(self) -> dict[Edge, int]:
        return {e: i for i, e in enumerate(self.edges)}

    @cached_property
    def edge_state(self) -> np.ndarray:
        return np.array([j for j, _ in self.edges], dtype=np.intp)

    @cached_property
    def edge_symbol(self) -> np.ndarray:
        return np.array([a for _, a in self.edges], dtype=np.intp)

    @cached_property
    def edge_target(self) -> np.ndarray:
        return np.array([self.table[j][a] for j, a in self.edges], dtype=np.intp)

    def symbols_at(self, j: int) -> tuple[int, ...]:
        return tuple(a for a, k in enumerate(self.table[j]) if k is not None)

    def target(self, j: int, a: int) -> int | None:
        return self.table[j][a]

    @property
    def dimension(self) -> int:
        """Dimension of the face: sum over states of (out-degree - 1)."""
        return len(self.edges) - self.n_states

    @property
    def is_top_dimensional(self) -> bool:
        return all(k is not None for row in self.table for k in row)

    def code(self) -> str:
        return "".join("." if k is None else str(k + 1) for row in self.table for k in row)

    def canonical_code(self) -> str:
        """Lexicographically least code over all relabelings of the states."""
        n = self.n_states
        best = None
        for perm in itertools.permutations(range(n)):
            inv = {old: new for new, old in enumerate(perm)}
            rows = []
            for new in range(n):
                old = perm[new]
                rows.append(tuple(None if k is None else inv[k] for k in self.table[old]))
            c = DfaType(self.alphabet, tuple(rows)).code()
            if best is None or c < best:
                best = c
        return best

    def __str__(self) -> str:
        return self.code()


# ---------------------------------------------------------------------------
# enumeration and connectivity
# ---------------------------------------------------------------------------


def count_dfa_types(n_states: int, alphabet_size: int) -> int:
    return ((n_states + 1) ** alphabet_size - 1) ** n_states


def enumerate_dfa_types(n_states: int, alphabet: Alphabet | int, strongly_connected_only: bool = False,
                        cap: int = DEFAULT_CAP) -> list[DfaType]:
    if isinstance(alphabet, int):
        alphabet = Alphabet.of_size(alphabet)
    if n_states < 1:
        raise ValueError("n_states must be positive")
    total = count_dfa_types(n_states, len(alphabet))
    if total > cap:
        raise EnumerationCapExceeded(total, cap, "DFA-types")
    choices = [None, *range(n_states)]
    rows = [r for r in itertools.product(choices, repeat=len(alphabet)) if any(k is not None for k in r)]
    out = []
    for table in itertools.product(rows, repeat=n_states):
        dfa = DfaType(alphabet, table)
        if strongly_connected_only and not is_strongly_connected(dfa):
            continue
        out.append(dfa)
    return out


def _reachable(adj: Sequence[Iterable[int]], start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def is_strongly_connected(dfa: DfaType) -> bool:
    n = dfa.n_states
    fwd = [set() for _ in range(n)]
    bwd = [set() for _ in range(n)]
    for j, row in enumerate(dfa.table):
        for k in row:
            if k is not None:
                fwd[j].add(k)
                bwd[k].add(j)
    return len(_reachable(fwd, 0)) == n and len(_reachable(bwd, 0)) == n


# ---------------------------------------------------------------------------
# machines and mixed states
# ---------------------------------------------------------------------------


def _is_exact(x) -> bool:
    return isinstance(x, Rational)


@dataclass(frozen=True)
class Machine:
    """A point of a configuration face: one probability per edge of ``dfa``.

    ``probs`` is aligned with ``dfa.edges``.  Entries equal to zero are allowed
    but mark the machine as a boundary point (see :attr:`is_boundary`).
    """

    dfa: DfaType
    probs: tuple

    def __post_init__(self):
        probs = tuple(self.probs)
        if len(probs) != len(self.dfa.edges):
            raise ValueError(f"expected {len(self.dfa.edges)} probabilities, got {len(probs)}")
        probs = tuple(p if _is_exact(p) else float(p) for p in probs)
        for p in probs:
            if p < 0 or p > 1 or (isinstance(p, float) and not math.isfinite(p)):
                raise ValueError(f"probability {p} outside [0, 1]")
        object.__setattr__(self, "probs", probs)
        sums = self.row_sums()
        for j, s in enumerate(sums):
            if abs(float(s) - 1.0) > ROW_SUM_TOL:
                raise ValueError(f"row {j} sums to {float(s)!r}, not 1")

    @classmethod
    def from_array(cls, dfa: DfaType, values) -> "Machine":
        return cls(dfa, tuple(float(v) for v in np.asarray(values, dtype=float)))

    @classmethod
    def from_rows(cls, dfa: DfaType, rows: Mapping[int, Mapping[int, float]]) -> "Machine":
        return cls(dfa, tuple(rows[j][a] for j, a in dfa.edges))

    @classmethod
    def uniform(cls, dfa: DfaType, exact: bool = False) -> "Machine":
        probs = []
        for j, _ in dfa.edges:
            d = len(dfa.symbols_at(j))
            probs.append(Fraction(1, d) if exact else 1.0 / d)
        return cls(dfa, tuple(probs))

    @classmethod
    def from_coordinates(cls, dfa: DfaType, coords: Sequence[float]) -> "Machine":
        """Build from the free coordinates (all edges but the last of each state)."""
        coords = list(coords)
        vals = []
        i = 0
        for j in range(dfa.n_states):
            syms = dfa.symbols_at(j)
            row = []
            for _ in syms[:-1]:
                row.append(coords[i])
                i += 1
            row.append(1 - sum(row))
            vals.extend(row)
        if i != len(coords):
            raise ValueError(f"expected {i} coordinates, got {len(coords)}")
        return cls(dfa, tuple(vals))

    @cached_property
    def q(self) -> np.ndarray:
        arr = np.array([float(p) for p in self.probs])
        arr.setflags(write=False)
        return arr

    @property
    def exact(self) -> bool:
        return all(_is_exact(p) for p in self.probs)

    @property
    def is_boundary(self) -> bool:
        return any(p == 0 for p in self.probs)

    @property
    def is_interior(self) -> bool:
        return not self.is_boundary

    def prob(self, j: int, a: int):
        idx = self.dfa.edge_index.get((j, a))
        return 0 if idx is None else self.probs[idx]

    def row_sums(self) -> list:
        sums = [0] * self.dfa.n_states
        for (j, _), p in zip(self.dfa.edges, self.probs):
            sums[j] = sums[j] + p
        return sums

    def transition_matrix(self) -> np.ndarray:
        n = self.dfa.n_states
        t = np.zeros((n, n))
        np.add.at(t, (self.dfa.edge_state, self.dfa.edge_target), self.q)
        return t

    def output_operators(self) -> np.ndarray:
        """Stack of ``T^(a)`` matrices with ``T^(a)[j, k] = q^{j,a}`` iff ``gamma(j,a) = k``."""
        n = self.dfa.n_states
        ops = np.zeros((self.dfa.n_symbols, n, n))
        ops[self.dfa.edge_symbol, self.dfa.edge_state, self.dfa.edge_target] = self.q
        return ops

    def with_probs(self, values) -> "Machine":
        return Machine.from_array(self.dfa, values)

    def coordinates(self) -> np.ndarray:
        keep = [i for i, (j, a) in enumerate(self.dfa.edges) if a != self.dfa.symbols_at(j)[-1]]
        return self.q[keep]

    def __str__(self) -> str:
        parts = [f"{j} {self.dfa.alphabet.symbols[a]}={float(p):.6g}" for (j, a), p in zip(self.dfa.edges, self.probs)]
        return f"Machine[{self.dfa.code()}]({', '.join(parts)})"


@dataclass(frozen=True)
class MixedState:
    weights: tuple

    def __post_init__(self):
        w = tuple(x if _is_exact(x) else float(x) for x in self.weights)
        if any(x < 0 for x in w):
            raise ValueError("mixed-state weights must be nonnegative")
        if abs(float(sum(w)) - 1.0) > ROW_SUM_TOL:
            raise ValueError(f"mixed-state weights sum to {float(sum(w))!r}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def pure(cls, j: int, n_states: int) -> "MixedState":
        return cls(tuple(1 if i == j else 0 for i in range(n_states)))

    @cached_property
    def p(self) -> np.ndarray:
        return np.array([float(x) for x in self.weights])

    def __len__(self) -> int:
        return len(self.weights)

    def __getitem__(self, j):
        return self.weights[j]


@dataclass(frozen=True)
class StatePartition:
    blocks: tuple[frozenset[int], ...]

    def __post_init__(self):
        blocks = tuple(sorted((frozenset(b) for b in self.blocks), key=min))
        seen = set()
        for b in blocks:
            if not b:
                raise ValueError("empty block")
            if seen & b:
                raise ValueError("blocks overlap")
            seen |= b
        if seen != set(range(len(seen))):
            raise ValueError("blocks do not cover 0..n-1")
        object.__setattr__(self, "blocks", blocks)

    @property
    def n_states(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def is_discrete(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)

    def block_of(self, j: int) -> frozenset[int]:
        for b in self.blocks:
            if j in b:
                return b
        raise KeyError(j)

    def as_lists(self) -> list[list[int]]:
        return [sorted(b) for b in self.blocks]


# ---------------------------------------------------------------------------
# stationary state
# ---------------------------------------------------------------------------


def _fraction_det(rows: list[list[Fraction]]) -> Fraction:
    m = [list(r) for r in rows]
    n = len(m)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            det = -det
        det *= m[c][c]
        for r in range(c + 1, n):
            f = m[r][c] / m[c][c]
            if f:
                for k in range(c, n):
                    m[r][k] -= f * m[c][k]
    return det


def _principal_minor(mat, j: int, exact: bool):
    idx = [i for i in range(len(mat)) if i != j]
    if not idx:
        return Fraction(1) if exact else 1.0
    if exact:
        return _fraction_det([[mat[r][c] for c in idx] for r in idx])
    return float(np.linalg.det(np.asarray(mat)[np.ix_(idx, idx)]))


def stationary_state(m: Machine) -> MixedState:
    """Unique stationary mixed state from the principal minors of ``1 - qbar``."""
    if not is_strongly_connected(m.dfa):
        raise ValueError("stationary state is unique only for strongly connected DFA-types")
    n = m.dfa.n_states
    exact = m.exact
    if exact:
        mat = [[Fraction(int(r == c)) for c in range(n)] for r in range(n)]
        for (j, _), k, p in zip(m.dfa.edges, m.dfa.edge_target, m.probs):
            mat[j][int(k)] -= p
    else:
        mat = np.eye(n) - m.transition_matrix()
    minors = [_principal_minor(mat, j, exact) for j in range(n)]
    total = sum(minors)
    if exact:
        return MixedState(tuple(x / total for x in minors))
    pi = np.array(minors) / total
    # rounding can leave a relative error of a few ulp in the normalisation
    pi = np.clip(pi, 0.0, None)
    return MixedState(tuple(pi / pi.sum()))


def stationary_by_solve(m: Machine) -> np.ndarray:
    """Stationary distribution from a direct linear solve (cross-check path)."""
    n = m.dfa.n_states
    a = (np.eye(n) - m.transition_matrix()).T
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return np.linalg.solve(a, b)


def stationary_array(m: Machine) -> np.ndarray:
    return stationary_state(m).p


# ---------------------------------------------------------------------------
# block probabilities and sampling
# ---------------------------------------------------------------------------


def _as_init(init, n: int) -> np.ndarray:
    if isinstance(init, MixedState):
        return init.p
    return np.asarray(init, dtype=float).reshape(n)


def word_probability(m: Machine, init, word: Sequence) -> float:
    """Probability ``init . T^(a_1) ... T^(a_L) . 1`` of an output word.

    ``word`` holds symbol indices (ints) or alphabet symbols (strings).
    """
    ops = m.output_operators()
    vec = _as_init(init, m.dfa.n_states)
    for a in word:
        idx = a if isinstance(a, (int, np.integer)) else m.dfa.alphabet.index(a)
        vec = vec @ ops[idx]
    return float(vec.sum())


def edge_sequence_probability(m: Machine, init, edges: Sequence[Edge]):
    """Probability of an edge sequence; zero unless consecutive edges are gamma-consistent."""
    if not edges:
        return 1.0
    weights = init.weights if isinstance(init, MixedState) else tuple(init)
    j0 = edges[0][0]
    prob = weights[j0]
    for i, (j, a) in enumerate(edges):
        k = m.dfa.target(j, a)
        if k is None:
            return 0
        if i + 1 < len(edges) and edges[i + 1][0] != k:
            return 0
        prob = prob * m.prob(j, a)
    return prob


def _cumulative_rows(m: Machine):
    n = m.dfa.n_states
    syms = [np.array(m.dfa.symbols_at(j)) for j in range(n)]
    cums = [np.cumsum([float(m.prob(j, a)) for a in syms[j]]) for j in range(n)]
    for c in cums:
        c[-1] = 1.0
    return syms, cums


def sample_edge_sequence(m: Machine, init, length: int, seed=None) -> list[Edge]:
    if length < 1:
        raise ValueError("length must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = m.dfa.n_states
    p0 = _as_init(init, n)
    syms, cums = _cumulative_rows(m)
    j = int(np.searchsorted(np.cumsum(p0), rng.random() * p0.sum(), side="right"))
    j = min(j, n - 1)
    out = []
    for u in rng.random(length):
        a = int(syms[j][np.searchsorted(cums[j], u, side="right")])
        out.append((j, a))
        j = m.dfa.table[j][a]
    return out


def sample_edge_counts(m: Machine, length: int, size: int, rng: np.random.Generator, init=None,
                       chunk: int = 65536) -> np.ndarray:
    """Edge-count vectors of ``size`` independent length-``length`` runs.

    Returns an integer array of shape ``(size, |E|)``.  Runs start from ``init``
    (default: the stationary state).  One-state machines are drawn directly
    from the multinomial law of the counts.
    """
    dfa = m.dfa
    n_edges = len(dfa.edges)
    if dfa.n_states == 1:
        return rng.multinomial(length, m.q / m.q.sum(), size=size)
    p0 = stationary_array(m) if init is None else _as_init(init, dfa.n_states)
    # per-state cumulative distribution over local edge ids, padded with +inf
    width = max(len(dfa.symbols_at(j)) for j in range(dfa.n_states))
    cum = np.full((dfa.n_states, width), np.inf)
    local_edge = np.zeros((dfa.n_states, width), dtype=np.intp)
    for j in range(dfa.n_states):
        ids = [dfa.edge_index[(j, a)] for a in dfa.symbols_at(j)]
        c = np.cumsum(m.q[ids])
        c[-1] = np.inf
        cum[j, :len(ids)] = c
        local_edge[j, :len(ids)] = ids
        local_edge[j, len(ids):] = ids[-1]
    targets = dfa.edge_target
    out = np.zeros((size, n_edges), dtype=np.int64)
    for start in range(0, size, chunk):
        b = min(chunk, size - start)
        rows = np.arange(b)
        state = np.searchsorted(np.cumsum(p0), rng.random(b) * p0.sum(), side="right")
        state = np.minimum(state, dfa.n_states - 1)
        counts = np.zeros((b, n_edges), dtype=np.int64)
        for _ in range(length):
            u = rng.random(b)
            slot = (u[:, None] >= cum[state]).sum(axis=1)
            edge = local_edge[state, slot]
            counts[rows, edge] += 1
            state = targets[edge]
        out[start:start + b] = counts
    return out


# ---------------------------------------------------------------------------
# predictive distinctness and degenerate strata
# ---------------------------------------------------------------------------


def mixed_state_entropy(mu) -> float:
    mu = np.asarray(mu.p if isinstance(mu, MixedState) else mu, dtype=float)
    if np.any(mu < 0):
        raise ValueError("mixed state must be nonnegative")
    total = mu.sum()
    if total <= 0:
        raise ValueError("mixed state must have positive mass")
    n = mu.size
    if n == 1:
        return 0.0
    p = mu[mu > 0] / total
    return float(-(p * np.log(p)).sum() / math.log(n))


def future_word_matrix(m: Machine, length: int, cap: int = DEFAULT_CAP) -> np.ndarray:
    """``W[j, w] = Pr(word w | start in state j)`` for all words of ``length``."""
    k = m.dfa.n_symbols
    if k ** length > cap:
        raise EnumerationCapExceeded(k ** length, cap, "words")
    ops = m.output_operators()
    vecs = np.ones((m.dfa.n_states, 1))
    for _ in range(length):
        vecs = np.concatenate([ops[a] @ vecs for a in range(k)], axis=1)
    return vecs


def predictive_partition(m: Machine, tol: float = PREDICTIVE_TOL, cap: int = DEFAULT_CAP) -> StatePartition:
    n = m.dfa.n_states
    words = future_word_matrix(m, 2 * n - 1, cap=cap)
    reps: list[int] = []
    blocks: list[set[int]] = []
    for j in range(n):
        for r, b in zip(reps, blocks):
            if np.max(np.abs(words[j] - words[r])) <= tol:
                b.add(j)
                break
        else:
            reps.append(j)
            blocks.append({j})
    return StatePartition(tuple(frozenset(b) for b in blocks))


def is_csm(m: Machine) -> bool:
    return predictive_partition(m).is_discrete


def _set_partitions(items: list[int]):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def congruence_partitions(dfa: DfaType) -> list[StatePartition]:
    """Partitions that can arise as predictive partitions on the face of ``dfa``.

    A block may only merge states with equal symbol sets whose successors on
    each symbol again share a block.
    """
    out = []
    for part in _set_partitions(list(range(dfa.n_states))):
        where = {j: i for i, b in enumerate(part) for j in b}
        ok = True
        for b in part:
            j0 = b[0]
            for k in b[1:]:
                if dfa.symbols_at(k) != dfa.symbols_at(j0):
                    ok = False
                    break
                for a in dfa.symbols_at(j0):
                    if where[dfa.target(j0, a)] != where[dfa.target(k, a)]:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            out.append(StatePartition(tuple(frozenset(b) for b in part)))
    return out


def stratum_equations(dfa: DfaType, sigma: StatePartition) -> np.ndarray:
    """Rows ``c`` with ``c . q = 0`` cutting out the stratum of ``sigma`` in ambient coordinates."""
    rows = []
    for b in sigma.blocks:
        members = sorted(b)
        for k in members[1:]:
            for a in dfa.symbols_at(members[0]):
                c = np.zeros(len(dfa.edges))
                c[dfa.edge_index[(members[0], a)]] = 1.0
                c[dfa.edge_index[(k, a)]] = -1.0
                rows.append(c)
    return np.array(rows).reshape(len(rows), len(dfa.edges))


def tangent_basis(dfa: DfaType) -> np.ndarray:
    """Columns span the per-state zero-sum subspace (chart basis vectors)."""
    cols = []
    for j in range(dfa.n_states):
        syms = dfa.symbols_at(j)
        last = dfa.edge_index[(j, syms[-1])]
        for a in syms[:-1]:
            v = np.zeros(len(dfa.edges))
            v[dfa.edge_index[(j, a)]] = 1.0
            v[last] = -1.0
            cols.append(v)
    return np.array(cols).T.reshape(len(dfa.edges), len(cols))


def stratum_codimension(dfa: DfaType, sigma: StatePartition) -> int:
    eqs = stratum_equations(dfa, sigma)
    if eqs.size == 0:
        return 0
    return int(np.linalg.matrix_rank(eqs @ tangent_basis(dfa)))


def in_stratum(m: Machine, sigma: StatePartition, tol: float = PREDICTIVE_TOL) -> bool:
    eqs = stratum_equations(m.dfa, sigma)
    return eqs.size == 0 or bool(np.max(np.abs(eqs @ m.q)) <= tol)


def same_component(q: Machine, q2: Machine) -> str:
    """Decide whether two CSMs on one face lie in the same component of the non-degenerate part.

    Returns ``"yes"`` when the straight segment between them misses every
    degenerate stratum, ``"no"`` when some codimension-one stratum separates
    them, and ``"unknown"`` otherwise.
    """
    if q.dfa != q2.dfa:
        raise ValueError("machines live on different DFA-types")
    for m in (q, q2):
        if not predictive_partition(m).is_discrete:
            raise ValueError("both machines must have predictively distinct states")
    strata = [s for s in congruence_partitions(q.dfa) if not s.is_discrete]
    # exact segment test: c.(q + s d) = 0 for all rows of the stratum and some s in [0, 1]
    a, d = q.q, q2.q - q.q
    crossed = []
    for sigma in strata:
        eqs = stratum_equations(q.dfa, sigma)
        c0, c1 = eqs @ a, eqs @ d
        scale = max(1.0, float(np.max(np.abs(eqs))))
        tol = 1e-12 * scale
        s_vals = []
        feasible = True
        for x0, x1 in zip(c0, c1):
            if abs(x1) <= tol:
                if abs(x0) > tol:
                    feasible = False
                    break
            else:
                s_vals.append(-x0 / x1)
        if not feasible:
            continue
        if s_vals:
            s0 = s_vals[0]
            if any(abs(s - s0) > 1e-9 for s in s_vals) or not -1e-12 <= s0 <= 1 + 1e-12:
                continue
        crossed.append(sigma)
    if not crossed:
        return "yes"
    for sigma in strata:
        if stratum_codimension(q.dfa, sigma) != 1:
            continue
        eqs = stratum_equations(q.dfa, sigma)
        # a codimension-one stratum is a hyperplane: every equation is a multiple of one functional
        row = eqs[np.argmax(np.abs(eqs @ d))] if np.any(eqs @ d) else eqs[0]
        s1, s2 = float(row @ q.q), float(row @ q2.q)
        if s1 * s2 < 0 and min(abs(s1), abs(s2)) > PREDICTIVE_TOL:
            return "no"
    return "unknown"
