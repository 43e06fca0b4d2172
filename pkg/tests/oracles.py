"""Independent reference computations used by the tests.

Nothing here calls the library's numerical routines; inputs are read from
``Machine.q`` and the DFA table only.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components


def symbol_matrices(m) -> np.ndarray:
    """``T[a][j, k] = q^{j,a}`` when ``gamma(j, a) = k``."""
    dfa = m.dfa
    t = np.zeros((dfa.n_symbols, dfa.n_states, dfa.n_states))
    for (j, a), p in zip(dfa.edges, m.q):
        t[a, j, dfa.target(j, a)] = p
    return t


def stationary_eig(m) -> np.ndarray:
    t = symbol_matrices(m).sum(axis=0)
    w, v = np.linalg.eig(t.T)
    pi = np.real(v[:, np.argmin(np.abs(w - 1))])
    return pi / pi.sum()


def block_probabilities(m, L: int) -> np.ndarray:
    """Probabilities of all ``|A|^L`` words, stationary start, lexicographic order."""
    t = symbol_matrices(m)
    fwd = stationary_eig(m)[None, :]
    for _ in range(L):
        fwd = np.einsum("wj,ajk->wak", fwd, t).reshape(-1, t.shape[1])
    return fwd.sum(axis=1)


def block_divergence(q_target, q_base, L: int) -> float:
    """``Cr(q'||q) - Cr(q'||q')`` over length-L blocks (blockwise KL divergence)."""
    p1 = block_probabilities(q_target, L)
    p0 = block_probabilities(q_base, L)
    pos = p1 > 0
    return float(np.sum(p1[pos] * (np.log(p1[pos]) - np.log(p0[pos]))))


def relent_rate_richardson(q_target, q_base, lengths=range(10, 17)) -> float:
    """Fit ``D_L / L = h + c / L`` over the given lengths and return ``h``."""
    ls = np.array(list(lengths), dtype=float)
    d = np.array([block_divergence(q_target, q_base, int(L)) for L in ls]) / ls
    a = np.column_stack([np.ones_like(ls), 1.0 / ls])
    return float(np.linalg.lstsq(a, d, rcond=None)[0][0])


def max_normal_mc(N: int, draws: int, rng: np.random.Generator, chunk: int = 10**6) -> tuple[float, float]:
    """Mean and standard error of the maximum of ``N`` standard normals."""
    s = s2 = 0.0
    done = 0
    while done < draws:
        b = min(chunk, draws - done)
        x = rng.standard_normal((b, N)).max(axis=1)
        s += x.sum()
        s2 += (x * x).sum()
        done += b
    mean = s / draws
    var = (s2 - draws * mean * mean) / (draws - 1)
    return mean, math.sqrt(var / draws)


def strongly_connected_scipy(dfa) -> bool:
    n = dfa.n_states
    rows, cols = [], []
    for j, a in dfa.edges:
        rows.append(j)
        cols.append(dfa.target(j, a))
    g = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    return connected_components(g, directed=True, connection="strong")[0] == 1


def sphere_energy(p, p2) -> float:
    bc = float(np.sum(np.sqrt(np.asarray(p) * np.asarray(p2))))
    return 0.5 * (2.0 * math.acos(min(1.0, bc))) ** 2


def conditional_divergences(q_target, q_base, L: int, digits: int = 12) -> np.ndarray:
    """``D_l - D_{l-1}`` for ``l = 1..L`` by propagating pairs of mixed states.

    Words sharing the pair (mixed state under q', mixed state under q) have the
    same conditional next-symbol laws, so they are merged; the number of
    distinct pairs stays small for synchronizing machines.
    """
    t1, t0 = symbol_matrices(q_target), symbol_matrices(q_base)
    front = {None: (stationary_eig(q_target), stationary_eig(q_base), 1.0)}
    out = []
    for _ in range(L):
        acc = 0.0
        nxt: dict = {}
        for mu1, mu0, w in front.values():
            p1 = np.einsum("j,ajk->a", mu1, t1)
            p0 = np.einsum("j,ajk->a", mu0, t0)
            for a in range(t1.shape[0]):
                if p1[a] <= 0:
                    continue
                acc += w * p1[a] * math.log(p1[a] / p0[a])
                n1 = mu1 @ t1[a] / p1[a]
                n0 = mu0 @ t0[a] / p0[a]
                key = (tuple(np.round(n1, digits)), tuple(np.round(n0, digits)))
                if key in nxt:
                    nxt[key] = (n1, n0, nxt[key][2] + w * p1[a])
                else:
                    nxt[key] = (n1, n0, w * p1[a])
        front = nxt
        out.append(acc)
    return np.array(out)
