from __future__ import annotations

from fractions import Fraction as F

import numpy as np
import pytest

from causalgeom.figures import nemo_dfa
from causalgeom.machine import (
    Alphabet,
    DfaType,
    EnumerationCapExceeded,
    Machine,
    MixedState,
    congruence_partitions,
    count_dfa_types,
    edge_sequence_probability,
    enumerate_dfa_types,
    in_stratum,
    is_csm,
    is_strongly_connected,
    mixed_state_entropy,
    predictive_partition,
    same_component,
    sample_edge_counts,
    sample_edge_sequence,
    stationary_array,
    stationary_by_solve,
    stationary_state,
    stratum_codimension,
    word_probability,
)
from causalgeom.validate import random_interior

from oracles import block_probabilities, stationary_eig, strongly_connected_scipy

BIN = Alphabet.of_size(2)


def t2121():
    return DfaType.from_code("2121", BIN)


def test_code_round_trip_and_targets():
    d = t2121()
    assert d.code() == "2121"
    assert d.edges == ((0, 0), (0, 1), (1, 0), (1, 1))
    assert d.target(0, 0) == 1 and d.target(0, 1) == 0
    assert DfaType.from_code(d.code(), BIN) == d


def test_partial_code_and_dimension():
    d = DfaType.from_code("2.11", BIN)
    assert d.edges == ((0, 0), (1, 0), (1, 1))
    assert d.dimension == 1
    assert not d.is_top_dimensional


def test_face_counts_two_states_binary():
    types = enumerate_dfa_types(2, 2)
    assert len(types) == count_dfa_types(2, 2) == 64
    assert sum(d.is_top_dimensional for d in types) == 16
    assert sum(is_strongly_connected(d) for d in types) == 25


def test_one_state_ternary_count():
    assert count_dfa_types(1, 3) == 7 == len(enumerate_dfa_types(1, 3))


def test_strongly_connected_matches_scipy_filter():
    types = enumerate_dfa_types(3, 2)
    ours = [is_strongly_connected(d) for d in types]
    ref = [strongly_connected_scipy(d) for d in types]
    assert ours == ref
    assert sum(ours) == sum(ref)


def test_enumeration_cap():
    with pytest.raises(EnumerationCapExceeded):
        enumerate_dfa_types(3, 3, cap=1000)


def test_machine_rejects_bad_rows():
    d = t2121()
    with pytest.raises(ValueError):
        Machine.from_array(d, [0.5, 0.4, 0.5, 0.5])
    with pytest.raises(ValueError):
        Machine.from_array(d, [1.2, -0.2, 0.5, 0.5])


def test_stationary_exact_small_case():
    m = Machine(t2121(), (F(3, 10), F(7, 10), F(1, 2), F(1, 2)))
    # balance: pi_1 = 0.3 pi_0 + 0.5 pi_1 -> pi_0 : pi_1 = 5 : 3
    assert stationary_state(m).weights == (F(5, 8), F(3, 8))


@pytest.mark.parametrize("code", ["2121", "2221", "1221", "2211"])
def test_stationary_matches_eigenvector(code):
    rng = np.random.default_rng(7)
    d = DfaType.from_code(code, BIN)
    for _ in range(5):
        m = random_interior(d, rng)
        ref = stationary_eig(m)
        assert np.allclose(stationary_array(m), ref, atol=1e-12)
        assert np.allclose(stationary_by_solve(m), ref, atol=1e-12)


def test_word_probabilities_sum_and_match_oracle():
    rng = np.random.default_rng(3)
    m = random_interior(nemo_dfa(), rng)
    ref = block_probabilities(m, 4)
    pi = stationary_array(m)
    words = [[(i >> (3 - k)) & 1 for k in range(4)] for i in range(16)]
    ours = np.array([word_probability(m, pi, w) for w in words])
    assert np.allclose(ours, ref, atol=1e-14)
    assert ours.sum() == pytest.approx(1.0, abs=1e-12)


def test_edge_sequence_probability_exact():
    m = Machine(t2121(), (F(1, 5), F(4, 5), F(3, 5), F(2, 5)))
    p = edge_sequence_probability(m, MixedState.pure(0, 2), [(0, 0), (1, 1), (0, 1)])
    assert p == F(1, 5) * F(2, 5) * F(4, 5)
    assert edge_sequence_probability(m, MixedState.pure(0, 2), [(0, 0), (0, 0)]) == 0


def test_length_two_sequences_sum_to_one():
    m = Machine(t2121(), (F(1, 5), F(4, 5), F(3, 5), F(2, 5)))
    pi = stationary_state(m)
    edges = m.dfa.edges
    total = sum(edge_sequence_probability(m, pi, [e1, e2]) for e1 in edges for e2 in edges)
    assert total == 1


def test_sampled_sequences_follow_transitions():
    m = Machine.from_array(nemo_dfa(), [0.2, 0.8, 1.0, 0.6, 0.4])
    seq = sample_edge_sequence(m, stationary_array(m), 500, seed=1)
    for (j, a), (k, _) in zip(seq, seq[1:]):
        assert m.dfa.target(j, a) == k


def test_sample_edge_counts_frequencies():
    m = Machine.from_array(t2121(), [0.2, 0.8, 0.6, 0.4])
    counts = sample_edge_counts(m, 2000, 400, np.random.default_rng(11))
    assert counts.shape == (400, 4) and np.all(counts.sum(axis=1) == 2000)
    freq = counts.sum(axis=0) / counts.sum()
    pi = stationary_array(m)
    expect = pi[m.dfa.edge_state] * m.q
    assert np.allclose(freq, expect, atol=5e-3)


def test_mixed_state_entropy_limits():
    assert mixed_state_entropy([1.0, 0.0, 0.0]) == 0.0
    assert mixed_state_entropy([1, 1, 1, 1]) == pytest.approx(1.0)


def test_predictive_partition_degenerate_and_generic():
    d = t2121()
    equal = Machine.from_array(d, [0.3, 0.7, 0.3, 0.7])
    assert predictive_partition(equal).as_lists() == [[0, 1]]
    assert not is_csm(equal)
    generic = Machine.from_array(d, [0.3, 0.7, 0.6, 0.4])
    assert is_csm(generic)


def test_strata_of_2121():
    d = t2121()
    parts = [p for p in congruence_partitions(d) if not p.is_discrete]
    assert len(parts) == 1
    assert stratum_codimension(d, parts[0]) == 1
    assert in_stratum(Machine.from_array(d, [0.3, 0.7, 0.3, 0.7]), parts[0])


def test_nemo_face():
    d = nemo_dfa()
    assert is_strongly_connected(d)
    assert d.dimension == 2
    assert all(p.is_discrete for p in congruence_partitions(d))


def test_same_component_across_diagonal():
    d = t2121()
    a = Machine.from_coordinates(d, [0.2, 0.6])
    b = Machine.from_coordinates(d, [0.3, 0.8])
    c = Machine.from_coordinates(d, [0.6, 0.2])
    assert same_component(a, b) == "yes"
    assert same_component(a, c) == "no"
