import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hperc.clusters import (
    ClusterPartition,
    UnionFind,
    build_clusters,
    detect_msc,
    oracle_boolean_clusters,
)
from hperc.errors import InvalidArgumentError, InvalidThresholdError
from hperc.metric import HALF_PI, DistanceMatrix, distance_matrix
from hperc.states import QuantumState, StateEnsemble, sample_ensemble


def dm_from_pairs(M, pairs, default=1.5):
    sq = np.full((M, M), default)
    np.fill_diagonal(sq, 0.0)
    for (m, n), d in pairs.items():
        sq[m, n] = sq[n, m] = d
    return DistanceMatrix.from_square(sq)


CHAIN = dm_from_pairs(3, {(0, 1): 0.1, (1, 2): 0.1, (0, 2): 0.5})


def test_chain_joins_transitively():
    p = build_clusters(CHAIN, 0.2)
    assert p.cluster_count == 1
    assert p.spans[0] == pytest.approx(0.5)
    assert set(p.span_witness[0]) == {0, 2}


def test_low_threshold_gives_singletons():
    p = build_clusters(CHAIN, 0.05)
    assert p.cluster_count == 3
    np.testing.assert_array_equal(p.spans, 0.0)
    assert p.labels.tolist() == [0, 1, 2]


def test_threshold_is_inclusive():
    dm = dm_from_pairs(2, {(0, 1): 0.3})
    assert build_clusters(dm, 0.3).cluster_count == 1
    assert build_clusters(dm, np.nextafter(0.3, 0)).cluster_count == 2


def test_threshold_range():
    with pytest.raises(InvalidThresholdError):
        build_clusters(CHAIN, -0.1)
    with pytest.raises(InvalidThresholdError):
        build_clusters(CHAIN, HALF_PI + 1e-9)
    with pytest.raises(InvalidThresholdError):
        oracle_boolean_clusters(CHAIN, 2.0)


def test_oracle_two_states():
    dm = dm_from_pairs(2, {(0, 1): 0.4})
    assert oracle_boolean_clusters(dm, 0.5).as_sets() == {frozenset({0, 1})}
    assert oracle_boolean_clusters(dm, 0.3).as_sets() == {frozenset({0}), frozenset({1})}


def test_oracle_handles_late_merges():
    # edges arrive so that a single OR-sweep would leave stale rows
    dm = dm_from_pairs(5, {(0, 4): 0.1, (3, 4): 0.1, (1, 3): 0.1, (1, 2): 0.1})
    assert oracle_boolean_clusters(dm, 0.2).as_sets() == {frozenset(range(5))}


def test_clusters_match_oracle_random_dim4():
    dm = distance_matrix(sample_ensemble(30, 4, 2718, 0))
    a, b = build_clusters(dm, 0.6), oracle_boolean_clusters(dm, 0.6)
    np.testing.assert_array_equal(a.labels, b.labels)
    np.testing.assert_allclose(a.spans, b.spans, rtol=0, atol=0)


def test_cross_validation_100_instances():
    rng = np.random.default_rng(5)
    for i in range(100):
        M = int(rng.integers(2, 51))
        dim = int(rng.choice([2, 4, 8]))
        dm = distance_matrix(sample_ensemble(M, dim, 77, i))
        t = float(rng.uniform(0, HALF_PI))
        fast, slow = build_clusters(dm, t), oracle_boolean_clusters(dm, t)
        assert fast.as_sets() == slow.as_sets()
        assert slow.as_sets() == fast.as_sets()


def test_partition_invariants():
    dm = distance_matrix(sample_ensemble(40, 2, 1, 0))
    p = build_clusters(dm, 0.3)
    assert p.cluster_count == len(set(p.labels.tolist()))
    for c in range(p.cluster_count):
        m, n = p.span_witness[c]
        assert 0 <= p.spans[c] <= HALF_PI
        assert abs(dm[m, n] - p.spans[c]) <= 1e-15
        members = p.members(c)
        assert max(dm[i, j] for i in members for j in members) == p.spans[c]
    # same label iff connected through links <= threshold
    sq = dm.square
    reach = (sq <= 0.3)
    for _ in range(40):
        reach = reach | ((reach.astype(int) @ reach.astype(int)) > 0)
    assert np.array_equal(reach, p.labels[:, None] == p.labels[None, :])


def test_union_find_basics():
    uf = UnionFind(5)
    assert uf.union(0, 1) and uf.union(3, 4)
    assert not uf.union(1, 0)
    assert uf.find(0) == uf.find(1) and uf.find(3) == uf.find(4)
    assert uf.find(2) not in (uf.find(0), uf.find(3))
    assert uf.n_sets == 3


def test_detect_msc_cases():
    sq = np.array([[0.0, HALF_PI], [HALF_PI, 0.0]])
    p = build_clusters(DistanceMatrix.from_square(sq), HALF_PI)
    assert detect_msc(p, 0.0).has_msc
    rep = detect_msc(p, 0.01)
    assert rep.has_msc and rep.achieved_span == pytest.approx(HALF_PI) and rep.msc_cluster_id == 0

    one = dm_from_pairs(2, {(0, 1): 1.0})
    rep = detect_msc(build_clusters(one, 1.0), 0.2)
    assert not rep.has_msc and rep.msc_cluster_id is None

    with pytest.raises(InvalidArgumentError):
        detect_msc(p, -1.0)


def test_detect_msc_orthogonal_states():
    ens = StateEnsemble.from_states([QuantumState.basis(2, 0), QuantumState.basis(2, 1)])
    p = build_clusters(distance_matrix(ens), HALF_PI)
    rep = detect_msc(p, 0.01)
    assert rep.has_msc and rep.achieved_span == HALF_PI


def test_detect_msc_tie_break():
    # two clusters {0,1} and {2,3}: equal spans -> smallest id; larger span wins otherwise
    tie = dm_from_pairs(4, {(0, 1): 1.2, (2, 3): 1.2})
    p = build_clusters(tie, 1.3)
    assert detect_msc(p, 1.0).msc_cluster_id == 0
    skew = dm_from_pairs(4, {(0, 1): 1.1, (2, 3): 1.2})
    assert detect_msc(build_clusters(skew, 1.3), 1.0).msc_cluster_id == 1


def test_partition_json_roundtrip():
    p = build_clusters(CHAIN, 0.2)
    data = json.loads(p.to_json(epsilon=0.2))
    assert set(data) == {"threshold", "epsilon", "clusters"}
    assert data["clusters"][0]["members"] == [0, 1, 2]
    back = ClusterPartition.from_dict(data)
    assert back.as_sets() == p.as_sets()
    np.testing.assert_array_equal(back.spans, p.spans)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(2, 30),
    st.sampled_from([2, 4, 8]),
    st.integers(0, 2**32),
    st.floats(0, HALF_PI),
    st.floats(0, HALF_PI),
)
def test_coarsening_and_span_monotonicity(M, dim, seed, t1, t2):
    t1, t2 = sorted((t1, t2))
    dm = distance_matrix(sample_ensemble(M, dim, seed, 0))
    p1, p2 = build_clusters(dm, t1), build_clusters(dm, t2)
    for c in range(p1.cluster_count):
        members = p1.members(c)
        targets = {int(p2.labels[m]) for m in members}
        assert len(targets) == 1
        assert p2.spans[targets.pop()] >= p1.spans[c]


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**32), st.floats(0, HALF_PI), st.floats(0, HALF_PI))
def test_msc_monotone_with_epsilon_tied(M, seed, t1, t2):
    t1, t2 = sorted((t1, t2))
    dm = distance_matrix(sample_ensemble(M, 4, seed, 0))
    if detect_msc(build_clusters(dm, t1), t1).has_msc:
        assert detect_msc(build_clusters(dm, t2), t2).has_msc


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.sampled_from([2, 64, 1024]), st.integers(0, 2**32))
def test_full_threshold_always_msc(M, dim, seed):
    dm = distance_matrix(sample_ensemble(M, dim, seed, 0))
    p = build_clusters(dm, HALF_PI)
    assert p.cluster_count == 1
    assert detect_msc(p, HALF_PI).has_msc


def test_oracle_matches_on_chain_dm():
    for t in (0.0, 0.05, 0.1, 0.2, 0.5, 1.0):
        assert build_clusters(CHAIN, t).as_sets() == oracle_boolean_clusters(CHAIN, t).as_sets()
    assert math.isclose(oracle_boolean_clusters(CHAIN, 0.2).spans[0], 0.5)
