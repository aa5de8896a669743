import itertools
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heavyhex_qec.builders import build_memory_circuit
from heavyhex_qec.decoding.blossom import max_weight_matching, min_weight_perfect_matching
from heavyhex_qec.decoding.dem import (
    DetectorErrorModel,
    build_dem,
    check_decomposition,
    dem_from_arrays,
    xor_merge,
)
from heavyhex_qec.decoding.distance import distance_bounds, min_distance
from heavyhex_qec.decoding.matching import (
    MAX_EXHAUSTIVE_DEFECTS,
    DefectError,
    MatchingGraph,
    decode_exhaustive,
    decode_mwpm,
    edge_weight,
)
from heavyhex_qec.decoding.mlbrute import class_probabilities, ml_decode_bruteforce, ml_failure_rate
from heavyhex_qec.noise import NoiseModel, apply_noise


@pytest.fixture(scope="module")
def dem_z3(memory_z3):
    return build_dem(apply_noise(memory_z3, NoiseModel.uniform(1e-3)))


# --- detector error model -------------------------------------------------------

def test_noiseless_dem_is_empty(memory_z3):
    assert build_dem(memory_z3).mechanisms == []


def test_decomposed_pieces_are_graphlike(dem_z3):
    assert dem_z3.mechanisms
    assert check_decomposition(dem_z3)
    for m in dem_z3.mechanisms:
        assert all(len(dets) <= 2 for dets, _ in m.components)


def test_identical_signatures_merge():
    assert math.isclose(xor_merge(0.1, 0.1), 2 * 0.1 * 0.9)
    dem = dem_from_arrays([0.1, 0.1], [(0, 1), (0, 1)], [0, 0], 2)
    merged = dem.merged_components()
    assert len(merged) == 1 and math.isclose(next(iter(merged.values())), 0.18)


def test_dem_json_roundtrip(dem_z3):
    back = DetectorErrorModel.from_json(dem_z3.to_json())
    assert back == dem_z3
    bad = dem_z3.to_json().replace('"detectors": %d' % dem_z3.num_detectors, '"detectors": 2')
    with pytest.raises(ValueError):
        DetectorErrorModel.from_json(bad)


# --- matching -------------------------------------------------------------------

def test_empty_syndrome_no_flip(dem_z3):
    g = MatchingGraph.from_dem(dem_z3)
    assert decode_mwpm(g, []).observables == 0
    assert not g.decode_batch(np.zeros((3, dem_z3.num_detectors), np.uint8)).any()


@pytest.mark.parametrize("p_pair,p_boundary,paired", [(0.1, 0.01, True), (0.001, 0.1, False)])
def test_pair_versus_boundary(p_pair, p_boundary, paired):
    dem = dem_from_arrays([p_pair, p_boundary, p_boundary], [(0, 1), (0,), (1,)], [0, 1, 0], 2)
    c = MatchingGraph.from_dem(dem).decode([0, 1])
    assert (sorted(c.pairs) == [(0, 1)]) == paired
    assert c.weight == (edge_weight(p_pair) if paired else 2 * edge_weight(p_boundary))
    assert c.observables == (0 if paired else 1)


def test_edge_weights_are_log_likelihood_ratios():
    for p in (1e-4, 1e-2, 0.3):
        assert abs(edge_weight(p) / 1000 - math.log((1 - p) / p)) < 1e-3


@pytest.mark.parametrize("d", [3, 5])
def test_mwpm_weight_equals_exhaustive(d, layout3, layout5):
    layout = layout3 if d == 3 else layout5
    dem = build_dem(apply_noise(build_memory_circuit(layout, "X", d), NoiseModel.uniform(2e-3)))
    g = MatchingGraph.from_dem(dem)
    rng = np.random.default_rng(d)
    relevant = np.flatnonzero(g.relevant)
    for _ in range(1000):
        k = int(rng.integers(0, MAX_EXHAUSTIVE_DEFECTS + 1))
        defects = np.sort(rng.choice(relevant, size=min(k, len(relevant)), replace=False))
        assert g.decode(defects).weight == decode_exhaustive(g, defects).weight


def test_batch_and_single_decoding_agree(dem_z3):
    g = MatchingGraph.from_dem(dem_z3)
    rng = np.random.default_rng(2)
    bits = (rng.random((300, dem_z3.num_detectors)) < 0.05).astype(np.uint8)
    batch = g.decode_batch(bits)
    for row, pred in zip(bits, batch):
        assert g.decode(np.flatnonzero(row)).observables == pred


def test_bad_defects_rejected(dem_z3):
    g = MatchingGraph.from_dem(dem_z3)
    with pytest.raises(DefectError):
        g.decode([dem_z3.num_detectors])
    with pytest.raises(DefectError):
        g.decode_batch(np.zeros((2, dem_z3.num_detectors + 1), np.uint8))
    with pytest.raises(ValueError):
        decode_exhaustive(g, np.arange(MAX_EXHAUSTIVE_DEFECTS + 1))


# --- blossom against networkx -------------------------------------------------------

@settings(max_examples=80, deadline=None)
@given(st.integers(1, 7).flatmap(
    lambda h: st.lists(st.integers(0, 50), min_size=(2 * h) * (2 * h - 1) // 2,
                       max_size=(2 * h) * (2 * h - 1) // 2).map(lambda w: (2 * h, w))))
def test_min_weight_perfect_matching_matches_networkx(case):
    n, flat = case
    cost = np.zeros((n, n), dtype=np.int64)
    for (i, j), w in zip(itertools.combinations(range(n), 2), flat):
        cost[i, j] = cost[j, i] = w
    mate = min_weight_perfect_matching(cost)
    assert all(mate[mate[i]] == i and mate[i] != i for i in range(n))
    ours = sum(cost[i, mate[i]] for i in range(n)) // 2
    g = nx.Graph()
    for i, j in itertools.combinations(range(n), 2):
        g.add_edge(i, j, weight=-int(cost[i, j]))
    ref = nx.max_weight_matching(g, maxcardinality=True)
    assert ours == sum(cost[i, j] for i, j in ref)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 9).flatmap(lambda n: st.lists(st.integers(0, 30), min_size=n * (n - 1) // 2,
                                                    max_size=n * (n - 1) // 2).map(lambda w: (n, w))))
def test_max_weight_matching_matches_networkx(case):
    n, flat = case
    w = np.zeros((n, n), dtype=np.int64)
    g = nx.Graph()
    g.add_nodes_from(range(n))
    for (i, j), x in zip(itertools.combinations(range(n), 2), flat):
        w[i, j] = w[j, i] = x
        if x:
            g.add_edge(i, j, weight=x)
    mate = max_weight_matching(w)
    ours = sum(w[i, mate[i]] for i in range(n) if mate[i] > i)
    assert ours == sum(w[i, j] for i, j in nx.max_weight_matching(g))


# --- distance -------------------------------------------------------------------------

@pytest.mark.parametrize("d,basis,expected", [(3, "Z", 3), (5, "Z", 5)])
def test_min_distance(d, basis, expected, layout3, layout5):
    layout = layout3 if d == 3 else layout5
    dem = build_dem(apply_noise(build_memory_circuit(layout, basis, d), NoiseModel.uniform(1e-3)))
    res = distance_bounds(dem)
    assert res.exact and res.value == expected


def test_fold_hooks_lower_x_memory_distance(layout3):
    dem = build_dem(apply_noise(build_memory_circuit(layout3, "X", 3), NoiseModel.uniform(1e-3)))
    assert min_distance(dem) == 2


def test_deleting_detectors_weakens_the_code(dem_z3):
    keep = set(range(0, dem_z3.num_detectors, 2))
    mechs = [(m.probability, tuple(d for d in m.detectors if d in keep), m.observables)
             for m in dem_z3.mechanisms]
    weak = dem_from_arrays(*zip(*mechs), dem_z3.num_detectors)
    assert min_distance(weak) < 3


# --- maximum-likelihood oracle ------------------------------------------------------------

def test_single_mechanism_ml():
    dem = dem_from_arrays([0.1], [(0, 1)], [1], 2)
    assert ml_decode_bruteforce(dem, {0, 1}) == 1
    assert ml_decode_bruteforce(dem, [0, 0]) == 0


def test_symmetric_tie_goes_to_no_flip():
    dem = dem_from_arrays([0.1, 0.1], [(0,), (0,)], [0, 1], 1)
    assert ml_decode_bruteforce(dem, {0}) == 0


def _mwpm_failure_rate(dem):
    g = MatchingGraph.from_dem(dem)
    fail = 0.0
    for s, classes in class_probabilities(dem).items():
        defects = [i for i in range(dem.num_detectors) if (s >> i) & 1]
        pred = g.decode(defects).observables
        fail += sum(p for o, p in classes.items() if o != pred)
    return fail


_edges = st.lists(
    st.tuples(st.floats(0.001, 0.2), st.sampled_from([(0,), (1,), (2,), (3,), (0, 1), (1, 2), (2, 3), (0, 3), (0, 2)]),
              st.integers(0, 1)),
    min_size=1, max_size=12)


@settings(max_examples=60, deadline=None)
@given(_edges)
def test_ml_never_worse_than_mwpm(edges):
    p, d, o = zip(*edges)
    dem = dem_from_arrays(p, d, o, 4)
    assert ml_failure_rate(dem) <= _mwpm_failure_rate(dem) + 1e-12


def test_class_probabilities_sum_to_one():
    dem = dem_from_arrays([0.1, 0.2, 0.05], [(0,), (0, 1), (1,)], [1, 0, 0], 2)
    total = sum(p for c in class_probabilities(dem).values() for p in c.values())
    assert math.isclose(total, 1.0)
