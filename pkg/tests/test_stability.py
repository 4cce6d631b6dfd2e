from itertools import combinations

import numpy as np
import pytest

from listcom.consensus import ConsensusMatrix
from listcom.detect import CommunitySet
from listcom.errors import ValidationError
from listcom.stability import (corrected_stability, expected_stability,
                               rank_communities, raw_stability, write_ranking)


def matrix_from(order, pairs, r=10):
    m = ConsensusMatrix(order=tuple(sorted(order)), entries={}, r=r)
    for (a, b), v in pairs.items():
        m.entries[m.key(a, b)] = v
    return m


def test_raw_constant_one():
    m = matrix_from("abc", {("a", "b"): 1.0, ("a", "c"): 1.0, ("b", "c"): 1.0})
    assert raw_stability({"a", "b", "c"}, m) == 1.0


def test_raw_with_absent_entry():
    m = matrix_from("abc", {("a", "b"): 0.6, ("a", "c"): 0.4})
    assert raw_stability({"a", "b", "c"}, m) == pytest.approx(1 / 3)


def test_raw_single_pair():
    m = matrix_from("ab", {("a", "b"): 0.25})
    assert raw_stability({"a", "b"}, m) == 0.25


def test_raw_rejects_undersized_community():
    m = matrix_from("ab", {})
    with pytest.raises(ValidationError):
        raw_stability({"a"}, m)


def test_expected_zero_matrix():
    m = matrix_from("abcdef", {})
    assert expected_stability(3, m, draws=50, seed=1) == 0.0


def test_expected_constant_half_matrix():
    order = "abcdefgh"
    pairs = {(a, b): 0.5 for a, b in combinations(order, 2)}
    m = matrix_from(order, pairs)
    for size in (2, 4, 7):
        assert expected_stability(size, m, draws=25, seed=3) == pytest.approx(0.5)


def test_expected_matches_enumeration_four_nodes():
    rng = np.random.Generator(np.random.PCG64(17))
    order = "abcd"
    pairs = {(a, b): float(rng.random()) for a, b in combinations(order, 2)}
    m = matrix_from(order, pairs)
    exact = sum(pairs.values()) / 6  # mean over all C(4,2) size-2 subsets
    approx = expected_stability(2, m, draws=10_000, seed=5)
    assert approx == pytest.approx(exact, abs=0.02)


def test_expected_deterministic():
    m = matrix_from("abcdef", {("a", "b"): 0.7, ("c", "d"): 0.2})
    a = expected_stability(3, m, draws=200, seed=9)
    b = expected_stability(3, m, draws=200, seed=9)
    assert a == b
    assert expected_stability(3, m, draws=200, seed=10) != a


def test_expected_validates_size():
    m = matrix_from("abc", {})
    with pytest.raises(ValidationError):
        expected_stability(4, m, draws=10, seed=0)
    with pytest.raises(ValidationError):
        expected_stability(1, m, draws=10, seed=0)


def test_corrected_perfect_community():
    order = "abcdefgh"
    pairs = {("a", "b"): 1.0, ("a", "c"): 1.0, ("b", "c"): 1.0}
    m = matrix_from(order, pairs)
    score = corrected_stability({"a", "b", "c"}, m, draws=500, seed=2)
    assert score.raw == 1.0
    assert score.expected < 1.0
    assert score.corrected == 1.0


def test_corrected_zero_when_raw_equals_expected():
    order = "abcdef"
    pairs = {(a, b): 0.5 for a, b in combinations(order, 2)}
    m = matrix_from(order, pairs)
    score = corrected_stability({"a", "b", "c"}, m, draws=100, seed=4)
    assert score.raw == pytest.approx(0.5)
    assert score.expected == pytest.approx(0.5)
    assert score.corrected == pytest.approx(0.0, abs=1e-12)


def test_corrected_saturated_matrix_guard():
    order = "abcd"
    pairs = {(a, b): 1.0 for a, b in combinations(order, 2)}
    m = matrix_from(order, pairs)
    score = corrected_stability({"a", "b"}, m, draws=50, seed=1)
    assert score.expected == pytest.approx(1.0)
    assert score.corrected == 0.0  # raw == expected on a saturated matrix


def test_shift_sensitivity_noise_decreases_raw():
    order = "abcdxyz"
    pairs = {(a, b): 1.0 for a, b in combinations("abcd", 2)}
    m = matrix_from(order, pairs)
    perfect = raw_stability(set("abcd"), m)
    widened = raw_stability(set("abcdx"), m)
    assert widened < perfect


def test_rank_planted_above_noise():
    order = [f"n{i}" for i in range(12)]
    planted = set(order[:4])
    noise = set(order[4:8])
    pairs = {}
    for a, b in combinations(sorted(planted), 2):
        pairs[(a, b)] = 1.0
    for a, b in combinations(sorted(noise), 2):
        pairs[(a, b)] = 0.1
    m = matrix_from(order, pairs)
    cs = CommunitySet.from_sets([planted, noise])
    ranked = rank_communities(cs, m, draws=400, seed=6)
    assert ranked[0][0] == frozenset(planted)
    assert ranked[0][1].corrected > ranked[1][1].corrected


def test_rank_sorting_and_ties():
    order = [f"n{i}" for i in range(10)]
    strong = set(order[:3])
    weak = set(order[3:6])
    pairs = {}
    for a, b in combinations(sorted(strong), 2):
        pairs[(a, b)] = 1.0
    for a, b in combinations(sorted(weak), 2):
        pairs[(a, b)] = 0.5
    m = matrix_from(order, pairs)
    cs = CommunitySet.from_sets([strong, weak])
    ranked = rank_communities(cs, m, draws=300, seed=7)
    assert [r[1].corrected for r in ranked] == sorted(
        (r[1].corrected for r in ranked), reverse=True)
    single = rank_communities(CommunitySet.from_sets([strong]), m,
                              draws=300, seed=7)
    assert len(single) == 1


def test_rank_memoizes_expected_by_size():
    order = [f"n{i}" for i in range(10)]
    pairs = {("n0", "n1"): 1.0, ("n2", "n3"): 0.4}
    m = matrix_from(order, pairs)
    cs = CommunitySet.from_sets([{"n0", "n1"}, {"n2", "n3"}])
    ranked = rank_communities(cs, m, draws=300, seed=8)
    assert ranked[0][1].expected == ranked[1][1].expected


def test_rank_matches_corrected_stability_op():
    order = [f"n{i}" for i in range(9)]
    pairs = {("n0", "n1"): 0.9, ("n0", "n2"): 0.8, ("n1", "n2"): 0.7}
    m = matrix_from(order, pairs)
    community = {"n0", "n1", "n2"}
    cs = CommunitySet.from_sets([community])
    ranked = rank_communities(cs, m, draws=250, seed=11)
    direct = corrected_stability(community, m, draws=250, seed=11)
    assert ranked[0][1] == direct


def test_write_ranking_format(tmp_path):
    order = "abcd"
    pairs = {("a", "b"): 1.0}
    m = matrix_from(order, pairs)
    cs = CommunitySet.from_sets([{"a", "b"}, {"c", "d"}])
    ranked = rank_communities(cs, m, draws=100, seed=0)
    path = tmp_path / "rank.tsv"
    write_ranking(ranked, cs, path)
    lines = path.read_text("utf-8").splitlines()
    assert len(lines) == 2
    first = lines[0].split("\t")
    assert first[0] == "1"
    assert len(first[1].split(".")[-1]) == 2  # corrected printed to 2 decimals
    assert first[4] == "2"
