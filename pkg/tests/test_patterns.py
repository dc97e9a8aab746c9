from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from followgraph.patterns import exclusive_pattern_shares, frequent_itemsets, pairwise_phi
from followgraph.roster import FollowMatrix, Party
from followgraph.synthetic import Scenario, simulate_matrix

from conftest import make_roster, random_matrix


def enumerate_itemsets(matrix, min_support, max_size):
    """Every candidate subset, counted by direct containment."""
    dense = matrix.dense()
    ids = matrix.roster.ids
    n = matrix.n_users
    out = {}
    for size in range(1, max_size + 1):
        for cols in combinations(range(matrix.n_candidates), size):
            count = int(np.all(dense[:, list(cols)], axis=1).sum())
            if count and count / n >= min_support:
                out[tuple(sorted(ids[c] for c in cols))] = count
    return out


def pearson(a, b):
    a = a.astype(float) - a.mean()
    b = b.astype(float) - b.mean()
    return float(a @ b / np.sqrt((a @ a) * (b @ b)))


class TestFrequentItemsets:
    @pytest.mark.parametrize("min_support", [0.01, 0.05, 0.2])
    def test_matches_exhaustive_enumeration(self, min_support):
        m = random_matrix(np.random.default_rng(12), 200, 12, density=0.25)
        got = {r.itemset: r.count for r in frequent_itemsets(m, min_support, max_size=12)}
        assert got == enumerate_itemsets(m, min_support, 12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.sampled_from([0.02, 0.1, 0.3]), st.integers(1, 4))
    def test_random_matrices(self, seed, min_support, max_size):
        m = random_matrix(np.random.default_rng(seed), 60, 6, density=0.4)
        got = {r.itemset: r.count for r in frequent_itemsets(m, min_support, max_size)}
        assert got == enumerate_itemsets(m, min_support, max_size)

    def test_ranking_and_support(self, primaries_roster):
        m = FollowMatrix.from_rows(primaries_roster, [[0], [0, 2], [2], [2], [1]])
        res = frequent_itemsets(m, 0.2, 2)
        assert [r.label for r in res] == ["Trump", "Clinton", "Clinton+Trump", "Sanders"]
        assert [r.rank for r in res] == [1, 2, 3, 4]
        assert res[0].support == pytest.approx(0.6)

    @pytest.mark.parametrize("kwargs", [dict(min_support=0, max_size=2),
                                        dict(min_support=1.5, max_size=2),
                                        dict(min_support=0.1, max_size=0)])
    def test_bad_arguments(self, primaries_roster, kwargs):
        m = FollowMatrix.from_rows(primaries_roster, [[0]])
        with pytest.raises(ValueError):
            frequent_itemsets(m, **kwargs)


class TestExclusivePatterns:
    def test_exact_set_semantics(self, primaries_roster):
        m = FollowMatrix.from_rows(primaries_roster, [[2], [2], [0, 2], [0], [2]])
        res = exclusive_pattern_shares(m)
        assert [(r.label, r.count) for r in res] == [("Trump", 3), ("Clinton", 1), ("Clinton+Trump", 1)]
        assert sum(r.count for r in res) == m.n_users
        assert len(exclusive_pattern_shares(m, top_n=1)) == 1

    def test_planted_top_patterns(self, scenarios_dir):
        scenario = Scenario.load(scenarios_dir / "top_patterns.json")
        pop = simulate_matrix(scenario)
        res = exclusive_pattern_shares(pop.matrix, top_n=3)
        assert [r.label for r in res] == ["Trump", "Clinton", "Sanders"]
        assert [r.support for r in res] == [0.345, 0.284, 0.072]


class TestPairwisePhi:
    def test_matches_pearson(self, rng):
        m = random_matrix(rng, 300, 8)
        dense = m.dense()
        phi = pairwise_phi(m)
        for i in range(8):
            for j in range(8):
                assert abs(phi.values[i, j] - pearson(dense[:, i], dense[:, j])) < 1e-12

    def test_constant_column_undefined(self):
        roster = make_roster(2, 1)
        m = FollowMatrix.from_rows(roster, [[0], [0, 1], [0]])
        phi = pairwise_phi(m)
        assert phi.get("D0", "D1") is None
        assert phi.get("R0", "R0") is None
        assert phi.get("D1", "D1") == 1.0
        assert not np.any(np.isnan(phi.values))

    def test_polarized_signs(self, scenarios_dir):
        pop = simulate_matrix(Scenario.load(scenarios_dir / "polarized.json"))
        phi = pairwise_phi(pop.matrix)
        dem = pop.matrix.roster.party_mask(Party.DEMOCRAT)
        for i, j in combinations(range(pop.matrix.n_candidates), 2):
            r = phi.get(i, j)
            if dem[i] == dem[j]:
                assert r > 0
            else:
                assert r < 0
