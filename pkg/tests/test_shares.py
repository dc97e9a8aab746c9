from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from followgraph.errors import EmptyMatrixError
from followgraph.roster import FollowMatrix
from followgraph.shares import follower_weight, raw_shares, weighted_shares

from conftest import make_roster, random_matrix


def brute_force_weighted(matrix):
    totals = [Fraction(0)] * matrix.n_candidates
    for row in matrix.rows():
        for c in row:
            totals[c] += Fraction(1, len(row))
    grand = sum(totals, Fraction(0))
    return grand, [t / grand for t in totals]


rows_strategy = st.lists(st.sets(st.integers(0, 7), min_size=1), min_size=1, max_size=50)


class TestFollowerWeight:
    def test_worked_example(self, primaries_roster):
        ids = primaries_roster.ids
        assert follower_weight([ids.index("Sanders"), ids.index("Trump"), ids.index("Cruz")]) == Fraction(1, 3)
        assert follower_weight([ids.index("Clinton")]) == Fraction(1)

    @given(st.sets(st.integers(0, 20), min_size=1))
    def test_reciprocal(self, row):
        assert follower_weight(row) == Fraction(1, len(row))

    def test_empty_row_rejected(self):
        with pytest.raises(ValueError):
            follower_weight([])


class TestWeightedShares:
    @settings(max_examples=200, deadline=None)
    @given(rows_strategy)
    def test_matches_oracle(self, rows):
        m = FollowMatrix.from_rows(make_roster(4, 4), rows)
        report = weighted_shares(m)
        grand, oracle = brute_force_weighted(m)
        assert grand == m.n_users
        assert report.total_weight == m.n_users
        assert list(report.weighted_share) == oracle
        assert sum(report.weighted_share) == 1

    def test_single_follow_users_keep_raw_share(self, primaries_roster):
        m = FollowMatrix.from_rows(primaries_roster, [[0], [0], [2], [3]])
        report = weighted_shares(m)
        assert report.weighted_share == report.raw_share

    def test_top_k_aggregate(self, primaries_roster):
        m = FollowMatrix.from_rows(primaries_roster, [[0], [0, 2], [1, 2, 3], [4]])
        report = weighted_shares(m, top_k=["Clinton", "Trump"])
        assert report.top_k_weighted == Fraction(1 + Fraction(1, 2) + Fraction(1, 2) + Fraction(1, 3), 4)
        assert report.top_k_raw == Fraction(4, 7)

    def test_raw_shares(self, rng):
        m = random_matrix(rng, 60, 6)
        counts = m.dense().sum(axis=0)
        assert [float(s) for s in raw_shares(m)] == pytest.approx(counts / counts.sum())

    def test_float_views(self, rng):
        m = random_matrix(rng, 60, 6)
        report = weighted_shares(m)
        assert np.sum(report.weighted_float()) == pytest.approx(1.0)

    def test_empty_matrix(self, primaries_roster):
        m = FollowMatrix.from_rows(primaries_roster, [])
        with pytest.raises(EmptyMatrixError):
            weighted_shares(m)
