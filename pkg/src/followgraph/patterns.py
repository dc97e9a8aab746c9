"""Frequent follow patterns and pairwise correlation of follow indicators."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .roster import FollowMatrix


@dataclass(frozen=True)
class ItemsetResult:
    itemset: tuple[str, ...]  # candidate ids, sorted
    count: int
    support: float
    rank: int

    @property
    def label(self) -> str:
        return "+".join(self.itemset)


def _ranked(entries, n_users):
    # entries: iterable of (ids tuple, count)
    ordered = sorted(entries, key=lambda e: (-e[1], e[0]))
    return [ItemsetResult(ids, count, count / n_users, rank)
            for rank, (ids, count) in enumerate(ordered, start=1)]


def frequent_itemsets(matrix: FollowMatrix, min_support: float,
                      max_size: int) -> list[ItemsetResult]:
    """Levelwise (Apriori) mining with containment support.

    An itemset's support is the fraction of users whose follow set contains
    it. Candidates at level k+1 are generated only from frequent k-itemsets
    whose every k-subset is frequent.
    """
    if not 0 < min_support <= 1:
        raise ValueError("min_support must lie in (0, 1]")
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    n = matrix.n_users
    if n == 0:
        return []
    dense = matrix.dense()
    ids = matrix.roster.ids

    def frequent(count):
        return count / n >= min_support

    level: dict[tuple[int, ...], np.ndarray] = {}
    found: list[tuple[tuple[int, ...], int]] = []
    for k in range(matrix.n_candidates):
        col = dense[:, k]
        count = int(col.sum())
        if count and frequent(count):
            level[(k,)] = col
            found.append(((k,), count))

    size = 1
    while level and size < max_size:
        keys = sorted(level)
        frequent_keys = set(keys)
        nxt: dict[tuple[int, ...], np.ndarray] = {}
        for a, b in combinations(keys, 2):
            if a[:-1] != b[:-1]:
                continue
            cand = a + (b[-1],)
            if any(sub not in frequent_keys for sub in combinations(cand, size)):
                continue
            cover = level[a] & dense[:, b[-1]]
            count = int(cover.sum())
            if count and frequent(count):
                nxt[cand] = cover
                found.append((cand, count))
        level = nxt
        size += 1

    entries = [(tuple(sorted(ids[c] for c in cols)), count) for cols, count in found]
    return _ranked(entries, n)


def exclusive_pattern_shares(matrix: FollowMatrix, top_n: int | None = None) -> list[ItemsetResult]:
    """Frequency of each exact follow set, most common first."""
    if top_n is not None and top_n < 1:
        raise ValueError("top_n must be >= 1")
    n = matrix.n_users
    if n == 0:
        return []
    ids = matrix.roster.ids
    tally = Counter(matrix.rows())
    entries = [(tuple(sorted(ids[c] for c in row)), count) for row, count in tally.items()]
    ranked = _ranked(entries, n)
    return ranked if top_n is None else ranked[:top_n]


@dataclass(frozen=True)
class PhiMatrix:
    """Pearson correlations between binary follow columns.

    ``defined`` is False wherever either column is constant; those entries
    of ``values`` are meaningless and must be read through :meth:`get`.
    """

    candidate_ids: tuple[str, ...]
    values: np.ndarray
    defined: np.ndarray

    def get(self, a: int | str, b: int | str) -> float | None:
        i = a if isinstance(a, int) else self.candidate_ids.index(a)
        j = b if isinstance(b, int) else self.candidate_ids.index(b)
        return float(self.values[i, j]) if self.defined[i, j] else None


def pairwise_phi(matrix: FollowMatrix) -> PhiMatrix:
    n = matrix.n_users
    if n < 2:
        raise ValueError("correlations need at least two users")
    dense = matrix.dense().astype(np.int64)
    ones = dense.sum(axis=0)
    both = dense.T @ dense
    # Exact integer numerator and variance terms; one float division at the end.
    cov = n * both - np.outer(ones, ones)
    var = ones * (n - ones)
    denom = np.sqrt(np.outer(var, var).astype(np.float64))
    defined = np.outer(var > 0, var > 0)
    values = np.zeros(cov.shape)
    np.divide(cov, denom, out=values, where=defined)
    values = np.clip(values, -1.0, 1.0)
    np.fill_diagonal(values, np.where(var > 0, 1.0, 0.0))
    return PhiMatrix(tuple(matrix.roster.ids), values, defined)
