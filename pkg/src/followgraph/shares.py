"""Raw and reciprocal-weighted candidate shares.

Each user carries total weight 1, spread evenly over the candidates they
follow. Shares are accumulated exactly: row sizes are small integers, so
every weight is a unit fraction and the sums are kept as integers over the
least common multiple of the row sizes present.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import EmptyMatrixError
from .roster import FollowMatrix, follower_counts


def follower_weight(row: Iterable[int]) -> Fraction:
    size = len(set(row))
    if size == 0:
        raise ValueError("a user must follow at least one candidate")
    return Fraction(1, size)


@dataclass(frozen=True)
class ShareReport:
    candidate_ids: tuple[str, ...]
    raw_share: tuple[Fraction, ...]
    weighted_share: tuple[Fraction, ...]
    top_k: tuple[str, ...] = ()
    top_k_raw: Fraction | None = None
    top_k_weighted: Fraction | None = None
    # Sum of all follower weights; always equals the number of users.
    total_weight: Fraction = Fraction(0)

    def raw_float(self) -> np.ndarray:
        return np.array([float(s) for s in self.raw_share])

    def weighted_float(self) -> np.ndarray:
        return np.array([float(s) for s in self.weighted_share])


def raw_shares(matrix: FollowMatrix) -> tuple[Fraction, ...]:
    if matrix.n_users == 0:
        raise EmptyMatrixError()
    counts = follower_counts(matrix)
    total = int(counts.sum())
    return tuple(Fraction(int(c), total) for c in counts)


def _weighted_numerators(matrix: FollowMatrix) -> tuple[list[int], int]:
    """Per-candidate weight sums scaled by ``lcm`` of the row sizes, plus that lcm."""
    sizes = matrix.row_sizes()
    per_entry_size = np.repeat(sizes, sizes)
    size_values = np.unique(sizes)
    scale = math.lcm(*(int(s) for s in size_values))
    # Count entries per (candidate, row size), then weight each size by scale / size.
    numerators = [0] * matrix.n_candidates
    for s in size_values:
        mask = per_entry_size == s
        counts = np.bincount(matrix.indices[mask], minlength=matrix.n_candidates)
        unit = scale // int(s)
        for k, c in enumerate(counts):
            numerators[k] += int(c) * unit
    return numerators, scale


def weighted_shares(matrix: FollowMatrix, top_k: Sequence[str] = ()) -> ShareReport:
    if matrix.n_users == 0:
        raise EmptyMatrixError()
    numerators, scale = _weighted_numerators(matrix)
    total = sum(numerators)
    if total != matrix.n_users * scale:
        raise AssertionError("follower weights do not sum to the number of users")
    weighted = tuple(Fraction(num, total) for num in numerators)
    raw = raw_shares(matrix)
    top_raw = top_weighted = None
    if top_k:
        cols = [matrix.roster.index_of(cid) for cid in top_k]
        top_raw = sum((raw[c] for c in cols), Fraction(0))
        top_weighted = sum((weighted[c] for c in cols), Fraction(0))
    return ShareReport(
        candidate_ids=tuple(matrix.roster.ids),
        raw_share=raw,
        weighted_share=weighted,
        top_k=tuple(top_k),
        top_k_raw=top_raw,
        top_k_weighted=top_weighted,
        total_weight=Fraction(total, scale),
    )
