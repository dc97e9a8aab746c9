"""Candidate rosters, the boolean follow matrix, and its descriptive statistics."""

from __future__ import annotations

import csv
import enum
import io
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateCandidateError,
    EmptyRosterError,
    ParseError,
    UnknownCandidateError,
    UnknownPartyError,
)

# Engagement buckets: 1, 2, 3, 4, 5+ candidates followed.
ENGAGEMENT_BUCKETS = (1, 2, 3, 4, 5)
ENGAGEMENT_LABELS = ("1", "2", "3", "4", "5+")


class Party(str, enum.Enum):
    DEMOCRAT = "D"
    REPUBLICAN = "R"

    @classmethod
    def parse(cls, text: str) -> "Party":
        key = text.strip().upper()
        aliases = {"D": cls.DEMOCRAT, "DEMOCRAT": cls.DEMOCRAT,
                   "R": cls.REPUBLICAN, "REPUBLICAN": cls.REPUBLICAN}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown party {text!r}") from None


class PartisanClass(str, enum.Enum):
    """Follow-behaviour class; order matches the multinomial outcome c = 1, 2, 3."""

    DEMOCRAT = "Democrat"
    INDEPENDENT = "Independent"
    REPUBLICAN = "Republican"

    @property
    def code(self) -> int:
        return _CLASS_CODES[self]

    @classmethod
    def parse(cls, text) -> "PartisanClass":
        if isinstance(text, PartisanClass):
            return text
        key = str(text).strip()
        for member in cls:
            if key.lower() in (member.value.lower(), f"{member.value.lower()}follower",
                               str(_CLASS_CODES[member])):
                return member
        raise ValueError(f"unknown partisan class {text!r}")


_CLASS_CODES = {PartisanClass.DEMOCRAT: 1, PartisanClass.INDEPENDENT: 2,
                PartisanClass.REPUBLICAN: 3}


@dataclass(frozen=True)
class Candidate:
    candidate_id: str
    display_name: str
    party: Party


@dataclass(frozen=True)
class CandidateRoster:
    """Ordered candidate list; the order fixes the matrix column indices."""

    candidates: tuple[Candidate, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.candidates:
            raise EmptyRosterError("roster is empty")
        index = {}
        for pos, cand in enumerate(self.candidates):
            if cand.candidate_id in index:
                raise DuplicateCandidateError(f"duplicate candidate_id {cand.candidate_id!r}")
            index[cand.candidate_id] = pos
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_records(cls, records: Iterable[tuple[str, str, str | Party]]) -> "CandidateRoster":
        return cls(tuple(Candidate(cid, name, Party.parse(p) if isinstance(p, str) else p)
                         for cid, name, p in records))

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)

    @property
    def ids(self) -> list[str]:
        return [c.candidate_id for c in self.candidates]

    def index_of(self, candidate_id: str) -> int:
        try:
            return self._index[candidate_id]
        except KeyError:
            raise UnknownCandidateError(candidate_id) from None

    def party_mask(self, party: Party) -> np.ndarray:
        return np.array([c.party is party for c in self.candidates], dtype=bool)


def load_roster(path) -> CandidateRoster:
    """Read a ``candidate_id,display_name,party`` CSV, keeping file order."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyRosterError("roster file is empty", path=path, line=1)
        header = [h.strip() for h in header]
        if header != ["candidate_id", "display_name", "party"]:
            raise ParseError(f"unexpected roster header {header}", path=path, line=1)
        seen: dict[str, int] = {}
        candidates = []
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", path=path, line=line)
            cid, name, party = (cell.strip() for cell in row)
            if not cid:
                raise ParseError("empty candidate_id", path=path, line=line)
            if cid in seen:
                raise DuplicateCandidateError(
                    f"duplicate candidate_id {cid!r} (first seen on line {seen[cid]})",
                    path=path, line=line)
            try:
                party_value = Party.parse(party)
            except ValueError:
                raise UnknownPartyError(f"unknown party {party!r}; expected D or R",
                                        path=path, line=line) from None
            seen[cid] = line
            candidates.append(Candidate(cid, name, party_value))
    if not candidates:
        raise EmptyRosterError("roster file has no candidates", path=path, line=2)
    return CandidateRoster(tuple(candidates))


def write_roster(roster: CandidateRoster, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["candidate_id", "display_name", "party"])
        for c in roster:
            writer.writerow([c.candidate_id, c.display_name, c.party.value])


class FollowMatrix:
    """Sparse boolean follower x candidate incidence, stored row-compressed.

    Rows are users in first-appearance order; each row holds the sorted,
    deduplicated column indices the user follows. Instances are treated as
    immutable once built.
    """

    def __init__(self, roster: CandidateRoster, user_ids: Sequence[str],
                 indptr: np.ndarray, indices: np.ndarray):
        self.roster = roster
        self.user_ids = list(user_ids)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        if len(self.indptr) != len(self.user_ids) + 1:
            raise ValueError("indptr length must be n_users + 1")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= len(roster)):
            raise ValueError("column index out of range")
        sizes = np.diff(self.indptr)
        if np.any(sizes <= 0):
            raise ValueError("every user row must follow at least one candidate")

    @classmethod
    def from_rows(cls, roster: CandidateRoster, rows: Iterable[Iterable[int]],
                  user_ids: Sequence[str] | None = None) -> "FollowMatrix":
        indptr = [0]
        indices: list[int] = []
        for row in rows:
            cols = sorted(set(int(c) for c in row))
            indices.extend(cols)
            indptr.append(len(indices))
        n = len(indptr) - 1
        if user_ids is None:
            user_ids = [f"u{i}" for i in range(n)]
        return cls(roster, user_ids, np.array(indptr), np.array(indices, dtype=np.int64))

    @classmethod
    def from_dense(cls, roster: CandidateRoster, dense, user_ids=None) -> "FollowMatrix":
        dense = np.asarray(dense, dtype=bool)
        return cls.from_rows(roster, (np.flatnonzero(r) for r in dense), user_ids)

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_candidates(self) -> int:
        return len(self.roster)

    def row(self, i: int) -> tuple[int, ...]:
        return tuple(int(c) for c in self.indices[self.indptr[i]:self.indptr[i + 1]])

    def rows(self):
        for i in range(self.n_users):
            yield self.row(i)

    def row_sizes(self) -> np.ndarray:
        return np.diff(self.indptr)

    def row_of_indices(self) -> np.ndarray:
        """Row index of every stored entry (COO row vector)."""
        return np.repeat(np.arange(self.n_users), self.row_sizes())

    def dense(self) -> np.ndarray:
        out = np.zeros((self.n_users, self.n_candidates), dtype=bool)
        out[self.row_of_indices(), self.indices] = True
        return out

    def to_scipy(self):
        from scipy.sparse import csr_matrix

        data = np.ones(len(self.indices), dtype=bool)
        return csr_matrix((data, self.indices, self.indptr),
                          shape=(self.n_users, self.n_candidates))

    def user_index(self) -> dict[str, int]:
        return {uid: i for i, uid in enumerate(self.user_ids)}

    def __eq__(self, other):
        if not isinstance(other, FollowMatrix):
            return NotImplemented
        return (self.roster == other.roster and self.user_ids == other.user_ids
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __repr__(self):
        return f"FollowMatrix(n_users={self.n_users}, n_candidates={self.n_candidates})"


def ingest_edges(edges: Iterable[tuple[str, str]], roster: CandidateRoster) -> FollowMatrix:
    """Collapse (user_id, candidate_id) edges into a follow matrix.

    Rows appear in first-appearance order of user_id and duplicate edges
    collapse to a single bit.
    """
    order: dict[str, int] = {}
    rows: list[set[int]] = []
    for pos, (user_id, candidate_id) in enumerate(edges, start=1):
        try:
            col = roster.index_of(candidate_id)
        except UnknownCandidateError:
            raise UnknownCandidateError(candidate_id, line=pos) from None
        idx = order.get(user_id)
        if idx is None:
            order[user_id] = idx = len(rows)
            rows.append(set())
        rows[idx].add(col)
    return FollowMatrix.from_rows(roster, rows, list(order))


class _EdgeReader:
    """Iterates an edge CSV, tracking the physical line for diagnostics."""

    def __init__(self, fh, path):
        self._reader = csv.reader(fh)
        self._path = path
        self.line_num = 0
        header = next(self._reader, None)
        if header is not None and [h.strip() for h in header] != ["user_id", "candidate_id"]:
            raise ParseError(f"unexpected edge header {header}", path=path, line=1)

    def __iter__(self):
        for row in self._reader:
            self.line_num = self._reader.line_num
            if not row:
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", path=self._path,
                                 line=self.line_num)
            yield row[0].strip(), row[1].strip()


def read_edges(path, roster: CandidateRoster) -> FollowMatrix:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = _EdgeReader(fh, path)
        try:
            return ingest_edges(reader, roster)
        except UnknownCandidateError as exc:
            raise ParseError(f"unknown candidate_id {exc.candidate_id!r}", path=path,
                             line=reader.line_num) from None


def emit_edges(matrix: FollowMatrix) -> list[tuple[str, str]]:
    ids = matrix.roster.ids
    return [(uid, ids[c]) for uid, row in zip(matrix.user_ids, matrix.rows()) for c in row]


def write_edges(matrix: FollowMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["user_id", "candidate_id"])
        writer.writerows(emit_edges(matrix))


def edges_csv_text(matrix: FollowMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["user_id", "candidate_id"])
    writer.writerows(emit_edges(matrix))
    return buf.getvalue()


def follower_counts(matrix: FollowMatrix) -> np.ndarray:
    """Number of followers of each candidate, in roster order."""
    return np.bincount(matrix.indices, minlength=matrix.n_candidates).astype(np.int64)


@dataclass(frozen=True)
class EngagementTable:
    """Per-candidate follower counts split by how many candidates each follower follows."""

    candidate_ids: tuple[str, ...]
    counts: np.ndarray  # (n_candidates, len(ENGAGEMENT_BUCKETS)), int

    def followers(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def fractions(self, candidate: int | str) -> tuple[float, ...] | None:
        """Bucket fractions for one candidate, or None when it has no followers."""
        k = candidate if isinstance(candidate, int) else self.candidate_ids.index(candidate)
        total = int(self.counts[k].sum())
        if total == 0:
            return None
        return tuple(float(c) / total for c in self.counts[k])


def engagement_distribution(matrix: FollowMatrix) -> EngagementTable:
    sizes = matrix.row_sizes()
    bucket = np.minimum(sizes, ENGAGEMENT_BUCKETS[-1]) - 1
    per_entry_bucket = np.repeat(bucket, sizes)
    counts = np.zeros((matrix.n_candidates, len(ENGAGEMENT_BUCKETS)), dtype=np.int64)
    np.add.at(counts, (matrix.indices, per_entry_bucket), 1)
    return EngagementTable(tuple(matrix.roster.ids), counts)


def partisan_class(row: Iterable[int], roster: CandidateRoster) -> PartisanClass:
    parties = {roster.candidates[int(c)].party for c in row}
    if not parties:
        raise ValueError("a user must follow at least one candidate")
    if parties == {Party.DEMOCRAT}:
        return PartisanClass.DEMOCRAT
    if parties == {Party.REPUBLICAN}:
        return PartisanClass.REPUBLICAN
    return PartisanClass.INDEPENDENT


def partisan_classes(matrix: FollowMatrix) -> list[PartisanClass]:
    dem = matrix.roster.party_mask(Party.DEMOCRAT)
    rows = matrix.row_of_indices()
    n_dem = np.bincount(rows, weights=dem[matrix.indices], minlength=matrix.n_users)
    sizes = matrix.row_sizes()
    out = []
    for d, s in zip(n_dem.astype(np.int64), sizes):
        if d == s:
            out.append(PartisanClass.DEMOCRAT)
        elif d == 0:
            out.append(PartisanClass.REPUBLICAN)
        else:
            out.append(PartisanClass.INDEPENDENT)
    return out


def partisan_counts(matrix: FollowMatrix) -> dict[PartisanClass, int]:
    counts = {cls: 0 for cls in PartisanClass}
    for cls in partisan_classes(matrix):
        counts[cls] += 1
    return counts


def follow_count_histogram(matrix: FollowMatrix) -> np.ndarray:
    """Users by number of candidates followed; entry i counts users following i+1."""
    sizes = matrix.row_sizes()
    hist = np.bincount(sizes, minlength=matrix.n_candidates + 1)
    return hist[1:matrix.n_candidates + 1].astype(np.int64)
