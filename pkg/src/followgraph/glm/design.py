"""Design matrices: covariate scaling, year fixed effects, rank checks."""

from __future__ import annotations

import csv
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import qr

from ..errors import InputError, ParseError, RankDeficientError

INTERCEPT = "const"

# Raw counts are divided by these before fitting.
DEFAULT_SCALE = {"tweets": 1e6, "social_capital": 1e6}


@dataclass(frozen=True)
class DesignMatrix:
    values: np.ndarray
    columns: tuple[str, ...]
    scaling: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != len(self.columns):
            raise ValueError("design values must be 2-D with one column per name")
        if not np.all(np.isfinite(values)):
            raise InputError("design matrix contains missing or non-finite values")
        if INTERCEPT in self.columns and not np.all(values[:, self.columns.index(INTERCEPT)] == 1.0):
            raise ValueError("intercept column must be all ones")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_array(cls, values, columns=None, intercept=True) -> "DesignMatrix":
        values = np.atleast_2d(np.asarray(values, dtype=np.float64))
        if values.shape[0] == 1 and values.shape[1] > 1 and columns is None:
            values = values.T
        if columns is None:
            columns = [f"x{i + 1}" for i in range(values.shape[1])]
        if intercept:
            values = np.column_stack([np.ones(values.shape[0]), values])
            columns = [INTERCEPT, *columns]
        return cls(values, tuple(columns))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]

    def subset(self, mask) -> "DesignMatrix":
        return DesignMatrix(self.values[mask], self.columns, dict(self.scaling))


def collinear_columns(X: DesignMatrix, rtol: float = 1e-10) -> list[str]:
    """Names of columns that are linear combinations of the others."""
    if X.n_rows < X.n_cols:
        return list(X.columns[X.n_rows:])
    norms = np.linalg.norm(X.values, axis=0)
    norms[norms == 0] = 1.0
    _, r, piv = qr(X.values / norms, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > rtol * max(diag[0], 1e-300))) if diag.size else 0
    return [X.columns[j] for j in piv[rank:]]


def check_full_rank(X: DesignMatrix) -> None:
    if X.n_rows <= X.n_cols:
        raise RankDeficientError([f"{X.n_rows} rows for {X.n_cols} columns"])
    bad = collinear_columns(X)
    if bad:
        raise RankDeficientError(bad)


@dataclass(frozen=True)
class DesignSpec:
    """Recipe for turning a data table into a design matrix.

    Stored alongside a fit so the same columns, scale factors and year
    levels can be rebuilt for prediction.
    """

    covariates: tuple[str, ...]
    scale: dict[str, float] = field(default_factory=dict)
    year_column: str | None = None
    year_levels: tuple[int, ...] = ()
    intercept: bool = True

    def with_levels(self, table: Mapping[str, np.ndarray]) -> "DesignSpec":
        if self.year_column is None or self.year_levels:
            return self
        years = _numeric(table, self.year_column).astype(np.int64)
        levels = tuple(int(y) for y in np.unique(years))
        return DesignSpec(self.covariates, dict(self.scale), self.year_column, levels, self.intercept)

    @property
    def columns(self) -> tuple[str, ...]:
        cols = [INTERCEPT] if self.intercept else []
        cols += list(self.covariates)
        # Earliest year is the omitted reference level.
        cols += [f"year_{y}" for y in self.year_levels[1:]]
        return tuple(cols)

    def build(self, table: Mapping[str, np.ndarray]) -> DesignMatrix:
        spec = self.with_levels(table)
        n = _n_rows(table)
        parts = []
        if spec.intercept:
            parts.append(np.ones(n))
        for name in spec.covariates:
            col = _numeric(table, name)
            parts.append(col / spec.scale.get(name, 1.0))
        if spec.year_column is not None:
            years = _numeric(table, spec.year_column).astype(np.int64)
            unknown = sorted(set(years.tolist()) - set(spec.year_levels))
            if unknown:
                raise InputError(f"year values {unknown} not among fitted levels")
            for y in spec.year_levels[1:]:
                parts.append((years == y).astype(np.float64))
        values = np.column_stack(parts) if parts else np.empty((n, 0))
        used_scale = {k: v for k, v in spec.scale.items() if k in spec.covariates}
        return DesignMatrix(values, spec.columns, used_scale)

    def to_json(self) -> dict:
        return {"covariates": list(self.covariates), "scale": dict(self.scale),
                "year_column": self.year_column, "year_levels": list(self.year_levels),
                "intercept": self.intercept}

    @classmethod
    def from_json(cls, obj) -> "DesignSpec":
        return cls(tuple(obj["covariates"]), dict(obj.get("scale", {})), obj.get("year_column"),
                   tuple(obj.get("year_levels", ())), bool(obj.get("intercept", True)))


def default_spec(covariates: Sequence[str], year_column: str | None = None,
                 scale: Mapping[str, float] | None = None) -> DesignSpec:
    if scale is None:
        scale = {k: v for k, v in DEFAULT_SCALE.items() if k in covariates}
    return DesignSpec(tuple(covariates), dict(scale), year_column)


def _n_rows(table) -> int:
    return len(next(iter(table.values()))) if table else 0


def _numeric(table, name) -> np.ndarray:
    if name not in table:
        raise InputError(f"unknown column {name!r}")
    try:
        return np.asarray(table[name], dtype=np.float64)
    except ValueError:
        raise InputError(f"column {name!r} is not numeric") from None


def read_table(path) -> dict[str, np.ndarray]:
    """Read a CSV into a column dict of string arrays."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise ParseError("empty data file", path=path, line=1)
        cols: list[list[str]] = [[] for _ in header]
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}",
                                 path=path, line=reader.line_num)
            for c, v in zip(cols, row):
                c.append(v)
    return {name: np.array(c, dtype=object) for name, c in zip(header, cols)}


def filter_table(table: Mapping[str, np.ndarray], column: str, value: str) -> dict[str, np.ndarray]:
    if column not in table:
        raise InputError(f"unknown column {column!r}")
    mask = np.array([str(v) == value for v in table[column]], dtype=bool)
    return {k: np.asarray(v)[mask] for k, v in table.items()}
