"""Binary observational data: loading, projection and grouped 2x2 tallies.

Columns are stored variable-major (one contiguous boolean vector per
variable) so that projections and group-by tallies touch only the columns
they need.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from typing import Dict, Iterator, Sequence, Tuple

import numpy as np

__all__ = [
    "BinaryDataset",
    "CrossTable",
    "DataError",
    "load_csv",
    "write_csv",
    "project",
    "group_cross_tables",
    "group_codes",
]

Key = Tuple[int, ...]

# Above this many descriptor bits the dense bincount table gets too large.
_DENSE_KEY_BITS = 22


class DataError(ValueError):
    """Raised for malformed or inconsistent input data."""


@dataclass(frozen=True)
class CrossTable:
    """Counts of the four (W, Y) cells within one subgroup.

    ``n11`` is treated with outcome 1, ``n10`` treated with outcome 0,
    ``n01`` untreated with outcome 1 and ``n00`` untreated with outcome 0.
    """

    n11: int = 0
    n10: int = 0
    n01: int = 0
    n00: int = 0

    def __post_init__(self):
        for name in ("n11", "n10", "n01", "n00"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")
            object.__setattr__(self, name, int(value))

    @property
    def n1(self) -> int:
        return self.n11 + self.n10

    @property
    def n0(self) -> int:
        return self.n01 + self.n00

    @property
    def total(self) -> int:
        return self.n1 + self.n0

    @property
    def p1(self) -> float:
        return self.n11 / self.n1 if self.n1 else float("nan")

    @property
    def p0(self) -> float:
        return self.n01 / self.n0 if self.n0 else float("nan")

    @property
    def pbar(self) -> float:
        return (self.n11 + self.n01) / self.total if self.total else float("nan")

    def __add__(self, other: "CrossTable") -> "CrossTable":
        return CrossTable(
            self.n11 + other.n11,
            self.n10 + other.n10,
            self.n01 + other.n01,
            self.n00 + other.n00,
        )

    def as_tuple(self) -> Tuple[int, int, int, int]:
        return (self.n11, self.n10, self.n01, self.n00)

    @classmethod
    def from_arrays(cls, w: np.ndarray, y: np.ndarray) -> "CrossTable":
        w = np.asarray(w, dtype=bool)
        y = np.asarray(y, dtype=bool)
        counts = np.bincount(w.astype(np.int64) * 2 + y, minlength=4)
        return cls(n11=counts[3], n10=counts[2], n01=counts[1], n00=counts[0])


@dataclass(frozen=True, eq=False)
class BinaryDataset:
    """An immutable column store of binary records.

    Parameters
    ----------
    variables : tuple of str
        Column names, in file order.
    columns : np.ndarray
        Boolean array of shape ``(len(variables), n)``.
    treatment_index, outcome_index : int
        Positions of W and Y in ``variables``.
    """

    variables: Tuple[str, ...]
    columns: np.ndarray
    treatment_index: int
    outcome_index: int

    def __post_init__(self):
        variables = tuple(self.variables)
        object.__setattr__(self, "variables", variables)
        cols = np.asarray(self.columns)
        if cols.ndim != 2 or cols.shape[0] != len(variables):
            raise DataError(
                f"columns must have shape ({len(variables)}, n), got {cols.shape}"
            )
        if cols.shape[1] < 1:
            raise DataError("dataset must contain at least one record")
        if cols.dtype != bool:
            if not np.isin(cols, (0, 1)).all():
                raise DataError("all values must be 0 or 1")
            cols = cols.astype(bool)
        cols = np.ascontiguousarray(cols)
        cols.setflags(write=False)
        object.__setattr__(self, "columns", cols)
        if len(set(variables)) != len(variables):
            raise DataError("duplicate variable names")
        m = len(variables)
        if not (0 <= self.treatment_index < m and 0 <= self.outcome_index < m):
            raise DataError("treatment/outcome index out of bounds")
        if self.treatment_index == self.outcome_index:
            raise DataError("treatment and outcome must be different variables")

    @classmethod
    def from_columns(
        cls, data: Dict[str, Sequence[int]], treatment: str, outcome: str
    ) -> "BinaryDataset":
        names = list(data)
        for role, name in (("treatment", treatment), ("outcome", outcome)):
            if name not in data:
                raise DataError(f"{role} column {name!r} not found")
        cols = np.array([np.asarray(data[k]) for k in names])
        return cls(tuple(names), cols, names.index(treatment), names.index(outcome))

    @property
    def n(self) -> int:
        return self.columns.shape[1]

    @property
    def treatment(self) -> str:
        return self.variables[self.treatment_index]

    @property
    def outcome(self) -> str:
        return self.variables[self.outcome_index]

    @property
    def w(self) -> np.ndarray:
        return self.columns[self.treatment_index]

    @property
    def y(self) -> np.ndarray:
        return self.columns[self.outcome_index]

    @property
    def covariates(self) -> Tuple[int, ...]:
        """Indices of every variable other than W and Y."""
        skip = (self.treatment_index, self.outcome_index)
        return tuple(i for i in range(len(self.variables)) if i not in skip)

    def index_of(self, name: str) -> int:
        try:
            return self.variables.index(name)
        except ValueError:
            raise DataError(f"unknown variable {name!r}") from None

    def column(self, index: int) -> np.ndarray:
        return self.columns[index]

    def subset(self, rows: np.ndarray) -> "BinaryDataset":
        """Dataset restricted to the given record indices (or boolean mask)."""
        return BinaryDataset(
            self.variables,
            self.columns[:, rows],
            self.treatment_index,
            self.outcome_index,
        )

    def drop(self, names: Sequence[str]) -> "BinaryDataset":
        keep = [i for i, v in enumerate(self.variables) if v not in set(names)]
        variables = tuple(self.variables[i] for i in keep)
        return BinaryDataset(
            variables,
            self.columns[keep],
            variables.index(self.treatment),
            variables.index(self.outcome),
        )


def load_csv(path, treatment: str, outcome: str) -> BinaryDataset:
    """Read a comma-separated 0/1 file with a header row."""
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="") as fh:
        header = next(csv.reader(fh), None)
    if not header:
        raise DataError(f"{path}: empty file or missing header")
    header = [h.strip() for h in header]
    seen = set()
    for name in header:
        if name in seen:
            raise DataError(f"{path}: duplicate column name {name!r}")
        seen.add(name)
    for role, name in (("treatment", treatment), ("outcome", outcome)):
        if name not in seen:
            raise DataError(f"{path}: {role} column {name!r} missing from header")

    try:
        values = np.loadtxt(
            path, delimiter=",", skiprows=1, dtype=np.int8, ndmin=2
        )
    except ValueError:
        values = None
    if values is None or values.shape[1] != len(header) or not np.isin(values, (0, 1)).all():
        _locate_bad_cell(path, header)
        raise DataError(f"{path}: could not parse file")  # pragma: no cover
    if values.shape[0] == 0:
        raise DataError(f"{path}: no data rows")
    return BinaryDataset(
        tuple(header),
        values.T.astype(bool),
        header.index(treatment),
        header.index(outcome),
    )


def _locate_bad_cell(path: str, header: Sequence[str]) -> None:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {row_no} has {len(row)} cells, expected {len(header)}"
                )
            for col, cell in zip(header, row):
                if cell.strip() not in ("0", "1"):
                    raise DataError(
                        f"{path}: non-binary value {cell!r} at line {row_no}, column {col!r}"
                    )


def write_csv(d: BinaryDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(d.variables) + "\n")
        np.savetxt(fh, d.columns.T.astype(np.int8), fmt="%d", delimiter=",")


def _check_indices(d: BinaryDataset, vars: Sequence[int]) -> list:
    vars = [int(v) for v in vars]
    for v in vars:
        if not 0 <= v < len(d.variables):
            raise IndexError(f"variable index {v} out of range")
    return vars


def project(d: BinaryDataset, vars: Sequence[int]) -> Iterator[Tuple[Key, int]]:
    """Yield ``(values, record_index)`` for every record, restricted to ``vars``."""
    vars = _check_indices(d, vars)
    block = d.columns[vars].T.astype(np.int8)
    for i, row in enumerate(block):
        yield tuple(int(v) for v in row), i


def group_codes(d: BinaryDataset, vars: Sequence[int]) -> np.ndarray:
    """Integer code per record; the first variable is the most significant bit."""
    code = np.zeros(d.n, dtype=np.int64)
    for v in vars:
        code <<= 1
        code |= d.columns[v]
    return code


def _decode(code: int, width: int) -> Key:
    return tuple((code >> (width - 1 - j)) & 1 for j in range(width))


def grouped_counts(d: BinaryDataset, vars: Sequence[int]):
    """Distinct group codes (ascending) and their (n11, n10, n01, n00) counts."""
    vars = _check_indices(d, vars)
    cell = d.w.astype(np.int64) * 2 + d.y
    codes = group_codes(d, vars)
    if len(vars) <= _DENSE_KEY_BITS:
        flat = np.bincount(codes * 4 + cell, minlength=4 << len(vars))
        counts = flat.reshape(-1, 4)
        present = np.flatnonzero(counts.sum(axis=1))
        counts = counts[present]
    else:
        present, inverse = np.unique(codes, return_inverse=True)
        counts = np.zeros((len(present), 4), dtype=np.int64)
        np.add.at(counts, (inverse, cell), 1)
    # columns of ``counts`` are indexed by 2*w + y; reorder to n11, n10, n01, n00
    return present, counts[:, [3, 2, 1, 0]]


def group_cross_tables(d: BinaryDataset, vars: Sequence[int]) -> Dict[Key, CrossTable]:
    """Cross-tabulate (W, Y) within every observed value-vector of ``vars``.

    Keys are value tuples aligned with ``vars``; iteration order is
    lexicographic on the keys.
    """
    vars = _check_indices(d, vars)
    if d.treatment_index in vars or d.outcome_index in vars:
        raise DataError("grouping variables must exclude treatment and outcome")
    present, counts = grouped_counts(d, vars)
    width = len(vars)
    return {
        _decode(int(code), width): CrossTable(*row) for code, row in zip(present, counts)
    }
