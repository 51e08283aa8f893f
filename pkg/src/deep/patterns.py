"""Treatment effect patterns and their construction from data."""

from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable, List, Optional, Sequence, Tuple

from .dataset import BinaryDataset, CrossTable, DataError, group_cross_tables
from .stats import Sign, SignTestConfig, sign_of_cate
from .structure import StructureResult

__all__ = [
    "DescriptorValue",
    "Pattern",
    "UndefinedCATE",
    "cate",
    "initialise_patterns",
    "canonical_order",
    "write_patterns",
    "read_patterns",
    "stratified_ate",
]

log = logging.getLogger(__name__)


class UndefinedCATE(ValueError):
    """The subgroup lacks a treated or an untreated record."""


class DescriptorValue(enum.IntEnum):
    ZERO = 0
    ONE = 1
    STAR = 2
    CROSS = 3

    @property
    def symbol(self) -> str:
        return _SYMBOLS[self]

    @property
    def is_literal(self) -> bool:
        return self <= DescriptorValue.ONE

    @classmethod
    def parse(cls, text: str) -> "DescriptorValue":
        try:
            return _PARSE[text.strip()]
        except KeyError:
            raise ValueError(f"invalid descriptor value {text!r}") from None


_SYMBOLS = {
    DescriptorValue.ZERO: "0",
    DescriptorValue.ONE: "1",
    DescriptorValue.STAR: "*",
    DescriptorValue.CROSS: "x",
}
_PARSE = {"0": DescriptorValue.ZERO, "1": DescriptorValue.ONE, "*": DescriptorValue.STAR,
          "x": DescriptorValue.CROSS, "×": DescriptorValue.CROSS}


@dataclass(frozen=True)
class Pattern:
    """A subgroup descriptor over the outcome's parents plus the CATE sign."""

    descriptor_vars: Tuple[int, ...]
    values: Tuple[DescriptorValue, ...]
    sign: Sign
    table: CrossTable

    def __post_init__(self):
        object.__setattr__(self, "descriptor_vars", tuple(self.descriptor_vars))
        object.__setattr__(self, "values", tuple(DescriptorValue(v) for v in self.values))
        object.__setattr__(self, "sign", Sign(self.sign))
        if len(self.values) != len(self.descriptor_vars):
            raise ValueError("values must align with descriptor_vars")

    @property
    def support(self) -> int:
        return self.table.total

    @property
    def cate(self) -> float:
        try:
            return cate(self.table)
        except UndefinedCATE:
            return float("nan")

    @property
    def descriptor(self) -> str:
        return "".join(v.symbol for v in self.values)

    def sort_key(self):
        return tuple(int(v) for v in self.values)

    def with_sign(self, sign: Sign) -> "Pattern":
        return replace(self, sign=sign)

    def __str__(self):
        return f"({','.join(v.symbol for v in self.values)};{self.sign.value})"


def cate(t: CrossTable) -> float:
    """Difference of outcome rates between treated and untreated records."""
    if t.n1 == 0 or t.n0 == 0:
        raise UndefinedCATE(f"CATE undefined for table {t.as_tuple()}: empty arm")
    return t.p1 - t.p0


def canonical_order(patterns: Iterable[Pattern]) -> List[Pattern]:
    return sorted(patterns, key=Pattern.sort_key)


def initialise_patterns(
    d: BinaryDataset, s: StructureResult, cfg: SignTestConfig = SignTestConfig()
) -> List[Pattern]:
    """One pattern per observed value-vector of PA(Y), in canonical order.

    With no parents the whole population forms a single pattern.
    """
    dvars = s.parents_of_y
    if not dvars:
        log.warning("no parents of %s found; using the whole population as one pattern", d.outcome)
    tables = group_cross_tables(d, dvars)
    return [
        Pattern(dvars, tuple(DescriptorValue(v) for v in key), sign_of_cate(t, cfg), t)
        for key, t in tables.items()
    ]


def stratified_ate(patterns: Sequence[Pattern]) -> float:
    """Adjustment-formula ATE: subgroup CATEs weighted by subgroup size.

    Subgroups with an empty arm are left out and the weights renormalised.
    """
    num = den = 0
    for p in patterns:
        if p.table.n1 and p.table.n0:
            num += cate(p.table) * p.support
            den += p.support
    return num / den if den else float("nan")


_TAIL = ["sign", "cate", "n11", "n10", "n01", "n00"]


def write_patterns(path, patterns: Sequence[Pattern], names: Sequence[str]) -> None:
    """Write patterns as CSV: one column per descriptor variable, then sign,
    cate and the four cell counts."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(list(names) + _TAIL)
        for p in canonical_order(patterns):
            c = p.cate
            out.writerow(
                [v.symbol for v in p.values]
                + [p.sign.value, "" if math.isnan(c) else f"{c:.6f}"]
                + list(p.table.as_tuple())
            )


def read_patterns(path, d: Optional[BinaryDataset] = None) -> Tuple[List[str], List[Pattern]]:
    """Read a pattern file.

    When ``d`` is given the descriptor columns are resolved to its variable
    indices; otherwise descriptor positions are numbered from 0.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][-len(_TAIL):] != _TAIL:
        raise DataError(f"{path}: not a pattern file")
    names = rows[0][: -len(_TAIL)]
    if d is not None:
        dvars = tuple(d.index_of(n) for n in names)
    else:
        dvars = tuple(range(len(names)))
    k = len(names)
    out = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != k + len(_TAIL):
            raise DataError(f"{path}: line {line_no} has {len(row)} cells")
        try:
            values = tuple(DescriptorValue.parse(c) for c in row[:k])
            sign = Sign(row[k])
            table = CrossTable(*(int(c) for c in row[k + 2:]))
        except ValueError as exc:
            raise DataError(f"{path}: line {line_no}: {exc}") from None
        out.append(Pattern(dvars, values, sign, table))
    return names, out
