"""Matching individuals against discovered patterns."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import List, Optional, Sequence

from .dataset import DataError
from .patterns import DescriptorValue, Pattern
from .stats import Sign

__all__ = ["Advice", "Specificity", "Recommendation", "match", "match_batch", "recommend_csv"]


class Advice(str, enum.Enum):
    TREAT = "treat"
    DO_NOT_TREAT = "do-not-treat"
    NONE = "no-recommendation"


class Specificity(str, enum.Enum):
    EXACT = "exact"
    STAR = "star-match"
    CROSS = "cross-match"
    UNMATCHED = "unmatched"


_ADVICE = {Sign.POSITIVE: Advice.TREAT, Sign.NEGATIVE: Advice.DO_NOT_TREAT, Sign.UNCERTAIN: Advice.NONE}


@dataclass(frozen=True)
class Recommendation:
    matched_pattern: Optional[Pattern]
    advice: Advice
    specificity: Specificity


def _covers(p: Pattern, individual: Sequence[int]) -> bool:
    return all(v >= DescriptorValue.STAR or int(v) == x for v, x in zip(p.values, individual))


def match(individual: Sequence[int], pats: Sequence[Pattern]) -> Recommendation:
    """Recommendation for one individual given as a 0/1 vector over the
    descriptor variables."""
    individual = [int(x) for x in individual]
    for p in pats:
        if len(p.values) != len(individual):
            raise DataError(
                f"individual has {len(individual)} values, patterns have {len(p.values)}"
            )
        if _covers(p, individual):
            if DescriptorValue.CROSS in p.values:
                spec = Specificity.CROSS
            elif DescriptorValue.STAR in p.values:
                spec = Specificity.STAR
            else:
                spec = Specificity.EXACT
            return Recommendation(p, _ADVICE[p.sign], spec)
    return Recommendation(None, Advice.NONE, Specificity.UNMATCHED)


def match_batch(individuals: Sequence[Sequence[int]], pats: Sequence[Pattern]) -> List[Recommendation]:
    return [match(row, pats) for row in individuals]


def recommend_csv(individuals_path, pats: Sequence[Pattern], names: Sequence[str], out_path) -> int:
    """Score a CSV of individuals and write it back with advice columns.

    The individuals file must contain every descriptor column; other columns
    are carried through unchanged. Returns the number of rows written.
    """
    with open(individuals_path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{individuals_path}: empty file")
    header = [h.strip() for h in rows[0]]
    missing = [n for n in names if n not in header]
    if missing:
        raise DataError(f"{individuals_path}: descriptor columns missing: {', '.join(missing)}")
    cols = [header.index(n) for n in names]
    with open(out_path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header + ["advice", "specificity"])
        for line_no, row in enumerate(rows[1:], start=2):
            try:
                vec = [int(row[c]) for c in cols]
            except (ValueError, IndexError):
                raise DataError(f"{individuals_path}: line {line_no}: bad descriptor values") from None
            if any(v not in (0, 1) for v in vec):
                raise DataError(f"{individuals_path}: line {line_no}: values must be 0 or 1")
            rec = match(vec, pats)
            out.writerow(row + [rec.advice.value, rec.specificity.value])
    return len(rows) - 1
