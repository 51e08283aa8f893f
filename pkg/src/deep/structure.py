"""Outcome-parent discovery and the adjustment-set split."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

from .dataset import BinaryDataset
from .stats import CITestConfig, ci_test, correlation_with

__all__ = [
    "StructureResult",
    "find_parents_of_y",
    "split_adjustment_set",
    "learn_structure",
    "structure_from_names",
    "DEFAULT_MAX_COND_SIZE",
]

log = logging.getLogger(__name__)

DEFAULT_MAX_COND_SIZE = 3


@dataclass(frozen=True)
class StructureResult:
    """Parents of Y split into the adjustment set Z and the Y-parent-only set C.

    All sets hold variable indices in ascending order.
    """

    parents_of_y: Tuple[int, ...]
    adjustment_set_z: Tuple[int, ...]
    y_parent_only_c: Tuple[int, ...]
    corr_with_y: Dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        pa, z, c = set(self.parents_of_y), set(self.adjustment_set_z), set(self.y_parent_only_c)
        if z & c or (z | c) != pa:
            raise ValueError("Z and C must partition the parents of Y")
        for name in ("parents_of_y", "adjustment_set_z", "y_parent_only_c"):
            object.__setattr__(self, name, tuple(sorted(getattr(self, name))))

    def to_dict(self, d: BinaryDataset) -> dict:
        names = d.variables
        return {
            "treatment": d.treatment,
            "outcome": d.outcome,
            "parents_of_y": [names[i] for i in self.parents_of_y],
            "adjustment_set_z": [names[i] for i in self.adjustment_set_z],
            "y_parent_only_c": [names[i] for i in self.y_parent_only_c],
            "corr_with_y": {names[i]: self.corr_with_y[i] for i in self.parents_of_y},
        }


def find_parents_of_y(
    d: BinaryDataset,
    cfg: CITestConfig = CITestConfig(),
    max_cond_size: Optional[int] = DEFAULT_MAX_COND_SIZE,
) -> Tuple[int, ...]:
    """PC-simple search for the parents of the outcome.

    The treatment takes part in the search as a candidate (it may be needed in
    a separating set, e.g. for covariates whose only link to Y runs through
    W) but is never reported. Removals take effect immediately, and
    conditioning sets of each size are tried in lexicographic index order.
    """
    y = d.outcome_index
    active = sorted(set(d.covariates) | {d.treatment_index})
    level = 0
    while level <= len(active) - 1:
        if max_cond_size is not None and level > max_cond_size:
            break
        for x in list(active):
            if x not in active:
                continue
            others = [v for v in active if v != x]
            for subset in itertools.combinations(others, level):
                res = ci_test(d, x, y, subset, cfg)
                if res.independent:
                    log.debug(
                        "drop %s: independent of %s given %s (p=%.3g)",
                        d.variables[x], d.outcome, [d.variables[s] for s in subset], res.p_value,
                    )
                    active.remove(x)
                    break
        level += 1
    return tuple(v for v in active if v != d.treatment_index)


def split_adjustment_set(
    d: BinaryDataset, parents: Sequence[int], cfg: CITestConfig = CITestConfig()
) -> StructureResult:
    w = d.treatment_index
    z, c = [], []
    for x in parents:
        if x in (w, d.outcome_index):
            raise ValueError("parents must be covariates")
        (c if ci_test(d, x, w, (), cfg).independent else z).append(x)
    corr = {x: correlation_with(d, x, d.outcome_index) for x in parents}
    return StructureResult(tuple(parents), tuple(z), tuple(c), corr)


def learn_structure(
    d: BinaryDataset,
    cfg: CITestConfig = CITestConfig(),
    max_cond_size: Optional[int] = DEFAULT_MAX_COND_SIZE,
) -> StructureResult:
    parents = find_parents_of_y(d, cfg, max_cond_size)
    return split_adjustment_set(d, parents, cfg)


def structure_from_names(
    d: BinaryDataset, adjustment: Sequence[str], parent_only: Sequence[str]
) -> StructureResult:
    """Build a StructureResult from user-supplied Z and C (no learning)."""
    z = [d.index_of(v) for v in adjustment]
    c = [d.index_of(v) for v in parent_only]
    for v in z + c:
        if v in (d.treatment_index, d.outcome_index):
            raise ValueError("Z and C may only contain covariates")
    parents = z + c
    corr = {x: correlation_with(d, x, d.outcome_index) for x in parents}
    return StructureResult(tuple(parents), tuple(z), tuple(c), corr)
