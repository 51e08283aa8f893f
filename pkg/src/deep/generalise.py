"""Bottom-up merging of treatment effect patterns.

Two patterns merge when their descriptors differ only by a 0/1 opposition
at one position and their signs agree. Signed pairs merge into a ``*``
pattern that keeps the shared sign; uncertain pairs merge into a ``x``
pattern whose sign is re-tested on the pooled table, which is only allowed
when the differing variable is outside the adjustment set.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .patterns import DescriptorValue, Pattern, canonical_order
from .stats import Sign, SignTestConfig, sign_of_cate
from .structure import StructureResult

__all__ = [
    "GeneraliseConfig",
    "GeneralisationError",
    "can_merge",
    "star_generalise",
    "cross_generalise",
    "run_generalisation",
]

log = logging.getLogger(__name__)

_LITERAL = (DescriptorValue.ZERO, DescriptorValue.ONE)


class GeneralisationError(ValueError):
    pass


@dataclass(frozen=True)
class GeneraliseConfig:
    """Stop criteria and sign-test level for the merge loop.

    The loop stops once the best remaining candidate's distinctive variable
    is more strongly correlated with Y than ``theta``, or after
    ``max_merges_k`` merges.
    """

    theta: float = 1.0
    max_merges_k: Optional[int] = None
    gamma: float = 0.95
    z_critical: Optional[float] = None

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0, 1]")
        if self.max_merges_k is not None and self.max_merges_k < 1:
            raise ValueError("max_merges_k must be a positive integer")

    @property
    def sign_config(self) -> SignTestConfig:
        return SignTestConfig(self.gamma, self.z_critical)


def _distinct_position(a: Pattern, b: Pattern) -> Optional[int]:
    pos = None
    for i, (u, v) in enumerate(zip(a.values, b.values)):
        if u == v:
            continue
        if u in _LITERAL and v in _LITERAL and pos is None:
            pos = i
        else:
            return None
    return pos


def can_merge(p1: Pattern, p2: Pattern) -> Optional[int]:
    """Variable index at which ``p1`` and ``p2`` may be merged, or None."""
    if p1.descriptor_vars != p2.descriptor_vars:
        raise GeneralisationError("patterns are defined on different variables")
    if p1.sign != p2.sign:
        return None
    pos = _distinct_position(p1, p2)
    return None if pos is None else p1.descriptor_vars[pos]


def _merge(p1: Pattern, p2: Pattern, at: int, wildcard: DescriptorValue, sign: Sign) -> Pattern:
    pos = p1.descriptor_vars.index(at)
    values = list(p1.values)
    values[pos] = wildcard
    return Pattern(p1.descriptor_vars, tuple(values), sign, p1.table + p2.table)


def _check_pair(p1: Pattern, p2: Pattern, at: int) -> None:
    if can_merge(p1, p2) != at:
        raise GeneralisationError(f"patterns {p1} and {p2} cannot be merged at variable {at}")


def star_generalise(p1: Pattern, p2: Pattern, at: int) -> Pattern:
    _check_pair(p1, p2, at)
    if not p1.sign.is_signed:
        raise GeneralisationError("(*)-generalisation needs two signed patterns")
    return _merge(p1, p2, at, DescriptorValue.STAR, p1.sign)


def cross_generalise(
    p1: Pattern,
    p2: Pattern,
    at: int,
    cfg: GeneraliseConfig = GeneraliseConfig(),
    adjustment_set: Iterable[int] = (),
) -> Pattern:
    _check_pair(p1, p2, at)
    if p1.sign.is_signed:
        raise GeneralisationError("(x)-generalisation needs two uncertain patterns")
    if at in set(adjustment_set):
        raise GeneralisationError(f"variable {at} is an adjustment variable and cannot be omitted")
    pooled = p1.table + p2.table
    return _merge(p1, p2, at, DescriptorValue.CROSS, sign_of_cate(pooled, cfg.sign_config))


def _candidates(patterns: Sequence[Pattern], z: frozenset, corr: Dict[int, float]):
    """Yield (priority, low, high, variable) for every admissible pair.

    Pairs are found by hashing each pattern with one literal position masked:
    two patterns share a bucket exactly when they differ only there.
    """
    buckets: Dict[tuple, Dict[int, Pattern]] = {}
    for p in patterns:
        for pos, v in enumerate(p.values):
            if v in _LITERAL:
                key = (pos, p.sign, p.values[:pos] + p.values[pos + 1:])
                buckets.setdefault(key, {})[int(v)] = p
    for (pos, sign, _), pair in buckets.items():
        if len(pair) != 2:
            continue
        var = pair[0].descriptor_vars[pos]
        if not sign.is_signed and var in z:
            continue
        priority = (corr.get(var, 0.0), var, pair[0].sort_key())
        yield priority, pair[0], pair[1], var


def run_generalisation(
    pats: Sequence[Pattern], s: StructureResult, cfg: GeneraliseConfig = GeneraliseConfig()
) -> List[Pattern]:
    """Greedily merge pattern pairs until no admissible pair remains.

    Each step takes the pair whose distinctive variable has the weakest
    correlation with Y, breaking ties by variable index and then by the
    canonical order of the pair's 0-valued member.
    """
    z = frozenset(s.adjustment_set_z)
    corr = s.corr_with_y
    current = list(pats)
    merges = 0
    while True:
        if cfg.max_merges_k is not None and merges >= cfg.max_merges_k:
            break
        best = min(_candidates(current, z, corr), default=None, key=lambda c: c[0])
        if best is None:
            break
        priority, low, high, var = best
        if priority[0] > cfg.theta:
            log.debug("stopping: correlation %.3f exceeds theta %.3f", priority[0], cfg.theta)
            break
        if low.sign.is_signed:
            merged = star_generalise(low, high, var)
        else:
            merged = cross_generalise(low, high, var, cfg, z)
        current = [p for p in current if p is not low and p is not high]
        current.append(merged)
        merges += 1
    return canonical_order(current)
