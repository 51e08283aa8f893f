"""Hypothesis tests and association measures on binary data."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import stats as sps

from .dataset import BinaryDataset, CrossTable, group_codes

__all__ = [
    "Sign",
    "SignTestConfig",
    "CITestConfig",
    "CITestResult",
    "z_critical",
    "critical_ratio",
    "sign_of_cate",
    "ci_test",
    "correlation_with",
    "bonferroni_gamma",
]

# Critical values for the confidence levels the tool is usually run at.
_Z_TABLE = {0.90: 1.645, 0.95: 1.96, 0.99: 2.576}


class Sign(str, enum.Enum):
    POSITIVE = "+"
    NEGATIVE = "-"
    UNCERTAIN = "?"

    def __str__(self):
        return self.value

    @property
    def is_signed(self) -> bool:
        return self is not Sign.UNCERTAIN


def z_critical(gamma: float) -> float:
    """Two-sided normal critical value for confidence level ``gamma``."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {gamma}")
    for level, z in _Z_TABLE.items():
        if math.isclose(gamma, level, rel_tol=0, abs_tol=1e-12):
            return z
    return float(sps.norm.ppf(1.0 - (1.0 - gamma) / 2.0))


def bonferroni_gamma(gamma: float, m: int) -> float:
    """Per-test confidence level keeping the family-wise level at ``gamma``."""
    return 1.0 - (1.0 - gamma) / max(int(m), 1)


@dataclass(frozen=True)
class SignTestConfig:
    gamma: float = 0.95
    z_critical: Optional[float] = field(default=None)

    def __post_init__(self):
        if self.z_critical is None:
            object.__setattr__(self, "z_critical", z_critical(self.gamma))
        elif self.z_critical <= 0:
            raise ValueError("z_critical must be positive")


@dataclass(frozen=True)
class CITestConfig:
    """Settings for the G-squared conditional independence test.

    ``min_cell_expectation`` drops strata whose smallest expected cell count
    falls below the guard; 0 keeps every stratum with positive margins.
    """

    alpha: float = 0.01
    min_cell_expectation: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.min_cell_expectation < 0:
            raise ValueError("min_cell_expectation must be non-negative")


class CITestResult(NamedTuple):
    independent: bool
    p_value: float
    statistic: float
    dof: int

    @property
    def low_power(self) -> bool:
        # no stratum carried information about the pair
        return self.dof == 0


def critical_ratio(t: CrossTable) -> float:
    """Continuity-corrected z statistic for |p1 - p0|; NaN when undefined."""
    if t.n1 == 0 or t.n0 == 0:
        return float("nan")
    pbar = t.pbar
    var = pbar * (1.0 - pbar)
    if var <= 0.0:
        return float("nan")
    inv = 1.0 / t.n1 + 1.0 / t.n0
    return (abs(t.p1 - t.p0) - 0.5 * inv) / math.sqrt(var * inv)


def sign_of_cate(t: CrossTable, cfg: SignTestConfig = SignTestConfig()) -> Sign:
    z = critical_ratio(t)
    if math.isnan(z) or z <= cfg.z_critical:
        return Sign.UNCERTAIN
    # direction comes from the raw difference; z only measures its size
    if t.p1 > t.p0:
        return Sign.POSITIVE
    if t.p1 < t.p0:
        return Sign.NEGATIVE
    return Sign.UNCERTAIN


def ci_test(
    d: BinaryDataset,
    a: int,
    b: int,
    cond: Sequence[int] = (),
    cfg: CITestConfig = CITestConfig(),
) -> CITestResult:
    """G-squared test of ``a`` independent of ``b`` given ``cond``.

    Each value-vector of ``cond`` defines a stratum holding a 2x2 table of
    (a, b). Strata with a zero margin carry no information and are skipped;
    every remaining stratum adds one degree of freedom. With no informative
    stratum the test cannot reject and reports ``p_value = 1``.
    """
    cond = list(cond)
    if a == b:
        raise ValueError("cannot test a variable against itself")
    if a in cond or b in cond:
        raise ValueError("conditioning set must exclude the tested pair")

    codes = group_codes(d, cond)
    cells = d.column(a).astype(np.int64) * 2 + d.column(b)
    obs = np.bincount(codes * 4 + cells, minlength=4 << len(cond)).reshape(-1, 4)
    obs = obs.astype(float)
    rows = np.stack([obs[:, 0] + obs[:, 1], obs[:, 2] + obs[:, 3]], axis=1)
    cols = np.stack([obs[:, 0] + obs[:, 2], obs[:, 1] + obs[:, 3]], axis=1)
    total = rows.sum(axis=1)
    keep = (rows > 0).all(axis=1) & (cols > 0).all(axis=1)
    if not keep.any():
        return CITestResult(True, 1.0, 0.0, 0)
    obs, rows, cols, total = obs[keep], rows[keep], cols[keep], total[keep]
    # expected counts in cell order (a, b) = 00, 01, 10, 11
    exp = np.stack(
        [
            rows[:, 0] * cols[:, 0],
            rows[:, 0] * cols[:, 1],
            rows[:, 1] * cols[:, 0],
            rows[:, 1] * cols[:, 1],
        ],
        axis=1,
    ) / total[:, None]
    if cfg.min_cell_expectation > 0:
        ok = exp.min(axis=1) >= cfg.min_cell_expectation
        if not ok.any():
            return CITestResult(True, 1.0, 0.0, 0)
        obs, exp = obs[ok], exp[ok]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(obs > 0, obs * np.log(obs / exp), 0.0)
    g2 = max(2.0 * float(terms.sum()), 0.0)
    dof = int(obs.shape[0])
    p = float(sps.chi2.sf(g2, dof))
    return CITestResult(p > cfg.alpha, p, g2, dof)


def correlation_with(d: BinaryDataset, x: int, y: int) -> float:
    """Absolute phi coefficient between two binary columns."""
    if x == y:
        raise ValueError("correlation of a variable with itself is not defined here")
    t = CrossTable.from_arrays(d.column(x), d.column(y))
    n = t.total
    n1, n0 = t.n1, t.n0  # x margins
    m1, m0 = t.n11 + t.n01, t.n10 + t.n00  # y margins
    if min(n1, n0, m1, m0) == 0:
        return 0.0
    num = abs(n * t.n11 - n1 * m1)
    value = num / math.sqrt(float(n1) * n0 * m1 * m0)
    return min(value, 1.0)
