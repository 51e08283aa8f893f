"""Evaluation harness: homogeneity, cross-validated accuracy, coverage, sweeps."""

from __future__ import annotations

import enum
import itertools
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dataset import BinaryDataset, CrossTable, group_cross_tables
from .patterns import DescriptorValue, Pattern
from .pipeline import RunConfig, discover
from .stats import Sign, SignTestConfig, sign_of_cate

__all__ = [
    "Homogeneity",
    "HomogeneityReport",
    "homogeneity",
    "CvReport",
    "cross_validate",
    "stratified_folds",
    "coverage",
    "SweepRow",
    "parameter_sweep",
    "literal_mask",
]


class Homogeneity(str, enum.Enum):
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"
    UNCERTAIN = "uncertain"


@dataclass
class HomogeneityReport:
    patterns: List[Pattern]
    labels: List[Homogeneity]
    sub_signs: List[List[Sign]]

    @property
    def fractions(self) -> Dict[Homogeneity, float]:
        n = len(self.labels)
        return {h: (self.labels.count(h) / n if n else 0.0) for h in Homogeneity}


def _expansions(p: Pattern):
    slots = [(0, 1) if v >= DescriptorValue.STAR else (int(v),) for v in p.values]
    return itertools.product(*slots)


def _classify(sign: Sign, subs: Sequence[Sign]) -> Homogeneity:
    if not sign.is_signed:
        return Homogeneity.UNCERTAIN
    opposite = Sign.NEGATIVE if sign is Sign.POSITIVE else Sign.POSITIVE
    if opposite in subs:
        return Homogeneity.INCONSISTENT
    if Sign.UNCERTAIN in subs:
        return Homogeneity.UNCERTAIN
    return Homogeneity.CONSISTENT


def homogeneity(
    pats: Sequence[Pattern], d: BinaryDataset, cfg: SignTestConfig = SignTestConfig()
) -> HomogeneityReport:
    """Label each pattern by the signs of its fully specified sub-patterns.

    Every ``*`` and ``x`` position is expanded to both literal values and the
    resulting subgroups are sign-tested on ``d``. A pattern whose own sign is
    uncertain is labelled uncertain.
    """
    cache: Dict[tuple, Dict[tuple, CrossTable]] = {}
    labels, subs_all = [], []
    empty = CrossTable()
    for p in pats:
        tables = cache.get(p.descriptor_vars)
        if tables is None:
            tables = cache[p.descriptor_vars] = group_cross_tables(d, p.descriptor_vars)
        subs = [sign_of_cate(tables.get(key, empty), cfg) for key in _expansions(p)]
        labels.append(_classify(p.sign, subs))
        subs_all.append(subs)
    return HomogeneityReport(list(pats), labels, subs_all)


def literal_mask(p: Pattern, d: BinaryDataset) -> np.ndarray:
    """Records agreeing with every literal position of ``p``."""
    mask = np.ones(d.n, dtype=bool)
    for var, v in zip(p.descriptor_vars, p.values):
        if v.is_literal:
            mask &= d.column(var) == bool(v)
    return mask


def coverage(pats: Sequence[Pattern], d: BinaryDataset) -> float:
    """Fraction of records matched by a pattern with a definite sign."""
    covered = np.zeros(d.n, dtype=bool)
    for p in pats:
        if p.sign.is_signed:
            covered |= literal_mask(p, d)
    return float(covered.mean())


@dataclass
class CvReport:
    """Cross-validated sign accuracy against the approximal ground truth.

    ``accuracies`` holds one value per repetition, ``None`` when that
    repetition produced no evaluable signed pattern.
    """

    runs: int
    folds: int
    seed: int
    alpha: float
    gamma: float
    accuracies: List[Optional[float]] = field(default_factory=list)
    tp: int = 0
    fp: int = 0
    skipped: int = 0
    unmatched: int = 0

    @property
    def defined(self) -> List[float]:
        return [a for a in self.accuracies if a is not None]

    @property
    def accuracy(self) -> Optional[float]:
        vals = self.defined
        return statistics.fmean(vals) if vals else None

    @property
    def accuracy_sd(self) -> Optional[float]:
        vals = self.defined
        if not vals:
            return None
        return statistics.stdev(vals) if len(vals) > 1 else 0.0

    def format_accuracy(self) -> str:
        if self.accuracy is None:
            return "- (-)"
        return f"{100 * self.accuracy:.2f}% ({self.accuracy_sd:.3f})"


def stratified_folds(d: BinaryDataset, folds: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Split record indices into ``folds`` parts, stratified on (W, Y)."""
    cell = d.w.astype(np.int64) * 2 + d.y
    parts: List[List[np.ndarray]] = [[] for _ in range(folds)]
    offset = 0
    for c in range(4):
        idx = rng.permutation(np.flatnonzero(cell == c))
        # rotate the starting fold so odd-sized strata do not all favour fold 0
        for k in range(folds):
            parts[(k + offset) % folds].append(idx[k::folds])
        offset += len(idx) % folds
    return [np.sort(np.concatenate(p)) for p in parts]


def _score(pats: Sequence[Pattern], test: BinaryDataset) -> Tuple[int, int, int, int]:
    tp = fp = skipped = unmatched = 0
    for p in pats:
        if not p.sign.is_signed:
            continue
        mask = literal_mask(p, test)
        if not mask.any():
            unmatched += 1
            continue
        t = CrossTable.from_arrays(test.w[mask], test.y[mask])
        if t.n1 == 0 or t.n0 == 0:
            skipped += 1
            continue
        diff = t.p1 - t.p0
        agrees = diff > 0 if p.sign is Sign.POSITIVE else diff < 0
        if agrees:
            tp += 1
        else:
            fp += 1
    return tp, fp, skipped, unmatched


def _one_run(d: BinaryDataset, cfg: RunConfig, folds: int, seed_seq: np.random.SeedSequence):
    rng = np.random.default_rng(seed_seq)
    parts = stratified_folds(d, folds, rng)
    totals = np.zeros(4, dtype=np.int64)
    for k in range(folds):
        train_idx = np.sort(np.concatenate([parts[j] for j in range(folds) if j != k]))
        result = discover(d.subset(train_idx), cfg)
        totals += _score(result.patterns, d.subset(parts[k]))
    return tuple(int(x) for x in totals)


def cross_validate(
    d: BinaryDataset, cfg: RunConfig = RunConfig(), folds: int = 2, runs: Optional[int] = None
) -> CvReport:
    """Repeated k-fold validation of discovered pattern signs.

    In every repetition patterns are learned on the training part; each
    signed pattern is then checked on the held-out part, where the records
    agreeing with its literal values are split into treated and untreated
    groups and the difference of their mean outcomes serves as ground truth.
    A difference of exactly zero counts against the pattern.
    """
    runs = cfg.runs if runs is None else runs
    seeds = np.random.SeedSequence(cfg.seed).spawn(runs)
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(_one_run, [d] * runs, [cfg] * runs, [folds] * runs, seeds))
    else:
        outcomes = [_one_run(d, cfg, folds, s) for s in seeds]
    report = CvReport(runs, folds, cfg.seed, cfg.alpha, cfg.gamma)
    for tp, fp, skipped, unmatched in outcomes:
        report.tp += tp
        report.fp += fp
        report.skipped += skipped
        report.unmatched += unmatched
        report.accuracies.append(tp / (tp + fp) if tp + fp else None)
    return report


@dataclass
class SweepRow:
    alpha: float
    gamma: float
    report: CvReport


def parameter_sweep(
    d: BinaryDataset,
    alphas: Sequence[float],
    gammas: Sequence[float],
    cfg: RunConfig = RunConfig(),
    folds: int = 2,
) -> List[SweepRow]:
    if not alphas or not gammas:
        raise ValueError("parameter grids must be non-empty")
    rows = []
    for a in alphas:
        for g in gammas:
            rows.append(SweepRow(a, g, cross_validate(d, replace(cfg, alpha=a, gamma=g), folds)))
    return rows


def format_sweep(rows: Sequence[SweepRow]) -> str:
    lines = [f"{'alpha':>7} {'gamma':>6}  accuracy"]
    for r in rows:
        lines.append(f"{r.alpha:>7g} {100 * r.gamma:>5.0f}%  {r.report.format_accuracy()}")
    return "\n".join(lines) + "\n"
