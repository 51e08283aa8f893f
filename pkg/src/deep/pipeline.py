"""End-to-end discovery: structure, initial patterns, generalisation."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from .dataset import BinaryDataset
from .generalise import GeneraliseConfig, run_generalisation
from .patterns import Pattern, initialise_patterns
from .stats import CITestConfig, SignTestConfig, bonferroni_gamma
from .structure import DEFAULT_MAX_COND_SIZE, StructureResult, learn_structure, structure_from_names

__all__ = ["RunConfig", "DiscoveryResult", "discover"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one discovery run.

    ``adjustment`` and ``parent_only`` bypass structure learning when either
    is given (names of Z and C supplied by the user).
    """

    input: Optional[str] = None
    treatment: str = "W"
    outcome: str = "Y"
    alpha: float = 0.01
    gamma: float = 0.95
    theta: float = 1.0
    max_merges: Optional[int] = None
    seed: int = 0
    bonferroni: bool = False
    out_dir: str = "deep-out"
    jobs: int = 1
    max_cond_size: Optional[int] = DEFAULT_MAX_COND_SIZE
    adjustment: Optional[Sequence[str]] = None
    parent_only: Optional[Sequence[str]] = None
    runs: int = 20

    @property
    def ci_config(self) -> CITestConfig:
        return CITestConfig(alpha=self.alpha)


@dataclass
class DiscoveryResult:
    structure: StructureResult
    initial: List[Pattern]
    patterns: List[Pattern]
    sign_config: SignTestConfig
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def signed(self) -> List[Pattern]:
        return [p for p in self.patterns if p.sign.is_signed]


def discover(d: BinaryDataset, cfg: RunConfig = RunConfig()) -> DiscoveryResult:
    timings = {}
    t0 = time.perf_counter()
    ci = cfg.ci_config
    if cfg.adjustment is not None or cfg.parent_only is not None:
        s = structure_from_names(d, cfg.adjustment or (), cfg.parent_only or ())
    else:
        if cfg.bonferroni:
            ci = CITestConfig(alpha=cfg.alpha / max(len(d.covariates), 1))
        s = learn_structure(d, ci, cfg.max_cond_size)
    t1 = time.perf_counter()
    timings["structure"] = t1 - t0

    gamma = cfg.gamma
    if cfg.bonferroni:
        # one sign test per possible initial pattern
        gamma = bonferroni_gamma(cfg.gamma, 2 ** len(s.parents_of_y))
    sign_cfg = SignTestConfig(gamma)
    initial = initialise_patterns(d, s, sign_cfg)
    t2 = time.perf_counter()
    timings["initialise"] = t2 - t1

    gcfg = GeneraliseConfig(cfg.theta, cfg.max_merges, gamma)
    final = run_generalisation(initial, s, gcfg)
    timings["generalise"] = time.perf_counter() - t2
    log.info(
        "discovered %d patterns (%d signed) from %d initial",
        len(final), sum(p.sign.is_signed for p in final), len(initial),
    )
    return DiscoveryResult(s, initial, final, sign_cfg, timings)
