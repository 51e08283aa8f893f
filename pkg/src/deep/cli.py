"""Command-line front end: ``deep discover|validate|match|simulate|sweep``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import fields
from pathlib import Path
from typing import List, Optional, Sequence

from .dataset import DataError, load_csv, write_csv
from .decision import recommend_csv
from .evaluation import Homogeneity, coverage, cross_validate, format_sweep, homogeneity, parameter_sweep
from .patterns import read_patterns, write_patterns
from .pipeline import RunConfig, discover
from .simgen import DagError, builtin_dag, load_dag, oracle_structure, sample, subgroup_oracle_table

log = logging.getLogger("deep")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DAG = 4

_CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def _names(text: Optional[str]) -> Optional[List[str]]:
    if text is None:
        return None
    return [t.strip() for t in text.split(",") if t.strip()]


def _floats(text: str) -> List[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON file with run settings; flags take precedence")
    p.add_argument("--input", default=S, help="CSV data file")
    p.add_argument("--treatment", default=S, help="treatment column (default W)")
    p.add_argument("--outcome", default=S, help="outcome column (default Y)")
    p.add_argument("--alpha", type=float, default=S, help="CI test significance level (default 0.01)")
    p.add_argument("--gamma", type=float, default=S, help="sign test confidence level (default 0.95)")
    p.add_argument("--theta", type=float, default=S, help="correlation threshold for merging (default 1.0)")
    p.add_argument("--max-merges", dest="max_merges", type=int, default=S, help="stop after k merges")
    p.add_argument("--seed", type=int, default=S, help="random seed (default 0)")
    p.add_argument("--bonferroni", action="store_true", default=S, help="Bonferroni-adjust the tests")
    p.add_argument("--out-dir", dest="out_dir", default=S, help="output directory (default deep-out)")
    p.add_argument("--jobs", type=int, default=S, help="parallel CV repetitions (default 1)")
    p.add_argument("--max-cond-size", dest="max_cond_size", type=int, default=S,
                   help="largest conditioning set in parent search (default 3)")
    p.add_argument("--adjustment", type=_names, default=S,
                   help="comma-separated adjustment set; skips structure learning")
    p.add_argument("--parent-only", dest="parent_only", type=_names, default=S,
                   help="comma-separated Y-parent-only set; skips structure learning")
    p.add_argument("--runs", type=int, default=S, help="CV repetitions (default 20)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deep", description=__doc__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discover", help="discover treatment effect patterns")
    _common(p)

    p = sub.add_parser("validate", help="cross-validation, homogeneity and coverage reports")
    _common(p)

    p = sub.add_parser("sweep", help="cross-validation over an alpha x gamma grid")
    _common(p)
    p.add_argument("--alphas", type=_floats, default=[0.05, 0.01, 0.005])
    p.add_argument("--gammas", type=_floats, default=[0.90, 0.95, 0.99])

    p = sub.add_parser("match", help="recommendations for a CSV of individuals")
    _common(p)
    p.add_argument("--patterns", default=None, help="pattern file (default OUT_DIR/patterns.csv)")

    p = sub.add_parser("simulate", help="sample data from a DAG file with its CATE oracle")
    p.add_argument("--dag", required=True, help="DAG file, or the name of a built-in fixture")
    p.add_argument("--n", type=int, required=True, help="number of records")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", dest="out_dir", default="deep-out")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    values = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            raw = json.load(fh)
        for key, val in raw.items():
            key = key.replace("-", "_")
            if key not in _CONFIG_KEYS:
                raise DataError(f"{args.config}: unknown setting {key!r}")
            values[key] = val
    for key in _CONFIG_KEYS:
        if key in vars(args):
            values[key] = getattr(args, key)
    return RunConfig(**values)


def _load(cfg: RunConfig):
    if not cfg.input:
        raise DataError("--input is required")
    return load_csv(cfg.input, cfg.treatment, cfg.outcome)


def _write_structure(path: Path, result, d) -> None:
    info = result.structure.to_dict(d)
    info["sign_test_gamma"] = result.sign_config.gamma
    info["z_critical"] = result.sign_config.z_critical
    path.write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")


def cmd_discover(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    d = _load(cfg)
    load_time = time.perf_counter() - t0
    result = discover(d, cfg)
    names = [d.variables[i] for i in result.structure.parents_of_y]
    write_patterns(out / "patterns.csv", result.patterns, names)
    _write_structure(out / "structure.json", result, d)
    with open(out / "run.log", "w") as fh:
        fh.write(f"input {cfg.input}\nrecords {d.n}\nvariables {len(d.variables)}\n")
        fh.write(f"alpha {cfg.alpha}\ngamma {cfg.gamma}\ntheta {cfg.theta}\nseed {cfg.seed}\n")
        fh.write(f"time_load_s {load_time:.6f}\n")
        for phase, secs in result.timings.items():
            fh.write(f"time_{phase}_s {secs:.6f}\n")
    if not result.signed:
        log.warning("no significant treatment effect pattern found")
    print(f"{len(result.patterns)} patterns ({len(result.signed)} signed) written to {out / 'patterns.csv'}")
    return EXIT_OK


def _cv_csv(path: Path, rep) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["run", "accuracy", "seed", "alpha", "gamma"])
        for i, acc in enumerate(rep.accuracies):
            out.writerow([i, "" if acc is None else f"{acc:.6f}", rep.seed, rep.alpha, rep.gamma])


def cmd_validate(cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    d = _load(cfg)
    rep = cross_validate(d, cfg)
    result = discover(d, cfg)
    homo = homogeneity(result.patterns, d, result.sign_config)
    cov = coverage(result.patterns, d)
    _cv_csv(out / "cv_report.csv", rep)
    names = [d.variables[i] for i in result.structure.parents_of_y]
    with open(out / "homogeneity.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["sign", "label", "sub_signs"])
        for p, label, subs in zip(homo.patterns, homo.labels, homo.sub_signs):
            w.writerow([v.symbol for v in p.values] + [p.sign.value, label.value, "".join(s.value for s in subs)])
    frac = homo.fractions
    summary = [
        f"seed {cfg.seed}",
        f"alpha {cfg.alpha}",
        f"gamma {cfg.gamma}",
        f"runs {rep.runs} x {rep.folds}-fold",
        f"accuracy {rep.format_accuracy()}",
        f"tp {rep.tp}",
        f"fp {rep.fp}",
        f"skipped_empty_arm {rep.skipped}",
        f"unmatched {rep.unmatched}",
        f"patterns {len(result.patterns)}",
        f"signed_patterns {len(result.signed)}",
        f"coverage {cov:.6f}",
    ] + [f"{h.value} {frac[h]:.6f}" for h in Homogeneity]
    text = "\n".join(summary) + "\n"
    (out / "cv_summary.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, alphas: Sequence[float], gammas: Sequence[float]) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    d = _load(cfg)
    rows = parameter_sweep(d, alphas, gammas, cfg)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "gamma", "accuracy", "sd", "tp", "fp", "seed"])
        for r in rows:
            acc, sd = r.report.accuracy, r.report.accuracy_sd
            w.writerow([r.alpha, r.gamma, "" if acc is None else f"{acc:.6f}",
                        "" if sd is None else f"{sd:.6f}", r.report.tp, r.report.fp, cfg.seed])
    text = f"seed {cfg.seed}\n" + format_sweep(rows)
    (out / "sweep.txt").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_match(cfg: RunConfig, patterns_path: Optional[str]) -> int:
    out = Path(cfg.out_dir)
    path = patterns_path or str(out / "patterns.csv")
    if not os.path.isfile(path):
        raise DataError(f"pattern file not found: {path}")
    if not cfg.input:
        raise DataError("--input (individuals CSV) is required")
    names, pats = read_patterns(path)
    out.mkdir(parents=True, exist_ok=True)
    n = recommend_csv(cfg.input, pats, names, out / "recommendations.csv")
    print(f"{n} recommendations written to {out / 'recommendations.csv'}")
    return EXIT_OK


def cmd_simulate(dag_ref: str, n: int, seed: int, out_dir: str) -> int:
    dag = load_dag(dag_ref) if os.path.exists(dag_ref) else builtin_dag(dag_ref)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(sample(dag, n, seed), out / "data.csv")
    pa = oracle_structure(dag)[0]
    with open(out / "oracle_cate.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(pa) + ["exact_cate"])
        for sub, value in subgroup_oracle_table(dag):
            w.writerow([sub[v] for v in pa] + [f"{value:.10f}"])
    print(f"{n} records written to {out / 'data.csv'}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        if args.command == "simulate":
            return cmd_simulate(args.dag, args.n, args.seed, args.out_dir)
        cfg = resolve_config(args)
        if args.command == "discover":
            return cmd_discover(cfg)
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.alphas, args.gammas)
        return cmd_match(cfg, args.patterns)
    except DagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DAG
    except (DataError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
