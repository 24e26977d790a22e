"""Command-line front end.

Exit codes: 0 = SCAR not rejected / check passed, 1 = SCAR rejected / check
failed, 2 = usage or input error. Reports go to stdout as ``key: value`` lines;
progress and errors go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import Art1Config, Art2Config, DataError, gen_art1, gen_art2, load_csv, write_csv, write_oracle_csv
from .divergence import StatisticKind
from .harness import DESK_REPS, FULL_REPS, GridConfigError, grid_csv, load_grid, run_grid
from .labeling import CalibrationError, EmptyLabeledSetError, apply_labeling, build_strategy
from .procedure import DEFAULT_ALPHA, DEFAULT_B, PriorTooSmallError, ResampleError, run_test
from .theory import (
    ConcomitantConfig,
    check_ranking_equivalence,
    dominance_gap,
    positive_count_ceiling,
    simulate_concomitant_precision,
    simulate_super_uniformity,
)

EXIT_OK, EXIT_REJECT, EXIT_ERROR = 0, 1, 2
# max F(z) - z still counted as sampling noise
DOMINANCE_TOLERANCE = 0.005
INPUT_ERRORS = (DataError, FileNotFoundError, PriorTooSmallError, ResampleError, CalibrationError,
                EmptyLabeledSetError, GridConfigError, ValueError)


def _report(pairs) -> None:
    for key, value in pairs:
        if isinstance(value, float):
            value = repr(value)
        print(f"{key}: {value}")


def _probability(text: str) -> float:
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"seed must be non-negative, got {text}")
    return value


def _statistic(text: str) -> StatisticKind:
    try:
        return StatisticKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_test(args) -> int:
    data = load_csv(args.csv, label_column=args.label_col)
    res = run_test(data, args.prior, args.stat, B=args.B, alpha=args.alpha, seed=args.seed,
                   exact=args.exact_pvalue)
    decision = "SCAR rejected: consider SAR methods" if res.reject else "SCAR not rejected"
    rec = res.record()
    _report([(k, rec[k]) for k in ("statistic", "t0", "p_value", "B", "alpha", "k", "c_hat",
                                   "positive_set_size", "seed")] + [("decision", decision)])
    if args.out:
        Path(args.out).write_text(res.to_json(include_null=args.dump_null) + "\n", encoding="utf-8")
    return EXIT_REJECT if res.reject else EXIT_OK


def cmd_simulate(args) -> int:
    if args.generator == "art1":
        ds = gen_art1(Art1Config(n=args.n, d=args.d, seed=args.seed, prior=args.prior))
    else:
        ds = gen_art2(Art2Config(n=args.n, d=args.d, seed=args.seed, prior=args.prior))
    c = None if args.uncalibrated else args.c
    strategy = build_strategy(args.strategy, ds, c=c, g=args.g)
    labeled = apply_labeling(ds, strategy, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(labeled.to_pu(), out / "pu.csv")
    write_oracle_csv(labeled, out / "oracle.csv")
    (out / "strategy.txt").write_text(strategy.to_text(), encoding="utf-8")
    pos = labeled.y == 1
    lines = [
        ("generator", args.generator),
        ("strategy", strategy.kind),
        ("n", ds.n),
        ("positives", int(pos.sum())),
        ("labeled", int(labeled.s.sum())),
        ("realized_prior", float(pos.mean())),
        ("realized_label_frequency", float(labeled.s[pos].mean())),
        ("mean_propensity", float(np.mean(strategy.evaluate(ds.features[pos])))),
    ]
    if strategy.a is not None:
        lines.append(("intercept", strategy.a))
    lines.append(("output", str(out)))
    _report(lines)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    reps, B = args.reps, args.B
    if args.profile == "full":
        reps, B = FULL_REPS, DEFAULT_B
    cfgs = load_grid(args.config, reps=reps, B=B)
    rows = run_grid(cfgs, n_jobs=args.jobs, record_time=args.timing)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "grid.csv"
    path.write_text(grid_csv(rows), encoding="utf-8")
    failed = sum(1 for r in rows if r.error)
    _report([("cells", len(cfgs)), ("rows", len(rows)), ("failed_rows", failed), ("output", str(path))])
    return EXIT_OK


def cmd_verify_theory(args) -> int:
    if args.check == "lemma1":
        rep = check_ranking_equivalence(pairs=args.pairs, seed=args.seed)
        _report([("check", "lemma1"), ("pairs", rep.pairs), ("violations", rep.violations),
                 ("vectors", rep.vectors), ("ranking_mismatches", rep.ranking_mismatches),
                 ("verdict", "pass" if rep.holds else "fail")])
        return EXIT_OK if rep.holds else EXIT_REJECT
    if args.check == "thm3":
        cfg = ConcomitantConfig(prior=args.prior, c=args.c, n=args.n or 100)
        res = simulate_concomitant_precision(cfg, d=args.d, b=args.shift, reps=args.reps or 2000,
                                             seed=args.seed, k=args.k)
        gap = dominance_gap(cfg, d=args.d, b=args.shift, seed=args.seed)
        verdict = "pass" if res.holds else "fail"
        if not res.holds and gap > DOMINANCE_TOLERANCE:
            verdict += " (dominance condition violated; the bound does not apply)"
        _report([("check", "thm3"), ("k", res.k), ("m", res.m), ("bound", round(res.bound, 3)),
                 ("estimate", res.estimate), ("se", res.se), ("reps", res.reps),
                 ("dominance_gap", gap), ("positive_count_ceiling", positive_count_ceiling(cfg, res.k)),
                 ("verdict", verdict)])
        return EXIT_OK if res.holds else EXIT_REJECT
    rep = simulate_super_uniformity(n=args.n or 1000, d=args.d, c=args.c, kind=args.stat, B=args.B,
                                    reps=args.reps or 500, seed=args.seed)
    lines = [("check", "thm1"), ("statistic", rep.kind.label), ("reps", rep.reps), ("B", rep.B)]
    for row in rep.rows():
        lines.append((f"P(p<{row['t']})", f"{row['rejection']:.4f} limit {row['limit']:.4f} "
                                          f"{'ok' if row['ok'] else 'FAIL'}"))
    lines.append(("rank_uniformity_pvalue", rep.rank_uniformity_pvalue()))
    lines.append(("verdict", "pass" if rep.holds else "fail"))
    _report(lines)
    return EXIT_OK if rep.holds else EXIT_REJECT


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scartest", description="Test the SCAR assumption on PU data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="run the SCAR test on a PU csv file")
    p.add_argument("csv")
    p.add_argument("--label-col", default="s", help="name of the 0/1 label column (default: s)")
    p.add_argument("--prior", type=_probability, required=True, help="class prior P(Y=1)")
    p.add_argument("--stat", type=_statistic, default=StatisticKind.KS, help="kl, klcov, ks or nbauc")
    p.add_argument("--B", type=_positive_int, default=DEFAULT_B, help="null resamples (default: 300)")
    p.add_argument("--alpha", type=_probability, default=DEFAULT_ALPHA)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", help="write a JSON result record here")
    p.add_argument("--dump-null", action="store_true", help="include the null samples in --out")
    p.add_argument("--exact-pvalue", action="store_true", help="use (count + 1) / (B + 1)")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="write synthetic PU data")
    p.add_argument("--generator", choices=("art1", "art2"), default="art1")
    p.add_argument("--n", type=_positive_int, default=1000)
    p.add_argument("--d", type=_positive_int, default=2)
    p.add_argument("--prior", type=_probability, default=0.5, help="class prior of the generator")
    p.add_argument("--strategy", choices=("s0", "s1", "s2", "s3"), default="s0", type=str.lower)
    p.add_argument("--c", type=_probability, default=0.5, help="target label frequency")
    p.add_argument("--g", type=float, default=0.0, help="deviation from SCAR (S1-S3)")
    p.add_argument("--uncalibrated", action="store_true",
                   help="S1 only: use sigmoid(g * x1) without an intercept")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", help="run a grid of Monte Carlo experiments")
    p.add_argument("--config", required=True, help="YAML grid file")
    p.add_argument("--reps", type=_positive_int, default=None,
                   help=f"override replicates per cell (file value, else {DESK_REPS})")
    p.add_argument("--B", type=_positive_int, default=None, help="override null resamples")
    p.add_argument("--profile", choices=("desk", "full"), default="desk",
                   help=f"full: reps={FULL_REPS}, B={DEFAULT_B}")
    p.add_argument("--jobs", type=int, default=1, help="parallel replicate workers")
    p.add_argument("--timing", action="store_true",
                   help="fill the wall_time column (makes the output run-dependent)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("verify-theory", help="numerical checks of the ranking and p-value results")
    p.add_argument("--check", choices=("lemma1", "thm1", "thm3"), required=True)
    p.add_argument("--reps", type=_positive_int, default=None)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--pairs", type=_positive_int, default=10**6, help="lemma1: random (y, c) pairs")
    p.add_argument("--prior", type=_probability, default=0.2, help="thm3: class prior")
    p.add_argument("--c", type=_probability, default=None, help="label frequency (thm3: 0.8, thm1: 0.5)")
    p.add_argument("--n", type=_positive_int, default=None, help="thm3: 100, thm1: 1000")
    p.add_argument("--d", type=_positive_int, default=2)
    p.add_argument("--shift", type=float, default=3.0, help="thm3: positive-class mean per coordinate")
    p.add_argument("--k", type=_positive_int, default=None,
                   help="thm3: number of top-ranked rows (default: n * prior * (1 - c))")
    p.add_argument("--stat", type=_statistic, default=StatisticKind.KS, help="thm1 statistic")
    p.add_argument("--B", type=_positive_int, default=DEFAULT_B, help="thm1 null resamples")
    p.set_defaults(func=cmd_verify_theory)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "verify-theory" and args.c is None:
        args.c = 0.8 if args.check == "thm3" else 0.5
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
