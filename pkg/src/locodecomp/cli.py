"""Command-line interface.

Subcommands:
    analyze   global decomposition of every feature
    local     per-pattern score maps on top of the global run
    uthresh   retention sweep over one driver's unique scores
    synth     draw a synthetic benchmark table with known targets
    oracle    compare greedy search against exhaustive enumeration

Exit codes: 0 success, 1 configuration problems, 2 unusable input data,
3 numeric failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from ._version import __version__
from .config import load_run_config
from .dataset import write_raw_csv
from .decompose import decompose_feature
from .errors import ConfigError, DataError, NumericError
from .oracle import exhaustive_minmax
from .regress import LocoEvaluator
from .report import load_standardized, run_global, run_local, run_threshold
from .synth import FAMILIES, SyntheticSpec, generate


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="locodecomp",
        description="Unique / redundant / synergistic decomposition of LOCO feature importance.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_args(p):
        p.add_argument("--config", required=True, help="path to a key = value config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--workers", type=int, help="override the worker count")
        p.add_argument("--outdir", help="override the output directory")
        p.add_argument(
            "--no-figures", action="store_true", help="skip figure rendering"
        )

    p_analyze = sub.add_parser("analyze", help="global decomposition run")
    add_run_args(p_analyze)

    p_local = sub.add_parser("local", help="per-pattern score maps")
    add_run_args(p_local)

    p_thresh = sub.add_parser("uthresh", help="unique-score retention sweep")
    add_run_args(p_thresh)
    p_thresh.add_argument("--feature", required=True, help="driver feature name")
    p_thresh.add_argument(
        "--discard",
        help="comma-separated discard percentages (default 0,5,...,80)",
    )

    p_synth = sub.add_parser("synth", help="generate a synthetic table")
    p_synth.add_argument("--family", required=True, choices=FAMILIES)
    p_synth.add_argument("--n", type=int, default=10000, help="number of rows")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--noise", type=float, help="family noise level")
    p_synth.add_argument("--features", type=int, help="feature count where applicable")
    p_synth.add_argument("--betas", help="comma-separated coefficients")
    p_synth.add_argument("--rho", type=float, default=0.6, help="pair correlation")
    p_synth.add_argument("--out", required=True, help="CSV path to write")

    p_oracle = sub.add_parser("oracle", help="greedy vs exhaustive comparison")
    add_run_args(p_oracle)
    p_oracle.add_argument("--feature", help="restrict to one driver feature")
    p_oracle.add_argument(
        "--max-features", type=int, default=16, help="enumeration feature limit"
    )
    return parser


def _parse_discard(text: str | None):
    if text is None:
        return None
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"--discard must be comma-separated numbers, got '{text}'") from None


def _cmd_synth(args) -> int:
    betas = None
    if args.betas:
        try:
            betas = tuple(float(b) for b in args.betas.split(","))
        except ValueError:
            raise ConfigError(f"--betas must be comma-separated numbers, got '{args.betas}'")
    try:
        spec = SyntheticSpec(
            family=args.family,
            n=args.n,
            seed=args.seed,
            noise=args.noise,
            n_features=args.features,
            betas=betas,
            rho=args.rho,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    table, targets = generate(spec)
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    write_raw_csv(table, out)
    targets_path = out.with_name(out.stem + "_targets.json")
    with open(targets_path, "w", encoding="utf-8") as fh:
        json.dump([t.to_dict() for t in targets], fh, indent=2)
        fh.write("\n")
    print(f"wrote {out} ({table.n_rows} rows, {table.n_features} features)")
    print(f"wrote {targets_path}")
    return 0


def _cmd_oracle(args) -> int:
    config = load_run_config(
        args.config, seed=args.seed, workers=args.workers, outdir=args.outdir
    )
    dataset, _ = load_standardized(config)
    evaluator = LocoEvaluator(dataset, config.eval_scheme())
    if args.feature:
        drivers = [dataset.feature_index(args.feature)]
    else:
        drivers = list(range(dataset.n_features))
    surrogate = config.surrogate_config()

    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rows = []
    all_match = True
    for d in drivers:
        truth = exhaustive_minmax(
            dataset, d, evaluator=evaluator, max_features=args.max_features
        )
        dec = decompose_feature(dataset, d, surrogate, evaluator=evaluator)
        match_min = dec.path_min.subset == truth.subset_min
        match_max = dec.path_max.subset == truth.subset_max
        all_match = all_match and match_min and match_max
        name = dataset.feature_names[d]
        rows.append(
            [
                name,
                repr(truth.loco_min),
                repr(dec.loco_min),
                " ".join(dataset.feature_names[j] for j in truth.subset_min),
                " ".join(dataset.feature_names[j] for j in dec.path_min.subset),
                str(match_min),
                repr(truth.loco_max),
                repr(dec.loco_max),
                " ".join(dataset.feature_names[j] for j in truth.subset_max),
                " ".join(dataset.feature_names[j] for j in dec.path_max.subset),
                str(match_max),
            ]
        )
        print(
            f"{name}: min {'MATCH' if match_min else 'DIFFER'}"
            f" max {'MATCH' if match_max else 'DIFFER'}"
        )

    with open(outdir / "oracle_check.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            [
                "feature",
                "loco_min_exhaustive",
                "loco_min_greedy",
                "subset_min_exhaustive",
                "subset_min_greedy",
                "match_min",
                "loco_max_exhaustive",
                "loco_max_greedy",
                "subset_max_exhaustive",
                "subset_max_greedy",
                "match_max",
            ]
        )
        writer.writerows(rows)
    print(f"wrote {outdir / 'oracle_check.csv'}")
    print("all subsets match" if all_match else "some subsets differ")
    return 0


def _dispatch(args) -> int:
    if args.command == "synth":
        return _cmd_synth(args)
    if args.command == "oracle":
        return _cmd_oracle(args)

    config = load_run_config(
        args.config, seed=args.seed, workers=args.workers, outdir=args.outdir
    )
    figures = not args.no_figures
    if args.command == "analyze":
        report = run_global(config, figures=figures)
    elif args.command == "local":
        report = run_local(config, figures=figures)
    else:
        report = run_threshold(
            config, args.feature, _parse_discard(args.discard), figures=figures
        )
    for name in sorted(report["files"].values()):
        print(f"wrote {Path(config.outdir) / name}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
