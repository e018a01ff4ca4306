"""Command-line interface.

Subcommands: ingest, synth, featurize, train, eval, sweep, quadrant,
durations. Exit codes: 0 success, 1 validation/data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import featurize, forest, logistic, matchdata
from .errors import UnknownFeature, WinPredError
from .evaluation import (
    WORKERS_ENV_VAR,
    EvalReport,
    evaluate,
    format_sweep_markdown,
    format_sweep_table_csv,
    parse_grid,
    quadrant_stats,
    run_config_from_dict,
    sweep,
    train_model,
    write_quadrant_points,
    write_reports_csv,
)


class _UsageError(Exception):
    pass


def _add_data_flags(parser: argparse.ArgumentParser, metrics_required: bool = False) -> None:
    parser.add_argument("--matches", required=True, help="matches CSV path")
    parser.add_argument("--metrics", required=metrics_required, help="metrics CSV path")
    parser.add_argument("--roster-size", type=int, default=matchdata.DEFAULT_ROSTER_SIZE)


def _add_run_flags(parser: argparse.ArgumentParser, with_split: bool) -> None:
    parser.add_argument("--rep", choices=("hero", "ingame"), default="ingame")
    parser.add_argument("--t", type=int, default=20, help="window end minute (ingame)")
    parser.add_argument("--learner", choices=("lr", "rf"), default="lr")
    parser.add_argument("--selection", choices=("all", "single", "cfs", "wrapper"), default="all")
    parser.add_argument("--single-feature", default=None,
                        help="feature name for --selection single")
    parser.add_argument("--include-timestamps", action="store_true")
    parser.add_argument("--ridge", type=float, default=None)
    parser.add_argument("--max-iterations", type=int, default=None)
    parser.add_argument("--tolerance", type=float, default=None)
    parser.add_argument("--standardize", choices=("auto", "true", "false"), default="auto")
    parser.add_argument("--trees", type=int, default=None)
    parser.add_argument("--features-per-split", type=int, default=None)
    parser.add_argument("--max-depth", type=int, default=None)
    parser.add_argument("--min-leaf", type=int, default=None)
    parser.add_argument("--seed", type=int, default=0, help="random forest seed")
    parser.add_argument("--folds", type=int, default=None)
    parser.add_argument("--selection-seed", type=int, default=None)
    parser.add_argument("--stale-limit", type=int, default=None)
    if with_split:
        parser.add_argument("--split", choices=("chronological", "tournament"),
                            default="chronological")
        parser.add_argument("--train-fraction", type=float, default=None)
        parser.add_argument("--tournament", default=None)


def _run_pairs(args, run_id: str, with_split: bool) -> dict[str, str]:
    pairs = {"id": run_id, "representation": args.rep, "t": str(args.t),
             "learner": args.learner, "selection": args.selection,
             "standardize": args.standardize}
    if args.include_timestamps:
        pairs["include_timestamps"] = "true"
    optional = {
        "single_feature": args.single_feature,
        "ridge": args.ridge, "max_iterations": args.max_iterations,
        "tolerance": args.tolerance,
        "trees": args.trees, "features_per_split": args.features_per_split,
        "max_depth": args.max_depth, "min_leaf": args.min_leaf,
        "folds": args.folds, "selection_seed": args.selection_seed,
        "stale_limit": args.stale_limit,
    }
    pairs["seed"] = str(args.seed)
    if with_split:
        pairs["split"] = args.split
        optional["train_fraction"] = args.train_fraction
        optional["tournament"] = args.tournament
    for key, value in optional.items():
        if value is not None:
            pairs[key] = str(value)
    return pairs


def _load_dataset(args) -> matchdata.MatchDataset:
    matches = matchdata.load_matches(args.matches, args.roster_size)
    if getattr(args, "metrics", None):
        return matchdata.load_metrics(args.metrics, matches, args.roster_size)
    return matchdata.MatchDataset(matches=matches, metrics={}, roster_size=args.roster_size)


def _require_metrics(args, why: str) -> None:
    if not getattr(args, "metrics", None):
        raise _UsageError(f"--metrics: required for {why}")


def cmd_synth(args) -> int:
    config = matchdata.SynthConfig(
        n_matches=args.n,
        roster_size=args.roster_size,
        mean_duration_minutes=args.mean_duration,
        kill_signal_strength=args.signal,
        radiant_bias=args.radiant_bias,
        seed=args.seed,
    )
    dataset = matchdata.synthesize(config)
    matchdata.write_matches(dataset.matches, args.out_matches)
    matchdata.write_metrics(dataset, args.out_metrics)
    samples = sum(len(v) for v in dataset.metrics.values())
    print(f"wrote {len(dataset.matches)} matches to {args.out_matches}, "
          f"{samples} metric samples to {args.out_metrics}")
    return 0


def cmd_ingest(args) -> int:
    matches = matchdata.load_matches(args.matches, args.roster_size)
    print(f"{args.matches}: {len(matches)} matches OK")
    if args.metrics:
        dataset = matchdata.load_metrics(args.metrics, matches, args.roster_size)
        samples = sum(len(v) for v in dataset.metrics.values())
        print(f"{args.metrics}: {samples} metric samples OK")
    return 0


def cmd_featurize(args) -> int:
    if args.rep == "hero":
        matches = matchdata.load_matches(args.matches, args.roster_size)
        vectors = featurize.build_hero_dataset(matches, args.roster_size)
        featurize.write_hero_vectors(vectors, args.roster_size, args.out)
        print(f"wrote {len(vectors)} hero vectors to {args.out}")
        return 0
    _require_metrics(args, "the ingame representation")
    dataset = _load_dataset(args)
    build = featurize.build_window_dataset(dataset, args.t)
    featurize.write_window_vectors(build, args.out)
    print(f"wrote {len(build.vectors)} window vectors (t={args.t}) to {args.out}; "
          f"skipped {build.skipped} short matches")
    return 0


def cmd_train(args) -> int:
    if args.rep == "ingame":
        _require_metrics(args, "the ingame representation")
    dataset = _load_dataset(args)
    run = run_config_from_dict(_run_pairs(args, "train", with_split=False), "train")
    try:
        model, selected, skipped = train_model(run, dataset)
    except UnknownFeature as exc:
        raise _UsageError(f"--single-feature: {exc}") from None
    if run.learner == "lr":
        logistic.save_lr(model, args.model_out)
    else:
        forest.save_rf(model, args.model_out)
    print(f"trained {run.learner} on {len(dataset.matches)} matches "
          f"({skipped} skipped); {len(selected)} features; saved to {args.model_out}")
    return 0


def _print_report(report: EvalReport) -> None:
    run = report.run
    print(f"run {run.run_id}: {run.representation_label} {run.learner} "
          f"{run.selection_label} {run.split.label}")
    print(f"  accuracy {report.accuracy:.6f} "
          f"(tp={report.tp} tn={report.tn} fp={report.fp} fn={report.fn})")
    print(f"  train {report.train_size}, test {report.test_size}, skipped {report.skipped}, "
          f"{report.wall_time:.2f}s")
    if report.selected_features and len(report.selected_features) <= 20:
        print("  features: " + ", ".join(report.selected_features))
    else:
        print(f"  features: {len(report.selected_features)}")


def cmd_eval(args) -> int:
    if args.rep == "ingame":
        _require_metrics(args, "the ingame representation")
    dataset = _load_dataset(args)
    run = run_config_from_dict(_run_pairs(args, "eval", with_split=True), "eval")
    try:
        report = evaluate(run, dataset)
    except UnknownFeature as exc:
        raise _UsageError(f"--single-feature: {exc}") from None
    _print_report(report)
    if args.report_out:
        write_reports_csv([report], args.report_out)
    return 0


def cmd_sweep(args) -> int:
    grid_text = Path(args.grid).read_text(encoding="utf-8")
    runs = parse_grid(grid_text)
    if any(run.representation == "ingame" for run in runs):
        _require_metrics(args, "grids with ingame runs")
    dataset = _load_dataset(args)
    reports = sweep(runs, dataset, workers=args.workers)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_reports_csv(reports, out_dir / "reports.csv")
    markdown = format_sweep_markdown(reports)
    (out_dir / "table.md").write_text(markdown, encoding="utf-8")
    (out_dir / "table.csv").write_text(format_sweep_table_csv(reports), encoding="utf-8")
    print(markdown, end="")
    failures = [r for r in reports if r.error]
    for r in failures:
        print(f"run {r.run.run_id} failed: {r.error}")
    print(f"wrote {len(reports)} reports to {out_dir}")
    return 0


def cmd_quadrant(args) -> int:
    _require_metrics(args, "the quadrant statistic")
    dataset = _load_dataset(args)
    stats = quadrant_stats(dataset, args.t)
    if args.out:
        write_quadrant_points(stats, args.out)
    print(f"t={args.t}: radiant_above={stats.radiant_above:.4f} ({stats.n_above} matches), "
          f"dire_below={stats.dire_below:.4f} ({stats.n_below} matches), "
          f"zero={stats.n_zero}")
    return 0


def cmd_durations(args) -> int:
    matches = matchdata.load_matches(args.matches, args.roster_size)
    hist = matchdata.duration_histogram(matches, pro_only=args.pro_only)
    if args.out:
        lines = ["duration_minutes,count,fraction"]
        for minute, count in hist.counts.items():
            lines.append(f"{minute},{count},{matchdata.format_real(count / hist.total)}")
        with open(args.out, "w", encoding="utf-8", newline="\n") as handle:
            handle.write("\n".join(lines) + "\n")
    print(f"{hist.total} matches; fraction lasting >= 20 min: "
          f"{hist.fraction_at_least(20):.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="winpred",
                                     description="Esports win-prediction toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic corpus as CSV")
    p.add_argument("--n", type=int, required=True, help="number of matches")
    p.add_argument("--roster-size", type=int, default=matchdata.DEFAULT_ROSTER_SIZE)
    p.add_argument("--mean-duration", type=float, default=40.0)
    p.add_argument("--signal", type=float, default=0.5,
                   help="kill signal strength in [0, 1]")
    p.add_argument("--radiant-bias", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-matches", default="matches.csv")
    p.add_argument("--out-metrics", default="metrics.csv")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="validate match/metric CSV files")
    _add_data_flags(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("featurize", help="emit hero or window vector CSVs")
    _add_data_flags(p)
    p.add_argument("--rep", choices=("hero", "ingame"), required=True)
    p.add_argument("--t", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train one model on all given data")
    _add_data_flags(p)
    _add_run_flags(p, with_split=False)
    p.add_argument("--model-out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate one configuration")
    _add_data_flags(p)
    _add_run_flags(p, with_split=True)
    p.add_argument("--report-out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="evaluate a grid file of configurations")
    _add_data_flags(p)
    p.add_argument("--grid", required=True, help="grid file (key=value blocks)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=None,
                   help=f"parallel entries (default ${WORKERS_ENV_VAR} or 1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("quadrant", help="kills-difference quadrant statistic")
    _add_data_flags(p)
    p.add_argument("--t", type=int, default=20)
    p.add_argument("--out", default=None, help="plot points CSV")
    p.set_defaults(func=cmd_quadrant)

    p = sub.add_parser("durations", help="duration histogram")
    p.add_argument("--matches", required=True)
    p.add_argument("--roster-size", type=int, default=matchdata.DEFAULT_ROSTER_SIZE)
    p.add_argument("--pro-only", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_durations)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except WinPredError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
