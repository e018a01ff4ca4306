"""Evaluation protocols: chronological and tournament splits, single-run
evaluation, the accuracy sweep grid, and the kills-difference quadrant
statistic.

Feature selection, standardization statistics, and every other trainable
choice are computed from the training side only; test rows never reach a
selector or trainer.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import featurize, forest, logistic, selection
from .errors import (
    EmptyDataset,
    EmptySide,
    InvalidConfig,
    UnknownFeature,
    UnknownTournament,
    WinPredError,
)
from .matchdata import (
    MatchDataset,
    MatchOutcome,
    MatchRecord,
    format_real,
    sort_chronological,
)

WORKERS_ENV_VAR = "WINPRED_WORKERS"

REPORT_COLUMNS = (
    "run_id,representation,learner,selection,split,accuracy,"
    "tp,tn,fp,fn,train_size,test_size,selected_features"
)


@dataclass(frozen=True)
class Chronological:
    train_fraction: float = 0.66

    @property
    def label(self) -> str:
        return f"chronological-{format_real(self.train_fraction)}"


@dataclass(frozen=True)
class TournamentHoldout:
    tournament_id: str

    @property
    def label(self) -> str:
        return f"tournament-{self.tournament_id}"


SplitSpec = Chronological | TournamentHoldout


@dataclass(frozen=True)
class RunConfig:
    run_id: str
    representation: str = "ingame"  # "hero" or "ingame"
    t: int = 20
    learner: str = "lr"  # "lr" or "rf"
    lr: logistic.LrConfig = field(default_factory=logistic.LrConfig)
    rf: forest.RfConfig = field(default_factory=forest.RfConfig)
    selection: str = "all"  # all | single | cfs | wrapper
    single_feature: str = ""
    split: SplitSpec = field(default_factory=Chronological)
    include_timestamps: bool = False
    folds: int = 5
    selection_seed: int = 0
    stale_limit: int = 5

    @property
    def representation_label(self) -> str:
        return "hero" if self.representation == "hero" else f"ingame-t{self.t}"

    @property
    def selection_label(self) -> str:
        return f"single:{self.single_feature}" if self.selection == "single" else self.selection


@dataclass
class EvalReport:
    run: RunConfig
    accuracy: float = 0.0
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    selected_features: list[str] = field(default_factory=list)
    selection_score: float | None = None
    train_size: int = 0
    test_size: int = 0
    skipped: int = 0
    wall_time: float = 0.0
    error: str = ""


def split_matches(matches: list[MatchRecord],
                  spec: SplitSpec) -> tuple[list[MatchRecord], list[MatchRecord]]:
    """Partition matches per the split spec; both sides are non-empty.

    Chronological: sort by start_time (ties by match_id) and send the first
    ceil(train_fraction * n) matches to train, so no test match starts before
    a train match. TournamentHoldout: the named tournament is the test set.
    """
    if not matches:
        raise EmptySide("cannot split an empty match list")
    if isinstance(spec, Chronological):
        if not 0.0 < spec.train_fraction < 1.0:
            raise InvalidConfig(f"train_fraction must be in (0, 1), got {spec.train_fraction}")
        ordered = sort_chronological(matches)
        cut = math.ceil(spec.train_fraction * len(ordered))
        train, test = ordered[:cut], ordered[cut:]
        if not train or not test:
            raise EmptySide(f"{len(matches)} matches cannot fill both split sides")
        return train, test
    test = [m for m in matches if m.tournament_id == spec.tournament_id]
    if not test:
        raise UnknownTournament(f"no matches in tournament {spec.tournament_id!r}")
    train = [m for m in matches if m.tournament_id != spec.tournament_id]
    if not train:
        raise EmptySide(f"all matches belong to tournament {spec.tournament_id!r}")
    return train, test


def _featurize_side(run: RunConfig, dataset: MatchDataset,
                    matches: list[MatchRecord], side: str):
    if run.representation == "hero":
        vectors = featurize.build_hero_dataset(matches, dataset.roster_size)
        X, y, names = featurize.hero_matrix(vectors)
        return X, y, names, 0
    build = featurize.build_window_dataset(dataset, run.t, matches=matches)
    if not build.vectors:
        raise EmptySide(f"no {side} matches reach minute {run.t}")
    X, y, names = featurize.window_matrix(build.vectors, run.include_timestamps)
    return X, y, names, build.skipped


def resolve_single_feature(name: str, names: list[str], run: RunConfig) -> int:
    """Map a --single-feature name to a column index.

    For the in-game representation a bare variant name like ``Kills_R-D``
    refers to that variant at the window's final minute.
    """
    if name in names:
        return names.index(name)
    if run.representation == "ingame" and name in featurize.variant_names():
        full = f"{name}@{run.t}"
        if full in names:
            return names.index(full)
    raise UnknownFeature(f"unknown feature {name!r} for {run.representation_label}")


def _lr_train_fn(config: logistic.LrConfig):
    def train(X, y):
        model = logistic.train_lr(X, y, config)

        def predict(Xt):
            return (np.atleast_1d(logistic.predict_proba(model, Xt)) >= 0.5).astype(np.int64)

        return predict

    return train


def _rf_train_fn(config: forest.RfConfig):
    def train(X, y):
        model = forest.train_rf(X, y, config)

        def predict(Xt):
            votes = forest.predict_rf_votes(model, np.asarray(Xt, dtype=np.float64))
            return (2 * votes >= config.num_trees).astype(np.int64)

        return predict

    return train


def _select(run: RunConfig, X: np.ndarray, y: np.ndarray,
            names: list[str], workers: int = 1):
    """Pick the training column subset; returns (indices, score or None)."""
    if run.selection == "all":
        return tuple(range(len(names))), None
    if run.selection == "single":
        return (resolve_single_feature(run.single_feature, names, run),), None
    config = selection.SearchConfig(stale_limit=run.stale_limit)
    if run.selection == "cfs":
        subset, score = selection.select_features(
            X, y, "cfs", discrete=run.representation == "hero",
            config=config, workers=workers,
        )
        return subset.indices, score
    if run.selection == "wrapper":
        train_fn = _lr_train_fn(run.lr) if run.learner == "lr" else _rf_train_fn(run.rf)
        subset, score = selection.select_features(
            X, y, "wrapper", train_fn=train_fn, folds=run.folds,
            seed=run.selection_seed, config=config, workers=workers,
        )
        return subset.indices, score
    raise InvalidConfig(f"unknown selection mode {run.selection!r}")


def evaluate(run: RunConfig, dataset: MatchDataset, workers: int = 1) -> EvalReport:
    """Split, featurize, select on train, fit on train, score on test."""
    started = time.perf_counter()
    if run.representation not in ("hero", "ingame"):
        raise InvalidConfig(f"unknown representation {run.representation!r}")
    if run.learner not in ("lr", "rf"):
        raise InvalidConfig(f"unknown learner {run.learner!r}")

    train_matches, test_matches = split_matches(dataset.matches, run.split)
    X_train, y_train, names, skipped_train = _featurize_side(run, dataset, train_matches, "train")
    X_test, y_test, _, skipped_test = _featurize_side(run, dataset, test_matches, "test")

    indices, score = _select(run, X_train, y_train, names, workers=workers)
    selected_names = [names[j] for j in indices]

    if run.learner == "lr":
        model = logistic.train_lr(X_train[:, indices], y_train, run.lr,
                                  feature_names=selected_names)
        probabilities = np.atleast_1d(logistic.predict_proba(model, X_test[:, indices]))
        predictions = (probabilities >= 0.5).astype(np.int64)
    else:
        model = forest.train_rf(X_train[:, indices], y_train, run.rf,
                                feature_names=selected_names)
        votes = forest.predict_rf_votes(model, X_test[:, indices])
        predictions = (2 * votes >= run.rf.num_trees).astype(np.int64)

    tp = int(((predictions == 1) & (y_test == 1)).sum())
    tn = int(((predictions == 0) & (y_test == 0)).sum())
    fp = int(((predictions == 1) & (y_test == 0)).sum())
    fn = int(((predictions == 0) & (y_test == 1)).sum())
    return EvalReport(
        run=run,
        accuracy=(tp + tn) / y_test.size,
        tp=tp, tn=tn, fp=fp, fn=fn,
        selected_features=selected_names,
        selection_score=score,
        train_size=int(y_train.size),
        test_size=int(y_test.size),
        skipped=skipped_train + skipped_test,
        wall_time=time.perf_counter() - started,
    )


def train_model(run: RunConfig, dataset: MatchDataset):
    """Select features on and fit a model to the whole dataset (no split).

    Returns (model, selected_feature_names, skipped_matches); the model is an
    LrModel or RfModel depending on ``run.learner``, with the selected
    feature names persisted inside it.
    """
    X, y, names, skipped = _featurize_side(run, dataset, dataset.matches, "training")
    indices, _ = _select(run, X, y, names)
    selected_names = [names[j] for j in indices]
    if run.learner == "lr":
        model = logistic.train_lr(X[:, indices], y, run.lr, feature_names=selected_names)
    else:
        model = forest.train_rf(X[:, indices], y, run.rf, feature_names=selected_names)
    return model, selected_names, skipped


def sweep(runs: list[RunConfig], dataset: MatchDataset,
          workers: int | None = None) -> list[EvalReport]:
    """Evaluate every run config; per-run errors are recorded, not raised.

    Entries run in parallel up to ``workers`` (default: the WINPRED_WORKERS
    environment variable, else 1); report order always follows grid order.
    """
    if not runs:
        raise InvalidConfig("sweep needs at least one run config")
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV_VAR, "1"))

    def one(run: RunConfig) -> EvalReport:
        try:
            return evaluate(run, dataset)
        except WinPredError as exc:
            return EvalReport(run=run, error=f"{type(exc).__name__}: {exc}")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, runs))
    return [one(run) for run in runs]


# -- sweep emission ------------------------------------------------------------

_SELECTION_ORDER = ("single", "all", "cfs", "wrapper")
_SELECTION_TITLES = {"single": "1-Attr", "all": "All", "cfs": "CFS Select",
                     "wrapper": "Wrapper Select"}
_LEARNER_TITLES = {"lr": "LR", "rf": "RF"}


def _block_key(report: EvalReport) -> tuple[str, str]:
    return report.run.representation_label, report.run.split.label


def _grouped(reports: list[EvalReport]):
    blocks: dict[tuple[str, str], list[EvalReport]] = {}
    for report in reports:
        blocks.setdefault(_block_key(report), []).append(report)
    return blocks


def _best_in_block(block: list[EvalReport]) -> EvalReport | None:
    scored = [r for r in block if not r.error]
    if not scored:
        return None
    return max(scored, key=lambda r: r.accuracy)  # first max in grid order


def _block_grid(block: list[EvalReport]):
    learners = []
    selections = []
    for r in block:
        if r.run.learner not in learners:
            learners.append(r.run.learner)
        if r.run.selection not in selections:
            selections.append(r.run.selection)
    selections.sort(key=_SELECTION_ORDER.index)
    cells = {(r.run.learner, r.run.selection): r for r in block}
    return learners, selections, cells


def format_sweep_markdown(reports: list[EvalReport]) -> str:
    lines: list[str] = []
    for (rep, split), block in _grouped(reports).items():
        best = _best_in_block(block)
        learners, selections, cells = _block_grid(block)
        lines.append(f"## {rep} / {split}")
        lines.append("")
        lines.append("| Predictor | " + " | ".join(_SELECTION_TITLES[s] for s in selections) + " |")
        lines.append("|" + "---|" * (len(selections) + 1))
        for learner in learners:
            row = [_LEARNER_TITLES[learner]]
            for sel in selections:
                report = cells.get((learner, sel))
                if report is None:
                    row.append("")
                elif report.error:
                    row.append("error")
                else:
                    cell = f"{100.0 * report.accuracy:.4f}"
                    if sel == "single":
                        cell += f" ({report.run.single_feature})"
                    if report is best:
                        cell = f"**{cell}**"
                    row.append(cell)
            lines.append("| " + " | ".join(row) + " |")
        lines.append("")
    return "\n".join(lines) + "\n"


def format_sweep_table_csv(reports: list[EvalReport]) -> str:
    """Grid-shaped CSV mirror of the markdown table; the best cell per block
    carries a trailing ``*``."""
    out: list[str] = []
    for (rep, split), block in _grouped(reports).items():
        best = _best_in_block(block)
        learners, selections, cells = _block_grid(block)
        out.append(f"block,predictor," + ",".join(_SELECTION_TITLES[s] for s in selections))
        for learner in learners:
            row = [f"{rep}/{split}", _LEARNER_TITLES[learner]]
            for sel in selections:
                report = cells.get((learner, sel))
                if report is None:
                    row.append("")
                elif report.error:
                    row.append("error")
                else:
                    row.append(f"{100.0 * report.accuracy:.4f}" + ("*" if report is best else ""))
            out.append(",".join(row))
    return "\n".join(out) + "\n"


def write_reports_csv(reports: list[EvalReport], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS.split(","))
        for r in reports:
            writer.writerow([
                r.run.run_id,
                r.run.representation_label,
                r.run.learner,
                r.run.selection_label,
                r.run.split.label,
                "" if r.error else f"{r.accuracy:.6f}",
                r.tp, r.tn, r.fp, r.fn,
                r.train_size, r.test_size,
                ";".join(r.selected_features),
            ])


# -- quadrant statistic ---------------------------------------------------------

@dataclass(frozen=True)
class QuadrantStats:
    radiant_above: float  # P(Radiant won | Kills_R-D at t > 0)
    dire_below: float  # P(Dire won | Kills_R-D at t < 0)
    n_above: int
    n_below: int
    n_zero: int
    points: list[tuple[str, float, MatchOutcome]]


def quadrant_stats(dataset: MatchDataset, t: int) -> QuadrantStats:
    """Kills difference at minute t versus the final winner, over all matches
    lasting at least t minutes. Zero-difference matches are excluded from
    both fractions (and counted)."""
    if t < 0:
        raise InvalidConfig(f"t must be >= 0, got {t}")
    points: list[tuple[str, float, MatchOutcome]] = []
    for match in dataset.matches:
        if match.duration_minutes < t:
            continue
        sample = dataset.metrics[match.match_id][t]
        points.append((match.match_id, sample.radiant["Kills"] - sample.dire["Kills"], match.winner))
    if not points:
        raise EmptyDataset(f"no matches reach minute {t}")
    above = [p for p in points if p[1] > 0]
    below = [p for p in points if p[1] < 0]
    radiant_above = (
        sum(p[2] is MatchOutcome.RADIANT_WIN for p in above) / len(above) if above else 0.0
    )
    dire_below = (
        sum(p[2] is MatchOutcome.DIRE_WIN for p in below) / len(below) if below else 0.0
    )
    return QuadrantStats(
        radiant_above=radiant_above,
        dire_below=dire_below,
        n_above=len(above),
        n_below=len(below),
        n_zero=len(points) - len(above) - len(below),
        points=points,
    )


def write_quadrant_points(stats: QuadrantStats, path) -> None:
    lines = ["match_id,kills_r_minus_d,winner"]
    for match_id, value, winner in stats.points:
        lines.append(f"{match_id},{format_real(value)},{winner.value}")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


# -- run-config construction -----------------------------------------------------

_GRID_KEYS = {
    "id", "representation", "t", "learner", "selection", "single_feature",
    "split", "train_fraction", "tournament", "include_timestamps",
    "folds", "selection_seed", "stale_limit",
    "ridge", "max_iterations", "tolerance", "standardize",
    "trees", "features_per_split", "max_depth", "min_leaf", "seed",
}


def _parse_bool(text: str, key: str) -> bool:
    if text not in ("true", "false"):
        raise InvalidConfig(f"{key}: expected true/false, got {text!r}")
    return text == "true"


def run_config_from_dict(pairs: dict[str, str], default_id: str) -> RunConfig:
    """Build a RunConfig from flat key-value strings (grid blocks, CLI flags).

    ``standardize`` defaults to ``auto``: on for the in-game representation,
    off for hero vectors.
    """
    unknown = set(pairs) - _GRID_KEYS
    if unknown:
        raise InvalidConfig(f"unknown grid key(s): {', '.join(sorted(unknown))}")

    representation = pairs.get("representation", "ingame")
    if representation not in ("hero", "ingame"):
        raise InvalidConfig(f"representation must be hero or ingame, got {representation!r}")
    learner = pairs.get("learner", "lr")
    if learner not in ("lr", "rf"):
        raise InvalidConfig(f"learner must be lr or rf, got {learner!r}")
    sel = pairs.get("selection", "all")
    if sel not in ("all", "single", "cfs", "wrapper"):
        raise InvalidConfig(f"selection must be all/single/cfs/wrapper, got {sel!r}")
    if sel == "single" and not pairs.get("single_feature"):
        raise InvalidConfig("selection=single requires single_feature")

    try:
        split_kind = pairs.get("split", "chronological")
        if split_kind == "chronological":
            split: SplitSpec = Chronological(float(pairs.get("train_fraction", "0.66")))
        elif split_kind == "tournament":
            if "tournament" not in pairs:
                raise InvalidConfig("split=tournament requires tournament")
            split = TournamentHoldout(pairs["tournament"])
        else:
            raise InvalidConfig(f"split must be chronological or tournament, got {split_kind!r}")

        standardize_text = pairs.get("standardize", "auto")
        if standardize_text == "auto":
            standardize = representation == "ingame"
        else:
            standardize = _parse_bool(standardize_text, "standardize")

        lr = logistic.LrConfig(
            ridge=float(pairs.get("ridge", "1e-8")),
            max_iterations=int(pairs.get("max_iterations", "500")),
            convergence_tolerance=float(pairs.get("tolerance", "1e-9")),
            standardize=standardize,
        )
        rf = forest.RfConfig(
            num_trees=int(pairs.get("trees", "100")),
            features_per_split=int(pairs.get("features_per_split", "0")),
            max_depth=int(pairs.get("max_depth", "0")),
            min_leaf=int(pairs.get("min_leaf", "1")),
            seed=int(pairs.get("seed", "0")),
        )
        return RunConfig(
            run_id=pairs.get("id", default_id),
            representation=representation,
            t=int(pairs.get("t", "20")),
            learner=learner,
            lr=lr,
            rf=rf,
            selection=sel,
            single_feature=pairs.get("single_feature", ""),
            split=split,
            include_timestamps=_parse_bool(pairs.get("include_timestamps", "false"),
                                           "include_timestamps"),
            folds=int(pairs.get("folds", "5")),
            selection_seed=int(pairs.get("selection_seed", "0")),
            stale_limit=int(pairs.get("stale_limit", "5")),
        )
    except ValueError as exc:
        raise InvalidConfig(f"bad grid value: {exc}") from None


def parse_grid(text: str) -> list[RunConfig]:
    """Parse a grid file: one run per blank-line-separated block of
    ``key = value`` lines; ``#`` starts a comment."""
    blocks: list[dict[str, str]] = []
    current: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            if current:
                blocks.append(current)
                current = {}
            continue
        if "=" not in line:
            raise InvalidConfig(f"grid line missing '=': {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in current:
            raise InvalidConfig(f"duplicate grid key {key!r} in one block")
        current[key] = value
    if current:
        blocks.append(current)
    if not blocks:
        raise InvalidConfig("grid file defines no runs")
    return [run_config_from_dict(block, f"run{i + 1}") for i, block in enumerate(blocks)]
