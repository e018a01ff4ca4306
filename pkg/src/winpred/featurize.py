"""Feature extraction: tri-state hero-pick vectors and 5-minute sliding-window
in-game vectors.

Every in-game metric yields five variants per minute: the Dire total ``D``,
the Radiant total ``R``, the difference ``R-D``, and the one-minute gradients
``dD`` and ``dR``. A window ending at minute ``t`` covers minutes ``t-4..t``,
giving 6 metrics x 5 variants x 5 minutes = 150 features plus the five
timestamps. The canonical flat ordering is metric-major, variant next,
minute innermost, with names like ``Kills_R-D@16``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    HeroOutOfRange,
    MatchTooShort,
    MissingSample,
    UnknownMatchId,
    WindowBelowMinimum,
)
from .matchdata import METRICS, MatchDataset, MatchOutcome, MatchRecord, format_real

VARIANTS = ("D", "R", "R-D", "dD", "dR")

WINDOW_LENGTH = 5
MIN_WINDOW_END = 5  # gradients at minute t-4 need a sample at t-5 >= 0

TIMESTAMP_NAMES = ("ts1", "ts2", "ts3", "ts4", "ts5")


def variant_names() -> list[str]:
    """The 30 per-minute feature names, metric-major."""
    return [f"{metric}_{variant}" for metric in METRICS for variant in VARIANTS]


def window_feature_names(t: int) -> list[str]:
    """The 150 canonical window column names for a window ending at minute t."""
    return [
        f"{metric}_{variant}@{minute}"
        for metric in METRICS
        for variant in VARIANTS
        for minute in range(t - WINDOW_LENGTH + 1, t + 1)
    ]


def hero_feature_names(roster_size: int) -> list[str]:
    return [f"h{i}" for i in range(roster_size)]


@dataclass(frozen=True)
class HeroVector:
    match_id: str
    values: np.ndarray  # roster_size entries in {-1, 0, +1}
    label: MatchOutcome


@dataclass(frozen=True)
class WindowVector:
    match_id: str
    end_minute: int
    values: np.ndarray  # 150 entries, canonical order
    timestamps: np.ndarray  # the five minutes t-4..t
    label: MatchOutcome

    def as_dict(self) -> dict[str, float]:
        return dict(zip(window_feature_names(self.end_minute), self.values.tolist()))


@dataclass(frozen=True)
class WindowBuild:
    vectors: list[WindowVector]
    skipped: int  # matches shorter than the window end minute
    end_minute: int


def hero_vector(match: MatchRecord, roster_size: int) -> HeroVector:
    """+1 for each Radiant hero, -1 for each Dire hero, 0 elsewhere."""
    values = np.zeros(roster_size, dtype=np.int8)
    for hero in match.radiant_heroes | match.dire_heroes:
        if hero < 0 or hero >= roster_size:
            raise HeroOutOfRange(
                f"match {match.match_id}: hero id {hero} outside roster [0, {roster_size})"
            )
    values[sorted(match.radiant_heroes)] = 1
    values[sorted(match.dire_heroes)] = -1
    return HeroVector(match_id=match.match_id, values=values, label=match.winner)


def base_metrics_at(dataset: MatchDataset, match_id: str, t: int) -> dict[str, float]:
    """All 30 (metric, variant) values at minute t; gradients use minute t-1."""
    samples = dataset.metrics.get(match_id)
    if samples is None:
        raise UnknownMatchId(f"no metrics for match {match_id!r}")
    if t < 1 or t >= len(samples):
        raise MissingSample(f"match {match_id}: need samples at minutes {t - 1} and {t}")
    cur, prev = samples[t], samples[t - 1]
    out: dict[str, float] = {}
    for metric in METRICS:
        d, r = cur.dire[metric], cur.radiant[metric]
        out[f"{metric}_D"] = d
        out[f"{metric}_R"] = r
        out[f"{metric}_R-D"] = r - d
        out[f"{metric}_dD"] = d - prev.dire[metric]
        out[f"{metric}_dR"] = r - prev.radiant[metric]
    return out


def window_vector(dataset: MatchDataset, match_id: str, t: int) -> WindowVector:
    if t < MIN_WINDOW_END:
        raise WindowBelowMinimum(f"window end minute {t} < {MIN_WINDOW_END}")
    match = dataset.match_index.get(match_id)
    if match is None:
        raise UnknownMatchId(f"unknown match {match_id!r}")
    if match.duration_minutes < t:
        raise MatchTooShort(
            f"match {match_id} lasts {match.duration_minutes} min, window needs {t}"
        )
    minutes = range(t - WINDOW_LENGTH + 1, t + 1)
    per_minute = {minute: base_metrics_at(dataset, match_id, minute) for minute in minutes}
    values = np.array(
        [
            per_minute[minute][f"{metric}_{variant}"]
            for metric in METRICS
            for variant in VARIANTS
            for minute in minutes
        ],
        dtype=np.float64,
    )
    return WindowVector(
        match_id=match_id,
        end_minute=t,
        values=values,
        timestamps=np.array(list(minutes), dtype=np.int64),
        label=match.winner,
    )


def build_hero_dataset(matches: list[MatchRecord], roster_size: int) -> list[HeroVector]:
    return [hero_vector(m, roster_size) for m in matches]


def build_window_dataset(dataset: MatchDataset, t: int,
                         matches: list[MatchRecord] | None = None) -> WindowBuild:
    """One WindowVector per match of duration >= t; shorter matches are skipped
    and counted, not errors."""
    if t < MIN_WINDOW_END:
        raise WindowBelowMinimum(f"window end minute {t} < {MIN_WINDOW_END}")
    selected = dataset.matches if matches is None else matches
    vectors: list[WindowVector] = []
    skipped = 0
    for match in selected:
        if match.duration_minutes < t:
            skipped += 1
            continue
        vectors.append(window_vector(dataset, match.match_id, t))
    return WindowBuild(vectors=vectors, skipped=skipped, end_minute=t)


# -- model matrices -----------------------------------------------------------

def hero_matrix(vectors: list[HeroVector]) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Stack hero vectors into (X, y, feature_names); y is 1 for RadiantWin."""
    if not vectors:
        roster = 0
    else:
        roster = vectors[0].values.shape[0]
    X = np.array([v.values for v in vectors], dtype=np.float64).reshape(len(vectors), roster)
    y = np.array([v.label.as_int for v in vectors], dtype=np.int64)
    return X, y, hero_feature_names(roster)


def window_matrix(vectors: list[WindowVector],
                  include_timestamps: bool = False) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Stack window vectors into (X, y, feature_names).

    Timestamps are constant for a fixed-t dataset and excluded by default;
    ``include_timestamps`` prepends them as ts1..ts5.
    """
    if not vectors:
        raise ValueError("no window vectors to stack")
    t = vectors[0].end_minute
    names = window_feature_names(t)
    X = np.array([v.values for v in vectors], dtype=np.float64)
    if include_timestamps:
        ts = np.array([v.timestamps for v in vectors], dtype=np.float64)
        X = np.hstack([ts, X])
        names = list(TIMESTAMP_NAMES) + names
    y = np.array([v.label.as_int for v in vectors], dtype=np.int64)
    return X, y, names


# -- CSV emission -------------------------------------------------------------

def write_hero_vectors(vectors: list[HeroVector], roster_size: int, path) -> None:
    lines = ["match_id,label," + ",".join(hero_feature_names(roster_size))]
    for v in vectors:
        lines.append(f"{v.match_id},{v.label.value}," + ",".join(str(int(x)) for x in v.values))
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def write_window_vectors(build: WindowBuild, path) -> None:
    names = window_feature_names(build.end_minute)
    lines = ["match_id,label," + ",".join(TIMESTAMP_NAMES) + "," + ",".join(names)]
    for v in build.vectors:
        ts = ",".join(str(int(m)) for m in v.timestamps)
        vals = ",".join(format_real(x) for x in v.values)
        lines.append(f"{v.match_id},{v.label.value},{ts},{vals}")
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
