"""Match and per-minute metric data model, CSV ingestion, and the seeded
synthetic generator used as the verification oracle.

CSV schemas
-----------
``matches.csv``::

    match_id,start_time,is_professional,tournament_id,duration_minutes,
    radiant_heroes,dire_heroes,winner,skill_score

Hero lists are semicolon-joined integers inside one quoted field, sorted
ascending in canonical form. ``winner`` is the literal ``RadiantWin`` or
``DireWin``. ``skill_score`` is empty for professional matches and required
otherwise.

``metrics.csv``::

    match_id,minute,dire_damage,radiant_damage,dire_kills,radiant_kills,
    dire_lasthits,radiant_lasthits,dire_networth,radiant_networth,
    dire_towerdamage,radiant_towerdamage,dire_xp,radiant_xp

One row per (match, minute); every minute 0..duration_minutes must be
present and the twelve cumulative columns must be non-decreasing in minute.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    DuplicateMatchId,
    DuplicateMinute,
    EmptySelection,
    InvalidConfig,
    InvariantViolation,
    MalformedRow,
    MissingMinute,
    NonMonotoneCumulative,
    UnknownMatchId,
)

DEFAULT_ROSTER_SIZE = 113

# Cumulative team metrics, one pair of columns (dire, radiant) per metric.
METRICS = ("DamageDealt", "Kills", "LastHits", "NetWorth", "TowerDamage", "XpGained")

_METRIC_CSV_NAMES = {
    "DamageDealt": "damage",
    "Kills": "kills",
    "LastHits": "lasthits",
    "NetWorth": "networth",
    "TowerDamage": "towerdamage",
    "XpGained": "xp",
}

MATCH_HEADER = (
    "match_id,start_time,is_professional,tournament_id,duration_minutes,"
    "radiant_heroes,dire_heroes,winner,skill_score"
)

METRIC_HEADER = "match_id,minute," + ",".join(
    f"dire_{_METRIC_CSV_NAMES[m]},radiant_{_METRIC_CSV_NAMES[m]}" for m in METRICS
)


class MatchOutcome(enum.Enum):
    DIRE_WIN = "DireWin"
    RADIANT_WIN = "RadiantWin"

    @classmethod
    def from_label(cls, text: str) -> "MatchOutcome":
        for outcome in cls:
            if outcome.value == text:
                return outcome
        raise MalformedRow(f"unknown winner label {text!r}")

    @classmethod
    def from_int(cls, value: int) -> "MatchOutcome":
        return cls.RADIANT_WIN if value else cls.DIRE_WIN

    @property
    def as_int(self) -> int:
        """1 for RadiantWin, 0 for DireWin (the positive-class convention)."""
        return 1 if self is MatchOutcome.RADIANT_WIN else 0

    def flipped(self) -> "MatchOutcome":
        return MatchOutcome.DIRE_WIN if self is MatchOutcome.RADIANT_WIN else MatchOutcome.RADIANT_WIN


@dataclass(frozen=True)
class MatchRecord:
    match_id: str
    start_time: int
    is_professional: bool
    tournament_id: str  # empty string = no tournament
    duration_minutes: int
    radiant_heroes: frozenset[int]
    dire_heroes: frozenset[int]
    winner: MatchOutcome
    skill_score: int | None = None


@dataclass(frozen=True)
class MetricSample:
    """Cumulative team totals at one minute mark. Keys of ``dire`` and
    ``radiant`` are the names in :data:`METRICS`."""

    match_id: str
    minute: int
    dire: dict[str, float]
    radiant: dict[str, float]


@dataclass(frozen=True)
class MatchDataset:
    matches: list[MatchRecord]
    metrics: dict[str, list[MetricSample]]
    roster_size: int = DEFAULT_ROSTER_SIZE

    @cached_property
    def match_index(self) -> dict[str, MatchRecord]:
        return {m.match_id: m for m in self.matches}


@dataclass(frozen=True)
class SynthConfig:
    n_matches: int
    roster_size: int = DEFAULT_ROSTER_SIZE
    mean_duration_minutes: float = 40.0
    kill_signal_strength: float = 0.5
    radiant_bias: float = 0.5
    seed: int = 0


@dataclass(frozen=True)
class DurationHistogram:
    """Per-minute duration counts over a match selection."""

    counts: dict[int, int]
    total: int

    @property
    def fractions(self) -> dict[int, float]:
        return {minute: c / self.total for minute, c in self.counts.items()}

    def fraction_at_least(self, minute: int) -> float:
        return sum(c for m, c in self.counts.items() if m >= minute) / self.total


def format_real(x: float) -> str:
    """Canonical real serialization: up to 6 decimal places, no trailing zeros."""
    s = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _parse_int(text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise MalformedRow(f"{what}: expected integer, got {text!r}") from None


def _parse_real(text: str, what: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedRow(f"{what}: expected number, got {text!r}") from None
    if not math.isfinite(value):
        raise MalformedRow(f"{what}: non-finite value {text!r}")
    return value


def _parse_hero_set(text: str, team: str, match_id: str, roster_size: int) -> frozenset[int]:
    if not text:
        raise MalformedRow(f"match {match_id}: empty {team} hero list")
    heroes = frozenset(_parse_int(part, f"match {match_id} {team} hero") for part in text.split(";"))
    if len(heroes) != 5:
        raise InvariantViolation(
            f"match {match_id}: {team} team has {len(heroes)} distinct heroes, expected 5"
        )
    for hero in heroes:
        if hero < 0 or hero >= roster_size:
            raise InvariantViolation(
                f"match {match_id}: hero id {hero} outside roster [0, {roster_size})"
            )
    return heroes


def _read_csv(path, expected_header: str) -> list[list[str]]:
    with open(path, encoding="utf-8", newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows or ",".join(rows[0]) != expected_header:
        raise MalformedRow(f"bad header in {path}")
    return rows[1:]


def load_matches(path, roster_size: int = DEFAULT_ROSTER_SIZE) -> list[MatchRecord]:
    """Read and validate a matches CSV; row order is preserved."""
    matches: list[MatchRecord] = []
    seen: set[str] = set()
    for lineno, row in enumerate(_read_csv(path, MATCH_HEADER), start=2):
        if not row:
            continue
        if len(row) != 9:
            raise MalformedRow(f"line {lineno}: expected 9 columns, got {len(row)}")
        match_id = row[0]
        if not match_id:
            raise MalformedRow(f"line {lineno}: empty match_id")
        if match_id in seen:
            raise DuplicateMatchId(f"match_id {match_id!r} appears more than once")
        seen.add(match_id)

        if row[2] not in ("true", "false"):
            raise MalformedRow(f"match {match_id}: is_professional must be true/false, got {row[2]!r}")
        is_professional = row[2] == "true"

        duration = _parse_int(row[4], f"match {match_id} duration_minutes")
        if duration < 1:
            raise InvariantViolation(f"match {match_id}: duration_minutes {duration} < 1")

        radiant = _parse_hero_set(row[5], "radiant", match_id, roster_size)
        dire = _parse_hero_set(row[6], "dire", match_id, roster_size)
        overlap = radiant & dire
        if overlap:
            raise InvariantViolation(
                f"match {match_id}: heroes {sorted(overlap)} appear on both teams"
            )

        if row[8] == "":
            skill_score = None
        else:
            skill_score = _parse_int(row[8], f"match {match_id} skill_score")
        if is_professional and skill_score is not None:
            raise InvariantViolation(f"match {match_id}: professional match carries a skill_score")
        if not is_professional and skill_score is None:
            raise InvariantViolation(f"match {match_id}: non-professional match lacks a skill_score")

        matches.append(
            MatchRecord(
                match_id=match_id,
                start_time=_parse_int(row[1], f"match {match_id} start_time"),
                is_professional=is_professional,
                tournament_id=row[3],
                duration_minutes=duration,
                radiant_heroes=radiant,
                dire_heroes=dire,
                winner=MatchOutcome.from_label(row[7]),
                skill_score=skill_score,
            )
        )
    return matches


def write_matches(matches: list[MatchRecord], path) -> None:
    """Write matches in canonical form (sorted hero lists, LF endings)."""
    lines = [MATCH_HEADER]
    for m in matches:
        radiant = ";".join(str(h) for h in sorted(m.radiant_heroes))
        dire = ";".join(str(h) for h in sorted(m.dire_heroes))
        skill = "" if m.skill_score is None else str(m.skill_score)
        lines.append(
            f"{m.match_id},{m.start_time},{'true' if m.is_professional else 'false'},"
            f'{m.tournament_id},{m.duration_minutes},"{radiant}","{dire}",{m.winner.value},{skill}'
        )
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def load_metrics(path, matches: list[MatchRecord],
                 roster_size: int = DEFAULT_ROSTER_SIZE) -> MatchDataset:
    """Read a metrics CSV and attach per-minute samples to ``matches``.

    Every match must be covered for each minute 0..duration_minutes, with
    cumulative values non-decreasing; gaps, duplicates, out-of-range minutes
    and regressions are hard errors.
    """
    by_id = {m.match_id: m for m in matches}
    samples: dict[str, dict[int, MetricSample]] = {m.match_id: {} for m in matches}

    for lineno, row in enumerate(_read_csv(path, METRIC_HEADER), start=2):
        if not row:
            continue
        if len(row) != 14:
            raise MalformedRow(f"line {lineno}: expected 14 columns, got {len(row)}")
        match_id = row[0]
        match = by_id.get(match_id)
        if match is None:
            raise UnknownMatchId(f"line {lineno}: metrics for unknown match {match_id!r}")
        minute = _parse_int(row[1], f"match {match_id} minute")
        if minute < 0 or minute > match.duration_minutes:
            raise InvariantViolation(
                f"match {match_id}: minute {minute} outside 0..{match.duration_minutes}"
            )
        if minute in samples[match_id]:
            raise DuplicateMinute(f"match {match_id}: duplicate sample for minute {minute}")

        dire: dict[str, float] = {}
        radiant: dict[str, float] = {}
        for k, metric in enumerate(METRICS):
            d = _parse_real(row[2 + 2 * k], f"match {match_id} dire {metric}")
            r = _parse_real(row[3 + 2 * k], f"match {match_id} radiant {metric}")
            if d < 0 or r < 0:
                raise InvariantViolation(f"match {match_id}: negative {metric} at minute {minute}")
            dire[metric] = d
            radiant[metric] = r
        samples[match_id][minute] = MetricSample(match_id, minute, dire, radiant)

    metrics: dict[str, list[MetricSample]] = {}
    for match in matches:
        per_minute = samples[match.match_id]
        ordered: list[MetricSample] = []
        for minute in range(match.duration_minutes + 1):
            if minute not in per_minute:
                raise MissingMinute(f"match {match.match_id}: no sample for minute {minute}")
            ordered.append(per_minute[minute])
        for prev, cur in zip(ordered, ordered[1:]):
            for metric in METRICS:
                if cur.dire[metric] < prev.dire[metric] or cur.radiant[metric] < prev.radiant[metric]:
                    raise NonMonotoneCumulative(
                        f"match {match.match_id}: {metric} decreases between "
                        f"minutes {prev.minute} and {cur.minute}"
                    )
        metrics[match.match_id] = ordered

    return MatchDataset(matches=list(matches), metrics=metrics, roster_size=roster_size)


def write_metrics(dataset: MatchDataset, path) -> None:
    lines = [METRIC_HEADER]
    for match in dataset.matches:
        for sample in dataset.metrics[match.match_id]:
            values = []
            for metric in METRICS:
                values.append(format_real(sample.dire[metric]))
                values.append(format_real(sample.radiant[metric]))
            lines.append(f"{match.match_id},{sample.minute}," + ",".join(values))
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")


def sort_chronological(matches: list[MatchRecord]) -> list[MatchRecord]:
    """Stable ascending sort by start_time; ties broken by match_id."""
    return sorted(matches, key=lambda m: (m.start_time, m.match_id))


def duration_histogram(matches: list[MatchRecord], pro_only: bool = False) -> DurationHistogram:
    selected = [m for m in matches if m.is_professional] if pro_only else list(matches)
    if not selected:
        raise EmptySelection("no matches left after the pro_only filter")
    counts: dict[int, int] = {}
    for m in selected:
        counts[m.duration_minutes] = counts.get(m.duration_minutes, 0) + 1
    return DurationHistogram(counts=dict(sorted(counts.items())), total=len(selected))


# -- synthetic generator -----------------------------------------------------

# Per-minute kill rates for the stronger / weaker side. The gap is wide enough
# that the sign of the kills differential at minute 20 almost surely matches
# the sign at the end of the game (flip probability < 1e-3).
_KILL_RATE_STRONG = 1.5
_KILL_RATE_WEAK = 0.5
_PRO_FRACTION = 0.15
SYNTH_TOURNAMENT_ID = "synth-major"

# metric -> (per-minute base, coupling to that minute's kill increment, noise stddev)
_METRIC_SHAPE = {
    "DamageDealt": (900.0, 500.0, 200.0),
    "LastHits": (30.0, 3.0, 6.0),
    "NetWorth": (1800.0, 400.0, 300.0),
    "TowerDamage": (60.0, 120.0, 80.0),
    "XpGained": (2000.0, 450.0, 350.0),
}


def synthesize(config: SynthConfig) -> MatchDataset:
    """Generate a deterministic synthetic corpus with a known Bayes rate.

    Recipe (all draws from one ``numpy.random.default_rng(seed)`` stream, in
    the exact order below, one match at a time):

    1. ``start_time``: 1490640000 plus a running sum of ``integers(120, 1800)``
       gaps, so list order is chronological order.
    2. ``duration``: ``max(5, round(normal(mean, mean / 4)))`` minutes.
    3. professional flag: ``random() < 0.15``; professional matches get
       ``tournament_id = "synth-major"`` and no skill score, others get
       ``skill_score = integers(6001, 9500)``.
    4. heroes: ``choice(roster_size, 10, replace=False)``; first five Radiant,
       last five Dire.
    5. one team is drawn advantaged (``random() < 0.5`` for Radiant); its
       per-minute kill increments are ``poisson(1.5)``, the other team's
       ``poisson(0.5)`` (arrays of length ``duration``, Radiant drawn first).
    6. each remaining metric's per-minute team increment is
       ``round(clip(base + coupling * kill_increment + normal(0, noise), 0))``
       with the constants in ``_METRIC_SHAPE`` (order: DamageDealt, LastHits,
       NetWorth, TowerDamage, XpGained; Radiant before Dire); all metrics are
       cumulative sums of integer increments starting from 0 at minute 0.
    7. winner: let ``H`` be the team with more kills at the final minute.
       If kills tie, Radiant wins iff ``random() < radiant_bias``. Otherwise
       the winner is ``H`` iff ``random() < 0.5 + 0.5 * kill_signal_strength``,
       else the other team.

    Step 7 makes the Bayes-optimal accuracy of any predictor equal to
    ``0.5 + 0.5 * kill_signal_strength`` (up to the negligible probability
    that the kills lead flips sign after the observation minute), which the
    acceptance suite recounts independently.
    """
    if config.n_matches < 1:
        raise InvalidConfig(f"n_matches must be >= 1, got {config.n_matches}")
    if config.roster_size < 10:
        raise InvalidConfig(f"roster_size must be >= 10, got {config.roster_size}")
    if not 0.0 <= config.kill_signal_strength <= 1.0:
        raise InvalidConfig("kill_signal_strength must lie in [0, 1]")
    if not 0.0 <= config.radiant_bias <= 1.0:
        raise InvalidConfig("radiant_bias must lie in [0, 1]")
    if config.mean_duration_minutes < 5:
        raise InvalidConfig("mean_duration_minutes must be >= 5")
    if config.seed < 0:
        raise InvalidConfig("seed must be non-negative")

    rng = np.random.default_rng(config.seed)
    p_follow_kills = 0.5 + 0.5 * config.kill_signal_strength
    width = len(str(config.n_matches - 1))

    matches: list[MatchRecord] = []
    metrics: dict[str, list[MetricSample]] = {}
    start_time = 1_490_640_000
    for i in range(config.n_matches):
        match_id = f"synth-{i:0{width}d}"
        start_time += int(rng.integers(120, 1800))
        duration = max(5, int(round(rng.normal(config.mean_duration_minutes,
                                                config.mean_duration_minutes / 4.0))))
        is_pro = bool(rng.random() < _PRO_FRACTION)
        skill_score = None if is_pro else int(rng.integers(6001, 9500))
        picks = rng.choice(config.roster_size, size=10, replace=False)
        radiant_heroes = frozenset(int(h) for h in picks[:5])
        dire_heroes = frozenset(int(h) for h in picks[5:])

        radiant_advantaged = bool(rng.random() < 0.5)
        rate_r = _KILL_RATE_STRONG if radiant_advantaged else _KILL_RATE_WEAK
        rate_d = _KILL_RATE_WEAK if radiant_advantaged else _KILL_RATE_STRONG
        kill_inc = {
            "radiant": rng.poisson(rate_r, duration).astype(float),
            "dire": rng.poisson(rate_d, duration).astype(float),
        }

        cumulative: dict[str, dict[str, np.ndarray]] = {"radiant": {}, "dire": {}}
        for team in ("radiant", "dire"):
            cumulative[team]["Kills"] = np.concatenate(([0.0], np.cumsum(kill_inc[team])))
        for metric, (base, coupling, noise) in _METRIC_SHAPE.items():
            for team in ("radiant", "dire"):
                inc = base + coupling * kill_inc[team] + rng.normal(0.0, noise, duration)
                inc = np.round(np.clip(inc, 0.0, None))
                cumulative[team][metric] = np.concatenate(([0.0], np.cumsum(inc)))

        diff = cumulative["radiant"]["Kills"][-1] - cumulative["dire"]["Kills"][-1]
        if diff == 0:
            winner = (MatchOutcome.RADIANT_WIN if rng.random() < config.radiant_bias
                      else MatchOutcome.DIRE_WIN)
        else:
            higher = MatchOutcome.RADIANT_WIN if diff > 0 else MatchOutcome.DIRE_WIN
            winner = higher if rng.random() < p_follow_kills else higher.flipped()

        matches.append(
            MatchRecord(
                match_id=match_id,
                start_time=start_time,
                is_professional=is_pro,
                tournament_id=SYNTH_TOURNAMENT_ID if is_pro else "",
                duration_minutes=duration,
                radiant_heroes=radiant_heroes,
                dire_heroes=dire_heroes,
                winner=winner,
                skill_score=skill_score,
            )
        )
        metrics[match_id] = [
            MetricSample(
                match_id=match_id,
                minute=minute,
                dire={m: float(cumulative["dire"][m][minute]) for m in METRICS},
                radiant={m: float(cumulative["radiant"][m][minute]) for m in METRICS},
            )
            for minute in range(duration + 1)
        ]

    return MatchDataset(matches=matches, metrics=metrics, roster_size=config.roster_size)
