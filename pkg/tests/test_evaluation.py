import numpy as np
import pytest

import winpred.logistic
import winpred.selection
from winpred.errors import (
    EmptyDataset,
    EmptySide,
    InvalidConfig,
    UnknownFeature,
    UnknownTournament,
)
from winpred.evaluation import (
    Chronological,
    QuadrantStats,
    RunConfig,
    TournamentHoldout,
    evaluate,
    format_sweep_markdown,
    format_sweep_table_csv,
    parse_grid,
    quadrant_stats,
    run_config_from_dict,
    split_matches,
    sweep,
    train_model,
    write_reports_csv,
)
from winpred.forest import RfConfig
from winpred.logistic import LrConfig
from winpred.matchdata import (
    MatchDataset,
    MatchOutcome,
    MetricSample,
    METRICS,
    SYNTH_TOURNAMENT_ID,
)

from test_matchdata import make_match


def kills_dataset(diffs_at_t, t, winners):
    """Multi-match dataset whose Radiant-Dire kills difference at minute t is
    given per match; all other metrics stay flat at zero."""
    matches, metrics = [], {}
    for i, (diff, winner) in enumerate(zip(diffs_at_t, winners)):
        match = make_match(f"q{i}", start_time=i, duration=t + 1, winner=winner)
        samples = []
        for minute in range(t + 2):
            radiant = {m: 0.0 for m in METRICS}
            dire = {m: 0.0 for m in METRICS}
            scale = min(minute, t) / t
            radiant["Kills"] = max(diff, 0.0) * scale
            dire["Kills"] = max(-diff, 0.0) * scale
            samples.append(MetricSample(match.match_id, minute, dire, radiant))
        matches.append(match)
        metrics[match.match_id] = samples
    return MatchDataset(matches=matches, metrics=metrics)


class TestSplit:
    def test_chronological_66_34(self):
        matches = [make_match(f"m{i:03d}", start_time=1000 - i) for i in range(100)]
        train, test = split_matches(matches, Chronological(0.66))
        assert len(train) == 66 and len(test) == 34
        assert max(m.start_time for m in train) <= min(m.start_time for m in test)

    def test_chronological_boundary_property(self, synth_small):
        train, test = split_matches(synth_small.matches, Chronological(0.66))
        assert len(train) + len(test) == len(synth_small.matches)
        assert max(m.start_time for m in train) <= min(m.start_time for m in test)
        assert {m.match_id for m in train}.isdisjoint({m.match_id for m in test})

    def test_single_match_cannot_split(self):
        with pytest.raises(EmptySide):
            split_matches([make_match("m1")], Chronological(0.66))

    def test_bad_fraction(self):
        matches = [make_match(f"m{i}") for i in range(4)]
        with pytest.raises(InvalidConfig):
            split_matches(matches, Chronological(1.0))

    def test_tournament_holdout(self, synth_small):
        train, test = split_matches(synth_small.matches,
                                    TournamentHoldout(SYNTH_TOURNAMENT_ID))
        expected = sum(1 for m in synth_small.matches
                       if m.tournament_id == SYNTH_TOURNAMENT_ID)
        assert len(test) == expected
        assert len(train) == len(synth_small.matches) - expected
        assert all(m.tournament_id == SYNTH_TOURNAMENT_ID for m in test)

    def test_unknown_tournament(self, synth_small):
        with pytest.raises(UnknownTournament):
            split_matches(synth_small.matches, TournamentHoldout("nope"))

    def test_empty_train_side(self):
        matches = [make_match("m1", pro=True, tournament="cup"),
                   make_match("m2", pro=True, tournament="cup")]
        with pytest.raises(EmptySide):
            split_matches(matches, TournamentHoldout("cup"))


class TestEvaluate:
    def test_confusion_is_consistent(self, synth_small):
        run = RunConfig(run_id="r", representation="hero", learner="lr",
                        lr=LrConfig(), selection="all", split=Chronological(0.66))
        report = evaluate(run, synth_small)
        assert report.tp + report.tn + report.fp + report.fn == report.test_size
        assert report.accuracy == (report.tp + report.tn) / report.test_size
        assert 0.0 <= report.accuracy <= 1.0

    def test_single_class_test_side_degenerate(self):
        # all test matches are Radiant wins; accuracy = fraction predicted Radiant
        matches = []
        for i in range(30):
            winner = MatchOutcome.RADIANT_WIN if (i >= 20 or i % 2 == 0) else MatchOutcome.DIRE_WIN
            matches.append(make_match(f"m{i:02d}", start_time=i, winner=winner))
        dataset = MatchDataset(matches=matches, metrics={}, roster_size=113)
        run = RunConfig(run_id="r", representation="hero", learner="lr",
                        selection="all", split=Chronological(0.66))
        report = evaluate(run, dataset)
        assert report.fp == 0 and report.tn == 0  # no Dire rows in test
        assert report.accuracy == report.tp / report.test_size

    def test_unknown_single_feature(self, synth_small):
        run = RunConfig(run_id="r", representation="ingame", learner="lr",
                        selection="single", single_feature="Nope_R-D",
                        split=Chronological(0.66))
        with pytest.raises(UnknownFeature):
            evaluate(run, synth_small)

    def test_bare_variant_resolves_to_final_minute(self, synth_small):
        run = RunConfig(run_id="r", representation="ingame", t=20, learner="lr",
                        lr=LrConfig(standardize=True),
                        selection="single", single_feature="Kills_R-D",
                        split=Chronological(0.66))
        report = evaluate(run, synth_small)
        assert report.selected_features == ["Kills_R-D@20"]

    def test_selection_and_training_see_train_rows_only(self, synth_small, monkeypatch):
        run = RunConfig(run_id="r", representation="ingame", t=20, learner="lr",
                        lr=LrConfig(standardize=True), selection="cfs",
                        split=Chronological(0.66))
        train_matches, test_matches = split_matches(synth_small.matches, run.split)
        n_train = sum(1 for m in train_matches if m.duration_minutes >= 20)
        n_test = sum(1 for m in test_matches if m.duration_minutes >= 20)
        seen_rows = []

        original_select = winpred.selection.select_features
        original_train = winpred.logistic.train_lr

        def spy_select(X, y, *args, **kwargs):
            seen_rows.append(("select", X.shape[0]))
            return original_select(X, y, *args, **kwargs)

        def spy_train(X, y, *args, **kwargs):
            seen_rows.append(("train", np.asarray(X).shape[0]))
            return original_train(X, y, *args, **kwargs)

        monkeypatch.setattr(winpred.selection, "select_features", spy_select)
        monkeypatch.setattr(winpred.logistic, "train_lr", spy_train)
        report = evaluate(run, synth_small)
        assert report.train_size == n_train and report.test_size == n_test
        assert seen_rows and all(rows == n_train for _, rows in seen_rows)

    def test_empty_test_windows(self):
        # test-side matches all end before minute 20
        matches = [make_match(f"m{i:02d}", start_time=i, duration=40 if i < 20 else 10)
                   for i in range(30)]
        metrics = {}
        for m in matches:
            samples = []
            for minute in range(m.duration_minutes + 1):
                flat = {k: float(minute) for k in METRICS}
                samples.append(MetricSample(m.match_id, minute, dict(flat), dict(flat)))
            metrics[m.match_id] = samples
        dataset = MatchDataset(matches=matches, metrics=metrics)
        run = RunConfig(run_id="r", representation="ingame", t=20, learner="lr",
                        split=Chronological(0.66))
        with pytest.raises(EmptySide):
            evaluate(run, dataset)

    def test_train_model_trains_on_everything(self, synth_small):
        run = RunConfig(run_id="r", representation="hero", learner="rf",
                        rf=RfConfig(num_trees=5, seed=1), selection="all")
        model, selected, skipped = train_model(run, synth_small)
        assert len(model.trees) == 5
        assert len(selected) == synth_small.roster_size
        assert skipped == 0


@pytest.fixture(scope="module")
def reports(synth_small):
    runs = []
    for learner in ("lr", "rf"):
        for sel in ("single", "all", "cfs"):
            runs.append(RunConfig(
                run_id=f"{learner}-{sel}",
                representation="ingame", t=20, learner=learner,
                lr=LrConfig(standardize=True),
                rf=RfConfig(num_trees=10, seed=4),
                selection=sel, single_feature="Kills_R-D",
                split=Chronological(0.66),
            ))
    return runs, sweep(runs, synth_small)


class TestSweep:
    def test_cardinality(self, reports):
        runs, results = reports
        assert len(results) == 6
        assert [r.run.run_id for r in results] == [r.run_id for r in runs]
        assert all(not r.error for r in results)

    def test_duplicate_config_identical(self, synth_small):
        run = RunConfig(run_id="a", representation="hero", learner="lr",
                        selection="all", split=Chronological(0.66))
        twin = RunConfig(run_id="b", representation="hero", learner="lr",
                         selection="all", split=Chronological(0.66))
        a, b = sweep([run, twin], synth_small)
        assert a.accuracy == b.accuracy
        assert (a.tp, a.tn, a.fp, a.fn) == (b.tp, b.tn, b.fp, b.fn)

    def test_best_flag_is_argmax(self, reports):
        _, results = reports
        best_accuracy = max(r.accuracy for r in results)
        markdown = format_sweep_markdown(results)
        bolded = [line for line in markdown.splitlines() if "**" in line]
        assert bolded, "one cell must be flagged"
        assert f"**{100 * best_accuracy:.4f}" in markdown
        table = format_sweep_table_csv(results)
        starred = [cell for line in table.splitlines() for cell in line.split(",")
                   if cell.endswith("*")]
        assert starred == [f"{100 * best_accuracy:.4f}*"]

    def test_errors_recorded_not_raised(self, synth_small):
        bad = RunConfig(run_id="bad", representation="ingame", t=20, learner="lr",
                        selection="single", single_feature="Ghost_R-D",
                        split=Chronological(0.66))
        good = RunConfig(run_id="good", representation="hero", learner="lr",
                         selection="all", split=Chronological(0.66))
        results = sweep([bad, good], synth_small)
        assert results[0].error.startswith("UnknownFeature")
        assert not results[1].error

    def test_workers_match_serial(self, synth_small):
        runs = [RunConfig(run_id=f"r{i}", representation="hero", learner="lr",
                          selection="all", split=Chronological(0.66))
                for i in range(3)]
        serial = sweep(runs, synth_small, workers=1)
        parallel = sweep(runs, synth_small, workers=3)
        assert [r.accuracy for r in serial] == [r.accuracy for r in parallel]

    def test_workers_env_var_default(self, synth_small, monkeypatch):
        import winpred.evaluation as ev_module

        seen = []
        original = ev_module.ThreadPoolExecutor

        class Probe(original):
            def __init__(self, max_workers=None, **kwargs):
                seen.append(max_workers)
                super().__init__(max_workers=max_workers, **kwargs)

        monkeypatch.setenv("WINPRED_WORKERS", "2")
        monkeypatch.setattr(ev_module, "ThreadPoolExecutor", Probe)
        runs = [RunConfig(run_id=f"r{i}", representation="hero", learner="lr",
                          selection="all", split=Chronological(0.66))
                for i in range(2)]
        sweep(runs, synth_small)
        assert seen == [2]

    def test_report_csv_schema(self, tmp_path, reports):
        _, results = reports
        path = tmp_path / "reports.csv"
        write_reports_csv(results, path)
        lines = path.read_text().splitlines()
        assert lines[0] == ("run_id,representation,learner,selection,split,accuracy,"
                            "tp,tn,fp,fn,train_size,test_size,selected_features")
        assert len(lines) == 7
        first = lines[1].split(",")
        assert first[0] == "lr-single"
        assert first[1] == "ingame-t20"
        assert first[3] == "single:Kills_R-D"
        assert first[4] == "chronological-0.66"
        assert float(first[5]) == pytest.approx(results[0].accuracy, abs=5e-7)


class TestQuadrant:
    def test_hand_made_example(self):
        dataset = kills_dataset(
            [3, 1, -2, -4], t=5,
            winners=[MatchOutcome.RADIANT_WIN, MatchOutcome.DIRE_WIN,
                     MatchOutcome.DIRE_WIN, MatchOutcome.RADIANT_WIN],
        )
        stats = quadrant_stats(dataset, 5)
        assert stats.radiant_above == 0.5
        assert stats.dire_below == 0.5
        assert stats.n_above == 2 and stats.n_below == 2 and stats.n_zero == 0

    def test_matches_independent_recount(self, synth_small):
        t = 20
        stats = quadrant_stats(synth_small, t)
        above_r = above = below_d = below = zero = 0
        for match in synth_small.matches:
            if match.duration_minutes < t:
                continue
            sample = synth_small.metrics[match.match_id][t]
            assert sample.minute == t
            diff = sample.radiant["Kills"] - sample.dire["Kills"]
            if diff > 0:
                above += 1
                above_r += match.winner is MatchOutcome.RADIANT_WIN
            elif diff < 0:
                below += 1
                below_d += match.winner is MatchOutcome.DIRE_WIN
            else:
                zero += 1
        assert stats.radiant_above == above_r / above
        assert stats.dire_below == below_d / below
        assert (stats.n_above, stats.n_below, stats.n_zero) == (above, below, zero)
        assert stats.n_above + stats.n_below + stats.n_zero == len(stats.points)

    def test_empty_dataset(self):
        dataset = kills_dataset([1], t=5, winners=[MatchOutcome.RADIANT_WIN])
        with pytest.raises(EmptyDataset):
            quadrant_stats(dataset, 50)


class TestGridParsing:
    def test_blocks_and_comments(self):
        text = """
# a grid of two runs
representation = hero
learner = lr
selection = all

representation = ingame  # window data
t = 20
learner = rf
trees = 25
selection = cfs
split = tournament
tournament = kiev2017
"""
        runs = parse_grid(text)
        assert len(runs) == 2
        assert runs[0].run_id == "run1" and runs[0].representation == "hero"
        assert runs[0].lr.standardize is False  # auto resolves per representation
        assert runs[1].rf.num_trees == 25
        assert runs[1].lr.standardize is True
        assert runs[1].split == TournamentHoldout("kiev2017")

    def test_unknown_key_rejected(self):
        with pytest.raises(InvalidConfig, match="unknown grid key"):
            parse_grid("representation = hero\nfrobnicate = 3\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(InvalidConfig, match="duplicate"):
            parse_grid("learner = lr\nlearner = rf\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(InvalidConfig, match="missing"):
            parse_grid("learner lr\n")

    def test_empty_grid_rejected(self):
        with pytest.raises(InvalidConfig, match="no runs"):
            parse_grid("# nothing here\n")

    def test_single_requires_feature(self):
        with pytest.raises(InvalidConfig, match="single_feature"):
            parse_grid("selection = single\n")

    def test_standardize_override(self):
        run = run_config_from_dict({"representation": "ingame", "standardize": "false"}, "x")
        assert run.lr.standardize is False

    def test_bad_value_reported(self):
        with pytest.raises(InvalidConfig, match="bad grid value"):
            parse_grid("t = twenty\n")
