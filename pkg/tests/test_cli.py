import csv

import pytest

from winpred.cli import main
from winpred.forest import load_rf
from winpred.logistic import load_lr
from winpred.matchdata import MATCH_HEADER

GRID = """\
id = lr-single
representation = ingame
t = 20
learner = lr
selection = single
single_feature = Kills_R-D
split = chronological
train_fraction = 0.66

id = rf-all
representation = ingame
t = 20
learner = rf
trees = 8
seed = 3
selection = all
split = chronological
train_fraction = 0.66
"""


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    matches = root / "matches.csv"
    metrics = root / "metrics.csv"
    code = main([
        "synth", "--n", "80", "--seed", "5", "--mean-duration", "30",
        "--out-matches", str(matches), "--out-metrics", str(metrics),
    ])
    assert code == 0
    return matches, metrics


def data_args(corpus):
    matches, metrics = corpus
    return ["--matches", str(matches), "--metrics", str(metrics)]


class TestSynth:
    def test_deterministic_bytes(self, tmp_path):
        outputs = []
        for name in ("a", "b"):
            m = tmp_path / f"matches-{name}.csv"
            k = tmp_path / f"metrics-{name}.csv"
            assert main(["synth", "--n", "30", "--seed", "7",
                         "--out-matches", str(m), "--out-metrics", str(k)]) == 0
            outputs.append((m.read_bytes(), k.read_bytes()))
        assert outputs[0] == outputs[1]

    def test_bad_config_is_validation_error(self, tmp_path, capsys):
        code = main(["synth", "--n", "0",
                     "--out-matches", str(tmp_path / "m.csv"),
                     "--out-metrics", str(tmp_path / "k.csv")])
        assert code == 1
        assert "n_matches" in capsys.readouterr().err


class TestIngest:
    def test_valid_corpus(self, corpus, capsys):
        assert main(["ingest", *data_args(corpus)]) == 0
        out = capsys.readouterr().out
        assert "80 matches OK" in out

    def test_corrupt_file_exits_one(self, tmp_path, capsys):
        bad = tmp_path / "matches.csv"
        bad.write_text(MATCH_HEADER + "\nm1,0,true,,42\n", encoding="utf-8")
        assert main(["ingest", "--matches", str(bad)]) == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_flag_exits_two(self, corpus):
        with pytest.raises(SystemExit) as info:
            main(["ingest", *data_args(corpus), "--frobnicate"])
        assert info.value.code == 2

    def test_missing_subcommand_exits_two(self):
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 2


class TestFeaturize:
    def test_hero_output(self, corpus, tmp_path):
        out = tmp_path / "hero.csv"
        assert main(["featurize", "--matches", str(corpus[0]),
                     "--rep", "hero", "--out", str(out)]) == 0
        with open(out, newline="") as handle:
            rows = list(csv.reader(handle))
        assert len(rows) == 81
        assert len(rows[0]) == 2 + 113

    def test_window_output(self, corpus, tmp_path):
        out = tmp_path / "win.csv"
        assert main(["featurize", *data_args(corpus), "--rep", "ingame",
                     "--t", "20", "--out", str(out)]) == 0
        with open(out, newline="") as handle:
            rows = list(csv.reader(handle))
        assert len(rows[0]) == 2 + 5 + 150

    def test_ingame_needs_metrics(self, corpus, tmp_path, capsys):
        code = main(["featurize", "--matches", str(corpus[0]),
                     "--rep", "ingame", "--out", str(tmp_path / "w.csv")])
        assert code == 2
        assert "--metrics" in capsys.readouterr().err


class TestTrainEval:
    def test_train_lr_model_roundtrip(self, corpus, tmp_path):
        out = tmp_path / "model.lr"
        assert main(["train", *data_args(corpus), "--rep", "ingame", "--learner", "lr",
                     "--selection", "single", "--single-feature", "Kills_R-D",
                     "--model-out", str(out)]) == 0
        model = load_lr(out)
        assert model.feature_names == ["Kills_R-D@20"]
        assert model.config.standardize is True  # auto for ingame

    def test_train_rf_model_roundtrip(self, corpus, tmp_path):
        out = tmp_path / "model.rf"
        assert main(["train", *data_args(corpus), "--rep", "hero", "--learner", "rf",
                     "--trees", "4", "--model-out", str(out)]) == 0
        model = load_rf(out)
        assert len(model.trees) == 4
        assert len(model.feature_names) == 113

    def test_eval_prints_report(self, corpus, capsys):
        assert main(["eval", *data_args(corpus), "--rep", "ingame", "--learner", "lr",
                     "--selection", "single", "--single-feature", "Kills_R-D"]) == 0
        out = capsys.readouterr().out
        assert "accuracy" in out

    def test_unknown_single_feature_exits_two(self, corpus, capsys):
        code = main(["eval", *data_args(corpus), "--rep", "ingame",
                     "--selection", "single", "--single-feature", "Bogus_R-D"])
        assert code == 2
        err = capsys.readouterr().err
        assert "--single-feature" in err and "Bogus_R-D" in err


class TestSweepCommand:
    def test_hero_only_grid_needs_no_metrics(self, corpus, tmp_path, capsys):
        grid = tmp_path / "grid.txt"
        grid.write_text("representation = hero\nlearner = lr\nselection = all\n",
                        encoding="utf-8")
        out_dir = tmp_path / "hero-sweep"
        assert main(["sweep", "--matches", str(corpus[0]), "--grid", str(grid),
                     "--out-dir", str(out_dir)]) == 0
        capsys.readouterr()
        assert (out_dir / "reports.csv").exists()

    def test_matches_individual_eval_runs(self, corpus, tmp_path, capsys):
        grid = tmp_path / "grid.txt"
        grid.write_text(GRID, encoding="utf-8")
        out_dir = tmp_path / "sweep"
        assert main(["sweep", *data_args(corpus), "--grid", str(grid),
                     "--out-dir", str(out_dir)]) == 0
        capsys.readouterr()
        with open(out_dir / "reports.csv", newline="") as handle:
            rows = {row["run_id"]: row for row in csv.DictReader(handle)}
        assert set(rows) == {"lr-single", "rf-all"}

        single = tmp_path / "single.csv"
        assert main(["eval", *data_args(corpus), "--rep", "ingame", "--learner", "lr",
                     "--selection", "single", "--single-feature", "Kills_R-D",
                     "--report-out", str(single)]) == 0
        capsys.readouterr()
        with open(single, newline="") as handle:
            (row,) = list(csv.DictReader(handle))
        assert row["accuracy"] == rows["lr-single"]["accuracy"]
        assert (out_dir / "table.md").exists()
        assert (out_dir / "table.csv").exists()


class TestQuadrantDurations:
    def test_quadrant_points(self, corpus, tmp_path, capsys):
        out = tmp_path / "points.csv"
        assert main(["quadrant", *data_args(corpus), "--t", "20",
                     "--out", str(out)]) == 0
        assert "radiant_above" in capsys.readouterr().out
        with open(out, newline="") as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["match_id", "kills_r_minus_d", "winner"]
        assert len(rows) > 1

    def test_durations(self, corpus, tmp_path, capsys):
        out = tmp_path / "hist.csv"
        assert main(["durations", "--matches", str(corpus[0]), "--out", str(out)]) == 0
        assert ">= 20 min" in capsys.readouterr().out
        lines = out.read_text().splitlines()
        assert lines[0] == "duration_minutes,count,fraction"
        total = sum(int(line.split(",")[1]) for line in lines[1:])
        assert total == 80
