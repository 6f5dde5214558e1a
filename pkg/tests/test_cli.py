"""End-to-end tests of the command-line pipeline."""

import json
import shutil
from datetime import date as Date

import pytest

from reportsignal.cli import firewall_fence, main
from reportsignal.econometrics import read_panel
from reportsignal.market import load_calendar
from reportsignal.synthkit import write_dataset
from tests.helpers import small_dataset

ANALYZE_FILES = (
    "panel.csv",
    "regressions.txt",
    "regressions.csv",
    "industry.txt",
    "industry.csv",
    "mean_tests.txt",
    "mean_tests.csv",
    "daily_sentiment.dat",
    "daily_sentiment.gp",
    "analyze_report.json",
)


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("synthdata") / "data"
    write_dataset(small_dataset(seed=13), root, seed=13)
    return root


def run(*argv):
    return main([str(a) for a in argv])


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_full_pipeline_end_to_end(dataset_dir, tmp_path, capsys):
    config = dataset_dir / "config.json"

    assert run("ingest", "--config", config, "--out", tmp_path / "ingest") == 0
    ingest_report = read_json(tmp_path / "ingest" / "ingest_report.json")
    assert ingest_report["format_version"] == 1
    assert ingest_report["corpus"]["n_rejects"] == 0
    assert ingest_report["bars"]["n_rejects"] == 0
    for name in ("corpus.csv", "bars.csv", "indices.csv", "industry.csv", "calendar.txt"):
        assert (tmp_path / "ingest" / "cache" / name).exists()

    assert run("label", "--config", config, "--out", tmp_path / "label") == 0
    label_report = read_json(tmp_path / "label" / "label_report.json")
    counts = label_report["counts"]
    assert counts["positive"] + counts["neutral"] + counts["negative"] == label_report["n_pool"]
    assert label_report["n_pool"] > 0
    assert (tmp_path / "label" / "labels.csv").exists()

    assert run("score", "--config", config, "--out", tmp_path / "score") == 0
    score_report = read_json(tmp_path / "score" / "score_report.json")
    assert score_report["scorer"] == "external"
    assert score_report["n_scored"] > 0
    assert (tmp_path / "score" / "scores.csv").exists()

    assert run("analyze", "--config", config, "--out", tmp_path / "analyze") == 0
    stdout = capsys.readouterr().out
    assert "Pooled regressions (classical standard errors)" in stdout
    for name in ANALYZE_FILES:
        assert (tmp_path / "analyze" / name).exists(), name

    report = read_json(tmp_path / "analyze" / "analyze_report.json")
    assert report["format_version"] == 1
    assert report["panel"]["n_rows"] > 0
    assert report["panel"]["n_rows"] + report["panel"]["n_dropped"] == report["panel"]["n_pairs"]
    assert report["options"]["se"] == "classical"
    assert report["options"]["stars"] == "table3"
    calendar = load_calendar(dataset_dir / "calendar.txt")
    test_start = read_json(dataset_dir / "config.json")["test_start"]
    expected_fence = firewall_fence(calendar, Date.fromisoformat(test_start))
    assert report["fence"] == expected_fence.isoformat()

    rows = read_panel(tmp_path / "analyze" / "panel.csv")
    assert len(rows) == report["panel"]["n_rows"]


def test_analyze_is_deterministic_across_runs(dataset_dir, tmp_path):
    config = dataset_dir / "config.json"
    assert run("analyze", "--config", config, "--out", tmp_path / "a") == 0
    assert run("analyze", "--config", config, "--out", tmp_path / "b") == 0
    for name in ANALYZE_FILES:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_analyze_option_overrides_flow_into_outputs(dataset_dir, tmp_path):
    config = dataset_dir / "config.json"
    out = tmp_path / "robust"
    assert run("analyze", "--config", config, "--out", out,
               "--se", "robust", "--stars", "table4") == 0
    text = (out / "regressions.txt").read_text(encoding="utf-8")
    assert text.startswith("Pooled regressions (robust standard errors)")
    assert text.rstrip().endswith("* p-value < 0.1, ** p-value < 0.05, *** p-value < 0.01")
    report = read_json(out / "analyze_report.json")
    assert report["options"]["se"] == "robust"
    assert report["options"]["stars"] == "table4"


def test_lexicon_scorer_path(dataset_dir, tmp_path):
    config = dataset_dir / "config.json"
    out = tmp_path / "lexscore"
    assert run("score", "--config", config, "--out", out, "--scorer", "lexicon") == 0
    report = read_json(out / "score_report.json")
    assert report["scorer"] == "lexicon"
    assert report["n_scored"] > 0
    assert run("analyze", "--config", config, "--out", tmp_path / "lexanalyze",
               "--scorer", "lexicon") == 0


def test_synth_verb_writes_a_dataset(tmp_path):
    out = tmp_path / "generated"
    assert run("synth", "--out", out, "--seed", "3") == 0
    for name in ("corpus.csv", "bars.csv", "indices.csv", "industry.csv",
                 "calendar.txt", "scores.csv", "truth.json", "config.json"):
        assert (out / name).exists(), name
    truth = read_json(out / "truth.json")
    assert truth["seed"] == 3


def test_usage_errors_exit_one(dataset_dir, capsys):
    config = dataset_dir / "config.json"
    assert run("ingest") == 1  # no --config
    assert "requires --config" in capsys.readouterr().err
    assert run("frobnicate") == 1  # unknown verb
    assert main([]) == 1  # missing verb
    assert run("analyze", "--config", config, "--stars", "table9") == 1
    assert run("analyze", "--config", "/nonexistent/config.json") == 1


def test_bad_configs_exit_one(dataset_dir, tmp_path, capsys):
    base = read_json(dataset_dir / "config.json")

    def write_config(mutate):
        raw = dict(base)
        mutate(raw)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(raw), encoding="utf-8")
        return path

    for name in ("corpus.csv", "bars.csv", "indices.csv", "industry.csv",
                 "calendar.txt", "scores.csv"):
        shutil.copyfile(dataset_dir / name, tmp_path / name)

    # train range must strictly precede the test range
    overlap = write_config(lambda raw: raw.update(train_end=raw["test_end"]))
    assert run("ingest", "--config", overlap) == 1
    assert "strictly precede" in capsys.readouterr().err

    unknown = write_config(lambda raw: raw.update(surprise=1))
    assert run("ingest", "--config", unknown) == 1

    version = write_config(lambda raw: raw.update(format_version=99))
    assert run("ingest", "--config", version) == 1

    missing = write_config(lambda raw: raw.update(corpus="gone.csv"))
    assert run("ingest", "--config", missing) == 1
    assert "does not exist" in capsys.readouterr().err

    not_json = tmp_path / "broken.json"
    not_json.write_text("{", encoding="utf-8")
    assert run("ingest", "--config", not_json) == 1

    # calendar too short for the test range plus its lookback margins
    coverage = write_config(lambda raw: raw.update(test_end="2099-01-03"))
    assert run("ingest", "--config", coverage) == 1


def test_corrupt_market_data_exits_two(dataset_dir, tmp_path):
    clone = tmp_path / "data"
    shutil.copytree(dataset_dir, clone)
    bars = clone / "bars.csv"
    lines = bars.read_text(encoding="utf-8").splitlines()
    lines[0] = "totally,wrong,header"
    bars.write_text("\n".join(lines) + "\n", encoding="utf-8")
    assert run("ingest", "--config", clone / "config.json", "--out", tmp_path / "out") == 2


def test_empty_lexicon_with_lexicon_scorer_exits_one(dataset_dir, tmp_path, capsys):
    clone = tmp_path / "data"
    shutil.copytree(dataset_dir, clone)
    empty = tmp_path / "empty_lexicon.csv"
    empty.write_text("word,label\n", encoding="utf-8")
    raw = read_json(clone / "config.json")
    raw["lexicon"] = str(empty)
    raw["scorer"] = "lexicon"
    (clone / "config.json").write_text(json.dumps(raw), encoding="utf-8")
    assert run("score", "--config", clone / "config.json", "--out", tmp_path / "out") == 1
    assert "no entries" in capsys.readouterr().err


def test_degenerate_scores_exit_three(dataset_dir, tmp_path):
    """Identical scores for every report make the sentiment columns
    collinear with the constant, which must surface as a numerical
    failure, not a crash or a silent fit."""
    clone = tmp_path / "data"
    shutil.copytree(dataset_dir, clone)
    scores = clone / "scores.csv"
    lines = scores.read_text(encoding="utf-8").splitlines()
    rewritten = [lines[0]]
    for line in lines[1:]:
        report_id = line.split(",")[0]
        rewritten.append(f"{report_id},0.5,0.3,0.2")
    scores.write_text("\n".join(rewritten) + "\n", encoding="utf-8")
    assert run("analyze", "--config", clone / "config.json", "--out", tmp_path / "out") == 3


def test_missing_scores_detected_before_analysis(dataset_dir, tmp_path, capsys):
    clone = tmp_path / "data"
    shutil.copytree(dataset_dir, clone)
    raw = read_json(clone / "config.json")
    raw["scores"] = None
    (clone / "config.json").write_text(json.dumps(raw), encoding="utf-8")
    assert run("analyze", "--config", clone / "config.json", "--out", tmp_path / "out") == 1
    assert "requires a scores path" in capsys.readouterr().err
