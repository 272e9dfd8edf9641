import subprocess
import sys

import pytest

from essayemo.cli import main


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def labeled(tmp_path):
    return _write(tmp_path / "train.tsv",
                  "essay_id\tessay\temotion\n"
                  "1\tI didn't like THE news.\tSadness\n"
                  "2\tWe won!  Great.\tJoy\n"
                  "3\tSo sad, so sad.\tSadness\n")


def test_preprocess(labeled, tmp_path, capsys):
    out = tmp_path / "clean.tsv"
    assert main(["preprocess", "--in", str(labeled), "--out", str(out)]) == 0
    rows = out.read_text("utf-8").splitlines()
    assert rows[0] == "essay_id\tessay\temotion"
    # "did" is a stopword, the negation is kept
    assert rows[1] == "1\tnot like news\tSadness"
    assert main(["preprocess", "--in", str(labeled), "--out", str(out), "--no-stopwords",
                 "--morphology", "stem"]) == 0
    assert out.read_text("utf-8").splitlines()[2] == "2\twe won great\tJoy"


def test_distribution_and_splits(labeled, tmp_path, capsys):
    assert main(["distribution", "--in", str(labeled), "--histogram"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("label\tcount\nSadness\t2\nJoy\t1\n")
    assert "#" in out
    test = _write(tmp_path / "test.tsv", "essay_id\tessay\n9\tunlabeled text\n")
    assert main(["splits", "--train", str(labeled), "--test", str(test)]) == 0
    assert capsys.readouterr().out == "train\t3\ndev\t0\ntest\t1\ntotal\t4\n"


def test_evaluate(tmp_path, capsys):
    gold = _write(tmp_path / "gold.tsv", "essay_id\temotion\n1\tAnger\n2\tHope/Joy\n")
    pred = _write(tmp_path / "pred.tsv", "essay_id\temotion\n1\tAnger/Disgust\n2\tJoy\n")
    assert main(["evaluate", "--gold", str(gold), "--pred", str(pred), "--format", "tsv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "Metrics\tpred"
    assert lines[1] == "Micro F1-Score\t0.667"
    assert lines[3] == "Micro Jaccard\t0.500"


def test_evaluate_missing_ids(tmp_path, capsys):
    gold = _write(tmp_path / "gold.tsv", "1\tAnger\n2\tJoy\n")
    pred = _write(tmp_path / "pred.tsv", "1\tAnger\n")
    assert main(["evaluate", "--gold", str(gold), "--pred", str(pred)]) == 2
    assert "[evaluate] MissingIds" in capsys.readouterr().err


def test_compare(leaderboard_path, capsys):
    from essayemo.metrics import load_leaderboard

    team = next(r["team"] for r in load_leaderboard(leaderboard_path) if r["macro_f1"] == 0.2717)
    assert main(["compare", "--score", "0.2717", "--leaderboard", str(leaderboard_path),
                 "--exclude", team]) == 0
    assert capsys.readouterr().out.startswith("rank 10 of 13")


def test_synth_run_matrix(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path / "d")]) == 0
    cfg = capsys.readouterr().out.strip()
    assert main(["run", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "Macro F1-Score" in out
    assert main(["matrix", "--config", cfg, "--profiles", "GloVe,fastText"]) == 0
    header = capsys.readouterr().out.splitlines()[0].split()
    assert header == ["Metrics", "GloVe", "fastText"]


def test_run_failure_is_stage_tagged(tmp_path, capsys):
    cfg = _write(tmp_path / "bad.cfg", "data.train = missing.tsv\nprovider.stack = ft\n"
                 "provider.ft.kind = subword\nprovider.ft.dim = 8\nmodel.embedding_dim = 8\n"
                 "model.seq_len = 4\n")
    assert main(["run", "--config", str(cfg)]) == 2
    assert capsys.readouterr().err.startswith("error: [corpus]")


def test_console_script_module():
    done = subprocess.run([sys.executable, "-m", "essayemo.cli", "--help"],
                          capture_output=True, text=True)
    assert done.returncode == 0 and "matrix" in done.stdout
