import json

import pytest

from topiclass.cli import main, read_features, read_labels
from topiclass.config import ConfigError, RunConfig, build_run_config, read_config_file
from topiclass.corpus import SyntheticSpec, generate_synthetic_corpus, write_corpus
from topiclass.evaluation import BUNDLED_EXPERIMENT

FAST = "[run]\nfolds = 3\ninner_folds = 3\n[lda]\ntopics = 8\nepochs = 30\n"


@pytest.fixture
def small_corpus_file(tmp_path):
    path = tmp_path / "pages.jsonl"
    write_corpus(generate_synthetic_corpus(SyntheticSpec(n_classes=3, pages_per_class=10, seed=2)), path)
    return path


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_read_config_file(tmp_path):
    values = read_config_file(write(tmp_path / "c.ini", "[svm]\nC = 2.5\n[features]\nscale_bow = no\n"))
    assert values == {"C": 2.5, "scale_bow": False}


@pytest.mark.parametrize("text, msg", [("[run]\nnope = 1\n", "unknown key"), ("[svm]\nseed = 1\n", "belongs in"),
                                       ("[run]\nfolds = ten\n", "expected int")])
def test_config_file_errors(tmp_path, text, msg):
    with pytest.raises(ConfigError, match=msg):
        read_config_file(write(tmp_path / "c.ini", text))


def test_build_run_config_overrides():
    cfg = build_run_config({"topics": 12, "wp": 0.1, "seed": 7, "C": 3.0, "per_fold": True, "model": "svm"})
    exp = cfg.experiment
    assert exp.lda.n_topics == 12 and exp.weights.parent == 0.1 and exp.seed == 7
    assert exp.svm.C == 3.0 and exp.lda_per_fold and cfg.model == "svm"
    with pytest.raises(ConfigError):
        build_run_config({"wp": 2.0})


def test_run_config_validate(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        RunConfig(corpus=str(tmp_path / "missing.jsonl")).validate()
    with pytest.raises(ConfigError):
        RunConfig(approach="nope").validate()


def test_evaluate_defaults_on_bundled_corpus(tmp_path, capsys):
    out = tmp_path / "ev"
    assert main(["evaluate", "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    result = report["results"][0]
    assert result["approach"] == "topic_integrated" and result["model"] == "hsvm"
    assert result["confusion"]["counts"] and sum(map(sum, result["confusion"]["counts"])) == 480
    assert report["config"]["seed"] == BUNDLED_EXPERIMENT.seed
    assert report["config"]["run_config"]["experiment"]["lda"]["n_topics"] == BUNDLED_EXPERIMENT.lda.n_topics
    assert "macro" in (out / "report.txt").read_text()


def test_evaluate_twice_identical(tmp_path, small_corpus_file):
    cfg = write(tmp_path / "c.ini", FAST)
    for name in ("a", "b"):
        assert main(["evaluate", "--config", cfg, "--input", str(small_corpus_file), "--model", "svm",
                     "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_missing_corpus_writes_nothing(tmp_path, capsys):
    out = tmp_path / "ev"
    assert main(["evaluate", "--input", str(tmp_path / "none.jsonl"), "--out", str(out)]) == 1
    assert not out.exists()
    assert "not found" in capsys.readouterr().err


def test_outputs_are_write_once(tmp_path, small_corpus_file):
    out = tmp_path / "bow.txt"
    args = ["bow", "--input", str(small_corpus_file), "--min-df", "2", "--top-k", "20", "--out", str(out)]
    assert main(args) == 0
    before = out.read_bytes()
    assert main(args) == 1
    assert out.read_bytes() == before
    assert main(args + ["--force"]) == 0


def test_runtime_failure_names_stage(tmp_path, small_corpus_file, capsys):
    assert main(["bow", "--input", str(small_corpus_file), "--min-df", "1000", "--out",
                 str(tmp_path / "m.txt")]) == 2
    assert "vocabulary" in capsys.readouterr().err


def test_pipeline_through_files(tmp_path, small_corpus_file):
    c = str(small_corpus_file)
    lda = tmp_path / "lda"
    assert main(["lda", "--input", c, "--topics", "4", "--epochs", "20", "--alpha", "0.1", "--min-df", "2",
                 "--out", str(lda)]) == 0
    assert (lda / "model.txt").read_text().startswith("topiclass-lda-model 1\n# config ")
    idt = tmp_path / "idt.tsv"
    assert main(["integrate", "--input", c, "--theta", str(lda / "theta.tsv"), "--wp", "0.4", "--wc", "0",
                 "--ws", "0.3", "--out", str(idt)]) == 0
    assert read_features(idt).shape == (30, 4)
    ids, labels = read_labels(lda / "labels.tsv")
    assert len(ids) == 30 and len(set(labels)) == 3
    flat = tmp_path / "flat.json"
    assert main(["train-flat", "--features", str(idt), "--labels", str(lda / "labels.tsv"),
                 "--out", str(flat)]) == 0
    assert json.loads(flat.read_text())["config"]["command"] == "train-flat"

    ev = tmp_path / "ev"
    assert main(["evaluate", "--config", write(tmp_path / "c.ini", FAST), "--input", c, "--model", "svm",
                 "--out", str(ev)]) == 0
    tree = tmp_path / "tree.json"
    assert main(["build-hierarchy", "--cm", str(ev / "report.json"), "--out", str(tree)]) == 0
    assert (tmp_path / "tree.txt").exists()
    hsvm = tmp_path / "hsvm.json"
    assert main(["train-hsvm", "--tree", str(tree), "--features", str(idt), "--labels", str(lda / "labels.tsv"),
                 "--out", str(hsvm)]) == 0
    assert json.loads(hsvm.read_text())["format"] == "topiclass-hsvm"


def test_synth_and_ingest(tmp_path, capsys):
    out = tmp_path / "synth.jsonl"
    assert main(["synth", "--out", str(out)]) == 0
    meta = json.loads((tmp_path / "synth.jsonl.meta.json").read_text())
    assert meta["pages"] == 480 and meta["spec"]["seed"] == 1
    assert main(["ingest", "--input", str(out), "--stats"]) == 0
    assert "pages: 480" in capsys.readouterr().out


def test_sweep_command(tmp_path, small_corpus_file):
    out = tmp_path / "sw"
    assert main(["sweep", "--config", write(tmp_path / "c.ini", FAST), "--input", str(small_corpus_file),
                 "--model", "svm", "--step", "1.0", "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert len(report["results"]) == 8 and len(report["best"]) == 3
