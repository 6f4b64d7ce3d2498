"""``topiclass`` command-line front end.

Every subcommand accepts ``--config FILE`` (INI, see :mod:`topiclass.config`);
flags given on the command line override values from the file. Outputs are
write-once: an existing output path is refused unless ``--force`` is given.

Exit status: 0 success, 1 invalid configuration or input (nothing is
written), 2 failure while running a stage.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .config import ConfigError, RunConfig, build_run_config, read_config_file
from .corpus import BUNDLED_SYNTHETIC, Corpus, CorpusError, generate_synthetic_corpus, load_corpus, write_corpus
from .evaluation import (BUNDLED_EXPERIMENT, cross_validate, derive_seed,
                         format_results_table, sweep_weights, worker_count)
from .features import (MinMaxScaler, build_term_doc_matrix, build_vocabulary, information_gain,
                       read_triplets, select_top_k, tokenize_corpus, write_triplets)
from .hierarchy import ConfusionMatrix, Dendrogram, build_dendrogram, compute_apcm, train_hsvm
from .neighbors import NeighborTopicMatrices, inp_integrate
from .svm import train_multiclass
from .topicmodel import read_matrix, train_lda, write_matrix

logger = logging.getLogger("topiclass")

ARTIFACT_VERSION = 1


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


# ---------------------------------------------------------------- helpers

def _run_config(args) -> RunConfig:
    """File values, then flag overrides. The bundled corpus gets the bundled experiment settings."""
    values = read_config_file(args.config) if args.config else {}
    for key, value in vars(args).items():
        if key in ("config", "command", "force", "out", "handler", "verbose") or value is None:
            continue
        values[key] = value
    values = {k: v for k, v in values.items() if k in _CONFIG_KEYS}
    base = RunConfig() if values.get("corpus") else RunConfig(experiment=BUNDLED_EXPERIMENT)
    cfg = build_run_config(values, base)
    cfg.validate()
    return cfg


def _snapshot(cfg: RunConfig, command: str, **extra) -> dict:
    return {"command": command, "artifact_version": ARTIFACT_VERSION, "seed": cfg.experiment.seed,
            "run_config": cfg.to_dict(), **extra}


def _check_outputs(paths: Sequence[Path], force: bool) -> None:
    for p in paths:
        if p.exists() and not force:
            raise ConfigError(f"output exists (use --force to overwrite): {p}")


def _check_inputs(paths: Sequence[str | None]) -> None:
    for p in paths:
        if p is not None and not Path(p).exists():
            raise ConfigError(f"input not found: {p}")


def _load(cfg: RunConfig) -> Corpus:
    if cfg.corpus is None:
        return generate_synthetic_corpus(BUNDLED_SYNTHETIC)
    return load_corpus(cfg.corpus)


def _write_json(path: Path, obj: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _write_labels(path: Path, ids: Sequence[str], labels: Sequence[str], snapshot: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# config " + json.dumps(snapshot, sort_keys=True) + "\n")
        for pid, lab in zip(ids, labels):
            fh.write(f"{pid}\t{lab}\n")


def read_labels(path: str | Path) -> tuple[list[str], list[str]]:
    """``id<TAB>label`` lines (``#`` comments skipped)."""
    ids, labels = [], []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[1]:
            raise ValueError(f"{path}:{lineno}: expected 'id<TAB>label'")
        ids.append(parts[0])
        labels.append(parts[1])
    return ids, labels


def read_features(path: str | Path) -> np.ndarray:
    """Dense rows from either a triplet file or an id-keyed matrix file."""
    with open(path, encoding="utf-8") as fh:
        first = next((ln for ln in fh if ln.strip() and not ln.startswith("#")), "")
    if "\t" in first:
        return read_matrix(path)[1]
    return read_triplets(path).toarray()


def _features_and_labels(features: str, labels: str) -> tuple[np.ndarray, list[str]]:
    X = read_features(features)
    _, y = read_labels(labels)
    if X.shape[0] != len(y):
        raise ValueError(f"{features} has {X.shape[0]} rows but {labels} has {len(y)} labels")
    return X, y


def _stage(name: str, fn: Callable, *a, **kw):
    try:
        return fn(*a, **kw)
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        raise StageError(name, str(exc)) from exc


# ---------------------------------------------------------------- subcommands

def cmd_ingest(args, cfg: RunConfig) -> None:
    corpus = _stage("ingest", _load, cfg)
    n_links = sum(len(p.outlinks) for p in corpus)
    print(f"pages: {len(corpus)}")
    print(f"categories: {len(corpus.categories)}")
    print(f"links: {n_links} (dropped {corpus.dropped_links})")
    if args.stats:
        hist = corpus.label_histogram()
        for cat in corpus.categories:
            print(f"  {cat}\t{hist[cat]}")


def cmd_synth(args, cfg: RunConfig) -> None:
    out = Path(args.out)
    spec = replace(BUNDLED_SYNTHETIC, seed=args.seed) if args.seed is not None else BUNDLED_SYNTHETIC
    corpus = _stage("synth", generate_synthetic_corpus, spec)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_corpus(corpus, out)
    _write_json(out.with_name(out.name + ".meta.json"),
                {"format": "topiclass-synthetic", "version": ARTIFACT_VERSION, "seed": spec.seed,
                 "spec": asdict(spec), "pages": len(corpus)})


def cmd_bow(args, cfg: RunConfig) -> None:
    out = Path(args.out)
    exp = cfg.experiment
    corpus = _stage("ingest", _load, cfg)
    tokens = tokenize_corpus(corpus)
    vocab = _stage("vocabulary", build_vocabulary, tokens, exp.min_df)
    tdm = build_term_doc_matrix(tokens, vocab)
    ig = information_gain(tdm, corpus.labels)
    vocab, tdm = _stage("select", select_top_k, ig, min(exp.top_k, len(vocab)), tdm)
    snap = _snapshot(cfg, "bow")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_triplets(tdm, out, ["topiclass-bow 1", "config " + json.dumps(snap, sort_keys=True)])
    vocab.save(out.with_name(out.name + ".vocab"))
    _write_labels(out.with_name(out.name + ".labels"), corpus.ids, corpus.labels, snap)


def cmd_lda(args, cfg: RunConfig) -> None:
    out = Path(args.out)
    exp = cfg.experiment
    corpus = _stage("ingest", _load, cfg)
    tokens = tokenize_corpus(corpus)
    vocab = _stage("vocabulary", build_vocabulary, tokens, exp.min_df)
    tokens = [[t for t in doc if t in vocab] for doc in tokens]
    lda_cfg = replace(exp.lda, seed=derive_seed(exp.seed, "lda"))
    model, theta = _stage("lda", train_lda, tokens, vocab, lda_cfg)
    snap = _snapshot(cfg, "lda", lda_seed=lda_cfg.seed)
    model.save(out, snap)
    header = ["topiclass-theta 1", "config " + json.dumps(snap, sort_keys=True)]
    write_matrix(out / "theta.tsv", corpus.ids, theta, header)
    _write_labels(out / "labels.tsv", corpus.ids, corpus.labels, snap)


def cmd_integrate(args, cfg: RunConfig) -> None:
    out = Path(args.out)
    corpus = _stage("ingest", _load, cfg)
    ids, theta = _stage("read-theta", read_matrix, args.theta)
    if ids != list(corpus.ids):
        raise StageError("integrate", "theta ids do not match the corpus page ids")
    neigh = NeighborTopicMatrices.from_corpus(corpus, theta)
    idt = _stage("integrate", inp_integrate, theta, neigh, cfg.experiment.weights)
    snap = _snapshot(cfg, "integrate", theta=str(args.theta))
    out.parent.mkdir(parents=True, exist_ok=True)
    write_matrix(out, corpus.ids, idt, ["topiclass-idt 1", "config " + json.dumps(snap, sort_keys=True)])


def cmd_train_flat(args, cfg: RunConfig) -> None:
    X, y = _stage("read-features", _features_and_labels, args.features, args.labels)
    p = cfg.experiment.svm
    if args.scale:
        X = MinMaxScaler().fit_transform(X)
    model = _stage("train-flat", train_multiclass, X, y, p.C, p.kernel, p.tol, None, p.max_passes)
    _write_json(Path(args.out), {**model.to_dict(),
                                 "config": _snapshot(cfg, "train-flat", features=args.features,
                                                     labels=args.labels, scale=bool(args.scale))})


def cmd_build_hierarchy(args, cfg: RunConfig) -> None:
    cm = _stage("read-cm", _read_cm, args.cm)
    tree = _stage("build-hierarchy", build_dendrogram, compute_apcm(cm), cm.classes)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tree.save(out)
    doc = json.loads(out.read_text(encoding="utf-8"))
    doc["config"] = _snapshot(cfg, "build-hierarchy", cm=str(args.cm))
    _write_json(out, doc)


def _read_cm(path: str) -> ConfusionMatrix:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if "results" in doc:            # an evaluate report
        doc = doc["results"][0]["confusion"]
    return ConfusionMatrix.from_dict(doc)


def cmd_train_hsvm(args, cfg: RunConfig) -> None:
    tree = _stage("read-tree", Dendrogram.load, args.tree)
    X, y = _stage("read-features", _features_and_labels, args.features, args.labels)
    if args.scale:
        X = MinMaxScaler().fit_transform(X)
    p = cfg.experiment.svm
    model = _stage("train-hsvm", train_hsvm, tree, X, y, p.C, p.kernel, p.tol, p.max_passes)
    _write_json(Path(args.out), {**model.to_dict(),
                                 "config": _snapshot(cfg, "train-hsvm", tree=args.tree, features=args.features,
                                                     labels=args.labels, scale=bool(args.scale))})


def cmd_evaluate(args, cfg: RunConfig) -> None:
    out = Path(args.out)
    corpus = _stage("ingest", _load, cfg)
    result = _stage("evaluate", cross_validate, corpus, cfg.approach, cfg.model, cfg.experiment)
    snap = _snapshot(cfg, "evaluate")
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "report.json", {"format": "topiclass-report", "version": ARTIFACT_VERSION,
                                      "config": snap, "results": [result.to_dict()]})
    (out / "report.txt").write_text(format_results_table([result]), encoding="utf-8")
    (out / "confusion.json").write_text(json.dumps(result.confusion.to_dict(), indent=1) + "\n",
                                        encoding="utf-8")
    print(format_results_table([result]), end="")


def cmd_sweep(args, cfg: RunConfig) -> None:
    out = Path(args.out)
    corpus = _stage("ingest", _load, cfg)
    sweep = _stage("sweep", sweep_weights, corpus, cfg.model, cfg.step, cfg.experiment, None, worker_count())
    snap = _snapshot(cfg, "sweep")
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "report.json", {"format": "topiclass-sweep", "version": ARTIFACT_VERSION,
                                      "config": snap, "best": list(sweep.best.weights),
                                      "results": [r.to_dict() for r in sweep.rows]})
    (out / "report.txt").write_text(format_results_table(sweep.rows), encoding="utf-8")
    print(format_results_table(sweep.rows[:10]), end="")


# ---------------------------------------------------------------- parser

_CONFIG_KEYS = {"corpus", "approach", "model", "seed", "folds", "inner_folds", "step", "min_df", "top_k",
                "topics", "epochs", "alpha", "beta", "wp", "wc", "ws", "C", "degree", "coef0", "tol",
                "max_passes", "foldin_iterations", "per_fold"}


def _common(p: argparse.ArgumentParser, corpus: bool = False, out: str | None = "output path") -> None:
    p.add_argument("--config", help="INI configuration file; flags override its values")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--force", action="store_true", help="overwrite existing outputs")
    if corpus:
        p.add_argument("--input", dest="corpus", help="corpus file (default: bundled synthetic corpus)")
    if out:
        p.add_argument("--out", required=True, help=out)


def _svm_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--C", dest="C", type=float)
    p.add_argument("--degree", type=int)
    p.add_argument("--coef0", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-passes", dest="max_passes", type=int)


def _weight_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--wp", type=float, help="parent weight")
    p.add_argument("--wc", type=float, help="child weight")
    p.add_argument("--ws", type=float, help="sibling weight")


def _lda_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--topics", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)


def _experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--approach", choices=("bow", "topic_current", "topic_integrated"))
    p.add_argument("--model", choices=("svm", "hsvm"))
    p.add_argument("--folds", type=int)
    p.add_argument("--inner-folds", dest="inner_folds", type=int)
    p.add_argument("--min-df", dest="min_df", type=int)
    p.add_argument("--top-k", dest="top_k", type=int)
    _lda_flags(p)
    _weight_flags(p)
    _svm_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topiclass", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load a corpus and print statistics")
    _common(p, corpus=True, out=None)
    p.add_argument("--stats", action="store_true")
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("synth", help="write the bundled synthetic corpus")
    _common(p)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("bow", help="IG-selected bag-of-words matrix")
    _common(p, corpus=True)
    p.add_argument("--min-df", dest="min_df", type=int)
    p.add_argument("--top-k", dest="top_k", type=int)
    p.set_defaults(handler=cmd_bow)

    p = sub.add_parser("lda", help="train a topic model; writes model.txt, vocab.txt, theta.tsv")
    _common(p, corpus=True, out="output directory")
    p.add_argument("--min-df", dest="min_df", type=int)
    _lda_flags(p)
    p.set_defaults(handler=cmd_lda)

    p = sub.add_parser("integrate", help="neighbor-weighted topic matrix")
    _common(p, corpus=True)
    p.add_argument("--theta", required=True)
    _weight_flags(p)
    p.set_defaults(handler=cmd_integrate)

    p = sub.add_parser("train-flat", help="one-vs-one SVM")
    _common(p)
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--scale", action="store_true", help="min-max scale the feature columns")
    _svm_flags(p)
    p.set_defaults(handler=cmd_train_flat)

    p = sub.add_parser("build-hierarchy", help="dendrogram from a confusion matrix")
    _common(p)
    p.add_argument("--cm", required=True, help="confusion-matrix JSON or an evaluate report")
    p.set_defaults(handler=cmd_build_hierarchy)

    p = sub.add_parser("train-hsvm", help="hierarchical SVM over a dendrogram")
    _common(p)
    p.add_argument("--tree", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--scale", action="store_true", help="min-max scale the feature columns")
    _svm_flags(p)
    p.set_defaults(handler=cmd_train_hsvm)

    p = sub.add_parser("evaluate", help="k-fold cross-validation of one approach and model")
    _common(p, corpus=True, out="output directory")
    _experiment_flags(p)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("sweep", help="cross-validate a grid of neighbor weights")
    _common(p, corpus=True, out="output directory")
    _experiment_flags(p)
    p.add_argument("--step", type=float)
    p.set_defaults(handler=cmd_sweep)
    return parser


def _outputs(args) -> list[Path]:
    if getattr(args, "out", None) is None:
        return []
    out = Path(args.out)
    return {
        "synth": [out, out.with_name(out.name + ".meta.json")],
        "bow": [out, out.with_name(out.name + ".vocab"), out.with_name(out.name + ".labels")],
        "lda": [out / "model.txt", out / "vocab.txt", out / "theta.tsv", out / "labels.tsv"],
        "build-hierarchy": [out, out.with_suffix(".txt")],
        "evaluate": [out / "report.json", out / "report.txt", out / "confusion.json"],
        "sweep": [out / "report.json", out / "report.txt"],
    }.get(args.command, [out])


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _run_config(args)
        _check_inputs([getattr(args, k, None) for k in ("theta", "features", "labels", "tree", "cm")])
        _check_outputs(_outputs(args), args.force)
    except (ConfigError, ValueError) as exc:
        print(f"topiclass {args.command}: invalid configuration: {exc}", file=sys.stderr)
        return 1
    try:
        args.handler(args, cfg)
    except StageError as exc:
        print(f"topiclass {args.command}: stage {exc}", file=sys.stderr)
        return 2
    except (CorpusError, ValueError, OSError) as exc:
        print(f"topiclass {args.command}: stage {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
