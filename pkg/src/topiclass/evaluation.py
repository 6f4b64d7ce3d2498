"""Metrics, stratified k-fold cross-validation and the experiment drivers.

Precision and recall are macro averages over classes; F1 is computed from
the macro precision and macro recall.
"""
from __future__ import annotations

import hashlib
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Hashable, Sequence

import numpy as np

from .corpus import Corpus
from .features import (MinMaxScaler, build_term_doc_matrix, build_vocabulary, information_gain,
                       select_top_k, tokenize_corpus)
from .hierarchy import (ConfusionMatrix, Dendrogram, build_confusion_matrix, build_dendrogram,
                        compute_apcm, train_hsvm)
from .neighbors import NeighborTopicMatrices, NeighborWeights, inp_integrate
from .svm import KernelSpec, train_multiclass
from .topicmodel import LdaConfig, infer_topic_matrix, train_lda

logger = logging.getLogger(__name__)

APPROACHES = ("bow", "topic_current", "topic_integrated")
MODEL_KINDS = ("svm", "hsvm")
METRICS_NOTE = "precision/recall are macro averages; F1 = 2PR/(P+R) on the macro values"
WORKERS_ENV = "TOPICLASS_WORKERS"


def derive_seed(master: int, stage: str) -> int:
    """Stable per-stage seed: the first 4 bytes of sha256("master:stage")."""
    digest = hashlib.sha256(f"{master}:{stage}".encode()).digest()
    return int.from_bytes(digest[:4], "little")


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return asdict(self)


def compute_metrics(cm: ConfusionMatrix | np.ndarray) -> Metrics:
    """Accuracy plus macro precision, macro recall and their F1.

    A class never predicted has precision 0. Classes with no actual
    documents are left out of both macro averages.
    """
    v = np.asarray(cm.counts if isinstance(cm, ConfusionMatrix) else cm, dtype=np.float64)
    if v.ndim != 2 or v.shape[0] != v.shape[1] or v.size == 0:
        raise ValueError("confusion matrix must be square and non-empty")
    total = v.sum()
    if total == 0:
        raise ValueError("confusion matrix is empty (total = 0)")
    diag = np.diag(v)
    col = v.sum(axis=0)
    row = v.sum(axis=1)
    precision = np.divide(diag, col, out=np.zeros_like(diag), where=col > 0)
    recall = np.divide(diag, row, out=np.zeros_like(diag), where=row > 0)
    present = row > 0
    p = float(precision[present].mean())
    r = float(recall[present].mean())
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return Metrics(float(diag.sum() / total), p, r, f1)


@dataclass(frozen=True)
class FoldPlan:
    k: int
    fold_of: np.ndarray
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)


def stratified_folds(labels: Sequence[Hashable], k: int = 10, seed: int = 0) -> FoldPlan:
    """Shuffle each class, then deal its documents round-robin over the folds.

    Dealing continues from where the previous class stopped, which keeps
    the fold sizes within one of each other as well.
    """
    labels = list(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > len(labels):
        raise ValueError(f"k={k} exceeds the number of documents ({len(labels)})")
    rng = np.random.default_rng(seed)
    _, y = np.unique(np.array([str(x) for x in labels]), return_inverse=True)
    fold_of = np.empty(len(labels), dtype=np.int64)
    offset = 0
    for c in range(y.max() + 1):
        idx = rng.permutation(np.flatnonzero(y == c))
        fold_of[idx] = (offset + np.arange(len(idx))) % k
        offset = (offset + len(idx)) % k
    return FoldPlan(k, fold_of, seed)


@dataclass(frozen=True)
class SvmParams:
    C: float = 1.0
    degree: int = 1
    coef0: float = 1.0
    tol: float = 1e-3
    max_passes: int = 1000

    @property
    def kernel(self) -> KernelSpec:
        return KernelSpec(self.degree, self.coef0)

    def validate(self) -> None:
        if not self.C > 0 or not self.tol > 0 or self.max_passes < 1:
            raise ValueError("SVM needs C > 0, tol > 0 and max_passes >= 1")
        KernelSpec(self.degree, self.coef0)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a cross-validation run depends on.

    ``seed`` is the master seed; fold plans and LDA chains use seeds derived
    from it, so ``lda.seed`` is overridden inside the pipeline.
    """

    folds: int = 10
    inner_folds: int = 5
    seed: int = 0
    min_df: int = 3
    top_k: int = 2000
    scale_bow: bool = True
    scale_topics: bool = False
    lda: LdaConfig = field(default_factory=LdaConfig)
    lda_per_fold: bool = False
    foldin_iterations: int = 50
    weights: NeighborWeights = field(default_factory=NeighborWeights)
    svm: SvmParams = field(default_factory=SvmParams)

    def validate(self) -> None:
        if self.folds < 2 or self.inner_folds < 2:
            raise ValueError("folds and inner_folds must be >= 2")
        if self.min_df < 1 or self.top_k < 1 or self.foldin_iterations < 1:
            raise ValueError("min_df, top_k and foldin_iterations must be >= 1")
        self.lda.validate()
        self.svm.validate()

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lda"]["alpha"] = self.lda.alpha_value
        return d


# Pinned settings for the end-to-end runs on the bundled synthetic corpus. Short
# synthetic pages need a sparse document-topic prior; 50/K would swamp them.
BUNDLED_EXPERIMENT = ExperimentConfig(
    folds=10, inner_folds=5, seed=0, min_df=3, top_k=300,
    lda=LdaConfig(n_topics=40, epochs=500, alpha=0.1, beta=0.01, burn_in=0.5, sample_lag=10),
    svm=SvmParams(C=1.0, degree=1, coef0=1.0, tol=1e-3),
)
BUNDLED_SWEEP_STEP = 0.25


@dataclass
class ExperimentResult:
    approach: str
    model: str
    weights: tuple[float, float, float] | None
    confusion: ConfusionMatrix
    metrics: Metrics
    fold_metrics: list[Metrics]
    config: dict
    seed: int

    def to_dict(self) -> dict:
        return {"approach": self.approach, "model": self.model,
                "weights": list(self.weights) if self.weights is not None else None,
                "confusion": self.confusion.to_dict(), "metrics": self.metrics.to_dict(),
                "fold_metrics": [m.to_dict() for m in self.fold_metrics],
                "config": self.config, "seed": self.seed, "metrics_note": METRICS_NOTE}


def corpus_topics(corpus: Corpus, config: ExperimentConfig) -> np.ndarray:
    """Theta for every page from one LDA chain over the whole corpus (labels unused)."""
    tokens = tokenize_corpus(corpus)
    vocab = build_vocabulary(tokens, config.min_df)
    tokens = [[t for t in doc if t in vocab] for doc in tokens]
    lda = replace(config.lda, seed=derive_seed(config.seed, "lda"))
    _, theta = train_lda(tokens, vocab, lda)
    return theta


def _fold_topics(corpus, tokens, train, test, config, fold) -> np.ndarray:
    vocab = build_vocabulary([tokens[i] for i in train], config.min_df)
    train_tokens = [[t for t in tokens[i] if t in vocab] for i in train]
    lda = replace(config.lda, seed=derive_seed(config.seed, f"lda-fold{fold}"))
    model, theta_train = train_lda(train_tokens, vocab, lda)
    theta = np.zeros((len(corpus), model.n_topics))
    theta[train] = theta_train
    theta[test] = infer_topic_matrix(model, [tokens[i] for i in test], config.foldin_iterations,
                                     derive_seed(config.seed, f"foldin{fold}"))
    return theta


def _bow_features(tokens, labels, train, test, config) -> tuple[np.ndarray, np.ndarray]:
    train_docs = [tokens[i] for i in train]
    vocab = build_vocabulary(train_docs, config.min_df)
    tdm = build_term_doc_matrix(train_docs, vocab)
    ig = information_gain(tdm, [labels[i] for i in train])
    vocab, tdm = select_top_k(ig, min(config.top_k, len(vocab)), tdm)
    Xtr = tdm.toarray().astype(np.float64)
    Xte = build_term_doc_matrix([tokens[i] for i in test], vocab).toarray().astype(np.float64)
    if config.scale_bow:
        scaler = MinMaxScaler().fit(Xtr)
        Xtr, Xte = scaler.transform(Xtr), scaler.transform(Xte)
    return Xtr, Xte


def hierarchy_from_inner_cv(X: np.ndarray, labels: Sequence, classes: Sequence, config: ExperimentConfig,
                            seed: int) -> tuple[Dendrogram, ConfusionMatrix]:
    """Dendrogram from the pooled confusion matrix of a flat-SVM CV on (X, labels)."""
    labels = list(labels)
    plan = stratified_folds(labels, config.inner_folds, seed)
    cm = ConfusionMatrix(np.zeros((len(classes), len(classes)), dtype=np.int64), tuple(classes))
    p = config.svm
    for f in range(plan.k):
        tr, te = plan.train_indices(f), plan.test_indices(f)
        model = train_multiclass(X[tr], [labels[i] for i in tr], p.C, p.kernel, p.tol, classes, p.max_passes)
        cm = cm + build_confusion_matrix([labels[i] for i in te], model.predict(X[te]), classes)
    return build_dendrogram(compute_apcm(cm), classes), cm


def fit_predict(model_kind: str, Xtr: np.ndarray, ytr: Sequence, Xte: np.ndarray, classes: Sequence,
                config: ExperimentConfig, seed: int = 0) -> list:
    """Train a flat or hierarchical SVM on the training rows and label the test rows."""
    p = config.svm
    if model_kind == "svm":
        model = train_multiclass(Xtr, ytr, p.C, p.kernel, p.tol, classes, p.max_passes)
        return model.predict(Xte)
    if model_kind == "hsvm":
        tree, _ = hierarchy_from_inner_cv(Xtr, ytr, classes, config, seed)
        return train_hsvm(tree, Xtr, ytr, p.C, p.kernel, p.tol, p.max_passes).predict(Xte)
    raise ValueError(f"unknown model kind {model_kind!r}")


def cross_validate(corpus: Corpus, approach: str, model_kind: str, config: ExperimentConfig = ExperimentConfig(),
                   theta: np.ndarray | None = None) -> ExperimentResult:
    """k-fold CV of one feature approach and one classifier.

    ``theta`` may carry precomputed whole-corpus topic rows (as from
    :func:`corpus_topics` with the same config) to skip LDA training; it is
    ignored when ``config.lda_per_fold`` is set.
    """
    if approach not in APPROACHES:
        raise ValueError(f"approach must be one of {APPROACHES}")
    if model_kind not in MODEL_KINDS:
        raise ValueError(f"model kind must be one of {MODEL_KINDS}")
    config.validate()
    labels = corpus.labels
    classes = corpus.categories
    plan = stratified_folds(labels, config.folds, derive_seed(config.seed, "folds"))
    tokens = tokenize_corpus(corpus) if approach == "bow" or config.lda_per_fold else None

    if approach != "bow" and not config.lda_per_fold:
        if theta is None:
            theta = corpus_topics(corpus, config)
        feats = _topic_feature_matrix(corpus, theta, approach, config)

    pooled = ConfusionMatrix(np.zeros((len(classes), len(classes)), dtype=np.int64), classes)
    fold_metrics = []
    for f in range(plan.k):
        train, test = plan.train_indices(f), plan.test_indices(f)
        if approach == "bow":
            Xtr, Xte = _bow_features(tokens, labels, train, test, config)
        else:
            if config.lda_per_fold:
                feats = _topic_feature_matrix(corpus, _fold_topics(corpus, tokens, train, test, config, f),
                                              approach, config)
            Xtr, Xte = feats[train], feats[test]
            if config.scale_topics:
                scaler = MinMaxScaler().fit(Xtr)
                Xtr, Xte = scaler.transform(Xtr), scaler.transform(Xte)
        pred = fit_predict(model_kind, Xtr, [labels[i] for i in train], Xte, classes, config,
                           derive_seed(config.seed, f"inner-folds{f}"))
        cm = build_confusion_matrix([labels[i] for i in test], pred, classes)
        fold_metrics.append(compute_metrics(cm))
        pooled = pooled + cm
        logger.info("%s/%s fold %d: accuracy %.4f", approach, model_kind, f, fold_metrics[-1].accuracy)

    weights = config.weights.as_tuple() if approach == "topic_integrated" else None
    return ExperimentResult(approach, model_kind, weights, pooled, compute_metrics(pooled), fold_metrics,
                            config.to_dict(), config.seed)


def _topic_feature_matrix(corpus, theta, approach, config) -> np.ndarray:
    if approach == "topic_current":
        return theta
    return inp_integrate(theta, NeighborTopicMatrices.from_corpus(corpus, theta), config.weights)


def weight_grid(step: float) -> list[tuple[float, float, float]]:
    """All (parent, child, sibling) triples on a grid of ``step`` over [0, 1]."""
    if not 0 < step <= 1:
        raise ValueError("step must lie in (0, 1]")
    n = int(np.floor(1.0 / step + 1e-9))
    values = [round(i * step, 10) for i in range(n + 1)]
    return [(p, c, s) for p in values for c in values for s in values]


@dataclass
class SweepResult:
    model: str
    rows: list[ExperimentResult]            # sorted by F1, best first

    @property
    def best(self) -> ExperimentResult:
        return self.rows[0]

    def row(self, weights: tuple[float, float, float]) -> ExperimentResult:
        for r in self.rows:
            if r.weights == tuple(weights):
                return r
        raise KeyError(weights)


def _sweep_point(args):
    corpus, model_kind, weights, config, theta = args
    cfg = replace(config, weights=NeighborWeights(*weights))
    return cross_validate(corpus, "topic_integrated", model_kind, cfg, theta)


def worker_count(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, default)))
    except ValueError:
        return default


def sweep_weights(corpus: Corpus, model_kind: str, step: float = 0.1,
                  config: ExperimentConfig = ExperimentConfig(), theta: np.ndarray | None = None,
                  workers: int | None = None) -> SweepResult:
    """Cross-validate TOPIC_INTEGRATED at every grid triple of neighbor weights.

    Rows come back sorted by F1 (descending); equal F1 keeps grid order,
    so ``best`` is the first-listed argmax.
    """
    grid = weight_grid(step)
    if theta is None and not config.lda_per_fold:
        theta = corpus_topics(corpus, config)
    jobs = [(corpus, model_kind, w, config, theta) for w in grid]
    workers = worker_count() if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(job) for job in jobs]
    order = sorted(range(len(rows)), key=lambda i: (-rows[i].metrics.f1, i))
    return SweepResult(model_kind, [rows[i] for i in order])


@dataclass
class Comparison:
    """Approach x model results, with TOPIC_INTEGRATED at each model's sweep optimum."""

    results: dict[tuple[str, str], ExperimentResult]
    sweeps: dict[str, SweepResult]

    def metric(self, approach: str, model: str, name: str = "f1") -> float:
        return getattr(self.results[(approach, model)].metrics, name)


def compare_approaches(corpus: Corpus, config: ExperimentConfig = ExperimentConfig(), step: float = 0.5,
                       models: Sequence[str] = MODEL_KINDS, workers: int | None = None) -> Comparison:
    theta = None if config.lda_per_fold else corpus_topics(corpus, config)
    results, sweeps = {}, {}
    for model in models:
        results[("bow", model)] = cross_validate(corpus, "bow", model, config)
        results[("topic_current", model)] = cross_validate(corpus, "topic_current", model, config, theta)
        sweeps[model] = sweep_weights(corpus, model, step, config, theta, workers)
        results[("topic_integrated", model)] = sweeps[model].best
    return Comparison(results, sweeps)


def format_results_table(results: Sequence[ExperimentResult]) -> str:
    """Plain-text table: approach, model, weights, P, R, F1, accuracy (%)."""
    lines = [f"# {METRICS_NOTE}",
             f"{'approach':<18}{'model':<6}{'Wp':>6}{'Wc':>6}{'Ws':>6}{'P':>9}{'R':>9}{'F1':>9}{'Acc(%)':>9}"]
    for r in results:
        w = ("{:>6.2f}{:>6.2f}{:>6.2f}".format(*r.weights) if r.weights is not None
             else f"{'-':>6}{'-':>6}{'-':>6}")
        m = r.metrics
        lines.append(f"{r.approach:<18}{r.model:<6}{w}{m.precision:>9.4f}{m.recall:>9.4f}{m.f1:>9.4f}"
                     f"{100 * m.accuracy:>9.2f}")
    return "\n".join(lines) + "\n"
