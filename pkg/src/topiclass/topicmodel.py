"""LDA topic model trained by collapsed Gibbs sampling, plus fold-in inference.

Estimates of phi (topic-word) and theta (document-topic) are averages over
the post-burn-in samples taken every ``sample_lag`` sweeps; the final
sweep is always sampled.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numba
import numpy as np
from scipy.special import gammaln

from .features import Vocabulary

MODEL_FORMAT = "topiclass-lda-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class LdaConfig:
    n_topics: int = 200
    epochs: int = 2000
    alpha: float | None = None      # None -> 50 / n_topics
    beta: float = 0.01
    burn_in: float = 0.5
    sample_lag: int = 10
    seed: int = 0

    @property
    def alpha_value(self) -> float:
        return 50.0 / self.n_topics if self.alpha is None else float(self.alpha)

    def validate(self) -> None:
        if self.n_topics < 1:
            raise ValueError("n_topics must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.alpha_value > 0:
            raise ValueError("alpha must be > 0")
        if not self.beta > 0:
            raise ValueError("beta must be > 0")
        if not 0.0 <= self.burn_in < 1.0:
            raise ValueError("burn_in must lie in [0, 1)")
        if self.sample_lag < 1:
            raise ValueError("sample_lag must be >= 1")

    def sample_sweeps(self) -> list[int]:
        """0-based sweep indices whose state enters the averaged estimates."""
        first = int(np.floor(self.burn_in * self.epochs))
        last = self.epochs - 1
        return [s for s in range(first, self.epochs) if (last - s) % self.sample_lag == 0]


@dataclass
class GibbsState:
    """Token-level topic assignments and the count tables they induce."""

    doc: np.ndarray         # document index per token
    word: np.ndarray        # vocabulary index per token
    z: np.ndarray           # topic per token
    ndk: np.ndarray         # docs x topics
    nkw: np.ndarray         # topics x words
    nk: np.ndarray          # topics

    @classmethod
    def initialize(cls, docs: Sequence[np.ndarray], n_topics: int, n_words: int,
                   rng: np.random.Generator) -> "GibbsState":
        lengths = [len(d) for d in docs]
        doc = np.repeat(np.arange(len(docs), dtype=np.int64), lengths)
        word = np.concatenate([np.asarray(d, dtype=np.int64) for d in docs]) if docs else \
            np.zeros(0, dtype=np.int64)
        z = rng.integers(n_topics, size=len(word)).astype(np.int64)
        state = cls(doc, word, z,
                    np.zeros((len(docs), n_topics), dtype=np.int64),
                    np.zeros((n_topics, n_words), dtype=np.int64),
                    np.zeros(n_topics, dtype=np.int64))
        np.add.at(state.ndk, (doc, z), 1)
        np.add.at(state.nkw, (z, word), 1)
        np.add.at(state.nk, z, 1)
        return state

    @property
    def n_tokens(self) -> int:
        return len(self.z)

    def tallies_consistent(self) -> bool:
        """Recount every table from ``z`` and compare."""
        ndk = np.zeros_like(self.ndk)
        nkw = np.zeros_like(self.nkw)
        nk = np.zeros_like(self.nk)
        np.add.at(ndk, (self.doc, self.z), 1)
        np.add.at(nkw, (self.z, self.word), 1)
        np.add.at(nk, self.z, 1)
        return (np.array_equal(ndk, self.ndk) and np.array_equal(nkw, self.nkw)
                and np.array_equal(nk, self.nk) and int(self.nk.sum()) == self.n_tokens)

    def log_likelihood(self, alpha: float, beta: float) -> float:
        """Joint log p(w, z) with theta and phi integrated out."""
        n_topics, n_words = self.nkw.shape
        n_docs = self.ndk.shape[0]
        lw = n_topics * (gammaln(n_words * beta) - n_words * gammaln(beta))
        lw += gammaln(self.nkw + beta).sum() - gammaln(self.nk + n_words * beta).sum()
        lz = n_docs * (gammaln(n_topics * alpha) - n_topics * gammaln(alpha))
        lz += gammaln(self.ndk + alpha).sum() - gammaln(self.ndk.sum(axis=1) + n_topics * alpha).sum()
        return float(lw + lz)


@numba.njit(cache=True)
def _gibbs_sweep(doc, word, z, ndk, nkw, nk, alpha, beta, vbeta, u):
    n_topics = nk.shape[0]
    p = np.empty(n_topics)
    for t in range(z.shape[0]):
        d = doc[t]
        w = word[t]
        k = z[t]
        ndk[d, k] -= 1
        nkw[k, w] -= 1
        nk[k] -= 1
        total = 0.0
        for j in range(n_topics):
            total += (ndk[d, j] + alpha) * (nkw[j, w] + beta) / (nk[j] + vbeta)
            p[j] = total
        target = u[t] * total
        k = 0
        while k < n_topics - 1 and p[k] <= target:
            k += 1
        z[t] = k
        ndk[d, k] += 1
        nkw[k, w] += 1
        nk[k] += 1


@numba.njit(cache=True)
def _foldin_sweep(word, z, nd, phi, alpha, u):
    n_topics = nd.shape[0]
    p = np.empty(n_topics)
    for t in range(z.shape[0]):
        w = word[t]
        nd[z[t]] -= 1
        total = 0.0
        for j in range(n_topics):
            total += (nd[j] + alpha) * phi[j, w]
            p[j] = total
        target = u[t] * total
        k = 0
        while k < n_topics - 1 and p[k] <= target:
            k += 1
        z[t] = k
        nd[k] += 1


@dataclass
class TopicModel:
    """Trained topic-word distributions.

    ``phi[k, w]`` is the probability of vocabulary word ``w`` under topic
    ``k``; every row sums to one.
    """

    phi: np.ndarray
    alpha: float
    beta: float
    vocab: Vocabulary
    config: LdaConfig = field(default_factory=LdaConfig)
    log_likelihoods: list[tuple[int, float]] = field(default_factory=list)

    @property
    def n_topics(self) -> int:
        return self.phi.shape[0]

    def top_words(self, topic: int, n: int = 10) -> list[str]:
        order = np.argsort(-self.phi[topic], kind="stable")[:n]
        return [self.vocab.terms[i] for i in order]

    def save(self, directory: str | Path, snapshot: dict | None = None) -> None:
        """Write ``model.txt`` (header + phi rows) and ``vocab.txt`` under ``directory``."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        cfg = self.config
        with open(directory / "model.txt", "w", encoding="utf-8") as fh:
            fh.write(f"{MODEL_FORMAT} {MODEL_VERSION}\n")
            if snapshot is not None:
                fh.write("# config " + json.dumps(snapshot, sort_keys=True) + "\n")
            fh.write(f"K={self.n_topics} V={self.phi.shape[1]} alpha={self.alpha!r} "
                     f"beta={self.beta!r} seed={cfg.seed} epochs={cfg.epochs} "
                     f"burn_in={cfg.burn_in!r} sample_lag={cfg.sample_lag}\n")
            for row in self.phi:
                fh.write(" ".join(repr(float(x)) for x in row) + "\n")
        self.vocab.save(directory / "vocab.txt")

    @classmethod
    def load(cls, directory: str | Path) -> "TopicModel":
        directory = Path(directory)
        lines = (directory / "model.txt").read_text(encoding="utf-8").splitlines()
        magic = lines[0].split()
        if magic[0] != MODEL_FORMAT or int(magic[1]) != MODEL_VERSION:
            raise ValueError(f"unsupported model file header {lines[0]!r}")
        body = [ln for ln in lines[1:] if not ln.startswith("#")]
        header = dict(item.split("=", 1) for item in body[0].split())
        n_topics, n_words = int(header["K"]), int(header["V"])
        phi = np.array([[float(x) for x in ln.split()] for ln in body[1:1 + n_topics]])
        if phi.shape != (n_topics, n_words):
            raise ValueError("phi block does not match the K/V header")
        alpha, beta = float(header["alpha"]), float(header["beta"])
        config = LdaConfig(n_topics=n_topics, epochs=int(header["epochs"]), alpha=alpha, beta=beta,
                           burn_in=float(header["burn_in"]), sample_lag=int(header["sample_lag"]),
                           seed=int(header["seed"]))
        vocab = Vocabulary.load(directory / "vocab.txt")
        return cls(phi, alpha, beta, vocab, config)


SweepCallback = Callable[[int, GibbsState], None]


def train_lda(tokens: Sequence[Sequence[str]], vocab: Vocabulary, config: LdaConfig = LdaConfig(),
              callback: SweepCallback | None = None) -> tuple[TopicModel, np.ndarray]:
    """Fit LDA on tokenized documents.

    Parameters
    ----------
    tokens : sequence of token lists, one per document
        Every token must be in ``vocab``. Empty documents are allowed and
        get the uniform topic distribution.
    vocab : Vocabulary
    config : LdaConfig
    callback : callable, optional
        Called as ``callback(sweep_index, state)`` after every sweep.

    Returns
    -------
    model : TopicModel
    theta : ndarray of shape (n_docs, n_topics)
    """
    config.validate()
    if len(tokens) == 0:
        raise ValueError("no documents to train on")
    docs = []
    for i, toks in enumerate(tokens):
        ids = vocab.encode(toks)
        if len(ids) != len(toks):
            raise ValueError(f"document {i} has tokens outside the vocabulary")
        docs.append(ids)

    n_topics, n_words = config.n_topics, len(vocab)
    alpha, beta = config.alpha_value, config.beta
    rng = np.random.default_rng(config.seed)
    state = GibbsState.initialize(docs, n_topics, n_words, rng)
    history = [(-1, state.log_likelihood(alpha, beta))]

    sample_at = set(config.sample_sweeps())
    phi_sum = np.zeros((n_topics, n_words))
    theta_sum = np.zeros((len(docs), n_topics))
    doc_len = state.ndk.sum(axis=1, keepdims=True)
    for sweep in range(config.epochs):
        u = rng.random(state.n_tokens)
        _gibbs_sweep(state.doc, state.word, state.z, state.ndk, state.nkw, state.nk,
                     alpha, beta, n_words * beta, u)
        if callback is not None:
            callback(sweep, state)
        if sweep in sample_at:
            phi_sum += (state.nkw + beta) / (state.nk[:, None] + n_words * beta)
            theta_sum += (state.ndk + alpha) / (doc_len + n_topics * alpha)
            history.append((sweep, state.log_likelihood(alpha, beta)))

    n_samples = len(sample_at)
    phi = phi_sum / n_samples
    theta = theta_sum / n_samples
    # renormalize away accumulated rounding
    phi /= phi.sum(axis=1, keepdims=True)
    theta /= theta.sum(axis=1, keepdims=True)
    model = TopicModel(phi, alpha, beta, vocab, config, history)
    return model, theta


def infer_topics(model: TopicModel, tokens: Sequence[str], iterations: int = 50,
                 seed: int = 0) -> np.ndarray:
    """Topic distribution of an unseen document with ``model.phi`` held fixed.

    Out-of-vocabulary tokens are ignored. The second half of the
    ``iterations`` sweeps is averaged.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    n_topics = model.n_topics
    word = model.vocab.encode(tokens)
    if len(word) == 0:
        return np.full(n_topics, 1.0 / n_topics)
    rng = np.random.default_rng(seed)
    z = rng.integers(n_topics, size=len(word)).astype(np.int64)
    nd = np.bincount(z, minlength=n_topics).astype(np.int64)
    acc = np.zeros(n_topics)
    first = iterations // 2
    for it in range(iterations):
        _foldin_sweep(word, z, nd, model.phi, model.alpha, rng.random(len(word)))
        if it >= first:
            acc += (nd + model.alpha) / (len(word) + n_topics * model.alpha)
    theta = acc / (iterations - first)
    return theta / theta.sum()


def infer_topic_matrix(model: TopicModel, docs: Sequence[Sequence[str]], iterations: int = 50,
                       seed: int = 0) -> np.ndarray:
    """Row-wise :func:`infer_topics`; document ``i`` uses seed ``seed + i``."""
    return np.vstack([infer_topics(model, toks, iterations, seed + i) for i, toks in enumerate(docs)]) \
        if len(docs) else np.zeros((0, model.n_topics))


def write_matrix(path: str | Path, ids: Sequence[str], matrix: np.ndarray,
                 header_comments: Sequence[str] = ()) -> None:
    """Write a document-aligned matrix: ``id<TAB>v1 v2 ...`` per row.

    Used for theta and for integrated (neighbor-weighted) matrices.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != len(ids):
        raise ValueError("matrix rows must align with ids")
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        for pid, row in zip(ids, matrix):
            fh.write(pid + "\t" + " ".join(repr(float(x)) for x in row) + "\n")


def read_matrix(path: str | Path) -> tuple[list[str], np.ndarray]:
    ids, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            try:
                pid, values = line.rstrip("\n").split("\t", 1)
                rows.append([float(x) for x in values.split()])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed matrix row") from None
            ids.append(pid)
    if rows and len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: rows have differing lengths")
    return ids, np.array(rows, dtype=np.float64)
