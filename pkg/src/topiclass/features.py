"""Bag-of-words features: tokenizer, vocabulary, term counts, information gain."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus

STOPWORDS = frozenset("""
a about above after again against all am an and any are as at be because been
before being below between both but by can could did do does doing down during
each few for from further had has have having he her here hers herself him
himself his how i if in into is it its itself just me more most my myself no nor
not now of off on once only or other our ours ourselves out over own same she
should so some such than that the their theirs them themselves then there these
they this those through to too under until up very was we were what when where
which while who whom why will with would you your yours yourself yourselves
""".split())

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str, stopwords: frozenset[str] | None = STOPWORDS) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop short/numeric tokens and stopwords.

    Pass ``stopwords=None`` to keep stopwords.
    """
    out = []
    for tok in _TOKEN_RE.findall(text.lower()):
        if len(tok) < 2 or tok.isdigit():
            continue
        if stopwords is not None and tok in stopwords:
            continue
        out.append(tok)
    return out


def tokenize_corpus(corpus: Corpus, stopwords: frozenset[str] | None = STOPWORDS) -> list[list[str]]:
    return [tokenize(text, stopwords) for text in corpus.texts]


class Vocabulary:
    """Ordered list of distinct terms with its inverse index."""

    def __init__(self, terms: Iterable[str]):
        self.terms: tuple[str, ...] = tuple(terms)
        self._index = {t: i for i, t in enumerate(self.terms)}
        if len(self._index) != len(self.terms):
            raise ValueError("vocabulary terms must be distinct")

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self.terms == other.terms

    def __repr__(self) -> str:
        return f"Vocabulary({len(self)} terms)"

    def index(self, term: str) -> int:
        return self._index[term]

    def encode(self, tokens: Iterable[str]) -> np.ndarray:
        """Term ids of ``tokens``; out-of-vocabulary tokens are dropped."""
        idx = self._index
        return np.array([idx[t] for t in tokens if t in idx], dtype=np.int64)

    def save(self, path: str | Path) -> None:
        Path(path).write_text("".join(t + "\n" for t in self.terms), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls(line for line in Path(path).read_text(encoding="utf-8").splitlines() if line)


def _as_token_docs(docs) -> list[Sequence[str]]:
    if isinstance(docs, Corpus):
        return tokenize_corpus(docs)
    return list(docs)


def build_vocabulary(docs: Corpus | Iterable[Sequence[str]], min_df: int = 3) -> Vocabulary:
    """Terms occurring in at least ``min_df`` documents, sorted.

    ``docs`` is a corpus (tokenized with the default tokenizer) or a
    sequence of token lists.
    """
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    df: Counter[str] = Counter()
    for tokens in _as_token_docs(docs):
        df.update(set(tokens))
    terms = sorted(t for t, n in df.items() if n >= min_df)
    if not terms:
        raise ValueError(f"empty vocabulary: no term reaches min_df={min_df}")
    return Vocabulary(terms)


@dataclass
class TermDocMatrix:
    """Documents x terms raw term frequencies (sparse CSR)."""

    counts: sp.csr_matrix
    vocab: Vocabulary

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    def toarray(self) -> np.ndarray:
        return self.counts.toarray()

    def rows(self, index) -> "TermDocMatrix":
        return TermDocMatrix(self.counts[index], self.vocab)


def build_term_doc_matrix(docs: Corpus | Iterable[Sequence[str]], vocab: Vocabulary) -> TermDocMatrix:
    if len(vocab) == 0:
        raise ValueError("vocabulary is empty")
    indptr = [0]
    indices: list[int] = []
    data: list[int] = []
    for tokens in _as_token_docs(docs):
        counts = Counter(vocab.encode(tokens).tolist())
        for j in sorted(counts):
            indices.append(j)
            data.append(counts[j])
        indptr.append(len(indices))
    mat = sp.csr_matrix((np.array(data, dtype=np.int64), np.array(indices, dtype=np.int64),
                         np.array(indptr, dtype=np.int64)), shape=(len(indptr) - 1, len(vocab)))
    return TermDocMatrix(mat, vocab)


def _entropy_bits(counts: np.ndarray) -> np.ndarray:
    """Row-wise entropy (bits) of unnormalized count rows; zero rows give 0."""
    counts = np.asarray(counts, dtype=np.float64)
    totals = counts.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(totals > 0, counts / totals, 0.0)
        terms = np.where(p > 0, -p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return terms.sum(axis=-1)


def information_gain(matrix: TermDocMatrix, labels: Sequence) -> np.ndarray:
    """Information gain (bits) of each term's presence about the class label.

    IG(t) = H(C) - P(t) H(C | t) - P(not t) H(C | not t), with presence
    meaning a nonzero count.
    """
    labels = list(labels)
    n_docs = matrix.shape[0]
    if len(labels) != n_docs:
        raise ValueError(f"{len(labels)} labels for {n_docs} documents")
    classes, y = np.unique(np.asarray(labels, dtype=object).astype(str), return_inverse=True)
    onehot = np.zeros((n_docs, len(classes)))
    onehot[np.arange(n_docs), y] = 1.0

    present = (matrix.counts > 0).astype(np.float64)
    with_term = np.asarray((present.T @ onehot))          # terms x classes
    class_totals = onehot.sum(axis=0)
    without_term = class_totals[None, :] - with_term

    n_with = with_term.sum(axis=1)
    p_with = n_with / n_docs
    h_c = _entropy_bits(class_totals[None, :])[0]
    ig = h_c - p_with * _entropy_bits(with_term) - (1.0 - p_with) * _entropy_bits(without_term)
    # float cancellation can leave tiny negatives or overshoot H(C)
    return np.clip(ig, 0.0, h_c)


def select_top_k(scores: np.ndarray, k: int, matrix: TermDocMatrix) -> tuple[Vocabulary, TermDocMatrix]:
    """Keep the ``k`` highest-scoring terms (ties go to the lexicographically smaller term).

    The returned vocabulary stays in sorted order and the matrix columns
    follow it.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n_terms = len(matrix.vocab)
    if scores.shape != (n_terms,):
        raise ValueError("one score per vocabulary term expected")
    if not 1 <= k <= n_terms:
        raise ValueError(f"k={k} outside [1, {n_terms}]")
    # vocab is sorted, so term index order is lexicographic order
    ranked = sorted(range(n_terms), key=lambda j: (-scores[j], matrix.vocab.terms[j]))
    keep = np.sort(np.array(ranked[:k], dtype=np.int64))
    vocab = Vocabulary(matrix.vocab.terms[j] for j in keep)
    return vocab, TermDocMatrix(matrix.counts[:, keep].tocsr(), vocab)


class MinMaxScaler:
    """Column-wise min-max scaling fitted on training rows; constant columns map to 0."""

    def fit(self, X: np.ndarray) -> "MinMaxScaler":
        X = np.asarray(X, dtype=np.float64)
        self.min_ = X.min(axis=0)
        span = X.max(axis=0) - self.min_
        self.scale_ = np.where(span > 0, 1.0 / np.where(span > 0, span, 1.0), 0.0)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.min_) * self.scale_

    def fit_transform(self, X: np.ndarray) -> np.ndarray:
        return self.fit(X).transform(X)


def write_triplets(matrix: TermDocMatrix, path: str | Path, header_comments: Sequence[str] = ()) -> None:
    """Write ``M k`` then one ``doc_index term_index count`` line per nonzero cell.

    Lines starting with ``#`` are comments and may precede the header.
    """
    coo = matrix.counts.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_comments:
            fh.write(f"# {line}\n")
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {v}\n")


def read_triplets(path: str | Path) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    shape = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                if shape is None:
                    m, k = (int(x) for x in parts)
                    shape = (m, k)
                    continue
                r, c, v = parts
                rows.append(int(r))
                cols.append(int(c))
                vals.append(float(v))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed triplet line") from None
    if shape is None:
        raise ValueError(f"{path}: missing 'M k' header")
    return sp.csr_matrix((vals, (rows, cols)), shape=shape)
