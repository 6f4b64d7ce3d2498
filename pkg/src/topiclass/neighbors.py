"""Neighbor topic matrices and their weighted integration with the current page."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import NEIGHBOR_KINDS, Corpus, resolve_neighbors


@dataclass(frozen=True)
class NeighborWeights:
    parent: float = 0.4
    child: float = 0.0
    sibling: float = 0.3

    def __post_init__(self):
        for name in ("parent", "child", "sibling"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} weight {value} outside [0, 1]")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.parent, self.child, self.sibling)


@dataclass(frozen=True)
class NeighborTopicMatrices:
    """Mean topic rows of each page's parents, children and siblings.

    Rows are aligned with the corpus; a page with no neighbor of a kind
    gets a zero row in that matrix.
    """

    pdt: np.ndarray
    cdt: np.ndarray
    sdt: np.ndarray

    @classmethod
    def from_corpus(cls, corpus: Corpus, theta: np.ndarray) -> "NeighborTopicMatrices":
        mats = _aggregate_all(corpus, theta)
        return cls(mats["parent"], mats["child"], mats["sibling"])


def _aggregate_all(corpus: Corpus, theta: np.ndarray) -> dict[str, np.ndarray]:
    theta = np.asarray(theta, dtype=np.float64)
    if theta.ndim != 2 or theta.shape[0] != len(corpus):
        raise ValueError(f"theta must have one row per page ({len(corpus)}), got {theta.shape}")
    out = {kind: np.zeros_like(theta) for kind in NEIGHBOR_KINDS}
    for i, pid in enumerate(corpus.ids):
        sets = resolve_neighbors(corpus, pid)
        for kind in NEIGHBOR_KINDS:
            members = sets.of_kind(kind)
            if members:
                rows = [corpus.position(m) for m in members]
                out[kind][i] = theta[rows].mean(axis=0)
    return out


def aggregate_neighbor_topics(corpus: Corpus, theta: np.ndarray, kind: str) -> np.ndarray:
    """Row ``i`` is the mean theta row of page ``i``'s neighbors of ``kind``."""
    if kind not in NEIGHBOR_KINDS:
        raise ValueError(f"kind must be one of {NEIGHBOR_KINDS}, got {kind!r}")
    return _aggregate_all(corpus, theta)[kind]


def inp_integrate(cur: np.ndarray, neigh: NeighborTopicMatrices, weights: NeighborWeights) -> np.ndarray:
    """Cell-wise ``cur + w_parent*pdt + w_child*cdt + w_sibling*sdt``.

    The result is not renormalized. Inputs are left untouched.
    """
    cur = np.asarray(cur, dtype=np.float64)
    for name, mat in (("pdt", neigh.pdt), ("cdt", neigh.cdt), ("sdt", neigh.sdt)):
        if np.shape(mat) != cur.shape:
            raise ValueError(f"{name} shape {np.shape(mat)} != current matrix shape {cur.shape}")
    return cur + weights.parent * neigh.pdt + weights.child * neigh.cdt + weights.sibling * neigh.sdt
