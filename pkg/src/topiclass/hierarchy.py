"""Class hierarchies from confusion matrices, and the tree of binary SVMs built on them.

Pipeline: confusion matrix -> average pairwise confusion matrix (APCM)
-> dendrogram by greatest-confusion agglomeration -> one left-vs-right
SVM per internal node.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np

from .svm import MODEL_VERSION, BinarySvmModel, KernelSpec, _fit_gram

HSVM_FORMAT = "topiclass-hsvm"
TREE_FORMAT = "topiclass-dendrogram"


@dataclass
class ConfusionMatrix:
    """``counts[a, p]``: documents of actual class ``a`` predicted as ``p``."""

    counts: np.ndarray
    classes: tuple

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.classes = tuple(self.classes)
        m = len(self.classes)
        if self.counts.shape != (m, m):
            raise ValueError(f"confusion matrix shape {self.counts.shape} does not match {m} classes")
        if np.any(self.counts < 0):
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.classes != other.classes:
            raise ValueError("cannot add confusion matrices over different class lists")
        return ConfusionMatrix(self.counts + other.counts, self.classes)

    def to_dict(self) -> dict:
        return {"classes": list(self.classes), "counts": self.counts.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "ConfusionMatrix":
        return cls(np.array(d["counts"], dtype=np.int64), tuple(d["classes"]))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ConfusionMatrix":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def build_confusion_matrix(actuals: Sequence[Hashable], predictions: Sequence[Hashable],
                           classes: Sequence[Hashable]) -> ConfusionMatrix:
    actuals, predictions = list(actuals), list(predictions)
    if len(actuals) != len(predictions):
        raise ValueError("actuals and predictions differ in length")
    lookup = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(lookup), len(lookup)), dtype=np.int64)
    for a, p in zip(actuals, predictions):
        if a not in lookup or p not in lookup:
            raise ValueError(f"label {a if a not in lookup else p!r} not in class list")
        counts[lookup[a], lookup[p]] += 1
    return ConfusionMatrix(counts, tuple(classes))


def compute_apcm(cm: ConfusionMatrix | np.ndarray) -> np.ndarray:
    """Symmetrize confusions: ``w[a,p] = (v[a,p] + v[p,a]) / 2`` off the diagonal, 0 on it."""
    v = cm.counts if isinstance(cm, ConfusionMatrix) else np.asarray(cm)
    if v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise ValueError(f"confusion matrix must be square, got shape {v.shape}")
    w = (v + v.T) / 2.0
    np.fill_diagonal(w, 0.0)
    return w


@dataclass
class DendrogramNode:
    """Leaf (``class_index`` set) or merge of ``left`` and ``right``."""

    class_index: int | None = None
    left: "DendrogramNode | None" = None
    right: "DendrogramNode | None" = None
    similarity: float | None = None
    rank: int | None = None         # 1 = first merge

    @property
    def is_leaf(self) -> bool:
        return self.class_index is not None

    def leaves(self) -> list[int]:
        if self.is_leaf:
            return [self.class_index]
        return self.left.leaves() + self.right.leaves()

    def internal_nodes(self) -> list["DendrogramNode"]:
        """Pre-order (root first) list of internal nodes."""
        if self.is_leaf:
            return []
        return [self] + self.left.internal_nodes() + self.right.internal_nodes()


@dataclass
class Dendrogram:
    root: DendrogramNode
    classes: tuple
    merges: list[DendrogramNode] = field(default_factory=list)   # in merge order

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def merge_sets(self) -> list[tuple[frozenset, float]]:
        """Class-name sets created by each merge, with the merge similarity."""
        return [(frozenset(self.classes[i] for i in node.leaves()), node.similarity)
                for node in self.merges]

    def to_nested(self, node: DendrogramNode | None = None):
        node = self.root if node is None else node
        if node.is_leaf:
            return self.classes[node.class_index]
        return {"similarity": node.similarity, "rank": node.rank,
                "children": [self.to_nested(node.left), self.to_nested(node.right)]}

    def to_dict(self) -> dict:
        return {"format": TREE_FORMAT, "version": 1, "classes": list(self.classes),
                "tree": self.to_nested()}

    @classmethod
    def from_dict(cls, d: dict) -> "Dendrogram":
        if d.get("format") != TREE_FORMAT:
            raise ValueError("not a topiclass dendrogram file")
        classes = tuple(d["classes"])
        lookup = {c: i for i, c in enumerate(classes)}

        def build(obj):
            if not isinstance(obj, dict):
                return DendrogramNode(class_index=lookup[obj])
            left, right = (build(c) for c in obj["children"])
            return DendrogramNode(left=left, right=right, similarity=obj["similarity"], rank=obj["rank"])

        root = build(d["tree"])
        merges = sorted(root.internal_nodes(), key=lambda n: n.rank)
        tree = cls(root, classes, merges)
        if sorted(root.leaves()) != list(range(len(classes))):
            raise ValueError("dendrogram leaves do not match its class list")
        return tree

    def to_text(self) -> str:
        """Indented rendering, one node per line."""
        lines: list[str] = []

        def walk(node, depth):
            pad = "  " * depth
            if node.is_leaf:
                lines.append(f"{pad}{self.classes[node.class_index]}")
            else:
                lines.append(f"{pad}+ merge #{node.rank} similarity={node.similarity:g}")
                walk(node.left, depth + 1)
                walk(node.right, depth + 1)

        walk(self.root, 0)
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        """Write the nested-list JSON to ``path`` and the indented text next to it (``.txt``)."""
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=1) + "\n", encoding="utf-8")
        path.with_suffix(".txt").write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Dendrogram":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def build_dendrogram(apcm: np.ndarray, classes: Sequence[Hashable] | None = None) -> Dendrogram:
    """Agglomerate classes by greatest confusion.

    Cluster similarity is the maximum APCM entry between members (single
    link on a similarity). The most similar pair of clusters merges first;
    equal similarities go to the pair with the smallest member indices.
    The left child is the cluster holding the smaller class index.
    """
    w = np.asarray(apcm, dtype=np.float64)
    m = w.shape[0]
    if w.ndim != 2 or w.shape[1] != m:
        raise ValueError("APCM must be square")
    if m < 2:
        raise ValueError("need at least 2 classes")
    if not np.allclose(w, w.T, rtol=0, atol=1e-12):
        raise ValueError("APCM must be symmetric")
    if np.any(np.diag(w) != 0) or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("APCM needs a zero diagonal and finite non-negative entries")
    classes = tuple(range(m)) if classes is None else tuple(classes)
    if len(classes) != m:
        raise ValueError("class list length does not match the APCM")

    clusters: list[tuple[int, DendrogramNode]] = [(i, DendrogramNode(class_index=i)) for i in range(m)]
    sim = w.copy()          # cluster-by-cluster similarity, indexed like `clusters`
    merges = []
    rank = 0
    while len(clusters) > 1:
        best = None
        n = len(clusters)
        for a in range(n):
            for b in range(a + 1, n):
                key = (-sim[a, b], min(clusters[a][0], clusters[b][0]), max(clusters[a][0], clusters[b][0]))
                if best is None or key < best[0]:
                    best = (key, a, b)
        _, a, b = best
        rank += 1
        (ka, na), (kb, nb) = clusters[a], clusters[b]
        left, right = (na, nb) if ka < kb else (nb, na)
        node = DendrogramNode(left=left, right=right, similarity=float(sim[a, b]), rank=rank)
        merges.append(node)

        merged_row = np.maximum(sim[a], sim[b])
        keep = [t for t in range(n) if t not in (a, b)]
        new_sim = np.zeros((len(keep) + 1, len(keep) + 1))
        new_sim[:-1, :-1] = sim[np.ix_(keep, keep)]
        new_sim[-1, :-1] = new_sim[:-1, -1] = merged_row[keep]
        sim = new_sim
        clusters = [clusters[t] for t in keep] + [(min(ka, kb), node)]
    return Dendrogram(clusters[0][1], classes, merges)


@dataclass
class HsvmModel:
    """One binary SVM per internal dendrogram node: +1 = left subtree, -1 = right subtree."""

    dendrogram: Dendrogram
    node_models: dict[int, BinarySvmModel]      # keyed by merge rank
    kernel: KernelSpec
    C: float

    @property
    def classes(self) -> tuple:
        return self.dendrogram.classes

    def predict_indices(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        out = np.empty(X.shape[0], dtype=np.int64)

        def descend(node: DendrogramNode, rows: np.ndarray):
            if len(rows) == 0:
                return
            if node.is_leaf:
                out[rows] = node.class_index
                return
            dv = self.node_models[node.rank].decision_function(X[rows])
            descend(node.left, rows[dv >= 0])
            descend(node.right, rows[dv < 0])

        descend(self.dendrogram.root, np.arange(X.shape[0]))
        return out

    def predict(self, X: np.ndarray) -> list:
        return [self.classes[i] for i in self.predict_indices(X)]

    def to_dict(self) -> dict:
        return {"format": HSVM_FORMAT, "version": MODEL_VERSION, "kernel": self.kernel.to_dict(),
                "C": float(self.C), "dendrogram": self.dendrogram.to_dict(),
                "nodes": {str(r): m.to_dict() for r, m in sorted(self.node_models.items())}}

    @classmethod
    def from_dict(cls, d: dict) -> "HsvmModel":
        if d.get("format") != HSVM_FORMAT or d.get("version") != MODEL_VERSION:
            raise ValueError("not a topiclass HSVM model file of a supported version")
        k = d["kernel"]
        nodes = {int(r): BinarySvmModel.from_dict(m) for r, m in d["nodes"].items()}
        return cls(Dendrogram.from_dict(d["dendrogram"]), nodes, KernelSpec(k["degree"], k["coef0"]),
                   float(d["C"]))


def node_partitions(dendrogram: Dendrogram) -> dict[int, tuple[frozenset, frozenset]]:
    """Left and right leaf class sets under every internal node, keyed by merge rank."""
    return {node.rank: (frozenset(node.left.leaves()), frozenset(node.right.leaves()))
            for node in dendrogram.root.internal_nodes()}


def train_hsvm(dendrogram: Dendrogram, X: np.ndarray, labels: Sequence[Hashable], C: float = 1.0,
               kernel: KernelSpec = KernelSpec(), tol: float = 1e-3, max_passes: int = 1000) -> HsvmModel:
    """Train every node on the rows whose class lies below it (left = +1, right = -1)."""
    X = np.asarray(X, dtype=np.float64)
    labels = list(labels)
    if X.ndim != 2 or X.shape[0] != len(labels):
        raise ValueError("X must be 2-D with one row per label")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    lookup = {c: i for i, c in enumerate(dendrogram.classes)}
    unknown = sorted({str(label) for label in labels if label not in lookup})
    if unknown:
        raise ValueError(f"labels not in the dendrogram: {unknown}")
    y = np.array([lookup[label] for label in labels], dtype=np.int64)
    missing = [dendrogram.classes[i] for i in range(dendrogram.n_classes) if not np.any(y == i)]
    if missing:
        raise ValueError(f"classes missing from training data: {missing}")

    gram = kernel(X, X)
    models = {}
    for rank, (left, right) in node_partitions(dendrogram).items():
        in_left = np.isin(y, list(left))
        idx = np.flatnonzero(in_left | np.isin(y, list(right)))
        yy = np.where(in_left[idx], 1.0, -1.0)
        models[rank] = _fit_gram(gram[np.ix_(idx, idx)], X[idx], yy, C, kernel, tol, max_passes)
    return HsvmModel(dendrogram, models, kernel, float(C))


def predict_hsvm(model: HsvmModel, x: np.ndarray):
    """Walk from the root, going left when the node's decision value is >= 0."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a single feature row")
    return model.predict(x[None, :])[0]
