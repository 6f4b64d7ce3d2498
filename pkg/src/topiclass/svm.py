"""Soft-margin kernel SVMs: an SMO dual solver and a one-vs-one multiclass wrapper."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Hashable, Sequence

import numba
import numpy as np

logger = logging.getLogger(__name__)

MODEL_FORMAT = "topiclass-svm"
MODEL_VERSION = 1


@dataclass(frozen=True)
class KernelSpec:
    """Polynomial kernel ``(x . y + coef0) ** degree``."""

    degree: int = 1
    coef0: float = 1.0

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError("degree must be an integer >= 1")
        if self.coef0 < 0:
            raise ValueError("coef0 must be >= 0")

    def __call__(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
        G = X @ Y.T + self.coef0
        return G if self.degree == 1 else G ** int(self.degree)

    def to_dict(self) -> dict:
        return {"kind": "polynomial", "degree": int(self.degree), "coef0": float(self.coef0)}


@numba.njit(cache=True)
def _smo(K, y, C, tol, max_iter):
    """Maximal-violating-pair SMO on the dual. Returns (alpha, b, iterations, converged)."""
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)                     # gradient of 1/2 a'Qa - e'a
    it = 0
    converged = False
    while it < max_iter:
        i = -1
        j = -1
        gmax = -np.inf
        gmin = np.inf
        for t in range(n):
            v = -y[t] * G[t]
            up = (y[t] > 0 and alpha[t] < C) or (y[t] < 0 and alpha[t] > 0)
            low = (y[t] > 0 and alpha[t] > 0) or (y[t] < 0 and alpha[t] < C)
            if up and v > gmax:
                gmax = v
                i = t
            if low and v < gmin:
                gmin = v
                j = t
        if i < 0 or j < 0 or gmax - gmin <= tol:
            converged = True
            break
        it += 1

        qii = K[i, i]
        qjj = K[j, j]
        qij = y[i] * y[j] * K[i, j]
        old_i = alpha[i]
        old_j = alpha[j]
        if y[i] != y[j]:
            quad = qii + qjj + 2.0 * qij
            if quad <= 0:
                quad = 1e-12
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            else:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = C + diff
        else:
            quad = qii + qjj - 2.0 * qij
            if quad <= 0:
                quad = 1e-12
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            else:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            else:
                if alpha[i] < 0:
                    alpha[i] = 0.0
                    alpha[j] = total

        di = alpha[i] - old_i
        dj = alpha[j] - old_j
        for t in range(n):
            G[t] += y[t] * (y[i] * K[t, i] * di + y[j] * K[t, j] * dj)

    # bias from free vectors, else midpoint of the feasible interval
    acc = 0.0
    n_free = 0
    ub = np.inf
    lb = -np.inf
    for t in range(n):
        yg = y[t] * G[t]
        if 0.0 < alpha[t] < C:
            acc += yg
            n_free += 1
        elif (alpha[t] >= C and y[t] < 0) or (alpha[t] <= 0.0 and y[t] > 0):
            ub = min(ub, yg)
        else:
            lb = max(lb, yg)
    rho = acc / n_free if n_free > 0 else (ub + lb) / 2.0
    return alpha, -rho, it, converged


@dataclass
class BinarySvmModel:
    """Trained two-class SVM; only vectors with positive alpha are kept.

    ``dual_coef`` holds ``alpha_i * y_i``.
    """

    support_vectors: np.ndarray
    dual_coef: np.ndarray
    bias: float
    kernel: KernelSpec
    C: float
    n_iter: int = 0
    converged: bool = True

    @property
    def alphas(self) -> np.ndarray:
        return np.abs(self.dual_coef)

    @property
    def n_features(self) -> int:
        return self.support_vectors.shape[1]

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        if len(self.dual_coef) == 0:
            return np.full(X.shape[0], self.bias)
        return self.kernel(X, self.support_vectors) @ self.dual_coef + self.bias

    def predict(self, X: np.ndarray) -> np.ndarray:
        """+1 where the decision value is >= 0, else -1."""
        return np.where(self.decision_function(X) >= 0, 1, -1)

    def to_dict(self) -> dict:
        return {"support_vectors": self.support_vectors.tolist(), "dual_coef": self.dual_coef.tolist(),
                "bias": float(self.bias), "kernel": self.kernel.to_dict(), "C": float(self.C),
                "n_iter": int(self.n_iter), "converged": bool(self.converged)}

    @classmethod
    def from_dict(cls, d: dict) -> "BinarySvmModel":
        k = d["kernel"]
        sv = np.array(d["support_vectors"], dtype=np.float64)
        return cls(sv.reshape(len(d["dual_coef"]), -1) if sv.size else sv.reshape(0, 0),
                   np.array(d["dual_coef"], dtype=np.float64), float(d["bias"]),
                   KernelSpec(k["degree"], k["coef0"]), float(d["C"]), d.get("n_iter", 0),
                   d.get("converged", True))


def decision_value(model: BinarySvmModel, x: np.ndarray) -> float:
    """``sum_i alpha_i y_i K(sv_i, x) + b`` for one feature row."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a single feature row")
    return float(model.decision_function(x[None, :])[0])


def _check_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one row per label")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("binary labels must be +1/-1")
    if not (np.any(y == 1) and np.any(y == -1)):
        raise ValueError("binary SVM needs at least one example of each sign")
    return X, y.astype(np.float64)


def _fit_gram(gram: np.ndarray, X: np.ndarray, y: np.ndarray, C: float, kernel: KernelSpec,
              tol: float, max_passes: int) -> BinarySvmModel:
    max_iter = max(1, max_passes) * max(len(y), 1)
    alpha, b, n_iter, converged = _smo(np.ascontiguousarray(gram), y, float(C), float(tol), max_iter)
    if not converged:
        logger.warning("SMO stopped after %d iterations without reaching tol=%g", n_iter, tol)
    keep = alpha > 0
    return BinarySvmModel(X[keep].copy(), alpha[keep] * y[keep], float(b), kernel, float(C),
                          int(n_iter), bool(converged))


def train_binary(X: np.ndarray, y: Sequence[int], C: float = 1.0, kernel: KernelSpec = KernelSpec(),
                 tol: float = 1e-3, max_passes: int = 1000) -> BinarySvmModel:
    """Train a soft-margin SVM with SMO.

    On return every training point satisfies the KKT conditions to within
    ``tol`` in functional margin, unless the iteration cap
    ``max_passes * n_samples`` was hit (``model.converged`` is False).
    """
    if not C > 0:
        raise ValueError("C must be > 0")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    X, y = _check_xy(X, y)
    return _fit_gram(kernel(X, X), X, y, C, kernel, tol, max_passes)


def dual_objective(alpha: np.ndarray, X: np.ndarray, y: np.ndarray, kernel: KernelSpec) -> float:
    """``sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij``."""
    ay = np.asarray(alpha, dtype=np.float64) * np.asarray(y, dtype=np.float64)
    return float(np.sum(alpha) - 0.5 * ay @ kernel(X, X) @ ay)


@dataclass
class MulticlassSvmModel:
    """One-vs-one SVM. ``models[(a, b)]`` (a < b) votes class ``a`` on +1."""

    classes: tuple
    models: dict[tuple[int, int], BinarySvmModel]
    kernel: KernelSpec
    C: float

    def pair_decisions(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        pairs = sorted(self.models)
        return np.column_stack([self.models[p].decision_function(X) for p in pairs])

    def predict_indices(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        m = len(self.classes)
        votes = np.zeros((X.shape[0], m), dtype=np.int64)
        margin = np.zeros((X.shape[0], m))
        rows = np.arange(X.shape[0])
        for (a, b), dv in zip(sorted(self.models), self.pair_decisions(X).T):
            winner = np.where(dv >= 0, a, b)
            votes[rows, winner] += 1
            margin[rows, winner] += np.abs(dv)
        out = np.empty(X.shape[0], dtype=np.int64)
        for r in range(X.shape[0]):
            tied = np.flatnonzero(votes[r] == votes[r].max())
            # argmax returns the first maximum, i.e. class-list order
            out[r] = tied[np.argmax(margin[r, tied])]
        return out

    def predict(self, X: np.ndarray) -> list:
        return [self.classes[i] for i in self.predict_indices(X)]

    def to_dict(self) -> dict:
        return {"format": MODEL_FORMAT, "version": MODEL_VERSION, "kind": "one-vs-one",
                "classes": list(self.classes), "kernel": self.kernel.to_dict(), "C": float(self.C),
                "pairs": [{"pair": [a, b], "model": self.models[(a, b)].to_dict()}
                          for a, b in sorted(self.models)]}

    @classmethod
    def from_dict(cls, d: dict) -> "MulticlassSvmModel":
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise ValueError("not a topiclass SVM model file of a supported version")
        k = d["kernel"]
        models = {tuple(p["pair"]): BinarySvmModel.from_dict(p["model"]) for p in d["pairs"]}
        return cls(tuple(d["classes"]), models, KernelSpec(k["degree"], k["coef0"]), float(d["C"]))


def train_multiclass(X: np.ndarray, labels: Sequence[Hashable], C: float = 1.0,
                     kernel: KernelSpec = KernelSpec(), tol: float = 1e-3,
                     classes: Sequence[Hashable] | None = None,
                     max_passes: int = 1000) -> MulticlassSvmModel:
    """One binary SVM per class pair, each trained on that pair's rows only.

    ``classes`` fixes the class order (defaults to the sorted distinct
    labels); every listed class needs at least one row.
    """
    X = np.asarray(X, dtype=np.float64)
    labels = list(labels)
    if X.ndim != 2 or X.shape[0] != len(labels):
        raise ValueError("X must be 2-D with one row per label")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    classes = tuple(sorted(set(labels))) if classes is None else tuple(classes)
    if len(classes) < 2:
        raise ValueError("multiclass SVM needs at least 2 classes")
    lookup = {c: i for i, c in enumerate(classes)}
    try:
        y = np.array([lookup[label] for label in labels], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"label {exc.args[0]!r} not in class list") from None
    counts = np.bincount(y, minlength=len(classes))
    if np.any(counts == 0):
        missing = [classes[i] for i in np.flatnonzero(counts == 0)]
        raise ValueError(f"classes with zero training examples: {missing}")

    gram = kernel(X, X)
    models = {}
    for a in range(len(classes)):
        for b in range(a + 1, len(classes)):
            idx = np.flatnonzero((y == a) | (y == b))
            yy = np.where(y[idx] == a, 1.0, -1.0)
            models[(a, b)] = _fit_gram(gram[np.ix_(idx, idx)], X[idx], yy, C, kernel, tol, max_passes)
    return MulticlassSvmModel(classes, models, kernel, float(C))


def predict_multiclass(model: MulticlassSvmModel, x: np.ndarray):
    """Majority vote over pairwise winners.

    Ties go to the tied class with the largest summed ``|decision value|``
    over the contests it won, then to the earliest class in ``model.classes``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a single feature row")
    return model.predict(x[None, :])[0]
