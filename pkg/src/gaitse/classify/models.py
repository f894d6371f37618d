"""Classifiers: k-NN, logistic regression, random forest, linear SVM.

k-NN, logistic regression and the SVM z-score features with statistics of
their training rows only; trees are scale-invariant and use raw values.
All functions take ``(X_train, y_train, X_test, ...)`` with integer class
labels and return integer predictions for ``X_test``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..errors import NonBinaryLabels

__all__ = [
    "Standardizer",
    "knn_train_predict",
    "LogisticFit",
    "fit_logistic",
    "logistic_train_predict",
    "RandomForest",
    "random_forest_train_predict",
    "LinearSvmFit",
    "fit_linear_svm",
    "svm_objective",
    "linear_svm_train_predict",
]


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean, scale)

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale


def _binary(y) -> np.ndarray:
    y = np.asarray(y)
    values = np.unique(y)
    if not set(values.tolist()) <= {0, 1}:
        raise NonBinaryLabels(f"expected labels in {{0, 1}}, got {values.tolist()}")
    return y.astype(np.float64)


# -- k-nearest neighbours ----------------------------------------------------


def knn_train_predict(X_train, y_train, X_test, k: int = 1) -> np.ndarray:
    """Majority vote of the k nearest training rows (Euclidean, z-scored).

    Vote ties go to the tied class owning the nearest neighbour; equal
    distances fall back to the lower class index. Equidistant neighbours
    are ranked by training row order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    y_train = np.asarray(y_train)
    if y_train.size == 0:
        raise ValueError("empty training set")
    scaler = Standardizer.fit(X_train)
    A = scaler.transform(X_train)
    B = scaler.transform(X_test)
    d2 = ((B[:, None, :] - A[None, :, :]) ** 2).sum(axis=2)
    k = min(k, A.shape[0])
    order = np.argsort(d2, axis=1, kind="stable")[:, :k]
    out = np.empty(B.shape[0], dtype=np.int64)
    for row in range(B.shape[0]):
        nb = order[row]
        labels = y_train[nb]
        classes, votes = np.unique(labels, return_counts=True)
        tied = classes[votes == votes.max()]
        if tied.size == 1:
            out[row] = tied[0]
            continue
        best = None
        for c in tied:  # ascending class index
            nearest = d2[row, nb[labels == c]].min()
            if best is None or nearest < best[0]:
                best = (nearest, c)
        out[row] = best[1]
    return out


# -- logistic regression -----------------------------------------------------


@dataclass(frozen=True)
class LogisticFit:
    coef: np.ndarray  # on standardized features
    intercept: float
    scaler: Standardizer
    nll_history: tuple[float, ...]
    converged: bool

    def decision(self, X) -> np.ndarray:
        return self.scaler.transform(X) @ self.coef + self.intercept

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.decision(X))


def _nll(Z, y, w, ridge):
    z = Z @ w
    return float(np.sum(np.logaddexp(0.0, z) - y * z) + 0.5 * ridge * np.dot(w[1:], w[1:]))


def fit_logistic(X, y, max_iter: int = 100, tol: float = 1e-8, ridge: float = 1e-8) -> LogisticFit:
    """Newton-Raphson maximum likelihood with backtracking.

    ``ridge`` is a tiny L2 penalty on the slopes that keeps the Hessian
    invertible on separable data; the objective never increases between
    recorded iterations.
    """
    y = _binary(y)
    scaler = Standardizer.fit(X)
    Z = np.column_stack([np.ones(len(y)), scaler.transform(X)])
    w = np.zeros(Z.shape[1])
    penalty = np.full(Z.shape[1], ridge)
    penalty[0] = 0.0
    nll = _nll(Z, y, w, ridge)
    history = [nll]
    converged = False
    for _ in range(max_iter):
        p = expit(Z @ w)
        grad = Z.T @ (p - y) + penalty * w
        H = (Z * (p * (1 - p))[:, None]).T @ Z + np.diag(penalty + 1e-12)
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        t = 1.0
        while True:
            cand = w - t * step
            cand_nll = _nll(Z, y, cand, ridge)
            if cand_nll <= nll or t < 1e-10:
                break
            t *= 0.5
        if cand_nll > nll:
            converged = True
            break
        decrease = nll - cand_nll
        w, nll = cand, cand_nll
        history.append(nll)
        if np.max(np.abs(t * step)) < tol or decrease <= tol * (1.0 + abs(nll)):
            converged = True
            break
    return LogisticFit(w[1:].copy(), float(w[0]), scaler, tuple(history), converged)


def logistic_train_predict(X_train, y_train, X_test, max_iter: int = 100, tol: float = 1e-8) -> np.ndarray:
    fit = fit_logistic(X_train, y_train, max_iter=max_iter, tol=tol)
    return (fit.predict_proba(X_test) >= 0.5).astype(np.int64)


# -- random forest -----------------------------------------------------------


@dataclass
class _Tree:
    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    label: list[int] = field(default_factory=list)

    def add(self, feature=-1, threshold=0.0, label=-1) -> int:
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.label.append(label)
        return len(self.feature) - 1

    def predict_one(self, x) -> int:
        node = 0
        while self.feature[node] >= 0:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return self.label[node]


def _best_split(X, y, n_classes, features):
    """(weighted gini, feature, threshold) of the best split, or None."""
    n = y.shape[0]
    best = None
    onehot = np.eye(n_classes)[y]
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        valid = np.flatnonzero(xs[1:] > xs[:-1])
        if valid.size == 0:
            continue
        cum = np.cumsum(onehot[order], axis=0)
        left = cum[valid]
        nl = (valid + 1).astype(np.float64)
        right = cum[-1] - left
        nr = n - nl
        gl = nl - (left ** 2).sum(axis=1) / nl
        gr = nr - (right ** 2).sum(axis=1) / nr
        score = gl + gr  # n * weighted gini
        k = int(np.argmin(score))
        if best is None or score[k] < best[0] - 1e-12:
            v = valid[k]
            mid = (xs[v] + xs[v + 1]) / 2
            if not mid < xs[v + 1]:  # adjacent floats
                mid = xs[v]
            best = (float(score[k]), int(f), float(mid))
    return best


def _grow(X, y, n_classes, mtry, rng) -> _Tree:
    tree = _Tree()
    root = tree.add()
    stack = [(root, np.arange(y.shape[0]))]
    n_features = X.shape[1]
    while stack:
        node, idx = stack.pop()
        counts = np.bincount(y[idx], minlength=n_classes)
        majority = int(np.argmax(counts))
        if np.count_nonzero(counts) == 1 or idx.size < 2:
            tree.label[node] = majority
            continue
        cand = rng.choice(n_features, size=mtry, replace=False)
        split = _best_split(X[idx], y[idx], n_classes, np.sort(cand))
        if split is None:
            rest = np.setdiff1d(np.arange(n_features), cand)
            split = _best_split(X[idx], y[idx], n_classes, rest)
        if split is None:
            tree.label[node] = majority
            continue
        _, f, thr = split
        go_left = X[idx, f] <= thr
        tree.feature[node] = f
        tree.threshold[node] = thr
        tree.label[node] = majority
        li, ri = tree.add(), tree.add()
        tree.left[node], tree.right[node] = li, ri
        stack.append((ri, idx[~go_left]))
        stack.append((li, idx[go_left]))
    return tree


class RandomForest:
    """Bagged CART trees with Gini impurity, grown to purity.

    ``max_features`` defaults to floor(sqrt(n_features)) candidates per
    split. If none of the candidates can split a node, the remaining
    features are tried before making a leaf.
    """

    def __init__(self, n_trees: int = 100, seed: int = 0, bootstrap: bool = True, max_features: int | None = None):
        if n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        self.n_trees = n_trees
        self.seed = seed
        self.bootstrap = bootstrap
        self.max_features = max_features
        self.trees: list[_Tree] = []

    def fit(self, X, y) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        self.n_classes_ = int(y.max()) + 1
        mtry = self.max_features or max(1, int(np.sqrt(X.shape[1])))
        mtry = min(mtry, X.shape[1])
        self.trees = []
        for child in np.random.SeedSequence(self.seed).spawn(self.n_trees):
            rng = np.random.default_rng(child)
            idx = rng.integers(0, len(y), size=len(y)) if self.bootstrap else np.arange(len(y))
            self.trees.append(_grow(X[idx], y[idx], self.n_classes_, mtry, rng))
        return self

    def vote_counts(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        votes = np.zeros((X.shape[0], self.n_classes_), dtype=np.int64)
        for tree in self.trees:
            for i, z in enumerate(X):
                votes[i, tree.predict_one(z)] += 1
        return votes

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.vote_counts(X), axis=1)


def random_forest_train_predict(X_train, y_train, X_test, n_trees: int = 100, seed: int = 0,
                                bootstrap: bool = True) -> np.ndarray:
    return RandomForest(n_trees, seed, bootstrap).fit(X_train, y_train).predict(X_test)


# -- linear SVM --------------------------------------------------------------


@dataclass(frozen=True)
class LinearSvmFit:
    w: np.ndarray  # on standardized features
    b: float
    scaler: Standardizer
    c: float

    def decision(self, X) -> np.ndarray:
        return self.scaler.transform(X) @ self.w + self.b


def svm_objective(w, b, Z, s, c) -> float:
    """0.5 * (|w|^2 + b^2) + C * sum of hinge losses; labels ``s`` in {-1, +1}."""
    margins = s * (Z @ w + b)
    return float(0.5 * (np.dot(w, w) + b * b) + c * np.maximum(0.0, 1.0 - margins).sum())


def fit_linear_svm(X, y, c: float = 5.0, epochs: int = 200, seed: int = 0) -> LinearSvmFit:
    """Stochastic subgradient descent (Pegasos) on the hinge-loss objective.

    The bias is handled as an extra constant feature and so is lightly
    regularized. Returns the average of the iterates over the second half
    of training.
    """
    y = _binary(y)
    s = 2.0 * y - 1.0
    scaler = Standardizer.fit(X)
    Z = np.column_stack([scaler.transform(X), np.ones(len(y))])
    n, p = Z.shape
    lam = 1.0 / (c * n)
    radius = 1.0 / np.sqrt(lam)
    rng = np.random.default_rng(seed)
    w = np.zeros(p)
    avg = np.zeros(p)
    n_avg = 0
    t = 0
    for epoch in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            violated = s[i] * (Z[i] @ w) < 1.0
            w *= 1.0 - eta * lam
            if violated:
                w += eta * s[i] * Z[i]
            norm = np.sqrt(w @ w)
            if norm > radius:
                w *= radius / norm
            if epoch >= epochs // 2:
                avg += w
                n_avg += 1
    w = avg / max(n_avg, 1)
    return LinearSvmFit(w[:-1].copy(), float(w[-1]), scaler, float(c))


def linear_svm_train_predict(X_train, y_train, X_test, c: float = 5.0, epochs: int = 200, seed: int = 0) -> np.ndarray:
    fit = fit_linear_svm(X_train, y_train, c=c, epochs=epochs, seed=seed)
    return (fit.decision(X_test) > 0).astype(np.int64)
