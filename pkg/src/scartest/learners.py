"""Probabilistic binary classifiers used by the test.

* random forest for the naive classifier s(x) = P(S=1 | x)
* Gaussian naive Bayes and ROC AUC for the classifier-based statistic
* L2-penalised logistic regression for the S2/S3 labeling weights
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit, log_expit
from scipy.stats import rankdata
from sklearn.ensemble import RandomForestClassifier


class ConvergenceError(RuntimeError):
    pass


def _check_binary(targets, n: int) -> np.ndarray:
    t = np.asarray(targets)
    if t.shape != (n,):
        raise ValueError(f"targets must have shape ({n},), got {t.shape}")
    if not np.all((t == 0) | (t == 1)):
        raise ValueError("targets must be 0/1")
    if t.min() == t.max():
        raise ValueError("targets contain a single class; both classes are required")
    return t.astype(np.int8)


# --------------------------------------------------------------------------
# random forest
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: Optional[int] = None
    min_leaf: int = 1
    # None means ceil(sqrt(d))
    features_per_split: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")


class RandomForest:
    """Bagged Gini CART trees; probability = mean of per-tree leaf fractions.

    The tree building is delegated to scikit-learn. Per-tree seeds derive
    from ``params.seed`` so results do not depend on ``n_jobs``.
    """

    def __init__(self, params: ForestParams = ForestParams(), n_jobs: Optional[int] = None):
        self.params = params
        self.n_jobs = n_jobs
        self._model = None

    def fit(self, features, targets) -> "RandomForest":
        x = np.asarray(features, dtype=np.float64)
        t = _check_binary(targets, x.shape[0])
        p = self.params
        mtry = p.features_per_split or math.ceil(math.sqrt(x.shape[1]))
        self._model = RandomForestClassifier(
            n_estimators=p.n_trees,
            criterion="gini",
            max_depth=p.max_depth,
            min_samples_leaf=p.min_leaf,
            max_features=min(mtry, x.shape[1]),
            bootstrap=True,
            random_state=p.seed,
            n_jobs=self.n_jobs,
        ).fit(x, t)
        return self

    def predict_proba(self, features) -> np.ndarray:
        if self._model is None:
            raise RuntimeError("forest is not fitted")
        proba = self._model.predict_proba(np.asarray(features, dtype=np.float64))
        return proba[:, list(self._model.classes_).index(1)]


def fit_random_forest(features, targets, params: ForestParams = ForestParams()) -> RandomForest:
    return RandomForest(params).fit(features, targets)


def forest_factory(**kwargs):
    """Return ``seed -> unfitted RandomForest``, the shape the test expects."""

    def make(seed: int) -> RandomForest:
        return RandomForest(ForestParams(seed=seed, **kwargs))

    return make


# --------------------------------------------------------------------------
# Gaussian naive Bayes
# --------------------------------------------------------------------------

VAR_FLOOR = 1e-9


@dataclass(frozen=True)
class GaussianNB:
    """Per-class diagonal Gaussian model. Row 0 is class 0, row 1 is class 1."""

    means: np.ndarray
    variances: np.ndarray
    priors: np.ndarray

    def joint_log_likelihood(self, features) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        out = np.empty((x.shape[0], 2))
        for k in range(2):
            var = self.variances[k]
            out[:, k] = (
                math.log(self.priors[k])
                - 0.5 * np.sum(np.log(2.0 * np.pi * var))
                - 0.5 * np.sum((x - self.means[k]) ** 2 / var, axis=1)
            )
        return out

    def predict_log_odds(self, features) -> np.ndarray:
        jll = self.joint_log_likelihood(features)
        return jll[:, 1] - jll[:, 0]

    def predict_proba(self, features) -> np.ndarray:
        return expit(self.predict_log_odds(features))

    def predict_proba_both(self, features) -> np.ndarray:
        lo = self.predict_log_odds(features)
        return np.column_stack([np.exp(log_expit(-lo)), np.exp(log_expit(lo))])


def fit_gaussian_nb(features, targets) -> GaussianNB:
    """Maximum-likelihood class moments with a variance floor.

    Variances are floored at ``1e-9`` times the largest pooled feature
    variance so constant features do not produce division by zero.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    t = _check_binary(targets, x.shape[0])
    floor = VAR_FLOOR * float(np.max(np.var(x, axis=0)))
    if floor <= 0.0:
        floor = VAR_FLOOR
    means = np.empty((2, x.shape[1]))
    variances = np.empty((2, x.shape[1]))
    priors = np.empty(2)
    for k in range(2):
        xk = x[t == k]
        means[k] = xk.mean(axis=0)
        variances[k] = np.maximum(xk.var(axis=0), floor)
        priors[k] = xk.shape[0] / x.shape[0]
    return GaussianNB(means, variances, priors)


# --------------------------------------------------------------------------
# logistic regression
# --------------------------------------------------------------------------

def _logistic_objective(w, x1, t, l2):
    z = x1 @ w
    # mean negative log-likelihood: log(1 + e^z) - t z
    loss = np.mean(np.logaddexp(0.0, z) - t * z) + 0.5 * l2 * np.dot(w[1:], w[1:])
    p = expit(z)
    grad = x1.T @ (p - t) / x1.shape[0]
    grad[1:] += l2 * w[1:]
    return loss, grad, p


def fit_logistic(features, targets, l2: float = 1e-4, tol: float = 1e-6,
                 max_iter: int = 100) -> tuple[np.ndarray, float]:
    """Damped Newton fit of an L2-penalised logistic regression.

    Minimises mean log-loss + 0.5 * l2 * ||w||^2 (the intercept is not
    penalised) until the gradient norm drops below ``tol``.

    Returns:
        (weights, intercept)
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    t = _check_binary(targets, x.shape[0]).astype(np.float64)
    n, d = x.shape
    x1 = np.column_stack([np.ones(n), x])
    w = np.zeros(d + 1)
    penalty = np.full(d + 1, l2)
    penalty[0] = 0.0
    loss, grad, p = _logistic_objective(w, x1, t, l2)
    for _ in range(max_iter):
        if np.linalg.norm(grad) < tol:
            return w[1:].copy(), float(w[0])
        h = (x1 * (p * (1.0 - p))[:, None]).T @ x1 / n + np.diag(penalty)
        # tiny jitter keeps the intercept block solvable on separable data
        h[np.diag_indices_from(h)] += 1e-12
        step = np.linalg.solve(h, grad)
        decrement = float(grad @ step)
        eta = 1.0
        while True:
            w_new = w - eta * step
            loss_new, grad_new, p_new = _logistic_objective(w_new, x1, t, l2)
            if loss_new <= loss - 1e-4 * eta * decrement or eta < 1e-10:
                break
            eta *= 0.5
        w, loss, grad, p = w_new, loss_new, grad_new, p_new
    if np.linalg.norm(grad) < tol:
        return w[1:].copy(), float(w[0])
    raise ConvergenceError(
        f"logistic regression did not reach gradient norm {tol} in {max_iter} iterations"
    )


def logistic_gradient(features, targets, weights, intercept, l2: float = 1e-4) -> np.ndarray:
    """Gradient of the objective minimised by :func:`fit_logistic`."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    x1 = np.column_stack([np.ones(x.shape[0]), x])
    w = np.concatenate([[intercept], weights])
    return _logistic_objective(w, x1, np.asarray(targets, dtype=np.float64), l2)[1]


# --------------------------------------------------------------------------
# ROC AUC
# --------------------------------------------------------------------------

def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC with ties counted as one half, via average ranks."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be 1-d arrays of equal length")
    pos = y == 1
    n1 = int(np.count_nonzero(pos))
    n0 = y.shape[0] - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("roc_auc needs both label values")
    ranks = rankdata(s)
    u = float(np.sum(ranks[pos])) - n1 * (n1 + 1) / 2.0
    return u / (n1 * n0)
