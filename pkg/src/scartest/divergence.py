"""Two-sample divergence statistics.

Each statistic is ~0 when the two samples come from the same distribution and
grows as they separate:

* ``KL``     Gaussian KL-type divergence with diagonal covariances
* ``KLCOV``  the same with full (ridge-regularised) covariances
* ``KS``     sum over coordinates of the two-sample Kolmogorov-Smirnov distance
* ``NB_AUC`` in-sample ROC AUC of a Gaussian naive Bayes model separating the
             two samples, minus 0.5
"""

from __future__ import annotations

import enum
import warnings
from typing import Callable

import numpy as np

from .learners import fit_gaussian_nb, roc_auc

KLCOV_RIDGE = 1e-6


class SingularCovarianceError(ValueError):
    pass


class DegenerateStatisticWarning(UserWarning):
    pass


class StatisticKind(str, enum.Enum):
    KL = "kl"
    KLCOV = "klcov"
    KS = "ks"
    NB_AUC = "nbauc"

    @classmethod
    def parse(cls, value) -> "StatisticKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace(" ", "")
        for kind in cls:
            if kind.value == key:
                return kind
        raise ValueError(f"unknown statistic {value!r}; expected one of {[k.value for k in cls]}")

    @property
    def label(self) -> str:
        return self.name


def _matrix(sample) -> np.ndarray:
    x = np.asarray(sample, dtype=np.float64)
    return x[:, None] if x.ndim == 1 else x


def _check_pair(x1, x2, min_rows: int):
    if x1.shape[1] != x2.shape[1]:
        raise ValueError(f"samples have different dimensions: {x1.shape[1]} vs {x2.shape[1]}")
    if x1.shape[0] < min_rows or x2.shape[0] < min_rows:
        raise ValueError(f"each sample needs at least {min_rows} rows")


# --------------------------------------------------------------------------
# Gaussian KL
# --------------------------------------------------------------------------

def kl_from_moments(mu1, cov1, mu2, cov2, textbook: bool = False) -> float:
    """0.5 * [r' S1^-1 r + tr(S2^-1 S1) - log(|S1| / |S2|) - d], r = mu2 - mu1.

    The quadratic form uses the first covariance. ``textbook=True`` uses the
    second one instead, which gives KL(N1 || N2). 1-d ``cov`` arguments are
    read as diagonals.
    """
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=np.float64))
    mu2 = np.atleast_1d(np.asarray(mu2, dtype=np.float64))
    cov1 = np.asarray(cov1, dtype=np.float64)
    cov2 = np.asarray(cov2, dtype=np.float64)
    if np.array_equal(mu1, mu2) and np.array_equal(cov1, cov2):
        # identical moments; skip round-off in the trace and log-det terms
        return 0.0
    r = mu2 - mu1
    d = r.shape[0]
    if cov1.ndim <= 1:
        v1 = np.broadcast_to(cov1, (d,))
        v2 = np.broadcast_to(cov2, (d,))
        if np.any(v1 <= 0) or np.any(v2 <= 0):
            raise SingularCovarianceError("zero variance in a diagonal covariance")
        quad = np.sum(r * r / (v2 if textbook else v1))
        return float(0.5 * (quad + np.sum(v1 / v2) - np.sum(np.log(v1) - np.log(v2)) - d))
    sign1, logdet1 = np.linalg.slogdet(cov1)
    sign2, logdet2 = np.linalg.slogdet(cov2)
    if sign1 <= 0 or sign2 <= 0:
        raise SingularCovarianceError("covariance is singular or not positive definite")
    quad = float(r @ np.linalg.solve(cov2 if textbook else cov1, r))
    trace = float(np.trace(np.linalg.solve(cov2, cov1)))
    return 0.5 * (quad + trace - (logdet1 - logdet2) - d)


def _ridge(cov: np.ndarray) -> np.ndarray:
    d = cov.shape[0]
    return cov + KLCOV_RIDGE * np.trace(cov) / d * np.eye(d)


def kl_gaussian(sample1, sample2, full_covariance: bool = False, textbook: bool = False) -> float:
    x1, x2 = _matrix(sample1), _matrix(sample2)
    _check_pair(x1, x2, 2)
    mu1, mu2 = x1.mean(axis=0), x2.mean(axis=0)
    if full_covariance:
        cov1 = _ridge(np.atleast_2d(np.cov(x1, rowvar=False, ddof=1)))
        cov2 = _ridge(np.atleast_2d(np.cov(x2, rowvar=False, ddof=1)))
    else:
        cov1 = x1.var(axis=0, ddof=1)
        cov2 = x2.var(axis=0, ddof=1)
    return kl_from_moments(mu1, cov1, mu2, cov2, textbook=textbook)


# --------------------------------------------------------------------------
# Kolmogorov-Smirnov
# --------------------------------------------------------------------------

def _ks_sorted(a: np.ndarray, b: np.ndarray) -> float:
    # the sup of an ECDF difference is attained at a sample point
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.shape[0]
    fb = np.searchsorted(b, pts, side="right") / b.shape[0]
    return float(np.max(np.abs(fa - fb)))


def ks_statistic(sample1, sample2) -> float:
    """Sum over coordinates of sup_x |F1j(x) - F2j(x)|; lies in [0, d]."""
    x1, x2 = _matrix(sample1), _matrix(sample2)
    _check_pair(x1, x2, 1)
    s1 = np.sort(x1, axis=0)
    s2 = np.sort(x2, axis=0)
    return sum(_ks_sorted(s1[:, j], s2[:, j]) for j in range(x1.shape[1]))


# --------------------------------------------------------------------------
# naive Bayes AUC
# --------------------------------------------------------------------------

def nb_auc_statistic(sample1, sample2) -> float:
    """AUC - 0.5 of Gaussian NB trained to tell sample1 (Z=1) from sample2.

    The model is fit and scored on the same pooled rows. Scores are the
    posterior log-odds, which rank rows exactly as the class-1 probability
    does but without saturating at 0 or 1.
    """
    x1, x2 = _matrix(sample1), _matrix(sample2)
    _check_pair(x1, x2, 1)
    pooled = np.vstack([x1, x2])
    z = np.concatenate([np.ones(x1.shape[0], np.int8), np.zeros(x2.shape[0], np.int8)])
    if np.all(pooled == pooled[0]):
        warnings.warn("all pooled rows are identical; NB AUC statistic set to 0",
                      DegenerateStatisticWarning, stacklevel=2)
        return 0.0
    model = fit_gaussian_nb(pooled, z)
    return roc_auc(model.predict_log_odds(pooled), z) - 0.5


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def evaluate(kind, sample1, sample2) -> float:
    kind = StatisticKind.parse(kind)
    if kind is StatisticKind.KL:
        return kl_gaussian(sample1, sample2, full_covariance=False)
    if kind is StatisticKind.KLCOV:
        return kl_gaussian(sample1, sample2, full_covariance=True)
    if kind is StatisticKind.KS:
        return ks_statistic(sample1, sample2)
    return nb_auc_statistic(sample1, sample2)


def against_reference(kind, reference) -> Callable[[np.ndarray], float]:
    """Return ``sample -> T(sample, reference)`` with the reference prepared once.

    Used by the resampling loop where the second sample never changes.
    """
    kind = StatisticKind.parse(kind)
    ref = _matrix(reference)
    if kind is StatisticKind.KS:
        ref_sorted = np.sort(ref, axis=0)

        def ks(sample):
            x = np.sort(_matrix(sample), axis=0)
            _check_pair(x, ref, 1)
            return sum(_ks_sorted(x[:, j], ref_sorted[:, j]) for j in range(ref.shape[1]))

        return ks
    if kind is StatisticKind.KL:
        _check_pair(ref, ref, 2)
        mu2, v2 = ref.mean(axis=0), ref.var(axis=0, ddof=1)

        def kl(sample):
            x = _matrix(sample)
            _check_pair(x, ref, 2)
            return kl_from_moments(x.mean(axis=0), x.var(axis=0, ddof=1), mu2, v2)

        return kl
    return lambda sample: evaluate(kind, sample, ref)
