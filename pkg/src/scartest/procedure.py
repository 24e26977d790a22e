"""The resampling test of SCAR against SAR.

Steps:

1. Approximate the positive set: fit a naive classifier of S on X, rank the
   unlabeled rows by its score and add the top ``k = n*prior*(1 - c_hat)`` of
   them to the labeled rows, where ``c_hat = (|L|/n) / prior``.
2. Build the null distribution: ``B`` times, label each member of the
   approximated positive set independently with probability ``c_hat`` and
   compute the divergence between the artificially labeled rows and the
   approximated positive set.
3. Compare the observed divergence (real labels vs approximated positive set)
   with the null draws: ``p = #{T_b >= T_0} / B``; reject when ``p < alpha``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from . import _rng
from .data import OracleDataset, PUDataset
from .divergence import StatisticKind, against_reference, evaluate
from .learners import forest_factory

DEFAULT_B = 300
DEFAULT_ALPHA = 0.05
MAX_REDRAWS = 100


class PriorTooSmallError(ValueError):
    """The labeled fraction exceeds the supplied class prior."""


class ResampleError(RuntimeError):
    pass


@dataclass(frozen=True)
class PositiveSetApprox:
    indices: np.ndarray
    y_tilde: np.ndarray
    c_hat: float
    k: int
    # naive-classifier scores for every row; None when no ranking was needed
    scores: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return int(self.indices.shape[0])


@dataclass(frozen=True)
class TestResult:
    kind: StatisticKind
    t0: float
    null_samples: np.ndarray = field(repr=False)
    p_value: float
    reject: bool
    alpha: float
    approx: PositiveSetApprox = field(repr=False)
    seed: int = 0
    redraws: int = 0

    __test__ = False  # not a pytest class

    @property
    def B(self) -> int:
        return int(self.null_samples.shape[0])

    def record(self) -> dict:
        return {
            "statistic": self.kind.label,
            "t0": self.t0,
            "p_value": self.p_value,
            "reject": self.reject,
            "B": self.B,
            "alpha": self.alpha,
            "k": self.approx.k,
            "c_hat": self.approx.c_hat,
            "positive_set_size": self.approx.size,
            "seed": self.seed,
            "redraws": self.redraws,
        }

    def to_json(self, include_null: bool = False) -> str:
        rec = self.record()
        if include_null:
            rec["null_samples"] = [float(v) for v in self.null_samples]
        return json.dumps(rec, indent=2)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def _check_prior(prior: float) -> None:
    if not 0.0 < prior < 1.0:
        raise ValueError(f"class prior must lie in (0, 1), got {prior}")


def approximate_positive_set(
    data: PUDataset,
    prior: float,
    base_learner: Optional[Callable[[int], object]] = None,
    seed: int = 0,
) -> PositiveSetApprox:
    """Labeled rows plus the ``k`` unlabeled rows the naive classifier ranks highest.

    ``base_learner`` maps an integer seed to an unfitted classifier with
    ``fit``/``predict_proba``; the default is a 100-tree random forest.
    Ties in the score are broken by ascending row index.
    """
    _check_prior(prior)
    n = data.n
    labeled, unlabeled = data.labeled, data.unlabeled
    c_hat = (labeled.shape[0] / n) / prior
    if c_hat > 1.0 + 1e-12:
        raise PriorTooSmallError(
            f"prior too small: labeled fraction {labeled.shape[0] / n:.4g} exceeds prior {prior:.4g}"
        )
    c_hat = min(c_hat, 1.0)
    # n * prior * (1 - c_hat) == n * prior - |L|
    k = _round_half_up(n * prior - labeled.shape[0])
    k = min(max(k, 0), unlabeled.shape[0])

    scores = None
    chosen = unlabeled[:0]
    if k > 0:
        make = base_learner or forest_factory()
        model = make(_rng.int_seed(seed, _rng.LEARNER))
        model.fit(data.features, data.s)
        scores = np.asarray(model.predict_proba(data.features), dtype=np.float64)
        u_scores = scores[unlabeled]
        order = np.lexsort((unlabeled, -u_scores))
        chosen = unlabeled[order[:k]]
    indices = np.sort(np.concatenate([labeled, chosen]))
    y_tilde = np.zeros(n, dtype=np.int8)
    y_tilde[indices] = 1
    return PositiveSetApprox(indices, y_tilde, c_hat, int(k), scores)


def oracle_positive_set(data: OracleDataset) -> PositiveSetApprox:
    """Use the true positive set; ``c_hat`` is then |L| / |P|.

    Only meaningful on synthetic or benchmark data where ``y`` is known.
    """
    if data.s is None:
        raise ValueError("oracle dataset carries no label indicator")
    indices = np.flatnonzero(data.y == 1)
    n_labeled = int(np.count_nonzero(data.s))
    y_tilde = data.y.astype(np.int8)
    return PositiveSetApprox(indices, y_tilde, n_labeled / indices.shape[0],
                             indices.shape[0] - n_labeled)


def _min_rows(kind: StatisticKind) -> int:
    return 2 if kind in (StatisticKind.KL, StatisticKind.KLCOV) else 1


def null_masks(approx: PositiveSetApprox, B: int, seed: int, min_rows: int = 1):
    """Yield the ``B`` artificial SCAR label masks over ``approx.indices``.

    Draw ``b`` uses row ``b`` of a single uniform block; a draw with fewer than
    ``min_rows`` labels is replaced from a stream keyed on ``(seed, b)``, so
    every mask depends only on ``seed`` and ``b``.

    Yields:
        (mask, n_redraws) for b = 0..B-1
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    if not 0.0 < approx.c_hat <= 1.0:
        raise ValueError(f"c_hat must lie in (0, 1], got {approx.c_hat}")
    m = approx.size
    if m < min_rows:
        raise ResampleError(f"positive set has {m} rows; the statistic needs {min_rows}")
    block = _rng.generator(seed, _rng.NULL).random((B, m))
    for b in range(B):
        mask = block[b] < approx.c_hat
        redraws = 0
        if np.count_nonzero(mask) < min_rows:
            rng = _rng.generator(seed, _rng.REDRAW, b)
            while np.count_nonzero(mask) < min_rows:
                if redraws == MAX_REDRAWS:
                    raise ResampleError(
                        f"c_hat={approx.c_hat:.3g} too small: {MAX_REDRAWS} redraws left "
                        f"fewer than {min_rows} artificial labels"
                    )
                mask = rng.random(m) < approx.c_hat
                redraws += 1
        yield mask, redraws


def _simulate(approx, features, kinds, B, seed):
    members = features[approx.indices]
    stats = {kind: against_reference(kind, members) for kind in kinds}
    out = {kind: np.empty(B) for kind in kinds}
    need = max(_min_rows(kind) for kind in kinds)
    total = 0
    for b, (mask, redraws) in enumerate(null_masks(approx, B, seed, need)):
        total += redraws
        sample = members[mask]
        for kind in kinds:
            out[kind][b] = stats[kind](sample)
    return out, total


def simulate_null(approx: PositiveSetApprox, features, kind, B: int = DEFAULT_B,
                  seed: int = 0) -> np.ndarray:
    kind = StatisticKind.parse(kind)
    x = np.asarray(features, dtype=np.float64)
    return _simulate(approx, x, [kind], B, seed)[0][kind]


def p_value(t0: float, null_samples, exact: bool = False) -> float:
    """Fraction of null draws at least as large as ``t0``.

    ``exact=True`` counts the observed value as one more draw:
    (#{T_b >= t0} + 1) / (B + 1).
    """
    null = np.asarray(null_samples, dtype=np.float64)
    if null.size == 0:
        raise ValueError("null_samples is empty")
    count = int(np.count_nonzero(null >= t0))
    if exact:
        return (count + 1) / (null.size + 1)
    return count / null.size


def _assemble(data_features, s, approx, kinds, B, alpha, seed, exact):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    kinds = [StatisticKind.parse(k) for k in kinds]
    null, redraws = _simulate(approx, data_features, kinds, B, seed)
    labeled = data_features[s == 1]
    members = data_features[approx.indices]
    results = {}
    for kind in kinds:
        t0 = evaluate(kind, labeled, members)
        p = p_value(t0, null[kind], exact=exact)
        results[kind] = TestResult(kind, float(t0), null[kind], p, p < alpha, alpha,
                                   approx, seed, redraws)
    return results


def run_tests(
    data: PUDataset,
    prior: float,
    kinds: Iterable = tuple(StatisticKind),
    B: int = DEFAULT_B,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    base_learner: Optional[Callable[[int], object]] = None,
    exact: bool = False,
) -> dict:
    """Run the test for several statistics on one positive-set approximation.

    All statistics see the same approximated positive set and the same
    artificial label draws.
    """
    approx = approximate_positive_set(data, prior, base_learner, seed)
    return _assemble(data.features, data.s, approx, kinds, B, alpha, seed, exact)


def run_test(
    data: PUDataset,
    prior: float,
    kind=StatisticKind.KS,
    B: int = DEFAULT_B,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    base_learner: Optional[Callable[[int], object]] = None,
    exact: bool = False,
) -> TestResult:
    kind = StatisticKind.parse(kind)
    return run_tests(data, prior, [kind], B, alpha, seed, base_learner, exact)[kind]


def run_oracle_tests(
    data: OracleDataset,
    kinds: Iterable = (StatisticKind.KS,),
    B: int = DEFAULT_B,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    exact: bool = False,
) -> dict:
    """The test with the true positive set in place of the approximation."""
    approx = oracle_positive_set(data)
    return _assemble(data.features, data.s, approx, kinds, B, alpha, seed, exact)
