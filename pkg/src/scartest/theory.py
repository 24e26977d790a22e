"""Numerical checks of the ranking, concomitant and p-value guarantees.

Under SCAR, s(x) = c * y(x) and the posterior of Y=1 among *unlabeled* rows is

    tilde_y(x) = (1 - c) * y(x) / (1 - c * y(x)),

an increasing function of y(x). Ranking unlabeled rows by the naive score is
therefore ranking them by their chance of being positive. If the top ``k`` of
``m`` unlabeled rows are added to the labeled set, the probability that all of
them are positive is bounded below by prod_{i=1..k} (1 - i / (m + 1)) when the
dominance condition holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from scipy.stats import binom, chisquare

from . import _rng
from .data import Art1Config, gen_art1
from .divergence import StatisticKind
from .labeling import PropensityStrategy, apply_labeling
from .procedure import DEFAULT_B, run_oracle_tests

SUPER_UNIFORM_LEVELS = (0.01, 0.05, 0.1, 0.25)


def tilde_y(y, c):
    """P(Y=1 | S=0, x) from y(x) = P(Y=1 | x) under SCAR with label frequency c."""
    y = np.asarray(y, dtype=np.float64)
    return (1.0 - c) * y / (1.0 - c * y)


def concomitant_bound(k: int, m: int) -> float:
    """prod_{i=1..k} (1 - i / (m + 1))."""
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= m, got k={k}, m={m}")
    return math.prod(1.0 - i / (m + 1) for i in range(1, k + 1))


def art1_oracle_posterior(x, prior: float, b) -> np.ndarray:
    """y(x) for the Art1 generator: N(b, I) positives vs N(0, I) negatives.

    log-odds = logit(prior) + x.b - |b|^2 / 2
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim <= 1
    rows = x.reshape(1, -1) if single else x
    b = np.broadcast_to(np.asarray(b, dtype=np.float64), (rows.shape[1],))
    log_odds = math.log(prior) - math.log1p(-prior) + rows @ b - 0.5 * float(b @ b)
    out = expit(log_odds)
    return float(out[0]) if single else out


@dataclass(frozen=True)
class ConcomitantConfig:
    prior: float
    c: float
    n: int

    def __post_init__(self):
        if not 0.0 < self.prior < 1.0 or not 0.0 < self.c < 1.0:
            raise ValueError("prior and c must lie in (0, 1)")
        if not 1 <= self.k <= self.m:
            raise ValueError(f"need 1 <= k <= m, got k={self.k}, m={self.m}")

    @property
    def m(self) -> int:
        # expected number of unlabeled rows
        return round(self.n * (1.0 - self.c * self.prior))

    @property
    def k(self) -> int:
        # expected number of unlabeled positives
        return round(self.n * (self.prior - self.c * self.prior))

    @property
    def unlabeled_positive_rate(self) -> float:
        return self.prior * (1.0 - self.c) / (1.0 - self.c * self.prior)


@dataclass(frozen=True)
class ConcomitantResult:
    k: int
    m: int
    bound: float
    estimate: float
    se: float
    reps: int
    # hits[r, i] == 1 when the i-th ranked unlabeled row of replicate r is positive
    hits: np.ndarray = field(repr=False)

    @property
    def per_rank(self) -> np.ndarray:
        return self.hits.mean(axis=0)

    @property
    def per_rank_se(self) -> np.ndarray:
        p = self.per_rank
        return np.sqrt(p * (1.0 - p) / self.reps)

    def joint(self, i: int, j: int) -> tuple[float, float]:
        """Empirical P(Y_[i]=1, Y_[j]=1) and its standard error (1-based ranks)."""
        both = self.hits[:, i - 1] * self.hits[:, j - 1]
        p = float(both.mean())
        return p, math.sqrt(p * (1.0 - p) / self.reps)

    @property
    def holds(self) -> bool:
        return self.estimate >= self.bound - 2.0 * self.se


def positive_count_ceiling(cfg: ConcomitantConfig, k: int | None = None) -> float:
    """P(at least k of the m unlabeled rows are positive).

    No ranking can put k positives on top more often than this, so when it is
    below the bound the dominance condition cannot hold.
    """
    k = cfg.k if k is None else k
    return float(binom.sf(k - 1, cfg.m, cfg.unlabeled_positive_rate))


def _unlabeled_sample(cfg: ConcomitantConfig, shape, d, b, rng):
    mean = np.broadcast_to(np.asarray(b, dtype=np.float64), (d,))
    y = (rng.random(shape) < cfg.unlabeled_positive_rate).astype(np.int8)
    x = rng.standard_normal(shape + (d,)) + y[..., None] * mean
    log_odds = math.log(cfg.prior) - math.log1p(-cfg.prior) + x @ mean - 0.5 * float(mean @ mean)
    return y, tilde_y(expit(log_odds), cfg.c)


def dominance_gap(cfg: ConcomitantConfig, d: int = 2, b=3.0, samples: int = 200_000,
                  seed: int = 0, grid: int = 1001) -> float:
    """Monte Carlo max over z of F(z) - z, F the cdf of tilde_y(X) given S=0.

    tilde_y is the exact posterior of Y among unlabeled rows, so h(z) = z and
    F is simply the law of tilde_y(X). The dominance condition F(z) <= z holds
    when the gap is (up to sampling noise) zero.
    """
    rng = _rng.generator(seed, _rng.STATISTIC)
    _, score = _unlabeled_sample(cfg, (samples,), d, b, rng)
    z = np.linspace(0.0, 1.0, grid)
    F = np.searchsorted(np.sort(score), z, side="right") / samples
    return float(max(0.0, np.max(F - z)))


def simulate_concomitant_precision(cfg: ConcomitantConfig, d: int = 2, b=3.0, reps: int = 2000,
                                   seed: int = 0, k: int | None = None) -> ConcomitantResult:
    """Monte Carlo estimate of P(top-k unlabeled rows are all positive).

    Each replicate draws ``m`` unlabeled rows from the Art1 model conditioned
    on S=0 under SCAR (so each is positive with probability
    prior(1-c)/(1-c*prior)), ranks them by the true tilde_y and records the
    classes of the top ``k``.
    """
    k = cfg.k if k is None else k
    m = cfg.m
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= m, got k={k}, m={m}")
    y, score = _unlabeled_sample(cfg, (reps, m), d, b, _rng.generator(seed, _rng.DATA))
    order = np.argsort(-score, axis=1, kind="stable")[:, :k]
    hits = np.take_along_axis(y, order, axis=1)
    all_hit = hits.all(axis=1)
    p = float(all_hit.mean())
    return ConcomitantResult(k, m, concomitant_bound(k, m), p, math.sqrt(p * (1 - p) / reps),
                             reps, hits)


# --------------------------------------------------------------------------
# ranking
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MonotonicityReport:
    pairs: int
    violations: int
    vectors: int
    ranking_mismatches: int

    @property
    def holds(self) -> bool:
        return self.violations == 0 and self.ranking_mismatches == 0


def check_ranking_equivalence(pairs: int = 10**6, vectors: int = 1000, size: int = 100,
                              seed: int = 0) -> MonotonicityReport:
    """Count monotonicity violations of tilde_y and ordering disagreements.

    A violation is y1 < y2 with tilde_y(y1, c) >= tilde_y(y2, c). A mismatch is
    a vector whose argsort by c*y differs from its argsort by tilde_y(y, c).
    """
    rng = _rng.generator(seed, _rng.STATISTIC)
    u = rng.random((pairs, 2))
    c = rng.random(pairs)
    y1, y2 = u.min(axis=1), u.max(axis=1)
    distinct = y1 < y2
    violations = int(np.count_nonzero(distinct & (tilde_y(y1, c) >= tilde_y(y2, c))))
    mismatches = 0
    for _ in range(vectors):
        y = rng.random(size)
        cv = rng.random()
        a = np.argsort(cv * y, kind="stable")
        t = np.argsort(tilde_y(y, cv), kind="stable")
        mismatches += int(not np.array_equal(a, t))
    return MonotonicityReport(pairs, violations, vectors, mismatches)


# --------------------------------------------------------------------------
# super-uniformity of the oracle p-value
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SuperUniformityReport:
    kind: StatisticKind
    reps: int
    B: int
    p_values: np.ndarray = field(repr=False)
    ranks: np.ndarray = field(repr=False)

    def rows(self, levels=SUPER_UNIFORM_LEVELS):
        out = []
        for t in levels:
            freq = float(np.mean(self.p_values < t))
            limit = t + 2.0 * math.sqrt(t * (1.0 - t) / self.reps)
            out.append({"t": t, "rejection": freq, "limit": limit, "ok": freq <= limit})
        return out

    @property
    def holds(self) -> bool:
        return all(r["ok"] for r in self.rows())

    def rank_uniformity_pvalue(self, bins: int = 10) -> float:
        """Chi-square p-value for the rank of T_0 among T_0..T_B being uniform."""
        values = np.arange(self.B + 1)
        edges = values * bins // (self.B + 1)
        expected = np.bincount(edges, minlength=bins) / (self.B + 1) * self.reps
        observed = np.bincount(self.ranks * bins // (self.B + 1), minlength=bins)
        return float(chisquare(observed, expected).pvalue)


def simulate_super_uniformity(n: int = 1000, d: int = 2, c: float = 0.5, kind=StatisticKind.KS,
                              B: int = DEFAULT_B, reps: int = 500, seed: int = 0,
                              prior: float = 0.5) -> SuperUniformityReport:
    """Run the test with the true positive set on Art1 + SCAR data ``reps`` times."""
    kind = StatisticKind.parse(kind)
    strategy = PropensityStrategy("S0", c=c)
    pvals = np.empty(reps)
    ranks = np.empty(reps, dtype=np.int64)
    for r in range(reps):
        ds = gen_art1(Art1Config(n=n, d=d, prior=prior, seed=_rng.int_seed(seed, r, _rng.DATA)))
        labeled = apply_labeling(ds, strategy, _rng.int_seed(seed, r, _rng.LABELS))
        res = run_oracle_tests(labeled, [kind], B=B, seed=_rng.int_seed(seed, r, _rng.NULL))[kind]
        pvals[r] = res.p_value
        # ties are split at random so the rank stays uniform under exchangeability
        below = np.count_nonzero(res.null_samples < res.t0)
        tied = np.count_nonzero(res.null_samples == res.t0)
        extra = _rng.generator(seed, r, _rng.STATISTIC).integers(0, tied + 1) if tied else 0
        ranks[r] = below + extra
    return SuperUniformityReport(kind, reps, B, pvals, ranks)
