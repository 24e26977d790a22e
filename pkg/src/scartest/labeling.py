"""Propensity-score strategies and PU label assignment.

Four labeling mechanisms are supported:

* ``S0``: e(x) = c (SCAR)
* ``S1``: e(x) = sigmoid(g * x[0] + a)
* ``S2``: e(x) = sigmoid(g * x @ beta + a)
* ``S3``: e(x) = sigmoid(g * x @ beta + a) ** 10

The intercept ``a`` is chosen so that the mean propensity over the positive
rows equals a target label frequency c. For S1 it defaults to 0, giving the
bare sigmoid(g * x[0]) whose label frequency is whatever the data implies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from . import _rng
from .data import OracleDataset
from .learners import fit_logistic

KINDS = ("S0", "S1", "S2", "S3")
S3_EXPONENT = 10


class CalibrationError(RuntimeError):
    pass


class EmptyLabeledSetError(RuntimeError):
    pass


def sigmoid(s):
    """exp(s) / (1 + exp(s)), overflow-free for any finite input."""
    return expit(s)


def logit(p):
    p = np.asarray(p, dtype=np.float64)
    return np.log(p) - np.log1p(-p)


@dataclass(frozen=True)
class PropensityStrategy:
    kind: str
    c: Optional[float] = None
    g: float = 0.0
    beta: Optional[tuple] = None
    a: Optional[float] = None

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "S0":
            if self.c is None or not 0.0 < self.c <= 1.0:
                raise ValueError(f"S0 needs a label frequency c in (0, 1], got {self.c}")
        if self.g < 0:
            raise ValueError("g must be non-negative")
        if self.beta is not None:
            object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))

    @property
    def exponent(self) -> int:
        return S3_EXPONENT if self.kind == "S3" else 1

    def evaluate(self, x) -> np.ndarray:
        """Propensity for each row of ``x`` (a 1-d input is one row)."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        x = np.atleast_2d(x)
        if self.kind == "S0":
            e = np.full(x.shape[0], float(self.c))
        elif self.kind == "S1":
            e = sigmoid(self.g * x[:, 0] + (self.a or 0.0))
        else:
            if self.beta is None or self.a is None:
                raise ValueError(f"{self.kind} requires beta and a (see build_strategy)")
            beta = np.asarray(self.beta)
            if beta.shape[0] != x.shape[1]:
                raise ValueError(f"beta has length {beta.shape[0]} but x has {x.shape[1]} features")
            e = sigmoid(self.g * (x @ beta) + self.a) ** self.exponent
        return e[0] if single else e

    def to_text(self) -> str:
        lines = [f"kind={self.kind}", f"g={self.g!r}"]
        if self.c is not None:
            lines.append(f"c={self.c!r}")
        if self.beta is not None:
            lines.append("beta=" + ",".join(repr(b) for b in self.beta))
        if self.a is not None:
            lines.append(f"a={self.a!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PropensityStrategy":
        fields = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
        if "kind" not in fields:
            raise ValueError("strategy text has no 'kind' entry")
        beta = fields.get("beta")
        return cls(
            kind=fields["kind"],
            c=float(fields["c"]) if "c" in fields else None,
            g=float(fields.get("g", 0.0)),
            beta=tuple(float(b) for b in beta.split(",")) if beta else None,
            a=float(fields["a"]) if "a" in fields else None,
        )


def evaluate_propensity(strategy: PropensityStrategy, x) -> np.ndarray:
    return strategy.evaluate(x)


def calibrate_intercept(
    positives,
    beta,
    g: float,
    c_target: float,
    exponent: int = 1,
    lo: float = -40.0,
    hi: float = 40.0,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> float:
    """Find ``a`` with mean(sigmoid(g * X @ beta + a) ** exponent) == c_target.

    The mean is strictly increasing in ``a``, so bisection on a fixed bracket
    finds the unique root.
    """
    x = np.atleast_2d(np.asarray(positives, dtype=np.float64))
    if x.shape[0] == 0:
        raise ValueError("no positive rows to calibrate on")
    if not 0.0 < c_target < 1.0:
        raise ValueError(f"c_target must lie in (0, 1), got {c_target}")
    score = g * (x @ np.asarray(beta, dtype=np.float64))

    def mean_propensity(a):
        return float(np.mean(sigmoid(score + a) ** exponent))

    f_lo, f_hi = mean_propensity(lo) - c_target, mean_propensity(hi) - c_target
    if f_lo > 0 or f_hi < 0:
        raise CalibrationError(
            f"target c={c_target} not reachable for intercepts in [{lo}, {hi}]"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = mean_propensity(mid) - c_target
        if f_mid == 0.0 or hi - lo < 1e-13:
            break
        if f_mid < 0:
            lo = mid
        else:
            hi = mid
    if abs(f_mid) > tol:
        raise CalibrationError(
            f"bisection stopped at a={mid} with mean propensity off by {f_mid:.3g}"
        )
    return mid


def build_strategy(kind: str, ds: OracleDataset, c: Optional[float] = 0.5, g: float = 0.0,
                   l2: float = 1e-4) -> PropensityStrategy:
    """Instantiate a strategy for ``ds``.

    For S2/S3 the weight vector is fit by logistic regression on the fully
    labeled data. The intercept (S1-S3) is calibrated on the positive rows so
    the mean propensity equals ``c``; ``c=None`` leaves S1 uncalibrated.
    """
    kind = kind.upper()
    if kind == "S0":
        return PropensityStrategy("S0", c=c)
    positives = ds.features[ds.y == 1]
    if kind == "S1":
        if c is None:
            return PropensityStrategy("S1", g=g)
        unit = np.zeros(ds.d)
        unit[0] = 1.0
        return PropensityStrategy("S1", c=c, g=g, a=calibrate_intercept(positives, unit, g, c))
    beta, _ = fit_logistic(ds.features, ds.y, l2=l2)
    exponent = S3_EXPONENT if kind == "S3" else 1
    a = calibrate_intercept(positives, beta, g, c, exponent=exponent)
    return PropensityStrategy(kind, c=c, g=g, beta=tuple(beta), a=a)


def apply_labeling(ds: OracleDataset, strategy: PropensityStrategy, seed: int) -> OracleDataset:
    """Label each positive with probability e(x); negatives stay unlabeled.

    Returns a copy of ``ds`` carrying the drawn ``s``.
    """
    rng = _rng.generator(seed, _rng.LABELS)
    e = strategy.evaluate(ds.features)
    u = rng.random(ds.n)
    s = ((u < e) & (ds.y == 1)).astype(np.int8)
    if not s.any():
        raise EmptyLabeledSetError("labeling produced no labeled rows")
    return OracleDataset(ds.features, ds.y, s)
