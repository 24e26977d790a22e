"""Dataset containers, CSV ingestion and the two synthetic generators.

Gaussian variates come from NumPy's ``Generator.standard_normal`` (the
ziggurat method of Marsaglia and Tsang, as implemented in NumPy >= 1.17) on a
PCG64 bit generator seeded through ``SeedSequence``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import _rng


class DataError(ValueError):
    """Raised when input data violates a dataset invariant."""


def as_feature_matrix(values) -> np.ndarray:
    """Validate and freeze a 2-d float64 feature matrix."""
    x = np.array(values, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise DataError(f"feature matrix must be 2-d with n >= 1, d >= 1; got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError("feature matrix contains non-finite values")
    x.setflags(write=False)
    return x


def _as_binary(values, n: int, name: str) -> np.ndarray:
    v = np.asarray(values)
    if v.shape != (n,):
        raise DataError(f"{name} must have shape ({n},), got {v.shape}")
    if not np.all((v == 0) | (v == 1)):
        raise DataError(f"invalid label: {name} must contain only 0/1")
    out = v.astype(np.int8)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PUDataset:
    """Features plus the observed label indicator ``s``."""

    features: np.ndarray
    s: np.ndarray

    def __post_init__(self):
        x = as_feature_matrix(self.features)
        object.__setattr__(self, "features", x)
        s = _as_binary(self.s, x.shape[0], "s")
        if not s.any():
            raise DataError("empty labeled set: no row has s=1")
        if s.all():
            raise DataError("empty unlabeled set: every row has s=1")
        object.__setattr__(self, "s", s)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def labeled(self) -> np.ndarray:
        return np.flatnonzero(self.s == 1)

    @property
    def unlabeled(self) -> np.ndarray:
        return np.flatnonzero(self.s == 0)


@dataclass(frozen=True)
class OracleDataset:
    """Features with the (normally hidden) true class ``y``.

    ``s`` is optional; when present, negatives must be unlabeled.
    """

    features: np.ndarray
    y: np.ndarray
    s: Optional[np.ndarray] = None

    def __post_init__(self):
        x = as_feature_matrix(self.features)
        object.__setattr__(self, "features", x)
        y = _as_binary(self.y, x.shape[0], "y")
        object.__setattr__(self, "y", y)
        if self.s is not None:
            s = _as_binary(self.s, x.shape[0], "s")
            if np.any((s == 1) & (y == 0)):
                raise DataError("negative rows cannot be labeled (s=1 requires y=1)")
            object.__setattr__(self, "s", s)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def to_pu(self) -> PUDataset:
        if self.s is None:
            raise DataError("oracle dataset carries no label indicator")
        return PUDataset(self.features, self.s)


def empirical_prior(ds: OracleDataset) -> float:
    return float(np.count_nonzero(ds.y)) / ds.n


@dataclass(frozen=True)
class Art1Config:
    n: int
    d: int = 2
    seed: int = 0
    prior: float = 0.5
    # mean of the positive class is shift * (1, ..., 1)
    shift: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        if not 0.0 < self.prior < 1.0:
            raise ValueError(f"prior must lie in (0, 1), got {self.prior}")

    @property
    def mean(self) -> np.ndarray:
        return np.full(self.d, float(self.shift))


@dataclass(frozen=True)
class Art2Config(Art1Config):
    # Sigma[i, j] = rho ** |i - j| for the positive class
    rho: float = 0.5

    def covariance(self) -> np.ndarray:
        idx = np.arange(self.d)
        return self.rho ** np.abs(idx[:, None] - idx[None, :])


def _generate(cfg: Art1Config, chol: Optional[np.ndarray]) -> OracleDataset:
    rng = _rng.generator(cfg.seed, _rng.DATA)
    y = (rng.random(cfg.n) < cfg.prior).astype(np.int8)
    z = rng.standard_normal((cfg.n, cfg.d))
    pos = y == 1
    if chol is not None:
        z[pos] = z[pos] @ chol.T
    z[pos] += cfg.mean
    return OracleDataset(z, y)


def gen_art1(cfg: Art1Config) -> OracleDataset:
    """X | Y=0 ~ N(0, I), X | Y=1 ~ N(b, I), Y ~ Bernoulli(prior)."""
    return _generate(cfg, None)


def gen_art2(cfg: Art2Config) -> OracleDataset:
    """Like :func:`gen_art1` but the positive class has covariance rho^|i-j|."""
    chol = np.linalg.cholesky(cfg.covariance())
    return _generate(cfg, chol)


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------

def _read_table(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = [row for row in reader if row]
    if not rows:
        raise DataError(f"{path}: no data rows")
    return header, rows


def _parse_columns(header, rows, path) -> np.ndarray:
    out = np.empty((len(rows), len(header)), dtype=np.float64)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i + 2} has {len(row)} cells, expected {len(header)}")
        for j, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: non-numeric value {cell!r} in column {header[j]!r}, row {i + 2}"
                ) from None
            if not math.isfinite(value):
                raise DataError(f"{path}: non-finite value {cell!r} in column {header[j]!r}, row {i + 2}")
            out[i, j] = value
    return out


def _label_vector(table, header, name, path) -> np.ndarray:
    if name not in header:
        raise DataError(f"{path}: label column {name!r} not found in header {header}")
    col = table[:, header.index(name)]
    bad = ~np.isin(col, (0.0, 1.0))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise DataError(f"{path}: invalid label {col[i]!r} in column {name!r}, row {i + 2}")
    return col.astype(np.int8)


def load_csv(path, label_column: str = "s", drop: Sequence[str] = ()) -> PUDataset:
    """Read a PU dataset; every column except the label (and ``drop``) is a feature."""
    header, rows = _read_table(path)
    table = _parse_columns(header, rows, path)
    s = _label_vector(table, header, label_column, path)
    keep = [j for j, h in enumerate(header) if h != label_column and h not in drop]
    if not keep:
        raise DataError(f"{path}: no feature columns")
    return PUDataset(table[:, keep], s)


def load_oracle_csv(path, y_column: str = "y", s_column: Optional[str] = "s") -> OracleDataset:
    header, rows = _read_table(path)
    table = _parse_columns(header, rows, path)
    y = _label_vector(table, header, y_column, path)
    s = None
    if s_column is not None and s_column in header:
        s = _label_vector(table, header, s_column, path)
    skip = {y_column, s_column}
    keep = [j for j, h in enumerate(header) if h not in skip]
    if not keep:
        raise DataError(f"{path}: no feature columns")
    return OracleDataset(table[:, keep], y, s)


def feature_names(d: int) -> list[str]:
    return [f"x{j + 1}" for j in range(d)]


def _write_table(path, header, columns) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow(row)


def _fmt(x: np.ndarray) -> list[str]:
    # repr of a Python float is the shortest string that round-trips
    return [repr(float(v)) for v in x]


def write_csv(ds: PUDataset, path, label_column: str = "s", names: Optional[Sequence[str]] = None) -> None:
    names = list(names) if names is not None else feature_names(ds.d)
    cols = [_fmt(ds.features[:, j]) for j in range(ds.d)]
    cols.append([str(int(v)) for v in ds.s])
    _write_table(path, names + [label_column], cols)


def write_oracle_csv(ds: OracleDataset, path, names: Optional[Sequence[str]] = None) -> None:
    names = list(names) if names is not None else feature_names(ds.d)
    cols = [_fmt(ds.features[:, j]) for j in range(ds.d)]
    header = names[:]
    if ds.s is not None:
        cols.append([str(int(v)) for v in ds.s])
        header.append("s")
    cols.append([str(int(v)) for v in ds.y])
    header.append("y")
    _write_table(path, header, cols)
