"""Monte Carlo estimation of rejection probabilities.

Each replicate generates oracle data, assigns PU labels with a propensity
strategy, runs the test for every requested statistic and records the
decisions. The replicate seeds are derived from (master seed, cell, replicate)
so results do not depend on ``n_jobs`` or on which other cells are run.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import yaml
from joblib import Parallel, delayed

from . import _rng
from .data import Art1Config, Art2Config, OracleDataset, empirical_prior, gen_art1, gen_art2, load_oracle_csv
from .divergence import StatisticKind
from .labeling import EmptyLabeledSetError, apply_labeling, build_strategy
from .procedure import DEFAULT_ALPHA, DEFAULT_B, run_tests

log = logging.getLogger(__name__)

GENERATORS = ("art1", "art2", "csv")
GRID_COLUMNS = ("generator", "strategy", "g", "c", "n", "statistic", "probability", "se",
                "wall_time", "error")
MAX_LABEL_RETRIES = 20
DESK_REPS = 100
FULL_REPS = 500


class GridConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    generator: str = "art1"
    n: int = 1000
    d: int = 2
    strategy: str = "S0"
    c: Optional[float] = 0.5
    g: float = 0.0
    statistics: tuple = (StatisticKind.KL, StatisticKind.KS, StatisticKind.NB_AUC)
    B: int = DEFAULT_B
    alpha: float = DEFAULT_ALPHA
    # "true" uses the realised class fraction of each replicate's data
    prior: Union[str, float] = "true"
    prior_scale: float = 1.0
    reps: int = DESK_REPS
    seed: int = 0
    cell: int = 0
    data_prior: float = 0.5
    csv_path: Optional[str] = None
    y_column: str = "y"

    def __post_init__(self):
        gen = self.generator.lower()
        if gen not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}; expected one of {GENERATORS}")
        object.__setattr__(self, "generator", gen)
        object.__setattr__(self, "strategy", self.strategy.upper())
        kinds = self.statistics
        if isinstance(kinds, (str, StatisticKind)):
            kinds = (kinds,)
        object.__setattr__(self, "statistics", tuple(StatisticKind.parse(k) for k in kinds))
        if not self.statistics:
            raise ValueError("at least one statistic is required")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.B < 1:
            raise ValueError("B must be >= 1")
        if self.seed < 0 or self.cell < 0:
            raise ValueError("seed and cell must be non-negative")
        if gen == "csv" and not self.csv_path:
            raise ValueError("the csv generator needs csv_path")
        if self.prior is True or str(self.prior).lower() == "true":
            # YAML reads a bare `true` as a boolean
            object.__setattr__(self, "prior", "true")
        elif isinstance(self.prior, bool) or not 0.0 < float(self.prior) < 1.0:
            raise ValueError(f"supplied prior must lie in (0, 1), got {self.prior}")
        if self.prior_scale <= 0:
            raise ValueError("prior_scale must be positive")


@dataclass(frozen=True)
class RejectionEstimate:
    kind: StatisticKind
    probability: float
    se: float
    reps: int
    retries: int
    config: ExperimentConfig = field(repr=False)
    wall_time: float = float("nan")


_CSV_CACHE: dict = {}


def _oracle_data(cfg: ExperimentConfig, rep: int) -> OracleDataset:
    if cfg.generator == "csv":
        key = (cfg.csv_path, cfg.y_column)
        if key not in _CSV_CACHE:
            _CSV_CACHE[key] = load_oracle_csv(cfg.csv_path, y_column=cfg.y_column, s_column=None)
        return _CSV_CACHE[key]
    seed = _rng.int_seed(cfg.seed, cfg.cell, rep, _rng.DATA)
    if cfg.generator == "art1":
        return gen_art1(Art1Config(n=cfg.n, d=cfg.d, seed=seed, prior=cfg.data_prior))
    return gen_art2(Art2Config(n=cfg.n, d=cfg.d, seed=seed, prior=cfg.data_prior))


def _replicate(cfg: ExperimentConfig, rep: int) -> tuple[dict, int]:
    ds = _oracle_data(cfg, rep)
    strategy = build_strategy(cfg.strategy, ds, c=cfg.c, g=cfg.g)
    retries = 0
    while True:
        try:
            labeled = apply_labeling(ds, strategy, _rng.int_seed(cfg.seed, cfg.cell, rep, _rng.LABELS, retries))
            break
        except EmptyLabeledSetError:
            retries += 1
            log.warning("cell %d rep %d: empty labeled set, retry %d", cfg.cell, rep, retries)
            if retries > MAX_LABEL_RETRIES:
                raise
    true_prior = empirical_prior(ds) if cfg.prior == "true" else float(cfg.prior)
    prior = true_prior * cfg.prior_scale
    results = run_tests(labeled.to_pu(), prior, cfg.statistics, B=cfg.B, alpha=cfg.alpha,
                        seed=_rng.int_seed(cfg.seed, cfg.cell, rep, _rng.NULL))
    return {kind: res.reject for kind, res in results.items()}, retries


def estimate_rejections(cfg: ExperimentConfig, n_jobs: int = 1) -> dict:
    """Rejection probability for every statistic in ``cfg``, sharing replicates."""
    start = time.perf_counter()
    out = Parallel(n_jobs=n_jobs)(delayed(_replicate)(cfg, r) for r in range(cfg.reps))
    elapsed = time.perf_counter() - start
    retries = sum(r for _, r in out)
    estimates = {}
    for kind in cfg.statistics:
        p = float(np.mean([rej[kind] for rej, _ in out]))
        estimates[kind] = RejectionEstimate(kind, p, math.sqrt(p * (1.0 - p) / cfg.reps),
                                            cfg.reps, retries, cfg, elapsed)
    return estimates


def estimate_rejection(cfg: ExperimentConfig, kind=None, n_jobs: int = 1) -> RejectionEstimate:
    kind = StatisticKind.parse(kind) if kind is not None else cfg.statistics[0]
    return estimate_rejections(replace(cfg, statistics=(kind,)), n_jobs=n_jobs)[kind]


# --------------------------------------------------------------------------
# grids
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GridRow:
    generator: str
    strategy: str
    g: float
    c: Optional[float]
    n: int
    statistic: str
    probability: float
    se: float
    wall_time: Optional[float] = None
    error: str = ""


def run_grid(cfgs: Sequence[ExperimentConfig], n_jobs: int = 1, record_time: bool = True) -> list:
    """Evaluate every (config, statistic) cell; a failing cell is recorded, not raised."""
    if not cfgs:
        raise ValueError("empty grid")
    rows = []
    for i, cfg in enumerate(cfgs):
        log.info("cell %d/%d: %s %s g=%s c=%s n=%d", i + 1, len(cfgs), cfg.generator,
                 cfg.strategy, cfg.g, cfg.c, cfg.n)
        common = dict(generator=cfg.generator, strategy=cfg.strategy, g=cfg.g, c=cfg.c, n=cfg.n)
        try:
            est = estimate_rejections(cfg, n_jobs=n_jobs)
        except Exception as exc:  # noqa: BLE001 -- a grid keeps going past a bad cell
            log.error("cell %d failed: %s", i + 1, exc)
            for kind in cfg.statistics:
                rows.append(GridRow(statistic=kind.label, probability=float("nan"), se=float("nan"),
                                    error=f"{type(exc).__name__}: {exc}", **common))
            continue
        for kind, e in est.items():
            rows.append(GridRow(statistic=kind.label, probability=e.probability, se=e.se,
                                wall_time=e.wall_time if record_time else None, **common))
    return rows


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def grid_csv(rows: Sequence[GridRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GRID_COLUMNS)
    for row in rows:
        rec = asdict(row)
        writer.writerow([_cell(rec[col]) for col in GRID_COLUMNS])
    return buf.getvalue()


def write_grid_csv(rows: Sequence[GridRow], path) -> None:
    Path(path).write_text(grid_csv(rows), encoding="utf-8")


# --------------------------------------------------------------------------
# prior misspecification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    multiplier: float
    statistic: str
    probability: float
    se: float
    skipped: str = ""


def prior_misspecification_sweep(cfg: ExperimentConfig, multipliers: Sequence[float],
                                 n_jobs: int = 1) -> list:
    """Rerun ``cfg`` with the supplied prior scaled by each multiplier.

    Every multiplier reuses the replicate seeds of ``cfg``, so multiplier 1.0
    reproduces the baseline exactly. Infeasible multipliers are reported as
    skipped.
    """
    rows = []
    for mult in multipliers:
        if mult <= 0:
            raise ValueError(f"multipliers must be positive, got {mult}")
        base = cfg.data_prior if cfg.prior == "true" else float(cfg.prior)
        reason = ""
        if base * mult >= 1.0:
            reason = f"scaled prior {base * mult:.3g} >= 1"
        else:
            try:
                est = estimate_rejections(replace(cfg, prior_scale=cfg.prior_scale * mult), n_jobs)
            except ValueError as exc:
                reason = str(exc)
        if reason:
            rows.extend(SweepRow(mult, k.label, float("nan"), float("nan"), reason) for k in cfg.statistics)
        else:
            rows.extend(SweepRow(mult, k.label, e.probability, e.se) for k, e in est.items())
    return rows


# --------------------------------------------------------------------------
# grid files
# --------------------------------------------------------------------------

_FIELDS = {f for f in ExperimentConfig.__dataclass_fields__ if f != "cell"}


def expand_grid(spec: dict, reps: Optional[int] = None, B: Optional[int] = None) -> list:
    """Turn a parsed grid document into configs.

    ``defaults`` apply to every entry of ``cells``; list values (other than
    ``statistics``) expand into a Cartesian product.
    """
    if not isinstance(spec, dict) or "cells" not in spec:
        raise GridConfigError("grid file must be a mapping with a 'cells' list")
    defaults = spec.get("defaults") or {}
    cells = spec["cells"]
    if not isinstance(defaults, dict) or not isinstance(cells, list) or not cells:
        raise GridConfigError("'defaults' must be a mapping and 'cells' a non-empty list")
    out = []
    for entry in cells:
        if not isinstance(entry, dict):
            raise GridConfigError(f"cell entry must be a mapping, got {entry!r}")
        merged = {**defaults, **entry}
        unknown = set(merged) - _FIELDS
        if unknown:
            raise GridConfigError(f"unknown keys {sorted(unknown)}")
        if isinstance(merged.get("statistics"), str):
            merged["statistics"] = [merged["statistics"]]
        keys = [k for k, v in merged.items() if isinstance(v, list) and k != "statistics"]
        for combo in itertools.product(*(merged[k] for k in keys)):
            values = {**merged, **dict(zip(keys, combo))}
            if reps is not None:
                values["reps"] = reps
            if B is not None:
                values["B"] = B
            if "statistics" in values:
                values["statistics"] = tuple(values["statistics"])
            try:
                out.append(ExperimentConfig(cell=len(out), **values))
            except (TypeError, ValueError) as exc:
                raise GridConfigError(f"invalid cell {values}: {exc}") from None
    return out


def load_grid(path, reps: Optional[int] = None, B: Optional[int] = None) -> list:
    try:
        spec = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise GridConfigError(f"{path}: not valid YAML: {exc}") from None
    return expand_grid(spec, reps=reps, B=B)
