"""Resampling test of the SCAR labeling assumption in positive-unlabeled data."""

__version__ = "0.1.0"

from .data import (  # noqa: E402
    Art1Config,
    Art2Config,
    OracleDataset,
    PUDataset,
    empirical_prior,
    gen_art1,
    gen_art2,
    load_csv,
    write_csv,
)
from .divergence import StatisticKind, evaluate  # noqa: E402
from .labeling import PropensityStrategy, apply_labeling, build_strategy  # noqa: E402
from .procedure import (  # noqa: E402
    PositiveSetApprox,
    TestResult,
    approximate_positive_set,
    p_value,
    run_oracle_tests,
    run_test,
    run_tests,
    simulate_null,
)

__all__ = [
    "Art1Config", "Art2Config", "OracleDataset", "PUDataset", "PositiveSetApprox",
    "PropensityStrategy", "StatisticKind", "TestResult", "apply_labeling",
    "approximate_positive_set", "build_strategy", "empirical_prior", "evaluate",
    "gen_art1", "gen_art2", "load_csv", "p_value", "run_oracle_tests", "run_test",
    "run_tests", "simulate_null", "write_csv",
]
