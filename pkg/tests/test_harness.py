import csv
import io
import math

import numpy as np
import pytest

from scartest.data import Art1Config, gen_art1, write_oracle_csv
from scartest.divergence import StatisticKind
from scartest.harness import (
    GRID_COLUMNS,
    ExperimentConfig,
    GridConfigError,
    estimate_rejection,
    estimate_rejections,
    expand_grid,
    grid_csv,
    load_grid,
    prior_misspecification_sweep,
    run_grid,
)

SMALL = dict(n=200, B=30, reps=6, statistics=("ks", "nbauc"))


def parse(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestConfig:
    def test_normalizes(self):
        cfg = ExperimentConfig(generator="Art1", strategy="s1", statistics="ks")
        assert cfg.generator == "art1" and cfg.strategy == "S1"
        assert cfg.statistics == (StatisticKind.KS,)

    @pytest.mark.parametrize("kw", [dict(generator="art9"), dict(reps=0), dict(B=0), dict(prior=1.2),
                                    dict(statistics=()), dict(generator="csv"), dict(prior=False)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ExperimentConfig(**kw)


class TestEstimate:
    def test_fields(self):
        est = estimate_rejection(ExperimentConfig(**SMALL), "ks")
        assert 0.0 <= est.probability <= 1.0
        assert est.se == pytest.approx(math.sqrt(est.probability * (1 - est.probability) / est.reps))
        assert est.kind is StatisticKind.KS

    def test_shared_replicates(self):
        cfg = ExperimentConfig(**SMALL)
        both = estimate_rejections(cfg)
        single = estimate_rejection(cfg, "ks")
        assert both[StatisticKind.KS].probability == single.probability

    def test_deterministic_and_job_invariant(self):
        cfg = ExperimentConfig(strategy="S1", g=2.0, **SMALL)
        a = estimate_rejections(cfg, n_jobs=1)
        b = estimate_rejections(cfg, n_jobs=2)
        assert {k: v.probability for k, v in a.items()} == {k: v.probability for k, v in b.items()}

    def test_strong_sar_detected(self):
        cfg = ExperimentConfig(strategy="S1", g=4.0, n=500, B=50, reps=5, statistics=("ks",))
        assert estimate_rejection(cfg).probability == 1.0

    @pytest.mark.parametrize("strategy", ["S2", "S3"])
    def test_other_strategies_run(self, strategy):
        cfg = ExperimentConfig(strategy=strategy, g=1.0, **SMALL)
        est = estimate_rejections(cfg)
        assert all(0.0 <= e.probability <= 1.0 for e in est.values())

    def test_art2(self):
        est = estimate_rejection(ExperimentConfig(generator="art2", d=3, **SMALL))
        assert 0.0 <= est.probability <= 1.0

    def test_csv_generator(self, tmp_path):
        ds = gen_art1(Art1Config(n=300, seed=1))
        write_oracle_csv(ds, tmp_path / "o.csv")
        cfg = ExperimentConfig(generator="csv", csv_path=str(tmp_path / "o.csv"), **SMALL)
        est = estimate_rejection(cfg)
        assert 0.0 <= est.probability <= 1.0

    @pytest.mark.slow
    def test_s1_g0_matches_s0(self):
        base = dict(n=500, B=100, reps=100, statistics=("ks",))
        s0 = estimate_rejection(ExperimentConfig(strategy="S0", c=0.5, seed=1, **base))
        s1 = estimate_rejection(ExperimentConfig(strategy="S1", g=0.0, c=0.5, seed=2, **base))
        pooled = (s0.probability + s1.probability) / 2
        se = math.sqrt(max(pooled * (1 - pooled), 1e-12) * 2 / 100)
        assert abs(s0.probability - s1.probability) / se < 4


class TestGrid:
    def test_one_cell(self):
        rows = run_grid([ExperimentConfig(statistics=("ks",), n=200, B=20, reps=3)], record_time=False)
        table = parse(grid_csv(rows))
        assert len(table) == 1
        assert tuple(table[0]) == GRID_COLUMNS
        assert table[0]["wall_time"] == "" and table[0]["error"] == ""

    def test_deterministic(self):
        cfgs = expand_grid({"defaults": {"n": 200, "B": 20, "reps": 4, "statistics": ["ks", "kl"]},
                            "cells": [{"strategy": "S1", "g": [0.0, 2.0]}]})
        a = grid_csv(run_grid(cfgs, record_time=False))
        b = grid_csv(run_grid(cfgs, n_jobs=2, record_time=False))
        assert a == b
        assert len(parse(a)) == 4

    def test_failing_cell_recorded(self):
        bad = ExperimentConfig(statistics=("ks",), n=200, B=20, reps=2, prior=0.05)
        good = ExperimentConfig(statistics=("ks",), n=200, B=20, reps=2, cell=1)
        table = parse(grid_csv(run_grid([bad, good], record_time=False)))
        assert "PriorTooSmallError" in table[0]["error"] and table[0]["probability"] == "nan"
        assert table[1]["error"] == ""

    def test_timing_column(self):
        rows = run_grid([ExperimentConfig(statistics=("ks",), n=200, B=10, reps=2)])
        assert float(parse(grid_csv(rows))[0]["wall_time"]) > 0

    def test_empty(self):
        with pytest.raises(ValueError):
            run_grid([])

    @pytest.mark.slow
    def test_power_grows_with_n(self):
        cfgs = expand_grid({"defaults": {"strategy": "S1", "g": 1.0, "statistics": "ks", "B": 100, "reps": 30},
                            "cells": [{"n": [250, 500, 1000, 2000]}]})
        table = parse(grid_csv(run_grid(cfgs, record_time=False)))
        p = [float(r["probability"]) for r in table]
        se = [float(r["se"]) for r in table]
        for i in range(3):
            assert p[i + 1] >= p[i] - 2 * math.hypot(se[i], se[i + 1])


class TestGridFile:
    def test_expansion(self):
        cfgs = expand_grid({"defaults": {"n": 500, "statistics": "ks"},
                            "cells": [{"strategy": "S0"}, {"strategy": "S1", "g": [0, 1, 2], "n": [250, 500]}]},
                           reps=7, B=11)
        assert len(cfgs) == 7
        assert [c.cell for c in cfgs] == list(range(7))
        assert all(c.reps == 7 and c.B == 11 for c in cfgs)
        assert cfgs[0].statistics == (StatisticKind.KS,)
        assert {(c.g, c.n) for c in cfgs[1:]} == {(g, n) for g in (0, 1, 2) for n in (250, 500)}

    def test_load(self, tmp_path):
        path = tmp_path / "grid.yaml"
        path.write_text("defaults:\n  n: 300\ncells:\n  - strategy: S1\n    g: 2\n    statistics: [kl, ks]\n")
        (cfg,) = load_grid(path)
        assert cfg.n == 300 and cfg.g == 2 and cfg.statistics == (StatisticKind.KL, StatisticKind.KS)

    def test_prior_values(self, tmp_path):
        path = tmp_path / "grid.yaml"
        path.write_text("cells:\n  - prior: true\n  - prior: 0.3\n")
        assert [c.prior for c in load_grid(path)] == ["true", 0.3]

    @pytest.mark.parametrize("doc", [
        "just text",
        "cells: []",
        "cells:\n  - nonsense: 1\n",
        "cells:\n  - generator: art7\n",
        "cells: [\n",
    ])
    def test_invalid(self, tmp_path, doc):
        path = tmp_path / "grid.yaml"
        path.write_text(doc)
        with pytest.raises(GridConfigError):
            load_grid(path)


class TestPriorSweep:
    def test_multiplier_one_is_baseline(self):
        cfg = ExperimentConfig(strategy="S1", g=1.0, **SMALL)
        base = estimate_rejections(cfg)
        rows = prior_misspecification_sweep(cfg, [1.0])
        for row in rows:
            assert row.probability == base[StatisticKind.parse(row.statistic)].probability

    def test_infeasible_skipped(self):
        cfg = ExperimentConfig(**SMALL)
        rows = prior_misspecification_sweep(cfg, [0.3, 2.5])
        assert all(r.skipped for r in rows)
        assert all(np.isnan(r.probability) for r in rows)

    def test_bad_multiplier(self):
        with pytest.raises(ValueError):
            prior_misspecification_sweep(ExperimentConfig(**SMALL), [0.0])

    @pytest.mark.slow
    def test_misspecified_prior(self):
        cfg = ExperimentConfig(n=500, B=100, reps=60, statistics=("ks",), seed=3)
        rows = {r.multiplier: r for r in prior_misspecification_sweep(cfg, [0.7, 1.0, 1.5])}
        assert rows[1.5].probability >= rows[1.0].probability
        # underestimation is the milder error
        assert rows[0.7].probability <= 0.05 + 2 * math.sqrt(0.05 * 0.95 / 60)
