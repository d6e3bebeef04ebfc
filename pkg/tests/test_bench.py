"""Benchmark harness tests: MAE, record bookkeeping, cost matching, exports."""

import numpy as np
import pytest

from vbsa.bench import (
    CellError,
    ConvergenceRecord,
    EstimatorConfig,
    ExperimentConfig,
    adaptive_experiment,
    convergence_experiment,
    design_scatter_svg,
    errors_csv,
    export,
    mae,
    mae_plot_svg,
    matched_block_size,
    records_csv,
)
from vbsa.designs import budget_table
from vbsa.testfns import function_spec


class TestMae:
    def test_exact_estimates_give_zero(self):
        assert mae(np.array([[0.3, 0.7]]), np.array([0.3, 0.7])) == 0.0

    def test_single_repetition(self):
        assert mae(np.array([[0.5, 0.5]]), np.array([0.4, 0.6])) == pytest.approx(0.1)

    def test_two_repetitions_average(self):
        est = np.array([[0.5, 0.5], [0.1, 0.9]])
        ref = np.array([0.4, 0.6])
        # per-repetition deviations 0.1 and 0.3
        assert mae(est, ref) == pytest.approx(0.2)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="columns"):
            mae(np.ones((2, 3)), np.ones(2))


class TestMatchedCost:
    def test_asymmetric_reference_is_exact(self):
        assert matched_block_size(EstimatorConfig("saltenis"), 6, 7 * 2**8) == 2**8

    def test_double_cost_designs_halve_n(self):
        for name, n in (("glen_isaacs", 2), ("owen", 3)):
            assert matched_block_size(EstimatorConfig(name, n=n), 6, 7 * 2**8) == 2**7

    def test_multimatrix_nearest_power_of_two(self):
        # n = 3, k = 6: cost 39 N; against 448 the best N is 8 (312 vs 624)
        assert matched_block_size(EstimatorConfig("multimatrix", n=3), 6, 448) == 8


class TestConvergenceExperiment:
    def _cfg(self, **kw):
        defaults = dict(
            function=function_spec("C2", 2),
            estimators=(EstimatorConfig("saltenis"),),
            p_min=3,
            p_max=5,
            repetitions=4,
            seed=9,
        )
        defaults.update(kw)
        return ExperimentConfig(**defaults)

    def test_record_cardinality(self):
        records, errors = convergence_experiment(self._cfg())
        assert not errors
        per_rep = [r for r in records if r.rep is not None]
        aggregates = [r for r in records if r.rep is None]
        assert len(per_rep) == 3 * 4
        assert len(aggregates) == 3

    def test_aggregate_is_mean_of_per_repetition_deviation(self):
        records, _ = convergence_experiment(self._cfg())
        for agg in (r for r in records if r.rep is None):
            cell = [r.mae for r in records if r.rep is not None and r.p == agg.p]
            assert agg.mae == pytest.approx(np.mean(cell))

    def test_deterministic_for_fixed_seed(self):
        a, _ = convergence_experiment(self._cfg())
        b, _ = convergence_experiment(self._cfg())
        assert records_csv(a) == records_csv(b)

    def test_workers_do_not_change_output(self):
        cfg = self._cfg(repetitions=6)
        serial, _ = convergence_experiment(cfg, workers=1)
        threaded, _ = convergence_experiment(cfg, workers=4)
        assert records_csv(serial) == records_csv(threaded)

    def test_error_cells_do_not_abort_the_sweep(self):
        # tiny matched blocks are degenerate for the correlation estimator
        # (N = 1 duplicates the all-halves first row; N = 2 pins |rho| = 1),
        # so the low-p cells error while larger blocks still produce records
        cfg = self._cfg(
            estimators=(EstimatorConfig("glen_isaacs"),), p_min=0, p_max=4, repetitions=2
        )
        records, errors = convergence_experiment(cfg)
        assert errors and all(isinstance(e, CellError) for e in errors)
        assert all(e.p <= 2 for e in errors)
        assert any(r.rep is not None and r.p == 4 for r in records)
        assert any(r.rep is None and r.p == 4 for r in records)

    def test_convergence_trend_for_all_families(self):
        for family in ("A1", "A2", "B1", "B2", "B3", "C1", "C2"):
            maes = {}
            for p in (4, 12):
                cfg = ExperimentConfig(
                    function=function_spec(family, 2),
                    estimators=(EstimatorConfig("saltenis"),),
                    p_min=p, p_max=p, repetitions=10, seed=4,
                )
                records, _ = convergence_experiment(cfg)
                maes[p] = next(r.mae for r in records if r.rep is None)
            assert maes[12] < maes[4]

    def test_repetition_stability_proxy(self):
        cfg = self._cfg(p_min=8, p_max=8, repetitions=50)
        records, _ = convergence_experiment(cfg)
        per_rep = [r.mae for r in records if r.rep is not None]
        first_half = np.mean(per_rep[:25])
        full = np.mean(per_rep)
        assert abs(first_half - full) / full < 0.5


class TestAdaptiveExperiment:
    def test_produces_both_series_and_ledgers(self):
        records, ledgers = adaptive_experiment(function_spec("A2", 6), range(7, 9), 3, seed=2)
        names = {r.estimator for r in records}
        assert names == {"saltenis", "adaptive"}
        aggs = [r for r in records if r.rep is None]
        assert len(aggs) == 4  # 2 estimators x 2 block sizes
        assert ledgers and all(int(line.split(",")[7]) >= int(line.split(",")[6]) for line in ledgers)


class TestExport:
    def _records(self):
        return [
            ConvergenceRecord("C2", "saltenis", 2, 3, 8, 24, None, None, 0.25),
            ConvergenceRecord("C2", "saltenis", 2, 4, 16, 48, None, None, 0.125),
            ConvergenceRecord("C2", "glen_isaacs", 2, 3, 4, 24, None, None, 0.5),
            ConvergenceRecord("C2", "glen_isaacs", 2, 4, 8, 48, None, None, 0.25),
        ]

    def test_csv_line_count(self):
        text = records_csv(self._records()[:3])
        assert len(text.strip().splitlines()) == 4  # header + 3 aggregates

    def test_csv_per_rep_rows_expand_by_factor(self):
        rec = ConvergenceRecord("C2", "saltenis", 2, 3, 8, 24, 0, np.array([0.5, 0.6]), 0.1)
        lines = records_csv([rec]).strip().splitlines()
        assert len(lines) == 3
        assert lines[1].split(",")[7] == "1"  # factor column
        assert lines[2].split(",")[7] == "2"

    def test_empty_records_rejected(self):
        with pytest.raises(ValueError, match="no records"):
            records_csv([])
        with pytest.raises(ValueError, match="no records"):
            export([], ".")

    def test_svg_has_one_polyline_per_series_and_legend(self):
        svg = mae_plot_svg(self._records())
        assert svg.count("<polyline") == 2
        assert "saltenis" in svg and "glen_isaacs" in svg
        assert "MAE" in svg and "N_T" in svg

    def test_export_writes_requested_formats(self, tmp_path):
        paths = export(self._records(), tmp_path, fmt="both", basename="out")
        assert sorted(p.name for p in paths) == ["out.csv", "out.svg"]
        assert (tmp_path / "out.csv").read_text().startswith("function,estimator")

    def test_bad_format_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="format"):
            export(self._records(), tmp_path, fmt="png")

    def test_design_scatter_contains_reference_designs(self):
        svg = design_scatter_svg(budget_table(6, 500), 6)
        for label in ("asymmetric", "couples", "stars", "winding stairs"):
            assert label in svg

    def test_errors_csv(self):
        text = errors_csv([CellError("owen", 3, 2, 1, "bad, cell\nhere")])
        assert text.splitlines()[1] == "owen,3,2,1,bad; cell here"
