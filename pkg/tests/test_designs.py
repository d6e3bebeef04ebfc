"""Plan assembly, pairing tables and design-metric tests."""

from fractions import Fraction

import numpy as np
import pytest

from vbsa.designs import (
    DesignSpec,
    assemble_plan,
    budget_table,
    budget_table_csv,
    cyclic_label,
    design_metrics,
    hybrid_label,
    hybrid_matrix,
    reference_metrics,
)

ALL_PLAN_SPECS = [
    DesignSpec(kind="asymmetric", n=2, N=8, k=3),
    DesignSpec(kind="symmetric2", n=2, N=8, k=3),
    DesignSpec(kind="owen", n=3, N=8, k=3),
    DesignSpec(kind="multimatrix", n=3, N=4, k=3),
    DesignSpec(kind="multimatrix", n=4, N=4, k=2),
    DesignSpec(kind="lamboni", n=3, N=4, k=3),
    DesignSpec(kind="cyclic_single", n=1, N=8, k=3),
]


def _random_bases(spec: DesignSpec, seed: int = 0) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [rng.random((spec.N, spec.k)) for _ in range(spec.n)]


class TestHybridMatrix:
    def test_takes_single_column_from_donor(self):
        out = hybrid_matrix(np.array([[1.0, 2.0]]), np.array([[9.0, 8.0]]), j=2)
        assert out.tolist() == [[1.0, 8.0]]

    def test_donor_equal_to_base_is_identity(self):
        base = np.array([[0.1, 0.2], [0.3, 0.4]])
        assert np.array_equal(hybrid_matrix(base, base, j=1), base)

    def test_out_of_range_factor_rejected(self):
        with pytest.raises(ValueError, match="out of range"):
            hybrid_matrix(np.ones((2, 2)), np.ones((2, 2)), j=3)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            hybrid_matrix(np.ones((2, 2)), np.ones((3, 2)), j=1)


class TestAssemblePlan:
    def test_asymmetric_row_count_k6(self):
        spec = DesignSpec(kind="asymmetric", n=2, N=64, k=6)
        plan = assemble_plan(spec, _random_bases(spec))
        assert plan.points.shape == (448, 6)

    def test_multimatrix_n3_rows_and_effects(self):
        spec = DesignSpec(kind="multimatrix", n=3, N=16, k=6)
        plan = assemble_plan(spec, _random_bases(spec))
        assert plan.points.shape[0] == 624
        assert sum(len(left) for left, _ in plan.pairs.values()) == 864

    def test_owen_row_count(self):
        spec = DesignSpec(kind="owen", n=3, N=4, k=2)
        plan = assemble_plan(spec, _random_bases(spec))
        assert plan.points.shape[0] == 24

    @pytest.mark.parametrize("spec", ALL_PLAN_SPECS, ids=lambda s: f"{s.kind}-n{s.n}")
    def test_plan_length_matches_metrics(self, spec):
        plan = assemble_plan(spec, _random_bases(spec))
        assert plan.points.shape[0] == design_metrics(spec).total_points

    @pytest.mark.parametrize("spec", ALL_PLAN_SPECS, ids=lambda s: f"{s.kind}-n{s.n}")
    def test_pairs_differ_in_exactly_the_assigned_coordinate(self, spec):
        plan = assemble_plan(spec, _random_bases(spec, seed=7))
        for j, (left, right) in plan.pairs.items():
            delta = plan.points[left] != plan.points[right]
            expected = np.zeros(spec.k, dtype=bool)
            expected[j - 1] = True
            assert np.array_equal(delta, np.tile(expected, (len(left), 1)))

    @pytest.mark.parametrize("spec", ALL_PLAN_SPECS, ids=lambda s: f"{s.kind}-n{s.n}")
    def test_economy_identity(self, spec):
        plan = assemble_plan(spec, _random_bases(spec))
        metrics = design_metrics(spec)
        pair_count = sum(len(left) for left, _ in plan.pairs.values())
        assert Fraction(pair_count, plan.points.shape[0]) == Fraction(
            metrics.total_effects, metrics.total_points
        )

    def test_cyclic_plan_wraps_last_row(self):
        spec = DesignSpec(kind="cyclic_single", n=1, N=4, k=2)
        base = _random_bases(spec)[0]
        plan = assemble_plan(spec, [base])
        shifted = plan.rows(cyclic_label(1))
        assert shifted[-1, 0] == base[0, 0]      # wrap: row N borrows row 1
        assert shifted[0, 0] == base[1, 0]
        assert np.array_equal(shifted[:, 1], base[:, 1])

    def test_wrong_base_count_rejected(self):
        spec = DesignSpec(kind="owen", n=3, N=4, k=2)
        with pytest.raises(ValueError, match="base matrices"):
            assemble_plan(spec, _random_bases(spec)[:2])

    def test_split_outputs_by_label(self):
        spec = DesignSpec(kind="asymmetric", n=2, N=4, k=2)
        plan = assemble_plan(spec, _random_bases(spec))
        y = np.arange(plan.points.shape[0], dtype=float)
        split = plan.split_outputs(y)
        assert set(split) == {"A", hybrid_label("A", "B", 1), hybrid_label("A", "B", 2)}
        assert split["A"].tolist() == [0.0, 1.0, 2.0, 3.0]


class TestDesignSpecValidation:
    def test_bad_kind(self):
        with pytest.raises(ValueError, match="unknown design kind"):
            DesignSpec(kind="hexagonal", n=2, N=4, k=2)

    @pytest.mark.parametrize("kind,n", [("asymmetric", 3), ("owen", 2), ("cyclic_single", 2)])
    def test_fixed_matrix_counts(self, kind, n):
        with pytest.raises(ValueError, match="requires"):
            DesignSpec(kind=kind, n=n, N=4, k=2)


class TestDesignMetrics:
    def test_asymmetric_k6(self):
        m = design_metrics(DesignSpec(kind="asymmetric", n=2, N=64, k=6))
        assert m.economy == pytest.approx(6 / 7)
        assert m.explorativity == pytest.approx(2 / 7)

    def test_multimatrix_published_cells(self):
        m = design_metrics(DesignSpec(kind="multimatrix", n=3, N=16, k=6))
        assert (m.total_points, m.total_effects) == (624, 864)
        assert m.explorativity == pytest.approx(1 / 13)
        m10 = design_metrics(DesignSpec(kind="multimatrix", n=10, N=1, k=6))
        assert (m10.total_points, m10.total_effects) == (550, 2700)
        assert m10.explorativity == pytest.approx(0.018, abs=2e-4)

    def test_symmetric_and_multimatrix_n2_agree(self):
        sym = design_metrics(DesignSpec(kind="symmetric2", n=2, N=8, k=5))
        mm = design_metrics(DesignSpec(kind="multimatrix", n=2, N=8, k=5))
        assert sym.explorativity == pytest.approx(1 / 6)
        assert mm.explorativity == pytest.approx(sym.explorativity)
        assert mm.total_points == sym.total_points
        assert mm.total_effects == sym.total_effects

    def test_owen_metrics(self):
        m = design_metrics(DesignSpec(kind="owen", n=3, N=8, k=6))
        assert m.economy == pytest.approx(6 / 14)
        assert m.explorativity == pytest.approx(3 / 14)

    def test_lamboni_economy(self):
        m = design_metrics(DesignSpec(kind="lamboni", n=4, N=2, k=6))
        assert m.economy == pytest.approx(6 * 3 / (1 + 6 * 3))

    def test_economy_limit_for_many_matrices(self):
        m = design_metrics(DesignSpec(kind="multimatrix", n=20, N=1, k=10**6))
        assert m.economy == pytest.approx(10.0, rel=0.01)

    def test_reference_designs(self):
        k = 6
        assert reference_metrics("couples", k).explorativity == pytest.approx((k + 1) / (2 * k))
        assert reference_metrics("stars", k).explorativity == pytest.approx(2 / (k + 1))
        short = reference_metrics("winding_stairs", k, n_t=k + 1)
        assert short.explorativity == pytest.approx(2 / (k + 1))
        long = reference_metrics("winding_stairs", k, n_t=10**6)
        assert long.explorativity == pytest.approx(1 / k, rel=1e-3)
        with pytest.raises(ValueError, match="reference"):
            reference_metrics("asymmetric", k)


class TestBudgetTable:
    def test_k6_budget500_matches_published_costs(self):
        rows = budget_table(6, 500)
        got = [(r.kind, r.N, r.n, r.total_points, r.total_effects, r.original_points) for r in rows]
        assert got == [
            ("asymmetric", 64, 2, 448, 384, 128),
            ("multimatrix", 32, 2, 448, 384, 64),
            ("multimatrix", 16, 3, 624, 864, 48),
            ("multimatrix", 8, 4, 608, 1152, 32),
            ("multimatrix", 4, 5, 500, 1200, 20),
            ("multimatrix", 2, 7, 518, 1764, 14),
            ("multimatrix", 1, 10, 550, 2700, 10),
        ]

    def test_one_factor_row(self):
        rows = budget_table(1, 4)
        asym = rows[0]
        assert (asym.kind, asym.N, asym.total_points, asym.total_effects) == ("asymmetric", 2, 4, 2)
        assert asym.economy == pytest.approx(0.5)

    def test_discrepancy_column_populated_and_positive(self):
        rows = budget_table(6, 500)
        assert all(r.discrepancy is not None and r.discrepancy > 0 for r in rows)

    def test_too_small_target_rejected(self):
        with pytest.raises(ValueError, match="below the minimal"):
            budget_table(6, 3)

    def test_csv_rendering(self):
        text = budget_table_csv(budget_table(6, 500))
        lines = text.strip().splitlines()
        assert lines[0] == "kind,N,n,N_T,E_T,nN,D,chi"
        assert len(lines) == 8
        assert lines[1].startswith("asymmetric,64,2,448,384,128,")
        assert lines[2].startswith("symmetric,32,2,448,384,64,")
