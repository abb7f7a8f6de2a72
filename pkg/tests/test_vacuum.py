import numpy as np
import pytest

from vacuumlab.errors import (
    ExponentRelationError,
    ResolutionError,
    VacuumSingularityError,
)
from vacuumlab.grids import (
    GridSpec,
    constant_field,
    from_function,
    integrate,
    make_mollifier,
)
from vacuumlab.vacuum import (
    build_vacuum_sets,
    counterexample_blowup,
    counterexample_field,
    l1_ratio_lemma_check,
    qns_check,
    qns_mollifier_equivalence,
    ratio_condition,
    reciprocal_integrability_rate,
    unit_ball_volume,
)

GRID = GridSpec(1, (256, 256), (1.0, 1.0))


def spatial_kernels(grid, eps_list):
    return [make_mollifier(e, grid.spatial_dim, grid, include_time=False)
            for e in eps_list]


class TestVacuumSets:
    def test_partition(self, law):
        rho = from_function(GRID, lambda t, x: np.abs(np.sin(np.pi * x)))
        sets = build_vacuum_sets(rho, make_mollifier(0.05, 2, GRID), 0.5)
        union = sets.A | sets.B | sets.C
        assert union.all()
        assert not (sets.A & sets.B).any()
        assert not (sets.B & sets.C).any()
        assert sets.measure("A") + sets.measure("B") + sets.measure("C") \
            == pytest.approx(union.size * sets.grid.cell_volume)

    def test_strict_band_subset(self):
        rho = from_function(GRID, lambda t, x: np.abs(np.sin(np.pi * x)) ** 2)
        sets = build_vacuum_sets(rho, make_mollifier(0.05, 2, GRID), 0.5)
        assert not (sets.B_strict & ~sets.B).any()

    def test_validation(self):
        rho = constant_field(GRID, 1.0)
        ker = make_mollifier(0.05, 2, GRID)
        with pytest.raises(ValueError):
            build_vacuum_sets(rho, ker, 0.0)
        bad = from_function(GRID, lambda t, x: x - 0.5)
        with pytest.raises(ValueError):
            build_vacuum_sets(bad, ker, 0.5)


class TestRatioCondition:
    def test_bounded_density_has_empty_band(self, law):
        rho = constant_field(GRID, 1.0)
        with pytest.warns(UserWarning, match="empty mask"):
            val = ratio_condition(rho, make_mollifier(0.05, 2, GRID), 0.5, 1)
        assert val == 0.0

    def test_vacuum_touching_band_is_finite(self):
        rho = from_function(GRID, lambda t, x: np.abs(np.sin(np.pi * x)) ** 2)
        val = ratio_condition(rho, make_mollifier(0.05, 2, GRID), 0.5, 1)
        assert np.isfinite(val) and val >= 0.0


class TestL1RatioLemma:
    def test_bounded_for_isolated_zero(self):
        w = from_function(GRID, lambda t, x: np.abs(np.sin(np.pi * x)))
        ladder = spatial_kernels(GRID, [0.2, 0.1, 0.05, 0.025])
        rep = l1_ratio_lemma_check(w, ladder)
        assert rep["bounded"]
        assert rep["decades"] >= 3.0

    def test_short_ladder_cannot_certify(self):
        w = from_function(GRID, lambda t, x: np.abs(np.sin(np.pi * x)))
        rep = l1_ratio_lemma_check(w, spatial_kernels(GRID, [0.2, 0.1]))
        assert not rep["bounded"]

    def test_negative_field_rejected(self):
        w = from_function(GRID, lambda t, x: x - 0.5)
        with pytest.raises(ValueError):
            l1_ratio_lemma_check(w, spatial_kernels(GRID, [0.2, 0.1]))

    def test_mask_shape_checked(self):
        w = constant_field(GRID, 1.0)
        bad = np.ones((8, 8), dtype=bool)
        with pytest.raises(ValueError):
            l1_ratio_lemma_check(w, spatial_kernels(GRID, [0.2]), bad)


class TestReciprocalIntegrability:
    def test_exponent_relation_enforced(self):
        w = constant_field(GRID, 1.0)
        with pytest.raises(ExponentRelationError):
            reciprocal_integrability_rate(w, 2, 2, 2,
                                          spatial_kernels(GRID, [0.1]))

    def test_holds_for_bounded_below_density(self):
        w = from_function(GRID, lambda t, x: 1.0 + 0.5 * np.sin(2 * np.pi * x))
        rep = reciprocal_integrability_rate(
            w, 4, 4, 2, spatial_kernels(GRID, [0.2, 0.1, 0.05, 0.025, 0.0125]))
        assert rep.holds()
        assert rep.reciprocal_norm < np.inf


class TestQns:
    def test_unit_ball_volumes(self):
        assert unit_ball_volume(1) == pytest.approx(2.0)
        assert unit_ball_volume(2) == pytest.approx(np.pi)
        assert unit_ball_volume(3) == pytest.approx(4.0 * np.pi / 3.0)

    def test_constant_field_has_unit_constant(self):
        w = constant_field(GRID, 2.0)
        rep = qns_check(w, None, [0.05, 0.1], C=1.0)
        assert rep["pass"]
        assert rep["empirical_C"] == pytest.approx(1.0, rel=1e-12)

    def test_convex_field_passes_away_from_kinks(self):
        g = GridSpec(1, (8, 2048), (1.0, 1.0))
        w = from_function(g, lambda t, x: np.abs(x - 0.5))
        region = np.zeros(g.shape, dtype=bool)
        x = g.axis_coords(1)
        region[:, (x > 0.1) & (x < 0.9)] = True
        rep = qns_check(w, region, [0.02, 0.01], C=1.0)
        assert rep["pass"]
        assert rep["empirical_C"] <= 1.0 + 1e-9

    def test_negative_field_rejected(self):
        w = from_function(GRID, lambda t, x: x - 0.5)
        with pytest.raises(ValueError):
            qns_check(w, None, [0.05], C=1.0)

    def test_equivalence_for_convex_field(self):
        g = GridSpec(1, (8, 2048), (1.0, 1.0))
        w = from_function(g, lambda t, x: np.abs(x - 0.5) + 0.05)
        region = np.zeros(g.shape, dtype=bool)
        x = g.axis_coords(1)
        region[:, (x > 0.1) & (x < 0.9)] = True
        ladder = spatial_kernels(g, [0.06, 0.03, 0.015, 0.0075])
        rep = qns_mollifier_equivalence(w, region, ladder, M=1.2, C=1.0)
        assert rep["forward_pass"] and rep["backward_pass"]
        assert rep["uniform_constant_plausible"]
        assert all(r["M_emp"] <= 1.2 for r in rep["per_rung"])


class TestCounterexample:
    def test_field_mass(self):
        f = counterexample_field(8, 4096)
        mass = integrate(f) / f.grid.extents[0]
        expect = sum(2.0 ** -i for i in range(2, 9))
        assert mass == pytest.approx(expect, abs=4 * 7 / 4096)

    def test_spikes_are_disjoint_indicators(self):
        f = counterexample_field(8, 4096)
        assert set(np.unique(f.values)) <= {0.0, 1.0}

    def test_validation(self):
        with pytest.raises(ValueError):
            counterexample_field(1, 4096)
        with pytest.raises(ResolutionError):
            counterexample_field(12, 1024)

    def test_blowup_growth_tracks_theory(self):
        f = counterexample_field(10, 8192)
        rep = counterexample_blowup(f, 2.0, [4, 6, 8, 10])
        assert rep["theory"] == pytest.approx(0.5)
        assert rep["growth_per_i"] > 0.25

    def test_no_blowup_near_p_equal_one(self):
        f = counterexample_field(10, 8192)
        strong = counterexample_blowup(f, 3.0, [4, 6, 8, 10])
        weak = counterexample_blowup(f, 1.05, [4, 6, 8, 10])
        assert strong["growth_per_i"] > weak["growth_per_i"] + 0.3
        assert weak["growth_per_i"] < 0.1

    def test_blowup_validation(self):
        f = counterexample_field(8, 4096)
        with pytest.raises(ValueError):
            counterexample_blowup(f, 1.0, [4, 6, 8])
        with pytest.raises(ValueError):
            counterexample_blowup(f, 2.0, [4, 6])
