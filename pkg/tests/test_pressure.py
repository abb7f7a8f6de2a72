import numpy as np
import pytest
from scipy import integrate as sp_integrate

from vacuumlab.errors import NegativityError
from vacuumlab.grids import Field, GridSpec, constant_field, from_function, lp_norm, make_mollifier
from vacuumlab.pressure import (
    C2Approximant,
    PressureLaw,
    commutator_rate,
    holder_remainder_bound,
    make_c2_approximant,
    pressure_commutator,
)
from vacuumlab.synth import WeierstrassSpec, weierstrass_field


def potential_quadrature(law, rho):
    """Independent oracle: P(rho) = rho * int_1^rho p(r)/r^2 dr."""
    val, _ = sp_integrate.quad(lambda r: law.p(r) / r ** 2, 1.0, rho)
    return rho * val


class TestPressureLaw:
    @pytest.mark.parametrize("gamma", [1.0, 2.0, 0.5, 3.0])
    def test_rejects_gamma_outside_open_interval(self, gamma):
        with pytest.raises(ValueError):
            PressureLaw(gamma=gamma)

    def test_rejects_nonpositive_kappa(self):
        with pytest.raises(ValueError):
            PressureLaw(gamma=1.4, kappa=0.0)

    @pytest.mark.parametrize("rho", [0.1, 0.5, 1.0, 2.5])
    def test_potential_matches_quadrature(self, rho):
        law = PressureLaw(gamma=1.4, kappa=2.0)
        assert law.potential(rho) == pytest.approx(
            potential_quadrature(law, rho), rel=1e-10)

    def test_potential_normalization(self, law):
        assert law.potential(1.0) == pytest.approx(0.0, abs=1e-14)
        assert law.potential(0.0) == pytest.approx(0.0, abs=1e-14)

    def test_dpotential_is_derivative(self, law):
        h = 1e-6
        for rho in (0.3, 1.0, 2.0):
            fd = (law.potential(rho + h) - law.potential(rho - h)) / (2 * h)
            assert law.dpotential(rho) == pytest.approx(fd, rel=1e-7)

    def test_sound_speed_squared_is_dp(self, law):
        rho = np.array([0.2, 1.0, 3.0])
        assert np.allclose(law.sound_speed(rho) ** 2, law.dp(rho), rtol=1e-13)

    def test_dp_vanishes_at_vacuum(self, law):
        assert law.dp(0.0) == 0.0


class TestC2Approximant:
    def test_uniform_gap_within_budget(self, law):
        for delta in (1e-2, 1e-4):
            approx = make_c2_approximant(law, delta)
            assert approx.sup_gap(10.0) <= delta * (1 + 1e-6)

    def test_matches_law_above_cut(self, law):
        approx = make_c2_approximant(law, 1e-3)
        rho = np.linspace(approx.rho_c, 5.0, 101)
        assert np.allclose(approx.p(rho), law.p(rho), rtol=1e-14)
        assert np.allclose(approx.dp(rho), law.dp(rho), rtol=1e-14)

    def test_c2_junction(self, law):
        approx = make_c2_approximant(law, 1e-3)
        rc, h = approx.rho_c, 1e-8
        for f in (approx.p, approx.dp, approx.ddp):
            assert f(rc - h) == pytest.approx(float(f(rc + h)), rel=1e-5)

    def test_second_derivative_bounded_at_vacuum(self, law):
        approx = make_c2_approximant(law, 1e-3)
        assert np.isfinite(approx.ddp(0.0))
        assert approx.ddp(0.0) == pytest.approx(float(approx.ddp(approx.rho_c / 2)))
        with np.errstate(divide="ignore"):
            bare = (law.kappa * law.gamma * (law.gamma - 1)
                    * np.float64(0.0) ** (law.gamma - 2))
        assert not np.isfinite(bare)

    @pytest.mark.parametrize("rho", [0.01, 0.5, 2.0])
    def test_potential_matches_quadrature(self, law, rho):
        approx = make_c2_approximant(law, 1e-2)
        val, _ = sp_integrate.quad(lambda r: approx.p(r) / r ** 2, 1.0, rho,
                                   points=[approx.rho_c] if rho < approx.rho_c else None)
        assert approx.potential(rho) == pytest.approx(rho * val, rel=1e-8)

    def test_rejects_nonpositive_delta(self, law):
        with pytest.raises(ValueError):
            make_c2_approximant(law, 0.0)


class TestPressureCommutator:
    def test_zero_for_constant_density(self, law, small_grid):
        rho = constant_field(small_grid, 0.7)
        ker = make_mollifier(0.1, 2, small_grid)
        comm = pressure_commutator(rho, law, ker)
        assert lp_norm(comm, np.inf) < 1e-13

    def test_negative_density_rejected(self, law, small_grid):
        rho = from_function(small_grid, lambda t, x: x - 0.5)
        ker = make_mollifier(0.1, 2, small_grid)
        with pytest.raises(NegativityError):
            pressure_commutator(rho, law, ker)

    def test_smooth_density_second_order(self, law):
        g = GridSpec(1, (512, 512), (1.0, 1.0))
        rho = from_function(g, lambda t, x: 1.0 + 0.5 * np.sin(2 * np.pi * x))
        fit = commutator_rate(rho, law, 2, [2.0 ** -k for k in range(3, 8)],
                              window=(0, 5))
        assert fit.exponent == pytest.approx(2.0, abs=0.15)

    def test_vacuum_touching_density_keeps_gamma_beta_rate(self, law):
        # density of shift regularity ~beta touching zero; expected
        # commutator decay exponent >= gamma * beta
        g = GridSpec(1, (512, 512), (1.0, 1.0))
        beta = 0.5
        rho = weierstrass_field(WeierstrassSpec(alpha=beta, levels=8, seed=5), g)
        fit = commutator_rate(rho, law, 2, [2.0 ** -k for k in range(3, 8)],
                              window=(0, 5))
        assert fit.exponent >= law.gamma * beta * 0.9

    def test_rejects_q_below_one(self, law, small_grid):
        rho = constant_field(small_grid, 1.0)
        with pytest.raises(ValueError):
            commutator_rate(rho, law, 0.5, [0.1, 0.05, 0.025, 0.0125, 0.00625])


class TestHolderRemainder:
    def test_bound_holds_for_vacuum_touching_field(self, law):
        g = GridSpec(1, (512, 512), (1.0, 1.0))
        rho = weierstrass_field(WeierstrassSpec(alpha=0.4, levels=8, seed=3), g)
        ker = make_mollifier(0.05, 2, g)
        rep = holder_remainder_bound(rho, law, ker)
        assert rep["holds"]
        assert rep["worst_ratio"] <= rep["constant"] * (1 + 1e-9)
