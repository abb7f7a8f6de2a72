import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vacuumlab.errors import ResolutionError
from vacuumlab.grids import (
    Field,
    GridSpec,
    constant_field,
    ddt,
    div,
    dspace,
    from_function,
    grad,
    integrate,
    load_field,
    lp_norm,
    make_mollifier,
    mollify,
    restrict,
    save_field,
)


class TestGridSpec:
    def test_midpoint_samples(self):
        g = GridSpec(1, (16, 32), (1.0, 2.0))
        x = g.axis_coords(1)
        assert x[0] == pytest.approx(2.0 / 32 / 2)
        assert x[-1] == pytest.approx(2.0 - 2.0 / 32 / 2)

    def test_cell_volume(self):
        g = GridSpec(1, (16, 32), (1.0, 2.0))
        assert g.cell_volume == pytest.approx((1.0 / 16) * (2.0 / 32))

    def test_rejects_tiny_grids(self):
        with pytest.raises(ValueError):
            GridSpec(1, (4, 64), (1.0, 1.0))

    def test_2d(self):
        g = GridSpec(2, (8, 16, 16), (1.0, 1.0, 1.0))
        assert g.spatial_dim == 2
        assert len(g.spacings) == 3


class TestField:
    def test_arithmetic(self, small_grid):
        a = constant_field(small_grid, 2.0)
        b = constant_field(small_grid, 3.0)
        assert float((a + b).values.max()) == 5.0
        assert float((a * b).values.min()) == 6.0
        assert float((a - b).values.max()) == -1.0

    def test_dot_and_magnitude(self, small_grid):
        u = from_function(small_grid, lambda t, x: 3.0 + 0.0 * x)
        assert float(u.dot(u).values.max()) == pytest.approx(9.0)
        assert float(u.magnitude().max()) == pytest.approx(3.0)

    def test_values_are_readonly(self, small_grid):
        f = constant_field(small_grid, 1.0)
        with pytest.raises(ValueError):
            f.values[0, 0, 0] = 2.0


class TestMollifier:
    def test_unit_mass(self, small_grid):
        ker = make_mollifier(0.1, 2, small_grid)
        total = float(np.sum(ker.weights) * ker.cell_volume)
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_plateau_height(self, small_grid):
        # profile is exactly 1 on the inner third, height 1/eps^N
        ker = make_mollifier(0.1, 2, small_grid)
        assert float(ker.weights.max()) == pytest.approx(1.0 / 0.1 ** 2)

    def test_requires_three_cells(self, small_grid):
        with pytest.raises(ResolutionError):
            make_mollifier(1.0 / 64, 2, small_grid)

    def test_constant_is_fixed_point(self, small_grid):
        f = constant_field(small_grid, 4.2)
        fe = mollify(f, make_mollifier(0.1, 2, small_grid))
        assert np.allclose(fe.values, 4.2, atol=1e-12)

    def test_smooth_error_second_order_in_eps(self):
        g = GridSpec(1, (256, 256), (1.0, 1.0))
        f = from_function(g, lambda t, x: np.sin(2 * np.pi * x))
        errs = []
        for eps in (0.1, 0.05, 0.025):
            fe = mollify(f, make_mollifier(eps, 2, g))
            errs.append(lp_norm(fe - restrict(f, fe.grid), np.inf))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.15)

    def test_spatial_only_kernel_keeps_time_extent(self, small_grid):
        f = from_function(small_grid, lambda t, x: np.cos(2 * np.pi * x))
        fe = mollify(f, make_mollifier(0.1, 1, small_grid, include_time=False))
        assert fe.grid.shape[0] == small_grid.shape[0]


class TestCalculus:
    def test_integrate_constant(self, small_grid):
        assert integrate(constant_field(small_grid, 3.0)) == pytest.approx(3.0)

    def test_lp_norm_masked(self, small_grid):
        f = constant_field(small_grid, 2.0)
        mask = np.zeros(small_grid.shape, dtype=bool)
        mask[:, : small_grid.shape[1] // 2] = True
        assert lp_norm(f, 2, mask=mask) == pytest.approx(2.0 / np.sqrt(2), rel=1e-12)

    @pytest.mark.parametrize("order,tol", [(2, 2e-3), (4, 2e-6)])
    def test_spatial_derivative_order(self, order, tol):
        g = GridSpec(1, (8, 256), (1.0, 1.0))
        f = from_function(g, lambda t, x: np.sin(2 * np.pi * x))
        exact = from_function(g, lambda t, x: 2 * np.pi * np.cos(2 * np.pi * x))
        err = lp_norm(dspace(f, 1, order=order) - exact, np.inf)
        assert err < tol

    def test_ddt_shrinks_time(self, small_grid):
        f = from_function(small_grid, lambda t, x: t * t + 0.0 * x)
        df = ddt(f)
        assert df.grid.shape[0] < small_grid.shape[0]
        mid = df.grid.axis_coords(0)
        assert np.allclose(df.values[..., 0], 2.0 * mid[:, None], atol=1e-10)

    def test_div_equals_grad_in_1d(self, small_grid):
        f = from_function(small_grid, lambda t, x: np.sin(2 * np.pi * x))
        assert np.allclose(div(f).values, grad(f).values, atol=1e-12)


class TestSerialization:
    @pytest.mark.parametrize("fmt", ["bin", "csv"])
    def test_roundtrip(self, tmp_path, small_grid, fmt):
        f = from_function(small_grid, lambda t, x: np.sin(x + t))
        save_field(f, tmp_path / "field", fmt=fmt)
        back = load_field(tmp_path / "field")
        assert back.grid == f.grid
        assert np.allclose(back.values, f.values, atol=1e-12)

    def test_header_schema(self, tmp_path, small_grid):
        import json
        save_field(constant_field(small_grid, 1.0), tmp_path / "f")
        header = json.loads((tmp_path / "f.json").read_text())
        assert header["schema"] == "vacuumlab-field-1"
        assert header["dtype"] == "<f8"


@settings(max_examples=20, deadline=None)
@given(c=st.floats(min_value=-5, max_value=5, allow_nan=False))
def test_mollification_is_linear(c):
    g = GridSpec(1, (32, 32), (1.0, 1.0))
    f = from_function(g, lambda t, x: np.sin(2 * np.pi * x) + t)
    ker = make_mollifier(0.12, 2, g)
    lhs = mollify(Field(g, c * f.values), ker)
    rhs = mollify(f, ker)
    assert np.allclose(lhs.values, c * rhs.values, atol=1e-10)
