"""Stencils, seminorms, boundary layers, and snapshot round-trips."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergopde import (
    BoundaryNode,
    Box,
    EmptyRegion,
    GridFunction,
    OutOfRange,
    UniformGrid,
    boundary_distance,
    boundary_layer,
    gradient,
    hessian,
    holder_seminorm,
    lipschitz_seminorm,
    load_binary,
    save_binary,
    save_csv,
)


def grid1d(n, lo=-1.0, hi=1.0):
    return UniformGrid((n,), Box((lo,), (hi,)))


def grid2d(n, m):
    return UniformGrid((n, m), Box((0.0, 0.0), (1.0, 1.0)))


def sample(grid, fn):
    return GridFunction(grid, fn(*grid.coords()))


class TestStencils:
    def test_gradient_exact_for_affine_1d(self):
        u = sample(grid1d(11), lambda x: x)
        assert gradient(u, (5,)) == pytest.approx([1.0])

    def test_gradient_exact_for_affine_2d(self):
        u = sample(grid2d(9, 9), lambda x, y: x + 2.0 * y)
        assert gradient(u, (4, 4)) == pytest.approx([1.0, 2.0])

    def test_gradient_exact_for_quadratic(self):
        u = sample(grid1d(11, 0.0, 1.0), lambda x: x**2)
        assert gradient(u, (5,)) == pytest.approx([1.0])

    def test_hessian_exact_for_quadratics(self):
        u = sample(grid2d(9, 9), lambda x, y: x**2 - y**2)
        h = hessian(u, (4, 4)).to_array()
        assert np.allclose(h, np.diag([2.0, -2.0]), atol=1e-10)

    def test_hessian_cross_term(self):
        u = sample(grid2d(9, 9), lambda x, y: x * y)
        h = hessian(u, (4, 4)).to_array()
        assert h[0, 1] == pytest.approx(1.0)
        assert h[0, 0] == pytest.approx(0.0, abs=1e-12)

    def test_boundary_node_rejected(self):
        u = sample(grid1d(11), lambda x: x)
        with pytest.raises(BoundaryNode):
            gradient(u, (0,))

    def test_second_order_consistency(self):
        # max-node error of gradient and hessian drops at order >= 1.9
        errs_g, errs_h = [], []
        for n in (33, 65, 129):
            g = grid1d(n, 0.0, 1.0)
            u = sample(g, np.sin)
            x = g.axes()[0]
            eg = max(abs(gradient(u, (k,))[0] - np.cos(x[k]))
                     for k in range(1, n - 1))
            eh = max(abs(hessian(u, (k,)).to_array()[0, 0] + np.sin(x[k]))
                     for k in range(1, n - 1))
            errs_g.append(eg)
            errs_h.append(eh)
        for errs in (errs_g, errs_h):
            orders = [np.log2(a / b) for a, b in zip(errs, errs[1:])]
            assert min(orders) >= 1.9


class TestSeminorms:
    def test_constant_is_zero(self):
        u = sample(grid1d(21), lambda x: 0.0 * x + 5.0)
        assert lipschitz_seminorm(u) == 0.0

    def test_identity_slope(self):
        u = sample(grid1d(21, 0.0, 1.0), lambda x: 3.0 * x)
        assert lipschitz_seminorm(u) == pytest.approx(3.0)

    def test_abs_slope(self):
        u = sample(grid1d(21), np.abs)
        assert lipschitz_seminorm(u) == pytest.approx(1.0)

    def test_sqrt_holder_half(self):
        g = grid1d(65, 0.0, 1.0)
        u = sample(g, np.sqrt)
        val = holder_seminorm(u.values, g, 0.5)
        assert val == pytest.approx(1.0, rel=0.05)

    def test_monotone_in_region_inclusion(self):
        g = grid1d(41, 0.0, 1.0)
        u = sample(g, lambda x: np.sin(3.0 * x))
        inner = holder_seminorm(u.values, g, 0.5, subregion=Box((0.25,), (0.75,)))
        outer = holder_seminorm(u.values, g, 0.5)
        assert inner <= outer + 1e-14

    @settings(max_examples=30, deadline=None)
    @given(st.floats(min_value=-4.0, max_value=4.0))
    def test_seminorm_homogeneity(self, scale):
        g = grid1d(31, 0.0, 1.0)
        u = sample(g, lambda x: np.cos(2.0 * x))
        base = holder_seminorm(u.values, g, 0.5)
        scaled = holder_seminorm(scale * u.values, g, 0.5)
        assert scaled == pytest.approx(abs(scale) * base, abs=1e-12)

    def test_gamma_range_enforced(self):
        g = grid1d(11)
        with pytest.raises(OutOfRange):
            holder_seminorm(np.zeros(11), g, 1.5)

    def test_empty_region(self):
        g = grid1d(11)
        with pytest.raises(EmptyRegion):
            holder_seminorm(np.zeros(11), g, 0.5,
                            subregion=Box((0.49,), (0.5,)))


class TestBoundaryGeometry:
    def test_distance_is_min_face_distance(self):
        g = grid2d(5, 5)
        d, normal, tie = boundary_distance(g)
        assert d[2, 2] == pytest.approx(0.5)
        assert d[1, 2] == pytest.approx(0.25)
        assert d[0, 3] == pytest.approx(0.0)
        assert np.allclose(normal[1, 2], [1.0, 0.0])
        assert tie[2, 2]  # the center is equidistant from all faces

    def test_layer_nonempty_below_half_width(self):
        g = grid1d(101)
        layer = boundary_layer(g, 0.1)
        assert len(layer.nodes) > 0
        assert np.all(layer.distances >= 0.1)
        assert np.all(layer.distances <= 0.2 + 1e-12)

    def test_grid_requires_three_nodes(self):
        with pytest.raises(OutOfRange):
            grid1d(2)


class TestSnapshots:
    def test_binary_round_trip(self, tmp_path):
        u = sample(grid2d(7, 5), lambda x, y: np.sin(x) + y)
        path = tmp_path / "u.bin"
        save_binary(u, path)
        v = load_binary(path)
        assert v.grid.shape == u.grid.shape
        assert np.array_equal(v.values, u.values)
        assert v.grid.box.lo == u.grid.box.lo

    def test_csv_has_header_and_rows(self, tmp_path):
        u = sample(grid1d(5), lambda x: x)
        path = tmp_path / "u.csv"
        save_csv(u, path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 6  # header + 5 nodes
        assert lines[0] == "x,value"
        first = [float(tok) for tok in lines[1].split(",")]
        assert first == pytest.approx([-1.0, -1.0])
