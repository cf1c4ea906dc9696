import numpy as np
import pytest

from mcflab.errors import DomainError
from mcflab.fields import (
    BandMask,
    Grid,
    ScalarField,
    band_mask,
    derivative_fields,
    derivatives,
    field_from_function,
    interpolate,
    read_field_csv,
    write_field_csv,
)


def quad_field(h=0.25, half=1.0):
    n = int(round(2 * half / h)) + 1
    g = Grid(2, (-half, -half), h, (n, n))
    return field_from_function(g, lambda p: p[..., 0] ** 2 + p[..., 1] ** 2)


def test_grid_validation():
    with pytest.raises(DomainError):
        Grid(2, (0.0, 0.0), -0.1, (5, 5))
    with pytest.raises(DomainError):
        Grid(2, (0.0, 0.0), 0.1, (2, 5))
    with pytest.raises(DomainError):
        Grid(2, (0.0,), 0.1, (5, 5))


def test_scalarfield_locked_and_shape_checked():
    g = Grid(1, (0.0,), 0.5, (5,))
    f = ScalarField(g, np.arange(5.0))
    with pytest.raises(ValueError):
        f.values[0] = 3.0
    with pytest.raises(DomainError):
        ScalarField(g, np.arange(4.0))


def test_quadratic_derivatives_exact():
    f = quad_field()
    d = derivatives(f, (8, 4))  # node at (1.0, 0.0)
    assert np.allclose(d.grad, [2.0, 0.0], atol=1e-12)
    assert np.allclose(d.hess, 2.0 * np.eye(2), atol=1e-12)
    assert d.lap == pytest.approx(4.0, abs=1e-12)


def test_quadratic_exact_at_edges_too():
    f = quad_field()
    for index in [(0, 0), (0, 4), (8, 8), (4, 0)]:
        d = derivatives(f, index)
        x, y = f.grid.node_coord(index)
        assert np.allclose(d.grad, [2 * x, 2 * y], atol=1e-11)
        assert d.lap == pytest.approx(4.0, abs=1e-11)


def test_constant_field_zero_derivatives():
    g = Grid(3, (0.0, 0.0, 0.0), 0.5, (5, 5, 5))
    f = field_from_function(g, lambda p: np.full(p.shape[:-1], 7.0))
    d = derivatives(f, (2, 2, 2))
    assert np.all(d.grad == 0) and np.all(d.hess == 0) and d.lap == 0


def test_hessian_bitwise_symmetric():
    g = Grid(2, (0.0, 0.0), 0.1, (17, 17))
    rng = np.random.default_rng(3)
    f = ScalarField(g, rng.normal(size=g.counts))
    for index in [(5, 7), (0, 3), (16, 16), (8, 0)]:
        d = derivatives(f, index)
        assert np.array_equal(d.hess, d.hess.T)


def test_gradient_refinement_order_sin():
    # Richardson refinement oracle: error against the analytic derivative.
    errs = []
    hs = [0.2, 0.1, 0.05]
    for h in hs:
        n = int(round(2.0 / h)) + 1
        g = Grid(1, (-1.0,), h, (n,))
        f = field_from_function(g, lambda p: np.sin(p[..., 0]))
        idx = (n // 2,)  # x = 0
        d = derivatives(f, idx)
        errs.append(abs(d.grad[0] - 1.0))
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert abs(slope - 2.0) <= 0.2


def test_laplacian_refinement_order_full_grid():
    errs = []
    hs = [0.2, 0.1, 0.05]
    for h in hs:
        n = int(round(2.0 / h)) + 1
        g = Grid(2, (-1.0, -1.0), h, (n, n))
        f = field_from_function(g, lambda p: np.sin(p[..., 0]) * np.cos(p[..., 1]))
        _, hess = derivative_fields(f)
        lap = np.einsum("...ii->...", hess)
        exact = -2.0 * np.sin(g.node_points()[..., 0]) * np.cos(g.node_points()[..., 1])
        errs.append(np.max(np.abs(lap - exact)))
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert abs(slope - 2.0) <= 0.3


def test_derivatives_index_out_of_range():
    f = quad_field()
    with pytest.raises(DomainError):
        derivatives(f, (99, 0))


def test_interpolate_affine_exact_and_nodal():
    g = Grid(2, (0.0, 0.0), 0.25, (9, 9))
    f = field_from_function(g, lambda p: 2.0 * p[..., 0] + 1.0)
    assert interpolate(f, (0.6789, 1.2345)) == pytest.approx(2 * 0.6789 + 1, abs=1e-14)
    assert interpolate(f, (0.5, 0.75)) == pytest.approx(2.0, abs=1e-15)


def test_interpolate_midpoint_bound_sin():
    # Closed-form interpolation bound: err <= h^2 sup|u''| / 8, sup = 1.
    h = 0.1
    g = Grid(1, (0.0,), h, (33,))
    f = field_from_function(g, lambda p: np.sin(p[..., 0]))
    worst = 0.0
    for k in range(32):
        x = (k + 0.5) * h
        worst = max(worst, abs(interpolate(f, (x,)) - np.sin(x)))
    assert worst <= h**2 / 8 + 1e-15


def test_interpolate_outside_box_raises():
    f = quad_field()
    with pytest.raises(DomainError):
        interpolate(f, (5.0, 0.0))


def test_band_mask_planar_slab():
    eps = 0.125
    g = Grid(2, (-1.0, -1.0), 0.0625, (33, 33))
    f = field_from_function(g, lambda p: np.clip(p[..., 0] / eps, -1, 1))
    m = band_mask(f, 0.0)
    xs = g.node_points()[..., 0]
    assert np.array_equal(m.inside, np.abs(xs) < eps)
    assert np.all(np.abs(f.values[m.inside]) < 1.0)


def test_band_mask_constant_one_empty():
    g = Grid(2, (0.0, 0.0), 0.5, (5, 5))
    f = field_from_function(g, lambda p: np.ones(p.shape[:-1]))
    assert band_mask(f, 0.0).count == 0


def test_band_mask_margin_validation():
    f = quad_field()
    with pytest.raises(DomainError):
        BandMask(np.ones(f.grid.counts, bool), margin=0.7)


def test_band_mask_annulus_width():
    # Circle signed-distance profile: band is an annulus of width 2 eps +- h.
    eps, h = 0.1, 0.02
    g = Grid(2, (-1.5, -1.5), h, (151, 151))
    f = field_from_function(
        g, lambda p: np.clip((np.hypot(p[..., 0], p[..., 1]) - 1.0) / eps, -1, 1)
    )
    m = band_mask(f, 0.0)
    r = np.hypot(g.node_points()[..., 0], g.node_points()[..., 1])[m.inside]
    width = r.max() - r.min()
    assert abs(width - 2 * eps) <= h + 1e-12


def test_masked_derivatives_one_sided_at_band_edge():
    # Inside a clamped planar band the one-sided stencils still see the
    # exact linear profile: derivatives are exact to round-off.
    eps = 0.125
    g = Grid(2, (-1.0, -1.0), 0.0625, (33, 33))
    f = field_from_function(g, lambda p: np.clip(p[..., 0] / eps, -1, 1))
    m = band_mask(f, 0.0)
    edge_index = (15, 7)  # x = -0.0625 - eps + ... inner band node next to kink
    assert m.inside[edge_index]
    d = derivatives(f, edge_index, m)
    assert d.grad[0] == pytest.approx(1 / eps, rel=1e-12)
    assert abs(d.lap) < 1e-9


def test_csv_roundtrip(tmp_path):
    g = Grid(2, (0.0, -1.0), 0.5, (4, 3))
    f = field_from_function(
        g, lambda p: p[..., 0] + 2 * p[..., 1], time=1.5,
        dt_fn=lambda p: np.full(p.shape[:-1], 0.25),
    )
    path, man = write_field_csv(f, tmp_path / "u.csv")
    g2 = read_field_csv(path)
    assert g2.grid == g
    assert g2.time == 1.5
    assert np.allclose(g2.values, f.values, atol=0)
    assert np.allclose(g2.dt_values, 0.25, atol=0)
