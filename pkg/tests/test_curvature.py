import numpy as np
import pytest

from mcflab.curvature import (
    PotentialSpec,
    block_form_check,
    forced_mcf_residual,
    phi_evolution_residual,
    phi_field,
    residual_stats,
    sample,
    sample_from_grad_hess,
)
from mcflab.errors import DegenerateGradientError, DomainError
from mcflab.fields import BandMask, Grid, band_mask, field_from_function


def cone_sample_r3(r=1.0):
    # u = |x| in R^3 sampled analytically at radius r on the x1-axis.
    x = np.array([r, 0.0, 0.0])
    grad = x / r
    hess = (np.eye(3) - np.outer(grad, grad)) / r
    return sample_from_grad_hess(grad, hess)


def test_cone_closed_form():
    s = cone_sample_r3()
    P = np.eye(3) - np.outer([1, 0, 0], [1, 0, 0])
    assert np.allclose(s.nu, [1, 0, 0], atol=1e-14)
    assert np.allclose(s.A, P, atol=1e-14)
    assert s.H == pytest.approx(2.0, abs=1e-13)
    assert s.phi == pytest.approx(0.0, abs=1e-14)
    assert np.allclose(s.grad_phi, 0.0, atol=1e-14)


def test_sphere_positive_mean_curvature_convention():
    # Outward normal: the mean curvature of a sphere is positive.
    assert cone_sample_r3().H > 0


def test_planar_front_sample_on_grid():
    eps = 0.125
    g = Grid(2, (-1.0, -1.0), 0.0625, (33, 33))
    f = field_from_function(g, lambda p: np.clip(p[..., 0] / eps, -1, 1))
    m = band_mask(f, 0.0)
    s = sample(f, (16, 16), mask=m)
    assert np.allclose(s.nu, [1, 0], atol=1e-14)
    assert abs(s.H) < 1e-12
    assert s.phi == pytest.approx(np.log(eps), abs=1e-12)
    assert abs(s.dnu_phi) < 1e-12


def test_paraboloid_closed_form_and_block_identity():
    # u = |x|^2/2 in R^2 at radius 1: |grad u| = 1, H = 1, d_nu phi = -1,
    # cross-checked by d_nu phi = H - lap u/|grad u| = 1 - 2.
    s = sample_from_grad_hess(np.array([1.0, 0.0]), np.eye(2))
    assert s.H == pytest.approx(1.0, abs=1e-14)
    assert s.phi == pytest.approx(0.0, abs=1e-14)
    assert s.dnu_phi == pytest.approx(-1.0, abs=1e-14)
    assert s.dnu_phi == pytest.approx(s.H - np.trace(s.C), abs=1e-14)
    assert block_form_check(s).max_defect < 1e-12


def test_sample_invariants_on_random_fields():
    rng = np.random.default_rng(17)
    for _ in range(50):
        grad = rng.normal(size=3)
        grad /= max(np.linalg.norm(grad), 0.3)
        hess = rng.normal(size=(3, 3))
        hess = 0.5 * (hess + hess.T)
        s = sample_from_grad_hess(grad, hess)
        assert np.linalg.norm(s.nu) == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(s.P @ s.nu, 0.0, atol=1e-12)
        assert np.allclose(s.P @ s.P, s.P, atol=1e-12)
        assert np.allclose(s.nu @ s.B, 0.0, atol=1e-11)
        assert np.trace(s.A) == pytest.approx(s.H, abs=1e-12)
        assert block_form_check(s).max_defect < 1e-10


def test_degenerate_gradient_raises():
    with pytest.raises(DegenerateGradientError):
        sample_from_grad_hess(np.zeros(2), np.eye(2))


def test_grid_sampled_paraboloid_block_defect_refines():
    defects = []
    for n in (17, 33, 65):
        g = Grid(2, (0.4, 0.4), 1.0 / (n - 1), (n, n))
        f = field_from_function(g, lambda p: 0.5 * (p[..., 0] ** 2 + p[..., 1] ** 2))
        s = sample(f, (n // 2, n // 2))
        defects.append(block_form_check(s).max_defect)
    assert all(d <= 1e-10 for d in defects)  # algebraic identities stay exact


def test_potential_family_validation():
    with pytest.raises(DomainError):
        PotentialSpec.double_well(3.0, 0.1)
    pot = PotentialSpec.double_well(2.0, 0.1)
    u = np.linspace(-1, 1, 21)
    assert np.all(pot.W(u) >= 0)
    assert pot.W(1.0) == pytest.approx(0.0, abs=1e-12)
    pot0 = PotentialSpec.free_boundary(0.1)
    assert pot0.W(0.5) == 1.0 and pot0.W(1.0) == 0.0
    # delta in (0,1): singular W' is clamped to finite values
    pot_half = PotentialSpec.double_well(0.5, 0.1)
    assert np.isfinite(pot_half.dW(1.0))


def test_forced_mcf_residual_planar_zero():
    eps = 0.125
    g = Grid(2, (-1.0, -1.0), 0.0625, (33, 33))
    f = field_from_function(
        g, lambda p: np.clip(p[..., 0] / eps, -1, 1),
        dt_fn=lambda p: np.zeros(p.shape[:-1]),
    )
    m = band_mask(f, 0.0)
    res = forced_mcf_residual(f, PotentialSpec.free_boundary(eps), m)
    sup, excluded = residual_stats(res, m)
    assert excluded == 0
    assert sup < 1e-10


def test_forced_mcf_residual_refines_on_trig_field():
    pot = PotentialSpec.free_boundary(1.0)
    sups = []
    hs = []
    for n in (33, 65):
        g = Grid(2, (0.0, 0.0), 1.0 / (n - 1), (n, n))
        f = field_from_function(
            g,
            lambda p: np.sin(p[..., 0]) * np.cos(p[..., 1]) + 2 * p[..., 0],
            dt_fn=lambda p: -2 * np.sin(p[..., 0]) * np.cos(p[..., 1]),
        )
        m = BandMask(np.ones(g.counts, bool))
        res = forced_mcf_residual(f, pot, m, grad_floor=1e-8)
        interior = np.zeros(g.counts, bool)
        interior[2:-2, 2:-2] = True
        sups.append(np.nanmax(np.abs(res.values[interior])))
        hs.append(g.spacing)
    assert sups[1] < sups[0] / 3.0  # roughly second order


def test_forced_mcf_residual_with_reaction_term():
    # u = e^{-2t} sin(x1) solves du/dt = lap u - u; residual is stencil error.
    pot = PotentialSpec(
        delta=2.0, eps=1.0,
        W=lambda u: (1 - np.asarray(u) ** 2) ** 2,
        dW=lambda u: -4 * np.asarray(u) * (1 - np.asarray(u) ** 2),
        f=lambda u: np.asarray(u), df=lambda u: np.ones_like(np.asarray(u)),
    )
    t = 0.3
    g = Grid(2, (0.3, 0.0), 0.9 / 48, (49, 49))
    f = field_from_function(
        g,
        lambda p: np.exp(-2 * t) * np.sin(p[..., 0]),
        time=t,
        dt_fn=lambda p: -2 * np.exp(-2 * t) * np.sin(p[..., 0]),
    )
    m = BandMask(np.ones(g.counts, bool))
    res = forced_mcf_residual(f, pot, m, grad_floor=1e-6)
    interior = np.zeros(g.counts, bool)
    interior[2:-2, 2:-2] = True
    assert np.nanmax(np.abs(res.values[interior])) < 2e-3


def test_phi_evolution_static_planar_zero():
    eps = 0.125
    g = Grid(2, (-1.0, -1.0), 0.0625, (33, 33))
    fn = lambda p: np.clip(p[..., 0] / eps, -1, 1)
    f1 = field_from_function(g, fn, time=0.1)
    f0 = field_from_function(g, fn, time=0.0)
    m = band_mask(f1, 0.0)
    res = phi_evolution_residual(f1, f0, PotentialSpec.free_boundary(eps), m)
    sup, _ = residual_stats(res, m)
    assert sup < 1e-10


def test_phi_evolution_identical_times_rejected():
    g = Grid(2, (0.0, 0.0), 0.25, (9, 9))
    f = field_from_function(g, lambda p: p[..., 0])
    with pytest.raises(DomainError):
        phi_evolution_residual(f, f, PotentialSpec.free_boundary(1.0),
                               BandMask(np.ones(g.counts, bool)))


def test_phi_evolution_manufactured_heat_solution():
    # u = e^{-t} sin(x1) + 3 x1 solves the heat equation; the residual of
    # the phi evolution identity is pure discretization error O(h^2 + dt).
    pot = PotentialSpec.free_boundary(1.0)

    def mk(t, n):
        g = Grid(2, (0.2, 0.0), 0.8 / (n - 1), (n, n))
        return field_from_function(
            g, lambda p: np.exp(-t) * np.sin(p[..., 0]) + 3 * p[..., 0], time=t
        )

    sups = []
    for n, dt in ((33, 4e-3), (65, 1e-3)):
        f1, f0 = mk(0.5, n), mk(0.5 - dt, n)
        m = BandMask(np.ones(f1.grid.counts, bool))
        res = phi_evolution_residual(f1, f0, pot, m, grad_floor=1e-8)
        interior = np.zeros(f1.grid.counts, bool)
        interior[2:-2, 2:-2] = True
        sups.append(np.nanmax(np.abs(res.values[interior])))
    assert sups[1] < sups[0] / 2.8  # joint refinement slope >= 1.5


def test_phi_evolution_reaction_term():
    # f(u) = u: u = e^{-2t} sin(x1) solves du/dt = lap u - u; the f'(u)
    # term in the identity is exercised (f' = 1).
    pot = PotentialSpec(
        delta=2.0, eps=1.0,
        W=lambda u: (1 - np.asarray(u) ** 2) ** 2,
        dW=lambda u: -4 * np.asarray(u) * (1 - np.asarray(u) ** 2),
        f=lambda u: np.asarray(u), df=lambda u: np.ones_like(np.asarray(u)),
    )

    def mk(t):
        g = Grid(2, (0.3, 0.0), 0.9 / 64, (65, 65))
        return field_from_function(
            g, lambda p: np.exp(-2 * t) * np.sin(p[..., 0]), time=t
        )

    dt = 1e-3
    f1, f0 = mk(0.5), mk(0.5 - dt)
    m = BandMask(np.ones(f1.grid.counts, bool))
    res = phi_evolution_residual(f1, f0, pot, m, grad_floor=1e-8)
    interior = np.zeros(f1.grid.counts, bool)
    interior[2:-2, 2:-2] = True
    assert np.nanmax(np.abs(res.values[interior])) < 5e-3


def test_phi_field_marks_degenerate_nodes():
    g = Grid(2, (-1.0, -1.0), 0.125, (17, 17))
    f = field_from_function(g, lambda p: 0.5 * (p[..., 0] ** 2 + p[..., 1] ** 2))
    phi = phi_field(f, grad_floor=1e-3)
    assert np.isnan(phi.values[8, 8])  # the critical point at the origin
    assert np.isfinite(phi.values[14, 8])
