import numpy as np
import pytest

from mcflab.errors import DomainError
from mcflab.fields import Grid, band_mask, field_from_function
from mcflab.levelset import (
    AnalyticField,
    GridField,
    gradient_envelope_check,
    hmcf_residual,
    integrate_immersion,
    level_preservation_error,
    write_path_csv,
)


def paraboloid():
    return AnalyticField(
        value=lambda x: 0.5 * float(x @ x),
        gradient=lambda x: x,
        hessian=lambda x: np.eye(2),
    )


def cone():
    return AnalyticField(
        value=lambda x: float(np.linalg.norm(x)),
        gradient=lambda x: x / np.linalg.norm(x),
        hessian=lambda x: (np.eye(2) - np.outer(x, x) / (x @ x)) / np.linalg.norm(x),
    )


def planar(eps=0.1):
    return AnalyticField(
        value=lambda x: x[0] / eps,
        gradient=lambda x: np.array([1.0 / eps, 0.0]),
        hessian=lambda x: np.zeros((2, 2)),
    )


def test_cone_path_closed_form():
    # u = |x|: F(x0, tau) = tau x0 for |x0| = 1, sigma = 1, u(F) = tau.
    p = integrate_immersion(cone(), (1.0, 0.0), 1.0, 2.0, tol=1e-10, n_samples=201)
    assert p.status == "ok"
    assert np.max(np.abs(p.points - p.taus[:, None] * np.array([1.0, 0.0]))) < 1e-8
    assert np.max(np.abs(p.sigmas - 1.0)) < 1e-9
    assert level_preservation_error(p) < 1e-9
    assert hmcf_residual(p, cone()) < 1e-6


def test_planar_front_advances_eps_per_tau():
    eps = 0.1
    p = integrate_immersion(planar(eps), (0.0, 0.3), 0.0, 1.0, tol=1e-10, n_samples=51)
    assert np.max(np.abs(p.points[:, 0] - eps * p.taus)) < 1e-12
    assert np.max(np.abs(p.sigmas - eps)) < 1e-14
    assert hmcf_residual(p, planar(eps)) < 1e-12
    assert level_preservation_error(p) < 1e-12


def test_paraboloid_sigma_and_hmcf():
    # sigma(tau) = (2 tau)^{-1/2}; both sides of the evolution law match.
    p = integrate_immersion(
        paraboloid(), (np.sqrt(2.0), 0.0), 1.0, 2.0, tol=1e-8, n_samples=1001
    )
    assert np.max(np.abs(p.sigmas - (2 * p.taus) ** -0.5)) < 1e-7
    assert level_preservation_error(p) < 1e-7
    assert hmcf_residual(p, paraboloid()) < 1e-6


def test_immersion_requires_increasing_tau_and_matching_start():
    with pytest.raises(DomainError):
        integrate_immersion(paraboloid(), (1.0, 0.0), 2.0, 1.0, tol=1e-8)
    with pytest.raises(DomainError):
        integrate_immersion(paraboloid(), (1.0, 0.0), 0.9, 2.0, tol=1e-8)


def test_truncated_status_on_box_exit():
    fld = AnalyticField(
        value=lambda x: 0.5 * float(x @ x),
        gradient=lambda x: x,
        hessian=lambda x: np.eye(2),
        box=((-1.5, -1.5), (1.5, 1.5)),
    )
    p = integrate_immersion(fld, (1.0, 0.0), 0.5, 3.0, tol=1e-8, n_samples=201)
    assert p.status == "truncated"
    assert p.taus[-1] < 3.0


def test_grid_field_path_and_level_preservation():
    h = 0.01
    g = Grid(2, (0.0, -0.6), h, (161, 121))
    f = field_from_function(g, lambda p: 0.5 * (p[..., 0] ** 2 + p[..., 1] ** 2))
    gf = GridField(f)
    tol = 1e-8
    p = integrate_immersion(gf, (1.0, 0.0), 0.5, 0.9, tol=tol, n_samples=201)
    assert level_preservation_error(p, gf) <= 10 * (tol + h * h)
    # residual dominated by interpolation error, still small
    assert hmcf_residual(p, gf) < 0.05


def test_grid_field_hmcf_joint_refinement():
    residuals = []
    for n, samples in ((81, 101), (161, 201)):
        g = Grid(2, (0.0, -0.6), 1.6 / (n - 1), (n, n))
        f = field_from_function(g, lambda p: 0.5 * (p[..., 0] ** 2 + p[..., 1] ** 2))
        gf = GridField(f)
        p = integrate_immersion(gf, (1.0, 0.0), 0.5, 0.9, tol=1e-10, n_samples=samples)
        residuals.append(hmcf_residual(p, gf))
    assert residuals[1] < residuals[0] / 2.0  # joint slope >= 1.5-ish


def test_envelope_check_exact_signed_distance():
    eps = 0.1
    g = Grid(2, (-1.5, -1.5), 0.02, (151, 151))
    f = field_from_function(
        g, lambda p: np.clip((np.hypot(p[..., 0], p[..., 1]) - 1.0) / eps, -1, 1)
    )
    m = band_mask(f, 0.0)
    rep = gradient_envelope_check(f, eps, eta=1.0, mask=m)
    # Stencil error only: the profile is piecewise linear in the radius.
    assert rep.sup_dev_gradu < 0.05 / eps * 0.05
    assert rep.passed


def test_envelope_check_adversarial_field_fails():
    eps = 0.1
    g = Grid(2, (-1.0, -1.0), 0.01, (201, 201))
    f = field_from_function(g, lambda p: np.clip(2 * p[..., 0] / eps, -1, 1))
    m = band_mask(f, 0.0)
    rep = gradient_envelope_check(f, eps, eta=0.05, mask=m)
    assert rep.sup_dev_gradu >= 1.0 / eps - 1e-9  # |grad u| = 2/eps in the band
    assert not rep.passed


def test_envelope_check_empty_mask_rejected():
    g = Grid(2, (0.0, 0.0), 0.25, (9, 9))
    f = field_from_function(g, lambda p: np.ones(p.shape[:-1]))
    with pytest.raises(DomainError):
        gradient_envelope_check(f, 0.1, 0.1, band_mask(f, 0.0))


def test_path_csv_dump(tmp_path):
    p = integrate_immersion(planar(0.1), (0.0, 0.0), 0.0, 1.0, tol=1e-10, n_samples=11)
    out = write_path_csv(p, tmp_path / "path.csv")
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "tau,x1,x2,sigma,u_of_F"
    assert len(lines) == 12
