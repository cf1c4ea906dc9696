import numpy as np
import pytest

from mcflab import radial
from mcflab.curvature import PotentialSpec, forced_mcf_residual, residual_stats
from mcflab.errors import DomainError, ExtinctionError, StepRejectError
from mcflab.fields import band_mask
from mcflab.levelset import gradient_envelope_check


def test_init_from_sphere_geometry():
    st = radial.init_from_sphere(1.0, 2, 0.1, 128)
    assert st.s_minus == pytest.approx(0.9)
    assert st.s_plus == pytest.approx(1.1)
    # linear in r by construction
    assert np.allclose(np.diff(st.u), np.diff(st.u)[0])
    g_minus, g_plus = radial.boundary_gradients(st)
    assert g_minus == pytest.approx(10.0, rel=1e-12)
    assert g_plus == pytest.approx(10.0, rel=1e-12)
    m = radial.mismatch(st)
    assert abs(m[0]) < 1e-12 and abs(m[1]) < 1e-12


def test_init_preconditions():
    with pytest.raises(DomainError):
        radial.init_from_sphere(0.15, 2, 0.1, 128)  # r0 <= 2 eps
    with pytest.raises(DomainError):
        radial.init_from_sphere(1.0, 2, 0.1, 32)  # M < 64


def test_init_phi_constant_and_grad_phi_zero():
    # Signed-distance data: phi0 = log(eps) on the band, grad phi0 = 0.
    st = radial.init_from_sphere(1.0, 2, 0.1, 128)
    d = radial.diagnostics(st)
    assert d.sup_dev_phi < 1e-10  # sup |phi - log eps| = 0
    assert d.sup_grad_phi < 1e-8  # |grad phi| = |u_rr/u_r| = 0 for linear u


def test_profile_envelope_composes_with_levelset_check():
    st = radial.init_from_sphere(1.0, 2, 0.1, 128)
    f = radial.profile_field(st)
    rep = gradient_envelope_check(f, st.eps, eta=1.0, mask=band_mask(f, 0.0))
    assert rep.passed
    assert rep.sup_dev_gradu < 1e-9


def test_planar_front_stationary_short():
    st = radial.init_from_sphere(0.0, 1, 0.1, 128)
    p = radial.SchemeParams(dt=1e-4)
    u0 = st.u.copy()
    s = st
    for _ in range(200):
        s = radial.step(s, p)
        m = radial.mismatch(s)
        assert max(abs(m[0]), abs(m[1])) <= p.mismatch_tol
    assert np.max(np.abs(s.u - u0)) < 1e-10


def test_scheme_params_validation():
    with pytest.raises(DomainError):
        radial.SchemeParams(dt=-1e-3)
    with pytest.raises(DomainError):
        radial.SchemeParams(dt=1e-3, theta=0.3)
    with pytest.raises(DomainError):
        radial.SchemeParams(dt=1e-3, lam=1.5)


def test_shrinking_circle_tracks_mcf_short():
    cfg = radial.RadialRunConfig(n=2, eps=0.05, r0=1.0, M=256, T=0.1, dt=2e-4)
    res = radial.run(cfg)
    assert res.status == "ok"
    for t, st in zip(res.times, res.states):
        assert abs(st.radius_mid - np.sqrt(1.0 - 2.0 * t)) < 5e-3


def test_run_invariants_maximum_principle_and_monotonicity():
    cfg = radial.RadialRunConfig(n=2, eps=0.05, r0=1.0, M=128, T=0.05, dt=2e-4)
    res = radial.run(cfg)
    for st in res.states:
        assert np.all(st.u >= -1.0 - 1e-12) and np.all(st.u <= 1.0 + 1e-12)
        assert np.all(np.diff(st.u) > 0)
        assert st.eps < st.width < 4 * st.eps


def test_energy_dissipates_along_run():
    cfg = radial.RadialRunConfig(n=2, eps=0.05, r0=1.0, M=128, T=0.05, dt=2e-4)
    res = radial.run(cfg)
    assert res.energy_monotone
    energies = [d.energy for d in res.diags]
    assert energies[-1] < energies[0]


def test_crank_nicolson_variant_runs():
    cfg = radial.RadialRunConfig(
        n=2, eps=0.05, r0=1.0, M=128, T=0.02, dt=1e-4, theta=0.5
    )
    res = radial.run(cfg)
    assert res.status == "ok"
    assert abs(res.states[-1].radius_mid - np.sqrt(1 - 2 * res.times[-1])) < 5e-3


def test_diffusion_coefficient_scales_speed():
    # With c = 2 the circle shrinks like sqrt(r0^2 - 2 c t) (time rescaling).
    cfg = radial.RadialRunConfig(
        n=2, eps=0.05, r0=1.0, M=128, T=0.05, dt=1e-4, diffusion_coeff=2.0
    )
    res = radial.run(cfg)
    t = res.times[-1]
    assert res.states[-1].radius_mid == pytest.approx(
        np.sqrt(1 - 4 * t), abs=5e-3
    )


def test_extinction_detected_near_oracle_time():
    # MCF extinction oracle: t* = r0^2 / (2 (n-1)) = 0.0625 for r0=1/2, n=3.
    cfg = radial.RadialRunConfig(n=3, eps=0.02, r0=0.5, M=128, T=0.08, dt=1e-4)
    res = radial.run(cfg)
    assert res.status == "extinct"
    assert res.extinction_time == pytest.approx(0.0625, rel=0.05)


def test_step_reject_on_unreachable_tolerance():
    st = radial.init_from_sphere(1.0, 2, 0.05, 128)
    p = radial.SchemeParams(dt=1e-4, mismatch_tol=1e-17, lam=0.0)
    with pytest.raises(StepRejectError):
        s = st
        for _ in range(3):
            s = radial.step(s, p)


def test_zero_duration_run_echoes_initial_state():
    cfg = radial.RadialRunConfig(n=2, eps=0.05, r0=1.0, M=128, T=0.0, dt=1e-4)
    res = radial.run(cfg)
    assert len(res.states) == 1
    assert res.states[0].t == 0.0


def test_trajectory_csv_written(tmp_path):
    cfg = radial.RadialRunConfig(
        n=2, eps=0.05, r0=1.0, M=128, T=0.01, dt=2e-4, output_dir=tmp_path,
        snapshot_every=1,
    )
    radial.run(cfg)
    traj = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert traj[0] == (
        "t,s_minus,s_plus,mismatch_minus,mismatch_plus,"
        "sup_grad_phi,holder_grad_phi,radius_mid"
    )
    assert len(traj) > 2
    assert (tmp_path / "profile_0000.csv").exists()
    assert (tmp_path / "profile_0000.json").exists()


def test_rendered_snapshot_forced_mcf_residual_near_boundary():
    # One-sided stencils at the free boundary: residual O(h) with a modest
    # constant on a rendered solver snapshot.
    cfg = radial.RadialRunConfig(n=2, eps=0.05, r0=1.0, M=512, T=0.02, dt=2e-4)
    res = radial.run(cfg)
    st = res.states[-1]
    h = 0.01
    grid = radial.grid_for_state(st, h)
    f = radial.render_to_grid(st, grid)
    m = band_mask(f, 0.0)
    pot = PotentialSpec.free_boundary(st.eps)
    r = forced_mcf_residual(f, pot, m)
    sup, excluded = residual_stats(r, m)
    assert excluded < 0.05 * m.count
    assert sup <= 10.0 * h


def test_supported_regime_warning():
    cfg = radial.RadialRunConfig(n=2, eps=0.1, r0=0.15, M=64, T=0.004, dt=2e-4)
    with pytest.raises(DomainError):
        # r0 <= 2 eps violates the self-intersection guard at init
        radial.run(cfg)
    cfg2 = radial.RadialRunConfig(n=2, eps=0.09, r0=0.4, M=64, T=0.004, dt=2e-4)
    res = radial.run(cfg2)
    assert res.warnings  # eps * eta exceeds the supported regime
