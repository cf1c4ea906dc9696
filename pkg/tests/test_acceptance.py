"""Acceptance suite: one test per criterion, at the stated tolerances.

Each test prints a PASS line with the measured values (run with -s to see
them); the budgets quoted in the assertions are wall-clock desk-scale
budgets and include generous margin on this hardware.
"""

import time

import numpy as np
import pytest

from mcflab import grid2d, harness, radial, variation as var
from mcflab.curvature import (
    PotentialSpec,
    forced_mcf_residual,
    phi_evolution_residual,
    residual_stats,
)
from mcflab.fields import BandMask, Grid, band_mask, field_from_function
from mcflab.levelset import (
    AnalyticField,
    hmcf_residual,
    integrate_immersion,
    level_preservation_error,
)


def _report(name, passed, detail, elapsed, budget):
    line = (
        f"CRITERION {name}: {'PASS' if passed else 'FAIL'} ({detail}; "
        f"{elapsed:.1f}s of {budget:.0f}s budget)"
    )
    print(line)
    assert passed, line
    assert elapsed < budget, f"{name} exceeded budget: {elapsed:.1f}s >= {budget}s"


# -- 1: forced mean-curvature-flow identity on manufactured fields ----------


def test_criterion_1_forced_mcf_identity():
    t0 = time.perf_counter()
    pot = PotentialSpec.free_boundary(1.0)
    hs, sups = [], []
    for n in (33, 65, 129):
        g = Grid(2, (0.0, 0.0), 1.0 / (n - 1), (n, n))
        f = field_from_function(
            g,
            lambda p: np.sin(p[..., 0]) * np.cos(p[..., 1]) + 2 * p[..., 0],
            dt_fn=lambda p: -2 * np.sin(p[..., 0]) * np.cos(p[..., 1]),
        )
        res = forced_mcf_residual(f, pot, BandMask(np.ones(g.counts, bool)),
                                  grad_floor=1e-8)
        interior = np.zeros(g.counts, bool)
        interior[2:-2, 2:-2] = True
        sups.append(float(np.nanmax(np.abs(res.values[interior]))))
        hs.append(g.spacing)
    slope = float(np.polyfit(np.log(hs), np.log(sups), 1)[0])
    # companion check: the quadratic field keeps a second-order residual
    gq = Grid(2, (0.5, 0.5), 1.0 / 64, (65, 65))
    fq = field_from_function(
        gq, lambda p: 0.5 * (p[..., 0] ** 2 + p[..., 1] ** 2),
        dt_fn=lambda p: np.full(p.shape[:-1], 2.0),
    )
    rq = forced_mcf_residual(fq, pot, BandMask(np.ones(gq.counts, bool)),
                             grad_floor=1e-8)
    interior = np.zeros(gq.counts, bool)
    interior[2:-2, 2:-2] = True
    quad_sup = float(np.nanmax(np.abs(rq.values[interior])))
    elapsed = time.perf_counter() - t0
    _report(
        "1 forced-MCF identity",
        abs(slope - 2.0) <= 0.3 and quad_sup <= 100.0 * gq.spacing**2,
        f"slope={slope:.3f} (2.0 +- 0.3), quad sup={quad_sup:.2e}",
        elapsed, 10.0,
    )


# -- 2: phi evolution identity ----------------------------------------------


def test_criterion_2_phi_evolution_identity():
    t0 = time.perf_counter()
    pot = PotentialSpec.free_boundary(1.0)

    def mk(t, n):
        g = Grid(2, (0.2, 0.0), 0.8 / (n - 1), (n, n))
        return field_from_function(
            g, lambda p: np.exp(-t) * np.sin(p[..., 0]) + 3 * p[..., 0], time=t
        )

    levels = ((33, 4e-3), (65, 1e-3), (129, 2.5e-4))
    sups, hs = [], []
    for n, dt in levels:
        f1, f0 = mk(0.5, n), mk(0.5 - dt, n)
        res = phi_evolution_residual(
            f1, f0, pot, BandMask(np.ones(f1.grid.counts, bool)), grad_floor=1e-8
        )
        interior = np.zeros(f1.grid.counts, bool)
        interior[2:-2, 2:-2] = True
        sups.append(float(np.nanmax(np.abs(res.values[interior]))))
        hs.append(f1.grid.spacing)
    slope = float(np.polyfit(np.log(hs), np.log(sups), 1)[0])
    elapsed = time.perf_counter() - t0
    _report(
        "2 phi-evolution identity",
        slope >= 1.5,
        f"joint slope={slope:.3f} (>= 1.5), residuals={[f'{s:.2e}' for s in sups]}",
        elapsed, 10.0,
    )


# -- 3: level-set flow identities -------------------------------------------


def test_criterion_3_levelset_flow():
    t0 = time.perf_counter()
    fld = AnalyticField(
        value=lambda x: 0.5 * float(x @ x),
        gradient=lambda x: x,
        hessian=lambda x: np.eye(2),
    )
    path = integrate_immersion(
        fld, (np.sqrt(2.0), 0.0), 1.0, 2.0, tol=1e-8, n_samples=1001
    )
    lvl = level_preservation_error(path, fld)
    res = hmcf_residual(path, fld)
    elapsed = time.perf_counter() - t0
    _report(
        "3 level-set flow",
        res < 1e-6 and lvl < 1e-7,
        f"hmcf residual={res:.2e} (< 1e-6), level error={lvl:.2e} (< 1e-7)",
        elapsed, 1.0,
    )


# -- 4: planar-front stationarity -------------------------------------------


def test_criterion_4_planar_stationarity():
    t0 = time.perf_counter()
    st = radial.init_from_sphere(0.0, 1, 0.1, 128)
    p = radial.SchemeParams(dt=1e-4)
    u0 = st.u.copy()
    s = st
    worst_m = 0.0
    for _ in range(1000):
        s = radial.step(s, p)
        m = radial.mismatch(s)
        worst_m = max(worst_m, abs(m[0]), abs(m[1]))
    drift = float(np.max(np.abs(s.u - u0)))
    elapsed = time.perf_counter() - t0
    _report(
        "4 planar stationarity",
        drift <= 1e-8 and worst_m <= 1e-3,
        f"drift={drift:.2e} (<= 1e-8), worst mismatch={worst_m:.2e} (<= 1e-3)",
        elapsed, 5.0,
    )


# -- 5/6/11: one shrinking-circle run feeds three criteria ------------------


@pytest.fixture(scope="module")
def circle_run():
    t0 = time.perf_counter()
    cfg = radial.RadialRunConfig(n=2, eps=0.05, r0=1.0, M=1024, T=0.3, dt=2e-4)
    res = radial.run(cfg)
    return res, time.perf_counter() - t0


def test_criterion_5_shrinking_circle(circle_run):
    res, elapsed = circle_run
    errs = [
        abs(st.radius_mid - np.sqrt(1.0 - 2.0 * t))
        for t, st in zip(res.times, res.states)
    ]
    worst = max(errs)
    _report(
        "5 shrinking circle",
        res.status == "ok" and worst <= 5 * 0.05,
        f"max |r_num - r_exact|={worst:.2e} (<= {5 * 0.05}), status={res.status}",
        elapsed, 30.0,
    )


def test_criterion_6_gradient_envelopes(circle_run):
    res, _ = circle_run
    t0 = time.perf_counter()
    c0 = 10.0 * np.sqrt(2.0)
    eta = res.eta
    dev_g = max(d.sup_dev_gradu for d in res.diags)
    dev_p = max(d.sup_dev_phi for d in res.diags)
    elapsed = time.perf_counter() - t0
    _report(
        "6 gradient envelopes",
        dev_g <= c0 * eta and dev_p <= c0 * 0.05 * eta,
        f"sup||grad u|-1/eps|={dev_g:.3f} (<= {c0 * eta:.2f}), "
        f"sup|phi-log eps|={dev_p:.4f} (<= {c0 * 0.05 * eta:.3f}), eta={eta:.2f}",
        elapsed, 5.0,
    )


def test_criterion_11_energy_dissipation(circle_run):
    res, _ = circle_run
    e0 = res.diags[0].energy
    increase = res.max_energy_increase
    _report(
        "11 energy dissipation",
        increase <= 1e-6 * max(1.0, e0),
        f"max per-step energy increase={increase:.2e} "
        f"(<= {1e-6 * max(1.0, e0):.2e}), J0={e0:.3f}",
        0.0, 5.0,
    )


# -- 7/8: one epsilon sweep feeds two rate criteria -------------------------


@pytest.fixture(scope="module")
def rate_sweep(tmp_path_factory):
    t0 = time.perf_counter()
    cfg = harness.SweepConfig(
        eps_list=(0.1, 0.05, 0.025, 0.0125),
        r0=4.0, n=2, T=1.0, alpha=0.5, M=512, dt=1e-3, jobs=2,
        output_dir=str(tmp_path_factory.mktemp("sweep")),
    )
    res = harness.run_sweep(cfg)
    return res, time.perf_counter() - t0


def test_criterion_7_eps_rate_linfty(rate_sweep):
    res, elapsed = rate_sweep
    fit = res.fits["sup_grad_phi"]
    _report(
        "7 eps-rate sup|grad phi|",
        fit.slope >= 0.8 and fit.r_squared >= 0.95,
        f"slope={fit.slope:.3f} (>= 0.8), r^2={fit.r_squared:.4f} (>= 0.95)",
        elapsed, 120.0,
    )


def test_criterion_8_eps_rate_holder(rate_sweep):
    res, elapsed = rate_sweep
    fit = res.fits["holder_dnu_phi"]
    _report(
        "8 eps-rate Holder(1/2)",
        fit.slope >= 0.4 and fit.r_squared >= 0.9,
        f"slope={fit.slope:.3f} (>= 0.4), r^2={fit.r_squared:.4f} (>= 0.9)",
        0.0, 120.0,
    )


# -- 9: inner variation routes agree ----------------------------------------


def test_criterion_9_inner_variation():
    t0 = time.perf_counter()
    bump = var.radial_bump((0.0, 0.0), 0.45)
    # smooth family
    g2 = Grid(2, (-1.0, -1.0), 2.0 / 160, (161, 161))
    u2 = field_from_function(
        g2, lambda p: np.sin(np.pi * p[..., 0]) * np.cos(np.pi * p[..., 1])
    )
    pot2 = PotentialSpec.double_well(2.0, 0.3)
    iv2 = var.inner_variation_analytic(u2, bump, pot2)
    fd2 = var.inner_variation_fd(u2, bump, pot2, t_step=1e-4)
    gap2 = abs(iv2.total - fd2) / abs(fd2)
    # indicator family, planar band with boundary term
    g0 = Grid(2, (-1.0, -1.0), 0.025, (81, 81))
    pot0 = PotentialSpec.free_boundary(0.1)
    a = 5 * g0.spacing
    u0 = field_from_function(g0, lambda p: np.clip(p[..., 0] / a, -1, 1))
    iv0 = var.inner_variation_analytic(u0, bump, pot0)
    fd0 = var.inner_variation_fd(u0, bump, pot0, t_step=1e-4)
    gap0 = abs(iv0.total - fd0) / abs(fd0)
    # critical planar front: first variation vanishes for 5 deformations
    u_crit = field_from_function(g0, lambda p: np.clip(p[..., 0] / 0.1, -1, 1))
    deformations = [
        var.radial_bump((0.0, 0.0), 0.45),
        var.radial_bump((0.1, 0.2), 0.35),
        var.radial_bump((-0.15, -0.1), 0.4, scale=0.7),
        var.rotation_bump((0.0, 0.0), 0.45),
        var.rotation_bump((0.05, -0.2), 0.3, scale=1.3),
    ]
    worst_crit = 0.0
    for U in deformations:
        pts = g0.node_points()
        u_inf = float(np.max(np.linalg.norm(U(pts), axis=-1)))
        iv = var.inner_variation_analytic(u_crit, U, pot0)
        worst_crit = max(worst_crit, abs(iv.total) / max(u_inf, 1e-300))
    elapsed = time.perf_counter() - t0
    _report(
        "9 inner variation",
        gap2 <= 1e-3 and gap0 <= 1e-2 and worst_crit <= 1e-6,
        f"rel gap delta=2: {gap2:.2e} (<= 1e-3), delta=0: {gap0:.2e} (<= 1e-2), "
        f"critical |dJ|/|U|: {worst_crit:.2e} (<= 1e-6)",
        elapsed, 10.0,
    )


# -- 10: stress divergence identity ------------------------------------------


def test_criterion_10_stress_divergence():
    t0 = time.perf_counter()
    pot = PotentialSpec.double_well(2.0, 0.5)
    sups, hs = [], []
    for n in (33, 65, 129):
        g = Grid(2, (0.0, 0.0), 1.0 / (n - 1), (n, n))
        u = field_from_function(g, lambda p: np.sin(p[..., 0]))
        interior = np.zeros(g.counts, bool)
        interior[2:-2, 2:-2] = True
        sups.append(var.div_stress_check(u, pot, BandMask(interior)))
        hs.append(g.spacing)
    slope = float(np.polyfit(np.log(hs), np.log(sups), 1)[0])
    # exact zero cases
    g0 = Grid(2, (-1.0, -1.0), 0.025, (81, 81))
    pot0 = PotentialSpec.free_boundary(0.1)
    u_const = field_from_function(g0, lambda p: np.ones(p.shape[:-1]))
    interior = np.zeros(g0.counts, bool)
    interior[3:-3, 3:-3] = True
    z1 = var.div_stress_check(u_const, pot0, BandMask(interior))
    u_front = field_from_function(g0, lambda p: np.clip(p[..., 0] / 0.1, -1, 1))
    m = band_mask(u_front, 0.0).inside.copy()
    shrunk = m.copy()
    shrunk[1:, :] &= m[:-1, :]
    shrunk[:-1, :] &= m[1:, :]
    shrunk[1:, :] &= shrunk[:-1, :].copy()
    shrunk[:, :3] = False
    shrunk[:, -3:] = False
    z2 = var.div_stress_check(u_front, pot0, BandMask(shrunk))
    elapsed = time.perf_counter() - t0
    _report(
        "10 stress divergence",
        abs(slope - 2.0) <= 0.3 and z1 < 1e-12 and z2 < 1e-9,
        f"slope={slope:.3f} (2.0 +- 0.3), const={z1:.1e}, front interior={z2:.1e}",
        elapsed, 5.0,
    )


# -- 12: 2D area law (research mode) -----------------------------------------


def test_criterion_12_area_law():
    t0 = time.perf_counter()
    g = Grid(2, (-1.35, -1.35), 0.02, (136, 136))
    st = grid2d.init_from_curve(grid2d.Circle(1.0), 0.1, g)
    p = radial.SchemeParams(dt=0.25 * 0.02**2, lam=0.5)
    res = grid2d.run2d(st, p, T=0.2, record_every=100)
    slope = float(np.polyfit(res.times, res.areas, 1)[0])
    rel = abs(slope + 2 * np.pi) / (2 * np.pi)
    elapsed = time.perf_counter() - t0
    _report(
        "12 area law",
        res.status == "ok" and rel <= 0.10,
        f"dA/dt={slope:.3f} vs -2pi, rel err={rel:.3f} (<= 0.10)",
        elapsed, 120.0,
    )
