"""Command-line front end: simulate, diagnose, check, sweep, report.

Every command reads a TOML or JSON config (unknown keys are errors, not
warnings: a silently ignored misspelling would invalidate a rate study),
writes its outputs under --out, and drops a manifest.json recording the
command, the canonical config hash and the produced files.

Exit codes: 0 ok; 2 config error; 3 numerical failure (step reject or
degenerate data); 4 acceptance-gate failure under --assert.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import grid2d, harness, levelset, radial, variation
from .curvature import (
    PotentialSpec,
    forced_mcf_residual,
    residual_stats,
)
from .errors import DomainError, StepRejectError
from .fields import (
    Grid,
    band_mask,
    read_field_csv,
    write_field_csv,
    write_residual_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_GATE = 4


def _load_config(path: str | None, allowed: dict[str, type | tuple], name: str) -> dict:
    """Load TOML/JSON config and reject unknown keys."""
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise DomainError(f"config file {p} not found")
    if p.suffix == ".json":
        cfg = json.loads(p.read_text())
    else:
        try:
            import tomllib  # py >= 3.11
        except ModuleNotFoundError:
            import tomli as tomllib
        cfg = tomllib.loads(p.read_text())
    unknown = set(cfg) - set(allowed)
    if unknown:
        raise DomainError(
            f"unknown {name} config keys: {sorted(unknown)}; "
            f"allowed: {sorted(allowed)}"
        )
    return cfg


def _write_manifest(out: Path, command: str, config_path, cfg: dict,
                    outputs: list[Path], status: str) -> Path:
    man = {
        "command": command,
        "config_path": str(config_path) if config_path else None,
        "config_hash": harness.config_hash(cfg),
        "outputs": sorted(str(o.relative_to(out)) for o in outputs),
        "status": status,
    }
    path = out / "manifest.json"
    with open(path, "w") as fh:
        json.dump(man, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

_RADIAL_KEYS = {
    "n": int, "eps": float, "r0": float, "M": int, "T": float, "dt": float,
    "lambda": float, "theta": float, "mismatch_tol": float,
    "diffusion_coeff": float, "sample_every": int, "snapshot_every": int,
}


def _cmd_simulate_radial(args) -> int:
    cfg = _load_config(args.config, _RADIAL_KEYS, "simulate-radial")
    out = _out_dir(args)
    run_cfg = radial.RadialRunConfig(
        n=int(cfg.get("n", 2)),
        eps=float(cfg.get("eps", 0.05)),
        r0=float(cfg.get("r0", 1.0)),
        M=int(cfg.get("M", 256)),
        T=float(cfg.get("T", 0.1)),
        dt=float(cfg.get("dt", 2e-4)),
        lam=float(cfg.get("lambda", 0.5)),
        theta=float(cfg.get("theta", 1.0)),
        mismatch_tol=float(cfg.get("mismatch_tol", 1e-3)),
        diffusion_coeff=float(cfg.get("diffusion_coeff", 1.0)),
        sample_every=cfg.get("sample_every"),
        snapshot_every=int(cfg.get("snapshot_every", 0)),
        output_dir=out,
    )
    result = radial.run(run_cfg)
    outputs = sorted(out.glob("*.csv")) + sorted(out.glob("*.json"))
    status = {"ok": "ok", "extinct": "partial", "rejected": "failed"}[result.status]
    outputs.append(_write_manifest(out, "simulate-radial", args.config, cfg, outputs, status))
    print(f"simulate-radial: status={result.status} eta={result.eta:.4g} "
          f"steps_sampled={len(result.times)}")
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if result.status == "rejected":
        print(result.reject_message, file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


_GRID2D_KEYS = {
    "curve": str, "r0": float, "a": float, "b": float, "eps": float,
    "h": float, "box": float, "T": float, "dt": float, "lambda": float,
    "record_every": int, "redistance_every": int,
}


def _cmd_simulate_2d(args) -> int:
    cfg = _load_config(args.config, _GRID2D_KEYS, "simulate-2d")
    out = _out_dir(args)
    eps = float(cfg.get("eps", 0.1))
    h = float(cfg.get("h", eps / 5.0))
    box = float(cfg.get("box", 1.3))
    counts = int(round(2 * box / h)) + 1
    grid = Grid(2, (-box, -box), h, (counts, counts))
    kind = cfg.get("curve", "circle")
    if kind == "circle":
        curve = grid2d.Circle(float(cfg.get("r0", 1.0)))
    elif kind == "ellipse":
        curve = grid2d.Ellipse(float(cfg.get("a", 1.0)), float(cfg.get("b", 0.6)))
    else:
        raise DomainError(f"unknown curve type {kind!r}")
    state = grid2d.init_from_curve(curve, eps, grid)
    p = radial.SchemeParams(
        dt=float(cfg.get("dt", 0.25 * h * h)), lam=float(cfg.get("lambda", 0.5))
    )
    result = grid2d.run2d(
        state,
        p,
        T=float(cfg.get("T", 0.1)),
        record_every=int(cfg.get("record_every", 50)),
        redistance_every=int(cfg.get("redistance_every", 5)),
        keep_states=True,
    )
    outputs = []
    rows = np.column_stack([result.times, result.areas, result.lengths])
    area_csv = out / "area_history.csv"
    with open(area_csv, "w") as fh:
        fh.write("t,area,length\n")
        for r in rows:
            fh.write(",".join(format(x, ".17g") for x in r) + "\n")
    outputs.append(area_csv)
    if result.states:
        final = result.states[-1]
        snap, man = write_field_csv(final.u, out / "final_field.csv")
        outputs += [snap, man]
        contour_csv = out / "final_contour.csv"
        with open(contour_csv, "w") as fh:
            fh.write("k,x,y\n")
            for k, poly in enumerate(grid2d.extract_level_curve(final, 0.0)):
                for x, y in poly:
                    fh.write(f"{k},{format(x, '.17g')},{format(y, '.17g')}\n")
        outputs.append(contour_csv)
    status = "ok" if result.status == "ok" else "partial"
    outputs.append(_write_manifest(out, "simulate-2d", args.config, cfg, outputs, status))
    print(f"simulate-2d: status={result.status} records={len(result.times)}")
    return EXIT_OK


_DIAGNOSE_KEYS = {"margin": float, "grad_floor": float, "eps": float}


def _cmd_diagnose(args) -> int:
    cfg = _load_config(args.config, _DIAGNOSE_KEYS, "diagnose")
    out = _out_dir(args)
    field = read_field_csv(args.field)
    if args.ut is not None:
        ut = read_field_csv(args.ut)
        field = field.with_dt(ut.values)
    if field.dt_values is None:
        raise DomainError("diagnose needs ut data (column or --ut file)")
    eps = float(cfg.get("eps", 1.0))
    pot = PotentialSpec.free_boundary(eps)
    mask = band_mask(field, float(cfg.get("margin", 0.0)))
    res = forced_mcf_residual(field, pot, mask, grad_floor=cfg.get("grad_floor"))
    sup, excluded = residual_stats(res, mask)
    res_csv = write_residual_csv(field.grid, res.values, out / "residual.csv")
    outputs = [res_csv]
    outputs.append(_write_manifest(out, "diagnose", args.config, cfg, outputs, "ok"))
    print(f"diagnose: sup|r| = {sup:.6g} over {mask.count} nodes "
          f"({excluded} excluded)")
    if not np.isfinite(sup):
        return EXIT_NUMERICAL
    return EXIT_OK


_LEVELSET_KEYS = {
    "case": str, "x0": list, "tau0": float, "tau1": float, "tol": float,
    "n_samples": int,
}


def _cmd_levelset_check(args) -> int:
    cfg = _load_config(args.config, _LEVELSET_KEYS, "levelset-check")
    out = _out_dir(args)
    case = cfg.get("case", "paraboloid")
    if case == "paraboloid":
        fld = levelset.AnalyticField(
            value=lambda x: 0.5 * float(x @ x),
            gradient=lambda x: x,
            hessian=lambda x: np.eye(2),
        )
        x0 = cfg.get("x0", [np.sqrt(2.0), 0.0])
        tau0 = float(cfg.get("tau0", 1.0))
        tau1 = float(cfg.get("tau1", 2.0))
    elif case == "cone":
        fld = levelset.AnalyticField(
            value=lambda x: float(np.linalg.norm(x)),
            gradient=lambda x: x / np.linalg.norm(x),
            hessian=lambda x: (np.eye(2) - np.outer(x, x) / (x @ x))
            / np.linalg.norm(x),
        )
        x0 = cfg.get("x0", [1.0, 0.0])
        tau0 = float(cfg.get("tau0", 1.0))
        tau1 = float(cfg.get("tau1", 2.0))
    else:
        raise DomainError(f"unknown levelset-check case {case!r}")
    tol = float(cfg.get("tol", 1e-8))
    path = levelset.integrate_immersion(
        fld, np.asarray(x0, float), tau0, tau1, tol,
        n_samples=int(cfg.get("n_samples", 1001)),
    )
    lvl_err = levelset.level_preservation_error(path, fld)
    residual = levelset.hmcf_residual(path, fld)
    csv_path = levelset.write_path_csv(path, out / "path.csv")
    report = {
        "case": case,
        "status": path.status,
        "level_preservation_error": lvl_err,
        "hmcf_residual": residual,
        "tol": tol,
    }
    rep_path = out / "levelset_report.json"
    with open(rep_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs = [csv_path, rep_path]
    outputs.append(_write_manifest(out, "levelset-check", args.config, cfg, outputs, "ok"))
    print(f"levelset-check[{case}]: status={path.status} "
          f"level_err={lvl_err:.3e} hmcf_residual={residual:.3e}")
    if path.status == "degenerate":
        return EXIT_NUMERICAL
    if args.assert_gate and (residual >= 1e-6 or lvl_err >= 1e-7):
        return EXIT_GATE
    return EXIT_OK


_VARIATION_KEYS = {"delta": float, "eps": float, "t_step": float}


def _cmd_variation_check(args) -> int:
    from .fields import Grid, field_from_function

    cfg = _load_config(args.config, _VARIATION_KEYS, "variation-check")
    out = _out_dir(args)
    delta = float(cfg.get("delta", 2.0))
    eps = float(cfg.get("eps", 0.3))
    t_step = float(cfg.get("t_step", 1e-4))
    U = variation.radial_bump((0.0, 0.0), 0.45)
    if delta == 0.0:
        pot = PotentialSpec.free_boundary(eps)
        g = Grid(2, (-1.0, -1.0), 0.025, (81, 81))
        a = 5 * g.spacing  # kinks on node planes
        u = field_from_function(g, lambda p: np.clip(p[..., 0] / a, -1, 1))
    else:
        pot = PotentialSpec.double_well(delta, eps)
        g = Grid(2, (-1.0, -1.0), 2.0 / 160, (161, 161))
        u = field_from_function(
            g, lambda p: np.sin(np.pi * p[..., 0]) * np.cos(np.pi * p[..., 1])
        )
    iv = variation.inner_variation_analytic(u, U, pot)
    fd = variation.inner_variation_fd(u, U, pot, t_step=t_step)
    rel_gap = abs(iv.total - fd) / max(abs(fd), 1e-300)
    report = {
        "delta": delta,
        "eps": eps,
        "analytic": iv.total,
        "fd": fd,
        "rel_gap": rel_gap,
        "boundary_term": iv.boundary,
        "bulk_term": iv.bulk,
    }
    rep_path = out / "variation_report.json"
    with open(rep_path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs = [rep_path]
    outputs.append(_write_manifest(out, "variation-check", args.config, cfg, outputs, "ok"))
    print(f"variation-check: delta={delta} analytic={iv.total:.6g} "
          f"fd={fd:.6g} rel_gap={rel_gap:.3e}")
    gate = 1e-3 if delta > 0 else 1e-2
    if args.assert_gate and rel_gap > gate:
        return EXIT_GATE
    return EXIT_OK


_SWEEP_KEYS = {
    "eps_list": list, "r0": float, "n": int, "T": float, "alpha": float,
    "M": int, "dt": float, "lambda": float, "theta": float,
    "mismatch_tol": float, "diffusion_coeff": float, "assert": dict,
}
_DEFAULT_WINDOWS = {
    "sup_grad_phi_slope_min": 0.8,
    "sup_grad_phi_r2_min": 0.95,
    "holder_dnu_phi_slope_min": 0.4,
    "holder_dnu_phi_r2_min": 0.9,
}


def _check_windows(fits: dict, windows: dict) -> list[str]:
    failures = []
    for name, fit in (("sup_grad_phi", fits.get("sup_grad_phi")),
                      ("holder_dnu_phi", fits.get("holder_dnu_phi"))):
        slope_min = windows.get(f"{name}_slope_min")
        r2_min = windows.get(f"{name}_r2_min")
        if fit is None:
            failures.append(f"{name}: no fit available")
            continue
        if slope_min is not None and fit.slope < slope_min:
            failures.append(f"{name}: slope {fit.slope:.3f} < {slope_min}")
        if r2_min is not None and fit.r_squared < r2_min:
            failures.append(f"{name}: r^2 {fit.r_squared:.3f} < {r2_min}")
    return failures


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config, _SWEEP_KEYS, "sweep")
    out = _out_dir(args)
    sweep_cfg = harness.SweepConfig(
        eps_list=tuple(cfg.get("eps_list", (0.1, 0.05, 0.025, 0.0125))),
        r0=float(cfg.get("r0", 4.0)),
        n=int(cfg.get("n", 2)),
        T=float(cfg.get("T", 1.0)),
        alpha=float(cfg.get("alpha", 0.5)),
        M=int(cfg.get("M", 512)),
        dt=float(cfg.get("dt", 1e-3)),
        lam=float(cfg.get("lambda", 0.5)),
        theta=float(cfg.get("theta", 1.0)),
        mismatch_tol=float(cfg.get("mismatch_tol", 1e-3)),
        diffusion_coeff=float(cfg.get("diffusion_coeff", 1.0)),
        jobs=args.jobs,
        seed=args.seed,
        output_dir=str(out),
    )
    result = harness.run_sweep(sweep_cfg)
    outputs = [result.run_dir / "sweep.csv", result.run_dir / "fits.json"]
    status = "ok" if not result.failures else "partial"
    outputs.append(_write_manifest(out, "sweep", args.config, cfg, outputs, status))
    for r in result.records:
        print(f"eps={r.eps:g}: sup_grad_phi={r.sup_grad_phi:.4e} "
              f"holder_dnu_phi={r.holder_dnu_phi:.4e} eta={r.eta:.3f} "
              f"status={r.status}")
    for name, fit in result.fits.items():
        print(f"fit {name}: slope={fit.slope:.4f} r2={fit.r_squared:.5f}")
    for f in result.failures:
        print(f"failure: {f}", file=sys.stderr)
    if args.assert_gate:
        windows = dict(_DEFAULT_WINDOWS)
        windows.update(cfg.get("assert", {}))
        failures = _check_windows(result.fits, windows)
        if failures:
            for f in failures:
                print(f"gate: {f}", file=sys.stderr)
            return EXIT_GATE
    return EXIT_OK


_REPORT_KEYS = {"run_dir": str, "assert": dict}


def _cmd_report(args) -> int:
    cfg = _load_config(args.config, _REPORT_KEYS, "report")
    out = _out_dir(args)
    run_dir = Path(cfg.get("run_dir", args.run or "."))
    sweep_csv = run_dir / "sweep.csv"
    fits_json = run_dir / "fits.json"
    if not sweep_csv.exists() or not fits_json.exists():
        raise DomainError(f"run dir {run_dir} lacks sweep.csv/fits.json")
    records = harness.read_sweep_csv(sweep_csv)
    fits = json.loads(fits_json.read_text())
    lines = ["# Sweep report", "", "| eps | eta | sup_grad_phi | holder_dnu_phi | radius_err | status |",
             "|-----|-----|--------------|----------------|------------|--------|"]
    for r in records:
        lines.append(
            f"| {r.eps:g} | {r.eta:.3f} | {r.sup_grad_phi:.4e} | "
            f"{r.holder_dnu_phi:.4e} | {r.radius_err_max:.2e} | {r.status} |"
        )
    lines += ["", "## Fits", ""]
    for name, fit in sorted(fits.items()):
        lines.append(f"- {name}: slope {fit['slope']:.4f}, "
                     f"r^2 {fit['r_squared']:.5f} ({fit['points_used']} points)")
    report_path = out / "report.md"
    report_path.write_text("\n".join(lines) + "\n")
    outputs = [report_path]
    outputs.append(_write_manifest(out, "report", args.config, cfg, outputs, "ok"))
    print(f"report: wrote {report_path}")
    if args.assert_gate:
        windows = dict(_DEFAULT_WINDOWS)
        windows.update(cfg.get("assert", {}))
        fit_objs = {
            name: harness.RateFit(
                slope=f["slope"], intercept=f["intercept"],
                r_squared=f["r_squared"], points_used=f["points_used"],
            )
            for name, f in fits.items()
        }
        failures = _check_windows(fit_objs, windows)
        if failures:
            for f in failures:
                print(f"gate: {f}", file=sys.stderr)
            return EXIT_GATE
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mcflab",
        description="Free-boundary interface laboratory: simulate, diagnose, verify.",
    )
    sub = ap.add_subparsers(dest="command")

    def common(p, needs_field=False):
        p.add_argument("--config", default=None, help="TOML or JSON config file")
        p.add_argument("--out", default="runs/out", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers")
        p.add_argument("--assert", dest="assert_gate", action="store_true",
                       help="exit 4 when acceptance windows fail")
        p.add_argument("--seed", type=lambda s: int(s, 16),
                       default=harness.DEFAULT_SEED, help="hex seed")
        if needs_field:
            p.add_argument("--field", required=True, help="field CSV (with manifest)")
            p.add_argument("--ut", default=None, help="time-derivative field CSV")

    common(sub.add_parser("simulate-radial", help="radial front-tracking run"))
    common(sub.add_parser("simulate-2d", help="2D band run (research mode)"))
    common(sub.add_parser("diagnose", help="curvature residuals of a field dump"),
           needs_field=True)
    common(sub.add_parser("levelset-check", help="immersion ODE identity checks"))
    common(sub.add_parser("variation-check", help="inner variation route comparison"))
    common(sub.add_parser("sweep", help="epsilon sweep with rate fits"))
    rep = sub.add_parser("report", help="render a report from sweep outputs")
    common(rep)
    rep.add_argument("--run", default=None, help="sweep run directory")
    return ap


_DISPATCH = {
    "simulate-radial": _cmd_simulate_radial,
    "simulate-2d": _cmd_simulate_2d,
    "diagnose": _cmd_diagnose,
    "levelset-check": _cmd_levelset_check,
    "variation-check": _cmd_variation_check,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    ap = _build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already; normalize other codes.
        return EXIT_CONFIG if exc.code not in (0,) else 0
    if args.command is None:
        ap.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        return _DISPATCH[args.command](args)
    except DomainError as exc:
        print(f"config/domain error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StepRejectError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
