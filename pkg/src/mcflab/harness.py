"""Sweep driver: epsilon-rate measurements, Hölder seminorms, fits, reports.

A sweep runs the radial solver once per epsilon, measures the sup-in-time
band norms (sup |grad phi|, spatial C^alpha seminorms of grad phi and of
its normal component), gates records on the measured curvature/velocity
bound eta < 1/2, and fits log(norm) against log(eps).  The theorems being
probed give one-sided bounds (norm <= C eps^p), so rate acceptance windows
are one-sided as well.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError, ExtinctionError
from . import radial

__all__ = [
    "SweepRecord",
    "RateFit",
    "SweepConfig",
    "SweepResult",
    "holder_seminorm",
    "fit_rate",
    "mcf_reference_radius",
    "mcf_extinction_time",
    "run_sweep",
    "config_hash",
    "DEFAULT_SEED",
]

DEFAULT_SEED = 0x5EED
_MAX_PAIRS = 100_000


@dataclass(frozen=True)
class SweepRecord:
    """Measured norms for one (eps, h, geometry) run."""

    eps: float
    eta: float
    h: float
    sup_grad_phi: float
    holder_grad_phi: float
    holder_dnu_phi: float
    alpha: float
    radius_err_max: float
    runtime_s: float
    status: str = "ok"

    @property
    def admissible(self) -> bool:
        """Only eta < 1/2 records enter rate fits."""
        return self.status == "ok" and self.eta < 0.5


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    points_used: int

    @property
    def valid(self) -> bool:
        return self.points_used >= 3


def holder_seminorm(
    samples: Sequence[tuple],
    alpha: float,
    metric: str = "spatial",
    seed: int = DEFAULT_SEED,
) -> float:
    """C^alpha seminorm over sampled (position, time, value-vector) triples.

    The parabolic metric is max(|x - y|, |t - s|^(1/2)).  All pairs are
    enumerated up to 1e5; beyond that a seeded random subset plus dyadic
    index strides (so near and far pairs are both represented) gives a
    deterministic under-estimate of the sup.
    """
    if len(samples) < 2:
        raise DomainError("need at least 2 samples")
    if not 0.0 < alpha <= 1.0:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if metric not in ("spatial", "parabolic"):
        raise DomainError(f"unknown metric {metric!r}")
    pos = np.asarray([np.atleast_1d(np.asarray(s[0], float)) for s in samples])
    ts = np.asarray([float(s[1]) for s in samples])
    vals = np.asarray([np.atleast_1d(np.asarray(s[2], float)) for s in samples])
    n = len(samples)
    total_pairs = n * (n - 1) // 2
    if total_pairs <= _MAX_PAIRS:
        ii, jj = np.triu_indices(n, k=1)
    else:
        rng = np.random.default_rng(seed)
        m = _MAX_PAIRS
        ii = rng.integers(0, n, size=m)
        jj = rng.integers(0, n, size=m)
        strided_i, strided_j = [], []
        stride = 1
        while stride < n:
            idx = np.arange(0, n - stride)
            strided_i.append(idx)
            strided_j.append(idx + stride)
            stride *= 2
        ii = np.concatenate([ii] + strided_i)
        jj = np.concatenate([jj] + strided_j)
        keep = ii != jj
        ii, jj = ii[keep], jj[keep]
    dx = np.linalg.norm(pos[ii] - pos[jj], axis=1)
    if metric == "parabolic":
        dist = np.maximum(dx, np.sqrt(np.abs(ts[ii] - ts[jj])))
    else:
        dist = dx
    dv = np.linalg.norm(vals[ii] - vals[jj], axis=1)
    ok = dist > 0
    if not ok.any():
        return 0.0
    return float(np.max(dv[ok] / dist[ok] ** alpha))


def fit_rate(points: Sequence[tuple[float, float]]) -> RateFit:
    """Least squares of log(err) against log(eps)."""
    if len(points) < 3:
        raise DomainError("need at least 3 points for a rate fit")
    eps = np.asarray([p[0] for p in points], float)
    err = np.asarray([p[1] for p in points], float)
    if np.any(eps <= 0) or np.any(err <= 0):
        raise DomainError("rate fit needs positive eps and err")
    x, y = np.log(eps), np.log(err)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r2,
        points_used=len(points),
    )


def mcf_extinction_time(r0: float, n: int) -> float:
    if n < 2:
        return math.inf
    return r0**2 / (2.0 * (n - 1))


def mcf_reference_radius(r0: float, n: int, t: float) -> float:
    """Radius of the shrinking sphere r' = -(n-1)/r; exact flow oracle."""
    if n < 2:
        return r0
    t_star = mcf_extinction_time(r0, n)
    if t >= t_star:
        raise ExtinctionError(
            f"t = {t:.6g} at or beyond extinction time {t_star:.6g}", time=t_star
        )
    return math.sqrt(r0**2 - 2.0 * (n - 1) * t)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    eps_list: tuple[float, ...]
    r0: float = 4.0
    n: int = 2
    T: float = 1.0
    alpha: float = 0.5
    M: int = 512
    dt: float = 1e-3
    lam: float = 0.5
    theta: float = 1.0
    mismatch_tol: float = 1e-3
    diffusion_coeff: float = 1.0
    jobs: int = 1
    seed: int = DEFAULT_SEED
    output_dir: str | None = None

    def __post_init__(self):
        if len(self.eps_list) == 0:
            raise DomainError("eps_list must not be empty")
        if any(e <= 0 for e in self.eps_list):
            raise DomainError("eps values must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must lie in (0, 1)")
        object.__setattr__(self, "eps_list", tuple(float(e) for e in self.eps_list))


@dataclass
class SweepResult:
    config: SweepConfig
    records: list[SweepRecord]
    fits: dict[str, RateFit]
    run_dir: Path | None = None
    failures: list[str] = field(default_factory=list)


def config_hash(config) -> str:
    """Stable digest of a canonicalized config mapping or dataclass."""
    if hasattr(config, "__dataclass_fields__"):
        config = asdict(config)
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _member_record(args) -> SweepRecord:
    cfg: SweepConfig
    eps, cfg = args
    t0 = time.perf_counter()
    run_cfg = radial.RadialRunConfig(
        n=cfg.n,
        eps=eps,
        r0=cfg.r0,
        M=cfg.M,
        T=cfg.T,
        dt=cfg.dt,
        lam=cfg.lam,
        theta=cfg.theta,
        mismatch_tol=cfg.mismatch_tol,
        diffusion_coeff=cfg.diffusion_coeff,
    )
    result = radial.run(run_cfg)
    sup_grad_phi = 0.0
    hol_grad = 0.0
    hol_dnu = 0.0
    radius_err = 0.0
    for t, st, d in zip(result.times, result.states, result.diags):
        sup_grad_phi = max(sup_grad_phi, d.sup_grad_phi)
        samples = [((r,), t, (p,)) for r, p in zip(d.r, d.dnu_phi)]
        # On a radially symmetric band grad phi = (d_nu phi) nu, so the two
        # spatial seminorms coincide along a ray; record both explicitly.
        hol = holder_seminorm(samples, cfg.alpha, metric="spatial", seed=cfg.seed)
        hol_grad = max(hol_grad, hol)
        hol_dnu = max(hol_dnu, hol)
        try:
            ref = mcf_reference_radius(cfg.r0, cfg.n, t)
            radius_err = max(radius_err, abs(st.radius_mid - ref))
        except ExtinctionError:
            pass
    return SweepRecord(
        eps=eps,
        eta=result.eta,
        h=2.0 * eps / (cfg.M - 1),
        sup_grad_phi=sup_grad_phi,
        holder_grad_phi=hol_grad,
        holder_dnu_phi=hol_dnu,
        alpha=cfg.alpha,
        radius_err_max=radius_err,
        runtime_s=time.perf_counter() - t0,
        status=result.status,
    )


def run_sweep(config: SweepConfig) -> SweepResult:
    """One radial run per eps (optionally in parallel), records and fits.

    Records with eta >= 1/2 or failed runs are excluded from the fits but
    kept in the report with their status.
    """
    jobs = max(1, config.jobs)
    args = [(eps, config) for eps in config.eps_list]
    if jobs > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            records = list(ex.map(_member_record, args))
    else:
        records = [_member_record(a) for a in args]

    failures = [
        f"eps={r.eps}: status={r.status}" for r in records if r.status != "ok"
    ]
    admitted = [r for r in records if r.admissible]
    fits: dict[str, RateFit] = {}
    if len(admitted) >= 3:
        for name in ("sup_grad_phi", "holder_grad_phi", "holder_dnu_phi"):
            pts = [(r.eps, getattr(r, name)) for r in admitted]
            try:
                fits[name] = fit_rate(pts)
            except DomainError:
                continue
    result = SweepResult(config=config, records=records, fits=fits, failures=failures)
    if config.output_dir is not None:
        run_dir = Path(config.output_dir) / config_hash(config)
        run_dir.mkdir(parents=True, exist_ok=True)
        write_sweep_csv(result, run_dir / "sweep.csv")
        write_fits_json(result, run_dir / "fits.json")
        result.run_dir = run_dir
    return result


_SWEEP_COLUMNS = (
    "eps",
    "eta",
    "h",
    "sup_grad_phi",
    "holder_grad_phi",
    "holder_dnu_phi",
    "alpha",
    "radius_err_max",
    "runtime_s",
    "status",
)


def write_sweep_csv(result: SweepResult, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_SWEEP_COLUMNS)
        for r in result.records:
            row = []
            for col in _SWEEP_COLUMNS:
                val = getattr(r, col)
                row.append(val if isinstance(val, str) else format(float(val), ".17g"))
            w.writerow(row)
    return path


def read_sweep_csv(path: str | Path) -> list[SweepRecord]:
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(
                SweepRecord(
                    eps=float(row["eps"]),
                    eta=float(row["eta"]),
                    h=float(row["h"]),
                    sup_grad_phi=float(row["sup_grad_phi"]),
                    holder_grad_phi=float(row["holder_grad_phi"]),
                    holder_dnu_phi=float(row["holder_dnu_phi"]),
                    alpha=float(row["alpha"]),
                    radius_err_max=float(row["radius_err_max"]),
                    runtime_s=float(row["runtime_s"]),
                    status=row["status"],
                )
            )
    return records


def write_fits_json(result: SweepResult, path: str | Path) -> Path:
    path = Path(path)
    payload = {
        name: {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "points_used": fit.points_used,
        }
        for name, fit in result.fits.items()
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
