"""Flow through level surfaces and gradient-envelope diagnostics.

The immersion F(x, tau) moves a point across the level surfaces of u,
solving dF/dtau = grad u (F) / |grad u (F)|^2 with F(x, tau0) = x, so that
u(F(x, tau)) = tau.  Its speed sigma = 1/|grad u (F)| obeys the hyperbolic
mean-curvature-type law  d sigma/d tau = sigma^2 (H - sigma lap u).  Both
facts are checked numerically here, with d sigma/d tau taken by centered
differences in tau so the check stays independent of the curvature algebra.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .curvature import sample_from_grad_hess
from .errors import DegenerateGradientError, DomainError
from .fields import (
    BandMask,
    Grid,
    ScalarField,
    derivative_fields,
    interpolate_array,
)

__all__ = [
    "AnalyticField",
    "GridField",
    "ImmersionPath",
    "integrate_immersion",
    "level_preservation_error",
    "hmcf_residual",
    "gradient_envelope_check",
    "EnvelopeReport",
    "write_path_csv",
]


class AnalyticField:
    """Evaluator backed by closed-form callables (for oracle tests)."""

    def __init__(
        self,
        value: Callable[[np.ndarray], float],
        gradient: Callable[[np.ndarray], np.ndarray],
        hessian: Callable[[np.ndarray], np.ndarray] | None = None,
        box: tuple[Sequence[float], Sequence[float]] | None = None,
    ):
        self._value = value
        self._gradient = gradient
        self._hessian = hessian
        self.box = None if box is None else (np.asarray(box[0], float), np.asarray(box[1], float))

    def value(self, x: np.ndarray) -> float:
        return float(self._value(np.asarray(x, float)))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self._gradient(np.asarray(x, float)), float)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        if self._hessian is None:
            raise DomainError("analytic field has no Hessian callable")
        return np.asarray(self._hessian(np.asarray(x, float)), float)

    def margin_to_box(self, x: np.ndarray) -> float:
        if self.box is None:
            return np.inf
        lo, hi = self.box
        return float(min(np.min(x - lo), np.min(hi - x)))


class GridField:
    """Evaluator interpolating a grid field and its derivative arrays."""

    def __init__(self, field: ScalarField, mask: BandMask | np.ndarray | None = None):
        self.field = field
        self.grid: Grid = field.grid
        m = mask.inside if isinstance(mask, BandMask) else mask
        self.mask = m
        self._grad, self._hess = derivative_fields(field, m)

    def value(self, x: np.ndarray) -> float:
        return float(interpolate_array(self.grid, self.field.values, x))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(interpolate_array(self.grid, self._grad, x), float)

    def hessian(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(interpolate_array(self.grid, self._hess, x), float)

    def margin_to_box(self, x: np.ndarray) -> float:
        lo, hi = self.grid.box()
        return float(min(np.min(x - lo), np.min(hi - x)))

    def snap_inside(self, x0: np.ndarray) -> np.ndarray:
        """Move a start point one cell inside if it sits on the band edge.

        One-sided stencil noise right at the free boundary makes launches
        from the outermost band cells unreliable; starting from the nearest
        fully supported node is cheap and keeps the path comparable.
        """
        if self.mask is None:
            return x0
        lo, _ = self.grid.box()
        h = self.grid.spacing
        idx = np.clip(
            np.rint((x0 - lo) / h).astype(int), 0, np.asarray(self.grid.counts) - 1
        )
        if self._has_support(idx):
            return x0
        best, best_d = None, np.inf
        ranges = [
            range(max(0, i - 2), min(c, i + 3))
            for i, c in zip(idx, self.grid.counts)
        ]
        for cand in np.stack(np.meshgrid(*ranges, indexing="ij"), -1).reshape(-1, self.grid.dim):
            if not self._has_support(cand):
                continue
            p = lo + h * cand
            d = float(np.linalg.norm(p - x0))
            if d < best_d:
                best, best_d = p, d
        return x0 if best is None else best

    def _has_support(self, idx) -> bool:
        for off in np.ndindex(*(3,) * self.grid.dim):
            j = tuple(int(i + o - 1) for i, o in zip(idx, off))
            if any(k < 0 or k >= c for k, c in zip(j, self.grid.counts)):
                return False
            if not self.mask[j]:
                return False
        return True


def _as_evaluator(field) -> AnalyticField | GridField:
    if isinstance(field, ScalarField):
        return GridField(field)
    return field


@dataclass(frozen=True)
class ImmersionPath:
    """Sampled trajectory through level surfaces.

    taus are strictly increasing; sigmas = 1/|grad u| along the path;
    status is "ok", "truncated" (left the domain box) or "degenerate"
    (gradient fell below the floor).
    """

    taus: np.ndarray
    points: np.ndarray
    sigmas: np.ndarray
    u_values: np.ndarray
    status: str = "ok"

    def __post_init__(self):
        if np.any(np.diff(self.taus) <= 0):
            raise DomainError("taus must be strictly increasing")
        if np.any(self.sigmas <= 0):
            raise DomainError("sigmas must be positive")


def integrate_immersion(
    field,
    x0: Sequence[float],
    tau0: float,
    tau1: float,
    tol: float,
    n_samples: int = 129,
    grad_floor: float = 1e-8,
) -> ImmersionPath:
    """Integrate dF/dtau = grad u / |grad u|^2 from the tau0-level surface.

    Adaptive RK45 with relative and absolute tolerance `tol`.  The path
    terminates early (status "truncated"/"degenerate") if it exits the
    field's box or the gradient degenerates.
    """
    fld = _as_evaluator(field)
    x0 = np.asarray(x0, dtype=float)
    if tau1 <= tau0:
        raise DomainError("require tau1 > tau0")
    if isinstance(fld, GridField):
        x0 = fld.snap_inside(x0)
    u0 = fld.value(x0)
    if abs(u0 - tau0) > max(tol, 1e-12):
        raise DomainError(f"start point carries u = {u0:.6g}, expected tau0 = {tau0:.6g}")

    def rhs(_tau, x):
        g = fld.gradient(x)
        gg = float(g @ g)
        if gg <= grad_floor**2:
            return np.zeros_like(g)
        return g / gg

    def ev_floor(_tau, x):
        return float(np.linalg.norm(fld.gradient(x))) - grad_floor

    ev_floor.terminal = True
    ev_floor.direction = -1

    def ev_box(_tau, x):
        return fld.margin_to_box(x)

    ev_box.terminal = True
    ev_box.direction = -1

    events = [ev_floor] if fld.margin_to_box(x0) == np.inf else [ev_floor, ev_box]
    t_eval = np.linspace(tau0, tau1, n_samples)
    # One notch below the caller's tolerance so the 10*tol level-preservation
    # contract survives error accumulation along the path.
    sol = solve_ivp(
        rhs,
        (tau0, tau1),
        x0,
        method="RK45",
        t_eval=t_eval,
        rtol=0.1 * tol,
        atol=0.1 * tol,
        events=events,
        max_step=(tau1 - tau0) / 8,
    )
    status = "ok"
    if sol.status == 1:  # terminated by an event
        hit_floor = len(sol.t_events[0]) > 0
        status = "degenerate" if hit_floor else "truncated"
    taus = sol.t
    pts = sol.y.T
    if taus.size < 2:
        raise DegenerateGradientError("path terminated before the second sample")
    sig = np.empty(taus.size)
    uv = np.empty(taus.size)
    for k, p in enumerate(pts):
        g = float(np.linalg.norm(fld.gradient(p)))
        sig[k] = 1.0 / g if g > 0 else np.inf
        uv[k] = fld.value(p)
    return ImmersionPath(taus=taus, points=pts, sigmas=sig, u_values=uv, status=status)


def level_preservation_error(path: ImmersionPath, field=None) -> float:
    """max over tau of |u(F(x, tau)) - tau|."""
    if field is None:
        u = path.u_values
    else:
        fld = _as_evaluator(field)
        u = np.array([fld.value(p) for p in path.points])
    return float(np.max(np.abs(u - path.taus)))


def hmcf_residual(path: ImmersionPath, field, grad_floor: float = 1e-8) -> float:
    """max interior defect of d sigma/d tau = sigma^2 (H - sigma lap u).

    The tau-derivative is a centered difference of the sampled sigmas;
    H and lap u come from the field's derivatives at the sampled points.
    Degenerate samples are skipped.
    """
    if path.taus.size < 3:
        raise DomainError("need at least 3 path samples")
    fld = _as_evaluator(field)
    worst = 0.0
    used = 0
    for k in range(1, path.taus.size - 1):
        dtau = path.taus[k + 1] - path.taus[k - 1]
        dsig = (path.sigmas[k + 1] - path.sigmas[k - 1]) / dtau
        p = path.points[k]
        try:
            s = sample_from_grad_hess(fld.gradient(p), fld.hessian(p), grad_floor)
        except DegenerateGradientError:
            continue
        lap = float(np.trace(s.C)) * s.grad_norm
        rhs = path.sigmas[k] ** 2 * (s.H - path.sigmas[k] * lap)
        worst = max(worst, abs(dsig - rhs))
        used += 1
    if used == 0:
        raise DegenerateGradientError("all interior path samples degenerate")
    return worst


@dataclass(frozen=True)
class EnvelopeReport:
    sup_dev_gradu: float
    sup_dev_phi: float
    passed: bool
    c0: float
    nodes: int


def gradient_envelope_check(
    field: ScalarField,
    eps: float,
    eta: float,
    mask: BandMask,
    c0: float | None = None,
    ball_radius: float | None = None,
    shrink_constant: float = 4.0,
) -> EnvelopeReport:
    """Check |grad u| stays eta-close to 1/eps on the band.

    Passes iff  sup ||grad u| - 1/eps| <= c0 * eta  and
    sup |phi - log eps| <= c0 * eps * eta, with c0 defaulting to
    10 sqrt(n).  When the domain is a masked ball of radius `ball_radius`,
    the sup is restricted to radius ball_radius - shrink_constant*eps*eta
    (paths near the outer boundary may escape before reaching the free
    boundary, so the envelope argument does not cover them).
    """
    if mask.count == 0:
        raise DomainError("empty mask")
    n = field.grid.dim
    c0 = 10.0 * np.sqrt(n) if c0 is None else c0
    m = mask.inside
    if ball_radius is not None:
        pts = field.grid.node_points()
        r = np.sqrt(np.einsum("...i,...i->...", pts, pts))
        m = m & (r <= ball_radius - shrink_constant * eps * eta)
        if not m.any():
            raise DomainError("ball restriction removed every masked node")
    grad, _ = derivative_fields(field, m)
    g = np.sqrt(np.einsum("...i,...i->...", grad, grad))
    gm = g[m]
    gm = gm[np.isfinite(gm)]
    if gm.size == 0:
        raise DomainError("no resolvable nodes in mask")
    dev_g = float(np.max(np.abs(gm - 1.0 / eps)))
    with np.errstate(divide="ignore"):
        dev_phi = float(np.max(np.abs(-np.log(gm) - np.log(eps))))
    passed = dev_g <= c0 * eta and dev_phi <= c0 * eps * eta
    return EnvelopeReport(
        sup_dev_gradu=dev_g,
        sup_dev_phi=dev_phi,
        passed=bool(passed),
        c0=float(c0),
        nodes=int(gm.size),
    )


def write_path_csv(path_obj: ImmersionPath, path: str | Path) -> Path:
    """Dump `tau,x1..xn,sigma,u_of_F` rows."""
    path = Path(path)
    n = path_obj.points.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["tau"] + [f"x{a + 1}" for a in range(n)] + ["sigma", "u_of_F"])
        for k in range(path_obj.taus.size):
            row = [path_obj.taus[k], *path_obj.points[k], path_obj.sigmas[k], path_obj.u_values[k]]
            w.writerow([format(float(x), ".17g") for x in row])
    return path
