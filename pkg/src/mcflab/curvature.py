"""Level-surface curvature quantities and pointwise flow identities.

From a scalar field u with nonvanishing gradient we form the unit normal
nu = grad u / |grad u|, the tangential projection P = I - nu x nu, the
scaled Hessian C = hess u / |grad u|, the second fundamental form
A = P C P of the level surface, B = P C, the mean curvature H = tr A,
and phi = log(1/|grad u|) whose normal derivative is the forcing by which
level-surface motion deviates from pure mean curvature flow.

Residual operations check the two identities satisfied by any solution of
du/dt = lap u - f(u):

    v = -H + d_nu phi + f(u)/|grad u|          (normal velocity law)
    d_t phi = lap phi + |A|^2 - (d_nu phi)^2 + f'(u)

where v = -du/dt / |grad u|.  In the residuals, phi-derivatives are taken
by differencing the discrete phi field (not by pointwise Hessian algebra),
so the residual measures genuine discretization error rather than being an
algebraic identity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateGradientError, DomainError
from .fields import (
    BandMask,
    ScalarField,
    derivative_fields,
    derivatives,
)

__all__ = [
    "PotentialSpec",
    "CurvatureSample",
    "sample",
    "sample_from_grad_hess",
    "phi_field",
    "forced_mcf_residual",
    "phi_evolution_residual",
    "block_form_check",
    "BlockFormReport",
    "residual_stats",
    "default_grad_floor",
]

# |u| is clamped this far inside [-1, 1] before evaluating W' so that the
# delta in (0, 1) family (singular derivative at the wells) stays finite.
_WELL_CLAMP = 1e-8


def _clamped(u):
    return np.clip(u, -1.0 + _WELL_CLAMP, 1.0 - _WELL_CLAMP)


@dataclass(frozen=True)
class PotentialSpec:
    """Double-well family member plus the reaction term of the flow.

    delta = 0 is the indicator potential (free-boundary case); delta in
    (0, 2] gives W(u) = (1 - u^2)^delta.  `f` is the nonlinearity of
    du/dt = lap u - f(u); it vanishes identically in the free-boundary
    problem.
    """

    delta: float
    eps: float
    W: Callable[[np.ndarray], np.ndarray]
    dW: Callable[[np.ndarray], np.ndarray]
    f: Callable[[np.ndarray], np.ndarray]
    df: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        if not (self.delta == 0.0 or 0.0 < self.delta <= 2.0):
            raise DomainError(f"delta must be 0 or in (0, 2], got {self.delta}")
        if not self.eps > 0:
            raise DomainError(f"eps must be positive, got {self.eps}")

    @staticmethod
    def free_boundary(eps: float) -> "PotentialSpec":
        """Indicator potential: W = 1 on |u| < 1, zero elsewhere; f = 0."""
        zero = lambda u: np.zeros_like(np.asarray(u, dtype=float))
        return PotentialSpec(
            delta=0.0,
            eps=eps,
            W=lambda u: (np.abs(np.asarray(u, dtype=float)) < 1.0).astype(float),
            dW=zero,
            f=zero,
            df=zero,
        )

    @staticmethod
    def double_well(
        delta: float,
        eps: float,
        f: Callable | None = None,
        df: Callable | None = None,
    ) -> "PotentialSpec":
        """Smooth family W(u) = (1 - u^2)^delta for delta in (0, 2]."""
        if not 0.0 < delta <= 2.0:
            raise DomainError(f"double_well needs delta in (0, 2], got {delta}")
        zero = lambda u: np.zeros_like(np.asarray(u, dtype=float))

        def W(u):
            u = np.asarray(u, dtype=float)
            return np.where(np.abs(u) < 1.0, (1.0 - _clamped(u) ** 2) ** delta, 0.0)

        def dW(u):
            u = _clamped(np.asarray(u, dtype=float))
            return -2.0 * delta * u * (1.0 - u**2) ** (delta - 1.0)

        return PotentialSpec(
            delta=delta, eps=eps, W=W, dW=dW, f=f or zero, df=df or zero
        )

    @staticmethod
    def allen_cahn(eps: float) -> "PotentialSpec":
        """Quartic well with the classical cubic reaction f = (u^3 - u)/eps^2."""
        return PotentialSpec.double_well(
            2.0,
            eps,
            f=lambda u: (np.asarray(u, dtype=float) ** 3 - u) / eps**2,
            df=lambda u: (3.0 * np.asarray(u, dtype=float) ** 2 - 1.0) / eps**2,
        )

    def energy_density(self, u, grad_sq):
        """e_eps = eps |grad u|^2 + W(u)/eps."""
        return self.eps * grad_sq + self.W(u) / self.eps


def default_grad_floor(eps: float) -> float:
    """Gradient floor 1e-8 / eps: band gradients sit near 1/eps."""
    return 1e-8 / eps


@dataclass(frozen=True)
class CurvatureSample:
    """Pointwise bundle of level-surface quantities at one location."""

    nu: np.ndarray
    P: np.ndarray
    C: np.ndarray
    A: np.ndarray
    B: np.ndarray
    H: float
    phi: float
    grad_phi: np.ndarray
    dnu_phi: float
    v: float | None = None

    @property
    def grad_norm(self) -> float:
        return float(np.exp(-self.phi))


def sample_from_grad_hess(
    grad: np.ndarray,
    hess: np.ndarray,
    grad_floor: float = 1e-8,
    dt_value: float | None = None,
) -> CurvatureSample:
    """Build the curvature bundle from gradient and Hessian at a point."""
    grad = np.asarray(grad, dtype=float)
    hess = np.asarray(hess, dtype=float)
    g = float(np.linalg.norm(grad))
    if not np.isfinite(g) or g <= grad_floor:
        raise DegenerateGradientError(
            f"|grad u| = {g:.3e} at or below floor {grad_floor:.3e}"
        )
    n = grad.shape[0]
    nu = grad / g
    P = np.eye(n) - np.outer(nu, nu)
    C = hess / g
    A = P @ C @ P
    A = 0.5 * (A + A.T)
    B = P @ C
    H = float(np.trace(A))
    grad_phi = -C @ nu
    v = None if dt_value is None else float(-dt_value / g)
    return CurvatureSample(
        nu=nu,
        P=P,
        C=C,
        A=A,
        B=B,
        H=H,
        phi=float(-np.log(g)),
        grad_phi=grad_phi,
        dnu_phi=float(grad_phi @ nu),
        v=v,
    )


def sample(
    field: ScalarField,
    index,
    grad_floor: float = 1e-8,
    mask: BandMask | np.ndarray | None = None,
) -> CurvatureSample:
    """Curvature bundle at one grid node; v is set iff dt_values exist."""
    d = derivatives(field, index, mask)
    dt_value = None
    if field.dt_values is not None:
        dt_value = float(field.dt_values[tuple(index)])
    return sample_from_grad_hess(d.grad, d.hess, grad_floor, dt_value)


@dataclass(frozen=True)
class BlockFormReport:
    max_defect: float
    nu_B: float
    trace_A: float
    dnu_phi: float
    frobenius: float


def block_form_check(s: CurvatureSample) -> BlockFormReport:
    """Defects of the block-form identities tying the sample together.

    Checks nu^T B = 0, tr A = H, d_nu phi = H - lap u/|grad u|, and
    |C|^2 - 2|grad phi|^2 = |A|^2 - (d_nu phi)^2.
    """
    d_nuB = float(np.max(np.abs(s.nu @ s.B)))
    d_trA = float(abs(np.trace(s.A) - s.H))
    trC = float(np.trace(s.C))
    d_dnu = float(abs(s.dnu_phi - (s.H - trC)))
    lhs = float(np.sum(s.C * s.C) - 2.0 * float(s.grad_phi @ s.grad_phi))
    rhs = float(np.sum(s.A * s.A)) - s.dnu_phi**2
    d_frob = abs(lhs - rhs)
    return BlockFormReport(
        max_defect=max(d_nuB, d_trA, d_dnu, d_frob),
        nu_B=d_nuB,
        trace_A=d_trA,
        dnu_phi=d_dnu,
        frobenius=d_frob,
    )


# ---------------------------------------------------------------------------
# Field-level machinery
# ---------------------------------------------------------------------------


def _grad_norm(grad: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("...i,...i->...", grad, grad))


def phi_field(
    field: ScalarField,
    grad_floor: float,
    mask: BandMask | np.ndarray | None = None,
) -> ScalarField:
    """phi = log(1/|grad u|) nodewise; NaN where degenerate or unmasked."""
    m = mask.inside if isinstance(mask, BandMask) else mask
    grad, _ = derivative_fields(field, m)
    g = _grad_norm(grad)
    with np.errstate(invalid="ignore", divide="ignore"):
        phi = np.where(g > grad_floor, -np.log(g), np.nan)
    return ScalarField(field.grid, phi, time=field.time)


def _curvature_arrays(field: ScalarField, m: np.ndarray | None, grad_floor: float):
    """Vectorized g, H, tr C, |A|^2 and validity over the (masked) grid."""
    grad, hess = derivative_fields(field, m)
    g = _grad_norm(grad)
    with np.errstate(invalid="ignore", divide="ignore"):
        valid = np.isfinite(g) & (g > grad_floor)
        trC = np.einsum("...ii->...", hess) / g
        Cnu = np.einsum("...ij,...j->...i", hess, grad) / g[..., None] ** 2
        nuCnu = np.einsum("...i,...i->...", Cnu, grad) / g
        H = trC - nuCnu
        C2 = np.einsum("...ij,...ij->...", hess, hess) / g**2
        Cnu2 = np.einsum("...i,...i->...", Cnu, Cnu)
        A2 = C2 - 2.0 * Cnu2 + nuCnu**2
    return {
        "grad": grad,
        "g": g,
        "trC": trC,
        "H": H,
        "A2": A2,
        "valid": valid,
    }


def _phi_gradient(field: ScalarField, phi: ScalarField):
    """Stencil gradient (and Hessian) of the discrete phi field."""
    valid = np.isfinite(phi.values)
    grad_phi, hess_phi = derivative_fields(phi, valid)
    lap_phi = np.einsum("...ii->...", hess_phi)
    return grad_phi, lap_phi


def forced_mcf_residual(
    field: ScalarField,
    pot: PotentialSpec,
    mask: BandMask,
    grad_floor: float | None = None,
) -> ScalarField:
    """Residual of v + H - d_nu phi - f(u)/|grad u| over the masked nodes.

    Requires dt_values.  Nodes where the gradient degenerates (or where no
    valid stencil exists) carry NaN; `residual_stats` reports them.
    """
    if field.dt_values is None:
        raise DomainError("forced_mcf_residual needs a field with dt_values")
    if mask.count == 0:
        raise DomainError("mask is empty")
    floor = default_grad_floor(pot.eps) if grad_floor is None else grad_floor
    m = mask.inside
    cur = _curvature_arrays(field, m, floor)
    phi = phi_field(field, floor, m)
    grad_phi, _ = _phi_gradient(field, phi)
    with np.errstate(invalid="ignore", divide="ignore"):
        g = cur["g"]
        nu = cur["grad"] / g[..., None]
        dnu_phi = np.einsum("...i,...i->...", grad_phi, nu)
        v = -field.dt_values / g
        res = v + cur["H"] - dnu_phi - pot.f(field.values) / g
    res = np.where(m & cur["valid"], res, np.nan)
    return ScalarField(field.grid, res, time=field.time)


def phi_evolution_residual(
    field_now: ScalarField,
    field_prev: ScalarField,
    pot: PotentialSpec,
    mask: BandMask,
    grad_floor: float | None = None,
) -> ScalarField:
    """Residual of d_t phi - lap phi - |A|^2 + (d_nu phi)^2 - f'(u).

    d_t phi is the backward difference of phi between the two fields; all
    spatial terms come from field_now.
    """
    if field_now.grid != field_prev.grid:
        raise DomainError("fields must share a grid")
    dt = field_now.time - field_prev.time
    if dt == 0.0:
        raise DomainError("fields must carry distinct time stamps")
    floor = default_grad_floor(pot.eps) if grad_floor is None else grad_floor
    m = mask.inside
    phi_now = phi_field(field_now, floor, m)
    phi_prev = phi_field(field_prev, floor, m)
    cur = _curvature_arrays(field_now, m, floor)
    grad_phi, lap_phi = _phi_gradient(field_now, phi_now)
    with np.errstate(invalid="ignore", divide="ignore"):
        dphi_dt = (phi_now.values - phi_prev.values) / dt
        nu = cur["grad"] / cur["g"][..., None]
        dnu_phi = np.einsum("...i,...i->...", grad_phi, nu)
        res = dphi_dt - lap_phi - cur["A2"] + dnu_phi**2 - pot.df(field_now.values)
    res = np.where(m & cur["valid"], res, np.nan)
    return ScalarField(field_now.grid, res, time=field_now.time)


def residual_stats(res: ScalarField, mask: BandMask) -> tuple[float, int]:
    """(sup norm over finite masked entries, number of excluded nodes)."""
    vals = res.values[mask.inside]
    finite = np.isfinite(vals)
    excluded = int(vals.size - np.count_nonzero(finite))
    sup = float(np.max(np.abs(vals[finite]))) if finite.any() else float("nan")
    return sup, excluded
