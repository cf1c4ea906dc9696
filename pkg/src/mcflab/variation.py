"""Energy family, stress tensor, inner variation and inner gradient flow.

The energy J(v) = int eps |grad v|^2 + W(v)/eps is differentiated along
domain deformations Phi_t = Id + t U (u composed with the inverse map)
rather than along perturbations of the values.  Two independent routes to
that derivative are implemented:

  * inner_variation_analytic: the first-variation formula, a bulk term
    (2 eps lap u - W'(u)/eps) grad u . U  plus the boundary trace of the
    stress tensor T(u) = 2 eps grad u x grad u - e_eps(u) I over the free
    boundary;
  * inner_variation_fd: a central finite difference of the pulled-back
    energy  int (eps |DPhi_t^-T grad u|^2 + W(u)/eps) det DPhi_t.

Keeping both routes live is the point: the second is the oracle for the
first, and their agreement is part of the acceptance gate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .curvature import PotentialSpec
from .errors import DomainError, StepRejectError
from .fields import (
    BandMask,
    ScalarField,
    band_mask,
    derivative_fields,
    gradient_fields,
)

__all__ = [
    "DeformationField",
    "StressTensor",
    "InnerVariationResult",
    "radial_bump",
    "rotation_bump",
    "energy",
    "stress_tensor",
    "inner_variation_analytic",
    "inner_variation_fd",
    "div_stress_check",
    "inner_gradient_flow_step",
    "flow_rhs_fields",
]


@dataclass(frozen=True)
class DeformationField:
    """Smooth vector field U, compactly supported away from the box edge."""

    fn: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(pts, float)), float)

    def jacobian(self, pts: np.ndarray, step: float = 1e-6) -> np.ndarray:
        pts = np.asarray(pts, float)
        if self.jac is not None:
            return np.asarray(self.jac(pts), float)
        n = pts.shape[-1]
        out = np.empty(pts.shape[:-1] + (n, n))
        for b in range(n):
            dp = np.zeros(n)
            dp[b] = step
            out[..., :, b] = (self(pts + dp) - self(pts - dp)) / (2.0 * step)
        return out

    def validate_support(self, grid, margin_cells: int = 2, tol: float = 1e-14):
        """U must vanish within `margin_cells` cells of the box boundary."""
        pts = grid.node_points()
        vals = self(pts)
        n = grid.dim
        edge = np.zeros(grid.counts, dtype=bool)
        for a in range(n):
            mm = np.moveaxis(edge, a, 0)
            mm[: margin_cells + 1] = True
            mm[-(margin_cells + 1):] = True
        worst = float(np.max(np.abs(vals[edge]))) if edge.any() else 0.0
        if worst > tol:
            raise DomainError(
                f"deformation reaches {worst:.3e} within {margin_cells} cells "
                "of the domain boundary; it must be compactly supported inside"
            )


def radial_bump(center, rho: float, scale: float = 1.0) -> DeformationField:
    """Compactly supported bump U(x) = scale * b(|x-c|^2/rho^2) (x - c)."""
    c = np.asarray(center, float)

    def _b(q):
        out = np.zeros_like(q)
        inside = q < 1.0
        out[inside] = np.exp(1.0 / (q[inside] - 1.0))
        return out

    def _db(q):
        out = np.zeros_like(q)
        inside = q < 1.0
        out[inside] = -np.exp(1.0 / (q[inside] - 1.0)) / (q[inside] - 1.0) ** 2
        return out

    def fn(pts):
        d = pts - c
        q = np.einsum("...i,...i->...", d, d) / rho**2
        return scale * _b(q)[..., None] * d

    def jac(pts):
        d = pts - c
        q = np.einsum("...i,...i->...", d, d) / rho**2
        n = pts.shape[-1]
        eye = np.eye(n)
        outer = np.einsum("...i,...j->...ij", d, d)
        return scale * (
            _b(q)[..., None, None] * eye
            + (_db(q) * 2.0 / rho**2)[..., None, None] * outer
        )

    return DeformationField(fn=fn, jac=jac)


def rotation_bump(center, rho: float, scale: float = 1.0) -> DeformationField:
    """Divergence-free planar vortex tangent to circles around `center`."""
    c = np.asarray(center, float)
    if c.shape != (2,):
        raise DomainError("rotation_bump is two-dimensional")

    def _b(q):
        out = np.zeros_like(q)
        inside = q < 1.0
        out[inside] = np.exp(1.0 / (q[inside] - 1.0))
        return out

    def _db(q):
        out = np.zeros_like(q)
        inside = q < 1.0
        out[inside] = -np.exp(1.0 / (q[inside] - 1.0)) / (q[inside] - 1.0) ** 2
        return out

    def fn(pts):
        d = pts - c
        q = np.einsum("...i,...i->...", d, d) / rho**2
        perp = np.stack([-d[..., 1], d[..., 0]], axis=-1)
        return scale * _b(q)[..., None] * perp

    def jac(pts):
        d = pts - c
        q = np.einsum("...i,...i->...", d, d) / rho**2
        perp = np.stack([-d[..., 1], d[..., 0]], axis=-1)
        rot = np.array([[0.0, -1.0], [1.0, 0.0]])
        outer = np.einsum("...i,...j->...ij", perp, d)
        return scale * (
            _b(q)[..., None, None] * rot
            + (_db(q) * 2.0 / rho**2)[..., None, None] * outer
        )

    return DeformationField(fn=fn, jac=jac)


# ---------------------------------------------------------------------------
# Cell (midpoint) quadrature
# ---------------------------------------------------------------------------


def _cell_average(arr: np.ndarray, skip_axis: int | None = None) -> np.ndarray:
    """Average nodal values to cell centers (optionally skipping one axis)."""
    out = arr
    for a in range(arr.ndim):
        if a == skip_axis:
            continue
        out = 0.5 * (
            np.take(out, range(0, out.shape[a] - 1), axis=a)
            + np.take(out, range(1, out.shape[a]), axis=a)
        )
    return out


def _cell_gradient(values: np.ndarray, h: float) -> np.ndarray:
    """Per-cell gradient from corner differences; exact on per-cell-affine u."""
    n = values.ndim
    comps = []
    for a in range(n):
        diff = (
            np.take(values, range(1, values.shape[a]), axis=a)
            - np.take(values, range(0, values.shape[a] - 1), axis=a)
        ) / h
        comps.append(_cell_average(diff, skip_axis=a))
    return np.stack(comps, axis=-1)


def _cell_minmax(values: np.ndarray):
    n = values.ndim
    lo = None
    hi = None
    for corner in itertools.product((0, 1), repeat=n):
        sl = tuple(
            slice(1, None) if c else slice(0, -1) for c in corner
        )
        v = values[sl]
        lo = v if lo is None else np.minimum(lo, v)
        hi = v if hi is None else np.maximum(hi, v)
    return lo, hi


def _band_fraction(values: np.ndarray) -> np.ndarray:
    """Per-cell fraction of {|u| < 1}, linear between the corner extremes.

    Corner values within round-off of the wells are snapped to +/-1 first:
    a clamped profile whose kink lands a few ulps inside a cell would
    otherwise promote a measure-zero sliver to a full cell.
    """
    snapped = np.where(np.abs(np.abs(values) - 1.0) < 1e-12, np.sign(values), values)
    lo, hi = _cell_minmax(snapped)
    span = hi - lo
    frac = np.where(np.abs(lo) < 1.0, 1.0, 0.0)
    var = span > 0
    inter = np.clip(np.minimum(hi, 1.0) - np.maximum(lo, -1.0), 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(var, inter / np.where(var, span, 1.0), frac)
    return np.clip(frac, 0.0, 1.0)


def _cell_mask(mask: np.ndarray) -> np.ndarray:
    """Cells with every corner inside the node mask."""
    n = mask.ndim
    out = None
    for corner in itertools.product((0, 1), repeat=n):
        sl = tuple(slice(1, None) if c else slice(0, -1) for c in corner)
        v = mask[sl]
        out = v if out is None else (out & v)
    return out


def _potential_cell_term(values: np.ndarray, pot: PotentialSpec) -> np.ndarray:
    if pot.delta == 0.0:
        return _band_fraction(values)
    return pot.W(_cell_average(values))


def energy(
    u: ScalarField, pot: PotentialSpec, domain: BandMask | None = None
) -> float:
    """Midpoint-rule energy int eps |grad u|^2 + W(u)/eps over cells.

    For the indicator potential the W-term counts each boundary cell by
    the fraction of the cell lying inside {|u| < 1}, so a clamped linear
    front whose kinks sit on node planes integrates exactly.
    """
    h = u.grid.spacing
    grad = _cell_gradient(u.values, h)
    grad_sq = np.einsum("...i,...i->...", grad, grad)
    dens = pot.eps * grad_sq + _potential_cell_term(u.values, pot) / pot.eps
    if domain is not None:
        dens = np.where(_cell_mask(domain.inside), dens, 0.0)
    return float(np.sum(dens) * h**u.grid.dim)


# ---------------------------------------------------------------------------
# Stress tensor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StressTensor:
    """T = 2 eps grad u x grad u - e_eps(u) I and the energy density e."""

    T: np.ndarray
    e: np.ndarray

    def symmetry_defect(self) -> float:
        return float(np.nanmax(np.abs(self.T - np.swapaxes(self.T, -1, -2))))


def stress_tensor(
    u: ScalarField, pot: PotentialSpec, mask: BandMask | None = None
) -> StressTensor:
    grad = gradient_fields(u, mask.inside if mask is not None else None)
    grad_sq = np.einsum("...i,...i->...", grad, grad)
    e = pot.energy_density(u.values, grad_sq)
    if pot.delta == 0.0:
        # Outside the band both |grad u| and the indicator vanish; enforce
        # the exact zero rather than trusting one-sided stencils there.
        outside = np.abs(u.values) >= 1.0
        e = np.where(outside, 0.0, e)
        grad = np.where(outside[..., None], 0.0, grad)
    T = 2.0 * pot.eps * np.einsum("...i,...j->...ij", grad, grad)
    T -= e[..., None, None] * np.eye(u.grid.dim)
    return StressTensor(T=T, e=e)


# ---------------------------------------------------------------------------
# Inner variation: analytic route and finite-difference oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InnerVariationResult:
    total: float
    bulk: float
    boundary: float


def _band_node_mask(u: ScalarField) -> np.ndarray:
    return np.abs(u.values) < 1.0


def inner_variation_analytic(
    u: ScalarField,
    U: DeformationField,
    pot: PotentialSpec,
    level_offset: float = 1e-6,
) -> InnerVariationResult:
    """First-variation formula: bulk integral plus free-boundary trace.

    The bulk term is quadrated over band nodes with band-aware stencils.
    For the indicator potential the boundary term is quadrated over the
    marching-squares polylines of the levels +/-(1 - level_offset), with
    the gradient at each vertex measured one-sidedly from inside the band
    (two-dimensional grids only; for the smooth family the free boundary
    has measure zero and the term is dropped).
    """
    grid = u.grid
    h = grid.spacing
    m = _band_node_mask(u)
    if not m.any():
        raise DomainError("field has no band nodes")
    grad, hess = derivative_fields(u, m if pot.delta == 0.0 else None)
    lap = np.einsum("...ii->...", hess)
    pts = grid.node_points()
    Uvals = U(pts)
    integrand = (2.0 * pot.eps * lap - pot.dW(u.values) / pot.eps) * np.einsum(
        "...i,...i->...", grad, Uvals
    )
    integrand = np.where(m, integrand, 0.0)
    bulk = float(np.nansum(integrand) * h**grid.dim)

    boundary = 0.0
    if pot.delta == 0.0:
        if grid.dim != 2:
            raise DomainError("free-boundary trace quadrature needs a 2D grid")
        # Integration by parts of -int T : grad U gives the bulk term MINUS
        # the boundary trace; the minus sign is pinned by agreement with the
        # pullback derivative (the defining quantity) on reference bands.
        boundary = -_boundary_trace_term(u, U, pot, level_offset)
    return InnerVariationResult(
        total=bulk + boundary, bulk=bulk, boundary=boundary
    )


def _extract_contours(u: ScalarField, level: float) -> list[np.ndarray]:
    from skimage import measure

    lo, _ = u.grid.box()
    out = []
    for c in measure.find_contours(u.values, level):
        out.append(lo + c * u.grid.spacing)
    return out


def _boundary_trace_term(
    u: ScalarField, U: DeformationField, pot: PotentialSpec, level_offset: float
) -> float:
    h = u.grid.spacing
    total = 0.0
    found = False
    for sign in (-1.0, 1.0):
        level = sign * (1.0 - level_offset)
        for poly in _extract_contours(u, level):
            if poly.shape[0] < 2:
                continue
            found = True
            vert_int = np.array(
                [_trace_integrand(u, U, pot, p, poly, k) for k, p in enumerate(poly)]
            )
            seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
            total += float(np.sum(seg * 0.5 * (vert_int[:-1] + vert_int[1:])))
    if not found:
        raise DomainError(
            "no extractable free-boundary curve; band is unresolved"
        )
    return total


def _trace_integrand(u, U, pot, p, poly, k):
    h = u.grid.spacing
    # Tangent from polyline neighbors, candidate normals by rotation.
    a = poly[max(0, k - 1)]
    b = poly[min(poly.shape[0] - 1, k + 1)]
    tan = b - a
    nt = np.linalg.norm(tan)
    if nt == 0:
        return 0.0
    tan /= nt
    normal = np.array([-tan[1], tan[0]])
    # The inward direction is the one along which |u| decreases.
    try:
        u_plus = _safe_value(u, p + 0.5 * h * normal)
        u_minus = _safe_value(u, p - 0.5 * h * normal)
    except DomainError:
        return 0.0
    m = normal if abs(u_plus) < abs(u_minus) else -normal
    # One-sided second-order directional derivative into the band.
    try:
        f0 = _safe_value(u, p)
        f1 = _safe_value(u, p + h * m)
        f2 = _safe_value(u, p + 2.0 * h * m)
    except DomainError:
        return 0.0
    du_m = (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h)
    grad = du_m * m  # tangential component vanishes on a level curve
    e = pot.eps * float(grad @ grad) + 1.0 / pot.eps  # indicator trace: W = 1
    T = 2.0 * pot.eps * np.outer(grad, grad) - e * np.eye(2)
    n_out = -m
    return float(n_out @ T @ U(p))


def _safe_value(u: ScalarField, p):
    from .fields import interpolate

    return interpolate(u, p)


def inner_variation_fd(
    u: ScalarField,
    U: DeformationField,
    pot: PotentialSpec,
    t_step: float = 1e-4,
) -> float:
    """Central difference of the pulled-back energy along Phi_t = Id + tU."""
    grid = u.grid
    h = grid.spacing
    grad = _cell_gradient(u.values, h)
    centers = _cell_average(grid.node_points(), skip_axis=grid.dim)
    jac = U.jacobian(centers)
    jn = np.sqrt(np.einsum("...ij,...ij->...", jac, jac))
    if float(np.max(jn)) * abs(t_step) >= 0.5:
        raise DomainError(
            f"t_step {t_step} too large for injectivity: |t grad U| reaches "
            f"{float(np.max(jn)) * abs(t_step):.3f}"
        )
    wterm = _potential_cell_term(u.values, pot) / pot.eps

    def pullback_energy(t: float) -> float:
        dphi = np.eye(grid.dim) + t * jac
        inv_t = np.linalg.inv(dphi)
        a = np.einsum("...ji,...j->...i", inv_t, grad)  # DPhi^-T grad u
        det = np.linalg.det(dphi)
        dens = (pot.eps * np.einsum("...i,...i->...", a, a) + wterm) * det
        return float(np.sum(dens) * h**grid.dim)

    return (pullback_energy(t_step) - pullback_energy(-t_step)) / (2.0 * t_step)


# ---------------------------------------------------------------------------
# Divergence identity and inner gradient flow
# ---------------------------------------------------------------------------


def div_stress_check(
    u: ScalarField, pot: PotentialSpec, mask: BandMask
) -> float:
    """sup over the mask of |div T - (2 eps lap u - W'(u)/eps) grad u|.

    For the indicator potential pass a mask eroded away from the free
    boundary; T is discontinuous there and the identity is interior.
    """
    m = mask.inside
    if not m.any():
        raise DomainError("empty mask")
    # For the smooth family T is differentiable everywhere, so stencils may
    # use the whole grid and the mask only selects where the sup is taken;
    # the indicator potential makes T discontinuous at the free boundary,
    # so there the stencil support is restricted to the mask as well.
    stencil_mask = m if pot.delta == 0.0 else None
    grad, hess = derivative_fields(u, stencil_mask)
    lap = np.einsum("...ii->...", hess)
    st = stress_tensor(u, pot, BandMask(stencil_mask) if stencil_mask is not None else None)
    grid = u.grid
    n = grid.dim
    div = np.zeros(grid.counts + (n,))
    for i in range(n):
        for j in range(n):
            comp_vals = st.T[..., i, j]
            if stencil_mask is not None:
                comp_vals = np.where(stencil_mask, comp_vals, 0.0)
            comp = ScalarField(grid, comp_vals)
            dj = gradient_fields(comp, stencil_mask)[..., j]
            div[..., i] += dj
    rhs = (2.0 * pot.eps * lap - pot.dW(u.values) / pot.eps)[..., None] * grad
    defect = np.linalg.norm(div - rhs, axis=-1)
    vals = defect[m]
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        raise DomainError("no resolvable nodes in mask")
    return float(np.max(vals))


def flow_rhs_fields(u: ScalarField, pot: PotentialSpec):
    """(stated, literal) inner-gradient-flow right-hand sides.

    stated:  2 lap u - W'(u)/eps^2   (the flow PDE)
    literal: -eps |grad u|^2 (2 lap u - W'(u)/eps^2), i.e. -grad u . V with
             V = (2 eps lap u - W'(u)/eps) grad u.

    The literal form is the velocity identified by testing the first
    variation against deformations; the two differ by the factor
    -eps |grad u|^2, which is reported rather than hidden.
    """
    grad, hess = derivative_fields(u)
    lap = np.einsum("...ii->...", hess)
    grad_sq = np.einsum("...i,...i->...", grad, grad)
    stated = 2.0 * lap - pot.dW(u.values) / pot.eps**2
    literal = -pot.eps * grad_sq * stated
    return stated, literal


def inner_gradient_flow_step(
    u: ScalarField,
    pot: PotentialSpec,
    dt: float,
    variant: str = "stated_pde",
) -> ScalarField:
    """Explicit step of the inner gradient flow (band-masked for delta=0)."""
    if variant not in ("stated_pde", "literal_velocity"):
        raise DomainError(f"unknown variant {variant!r}")
    grid = u.grid
    h = grid.spacing
    cfl = h**2 / (4.0 * grid.dim)
    if dt > cfl:
        raise StepRejectError(
            f"dt = {dt:.3e} violates the explicit limit {cfl:.3e}", mismatch=dt / cfl
        )
    stated, literal = flow_rhs_fields(u, pot)
    rhs = stated if variant == "stated_pde" else literal
    # Nodes within round-off of the wells count as outside the band; a node
    # a few ulps inside would otherwise difference across the clamp kink.
    update = (
        np.abs(u.values) < 1.0 - 1e-12
        if pot.delta == 0.0
        else np.ones(grid.counts, bool)
    )
    # Freeze the outermost layer of grid nodes; the flow is interior.
    for a in range(grid.dim):
        mm = np.moveaxis(update, a, 0)
        mm[0] = False
        mm[-1] = False
    new_values = np.where(update, u.values + dt * rhs, u.values)
    return ScalarField(grid, new_values, time=u.time + dt, dt_values=None)
