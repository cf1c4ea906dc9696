"""Exploratory 2D front tracking for non-radial free-boundary interfaces.

Research-grade companion to the radial solver: the band {|u| < 1} is the
region between two moving curves, each carried by its own signed-distance
function (psi_minus for the u = -1 curve, psi_plus for the u = +1 curve;
both increase along the outward normal, so the band is
{psi_minus > 0} & {psi_plus < 0}).  The heat equation is stepped
explicitly on band nodes with sub-cell Dirichlet values at the curve
crossings; each curve moves with the kinematic speed of its level set
plus the Bernoulli-mismatch feedback, the speeds are extended off the
interface, the distance functions are advected and periodically rebuilt
by first-order fast marching.  Tolerances here are deliberately coarse;
quantitative rates come from the radial solver.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError, ExtinctionError, TopologyChangeError
from .fields import Grid, ScalarField
from .radial import SchemeParams

__all__ = [
    "Circle",
    "Ellipse",
    "Grid2DState",
    "init_from_curve",
    "step",
    "run2d",
    "Grid2DRunResult",
    "extract_level_curve",
    "enclosed_area",
    "curve_length",
    "redistance",
    "boundary_gradient_stats",
]

_BAND_SNAP = 1e-12
_NARROW = 6.0  # redistancing / advection narrow-band half-width, in cells


@dataclass(frozen=True)
class Circle:
    r0: float

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        return np.sqrt(np.einsum("...i,...i->...", pts, pts)) - self.r0

    def min_curvature_radius(self) -> float:
        return self.r0


@dataclass(frozen=True)
class Ellipse:
    a: float
    b: float

    def signed_distance(self, pts: np.ndarray) -> np.ndarray:
        # Closest-point projection by Newton on the parameter angle.
        x = np.abs(pts[..., 0])
        y = np.abs(pts[..., 1])
        a, b = self.a, self.b
        theta = np.arctan2(a * y, b * x)
        for _ in range(12):
            ct, st = np.cos(theta), np.sin(theta)
            # d/dtheta of 0.5 |p(theta) - q|^2
            f = (a * a - b * b) * ct * st - x * a * st + y * b * ct
            df = (a * a - b * b) * (ct * ct - st * st) - x * a * ct - y * b * st
            thn = theta - f / np.where(np.abs(df) > 1e-14, df, 1e-14)
            theta = np.clip(thn, 0.0, 0.5 * np.pi)
        ct, st = np.cos(theta), np.sin(theta)
        dist = np.hypot(x - a * ct, y - b * st)
        inside = (pts[..., 0] / a) ** 2 + (pts[..., 1] / b) ** 2 < 1.0
        return np.where(inside, -dist, dist)

    def min_curvature_radius(self) -> float:
        hi = max(self.a, self.b)
        lo = min(self.a, self.b)
        return lo * lo / hi


@dataclass(frozen=True)
class Grid2DState:
    """Band field plus the two free-boundary distance functions."""

    u: ScalarField
    psi_minus: np.ndarray
    psi_plus: np.ndarray
    t: float
    eps: float

    @property
    def grid(self) -> Grid:
        return self.u.grid

    def band(self) -> np.ndarray:
        return (self.psi_minus > _BAND_SNAP) & (self.psi_plus < -_BAND_SNAP)


def init_from_curve(curve, eps: float, grid: Grid) -> Grid2DState:
    """Truncated signed distance band around a closed curve.

    u = clamp(d/eps), psi_minus = d + eps, psi_plus = d - eps where d is
    the signed distance to the curve (parallel offset curves are exact
    while the offset stays below the minimal curvature radius).
    """
    if grid.dim != 2:
        raise DomainError("2D solver needs a 2D grid")
    if not curve.min_curvature_radius() > 2.0 * eps:
        raise DomainError(
            f"curvature radius {curve.min_curvature_radius():.3g} must exceed "
            f"2 eps = {2 * eps:.3g}"
        )
    if grid.spacing > eps / 4.0:
        raise DomainError(
            f"band under-resolved: need h <= eps/4 = {eps / 4:.3g}, "
            f"got h = {grid.spacing:.3g}"
        )
    d = curve.signed_distance(grid.node_points())
    u = ScalarField(grid, np.clip(d / eps, -1.0, 1.0), time=0.0)
    return Grid2DState(u=u, psi_minus=d + eps, psi_plus=d - eps, t=0.0, eps=eps)


# ---------------------------------------------------------------------------
# Interface measurements
# ---------------------------------------------------------------------------


def _shift_arr(arr, axis, off, fill):
    out = np.full_like(arr, fill)
    src = np.moveaxis(arr, axis, 0)
    dst = np.moveaxis(out, axis, 0)
    if off > 0:
        dst[:-off] = src[off:]
    else:
        dst[-off:] = src[:off]
    return out


def _bilinear_many(grid: Grid, arr: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Vectorized bilinear interpolation of a 2D nodal array."""
    lo, _ = grid.box()
    t = (pts - lo) / grid.spacing
    base = np.clip(np.floor(t).astype(int), 0, np.asarray(grid.counts) - 2)
    f = t - base
    i, j = base[..., 0], base[..., 1]
    fx, fy = f[..., 0], f[..., 1]
    return (
        arr[i, j] * (1 - fx) * (1 - fy)
        + arr[i + 1, j] * fx * (1 - fy)
        + arr[i, j + 1] * (1 - fx) * fy
        + arr[i + 1, j + 1] * fx * fy
    )


def _normal_frame(state: Grid2DState, psi: np.ndarray, bc: float,
                  adj_mask: np.ndarray):
    """Per-adjacent-node foot point on the curve and inward unit normal."""
    grid = state.grid
    h = grid.spacing
    gx, gy = np.gradient(psi, h, edge_order=2)
    lap_psi = (
        np.gradient(gx, h, axis=0, edge_order=2)
        + np.gradient(gy, h, axis=1, edge_order=2)
    )
    pts = grid.node_points()[adj_mask]
    n_hat = np.stack([gx[adj_mask], gy[adj_mask]], axis=-1)
    n_hat /= np.maximum(np.linalg.norm(n_hat, axis=-1, keepdims=True), 1e-12)
    foot = pts - psi[adj_mask][..., None] * n_hat
    sgn = 1.0 if bc < 0 else -1.0  # inward = sgn * grad psi
    return foot, sgn * n_hat, lap_psi[adj_mask]


def _interface_measure(state: Grid2DState, values: np.ndarray, psi: np.ndarray,
                       bc: float, adj_mask: np.ndarray, c: float = 1.0):
    """|grad u| at the curve, per adjacent node, by normal-line sampling.

    u is sampled at 2h and 3h along the inward normal from the closest
    curve point and differenced one-sidedly against the Dirichlet value.
    The samples deliberately skip the first cell: values there belong to
    the extrapolated rim, and measuring through them would be circular
    (the rim is populated from the same boundary data).
    """
    grid = state.grid
    h = grid.spacing
    foot, inward, _ = _normal_frame(state, psi, bc, adj_mask)
    f2 = _bilinear_many(grid, values, foot + 2.0 * h * inward)
    f3 = _bilinear_many(grid, values, foot + 3.0 * h * inward)
    # Derivative at 0 of the quadratic through nodes (0, 2h, 3h).
    dudm = (-5.0 * bc / 6.0 + 1.5 * f2 - 2.0 * f3 / 3.0) / h
    gn = np.zeros(grid.counts)
    gn[adj_mask] = np.abs(dudm)
    return gn, None


def _populate_rim(state: Grid2DState, values: np.ndarray, psi: np.ndarray,
                  bc: float, adj_mask: np.ndarray) -> np.ndarray:
    """Quadratic one-sided extrapolation values for curve-adjacent nodes.

    The rim nodes do not evolve by the heat update (their shortened stencil
    arms would break the explicit CFL limit); they carry the quadratic
    through the Dirichlet value at the curve foot and two interior samples
    along the inward normal (at 2h and 3h, beyond the rim ring itself),
    evaluated at the node's own distance.
    """
    if not adj_mask.any():
        return values
    grid = state.grid
    h = grid.spacing
    foot, inward, _ = _normal_frame(state, psi, bc, adj_mask)
    f2 = _bilinear_many(grid, values, foot + 2.0 * h * inward)
    f3 = _bilinear_many(grid, values, foot + 3.0 * h * inward)
    sigma = np.abs(psi[adj_mask])
    # Lagrange basis on nodes (0, 2h, 3h) evaluated at sigma.
    l0 = (sigma - 2.0 * h) * (sigma - 3.0 * h) / (6.0 * h * h)
    l1 = -sigma * (sigma - 3.0 * h) / (2.0 * h * h)
    l2 = sigma * (sigma - 2.0 * h) / (3.0 * h * h)
    out = values.copy()
    out[adj_mask] = bc * l0 + f2 * l1 + f3 * l2
    return out


def boundary_gradient_stats(state: Grid2DState):
    """(mean, max deviation) of eps |grad u| - 1 over interface-adjacent nodes."""
    band = state.band()
    adj_minus, adj_plus = _adjacency(state, band)
    devs = []
    for psi, bc, adj in (
        (state.psi_minus, -1.0, adj_minus),
        (state.psi_plus, 1.0, adj_plus),
    ):
        if adj.any():
            g, _ = _interface_measure(state, state.u.values, psi, bc, adj, 1.0)
            devs.append(state.eps * g[adj] - 1.0)
    m = np.abs(np.concatenate(devs))
    return float(np.mean(m)), float(np.max(m))


# ---------------------------------------------------------------------------
# Fast marching redistancing
# ---------------------------------------------------------------------------


def redistance(psi: np.ndarray, h: float, band_width: float) -> np.ndarray:
    """First-order fast marching rebuild of a signed distance function.

    Nodes adjacent to the zero level set are seeded from linear crossings
    along grid arms; the eikonal |grad d| = 1 is then marched outward to
    `band_width`.  Values beyond the narrow band are clamped.
    """
    shape = psi.shape
    sign = np.where(psi >= 0.0, 1.0, -1.0)
    dist = np.full(shape, np.inf)
    # Seed from arm crossings.
    for axis in range(2):
        p = np.moveaxis(psi, axis, 0)
        d = np.moveaxis(dist, axis, 0)
        cross = (p[:-1] * p[1:]) < 0.0
        denom = p[:-1] - p[1:]
        frac = np.where(cross, p[:-1] / np.where(denom != 0, denom, 1.0), np.inf)
        d[:-1][cross] = np.minimum(d[:-1][cross], np.abs(frac[cross]) * h)
        d[1:][cross] = np.minimum(d[1:][cross], (1.0 - np.abs(frac[cross])) * h)
    on_zero = psi == 0.0
    dist[on_zero] = 0.0

    accepted = np.isfinite(dist)
    if not accepted.any():
        return np.clip(psi, -band_width, band_width)
    heap = [(dist[i], i) for i in map(tuple, np.argwhere(accepted))]
    heapq.heapify(heap)
    done = np.zeros(shape, dtype=bool)
    nx, ny = shape

    def try_update(i, j):
        best_x = min(
            dist[i - 1, j] if i > 0 and done[i - 1, j] else np.inf,
            dist[i + 1, j] if i < nx - 1 and done[i + 1, j] else np.inf,
        )
        best_y = min(
            dist[i, j - 1] if j > 0 and done[i, j - 1] else np.inf,
            dist[i, j + 1] if j < ny - 1 and done[i, j + 1] else np.inf,
        )
        a, b = min(best_x, best_y), max(best_x, best_y)
        if not np.isfinite(a):
            return np.inf
        if b - a >= h or not np.isfinite(b):
            return a + h
        return 0.5 * (a + b + math.sqrt(2.0 * h * h - (a - b) ** 2))

    while heap:
        d0, idx = heapq.heappop(heap)
        i, j = idx
        if done[idx] or d0 > dist[idx]:
            continue
        done[idx] = True
        if d0 > band_width:
            continue
        for ni, nj in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
            if 0 <= ni < nx and 0 <= nj < ny and not done[ni, nj]:
                cand = try_update(ni, nj)
                if cand < dist[ni, nj]:
                    dist[ni, nj] = cand
                    heapq.heappush(heap, (cand, (ni, nj)))

    out = sign * np.where(np.isfinite(dist), np.minimum(dist, band_width), band_width)
    return out


# ---------------------------------------------------------------------------
# Time stepping
# ---------------------------------------------------------------------------


def _godunov_gradient_norm(psi: np.ndarray, h: float, speed: np.ndarray):
    dxm = np.zeros_like(psi)
    dxp = np.zeros_like(psi)
    dym = np.zeros_like(psi)
    dyp = np.zeros_like(psi)
    dxm[1:, :] = (psi[1:, :] - psi[:-1, :]) / h
    dxp[:-1, :] = (psi[1:, :] - psi[:-1, :]) / h
    dym[:, 1:] = (psi[:, 1:] - psi[:, :-1]) / h
    dyp[:, :-1] = (psi[:, 1:] - psi[:, :-1]) / h
    pos = np.sqrt(
        np.maximum(dxm, 0.0) ** 2
        + np.minimum(dxp, 0.0) ** 2
        + np.maximum(dym, 0.0) ** 2
        + np.minimum(dyp, 0.0) ** 2
    )
    neg = np.sqrt(
        np.minimum(dxm, 0.0) ** 2
        + np.maximum(dxp, 0.0) ** 2
        + np.minimum(dym, 0.0) ** 2
        + np.maximum(dyp, 0.0) ** 2
    )
    return np.where(speed > 0, pos, neg)


def _extend_velocity(grid: Grid, source_mask: np.ndarray, values: np.ndarray,
                     target_mask: np.ndarray) -> np.ndarray:
    """Constant-along-normals extension: nearest interface-adjacent value."""
    pts = grid.node_points()
    src = np.argwhere(source_mask)
    if src.size == 0:
        raise DomainError("no interface-adjacent nodes to extend from")
    tree = cKDTree(pts[source_mask.nonzero()])
    tgt_idx = np.argwhere(target_mask)
    _, nearest = tree.query(pts[target_mask.nonzero()])
    out = np.zeros(grid.counts)
    out[target_mask] = values[source_mask][nearest]
    return out


def _adjacency(state: Grid2DState, band: np.ndarray):
    """Band nodes with a 4-neighbor across each free-boundary curve."""
    in_grid = np.ones_like(band)
    adj_m = np.zeros_like(band)
    adj_p = np.zeros_like(band)
    for axis in range(2):
        for off in (-1, 1):
            nb_grid = _shift_arr(in_grid, axis, off, False)
            nb_band = _shift_arr(band, axis, off, False)
            pm_nb = _shift_arr(state.psi_minus, axis, off, 1.0)
            pp_nb = _shift_arr(state.psi_plus, axis, off, -1.0)
            adj_m |= nb_grid & ~nb_band & (pm_nb <= _BAND_SNAP)
            adj_p |= nb_grid & ~nb_band & (pp_nb >= -_BAND_SNAP)
    return adj_m & band, adj_p & band


def step(state: Grid2DState, p: SchemeParams, redistance_every: int = 5,
         step_index: int = 0) -> Grid2DState:
    """One explicit heat step plus free-boundary motion.

    Curve-adjacent rim nodes are populated by quadratic one-sided
    extrapolation through the Dirichlet value (evolving them with
    shortened stencil arms would violate the explicit CFL limit); interior
    band nodes advance with the standard 5-point Laplacian.  Raises
    TopologyChangeError when the two curves cross (band pinch-off) and
    ExtinctionError when the band empties.
    """
    grid = state.grid
    h = grid.spacing
    if p.dt > 0.25 * h * h:
        raise DomainError(f"explicit step needs dt <= 0.25 h^2 = {0.25 * h * h:.3e}")
    band = state.band()
    if not band.any():
        raise ExtinctionError("band is empty", time=state.t)
    if np.any((state.psi_minus <= 0.0) & (state.psi_plus >= 0.0)):
        raise TopologyChangeError("free-boundary curves crossed", time=state.t)

    adj_minus, adj_plus = _adjacency(state, band)
    if not (adj_minus.any() and adj_plus.any()):
        raise ExtinctionError("a free boundary lost all adjacent nodes", time=state.t)

    c = p.diffusion_coeff
    u0 = state.u.values.copy()
    u0 = _populate_rim(state, u0, state.psi_minus, -1.0, adj_minus)
    u0 = _populate_rim(state, u0, state.psi_plus, 1.0, adj_plus)
    evolve = band & ~(adj_minus | adj_plus)
    lap = np.zeros_like(u0)
    lap[1:-1, 1:-1] = (
        u0[2:, 1:-1] + u0[:-2, 1:-1] + u0[1:-1, 2:] + u0[1:-1, :-2]
        - 4.0 * u0[1:-1, 1:-1]
    ) / h**2
    u_new = np.where(evolve, u0 + p.dt * c * lap, u0)

    # Curve velocity: kinematic speed plus the mismatch feedback (widen
    # where too steep).  The kinematic part -u_t/|grad u| is read off the
    # evolved interior nodes (standard stencils; normal-line sampling there
    # would amplify foot-position noise through the one-sided second
    # difference).  The mismatch IS measured at the curve feet; its
    # response to a displacement runs through the diffusive layer
    # sqrt(c dt), so the feedback gain is scaled by that width where it is
    # thinner than eps; the nominal eps-gain would overshoot.
    cap = 0.45 * h / p.dt  # level-set transport: fraction of a cell per step
    gain = (p.lam / p.dt) * min(state.eps, math.sqrt(c * p.dt))
    gx, gy = np.gradient(u0, h, edge_order=2)
    gn_central = np.hypot(gx, gy)
    # The normal velocity -u_t/|grad u| is level-uniform across a traveling
    # band, so it can be read one more cell inside, where the 5-point
    # Laplacian no longer touches extrapolated rim values.
    rim = adj_minus | adj_plus
    kin_src = evolve & (gn_central > 0.25 / state.eps)
    for axis in range(2):
        for off in (-1, 1):
            kin_src &= ~_shift_arr(rim, axis, off, False)
    if not kin_src.any():
        kin_src = evolve & (gn_central > 0.25 / state.eps)
    if not kin_src.any():
        raise ExtinctionError("no interior nodes carry the profile", time=state.t)
    with np.errstate(invalid="ignore", divide="ignore"):
        v_kin_field = np.nan_to_num(-c * lap / gn_central)
    g_minus, _ = _interface_measure(state, u0, state.psi_minus, -1.0, adj_minus, c)
    g_plus, _ = _interface_measure(state, u0, state.psi_plus, 1.0, adj_plus, c)
    fb_minus = np.where(adj_minus, -gain * (state.eps * g_minus - 1.0), 0.0)
    fb_plus = np.where(adj_plus, gain * (state.eps * g_plus - 1.0), 0.0)

    narrow = _NARROW * h
    tgt_minus = np.abs(state.psi_minus) < narrow
    tgt_plus = np.abs(state.psi_plus) < narrow
    kin_ext = _extend_velocity(grid, kin_src, v_kin_field, tgt_minus | tgt_plus)
    ext_minus = kin_ext + _extend_velocity(grid, adj_minus, fb_minus, tgt_minus)
    ext_plus = kin_ext + _extend_velocity(grid, adj_plus, fb_plus, tgt_plus)
    ext_minus = np.where(tgt_minus, np.clip(ext_minus, -cap, cap), 0.0)
    ext_plus = np.where(tgt_plus, np.clip(ext_plus, -cap, cap), 0.0)

    psi_minus = state.psi_minus - p.dt * ext_minus * _godunov_gradient_norm(
        state.psi_minus, h, ext_minus
    )
    psi_plus = state.psi_plus - p.dt * ext_plus * _godunov_gradient_norm(
        state.psi_plus, h, ext_plus
    )

    if redistance_every > 0 and (step_index + 1) % redistance_every == 0:
        psi_minus = redistance(psi_minus, h, narrow + 2.0 * h)
        psi_plus = redistance(psi_plus, h, narrow + 2.0 * h)

    band_new = (psi_minus > _BAND_SNAP) & (psi_plus < -_BAND_SNAP)
    fresh = band_new & ~band
    if fresh.any():
        u_new[fresh] = np.clip(
            0.5 * (psi_minus[fresh] + psi_plus[fresh]) / state.eps, -1.0, 1.0
        )
    u_new = np.where(~band_new & (psi_minus <= 0.0), -1.0, u_new)
    u_new = np.where(~band_new & (psi_plus >= 0.0), 1.0, u_new)

    return Grid2DState(
        u=ScalarField(grid, u_new, time=state.t + p.dt),
        psi_minus=psi_minus,
        psi_plus=psi_plus,
        t=state.t + p.dt,
        eps=state.eps,
    )


@dataclass
class Grid2DRunResult:
    times: list
    areas: list
    lengths: list
    status: str = "ok"
    states: list = None


def run2d(
    state: Grid2DState,
    p: SchemeParams,
    T: float,
    record_every: int = 20,
    redistance_every: int = 5,
    keep_states: bool = False,
) -> Grid2DRunResult:
    """Drive the 2D solver, recording zero-level area and length."""
    result = Grid2DRunResult(times=[], areas=[], lengths=[], states=[] if keep_states else None)

    def record(st):
        polys = extract_level_curve(st, 0.0)
        if polys:
            result.times.append(st.t)
            result.areas.append(sum(abs(enclosed_area(c)) for c in polys))
            result.lengths.append(sum(curve_length(c) for c in polys))
            if keep_states:
                result.states.append(st)

    record(state)
    n_steps = int(round(T / p.dt))
    for k in range(n_steps):
        try:
            state = step(state, p, redistance_every=redistance_every, step_index=k)
        except (ExtinctionError, TopologyChangeError) as exc:
            result.status = (
                "extinct" if isinstance(exc, ExtinctionError) else "topology-change"
            )
            break
        if (k + 1) % record_every == 0 or k == n_steps - 1:
            record(state)
    return result


# ---------------------------------------------------------------------------
# Level curves
# ---------------------------------------------------------------------------


def extract_level_curve(state_or_field, level: float) -> list[np.ndarray]:
    """Marching-squares polylines of a level set, in physical coordinates."""
    from skimage import measure

    if isinstance(state_or_field, Grid2DState):
        field = state_or_field.u
    else:
        field = state_or_field
    if not -1.0 < level < 1.0:
        raise DomainError(f"level must lie in (-1, 1), got {level}")
    lo, _ = field.grid.box()
    return [
        lo + c * field.grid.spacing
        for c in measure.find_contours(field.values, level)
    ]


def enclosed_area(polyline: np.ndarray) -> float:
    """Shoelace area of a closed polyline."""
    x, y = polyline[:, 0], polyline[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def curve_length(polyline: np.ndarray) -> float:
    return float(np.sum(np.linalg.norm(np.diff(polyline, axis=0), axis=1)))
