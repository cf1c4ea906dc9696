"""Uniform Cartesian scalar fields with finite-difference kernels.

Fields live on node-centered uniform grids in dimension n in {1, 2, 3}.
Derivatives use second-order central stencils in the interior and
second-order one-sided stencils wherever a neighbor is missing (grid edge
or, when a validity mask is supplied, the edge of the interface band).
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "Grid",
    "ScalarField",
    "BandMask",
    "Derivatives",
    "derivatives",
    "derivative_fields",
    "gradient_fields",
    "interpolate",
    "interpolate_array",
    "band_mask",
    "field_from_function",
    "write_field_csv",
    "read_field_csv",
    "write_residual_csv",
]


@dataclass(frozen=True)
class Grid:
    """Uniform node-centered Cartesian grid.

    Attributes:
        dim: spatial dimension n >= 1
        origin: coordinates of node (0, ..., 0)
        spacing: node spacing h, identical along every axis
        counts: number of nodes per axis (>= 3 so central stencils fit)
    """

    dim: int
    origin: tuple[float, ...]
    spacing: float
    counts: tuple[int, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError(f"dim must be >= 1, got {self.dim}")
        if len(self.origin) != self.dim or len(self.counts) != self.dim:
            raise DomainError("origin/counts length must equal dim")
        if not self.spacing > 0:
            raise DomainError(f"spacing must be positive, got {self.spacing}")
        if any(c < 3 for c in self.counts):
            raise DomainError(f"need >= 3 nodes per axis, got {self.counts}")
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.counts))

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing * np.arange(self.counts[axis])

    def node_points(self) -> np.ndarray:
        """All node coordinates, shape counts + (dim,)."""
        mesh = np.meshgrid(*(self.axis_coords(a) for a in range(self.dim)), indexing="ij")
        return np.stack(mesh, axis=-1)

    def node_coord(self, index: Sequence[int]) -> np.ndarray:
        self._check_index(index)
        return np.asarray(self.origin) + self.spacing * np.asarray(index, dtype=float)

    def box(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.asarray(self.origin)
        hi = lo + self.spacing * (np.asarray(self.counts) - 1)
        return lo, hi

    def contains(self, point: Sequence[float], slack: float = 0.0) -> bool:
        lo, hi = self.box()
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= lo - slack) and np.all(p <= hi + slack))

    def _check_index(self, index: Sequence[int]) -> None:
        if len(index) != self.dim:
            raise DomainError(f"index must have {self.dim} entries")
        for i, c in zip(index, self.counts):
            if not 0 <= i < c:
                raise DomainError(f"index {tuple(index)} outside grid {self.counts}")


@dataclass(frozen=True)
class ScalarField:
    """Scalar samples on a grid, optionally with a companion time derivative.

    `values` (and `dt_values` when present) have shape `grid.counts`.  The
    arrays are locked after construction; fields are safe to share.
    """

    grid: Grid
    values: np.ndarray
    time: float = 0.0
    dt_values: np.ndarray | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if v.shape != self.grid.counts:
            if v.size == self.grid.n_nodes:
                v = v.reshape(self.grid.counts)
            else:
                raise DomainError(
                    f"values size {v.size} != node count {self.grid.n_nodes}"
                )
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        if self.dt_values is not None:
            d = np.ascontiguousarray(np.asarray(self.dt_values, dtype=float))
            if d.shape != self.grid.counts:
                if d.size == self.grid.n_nodes:
                    d = d.reshape(self.grid.counts)
                else:
                    raise DomainError("dt_values size mismatch")
            d.flags.writeable = False
            object.__setattr__(self, "dt_values", d)

    def with_dt(self, dt_values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, self.values, self.time, dt_values)


@dataclass(frozen=True)
class BandMask:
    """Boolean node mask for the interface band {|u| < 1 - margin}."""

    inside: np.ndarray
    margin: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.margin < 0.5:
            raise DomainError(f"margin must lie in [0, 0.5), got {self.margin}")
        m = np.asarray(self.inside, dtype=bool)
        m.flags.writeable = False
        object.__setattr__(self, "inside", m)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.inside))

    def indices(self) -> Iterable[tuple[int, ...]]:
        return map(tuple, np.argwhere(self.inside))


def band_mask(field: ScalarField, margin: float = 0.0) -> BandMask:
    """Mark nodes with |u| < 1 - margin."""
    return BandMask(np.abs(field.values) < 1.0 - margin, margin)


def field_from_function(
    grid: Grid,
    fn: Callable[[np.ndarray], np.ndarray],
    time: float = 0.0,
    dt_fn: Callable[[np.ndarray], np.ndarray] | None = None,
) -> ScalarField:
    """Sample `fn` (vectorized over points of shape (..., dim)) on the grid."""
    pts = grid.node_points()
    vals = np.asarray(fn(pts), dtype=float)
    dt = None if dt_fn is None else np.asarray(dt_fn(pts), dtype=float)
    return ScalarField(grid, vals, time=time, dt_values=dt)


# ---------------------------------------------------------------------------
# Stencils
# ---------------------------------------------------------------------------

# (offsets, weights); weights get divided by h or h^2 at application time.
_D1_CENTRAL = ((-1, 1), (-0.5, 0.5))
_D1_FWD = ((0, 1, 2), (-1.5, 2.0, -0.5))
_D1_BWD = ((0, -1, -2), (1.5, -2.0, 0.5))
_D2_CENTRAL = ((-1, 0, 1), (1.0, -2.0, 1.0))
_D2_FWD = ((0, 1, 2, 3), (2.0, -5.0, 4.0, -1.0))
_D2_BWD = ((0, -1, -2, -3), (2.0, -5.0, 4.0, -1.0))
# Shifted central second differences: first-order fallback when only three
# consecutive valid nodes exist (still exact on quadratics).
_D2_FWD3 = ((0, 1, 2), (1.0, -2.0, 1.0))
_D2_BWD3 = ((0, -1, -2), (1.0, -2.0, 1.0))

_D1_CHOICES = (_D1_CENTRAL, _D1_FWD, _D1_BWD)
_D2_CHOICES = (_D2_CENTRAL, _D2_FWD, _D2_BWD, _D2_FWD3, _D2_BWD3)


@dataclass(frozen=True)
class Derivatives:
    """Pointwise derivative bundle: gradient, symmetric Hessian, Laplacian."""

    grad: np.ndarray
    hess: np.ndarray
    lap: float


def _valid_fn(grid: Grid, mask: np.ndarray | None):
    counts = grid.counts

    def ok(idx: tuple[int, ...]) -> bool:
        for i, c in zip(idx, counts):
            if not 0 <= i < c:
                return False
        return True if mask is None else bool(mask[idx])

    return ok


def _shift(index, axis, off):
    out = list(index)
    out[axis] += off
    return tuple(out)


def _pick_1d(index, axis, ok, choices):
    for offs, wts in choices:
        if all(ok(_shift(index, axis, o)) for o in offs):
            return offs, wts
    return None


def _apply_1d(values, index, axis, offs, wts):
    return sum(w * values[_shift(index, axis, o)] for o, w in zip(offs, wts))


def derivatives(
    field: ScalarField,
    index: Sequence[int],
    mask: np.ndarray | BandMask | None = None,
) -> Derivatives:
    """Gradient, Hessian and Laplacian of the field at one node.

    Central second-order stencils are used where both neighbors along an
    axis are available; one-sided second-order stencils otherwise.  A mask
    (e.g. the interface band) restricts which neighbors count as available,
    so derivatives remain usable up to the free boundary.
    """
    grid = field.grid
    grid._check_index(index)
    index = tuple(int(i) for i in index)
    m = mask.inside if isinstance(mask, BandMask) else mask
    ok = _valid_fn(grid, m)
    if not ok(index):
        raise DomainError(f"node {index} is not inside the supplied mask")
    v = field.values
    h = grid.spacing
    n = grid.dim

    d1 = []
    for a in range(n):
        st = _pick_1d(index, a, ok, _D1_CHOICES)
        if st is None:
            raise DomainError(f"no valid first-derivative stencil at {index}, axis {a}")
        d1.append(st)
    grad = np.array(
        [_apply_1d(v, index, a, *d1[a]) / h for a in range(n)], dtype=float
    )

    hess = np.zeros((n, n))
    for a in range(n):
        st = _pick_1d(index, a, ok, _D2_CHOICES)
        if st is None:
            raise DomainError(f"no valid second-derivative stencil at {index}, axis {a}")
        hess[a, a] = _apply_1d(v, index, a, *st) / (h * h)
    for a in range(n):
        for b in range(a + 1, n):
            val = _mixed_partial(v, index, a, b, ok, h)
            hess[a, b] = val
            hess[b, a] = val
    hess = 0.5 * (hess + hess.T)
    return Derivatives(grad=grad, hess=hess, lap=float(np.trace(hess)))


def _mixed_partial(values, index, a, b, ok, h):
    for offs_a, wts_a in _D1_CHOICES:
        for offs_b, wts_b in _D1_CHOICES:
            support = [
                _shift(_shift(index, a, oa), b, ob)
                for oa in offs_a
                for ob in offs_b
            ]
            if all(ok(s) for s in support):
                total = 0.0
                for oa, wa in zip(offs_a, wts_a):
                    row = _shift(index, a, oa)
                    for ob, wb in zip(offs_b, wts_b):
                        total += wa * wb * values[_shift(row, b, ob)]
                return total / (h * h)
    raise DomainError(f"no valid mixed-partial stencil at {index}, axes ({a},{b})")


def _diff1_axis(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    # np.gradient: central interior, second-order one-sided at the edges.
    return np.gradient(values, h, axis=axis, edge_order=2)


def _diff2_axis(values: np.ndarray, h: float, axis: int) -> np.ndarray:
    v = np.moveaxis(values, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = v[2:] - 2.0 * v[1:-1] + v[:-2]
    if v.shape[0] >= 4:
        out[0] = 2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]
        out[-1] = 2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]
    else:  # three nodes: reuse the lone central second difference
        out[0] = out[1]
        out[-1] = out[1]
    return np.moveaxis(out, 0, axis) / (h * h)


def derivative_fields(
    field: ScalarField, mask: np.ndarray | BandMask | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient and Hessian arrays over the whole grid.

    Returns (grad, hess) with shapes counts + (n,) and counts + (n, n).
    Without a mask this is fully vectorized.  With a mask, nodes whose full
    central/edge stencil support stays inside the mask keep the vectorized
    values and the remaining masked nodes are recomputed with one-sided
    stencils; nodes outside the mask are NaN.
    """
    grid = field.grid
    n = grid.dim
    h = grid.spacing
    v = field.values
    grad = np.empty(grid.counts + (n,))
    hess = np.empty(grid.counts + (n, n))
    for a in range(n):
        grad[..., a] = _diff1_axis(v, h, a)
        hess[..., a, a] = _diff2_axis(v, h, a)
    for a in range(n):
        for b in range(a + 1, n):
            m = _diff1_axis(_diff1_axis(v, h, a), h, b)
            hess[..., a, b] = m
            hess[..., b, a] = m

    m = mask.inside if isinstance(mask, BandMask) else mask
    if m is None:
        return grad, hess

    grad[~m] = np.nan
    hess[~m] = np.nan
    safe = _mask_with_full_support(m)
    for index in map(tuple, np.argwhere(m & ~safe)):
        try:
            d = derivatives(field, index, m)
        except DomainError:
            grad[index] = np.nan
            hess[index] = np.nan
            continue
        grad[index] = d.grad
        hess[index] = d.hess
    return grad, hess


def gradient_fields(
    field: ScalarField, mask: np.ndarray | BandMask | None = None
) -> np.ndarray:
    """Gradient array over the whole grid, shape counts + (n,).

    Same stencil policy as `derivative_fields`, first derivatives only.
    """
    grid = field.grid
    n = grid.dim
    h = grid.spacing
    grad = np.empty(grid.counts + (n,))
    for a in range(n):
        grad[..., a] = _diff1_axis(field.values, h, a)
    m = mask.inside if isinstance(mask, BandMask) else mask
    if m is None:
        return grad
    grad[~m] = np.nan
    ok = _valid_fn(grid, m)
    safe = _mask_with_full_support(m)
    for index in map(tuple, np.argwhere(m & ~safe)):
        try:
            for a in range(n):
                st = _pick_1d(index, a, ok, _D1_CHOICES)
                if st is None:
                    raise DomainError("no stencil")
                grad[index + (a,)] = _apply_1d(field.values, index, a, *st) / h
        except DomainError:
            grad[index] = np.nan
    return grad


def _mask_with_full_support(mask: np.ndarray) -> np.ndarray:
    """Nodes whose vectorized stencil support lies inside the mask.

    Away from grid edges all kernels are central, so the exact support is
    the +/-1 box around the node.  Grid-edge nodes use one-sided kernels
    with longer reach; they are simply marked unsafe and recomputed
    pointwise by the caller.
    """
    n = mask.ndim
    ok = mask.copy()
    for offsets in itertools.product((-1, 0, 1), repeat=n):
        if all(o == 0 for o in offsets):
            continue
        ok &= _shifted(mask, offsets)
    for a in range(n):
        mm = np.moveaxis(ok, a, 0)
        mm[0] = False
        mm[-1] = False
    return ok


def _shifted(mask: np.ndarray, offsets: tuple[int, ...]) -> np.ndarray:
    """Mask shifted by -offsets with False fill (True where neighbor valid)."""
    out = mask
    for axis, off in enumerate(offsets):
        if off == 0:
            continue
        res = np.zeros_like(out)
        src = np.moveaxis(out, axis, 0)
        dst = np.moveaxis(res, axis, 0)
        if off > 0:
            dst[:-off] = src[off:]
        else:
            dst[-off:] = src[:off]
        out = res
    return out


# ---------------------------------------------------------------------------
# Interpolation
# ---------------------------------------------------------------------------


def interpolate(field: ScalarField, point: Sequence[float]) -> float:
    """Multilinear interpolation of nodal values; exact on affine fields."""
    return float(interpolate_array(field.grid, field.values, point))


def interpolate_array(grid: Grid, array: np.ndarray, point: Sequence[float]):
    """Multilinear interpolation of an array with shape counts + extra dims."""
    p = np.asarray(point, dtype=float)
    if p.shape != (grid.dim,):
        raise DomainError(f"point must have {grid.dim} coordinates")
    lo, hi = grid.box()
    slack = 1e-12 * max(1.0, float(np.max(np.abs(hi - lo))))
    if not grid.contains(p, slack=slack):
        raise DomainError(f"point {p.tolist()} outside grid box")
    t = (p - lo) / grid.spacing
    base = np.minimum(np.floor(t).astype(int), np.asarray(grid.counts) - 2)
    base = np.maximum(base, 0)
    frac = t - base
    acc = None
    for corner in itertools.product((0, 1), repeat=grid.dim):
        idx = tuple(base + np.asarray(corner))
        w = 1.0
        for a, c in enumerate(corner):
            w *= frac[a] if c else (1.0 - frac[a])
        term = w * array[idx]
        acc = term if acc is None else acc + term
    return acc


# ---------------------------------------------------------------------------
# CSV + manifest I/O
# ---------------------------------------------------------------------------


def _manifest_path(path: Path) -> Path:
    return path.with_suffix(".json")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_field_csv(field: ScalarField, path: str | Path) -> tuple[Path, Path]:
    """Write `x1..xn,u[,ut]` rows (row-major) plus a JSON grid manifest."""
    path = Path(path)
    grid = field.grid
    pts = grid.node_points().reshape(-1, grid.dim)
    cols = [pts[:, a] for a in range(grid.dim)]
    cols.append(field.values.reshape(-1))
    header = [f"x{a + 1}" for a in range(grid.dim)] + ["u"]
    if field.dt_values is not None:
        cols.append(field.dt_values.reshape(-1))
        header.append("ut")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([_fmt(x) for x in row])
    man = {
        "dim": grid.dim,
        "origin": list(grid.origin),
        "spacing": grid.spacing,
        "counts": list(grid.counts),
        "time": field.time,
    }
    man_path = _manifest_path(path)
    with open(man_path, "w") as fh:
        json.dump(man, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path, man_path


def read_field_csv(path: str | Path) -> ScalarField:
    path = Path(path)
    with open(_manifest_path(path)) as fh:
        man = json.load(fh)
    grid = Grid(
        dim=man["dim"],
        origin=tuple(man["origin"]),
        spacing=man["spacing"],
        counts=tuple(man["counts"]),
    )
    data = np.genfromtxt(path, delimiter=",", names=True)
    u = np.asarray(data["u"], dtype=float)
    dt = np.asarray(data["ut"], dtype=float) if "ut" in (data.dtype.names or ()) else None
    return ScalarField(grid, u, time=float(man.get("time", 0.0)), dt_values=dt)


def write_residual_csv(grid: Grid, residual: np.ndarray, path: str | Path) -> Path:
    """Diagnostic dump: `x1..xn,r` rows in row-major node order."""
    path = Path(path)
    pts = grid.node_points().reshape(-1, grid.dim)
    r = np.asarray(residual, dtype=float).reshape(-1)
    if r.size != pts.shape[0]:
        raise DomainError("residual size does not match grid")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{a + 1}" for a in range(grid.dim)] + ["r"])
        for p, val in zip(pts, r):
            w.writerow([_fmt(x) for x in p] + [_fmt(val)])
    return path
