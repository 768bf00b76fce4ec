"""Axis-aligned geometric predicates and the strip free-space connectivity test.

Conventions used throughout: obstacle rectangles are closed sets, the strip
is the closed rectangle [0, d] x [-kappa/2, +kappa/2], and free space is the
strip minus the *open* interiors of the obstacles.  A path that only grazes
an obstacle boundary therefore counts as free; under the continuous obstacle
model such contacts have probability zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

import numba
import numpy as np
from scipy import ndimage

__all__ = [
    "Point",
    "AxisRect",
    "Strip",
    "ConnectivityOutcome",
    "point_in_rect",
    "horizontal_segment_intersects_rect",
    "free_space_connected",
    "grid_flood_fill_connected",
    "axis_segment_hits_interior",
    "DEFAULT_CELL_CAP",
]

# Largest uniform grid grid_flood_fill_connected will build before asking the
# caller to coarsen the resolution.
DEFAULT_CELL_CAP = 50_000_000


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("point coordinates must be finite")


@dataclass(frozen=True)
class AxisRect:
    """Closed axis-aligned rectangle given by centroid and half extents.

    ``half_w`` is the half extent along the source-destination axis (x),
    ``half_l`` the half extent perpendicular to it (y); the full obstacle
    footprint is ``2*half_w`` by ``2*half_l``.
    """

    cx: float
    cy: float
    half_w: float
    half_l: float

    def __post_init__(self):
        if not (self.half_w > 0.0 and self.half_l > 0.0):
            raise ValueError("rectangle half extents must be positive")

    @property
    def x_lo(self) -> float:
        return self.cx - self.half_w

    @property
    def x_hi(self) -> float:
        return self.cx + self.half_w

    @property
    def y_lo(self) -> float:
        return self.cy - self.half_l

    @property
    def y_hi(self) -> float:
        return self.cy + self.half_l


@dataclass(frozen=True)
class Strip:
    """The closed relaying strip [0, d] x [-kappa/2, +kappa/2]."""

    d: float
    kappa: float

    def __post_init__(self):
        if not self.d > 0.0:
            raise ValueError("strip length d must be positive")
        if self.kappa < 0.0:
            raise ValueError("strip width kappa must be nonnegative")

    @property
    def y_lo(self) -> float:
        return -0.5 * self.kappa

    @property
    def y_hi(self) -> float:
        return 0.5 * self.kappa

    def contains(self, p: Point) -> bool:
        return 0.0 <= p.x <= self.d and abs(p.y) <= 0.5 * self.kappa


@dataclass(frozen=True)
class ConnectivityOutcome:
    """Result of a free-space connectivity query.

    ``witness`` is an axis-aligned polyline from source to destination that
    stays in the closed strip and meets no obstacle's open interior; it is
    present exactly when ``connected`` is true.
    """

    connected: bool
    witness: Optional[Tuple[Point, ...]] = None

    def __post_init__(self):
        if self.connected != (self.witness is not None):
            raise ValueError("witness must be present iff connected")


def point_in_rect(p: Point, r: AxisRect) -> bool:
    """Closed-set membership: boundary points count as inside."""
    return abs(p.x - r.cx) <= r.half_w and abs(p.y - r.cy) <= r.half_l


def horizontal_segment_intersects_rect(x0: float, x1: float, r: AxisRect) -> bool:
    """Does the closed rectangle meet the segment y=0, x in [x0, x1]?"""
    if x0 > x1:
        raise ValueError("x0 must not exceed x1")
    return abs(r.cy) <= r.half_l and r.x_lo <= x1 and r.x_hi >= x0


def axis_segment_hits_interior(p: Point, q: Point, r: AxisRect) -> bool:
    """Does the axis-aligned segment p-q intersect the open interior of r?

    Used to audit connectivity witnesses; only horizontal or vertical
    segments are supported.
    """
    if p.y == q.y:
        if not (r.y_lo < p.y < r.y_hi):
            return False
        lo, hi = min(p.x, q.x), max(p.x, q.x)
        return lo < r.x_hi and hi > r.x_lo
    if p.x == q.x:
        if not (r.x_lo < p.x < r.x_hi):
            return False
        lo, hi = min(p.y, q.y), max(p.y, q.y)
        return lo < r.y_hi and hi > r.y_lo
    raise ValueError("segment must be axis-aligned")


def _rect_edges(obstacles: Iterable[AxisRect]) -> np.ndarray:
    """Obstacle edges as an array of rows (x_lo, x_hi, y_lo, y_hi)."""
    rows = [(r.cx - r.half_w, r.cx + r.half_w, r.cy - r.half_l, r.cy + r.half_l)
            for r in obstacles]
    if not rows:
        return np.empty((0, 4))
    return np.array(rows)


def _clip_to_strip(strip: Strip, edges: np.ndarray) -> np.ndarray:
    """Keep only obstacles whose closed footprint meets the closed strip."""
    if edges.shape[0] == 0:
        return edges
    y_hi = 0.5 * strip.kappa
    keep = ((edges[:, 0] <= strip.d) & (edges[:, 1] >= 0.0)
            & (edges[:, 2] <= y_hi) & (edges[:, 3] >= -y_hi))
    return edges[keep]


def _compressed_grid(strip: Strip, edges: np.ndarray, src: Point, dst: Point):
    """Non-uniform cell grid whose lines include every obstacle edge in the strip.

    Every obstacle edge, clipped to the strip, lands on a grid line, so the
    open interior of a cell is either wholly inside a given obstacle or
    disjoint from it.  Testing the cell center against the closed rectangles
    therefore classifies each cell exactly; no cell interior straddles an
    obstacle boundary.
    """
    y_hi = 0.5 * strip.kappa
    xs = np.unique(np.concatenate([
        np.array([0.0, strip.d, src.x, dst.x]),
        np.clip(edges[:, 0], 0.0, strip.d),
        np.clip(edges[:, 1], 0.0, strip.d),
    ]))
    ys = np.unique(np.concatenate([
        np.array([-y_hi, y_hi, src.y, dst.y]),
        np.clip(edges[:, 2], -y_hi, y_hi),
        np.clip(edges[:, 3], -y_hi, y_hi),
    ]))
    cx = 0.5 * (xs[:-1] + xs[1:])
    cy = 0.5 * (ys[:-1] + ys[1:])
    if edges.shape[0] == 0:
        free = np.ones((cx.size, cy.size), dtype=bool)
    else:
        in_x = (cx[:, None] >= edges[None, :, 0]) & (cx[:, None] <= edges[None, :, 1])
        in_y = (cy[:, None] >= edges[None, :, 2]) & (cy[:, None] <= edges[None, :, 3])
        free = (in_x.astype(np.uint8) @ in_y.astype(np.uint8).T) == 0
    return xs, ys, np.ascontiguousarray(free)


def _cells_touching(lines: np.ndarray, v: float) -> list:
    """Indices of grid cells whose closed extent contains coordinate v."""
    ncells = lines.size - 1
    k = int(np.searchsorted(lines, v, side="left"))
    if k < lines.size and lines[k] == v:
        return [i for i in (k - 1, k) if 0 <= i < ncells]
    return [k - 1] if 0 <= k - 1 < ncells else []


@numba.njit(cache=True)
def _bfs_path(free, src_cells, dst_cells):  # pragma: no cover - jitted
    """Multi-source BFS over face-adjacent free cells.

    Returns (goal, parent): goal is the flattened index of the first
    destination cell reached (-1 if none), parent maps each visited cell to
    its predecessor (-2 marks a BFS root, -1 unvisited).
    """
    nx, ny = free.shape
    n = nx * ny
    parent = np.full(n, -1, dtype=np.int64)
    is_dst = np.zeros(n, dtype=np.bool_)
    for k in range(dst_cells.shape[0]):
        c = dst_cells[k]
        if free[c // ny, c % ny]:
            is_dst[c] = True
    queue = np.empty(n, dtype=np.int64)
    head = 0
    tail = 0
    for k in range(src_cells.shape[0]):
        c = src_cells[k]
        if free[c // ny, c % ny] and parent[c] == -1:
            parent[c] = -2
            if is_dst[c]:
                return c, parent
            queue[tail] = c
            tail += 1
    while head < tail:
        c = queue[head]
        head += 1
        i = c // ny
        j = c % ny
        for m in range(4):
            if m == 0:
                ii, jj = i - 1, j
            elif m == 1:
                ii, jj = i + 1, j
            elif m == 2:
                ii, jj = i, j - 1
            else:
                ii, jj = i, j + 1
            if 0 <= ii < nx and 0 <= jj < ny:
                cc = ii * ny + jj
                if free[ii, jj] and parent[cc] == -1:
                    parent[cc] = c
                    if is_dst[cc]:
                        return cc, parent
                    queue[tail] = cc
                    tail += 1
    return -1, parent


def _segment_blocked(edges: np.ndarray, x0: float, x1: float) -> bool:
    """Vector form of horizontal_segment_intersects_rect over edge rows."""
    if edges.shape[0] == 0:
        return False
    return bool(np.any((edges[:, 2] <= 0.0) & (edges[:, 3] >= 0.0)
                       & (edges[:, 0] <= x1) & (edges[:, 1] >= x0)))


def _connected_edges(strip: Strip, edges: np.ndarray, src: Point, dst: Point):
    """Connectivity decision plus the grid context needed for a witness.

    Returns (connected, ctx); ctx is None for the degenerate kappa == 0 strip
    and otherwise the tuple (xs, ys, goal, parent).
    """
    if strip.kappa == 0.0:
        # The strip collapses to the segment: the path is forced, and the
        # decision reduces to the closed line-of-sight test.
        lo, hi = min(src.x, dst.x), max(src.x, dst.x)
        return not _segment_blocked(edges, lo, hi), None
    edges = _clip_to_strip(strip, edges)
    xs, ys, free = _compressed_grid(strip, edges, src, dst)
    ncy = ys.size - 1
    src_cells = np.array([i * ncy + j
                          for i in _cells_touching(xs, src.x)
                          for j in _cells_touching(ys, src.y)], dtype=np.int64)
    dst_cells = np.array([i * ncy + j
                          for i in _cells_touching(xs, dst.x)
                          for j in _cells_touching(ys, dst.y)], dtype=np.int64)
    goal, parent = _bfs_path(free, src_cells, dst_cells)
    return goal >= 0, (xs, ys, goal, parent)


def _append_point(points: list, p: Point) -> None:
    if not points or points[-1] != p:
        points.append(p)


def _witness_polyline(xs, ys, goal, parent, src: Point, dst: Point) -> Tuple[Point, ...]:
    """Axis-aligned polyline src -> free-cell centers -> dst.

    The source and destination are joined to the first/last cell center by
    L-shaped axis-aligned moves that stay inside that cell.
    """
    ncy = ys.size - 1
    cells = []
    c = goal
    while c >= 0:
        cells.append(c)
        nxt = parent[c]
        c = int(nxt) if nxt >= 0 else -1
    cells.reverse()
    centers = [Point(0.5 * (xs[c // ncy] + xs[c // ncy + 1]),
                     0.5 * (ys[c % ncy] + ys[c % ncy + 1])) for c in cells]
    points: list = []
    _append_point(points, src)
    _append_point(points, Point(src.x, centers[0].y))
    for ctr in centers:
        _append_point(points, ctr)
    _append_point(points, Point(dst.x, centers[-1].y))
    _append_point(points, dst)
    # Consecutive centers share a row or column, so intermediate corners are
    # only needed at the two ends; all segments are axis-aligned by
    # construction.
    return tuple(points)


def free_space_connected(strip: Strip, obstacles: Sequence[AxisRect],
                         src: Point, dst: Point) -> ConnectivityOutcome:
    """Exact free-space connectivity of src and dst inside the closed strip.

    A continuous path may go anywhere in the strip but must avoid the open
    interior of every obstacle.  The decision is made on the coordinate-
    compressed cell grid (see _compressed_grid): a cell is blocked iff its
    center lies in some closed obstacle, and src/dst cells are joined by
    flood fill over face-adjacent free cells.  For kappa == 0 the strip is
    the bare segment and the test delegates to the closed line-of-sight
    predicates.

    Raises ValueError when src or dst lies outside the closed strip.
    """
    if not strip.contains(src) or not strip.contains(dst):
        raise ValueError("src and dst must lie inside the closed strip")
    if strip.kappa == 0.0:
        lo, hi = min(src.x, dst.x), max(src.x, dst.x)
        if any(horizontal_segment_intersects_rect(lo, hi, r) for r in obstacles):
            return ConnectivityOutcome(False)
        points: list = []
        _append_point(points, src)
        _append_point(points, dst)
        return ConnectivityOutcome(True, tuple(points))
    connected, ctx = _connected_edges(strip, _rect_edges(obstacles), src, dst)
    if not connected:
        return ConnectivityOutcome(False)
    xs, ys, goal, parent = ctx
    return ConnectivityOutcome(True, _witness_polyline(xs, ys, goal, parent, src, dst))


def grid_flood_fill_connected(strip: Strip, obstacles: Sequence[AxisRect],
                              src: Point, dst: Point, resolution: float,
                              max_cells: int = DEFAULT_CELL_CAP) -> bool:
    """Approximate connectivity oracle on a uniform grid of side <= resolution.

    Cells are blocked when their center lies in some closed obstacle and
    connectivity is face-adjacent flood fill between the cells containing src
    and dst.  Converges to the exact free-space answer as resolution -> 0 for
    configurations in general position; kept deliberately independent of the
    compressed-grid implementation so the two can cross-check each other.

    Raises ValueError for non-positive resolution or when the grid would
    exceed max_cells (coarsen the resolution in that case).
    """
    if resolution <= 0.0:
        raise ValueError("resolution must be positive")
    if not strip.contains(src) or not strip.contains(dst):
        raise ValueError("src and dst must lie inside the closed strip")
    nx = max(1, int(math.ceil(strip.d / resolution)))
    ny = max(1, int(math.ceil(strip.kappa / resolution)))
    if nx * ny > max_cells:
        raise ValueError(
            f"grid of {nx}x{ny} cells exceeds the cap of {max_cells}; "
            "use a coarser resolution")
    cell_w = strip.d / nx
    cell_h = strip.kappa / ny
    xc = (np.arange(nx) + 0.5) * cell_w
    if strip.kappa > 0.0:
        yc = -0.5 * strip.kappa + (np.arange(ny) + 0.5) * cell_h
    else:
        yc = np.zeros(1)
    blocked = np.zeros((nx, ny), dtype=bool)
    edges = _clip_to_strip(strip, _rect_edges(obstacles))
    for x_lo, x_hi, y_lo, y_hi in edges:
        i0 = int(np.searchsorted(xc, x_lo, side="left"))
        i1 = int(np.searchsorted(xc, x_hi, side="right"))
        j0 = int(np.searchsorted(yc, y_lo, side="left"))
        j1 = int(np.searchsorted(yc, y_hi, side="right"))
        if i0 < i1 and j0 < j1:
            blocked[i0:i1, j0:j1] = True
    labels, _ = ndimage.label(~blocked)

    def cell_of(p: Point):
        i = min(max(int(p.x / cell_w), 0), nx - 1)
        if strip.kappa > 0.0:
            j = min(max(int((p.y + 0.5 * strip.kappa) / cell_h), 0), ny - 1)
        else:
            j = 0
        return i, j

    si, sj = cell_of(src)
    di, dj = cell_of(dst)
    return bool(labels[si, sj] != 0 and labels[si, sj] == labels[di, dj])
