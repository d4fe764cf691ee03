"""Cartesian grid over a rectangular box with a convex obstacle mask.

The physical domain is the exterior of a convex body, truncated to a box.
Cells are classified as fluid, solid (inside the obstacle) or ghost (one
layer outside the box carrying far-field values). All arrays include the
ghost ring, so array shape is (nx+2, ny+2) with interior indices 1..nx,
1..ny. Grids are immutable after construction and safe to share between
workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import GeometryError

FLUID = 0
SOLID = 1
GHOST = 2


@dataclass(frozen=True)
class ObstacleSpec:
    """Convex obstacle: a disc, a strictly convex CCW polygon, or none."""

    kind: str = "none"  # "disc" | "polygon" | "none"
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0
    vertices: Optional[np.ndarray] = None  # (nv, 2), CCW

    def __post_init__(self):
        if self.kind not in ("disc", "polygon", "none"):
            raise GeometryError(f"unknown obstacle kind {self.kind!r}")
        if self.kind == "disc" and self.radius <= 0.0:
            raise GeometryError("disc obstacle needs radius > 0")
        if self.kind == "polygon":
            v = np.asarray(self.vertices, dtype=float)
            if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
                raise GeometryError("polygon needs at least 3 planar vertices")
            object.__setattr__(self, "vertices", v)
            _check_strictly_convex_ccw(v)

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Pointwise membership test, closed (boundary counts as inside)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "none":
            return np.zeros(np.broadcast(x, y).shape, dtype=bool)
        if self.kind == "disc":
            cx, cy = self.center
            return (x - cx) ** 2 + (y - cy) ** 2 <= self.radius**2
        inside = np.ones(np.broadcast(x, y).shape, dtype=bool)
        v = self.vertices
        for i in range(len(v)):
            ax, ay = v[i]
            bx, by = v[(i + 1) % len(v)]
            cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax)
            inside &= cross >= 0.0
        return inside

    def bounding_box(self) -> tuple[float, float, float, float]:
        if self.kind == "none":
            raise GeometryError("empty obstacle has no bounding box")
        if self.kind == "disc":
            cx, cy = self.center
            r = self.radius
            return (cx - r, cx + r, cy - r, cy + r)
        v = self.vertices
        return (v[:, 0].min(), v[:, 0].max(), v[:, 1].min(), v[:, 1].max())


def _check_strictly_convex_ccw(v: np.ndarray) -> None:
    """Reject polygons with a reflex or collinear vertex or CW orientation."""
    n = len(v)
    for i in range(n):
        a, b, c = v[i], v[(i + 1) % n], v[(i + 2) % n]
        cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if cross <= 0.0:
            raise GeometryError(
                f"polygon not strictly convex/CCW at vertex {(i + 1) % n}"
                f" (cross product {cross:g})"
            )


@dataclass(frozen=True)
class FarField:
    """Constant state prescribed at infinity, realized by the ghost ring."""

    rho_inf: float
    u_inf: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.rho_inf > 0.0:
            raise GeometryError("far-field density must be strictly positive")

    @property
    def m_inf(self) -> np.ndarray:
        return self.rho_inf * np.asarray(self.u_inf, dtype=float)


@dataclass(frozen=True)
class GridConfig:
    nx: int
    ny: int
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    obstacle: ObstacleSpec = field(default_factory=ObstacleSpec)


@dataclass(frozen=True)
class Grid:
    """Masked Cartesian grid. Construct through :func:`build_grid`."""

    nx: int
    ny: int
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    dx: float
    dy: float
    obstacle: ObstacleSpec
    mask: np.ndarray  # (nx+2, ny+2) int8, FLUID/SOLID/GHOST
    xc: np.ndarray  # (nx+2,) cell-center x including ghosts
    yc: np.ndarray  # (ny+2,)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def shape_full(self) -> tuple[int, int]:
        return (self.nx + 2, self.ny + 2)

    @property
    def fluid_interior(self) -> np.ndarray:
        """(nx, ny) bool: fluid cells of the interior."""
        return self.mask[1:-1, 1:-1] == FLUID

    @property
    def solid_interior(self) -> np.ndarray:
        return self.mask[1:-1, 1:-1] == SOLID

    def interior_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid (nx, ny) of interior cell-center coordinates."""
        return np.meshgrid(self.xc[1:-1], self.yc[1:-1], indexing="ij")

    def same_layout(self, other: "Grid") -> bool:
        return (
            self.nx == other.nx
            and self.ny == other.ny
            and np.isclose(self.x_min, other.x_min)
            and np.isclose(self.x_max, other.x_max)
            and np.isclose(self.y_min, other.y_min)
            and np.isclose(self.y_max, other.y_max)
        )

    def counts(self) -> dict:
        m = self.mask
        return {
            "fluid": int(np.count_nonzero(m == FLUID)),
            "solid": int(np.count_nonzero(m == SOLID)),
            "ghost": int(np.count_nonzero(m == GHOST)),
        }


@dataclass(frozen=True)
class CompactRegion:
    """A set of fluid interior cells with its measured area."""

    cells: np.ndarray  # (nx, ny) bool over interior cells
    area: float
    label: str = ""

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.cells))


def build_grid(cfg: GridConfig) -> Grid:
    """Build the masked grid; validates bounds, resolution and clearance."""
    if not (cfg.x_max > cfg.x_min and cfg.y_max > cfg.y_min):
        raise GeometryError("degenerate box bounds")
    if cfg.nx < 8 or cfg.ny < 8:
        raise GeometryError("need at least 8 cells per direction")
    dx = (cfg.x_max - cfg.x_min) / cfg.nx
    dy = (cfg.y_max - cfg.y_min) / cfg.ny

    obst = cfg.obstacle
    if obst.kind != "none":
        bx0, bx1, by0, by1 = obst.bounding_box()
        if (
            bx0 < cfg.x_min + 2 * dx
            or bx1 > cfg.x_max - 2 * dx
            or by0 < cfg.y_min + 2 * dy
            or by1 > cfg.y_max - 2 * dy
        ):
            raise GeometryError(
                "obstacle must keep >= 2 cells of clearance to the box edges"
            )

    xc = cfg.x_min + (np.arange(cfg.nx + 2) - 0.5) * dx
    yc = cfg.y_min + (np.arange(cfg.ny + 2) - 0.5) * dy

    mask = np.full((cfg.nx + 2, cfg.ny + 2), FLUID, dtype=np.int8)
    mask[0, :] = GHOST
    mask[-1, :] = GHOST
    mask[:, 0] = GHOST
    mask[:, -1] = GHOST
    if obst.kind != "none":
        X, Y = np.meshgrid(xc[1:-1], yc[1:-1], indexing="ij")
        solid = obst.contains(X, Y)
        mask[1:-1, 1:-1][solid] = SOLID
        _check_solid_connectivity(solid)

    for arr in (mask, xc, yc):
        arr.setflags(write=False)
    return Grid(
        nx=cfg.nx,
        ny=cfg.ny,
        x_min=cfg.x_min,
        x_max=cfg.x_max,
        y_min=cfg.y_min,
        y_max=cfg.y_max,
        dx=dx,
        dy=dy,
        obstacle=obst,
        mask=mask,
        xc=xc,
        yc=yc,
    )


def _check_solid_connectivity(solid: np.ndarray) -> None:
    """Solid cells must form one edge-connected component (or be empty)."""
    total = int(np.count_nonzero(solid))
    if total == 0:
        return
    seen = np.zeros_like(solid, dtype=bool)
    start = tuple(np.argwhere(solid)[0])
    stack = [start]
    seen[start] = True
    reached = 0
    while stack:
        i, j = stack.pop()
        reached += 1
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            a, b = i + di, j + dj
            if 0 <= a < solid.shape[0] and 0 <= b < solid.shape[1]:
                if solid[a, b] and not seen[a, b]:
                    seen[a, b] = True
                    stack.append((a, b))
    if reached != total:
        raise GeometryError(
            "discrete solid region is not edge-connected; refine the grid "
            "or enlarge the obstacle"
        )


def annulus_cells(grid: Grid, x0: Sequence[float], L: float) -> CompactRegion:
    """Fluid cells with L <= |center - x0| <= 2L. May be empty."""
    if not L > 0.0:
        raise GeometryError("annulus scale L must be positive")
    X, Y = grid.interior_centers()
    r = np.hypot(X - x0[0], Y - x0[1])
    cells = (r >= L) & (r <= 2.0 * L) & grid.fluid_interior
    return CompactRegion(
        cells=cells,
        area=float(np.count_nonzero(cells)) * grid.cell_area,
        label=f"annulus(x0={tuple(x0)}, L={L:g})",
    )


def rect_cells(
    grid: Grid, x0: float, x1: float, y0: float, y1: float
) -> CompactRegion:
    """Fluid cells with centers in the closed rectangle [x0,x1]x[y0,y1]."""
    X, Y = grid.interior_centers()
    cells = (X >= x0) & (X <= x1) & (Y >= y0) & (Y <= y1) & grid.fluid_interior
    return CompactRegion(
        cells=cells,
        area=float(np.count_nonzero(cells)) * grid.cell_area,
        label=f"rect[{x0:g},{x1:g}]x[{y0:g},{y1:g}]",
    )
