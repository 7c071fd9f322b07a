"""Point-cloud discretizations of 2D domains.

Domains are axis-aligned rectangles, optionally with circular holes drilled
out. A discretization is a flat set of nodes, each either interior or
boundary; boundary nodes carry an outward unit normal. Nodes are the only
geometric entity the solver ever sees, so everything downstream (supports,
stencils, assembly) works on the arrays stored here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

INTERIOR = 0
BOUNDARY = 1

# Relative tolerance for "sits on the boundary", in units of the domain
# diagonal.
BOUNDARY_TOL = 1e-9


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle [x_lo, x_hi] x [y_lo, y_hi]."""

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self) -> None:
        if not (self.x_lo < self.x_hi and self.y_lo < self.y_hi):
            raise ValueError(f"degenerate rectangle: {self}")

    @property
    def width(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def height(self) -> float:
        return self.y_hi - self.y_lo

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    def contains(self, p: np.ndarray) -> np.ndarray:
        """Closed-rectangle membership, vectorized over trailing axis 2."""
        p = np.asarray(p)
        x, y = p[..., 0], p[..., 1]
        return (x >= self.x_lo) & (x <= self.x_hi) & (y >= self.y_lo) & (y <= self.y_hi)


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError(f"circle radius must be positive, got {self.radius}")

    @property
    def center(self) -> np.ndarray:
        return np.array([self.cx, self.cy])


@dataclass(frozen=True)
class DomainShape:
    """Rectangle with zero or more circular holes.

    The signed distance is negative inside the material, zero on the
    boundary (outer rectangle or hole circles), positive outside.
    """

    rect: Rect
    holes: tuple[Circle, ...] = ()

    def signed_distance(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        x, y = p[..., 0], p[..., 1]
        qx = np.maximum(self.rect.x_lo - x, x - self.rect.x_hi)
        qy = np.maximum(self.rect.y_lo - y, y - self.rect.y_hi)
        outside = np.hypot(np.maximum(qx, 0.0), np.maximum(qy, 0.0))
        inside = np.minimum(np.maximum(qx, qy), 0.0)
        sd = outside + inside
        for hole in self.holes:
            r = np.hypot(x - hole.cx, y - hole.cy)
            sd = np.maximum(sd, hole.radius - r)
        return sd

    def contains(self, p: np.ndarray) -> np.ndarray:
        """Strict interior membership: signed distance < 0."""
        return self.signed_distance(p) < 0.0

    def project_to_boundary(self, p: np.ndarray) -> np.ndarray:
        """Closest point on the boundary (rectangle edges or hole circles)."""
        p = np.asarray(p, dtype=float)
        r = self.rect
        candidates = [
            np.array([r.x_lo, min(max(p[1], r.y_lo), r.y_hi)]),
            np.array([r.x_hi, min(max(p[1], r.y_lo), r.y_hi)]),
            np.array([min(max(p[0], r.x_lo), r.x_hi), r.y_lo]),
            np.array([min(max(p[0], r.x_lo), r.x_hi), r.y_hi]),
        ]
        for hole in self.holes:
            d = p - hole.center
            nrm = np.hypot(d[0], d[1])
            if nrm == 0.0:
                # Center of the hole: any radial direction is closest.
                candidates.append(hole.center + np.array([hole.radius, 0.0]))
            else:
                candidates.append(hole.center + d * (hole.radius / nrm))
        dists = [np.hypot(*(c - p)) for c in candidates]
        return candidates[int(np.argmin(dists))]

    @property
    def diagonal(self) -> float:
        return self.rect.diagonal


@dataclass(frozen=True)
class Node:
    """Single-node view, mainly for debugging and tests."""

    position: np.ndarray
    kind: int
    normal: np.ndarray
    spacing: float


@dataclass
class NodeSet:
    """Flat arrays describing one point-cloud discretization.

    positions : (N, 2) float
    kinds     : (N,) int, INTERIOR or BOUNDARY
    normals   : (N, 2) float, outward unit normals; zero rows for interior
    spacing   : (N,) float, distance to the nearest other node
    """

    positions: np.ndarray
    kinds: np.ndarray
    normals: np.ndarray
    spacing: np.ndarray
    domain: DomainShape

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def boundary_mask(self) -> np.ndarray:
        return self.kinds == BOUNDARY

    @property
    def interior_mask(self) -> np.ndarray:
        return self.kinds == INTERIOR

    @property
    def n_boundary(self) -> int:
        return int(np.count_nonzero(self.boundary_mask))

    @property
    def n_interior(self) -> int:
        return int(np.count_nonzero(self.interior_mask))

    def node(self, i: int) -> Node:
        return Node(
            position=self.positions[i].copy(),
            kind=int(self.kinds[i]),
            normal=self.normals[i].copy(),
            spacing=float(self.spacing[i]),
        )

    def replace(self, **kwargs) -> "NodeSet":
        return replace(self, **kwargs)

    def recompute_spacing(self) -> None:
        """Refresh the per-node nearest-neighbor distances."""
        if self.n < 2:
            raise ValueError("spacing undefined for fewer than 2 nodes")
        tree = cKDTree(self.positions)
        d, _ = tree.query(self.positions, k=2)
        self.spacing = d[:, 1].copy()

    def validate(self) -> None:
        """Check the structural invariants; raise ValueError on violation."""
        N = self.n
        if self.kinds.shape != (N,) or self.normals.shape != (N, 2) or self.spacing.shape != (N,):
            raise ValueError("inconsistent array shapes in NodeSet")
        if not np.all(np.isfinite(self.positions)):
            raise ValueError("non-finite node positions")
        if not np.all((self.kinds == INTERIOR) | (self.kinds == BOUNDARY)):
            raise ValueError("unknown node kind")
        if np.any(self.spacing <= 0):
            raise ValueError("non-positive node spacing")

        tol = BOUNDARY_TOL * self.domain.diagonal
        sd = self.domain.signed_distance(self.positions)
        bnd = self.boundary_mask
        if np.any(np.abs(sd[bnd]) > tol):
            raise ValueError("boundary node off the boundary curve")
        if np.any(sd[~bnd] >= 0.0):
            raise ValueError("interior node not strictly inside the domain")

        nrm = np.hypot(self.normals[bnd, 0], self.normals[bnd, 1])
        if np.any(np.abs(nrm - 1.0) > 1e-12):
            raise ValueError("boundary normal not unit length")
        if np.any(self.normals[~bnd] != 0.0):
            raise ValueError("interior node carries a normal")

        if N >= 2:
            tree = cKDTree(self.positions)
            d, _ = tree.query(self.positions, k=2)
            if np.min(d[:, 1]) <= 1e-12 * self.domain.diagonal:
                raise ValueError("coincident nodes")

    def to_csv(self, path) -> None:
        """Write `x,y,kind,nx,ny` rows; normals are empty for interior nodes."""
        with open(path, "w") as fh:
            fh.write("x,y,kind,nx,ny\n")
            for i in range(self.n):
                x, y = self.positions[i]
                if self.kinds[i] == BOUNDARY:
                    nx, ny = self.normals[i]
                    fh.write(f"{x:.17g},{y:.17g},boundary,{nx:.17g},{ny:.17g}\n")
                else:
                    fh.write(f"{x:.17g},{y:.17g},interior,,\n")


def build_rectangle_grid(rect: Rect, h: float) -> NodeSet:
    """Regular grid of nodes on a rectangle with target spacing h.

    The actual spacing per axis is the closest divisor of the side length,
    so grid lines always hit the corners exactly. Corner normals are the
    normalized average of the two adjacent edge normals.
    """
    if h <= 0:
        raise ValueError(f"spacing must be positive, got {h}")
    if h > rect.width or h > rect.height:
        raise ValueError(f"spacing {h} exceeds a rectangle side of {rect}")

    nx = int(round(rect.width / h)) + 1
    ny = int(round(rect.height / h)) + 1
    xs = np.linspace(rect.x_lo, rect.x_hi, nx)
    ys = np.linspace(rect.y_lo, rect.y_hi, ny)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    positions = np.column_stack([X.ravel(), Y.ravel()])

    x, y = positions[:, 0], positions[:, 1]
    on_left = x == rect.x_lo
    on_right = x == rect.x_hi
    on_bottom = y == rect.y_lo
    on_top = y == rect.y_hi
    bnd = on_left | on_right | on_bottom | on_top

    kinds = np.where(bnd, BOUNDARY, INTERIOR).astype(np.uint8)
    normals = np.zeros_like(positions)
    normals[on_left, 0] -= 1.0
    normals[on_right, 0] += 1.0
    normals[on_bottom, 1] -= 1.0
    normals[on_top, 1] += 1.0
    lengths = np.hypot(normals[:, 0], normals[:, 1])
    normals[bnd] /= lengths[bnd, None]

    spacing = np.full(positions.shape[0], min(rect.width / (nx - 1), rect.height / (ny - 1)))
    nodes = NodeSet(positions, kinds, normals, spacing, DomainShape(rect))
    nodes.recompute_spacing()
    nodes.validate()
    return nodes


def build_drilled_domain(rect: Rect, holes: tuple[Circle, ...] | list[Circle], h: float) -> NodeSet:
    """Rectangle grid with circular holes cut out.

    Grid nodes inside a hole or closer than h/2 to its circle are dropped;
    each circle is then sampled with ceil(2*pi*r/h) equally spaced boundary
    nodes whose normals point toward the hole center (outward from the
    material).
    """
    holes = tuple(holes)
    for hole in holes:
        if not (
            rect.x_lo < hole.cx - hole.radius
            and hole.cx + hole.radius < rect.x_hi
            and rect.y_lo < hole.cy - hole.radius
            and hole.cy + hole.radius < rect.y_hi
        ):
            raise ValueError(f"hole {hole} is not strictly inside {rect}")
    for i, a in enumerate(holes):
        for b in holes[i + 1 :]:
            if math.hypot(a.cx - b.cx, a.cy - b.cy) <= a.radius + b.radius:
                raise ValueError(f"holes {a} and {b} overlap")

    grid = build_rectangle_grid(rect, h)
    keep = np.ones(grid.n, dtype=bool)
    for hole in holes:
        r = np.hypot(grid.positions[:, 0] - hole.cx, grid.positions[:, 1] - hole.cy)
        keep &= r - hole.radius >= h / 2.0

    new_pos, new_norm = [], []
    for hole in holes:
        m = int(math.ceil(2.0 * math.pi * hole.radius / h))
        theta = 2.0 * math.pi * np.arange(m) / m
        ring = hole.center + hole.radius * np.column_stack([np.cos(theta), np.sin(theta)])
        new_pos.append(ring)
        new_norm.append((hole.center - ring) / hole.radius)

    positions = np.vstack([grid.positions[keep]] + new_pos)
    kinds = np.concatenate(
        [grid.kinds[keep]] + [np.full(len(p), BOUNDARY, dtype=np.uint8) for p in new_pos]
    )
    normals = np.vstack([grid.normals[keep]] + new_norm)
    spacing = np.ones(len(positions))

    nodes = NodeSet(positions, kinds, normals, spacing, DomainShape(rect, holes))
    nodes.recompute_spacing()
    nodes.validate()
    return nodes
