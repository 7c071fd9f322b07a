"""Weighted-least-squares shape functions and derivative stencils.

Given a support of n nodes around a center p0, a basis of m functions and a
Gaussian weight, the local approximant is the WLS fit of nodal values over
the support. Applying a linear operator L to the fit and evaluating at p0
collapses to a stencil row

    chi_L = (L b)(p0)^T (W B)^+ W,

where B is the n-by-m matrix of basis values at the support nodes and W the
diagonal square-root-weight matrix. The pseudo-inverse is computed by SVD
with singular values below RCOND * s_max truncated.

All internal algebra runs in local coordinates q = (p - p0) / p_min, where
p_min is the distance from the center to its nearest support node. That
keeps the basis matrix well scaled regardless of the physical spacing; the
chain rule restores physical units on the way out. With n == m the fit is
plain interpolation and the weight drops out entirely, so W is skipped.

Rank deficiency needs care rather than a blanket error: structured supports
can be honestly singular while still defining most stencils. The canonical
example is a grid boundary node with n = 9, whose support (a 3x2 block plus
three collinear ties) annihilates two quartic basis combinations; value and
first-derivative stencils stay unique, only the mixed second derivative
becomes dependent on the arbitrary minimum-norm choice. The pseudo-inverse
therefore truncates and proceeds, and each operator row is flagged as
ambiguous when its operator image has a component in the truncated null
space. Consumers reject ambiguous rows they actually need.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .neighbors import SupportSet
from .nodes import NodeSet

OPS = ("val", "dx", "dy", "dxx", "dxy", "dyy")

# Order of each operator: physical stencils scale as p_min**-order.
_OP_ORDER = {"val": 0, "dx": 1, "dy": 1, "dxx": 2, "dxy": 2, "dyy": 2}

# Singular values below RCOND * s_max count as rank loss.
RCOND = 1e-12

# Relative null-space component above which an operator row counts as
# ambiguous (dependent on the minimum-norm completion).
_AMBIG_TOL = 1e-9


class IllConditionedStencilError(RuntimeError):
    """Raised when a support cannot determine a requested stencil."""

    def __init__(self, message: str, node: int | None = None, support: np.ndarray | None = None):
        super().__init__(message)
        self.node = node
        self.support = None if support is None else np.asarray(support)


@dataclass(frozen=True)
class WeightSpec:
    """Gaussian weight w(p) = exp(-(|p - p0| / (sigma * p_min))^2)."""

    sigma: float = 1.0

    def __post_init__(self) -> None:
        if self.sigma <= 0:
            raise ValueError(f"weight sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class BasisSpec:
    """Local approximation basis.

    kind "monomial-9": tensor monomials {1, x, y, x^2, y^2, xy, x^2 y,
    x y^2, x^2 y^2}. kind "gaussian-9": Gaussians centered at the first 9
    support nodes with shape parameter sigma (in units of p_min).
    """

    kind: str = "monomial-9"
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("monomial-9", "gaussian-9"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.sigma <= 0:
            raise ValueError(f"basis sigma must be positive, got {self.sigma}")

    @property
    def m(self) -> int:
        return 9


def weight(p: np.ndarray, p0: np.ndarray, p_min: float, sigma: float) -> float:
    """Gaussian weight of support node p relative to center p0."""
    if p_min <= 0:
        raise ValueError(f"p_min must be positive, got {p_min}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    p = np.asarray(p, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    r = np.hypot(*(p - p0)) / (sigma * p_min)
    return float(np.exp(-r * r))


def _monomial_rows(q: np.ndarray, op: str) -> np.ndarray:
    """Basis-function images under op, evaluated at local points q.

    q has shape (..., 2); the result appends an axis of length 9.
    """
    x, y = q[..., 0], q[..., 1]
    one = np.ones_like(x)
    zero = np.zeros_like(x)
    if op == "val":
        cols = (one, x, y, x * x, y * y, x * y, x * x * y, x * y * y, x * x * y * y)
    elif op == "dx":
        cols = (zero, one, zero, 2 * x, zero, y, 2 * x * y, y * y, 2 * x * y * y)
    elif op == "dy":
        cols = (zero, zero, one, zero, 2 * y, x, x * x, 2 * x * y, 2 * x * x * y)
    elif op == "dxx":
        cols = (zero, zero, zero, 2 * one, zero, zero, 2 * y, zero, 2 * y * y)
    elif op == "dxy":
        cols = (zero, zero, zero, zero, zero, one, 2 * x, 2 * y, 4 * x * y)
    elif op == "dyy":
        cols = (zero, zero, zero, zero, 2 * one, zero, zero, 2 * x, 2 * x * x)
    else:
        raise ValueError(f"unknown operator {op!r}")
    return np.stack(cols, axis=-1)


def _gaussian_rows(q: np.ndarray, centers: np.ndarray, sigma: float, op: str) -> np.ndarray:
    """Images of Gaussian basis functions centered at `centers` under op.

    q: (..., k, 2) evaluation points, centers: (..., m, 2). Result is
    (..., k, m).
    """
    d = q[..., :, None, :] - centers[..., None, :, :]
    dx, dy = d[..., 0], d[..., 1]
    s2 = sigma * sigma
    g = np.exp(-(dx * dx + dy * dy) / s2)
    if op == "val":
        return g
    if op == "dx":
        return -2.0 * dx / s2 * g
    if op == "dy":
        return -2.0 * dy / s2 * g
    if op == "dxx":
        return (4.0 * dx * dx / (s2 * s2) - 2.0 / s2) * g
    if op == "dyy":
        return (4.0 * dy * dy / (s2 * s2) - 2.0 / s2) * g
    if op == "dxy":
        return 4.0 * dx * dy / (s2 * s2) * g
    raise ValueError(f"unknown operator {op!r}")


def _basis_rows(q: np.ndarray, centers: np.ndarray, basis: BasisSpec, op: str) -> np.ndarray:
    if basis.kind == "monomial-9":
        return _monomial_rows(q, op)
    return _gaussian_rows(q, centers, basis.sigma, op)


def compute_shapes(
    support_positions: np.ndarray,
    center: np.ndarray,
    basis: BasisSpec,
    weight_spec: WeightSpec,
    ops: tuple[str, ...] = OPS,
    eval_point: np.ndarray | None = None,
    node_indices: np.ndarray | None = None,
) -> dict[str, np.ndarray]:
    """Stencil rows for one support, keyed by operator name.

    support_positions is (n, 2) with the center usually its first row;
    eval_point defaults to the center. Row entries align with the support
    ordering. Raises IllConditionedStencilError when a requested operator
    is not determined by a rank-deficient support.
    """
    pos = np.asarray(support_positions, dtype=float)
    center = np.asarray(center, dtype=float)
    n = pos.shape[0]
    m = basis.m
    if n < m:
        raise ValueError(f"support size {n} is below basis size {m}")
    for op in ops:
        if op not in _OP_ORDER:
            raise ValueError(f"unknown operator {op!r}")

    diff = pos - center
    d = np.hypot(diff[:, 0], diff[:, 1])
    zero = d == 0.0
    if np.count_nonzero(zero) > 1:
        raise IllConditionedStencilError("coincident support nodes", support=node_indices)
    p_min = float(np.min(d[~zero])) if np.any(~zero) else 0.0
    if p_min <= 0:
        raise IllConditionedStencilError("degenerate support", support=node_indices)

    q = diff / p_min
    centers = q[:m]
    B = _basis_rows(q, centers, basis, "val")

    if n == m:
        A = B
        w_sqrt = None
    else:
        u = d / (weight_spec.sigma * p_min)
        w_sqrt = np.exp(-0.5 * u * u)
        A = w_sqrt[:, None] * B

    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > RCOND * s[0]
    rank = int(np.count_nonzero(keep))
    s_inv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    pinv = (Vt.T * s_inv) @ U.T
    null = Vt[rank:]

    qe = np.zeros(2) if eval_point is None else (np.asarray(eval_point, dtype=float) - center) / p_min
    rows: dict[str, np.ndarray] = {}
    for op in ops:
        lb = _basis_rows(qe[None, :], centers, basis, op)[0]
        scale = float(np.linalg.norm(lb))
        if rank < m and scale > 0 and np.linalg.norm(null @ lb) > _AMBIG_TOL * scale:
            raise IllConditionedStencilError(
                f"rank-{rank} support does not determine the {op} stencil",
                support=node_indices,
            )
        row = lb @ pinv
        if w_sqrt is not None:
            row = row * w_sqrt
        rows[op] = row / p_min ** _OP_ORDER[op]
    return rows


def apply_shape(row: np.ndarray, values: np.ndarray) -> float:
    """Contract one stencil row against nodal values."""
    row = np.asarray(row)
    values = np.asarray(values)
    if row.shape != values.shape:
        raise ValueError(f"shape mismatch: {row.shape} vs {values.shape}")
    return float(np.dot(row, values))


@dataclass(frozen=True)
class ShapeSet:
    """Stencil rows for every node, aligned with the SupportSet ordering.

    ranks holds the truncated SVD rank per node; ambiguous[op][i] is True
    when node i's rank-deficient support leaves the op stencil dependent on
    the minimum-norm completion. Such rows are still stored (they matter to
    nothing when unused) but consumers must call require() on the operators
    they actually read.
    """

    support: SupportSet
    rows: dict[str, np.ndarray]  # op -> (N, n)
    p_min: np.ndarray  # (N,)
    basis: BasisSpec
    weight: WeightSpec
    ranks: np.ndarray  # (N,)
    ambiguous: dict[str, np.ndarray]  # op -> (N,) bool

    @property
    def n_nodes(self) -> int:
        return self.support.indices.shape[0]

    @property
    def n_support(self) -> int:
        return self.support.n

    @property
    def ops(self) -> tuple[str, ...]:
        return tuple(self.rows.keys())

    def row(self, i: int, op: str) -> np.ndarray:
        return self.rows[op][i]

    def require(self, op: str, node_indices: np.ndarray | None = None) -> None:
        """Raise unless op stencils are well determined at the given nodes.

        node_indices=None checks every node.
        """
        mask = self.ambiguous[op]
        if node_indices is not None:
            node_indices = np.asarray(node_indices)
            mask = mask[node_indices]
        if not mask.any():
            return
        bad = int(np.argmax(mask))
        i = bad if node_indices is None else int(node_indices[bad])
        raise IllConditionedStencilError(
            f"rank-{int(self.ranks[i])} support does not determine the {op} "
            f"stencil at node {i}",
            node=i,
            support=self.support.indices[i],
        )

    def apply(self, op: str, values: np.ndarray) -> np.ndarray:
        """Apply the operator stencils to a nodal field, all nodes at once."""
        values = np.asarray(values)
        return np.einsum("ij,ij->i", self.rows[op], values[self.support.indices])

    def to_csv(self, path) -> None:
        """Debug dump: one line per node and operator with the stencil row."""
        idx = self.support.indices
        with open(path, "w") as fh:
            fh.write("node,op,neighbors,coefficients\n")
            for i in range(self.n_nodes):
                nbrs = " ".join(str(j) for j in idx[i])
                for op in self.rows:
                    coef = " ".join(f"{v:.17g}" for v in self.rows[op][i])
                    fh.write(f"{i},{op},{nbrs},{coef}\n")


def build_shape_set(
    nodes: NodeSet,
    supports: SupportSet,
    basis: BasisSpec = BasisSpec(),
    weight_spec: WeightSpec = WeightSpec(),
    ops: tuple[str, ...] = OPS,
) -> ShapeSet:
    """Stencils for all nodes in one batched SVD pass.

    Row values match compute_shapes per node (up to floating-point
    reassociation in the matrix products) but run orders of magnitude
    faster. Unlike compute_shapes this never raises on rank-deficient
    supports; it fills the ambiguity masks and leaves enforcement to
    ShapeSet.require, since which operators a node must determine depends
    on how the caller consumes it.
    """
    for op in ops:
        if op not in _OP_ORDER:
            raise ValueError(f"unknown operator {op!r}")
    idx = supports.indices
    dist = supports.distances
    N, n = idx.shape
    m = basis.m
    if n < m:
        raise ValueError(f"support size {n} is below basis size {m}")

    p_min = dist[:, 1].copy()
    if np.any(p_min <= 0):
        raise IllConditionedStencilError("degenerate support", node=int(np.argmin(p_min)))

    q = (nodes.positions[idx] - nodes.positions[:, None, :]) / p_min[:, None, None]
    centers = q[:, :m, :]
    B = _basis_rows(q, centers, basis, "val")

    if n == m:
        A = B
        w_sqrt = None
    else:
        u = dist / (weight_spec.sigma * p_min[:, None])
        w_sqrt = np.exp(-0.5 * u * u)
        A = w_sqrt[..., None] * B

    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    keep = s > RCOND * s[:, :1]
    ranks = np.count_nonzero(keep, axis=1)
    s_inv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    pinv = (Vt.transpose(0, 2, 1) * s_inv[:, None, :]) @ U.transpose(0, 2, 1)
    deficient = np.flatnonzero(ranks < m)

    qe = np.zeros((N, 1, 2))
    rows: dict[str, np.ndarray] = {}
    ambiguous: dict[str, np.ndarray] = {}
    for op in ops:
        lb = _basis_rows(qe, centers, basis, op)[:, 0, :]
        row = (lb[:, None, :] @ pinv)[:, 0, :]
        if w_sqrt is not None:
            row = row * w_sqrt
        rows[op] = row / p_min[:, None] ** _OP_ORDER[op]
        mask = np.zeros(N, dtype=bool)
        for i in deficient:
            null = Vt[i, ranks[i]:]
            scale = float(np.linalg.norm(lb[i]))
            mask[i] = scale > 0 and np.linalg.norm(null @ lb[i]) > _AMBIG_TOL * scale
        ambiguous[op] = mask
    return ShapeSet(supports, rows, p_min, basis, weight_spec, ranks, ambiguous)
