"""h-refinement: halve the local spacing inside rectangular regions.

One refinement pass inserts the midpoints between each selected node and
its support neighbors, discarding candidates that would crowd an existing
or already-accepted node. Midpoints of two boundary nodes that land near
the boundary curve are projected onto it and become boundary nodes with an
interpolated normal; everything else stays interior. Multi-level schedules
apply passes outermost region first: a region at level k participates in
the first k passes, so nested regions telescope the spacing down by powers
of two.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .neighbors import build_supports
from .nodes import BOUNDARY, INTERIOR, NodeSet, Rect


@dataclass(frozen=True)
class RefineRegion:
    rect: Rect
    level: int = 1

    def __post_init__(self) -> None:
        if self.level < 1:
            raise ValueError(f"refinement level must be at least 1, got {self.level}")


@dataclass(frozen=True)
class RefineConfig:
    """proximity is the rejection radius in units of the halved spacing."""

    proximity: float = 0.75
    support_n: int = 9

    def __post_init__(self) -> None:
        if not 0.0 < self.proximity < 1.0:
            raise ValueError(f"proximity must be in (0, 1), got {self.proximity}")
        if self.support_n < 2:
            raise ValueError(f"support size must be at least 2, got {self.support_n}")


def refine_once(nodes: NodeSet, region: Rect, config: RefineConfig = RefineConfig()) -> NodeSet:
    """Single halving pass over one rectangular region."""
    return _refine_pass(nodes, [region], config)


def refine_levels(nodes: NodeSet, regions: list[RefineRegion], config: RefineConfig = RefineConfig()) -> NodeSet:
    """Run the multi-level schedule described by the regions' levels."""
    if not regions:
        return nodes
    max_level = max(r.level for r in regions)
    for pass_no in range(1, max_level + 1):
        active = [r.rect for r in regions if r.level >= pass_no]
        nodes = _refine_pass(nodes, active, config)
    return nodes


def _refine_pass(nodes: NodeSet, rects: list[Rect], config: RefineConfig) -> NodeSet:
    supports = build_supports(nodes, min(config.support_n, nodes.n))
    pos = nodes.positions

    selected = np.zeros(nodes.n, dtype=bool)
    for rect in rects:
        selected |= rect.contains(pos)
    sel = np.nonzero(selected)[0]
    if sel.size == 0:
        return nodes

    # Candidate midpoints in deterministic order: by node index, then by
    # neighbor rank within the support.
    nbr = supports.indices[sel, 1:]
    k = nbr.shape[1]
    mids = 0.5 * (pos[sel, None, :] + pos[nbr])
    p_min = supports.distances[sel, 1]
    radius = np.repeat(config.proximity * p_min / 2.0, k)
    near_boundary = np.repeat(config.proximity * p_min, k)
    src = np.repeat(sel, k)
    mids = mids.reshape(-1, 2)
    both_boundary = (nodes.kinds[src] == BOUNDARY) & (nodes.kinds[nbr.reshape(-1)] == BOUNDARY)

    # Classify candidates and settle final positions before proximity checks.
    sd = nodes.domain.signed_distance(mids)
    final = mids.copy()
    kinds = np.full(len(mids), INTERIOR, dtype=np.uint8)
    normals = np.zeros_like(mids)
    keep = np.ones(len(mids), dtype=bool)

    project = both_boundary & (np.abs(sd) <= near_boundary)
    for c in np.nonzero(project)[0]:
        n_sum = nodes.normals[src[c]] + nodes.normals[nbr.reshape(-1)[c]]
        norm = np.hypot(n_sum[0], n_sum[1])
        if norm < 1e-8:
            keep[c] = False
            continue
        final[c] = nodes.domain.project_to_boundary(mids[c])
        kinds[c] = BOUNDARY
        normals[c] = n_sum / norm
    inside = nodes.domain.contains(final)
    keep &= project | inside

    # Reject candidates crowding an existing node, then earlier-accepted ones.
    tree = cKDTree(pos)
    d_exist, _ = tree.query(final, k=1)
    keep &= d_exist >= radius

    order = np.nonzero(keep)[0]
    if order.size == 0:
        return nodes
    cand_tree = cKDTree(final[order])
    neighbor_lists = cand_tree.query_ball_point(final[order], r=radius[order])
    accepted = np.zeros(order.size, dtype=bool)
    for local, nbrs in enumerate(neighbor_lists):
        ok = True
        for other in nbrs:
            if other != local and accepted[other] and other < local:
                ok = False
                break
        accepted[local] = ok
    new = order[accepted]
    if new.size == 0:
        return nodes

    positions = np.vstack([pos, final[new]])
    kinds_all = np.concatenate([nodes.kinds, kinds[new]])
    normals_all = np.vstack([nodes.normals, normals[new]])
    spacing_all = np.concatenate([nodes.spacing, np.full(new.size, 1.0)])
    out = nodes.replace(
        positions=positions, kinds=kinds_all, normals=normals_all, spacing=spacing_all
    )
    out.recompute_spacing()
    out.validate()
    return out
