"""Cantilever beam benchmark with the classical Timoshenko reference solution.

The beam occupies [0, L] x [-D/2, D/2] with a parabolic shear load of
resultant P applied at the free left end and the right end held at the
analytic displacement. Plane stress. The closed-form fields used both for
boundary data and for error measurement are the standard thick-beam
solution:

    I = D^3 / 12
    sigma_xx = P x y / I
    sigma_yy = 0
    sigma_xy = (P / 2I) (D^2/4 - y^2)

    u = P y (3 D^2 (1+nu) - 4 (3 L^2 + (nu+2) y^2 - 3 x^2)) / (24 E I)
    v = -P (3 D^2 (1+nu) (L-x) + 4 (L-x)^2 (2L+x) + 12 nu x y^2) / (24 E I)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..elasticity import BoundaryConditions, Material, assemble, compute_stresses
from ..neighbors import build_supports
from ..nodes import NodeSet, Rect, build_rectangle_grid
from ..shapes import BasisSpec, WeightSpec, build_shape_set
from ..solve import SolverConfig, solve
from ..timing import PhaseTimer
from .metrics import CaseResult, error_einf_displacement, error_einf_stress


@dataclass(frozen=True)
class BeamParams:
    length: float = 30.0
    height: float = 5.0
    E: float = 72.1e9
    nu: float = 0.33
    load: float = 1000.0

    def __post_init__(self) -> None:
        if self.length <= 0 or self.height <= 0:
            raise ValueError("beam dimensions must be positive")

    @property
    def inertia(self) -> float:
        return self.height**3 / 12.0

    @property
    def rect(self) -> Rect:
        return Rect(0.0, self.length, -self.height / 2.0, self.height / 2.0)


def timoshenko_stress(x, y, params: BeamParams = BeamParams()):
    """Reference stresses (sxx, syy, sxy); vectorized over x, y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    I = params.inertia
    sxx = params.load * x * y / I
    syy = np.zeros_like(sxx)
    sxy = params.load / (2.0 * I) * (params.height**2 / 4.0 - y * y)
    return sxx, syy, sxy


def timoshenko_displacement(x, y, params: BeamParams = BeamParams()):
    """Reference displacements (u, v); vectorized over x, y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    P, E, nu = params.load, params.E, params.nu
    L, D, I = params.length, params.height, params.inertia
    c = P / (24.0 * E * I)
    u = c * y * (3.0 * D * D * (1.0 + nu) - 4.0 * (3.0 * L * L + (nu + 2.0) * y * y - 3.0 * x * x))
    v = -c * (
        3.0 * D * D * (1.0 + nu) * (L - x)
        + 4.0 * (L - x) ** 2 * (2.0 * L + x)
        + 12.0 * nu * x * y * y
    )
    return u, v


def cantilever_bcs(nodes: NodeSet, params: BeamParams, all_essential: bool = False) -> BoundaryConditions:
    """Analytic displacement on the right edge, analytic traction elsewhere.

    Traction vectors are the reference stress tensor contracted with each
    node's outward normal, so corners and any boundary layout are handled
    uniformly. With all_essential every boundary node is pinned instead.
    """
    bcs = BoundaryConditions.empty(nodes.n)
    bnd = np.nonzero(nodes.boundary_mask)[0]
    x = nodes.positions[bnd, 0]
    y = nodes.positions[bnd, 1]
    on_right = x == params.rect.x_hi

    u_ref, v_ref = timoshenko_displacement(x, y, params)
    sxx, syy, sxy = timoshenko_stress(x, y, params)
    n1 = nodes.normals[bnd, 0]
    n2 = nodes.normals[bnd, 1]
    t1 = sxx * n1 + sxy * n2
    t2 = sxy * n1 + syy * n2

    for k, i in enumerate(bnd):
        if all_essential or on_right[k]:
            bcs.set_essential(i, (u_ref[k], v_ref[k]))
        else:
            bcs.set_traction(i, (t1[k], t2[k]))
    return bcs


def perturb_nodes(nodes: NodeSet, sigma: float, seed: int = 0) -> NodeSet:
    """Shift each interior node by sigma times a draw from Uniform([0, d]^2).

    d is the node's distance to its closest neighbor, so the perturbation
    scales with the local spacing. Boundary nodes stay put.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    rng = np.random.default_rng(seed)
    positions = nodes.positions.copy()
    interior = np.nonzero(nodes.interior_mask)[0]
    shift = sigma * rng.uniform(0.0, 1.0, size=(interior.size, 2)) * nodes.spacing[interior, None]
    positions[interior] += shift
    out = nodes.replace(positions=positions, spacing=nodes.spacing.copy())
    out.recompute_spacing()
    out.validate()
    return out


def grid_spacing_for(params: BeamParams, n_target: int) -> float:
    """Spacing that puts roughly n_target nodes on the beam rectangle."""
    if n_target < 4:
        raise ValueError(f"need at least 4 nodes, got {n_target}")
    return math.sqrt(params.length * params.height / n_target)


def cantilever_case(
    spacing: float | None = None,
    *,
    n_target: int | None = None,
    params: BeamParams = BeamParams(),
    basis: BasisSpec = BasisSpec(),
    support_n: int = 9,
    weight: WeightSpec = WeightSpec(),
    solver: SolverConfig = SolverConfig(),
    all_essential: bool = False,
    perturb_sigma: float = 0.0,
    seed: int = 0,
) -> CaseResult:
    """Solve the cantilever on a regular (optionally perturbed) grid."""
    if (spacing is None) == (n_target is None):
        raise ValueError("give exactly one of spacing or n_target")
    if spacing is None:
        spacing = grid_spacing_for(params, n_target)

    timer = PhaseTimer()
    with timer.phase("domain"):
        nodes = build_rectangle_grid(params.rect, spacing)
        if perturb_sigma > 0.0:
            nodes = perturb_nodes(nodes, perturb_sigma, seed)
    with timer.phase("supports"):
        supports = build_supports(nodes, support_n)
    with timer.phase("shapes"):
        shapes = build_shape_set(nodes, supports, basis, weight)
    material = Material(params.E, params.nu, "plane-stress")
    with timer.phase("assembly"):
        bcs = cantilever_bcs(nodes, params, all_essential)
        system = assemble(nodes, shapes, material, bcs)
    (u, v), report = solve(system, solver)
    timer.add("preconditioner", report.t_preconditioner)
    timer.add("solve", report.t_iterations)
    with timer.phase("postprocess"):
        stress = compute_stresses(shapes, material, u, v)
        x, y = nodes.positions[:, 0], nodes.positions[:, 1]
        u_ref, v_ref = timoshenko_displacement(x, y, params)
        sxx, syy, sxy = timoshenko_stress(x, y, params)
        errors = {
            "e_inf_u": error_einf_displacement(u, v, u_ref, v_ref),
            "e_inf_sigma": error_einf_stress(stress, sxx, syy, sxy),
        }
    return CaseResult(
        nodes=nodes,
        u=u,
        v=v,
        stress=stress,
        errors=errors,
        solve_report=report,
        timings=timer.report(),
        extras={"system": system},
    )
