"""Error norms and the common result container for benchmark cases."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..elasticity import StressField
from ..nodes import NodeSet
from ..solve import SolveReport
from ..timing import TimingReport


def error_einf_displacement(u, v, u_ref, v_ref) -> float:
    """Normalized max-norm displacement error.

    Largest componentwise deviation over all nodes, divided by the largest
    componentwise magnitude of the reference field.
    """
    num = max(np.max(np.abs(np.asarray(u) - np.asarray(u_ref))), np.max(np.abs(np.asarray(v) - np.asarray(v_ref))))
    den = max(np.max(np.abs(u_ref)), np.max(np.abs(v_ref)))
    if den == 0.0:
        raise ValueError("reference displacement field is identically zero")
    return float(num / den)


def error_einf_stress(stress: StressField, sxx_ref, syy_ref, sxy_ref, scale: float | None = None) -> float:
    """Normalized max-norm stress error over all three components.

    The denominator is the largest componentwise magnitude of the reference
    stress, unless an explicit scale (e.g. a peak pressure) is given.
    """
    num = max(
        np.max(np.abs(stress.sxx - np.asarray(sxx_ref))),
        np.max(np.abs(stress.syy - np.asarray(syy_ref))),
        np.max(np.abs(stress.sxy - np.asarray(sxy_ref))),
    )
    if scale is None:
        scale = max(np.max(np.abs(sxx_ref)), np.max(np.abs(syy_ref)), np.max(np.abs(sxy_ref)))
    if scale == 0.0:
        raise ValueError("reference stress field is identically zero")
    return float(num / scale)


@dataclass
class CaseResult:
    """Everything a benchmark run produces."""

    nodes: NodeSet
    u: np.ndarray
    v: np.ndarray
    stress: StressField
    errors: dict[str, float]
    solve_report: SolveReport
    timings: TimingReport
    extras: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return self.nodes.n
