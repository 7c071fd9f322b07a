"""CSV and legacy-VTK writers for run artifacts.

Numbers are written with repr-faithful %.17g formatting so identical runs
produce identical bytes.
"""
from __future__ import annotations

import numpy as np

from .cases.metrics import CaseResult
from .elasticity import StressField
from .nodes import NodeSet


def write_fields_csv(path, nodes: NodeSet, u, v, stress: StressField) -> None:
    svm = stress.von_mises
    with open(path, "w") as fh:
        fh.write("x,y,u,v,sxx,syy,sxy,svm\n")
        for i in range(nodes.n):
            fh.write(
                f"{nodes.positions[i, 0]:.17g},{nodes.positions[i, 1]:.17g},"
                f"{u[i]:.17g},{v[i]:.17g},"
                f"{stress.sxx[i]:.17g},{stress.syy[i]:.17g},{stress.sxy[i]:.17g},"
                f"{svm[i]:.17g}\n"
            )


def write_sweep_csv(path, rows: list[dict], key: str = "N") -> None:
    """Sweep table: one row per run, keyed by N or by the swept parameter."""
    with open(path, "w") as fh:
        fh.write(f"{key},e_inf_u,e_inf_sigma,t_total\n")
        for row in rows:
            e_u = row.get("e_inf_u")
            e_s = row.get("e_inf_sigma")
            fh.write(
                f"{row[key]:.17g},"
                f"{'' if e_u is None else format(e_u, '.17g')},"
                f"{'' if e_s is None else format(e_s, '.17g')},"
                f"{row['t_total']:.6f}\n"
            )


def write_vtk(path, nodes: NodeSet, u, v, stress: StressField) -> None:
    """Legacy-text VTK point cloud with displacement and stress point data."""
    svm = stress.von_mises
    n = nodes.n
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("mlsm2d fields\n")
        fh.write("ASCII\n")
        fh.write("DATASET POLYDATA\n")
        fh.write(f"POINTS {n} double\n")
        for p in nodes.positions:
            fh.write(f"{p[0]:.17g} {p[1]:.17g} 0\n")
        fh.write(f"VERTICES {n} {2 * n}\n")
        for i in range(n):
            fh.write(f"1 {i}\n")
        fh.write(f"POINT_DATA {n}\n")
        fh.write("VECTORS displacement double\n")
        for i in range(n):
            fh.write(f"{u[i]:.17g} {v[i]:.17g} 0\n")
        for name, arr in (
            ("sxx", stress.sxx),
            ("syy", stress.syy),
            ("sxy", stress.sxy),
            ("svm", svm),
        ):
            fh.write(f"SCALARS {name} double 1\n")
            fh.write("LOOKUP_TABLE default\n")
            for x in arr:
                fh.write(f"{x:.17g}\n")


def write_case_outputs(outdir, result: CaseResult, vtk: bool = False) -> None:
    result.nodes.to_csv(outdir / "nodes.csv")
    write_fields_csv(outdir / "fields.csv", result.nodes, result.u, result.v, result.stress)
    result.timings.to_csv(outdir / "timing.csv")
    if vtk:
        write_vtk(outdir / "fields.vtk", result.nodes, result.u, result.v, result.stress)
