"""Convergence studies: run a benchmark across mesh levels and orders."""

import copy
import time
from dataclasses import dataclass, field

import numpy as np

from .runner import execute, final_errors

#: scheme paired with each polynomial degree in convergence studies
DEFAULT_SCHEMES = {1: "imex-rk32", 2: "ssp33", 3: "rk44"}


@dataclass
class ConvergenceRow:
    degree: int
    level: int
    nx: int
    ny: int
    n_dofs: int
    error_zeta: float
    error_q: float
    order_zeta: float = float("nan")
    order_q: float = float("nan")
    wall_time: float = 0.0
    n_elements_final: int = 0
    steps: int = 0


@dataclass
class ConvergenceTable:
    rows: list = field(default_factory=list)

    def header(self):
        return ["degree", "level", "nx", "ny", "n_dofs", "error_zeta",
                "error_q", "order_zeta", "order_q", "wall_time",
                "n_elements_final", "steps"]

    def as_rows(self):
        return [[r.degree, r.level, r.nx, r.ny, r.n_dofs,
                 float(r.error_zeta), float(r.error_q),
                 float(r.order_zeta), float(r.order_q), float(r.wall_time),
                 r.n_elements_final, r.steps] for r in self.rows]

    def format(self):
        lines = ["  ".join(f"{h:>14s}" for h in self.header())]
        for row in self.as_rows():
            cells = []
            for v in row:
                if isinstance(v, float):
                    cells.append(f"{v:>14.6e}")
                else:
                    cells.append(f"{v:>14d}")
            lines.append("  ".join(cells))
        return "\n".join(lines)


def run_convergence(base_cfg, levels, degrees, schemes=None):
    """Refinement study; level k doubles the base mesh k-1 times.

    Error columns come from the benchmark's reference solution, so the base
    config must name a benchmark that has one (vortex, lake_rest or a
    channel configuration). Observed orders are slopes between consecutive
    levels.
    """
    schemes = schemes or DEFAULT_SCHEMES
    table = ConvergenceTable()
    for degree in degrees:
        prev = None
        for level in levels:
            cfg = copy.deepcopy(base_cfg)
            cfg.degree = degree
            cfg.scheme = schemes.get(degree, cfg.scheme)
            factor = 2 ** (level - 1)
            cfg.mesh.nx = base_cfg.mesh.nx * factor
            cfg.mesh.ny = base_cfg.mesh.ny * factor
            cfg.output.vtk = False
            t0 = time.perf_counter()
            problem, op, state, record = execute(cfg, write_outputs=False)
            wall = time.perf_counter() - t0
            errs = final_errors(problem, op, state)
            if errs is None:
                raise ValueError(f"benchmark {cfg.benchmark!r} has no "
                                 "reference solution for convergence studies")
            nn = op.ref.n_nodes
            # prognostic dofs: free surface + two discharge components
            ndofs = 3 * op.mesh.n_elements * nn
            row = ConvergenceRow(degree=degree, level=level, nx=cfg.mesh.nx,
                                 ny=cfg.mesh.ny, n_dofs=ndofs,
                                 error_zeta=errs["zeta"], error_q=errs["q"],
                                 wall_time=wall,
                                 n_elements_final=op.mesh.n_elements,
                                 steps=record.steps)
            if prev is not None:
                row.order_zeta = float(
                    np.log2(prev.error_zeta / max(row.error_zeta, 1e-300)))
                row.order_q = float(
                    np.log2(prev.error_q / max(row.error_q, 1e-300)))
            table.rows.append(row)
            prev = row
    return table


def observed_orders(table: ConvergenceTable, degree):
    return [r.order_zeta for r in table.rows
            if r.degree == degree and np.isfinite(r.order_zeta)]
