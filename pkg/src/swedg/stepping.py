"""Time integration: explicit and IMEX Runge-Kutta steps and the run loop.

One step assembles the stage residuals F (continuity), G (momentum),
L (friction) and R (tracer) at every stage and solves only block-diagonal
(weighted) mass systems:

* free surface:  M zeta_l = M zeta_n + dt sum_m a_lm F_m
* discharge:     A q_l = M q_n + dt sum_m a_lm G_m + dt sum_{m<l} at_lm L_m
  where A is the mass matrix weighted by 1 + at_ll dt gamma, with the
  friction coefficient gamma linearized at the previous stage state;
* tracer:        H_l c_l = H_n c_n + dt sum_m a_lm R_m with H weighted by
  the water depth of the owning stage (consistency with continuity).

The final combination always uses the b weights with the plain mass matrix;
the friction history terms L_m carry the true (not linearized) gamma of
their stage.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .discretization import SpatialOperator, transfer_fields
from .errors import ConfigError
from .mesh import adapt, mark_elements
from .tableaux import ButcherTableau, IMEXTableau


@dataclass
class State:
    """Discrete solution at one time level (nodal coefficient blocks)."""

    t: float
    zeta: np.ndarray
    qx: np.ndarray
    qy: np.ndarray
    conc: Optional[np.ndarray] = None

    def copy(self):
        return State(self.t, self.zeta.copy(), self.qx.copy(), self.qy.copy(),
                     None if self.conc is None else self.conc.copy())


def _stage_residuals(op, st, t, bcs, phys):
    return op.assemble(st.zeta, st.qx, st.qy, st.conc, t, bcs, phys,
                       time_for_error=t)


def rk_step(op, state, dt, tableau, bcs, phys):
    """One step of either kind; dispatches on the tableau type."""
    if isinstance(tableau, IMEXTableau):
        return imex_step(op, state, dt, tableau, bcs, phys)
    return explicit_step(op, state, dt, tableau, bcs, phys)


def _tracer_update(op, state, h_n, Hc, load, h_new, t_new):
    """Solve H_new c = H_n c^n + load in increment form.

    Written as c = c^n + H_new^-1 (load + (H_n - H_new) c^n) so that a zero
    load with unchanged depth leaves the tracer bitwise untouched.
    """
    delta = Hc - op.weighted_mass_apply(state.conc, h_new)
    return state.conc + op.weighted_mass_solve(load + delta, h_new)


def explicit_step(op, state, dt, tableau: ButcherTableau, bcs, phys):
    """Explicit RK step; friction (if any) is treated explicitly.

    All updates are increments on the previous solution: u + M^-1 (dt ...),
    so zero residuals (e.g. a lake at rest) leave the state bitwise
    unchanged instead of cycling it through M^-1 M.
    """
    a, b, c = tableau.a, tableau.b, tableau.c
    s = tableau.stages
    has_tracer = state.conc is not None
    if has_tracer:
        h_n = op.depth_at_mass_qpoints(state.zeta, time=state.t)
        Hc = op.weighted_mass_apply(state.conc, h_n)
    res = []
    stage = state
    lam_max = 0.0
    for l in range(s):
        if l > 0:
            zeta_l = state.zeta + op.mass_solve(
                dt * sum(a[l, m] * res[m]["F"] for m in range(l)))
            qx_l = state.qx + op.mass_solve(
                dt * sum(a[l, m] * (res[m]["Gx"] + res[m]["Lx"])
                         for m in range(l)))
            qy_l = state.qy + op.mass_solve(
                dt * sum(a[l, m] * (res[m]["Gy"] + res[m]["Ly"])
                         for m in range(l)))
            conc_l = None
            if has_tracer:
                t_l = state.t + c[l] * dt
                h_l = op.depth_at_mass_qpoints(zeta_l, time=t_l)
                conc_l = _tracer_update(
                    op, state, h_n, Hc,
                    dt * sum(a[l, m] * res[m]["R"] for m in range(l)),
                    h_l, t_l)
            stage = State(state.t + c[l] * dt, zeta_l, qx_l, qy_l, conc_l)
        r = _stage_residuals(op, stage, state.t + c[l] * dt, bcs, phys)
        lam_max = max(lam_max, r["lam_max"])
        res.append(r)
    t1 = state.t + dt
    zeta1 = state.zeta + op.mass_solve(
        dt * sum(b[m] * res[m]["F"] for m in range(s)))
    qx1 = state.qx + op.mass_solve(
        dt * sum(b[m] * (res[m]["Gx"] + res[m]["Lx"]) for m in range(s)))
    qy1 = state.qy + op.mass_solve(
        dt * sum(b[m] * (res[m]["Gy"] + res[m]["Ly"]) for m in range(s)))
    conc1 = None
    if has_tracer:
        h1 = op.depth_at_mass_qpoints(zeta1, time=t1)
        conc1 = _tracer_update(
            op, state, h_n, Hc,
            dt * sum(b[m] * res[m]["R"] for m in range(s)), h1, t1)
    return State(t1, zeta1, qx1, qy1, conc1), lam_max


def imex_step(op, state, dt, tableau: IMEXTableau, bcs, phys):
    """IMEX step with the friction term handled by the implicit tableau."""
    a, b, c = tableau.explicit.a, tableau.explicit.b, tableau.explicit.c
    at, bt = tableau.implicit.a, tableau.implicit.b
    s = tableau.stages
    has_tracer = state.conc is not None
    if has_tracer:
        h_n = op.depth_at_mass_qpoints(state.zeta, time=state.t)
        Hc = op.weighted_mass_apply(state.conc, h_n)
    res = []
    stage = state
    lam_max = 0.0
    for l in range(s):
        if l > 0:
            zeta_l = state.zeta + op.mass_solve(
                dt * sum(a[l, m] * res[m]["F"] for m in range(l)))
            rhs_x = dt * sum(a[l, m] * res[m]["Gx"] for m in range(l)) \
                + dt * sum(at[l, m] * res[m]["Lx"] for m in range(l))
            rhs_y = dt * sum(a[l, m] * res[m]["Gy"] for m in range(l)) \
                + dt * sum(at[l, m] * res[m]["Ly"] for m in range(l))
            if at[l, l] != 0.0 and phys.manning_n > 0.0:
                # A q = M q^n + rhs with A the (1 + at_ll dt gamma)-weighted
                # mass matrix, as the increment q^n + A^-1 (rhs - at_ll dt
                # M_gamma q^n); gamma is linearized at the previous stage
                gamma = op.friction_gamma_at_mass_qpoints(
                    stage.zeta, stage.qx, stage.qy, phys)
                w = 1.0 + at[l, l] * dt * gamma
                qx_l = state.qx + op.weighted_mass_solve(
                    rhs_x + op.mass_apply(state.qx)
                    - op.weighted_mass_apply(state.qx, w), w)
                qy_l = state.qy + op.weighted_mass_solve(
                    rhs_y + op.mass_apply(state.qy)
                    - op.weighted_mass_apply(state.qy, w), w)
            else:
                qx_l = state.qx + op.mass_solve(rhs_x)
                qy_l = state.qy + op.mass_solve(rhs_y)
            conc_l = None
            if has_tracer:
                t_l = state.t + c[l] * dt
                h_l = op.depth_at_mass_qpoints(zeta_l, time=t_l)
                conc_l = _tracer_update(
                    op, state, h_n, Hc,
                    dt * sum(a[l, m] * res[m]["R"] for m in range(l)),
                    h_l, t_l)
            stage = State(state.t + c[l] * dt, zeta_l, qx_l, qy_l, conc_l)
        r = _stage_residuals(op, stage, state.t + c[l] * dt, bcs, phys)
        lam_max = max(lam_max, r["lam_max"])
        res.append(r)
    t1 = state.t + dt
    zeta1 = state.zeta + op.mass_solve(
        dt * sum(b[m] * res[m]["F"] for m in range(s)))
    qx1 = state.qx + op.mass_solve(
        dt * sum(b[m] * res[m]["Gx"] + bt[m] * res[m]["Lx"] for m in range(s)))
    qy1 = state.qy + op.mass_solve(
        dt * sum(b[m] * res[m]["Gy"] + bt[m] * res[m]["Ly"] for m in range(s)))
    conc1 = None
    if has_tracer:
        h1 = op.depth_at_mass_qpoints(zeta1, time=t1)
        conc1 = _tracer_update(
            op, state, h_n, Hc,
            dt * sum(b[m] * res[m]["R"] for m in range(s)), h1, t1)
    return State(t1, zeta1, qx1, qy1, conc1), lam_max


# -- driver -----------------------------------------------------------------

@dataclass
class TimeControls:
    """Step-size and horizon settings; either dt or cfl must be set."""

    t_end: float
    dt: Optional[float] = None
    cfl: Optional[float] = None
    max_steps: int = 10_000_000
    steady_tol: Optional[float] = None   # stop when max |dzeta|/dt < tol

    def __post_init__(self):
        if (self.dt is None) == (self.cfl is None):
            raise ConfigError("set exactly one of dt (fixed) or cfl (adaptive)")
        if self.dt is not None and self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.cfl is not None and self.cfl <= 0:
            raise ConfigError("cfl must be positive")


@dataclass
class AMRControls:
    indicator: str = "vorticity"       # vorticity | tracer_gradient | bathymetry
    theta_r: float = 1e-4
    theta_c: float = 5e-5
    n_max: int = 3
    h_min: float = 0.0
    cadence: int = 5
    absolute: bool = False


@dataclass
class RunRecord:
    """Diagnostics accumulated by :func:`run`."""

    times: list = field(default_factory=list)
    volumes: list = field(default_factory=list)
    n_elements: list = field(default_factory=list)
    gauge_rows: list = field(default_factory=list)
    tracer_mass: list = field(default_factory=list)
    steps: int = 0


def cfl_timestep(op, cfl, lam_max, degree):
    """dt = cfl * min_K H_K / ((2r+1) lam_max)."""
    hk = float(np.min(op.mesh.element_size()))
    r = max(degree, 1)
    return cfl * hk / ((2 * r + 1) * max(lam_max, 1e-12))


def _estimate_lam(op, state, phys):
    h = op.depth_at_volume_qpoints(state.zeta, time=state.t)
    u = np.hypot(op.at_volume_qpoints(state.qx), op.at_volume_qpoints(state.qy)) / h
    return float(np.max(u + np.sqrt(phys.g * h)))


def _indicator(op, state, amr):
    if amr.indicator == "vorticity":
        return op.vorticity_indicator(state.zeta, state.qx, state.qy)
    if amr.indicator == "tracer_gradient":
        if state.conc is None:
            raise ConfigError("tracer_gradient indicator needs a tracer field")
        return op.gradient_indicator(state.conc)
    if amr.indicator == "bathymetry":
        return op.bathymetry_indicator()
    raise ConfigError(f"unknown AMR indicator {amr.indicator!r}")


def remesh(op, state, amr):
    """One adapt cycle; returns (new_op, new_state, changed)."""
    eta = _indicator(op, state, amr)
    marks = mark_elements(op.mesh, eta, amr.theta_r, amr.theta_c,
                          amr.n_max, amr.h_min, amr.absolute)
    if not np.any(marks):
        return op, state, False
    new_mesh, ops = adapt(op.mesh, marks)
    if new_mesh.n_elements == op.mesh.n_elements and all(
            o[0] == "copy" for o in ops):
        return op, state, False
    new_op = SpatialOperator(new_mesh, op.degree, op.bathymetry,
                             op.bathymetry_mode)
    zeta, qx, qy, conc = transfer_fields(
        op, new_op, ops, [state.zeta, state.qx, state.qy, state.conc])
    return new_op, State(state.t, zeta, qx, qy, conc), True


def run(op, state, controls: TimeControls, tableau, bcs, phys,
        amr: Optional[AMRControls] = None, gauges=None,
        observer=None):
    """Advance to t_end. Returns (op, state, record).

    gauges: optional (n, 2) array of probe locations, sampled once per step.
    observer: optional callable (step, op, state) for output hooks.
    """
    record = RunRecord()
    gauge_ctx = _GaugeContext(op, gauges) if gauges is not None else None
    lam = _estimate_lam(op, state, phys)
    _record(record, op, state, gauge_ctx)
    step = 0
    while state.t < controls.t_end - 1e-12 and step < controls.max_steps:
        if amr is not None and amr.cadence > 0 and step > 0 \
                and step % amr.cadence == 0:
            new_op, state, changed = remesh(op, state, amr)
            if changed:
                op = new_op
                if gauge_ctx is not None:
                    gauge_ctx = _GaugeContext(op, gauges)
        if controls.dt is not None:
            dt = controls.dt
        else:
            dt = cfl_timestep(op, controls.cfl, lam, op.degree)
        dt = min(dt, controls.t_end - state.t)
        prev_zeta = state.zeta
        state, lam = rk_step(op, state, dt, tableau, bcs, phys)
        step += 1
        _record(record, op, state, gauge_ctx)
        if observer is not None:
            observer(step, op, state)
        if controls.steady_tol is not None \
                and state.zeta.shape == prev_zeta.shape \
                and float(np.max(np.abs(state.zeta - prev_zeta))) \
                < controls.steady_tol * dt:
            break
    record.steps = step
    return op, state, record


def _record(record, op, state, gauge_ctx):
    record.times.append(state.t)
    record.volumes.append(op.total_volume(state.zeta))
    record.n_elements.append(op.mesh.n_elements)
    if state.conc is not None:
        hq = op.at_volume_qpoints(state.zeta) + op.zb_vol
        cq = op.at_volume_qpoints(state.conc)
        record.tracer_mass.append(float(np.sum(op.detjw_vol * hq * cq)))
    if gauge_ctx is not None:
        record.gauge_rows.append(gauge_ctx.sample(state))


class _GaugeContext:
    """Locates gauge points in the mesh once; samples fields per step."""

    def __init__(self, op, points):
        self.op = op
        self.points = np.asarray(points, dtype=float)
        self.elems = []
        self.tables = []
        for p in self.points:
            e, ref_pt = self._locate(op, p)
            self.elems.append(e)
            self.tables.append(op.ref.eval_at(ref_pt[None, :])[0])

    @staticmethod
    def _locate(op, p):
        mesh = op.mesh
        best = None
        for e in range(mesh.n_elements):
            ref_pt = _invert_bilinear(mesh.corners[e], p)
            m = float(np.max(np.abs(ref_pt)))
            if best is None or m < best[0]:
                best = (m, e, ref_pt)
            if m <= 1.0 + 1e-10:
                return e, np.clip(ref_pt, -1.0, 1.0)
        # fall back to the closest element (point on an edge/vertex)
        return best[1], np.clip(best[2], -1.0, 1.0)

    def sample(self, state):
        rows = []
        for e, tab in zip(self.elems, self.tables):
            z = float(tab @ state.zeta[e])
            qx = float(tab @ state.qx[e])
            qy = float(tab @ state.qy[e])
            rows.append((state.t, z, qx, qy))
        return rows


def _invert_bilinear(corners, p, iters=30):
    """Newton inversion of the bilinear map for one physical point."""
    from .mesh import bilinear_map
    x = np.zeros(2)
    for _ in range(iters):
        phys, jac = bilinear_map(corners, x[None, :])
        rsd = phys[0] - p
        if np.max(np.abs(rsd)) < 1e-13:
            break
        x = x - np.linalg.solve(jac[0], rsd)
    return x
