"""Assemble a runnable problem from a RunConfig and drive it to completion."""

import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import benchmarks as bm
from .bathymetry import load_raster
from .config import RunConfig
from .discretization import SpatialOperator
from .errors import ConfigError, IOFailure
from .mesh import build_cartesian
from .output import write_gauge_csv, write_mass_csv, write_vtk
from .physics import Physics, tracer_diffusion, wall_everywhere
from .stepping import AMRControls, State, TimeControls, run
from .tableaux import get_tableau


@dataclass
class Problem:
    op: SpatialOperator
    state: State
    bcs: dict
    phys: Physics
    exact: Optional[Callable] = None    # (x, y, t) -> (zeta, qx, qy)


def _mesh_from_spec(spec):
    distortion = None
    if spec.distort_region is not None:
        distortion = dict(region=spec.distort_region,
                          amplitude=spec.distort_amplitude,
                          seed=spec.distort_seed)
    return build_cartesian(spec.nx, spec.ny, spec.extent, distortion)


def _bathymetry_callable(cfg, default):
    if cfg.bathymetry.raster is not None:
        return load_raster(cfg.bathymetry.raster, clamp=cfg.bathymetry.clamp)
    return default


def setup(cfg: RunConfig) -> Problem:
    name = cfg.benchmark
    nu_c = tracer_diffusion(cfg.physics.tracer_c, cfg.degree, cfg.amr.n_max)

    if name == "vortex":
        cfg.mesh.extent = bm.VORTEX_DOMAIN
        mesh = _mesh_from_spec(cfg.mesh)
        zb = _bathymetry_callable(cfg, bm.vortex_bathymetry)
        op = SpatialOperator(mesh, cfg.degree, zb, cfg.bathymetry.mode)
        params = bm.VortexParams(g=cfg.physics.g)

        def exact(x, y, t):
            return bm.vortex_state(x, y, t, params)

        zeta = op.interpolate(lambda x, y: bm.vortex_state(x, y, 0.0, params)[0])
        qx = op.interpolate(lambda x, y: bm.vortex_state(x, y, 0.0, params)[1])
        qy = op.interpolate(lambda x, y: bm.vortex_state(x, y, 0.0, params)[2])
        bcs = bm.vortex_bcs(params)
        phys = Physics(g=cfg.physics.g, manning_n=cfg.physics.manning_n,
                       nu_c=nu_c, pressure_form=cfg.physics.pressure_form)
    elif name in ("lake_rest", "lake_perturbation"):
        cfg.mesh.extent = bm.LAKE_DOMAIN
        mesh = _mesh_from_spec(cfg.mesh)
        zb = _bathymetry_callable(cfg, bm.lake_bathymetry)
        op = SpatialOperator(mesh, cfg.degree, zb, cfg.bathymetry.mode)
        init = (bm.lake_rest_initial if name == "lake_rest"
                else bm.lake_perturbation_initial)
        zeta = op.interpolate(init)
        qx, qy = op.zeros(), op.zeros()
        bcs = bm.lake_bcs(nonreflecting_left=(name == "lake_perturbation"))
        phys = Physics(g=cfg.physics.g, manning_n=cfg.physics.manning_n,
                       nu_c=nu_c, pressure_form=cfg.physics.pressure_form)
        exact = None
        if name == "lake_rest":
            def exact(x, y, t):
                one = np.ones_like(np.asarray(x, dtype=float))
                return one, 0.0 * one, 0.0 * one
    elif name.startswith("channel_"):
        chan = bm.CHANNEL_CONFIGS.get(name[len("channel_"):])
        if chan is None:
            raise ConfigError(f"unknown channel configuration {name!r}")
        width = chan.L / max(cfg.mesh.nx, 1) * max(cfg.mesh.ny, 1)
        cfg.mesh.extent = (0.0, chan.L, 0.0, width)
        mesh = _mesh_from_spec(cfg.mesh)
        zbfn, _ = bm.channel_bathymetry(chan)
        zb = _bathymetry_callable(cfg, lambda x, y: zbfn(x))
        op = SpatialOperator(mesh, cfg.degree, zb, cfg.bathymetry.mode)
        zeta = op.zeros() + chan.zeta_out
        qx = op.zeros() + chan.q0
        qy = op.zeros()
        bcs = bm.channel_bcs(chan)
        # the Manning coefficient is part of the benchmark definition
        phys = Physics(g=chan.g, manning_n=chan.manning_n, nu_c=nu_c,
                       pressure_form=cfg.physics.pressure_form)
        href = bm.channel_reference_interpolator(chan)

        def exact(x, y, t, _href=href, _zb=zbfn, _q0=chan.q0):
            h = _href(x)
            return h - _zb(x), np.full_like(h, _q0), np.zeros_like(h)
    elif name == "custom":
        mesh = _mesh_from_spec(cfg.mesh)
        if cfg.bathymetry.raster is None:
            raise ConfigError("custom benchmark requires a bathymetry raster")
        zb = load_raster(cfg.bathymetry.raster, clamp=cfg.bathymetry.clamp)
        op = SpatialOperator(mesh, cfg.degree, zb, cfg.bathymetry.mode)
        zeta = op.zeros()
        qx, qy = op.zeros(), op.zeros()
        bcs = wall_everywhere()
        phys = Physics(g=cfg.physics.g, manning_n=cfg.physics.manning_n,
                       nu_c=nu_c, pressure_form=cfg.physics.pressure_form)
        exact = None
    else:
        raise ConfigError(f"unknown benchmark {name!r}")

    conc = None
    if cfg.physics.tracer:
        conc = op.zeros() + cfg.physics.tracer_initial
    state = State(0.0, zeta, qx, qy, conc)
    return Problem(op=op, state=state, bcs=bcs, phys=phys, exact=exact)


def amr_controls(cfg: RunConfig):
    if not cfg.amr.enabled:
        return None
    return AMRControls(indicator=cfg.amr.indicator, theta_r=cfg.amr.theta_r,
                       theta_c=cfg.amr.theta_c, n_max=cfg.amr.n_max,
                       h_min=cfg.amr.h_min, cadence=cfg.amr.cadence,
                       absolute=cfg.amr.absolute)


def _ensure_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise IOFailure(f"cannot create output directory {path}: {exc}") from exc


def execute(cfg: RunConfig, write_outputs=True):
    """Run a configured problem; returns (problem, final op, state, record)."""
    problem = setup(cfg)
    controls = TimeControls(t_end=cfg.t_end, dt=cfg.dt, cfl=cfg.cfl)
    gauges = np.array(cfg.output.gauges) if cfg.output.gauges else None
    outdir = cfg.output.directory
    observer = None
    if write_outputs and cfg.output.vtk and cfg.output.cadence > 0:
        _ensure_dir(outdir)

        def observer(step, op, state):
            if step % cfg.output.cadence == 0:
                write_vtk(os.path.join(outdir, f"fields_{step:06d}.vtk"),
                          op, state)

    op, state, record = run(problem.op, problem.state, controls,
                            get_tableau(cfg.scheme), problem.bcs,
                            problem.phys, amr=amr_controls(cfg),
                            gauges=gauges, observer=observer)
    if write_outputs:
        _ensure_dir(outdir)
        if cfg.output.vtk:
            write_vtk(os.path.join(outdir, "fields_final.vtk"), op, state)
        write_mass_csv(os.path.join(outdir, "mass.csv"), record)
        if gauges is not None:
            write_gauge_csv(os.path.join(outdir, "gauges.csv"),
                            gauges, record.gauge_rows)
    return problem, op, state, record


def final_errors(problem: Problem, op, state):
    """L2 errors of zeta and |q| against the problem's reference, if any."""
    if problem.exact is None:
        return None
    t = state.t

    def ref_zeta(x, y):
        return problem.exact(x, y, t)[0]

    def ref_qx(x, y):
        return problem.exact(x, y, t)[1]

    def ref_qy(x, y):
        return problem.exact(x, y, t)[2]

    ez = op.l2_error(state.zeta, ref_zeta)
    eqx = op.l2_error(state.qx, ref_qx)
    eqy = op.l2_error(state.qy, ref_qy)
    return dict(zeta=ez, q=float(np.hypot(eqx, eqy)))
