"""Residual assembly: dense oracles, well-balance, conservation, stability."""

import numpy as np
import pytest

from swedg.discretization import SpatialOperator
from swedg.errors import NegativeDepthError
from swedg.mesh import KEEP, REFINE, adapt, build_cartesian
from swedg.physics import BoundaryCondition, Physics, wall_everywhere

WALLS = wall_everywhere()


def flat_bottom(x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


def bumpy_bottom(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 0.3 * np.sin(2.0 * x) * np.cos(3.0 * y) - 0.1 * x


def distorted_mesh(nx=3, ny=3, extent=(0.0, 1.0, 0.0, 1.0), seed=5):
    return build_cartesian(nx, ny, extent,
                           distortion=dict(region=extent, amplitude=0.2,
                                           seed=seed))


def hanging_mesh(nx=3, ny=3, extent=(0.0, 1.0, 0.0, 1.0)):
    mesh = build_cartesian(nx, ny, extent)
    marks = np.full(mesh.n_elements, KEEP)
    marks[nx * ny // 2] = REFINE
    mesh, _ = adapt(mesh, marks)
    return mesh


def continuity_oracle(op, zeta, qx, qy, g):
    """Dense numpy re-derivation of the continuity residual (wall BCs)."""
    ref = op.ref
    ne, nn = zeta.shape
    # volume: integral of q . grad(v)
    gxi = ref.Dxi[None, :, :]
    geta = ref.Deta[None, :, :]
    gx = op.jinv[:, :, 0:1] * gxi + op.jinv[:, :, 2:3] * geta
    gy = op.jinv[:, :, 1:2] * gxi + op.jinv[:, :, 3:4] * geta
    qxv = op.at_volume_qpoints(qx)
    qyv = op.at_volume_qpoints(qy)
    F = np.einsum("eq,eq,eqi->ei", op.detjw_vol, qxv, gx)
    F += np.einsum("eq,eq,eqi->ei", op.detjw_vol, qyv, gy)
    # faces: central flux plus Lax-Friedrichs penalty on the free surface
    for f, face in enumerate(op.mesh.faces):
        e0, i0 = op.f_e0[f], op.f_ei0[f]
        n = op.f_norm[f]
        z0 = zeta[e0] @ op.Etab[i0].T
        q0x = qx[e0] @ op.Etab[i0].T
        q0y = qy[e0] @ op.Etab[i0].T
        if face.elem1 < 0:      # wall: mirrored discharge, same elevation
            un = q0x * n[0] + q0y * n[1]
            z1, q1x, q1y = z0, q0x - 2 * un * n[0], q0y - 2 * un * n[1]
        else:
            e1, i1 = op.f_e1[f], op.f_ei1[f]
            z1 = zeta[e1] @ op.Etab[i1].T
            q1x = qx[e1] @ op.Etab[i1].T
            q1y = qy[e1] @ op.Etab[i1].T
        h0 = z0 + op.zb_face[f]
        h1 = z1 + op.zb_face[f]
        # pointwise local wave speed
        lam_pt = np.maximum(np.abs(q0x * n[0] + q0y * n[1]) / h0 + np.sqrt(g * h0),
                            np.abs(q1x * n[0] + q1y * n[1]) / h1 + np.sqrt(g * h1))
        flux = 0.5 * ((q0x + q1x) * n[0] + (q0y + q1y) * n[1]) \
            + 0.5 * lam_pt * (z0 - z1)
        F[e0] -= (op.f_jw[f] * flux) @ op.Etab[i0]
        if face.elem1 >= 0:
            F[e1] += (op.f_jw[f] * flux) @ op.Etab[i1]
    return F


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_continuity_residual_matches_dense_oracle(degree):
    mesh = distorted_mesh()
    op = SpatialOperator(mesh, degree, flat_bottom)
    rng = np.random.default_rng(42)
    zeta = 2.0 + 0.1 * rng.standard_normal((mesh.n_elements, op.ref.n_nodes))
    qx = 0.5 * rng.standard_normal(zeta.shape)
    qy = 0.5 * rng.standard_normal(zeta.shape)
    phys = Physics()
    out = op.assemble(zeta, qx, qy, None, 0.0, WALLS, phys)
    oracle = continuity_oracle(op, zeta, qx, qy, phys.g)
    np.testing.assert_allclose(out["F"], oracle, atol=1e-11)


@pytest.mark.parametrize("mesh_kind", ["distorted", "hanging"])
@pytest.mark.parametrize("pressure", ["tumolo", "orlando"])
@pytest.mark.parametrize("degree", [1, 2, 3])
def test_well_balance_rest_state_residuals_vanish(mesh_kind, pressure, degree):
    mesh = distorted_mesh() if mesh_kind == "distorted" else hanging_mesh()
    op = SpatialOperator(mesh, degree, bumpy_bottom)
    phys = Physics(pressure_form=pressure, manning_n=0.05)
    zeta = np.ones((mesh.n_elements, op.ref.n_nodes))
    zero = np.zeros_like(zeta)
    out = op.assemble(zeta, zero, zero, None, 0.0, WALLS, phys)
    for key in ("F", "Gx", "Gy", "Lx", "Ly"):
        assert np.max(np.abs(out[key])) < 1e-12, key


@pytest.mark.parametrize("mesh_kind", ["distorted", "hanging"])
def test_mass_conservation_telescoping(mesh_kind):
    # with wall BCs the total continuity residual must vanish: interior
    # fluxes cancel pairwise and wall fluxes are identically zero
    mesh = distorted_mesh() if mesh_kind == "distorted" else hanging_mesh()
    op = SpatialOperator(mesh, 2, flat_bottom)
    rng = np.random.default_rng(3)
    zeta = 1.5 + 0.1 * rng.standard_normal((mesh.n_elements, op.ref.n_nodes))
    qx = 0.3 * rng.standard_normal(zeta.shape)
    qy = 0.3 * rng.standard_normal(zeta.shape)
    out = op.assemble(zeta, qx, qy, None, 0.0, WALLS, Physics())
    # sum over all test functions = integral of d h / dt
    assert abs(out["F"].sum()) < 1e-12


def test_tracer_flux_consistent_with_continuity():
    # constant tracer: R must equal c * F exactly (CWC at residual level)
    mesh = hanging_mesh()
    op = SpatialOperator(mesh, 2, bumpy_bottom)
    rng = np.random.default_rng(8)
    zeta = 1.5 + 0.05 * rng.standard_normal((mesh.n_elements, op.ref.n_nodes))
    qx = 0.2 * rng.standard_normal(zeta.shape)
    qy = 0.2 * rng.standard_normal(zeta.shape)
    c_val = 3.7
    conc = np.full_like(zeta, c_val)
    out = op.assemble(zeta, qx, qy, conc, 0.0, WALLS,
                      Physics(nu_c=1e-3))
    np.testing.assert_allclose(out["R"], c_val * out["F"], atol=1e-10)


def test_friction_residual_matches_manning_law():
    mesh = build_cartesian(2, 2, (0.0, 1.0, 0.0, 1.0))
    op = SpatialOperator(mesh, 1, flat_bottom)
    phys = Physics(manning_n=0.1)
    h0, u0 = 2.0, 0.7
    zeta = np.full((mesh.n_elements, op.ref.n_nodes), h0)
    qx = np.full_like(zeta, h0 * u0)
    qy = np.zeros_like(zeta)
    out = op.assemble(zeta, qx, qy, None, 0.0, WALLS, phys)
    gam = phys.g * phys.manning_n ** 2 * (h0 * u0) / h0 ** (7.0 / 3.0)
    # Lx_i = -integral gamma qx v_i; with everything constant this is
    # -gamma*qx * integral v_i = -gamma*qx * (M @ 1)_i
    ones = np.ones_like(zeta)
    expect = -gam * (h0 * u0) * op.mass_apply(ones)
    np.testing.assert_allclose(out["Lx"], expect, atol=1e-12)
    np.testing.assert_allclose(out["Ly"], 0.0, atol=1e-12)


def test_wave_speed_estimate():
    mesh = build_cartesian(4, 2, (0.0, 2.0, 0.0, 1.0))
    op = SpatialOperator(mesh, 1, flat_bottom)
    h0, u0 = 1.44, 0.5
    zeta = np.full((mesh.n_elements, op.ref.n_nodes), h0)
    qx = np.full_like(zeta, h0 * u0)
    qy = np.zeros_like(zeta)
    out = op.assemble(zeta, qx, qy, None, 0.0, WALLS, Physics())
    lam_exp = u0 + np.sqrt(9.81 * h0)
    assert out["lam_max"] == pytest.approx(lam_exp, rel=1e-12)
    assert out["hmin"] == pytest.approx(h0, rel=1e-12)


def test_negative_depth_raises():
    mesh = build_cartesian(2, 2, (0.0, 1.0, 0.0, 1.0))
    op = SpatialOperator(mesh, 1, flat_bottom)
    zeta = np.full((mesh.n_elements, op.ref.n_nodes), 1.0)
    zeta[0] = -0.5
    zero = np.zeros_like(zeta)
    with pytest.raises(NegativeDepthError) as exc:
        op.assemble(zeta, zero, zero, None, 0.0, WALLS, Physics(),
                    time_for_error=1.25)
    assert exc.value.time == 1.25


def _semidiscrete_rhs(op, bcs, phys):
    ne, nn = op.mesh.n_elements, op.ref.n_nodes
    nd = ne * nn

    def rhs(u):
        zeta = u[:nd].reshape(ne, nn)
        qx = u[nd:2 * nd].reshape(ne, nn)
        qy = u[2 * nd:].reshape(ne, nn)
        out = op.assemble(zeta, qx, qy, None, 0.0, bcs, phys)
        return np.concatenate([
            op.mass_solve(out["F"]).ravel(),
            op.mass_solve(out["Gx"] + out["Lx"]).ravel(),
            op.mass_solve(out["Gy"] + out["Ly"]).ravel()])

    return rhs, 3 * nd


@pytest.mark.parametrize("mesh_kind", ["conforming", "hanging"])
def test_semidiscrete_operator_is_dissipative(mesh_kind):
    """Linearized stability: all Jacobian eigenvalues in the left half-plane.

    The finite-difference Jacobian about the lake-at-rest state must have
    max Re(lambda) ~ 0 (up to FD noise); a wrong penalty sign in the
    numerical flux flips this to O(+10) and is caught here.
    """
    if mesh_kind == "conforming":
        mesh = build_cartesian(2, 2, (0.0, 1.0, 0.0, 1.0))
    else:
        mesh = hanging_mesh(2, 2)
    op = SpatialOperator(mesh, 1, flat_bottom)
    phys = Physics()
    rhs, n = _semidiscrete_rhs(op, WALLS, phys)
    u0 = np.concatenate([np.ones(n // 3), np.zeros(2 * (n // 3))])
    eps = 1e-7
    J = np.empty((n, n))
    for j in range(n):
        du = np.zeros(n)
        du[j] = eps
        J[:, j] = (rhs(u0 + du) - rhs(u0 - du)) / (2 * eps)
    eigs = np.linalg.eigvals(J)
    assert eigs.real.max() < 1e-4, eigs.real.max()
    # and the operator is not trivially zero
    assert np.abs(eigs).max() > 1.0


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_bathymetry_modes_agree_for_resolved_bottom(degree):
    # a degree-r polynomial bottom is represented exactly by all three modes
    def poly_bottom(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return 0.1 * (x + y) ** min(degree, 2) - 0.2

    mesh = build_cartesian(3, 2, (0.0, 1.5, 0.0, 1.0))
    ops = {mode: SpatialOperator(mesh, degree, poly_bottom,
                                 bathymetry_mode=mode)
           for mode in ("quadrature", "interpolated", "projected")}
    base = ops["quadrature"]
    for mode in ("interpolated", "projected"):
        np.testing.assert_allclose(ops[mode].zb_vol, base.zb_vol, atol=1e-12)
        np.testing.assert_allclose(ops[mode].zb_face, base.zb_face, atol=1e-12)


def test_weighted_mass_roundtrip():
    mesh = distorted_mesh(2, 2)
    op = SpatialOperator(mesh, 2, flat_bottom)
    rng = np.random.default_rng(1)
    u = rng.standard_normal((mesh.n_elements, op.ref.n_nodes))
    w = 1.0 + 0.3 * rng.random((mesh.n_elements, op.ref.nq_mass))
    v = op.weighted_mass_solve(op.weighted_mass_apply(u, w), w)
    np.testing.assert_allclose(v, u, atol=1e-11)


def test_l2_error_of_exact_interpolant():
    mesh = build_cartesian(3, 3, (0.0, 1.0, 0.0, 1.0))
    op = SpatialOperator(mesh, 2, flat_bottom)
    f = lambda x, y: x ** 2 - 0.5 * x * y + y
    u = op.interpolate(f)
    assert op.l2_error(u, f) < 1e-13
    # and a known norm: |1|_L2 over the unit square
    assert op.l2_norm(op.interpolate(lambda x, y: np.ones_like(x))) \
        == pytest.approx(1.0, abs=1e-13)


def test_total_area_and_volume():
    mesh = distorted_mesh(3, 3, (0.0, 2.0, 0.0, 1.0))
    op = SpatialOperator(mesh, 2, flat_bottom)
    assert op.total_area == pytest.approx(2.0, abs=1e-12)
    zeta = np.full((mesh.n_elements, op.ref.n_nodes), 0.75)
    assert op.total_volume(zeta) == pytest.approx(1.5, abs=1e-12)
