"""Mesh-to-mesh solution transfer: exactness and conservation."""

import numpy as np
import pytest

from swedg.discretization import SpatialOperator, transfer_field, transfer_fields
from swedg.mesh import COARSEN, KEEP, REFINE, adapt, build_cartesian


def flat(x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


def make_op(mesh, degree):
    return SpatialOperator(mesh, degree, flat)


def poly_field(op, degree):
    r = degree
    f = lambda x, y: (2.0 * x - y) ** r + 0.3 * x * y ** max(r - 1, 0) - 1.0
    return op.interpolate(f), f


def refine_marks(mesh, idx):
    marks = np.full(mesh.n_elements, KEEP)
    marks[idx] = REFINE
    return marks


@pytest.mark.parametrize("degree", [1, 2, 3])
class TestTransfer:
    def test_injection_exact_on_polynomials(self, degree):
        mesh = build_cartesian(2, 2, (0.0, 1.0, 0.0, 1.0),
                               distortion=dict(region=(0, 1, 0, 1),
                                               amplitude=0.2, seed=9))
        op = make_op(mesh, degree)
        u, f = poly_field(op, degree)
        fine_mesh, ops = adapt(mesh, refine_marks(mesh, 1))
        fine_op = make_op(fine_mesh, degree)
        v = transfer_field(op, fine_op, ops, u)
        np.testing.assert_allclose(v, fine_op.interpolate(f), atol=1e-11)

    def test_two_level_injection_path(self, degree):
        mesh = build_cartesian(1, 1, (0.0, 1.0, 0.0, 1.0))
        op = make_op(mesh, degree)
        u, f = poly_field(op, degree)
        m1, ops1 = adapt(mesh, refine_marks(mesh, 0))
        m2, ops2 = adapt(m1, refine_marks(m1, np.arange(4)))
        # transfer directly across two levels using composed adapt of the
        # original mesh: refine everything twice in one plan
        op2 = make_op(m2, degree)
        op1 = make_op(m1, degree)
        v1 = transfer_field(op, op1, ops1, u)
        v2 = transfer_field(op1, op2, ops2, v1)
        np.testing.assert_allclose(v2, op2.interpolate(f), atol=1e-11)

    def test_refine_then_coarsen_round_trip_exact(self, degree):
        mesh = build_cartesian(2, 2, (0.0, 1.0, 0.0, 1.0),
                               distortion=dict(region=(0, 1, 0, 1),
                                               amplitude=0.15, seed=12))
        op = make_op(mesh, degree)
        u, _ = poly_field(op, degree)
        fine_mesh, fops = adapt(mesh, refine_marks(mesh, 0))
        fine_op = make_op(fine_mesh, degree)
        v = transfer_field(op, fine_op, fops, u)
        marks = np.where(fine_mesh.level == 2, COARSEN, KEEP)
        back_mesh, bops = adapt(fine_mesh, marks)
        assert back_mesh.leaf_keys == mesh.leaf_keys
        back_op = make_op(back_mesh, degree)
        w = transfer_field(fine_op, back_op, bops, v)
        np.testing.assert_allclose(w, u, atol=1e-10)

    def test_constant_field_transfers_bitwise(self, degree):
        # both injection and projection must reproduce a constant exactly,
        # so a state of rest stays a fixed point across mesh adaptation
        mesh = build_cartesian(3, 2, (0.0, 1.5, 0.0, 1.0),
                               distortion=dict(region=(0, 1.5, 0, 1),
                                               amplitude=0.2, seed=4))
        op = make_op(mesh, degree)
        c = 0.1 + 1.0 / 3.0
        u = np.full((mesh.n_elements, op.ref.n_nodes), c)
        fine_mesh, fops = adapt(mesh, refine_marks(mesh, [0, 4]))
        fine_op = make_op(fine_mesh, degree)
        v = transfer_field(op, fine_op, fops, u)
        np.testing.assert_array_equal(v, c)
        marks = np.where(fine_mesh.level == 2, COARSEN, KEEP)
        back_mesh, bops = adapt(fine_mesh, marks)
        w = transfer_field(fine_op, make_op(back_mesh, degree), bops, v)
        np.testing.assert_array_equal(w, c)

    def test_projection_conserves_volume(self, degree):
        # L2 projection preserves element means, so coarsening an arbitrary
        # (non-polynomial-representable) fine field keeps the integral
        mesh = build_cartesian(2, 2, (0.0, 1.0, 0.0, 1.0))
        fine_mesh, _ = adapt(mesh, refine_marks(mesh, np.arange(4)))
        fine_op = make_op(fine_mesh, degree)
        rng = np.random.default_rng(5)
        u = rng.standard_normal((fine_mesh.n_elements, fine_op.ref.n_nodes))
        marks = np.full(fine_mesh.n_elements, COARSEN)
        back_mesh, bops = adapt(fine_mesh, marks)
        back_op = make_op(back_mesh, degree)
        w = transfer_field(fine_op, back_op, bops, u)
        vol_fine = fine_op.integrate_volume(fine_op.at_volume_qpoints(u))
        vol_back = back_op.integrate_volume(back_op.at_volume_qpoints(w))
        assert vol_back == pytest.approx(vol_fine, abs=1e-12)


def test_transfer_fields_passes_none_through():
    mesh = build_cartesian(2, 1, (0.0, 2.0, 0.0, 1.0))
    op = make_op(mesh, 1)
    u = op.zeros() + 1.0
    new_mesh, ops = adapt(mesh, refine_marks(mesh, 0))
    new_op = make_op(new_mesh, 1)
    out = transfer_fields(op, new_op, ops, [u, None])
    assert out[1] is None
    np.testing.assert_allclose(out[0], 1.0, atol=1e-13)
