"""Tensorized evaluation on the reference quadrilateral [-1,1]^2.

Node ordering is row-major: local index i = iy*(r+1) + ix, with ix along the
first coordinate. Face/side numbering: 0 = left (xi=-1), 1 = right (xi=+1),
2 = bottom (eta=-1), 3 = top (eta=+1). Each face is parametrized by the
surviving reference coordinate, increasing.
"""

import numpy as np

from .errors import MeshError
from .quadrature import NodalBasis1D, QuadratureRule1D, flux_quadrature_for_degree, gauss_legendre

#: sub-face codes for trace tables: whole face, lower half, upper half
SUB_WHOLE, SUB_LO, SUB_HI = 0, 1, 2


def make_basis(degree: int) -> NodalBasis1D:
    if degree == 0:
        return NodalBasis1D.piecewise_constant()
    return NodalBasis1D(degree)


def tensor_points(rule_x, rule_y=None):
    """Tensor grid of two 1D point sets, row-major (y outer), shape (nq, 2)."""
    px = np.asarray(rule_x.points if hasattr(rule_x, "points") else rule_x)
    py = px if rule_y is None else np.asarray(
        rule_y.points if hasattr(rule_y, "points") else rule_y
    )
    X, Y = np.meshgrid(px, py)  # X varies fastest along rows
    return np.column_stack([X.ravel(), Y.ravel()])


def tensor_weights(rule: QuadratureRule1D):
    return np.outer(rule.weights, rule.weights).ravel()


def _sequential_sum(row):
    s = 0.0
    for v in row:
        s += float(v)
    return s


def _snap_row_sums(table, target):
    """Adjust the last entry of each row so the left-to-right float sum of
    the row equals ``target`` exactly.

    Residual kernels contract these tables against nodal coefficients with a
    sequential accumulation; exact row sums make constant fields produce
    bitwise-zero derivatives and bitwise-equal trace values from both sides
    of a face, so uniform steady states are exact fixed points of the
    discretization instead of drifting by an ulp per step.
    """
    flat = table.reshape(-1, table.shape[-1])
    for row in flat:
        for _ in range(200):
            partial = _sequential_sum(row[:-1])
            err = _sequential_sum(row) - target
            if err == 0.0:
                break
            candidate = target - partial
            if candidate != row[-1]:
                row[-1] = candidate
            else:
                row[-1] = np.nextafter(row[-1],
                                       -np.inf if err > 0.0 else np.inf)
        else:
            raise MeshError("could not normalize basis table row sum")


class ReferenceElement:
    """Precomputed basis/quadrature tables for one polynomial degree.

    Holds the volume flux-quadrature tables (values and reference gradients),
    the mass-quadrature change-of-basis factors, and the face trace tables
    for whole and half faces (non-conforming neighbors).
    """

    def __init__(self, degree: int):
        self.degree = degree
        self.basis1d = make_basis(degree)
        n1 = self.basis1d.n
        self.n_nodes = n1 * n1
        # nodal points of the element, row-major
        self.nodes = tensor_points(self.basis1d.nodes, self.basis1d.nodes)

        # --- volume quadrature (flux rule, exactness 3r) ---
        if degree == 0:
            self.flux_rule = gauss_legendre(1)
        else:
            self.flux_rule = flux_quadrature_for_degree(degree)
        fr = self.flux_rule
        self.nq1 = fr.n
        self.nq_vol = fr.n * fr.n
        self.qpts_vol = tensor_points(fr, fr)
        self.qwts_vol = tensor_weights(fr)
        vx = self.basis1d.eval(fr.points)       # (nq1, n1)
        dx = self.basis1d.eval_deriv(fr.points)
        self.V = self._tensor_table(vx, vx)
        self.Dxi = self._tensor_table(vx, dx)   # d/dxi
        self.Deta = self._tensor_table(dx, vx)  # d/deta
        _snap_row_sums(self.Dxi, 0.0)
        _snap_row_sums(self.Deta, 0.0)

        # --- mass quadrature (r+1 Gauss-Legendre points per direction) ---
        self.mass_rule = gauss_legendre(n1)
        mr = self.mass_rule
        self.nq_mass = n1 * n1
        self.qpts_mass = tensor_points(mr, mr)
        self.qwts_mass = tensor_weights(mr)
        s1 = self.basis1d.eval(mr.points)       # (n1, n1): psi_j(xq)
        # S[i, q] = psi_i(x_q); with n1 points per direction S is square.
        self.S1 = s1.T
        self.S1inv = np.linalg.inv(self.S1)
        self.S = np.kron(self.S1, self.S1)      # (nn, nq_mass) row-major consistent
        self.Sinv = np.kron(self.S1inv, self.S1inv)
        # values table at mass points, (nq_mass, nn), for field evaluation
        self.Vmass = self._tensor_table(s1, s1)

        # --- face trace tables ---
        # E[side][sub] has shape (nfq, nn): basis values at the face
        # quadrature points of that (sub-)face, in increasing face parameter.
        t = fr.points
        self.nq_face = fr.n
        self.face_wts = fr.weights
        sub_params = {
            SUB_WHOLE: t,
            SUB_LO: 0.5 * (t - 1.0),   # image of the fine face in the coarse one
            SUB_HI: 0.5 * (t + 1.0),
        }
        self.E = np.empty((4, 3, self.nq_face, self.n_nodes))
        for sub, tp in sub_params.items():
            col = np.full(len(tp), -1.0)
            # side 0: xi=-1, param eta ; side 1: xi=+1
            self.E[0, sub] = self.eval_at(np.column_stack([col, tp]))
            self.E[1, sub] = self.eval_at(np.column_stack([-col, tp]))
            # side 2: eta=-1, param xi ; side 3: eta=+1
            self.E[2, sub] = self.eval_at(np.column_stack([tp, col]))
            self.E[3, sub] = self.eval_at(np.column_stack([tp, -col]))
        _snap_row_sums(self.E, 1.0)

        # --- child embedding (refinement transfer) ---
        # Injection matrices: parent basis evaluated at the node positions of
        # child quadrant k (kx + 2*ky ordering), shape (nn, nn).
        self.inject = []
        # Parent-basis values at child flux quadrature points (projection rhs)
        self.child_qvals = []
        for ky in (0, 1):
            for kx in (0, 1):
                off = np.array([kx - 0.5, ky - 0.5])
                child_nodes = 0.5 * self.nodes + off * 1.0
                self.inject.append(self.eval_at(child_nodes))
                child_q = 0.5 * self.qpts_vol + off * 1.0
                self.child_qvals.append(self.eval_at(child_q))

    @staticmethod
    def _tensor_table(ty, tx):
        """Combine 1D tables tx (points, n1) and ty (points, n1).

        Row q = qy*npts+qx ... both tables are indexed by the same point list
        here, so the result is T[q, iy*n1+ix] = ty[q, iy] * tx[q, ix] after
        tensoring point grids.
        """
        npx, n1 = tx.shape
        npy = ty.shape[0]
        if npx == npy:
            # tensor over the same 1D point list
            out = np.einsum("qj,pi->qpji", ty, tx)  # (npy, npx, n1, n1)
            return out.reshape(npy * npx, n1 * n1)
        raise ValueError("mismatched 1D tables")

    def eval_at(self, ref_pts):
        """Basis values at arbitrary reference points, shape (npts, nn)."""
        ref_pts = np.asarray(ref_pts, dtype=float)
        vx = self.basis1d.eval(ref_pts[:, 0])
        vy = self.basis1d.eval(ref_pts[:, 1])
        return np.einsum("qj,qi->qji", vy, vx).reshape(len(ref_pts), self.n_nodes)

    def grad_at(self, ref_pts):
        """Reference gradients at arbitrary points, shapes (npts, nn) x2."""
        ref_pts = np.asarray(ref_pts, dtype=float)
        vx = self.basis1d.eval(ref_pts[:, 0])
        vy = self.basis1d.eval(ref_pts[:, 1])
        dx = self.basis1d.eval_deriv(ref_pts[:, 0])
        dy = self.basis1d.eval_deriv(ref_pts[:, 1])
        gxi = np.einsum("qj,qi->qji", vy, dx).reshape(len(ref_pts), self.n_nodes)
        geta = np.einsum("qj,qi->qji", dy, vx).reshape(len(ref_pts), self.n_nodes)
        return gxi, geta


class MassFactorization:
    """Factorized (weighted) block mass systems M = S J S^T per element.

    S holds basis values at the r+1-point Gauss-Legendre grid (a Kronecker
    product of 1D factors); J is the per-element diagonal of Jacobian
    determinant x weight x optional pointwise coefficient. The inverse acts
    as M^-1 = S^-T J^-1 S^-1 block-locally.
    """

    def __init__(self, ref: ReferenceElement, detjw_mass, coefficient=None):
        detjw_mass = np.asarray(detjw_mass, dtype=float)
        if detjw_mass.ndim == 1:
            detjw_mass = detjw_mass[None, :]
        J = detjw_mass if coefficient is None else detjw_mass * np.asarray(coefficient)
        if np.any(J <= 0.0):
            raise MeshError(
                "non-positive diagonal in mass factorization: inverted/collapsed "
                "cell or non-positive depth/friction coefficient"
            )
        self.ref = ref
        self.J = J
        self.S = ref.S
        self.Sinv = ref.Sinv

    def apply(self, coeffs):
        """M @ coeffs for nodal blocks shaped (..., ne, nn)."""
        vals = coeffs @ self.S          # values at quadrature points
        return (vals * self.J) @ self.S.T

    def apply_inverse(self, rhs):
        """Solve M x = rhs block-locally, cost O((r+1)^3) per element."""
        u = rhs @ self.Sinv.T
        u = u / self.J
        return u @ self.Sinv
