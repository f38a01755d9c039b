"""One-dimensional quadrature rules and Gauss-Lobatto nodal bases.

Everything lives on the reference interval [-1, 1]. Nodes and weights are
computed by Newton iteration on Legendre polynomials (tolerance 1e-15,
100-iteration cap) so that results are bit-reproducible across platforms.
"""

from dataclasses import dataclass

import numpy as np

_NEWTON_TOL = 1e-15
_NEWTON_MAXIT = 100


def _legendre_and_derivative(n, x):
    """Evaluate P_n and P_n' at x via the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p0 = np.ones_like(x)
    if n == 0:
        return p0, np.zeros_like(x)
    p1 = x.copy()
    for k in range(1, n):
        p0, p1 = p1, ((2 * k + 1) * x * p1 - k * p0) / (k + 1)
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


@dataclass(frozen=True)
class QuadratureRule1D:
    """Points and positive weights on [-1, 1]."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))

    @property
    def n(self):
        return len(self.points)


def gauss_legendre(n: int) -> QuadratureRule1D:
    """n-point Gauss-Legendre rule, exact for polynomials of degree 2n-1."""
    if n < 1:
        raise ValueError(f"Gauss-Legendre rule needs n >= 1 point, got {n}")
    if n == 1:
        return QuadratureRule1D(np.array([0.0]), np.array([2.0]))
    # Chebyshev initial guess, then Newton on P_n.
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(_NEWTON_MAXIT):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x -= dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    _, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return QuadratureRule1D(x[order], w[order])


def gauss_lobatto_nodes(r: int) -> np.ndarray:
    """The r+1 Gauss-Lobatto points: +-1 and the roots of P_r'.

    r = 0 is rejected here; the piecewise-constant path uses the element
    center by convention (see :func:`NodalBasis1D.piecewise_constant`).
    """
    if r < 1:
        raise ValueError(f"Gauss-Lobatto nodal basis needs degree r >= 1, got {r}")
    if r == 1:
        return np.array([-1.0, 1.0])
    # Interior nodes: roots of P_r', Newton from a Chebyshev-Lobatto guess.
    k = np.arange(1, r)
    x = np.cos(np.pi * k / r)
    for _ in range(_NEWTON_MAXIT):
        p, dp = _legendre_and_derivative(r, x)
        # P_r'' from the Legendre ODE: (1-x^2) P'' = 2 x P' - r (r+1) P
        d2p = (2.0 * x * dp - r * (r + 1) * p) / (1.0 - x * x)
        dx = dp / d2p
        x -= dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    nodes = np.concatenate(([-1.0], np.sort(x), [1.0]))
    return nodes


def flux_quadrature_for_degree(r: int) -> QuadratureRule1D:
    """Face/volume rule with floor(3r/2)+1 points (degree of exactness 3r)."""
    if r < 1:
        raise ValueError(f"flux quadrature needs r >= 1, got {r}")
    return gauss_legendre((3 * r) // 2 + 1)


class NodalBasis1D:
    """Lagrange basis on the r+1 Gauss-Lobatto points of [-1, 1].

    Evaluation uses the barycentric form, with exact cardinality at the
    support points.
    """

    def __init__(self, degree: int, nodes=None):
        if nodes is None:
            nodes = gauss_lobatto_nodes(degree)
        self.degree = degree
        self.nodes = np.asarray(nodes, dtype=float)
        diff = self.nodes[:, None] - self.nodes[None, :]
        np.fill_diagonal(diff, 1.0)
        self.bary_weights = 1.0 / np.prod(diff, axis=1)

    @classmethod
    def piecewise_constant(cls):
        """Degree-0 basis (single node at the element center).

        Used only by the finite-volume reference path; the Gauss-Lobatto
        construction starts at r = 1.
        """
        basis = cls.__new__(cls)
        basis.degree = 0
        basis.nodes = np.array([0.0])
        basis.bary_weights = np.array([1.0])
        return basis

    @property
    def n(self):
        return self.degree + 1

    def eval(self, x):
        """Values of all basis functions at points x, shape (len(x), r+1)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.degree == 0:
            return np.ones((len(x), 1))
        out = np.empty((len(x), self.n))
        for k, xk in enumerate(x):
            d = xk - self.nodes
            hit = np.isclose(d, 0.0, atol=1e-14)
            if hit.any():
                row = np.zeros(self.n)
                row[np.argmax(hit)] = 1.0
            else:
                t = self.bary_weights / d
                row = t / t.sum()
            out[k] = row
        return out

    def eval_deriv(self, x):
        """First derivatives of all basis functions at points x."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.degree == 0:
            return np.zeros((len(x), 1))
        # Differentiation matrix at the nodes, then p'(x) via the Lagrange
        # expansion of p' in the same nodal basis is wrong in general; use
        # the analytic barycentric derivative instead.
        out = np.empty((len(x), self.n))
        for k, xk in enumerate(x):
            d = xk - self.nodes
            hit = np.isclose(d, 0.0, atol=1e-14)
            if hit.any():
                i = int(np.argmax(hit))
                row = np.empty(self.n)
                for j in range(self.n):
                    if j == i:
                        continue
                    row[j] = (self.bary_weights[j] / self.bary_weights[i]) / (
                        self.nodes[i] - self.nodes[j]
                    )
                row[i] = -np.sum(np.delete(row, i))
                out[k] = row
            else:
                t = self.bary_weights / d
                s = t.sum()
                g = t / d
                p = t / s
                out[k] = p * (g.sum() / s) - g / s
        return out

    def diff_matrix(self):
        """Nodal differentiation matrix D[i, j] = psi_j'(node_i)."""
        return self.eval_deriv(self.nodes)
