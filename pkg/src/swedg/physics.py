"""Physical parameters and boundary conditions for the shallow water model."""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import ConfigError

GRAVITY = 9.81

_PRESSURE_CODES = {
    "tumolo": kernels.PRESSURE_TUMOLO,
    "orlando": kernels.PRESSURE_ORLANDO,
}

_BC_CODES = {
    "wall": kernels.BC_WALL,
    "supercritical_inflow": kernels.BC_SUPER_INFLOW,
    "supercritical_outflow": kernels.BC_SUPER_OUTFLOW,
    "nonreflecting": kernels.BC_NONREFLECTING,
    "subcritical_inflow": kernels.BC_SUB_INFLOW,
    "subcritical_outflow": kernels.BC_SUB_OUTFLOW,
}

_NEEDS_DATA = {kernels.BC_SUPER_INFLOW, kernels.BC_NONREFLECTING,
               kernels.BC_SUB_INFLOW, kernels.BC_SUB_OUTFLOW}


@dataclass
class Physics:
    """Model constants shared by all kernels.

    nu_c is the tracer diffusion coefficient, computed from the
    dimensionless constant C as nu_c = C * (2^(n_max - 1) * r)^-2 by
    :func:`tracer_diffusion`.
    """

    g: float = GRAVITY
    manning_n: float = 0.0
    nu_c: float = 0.0
    pressure_form: str = "tumolo"
    reaction: Optional[Callable] = None

    def __post_init__(self):
        if self.pressure_form not in _PRESSURE_CODES:
            raise ConfigError(
                f"unknown pressure form {self.pressure_form!r}; "
                f"expected one of {sorted(_PRESSURE_CODES)}")
        if self.g <= 0:
            raise ConfigError(f"gravity must be positive, got {self.g}")
        if self.manning_n < 0:
            raise ConfigError("Manning coefficient must be non-negative")

    @property
    def pressure_code(self) -> int:
        return _PRESSURE_CODES[self.pressure_form]

    def reaction_at(self, op, conc, t):
        """Reaction source at the volume quadrature points, shape (ne, nq)."""
        if self.reaction is None:
            return np.zeros_like(op.zb_vol)
        cq = op.at_volume_qpoints(conc)
        x = op.xq_vol[:, :, 0]
        y = op.xq_vol[:, :, 1]
        return np.asarray(self.reaction(cq, x, y, t), dtype=float)


def tracer_diffusion(C: float, degree: int, n_max: int) -> float:
    """Grid-aware tracer diffusion nu_c = C / (2^(n_max-1) * r)^2."""
    if C == 0.0:
        return 0.0
    r = max(degree, 1)
    return C / float(2 ** (n_max - 1) * r) ** 2


@dataclass
class BoundaryCondition:
    """One boundary condition attached to a domain-side tag.

    kind selects the ghost-state construction; zeta/qx/qy are callables
    (x, y, t) -> array for the kinds that prescribe far-field data, or a
    single combined callable ``state(x, y, t) -> (zeta, qx, qy)``.
    tracer_value, if set, is imposed where the flow enters the domain.
    Mark time-varying data with ``time_dependent=True``; constant data is
    evaluated once per mesh and cached.
    """

    kind: str = "wall"
    zeta: Optional[Callable] = None
    qx: Optional[Callable] = None
    qy: Optional[Callable] = None
    state: Optional[Callable] = None
    tracer_value: Optional[float] = None
    time_dependent: bool = False

    code: int = field(init=False)

    def __post_init__(self):
        if self.kind not in _BC_CODES:
            raise ConfigError(f"unknown boundary condition {self.kind!r}; "
                              f"expected one of {sorted(_BC_CODES)}")
        self.code = _BC_CODES[self.kind]
        if self.state is not None:
            return
        if self.code in _NEEDS_DATA:
            needed = []
            if self.code in (kernels.BC_SUPER_INFLOW, kernels.BC_NONREFLECTING):
                needed = [("zeta", self.zeta), ("qx", self.qx), ("qy", self.qy)]
            elif self.code == kernels.BC_SUB_INFLOW:
                needed = [("qx", self.qx), ("qy", self.qy)]
            else:
                needed = [("zeta", self.zeta)]
            for name, fn in needed:
                if fn is None:
                    raise ConfigError(
                        f"boundary condition {self.kind!r} requires {name}")

    def data(self, x, y, t):
        """Prescribed (zeta, qx, qy) at points, zeros where not needed."""
        if self.code not in _NEEDS_DATA:
            return None
        if self.state is not None:
            z, u, v = self.state(x, y, t)
            return (np.asarray(z, dtype=float), np.asarray(u, dtype=float),
                    np.asarray(v, dtype=float))
        zero = np.zeros_like(np.asarray(x, dtype=float))
        z = zero if self.zeta is None else np.broadcast_to(
            np.asarray(self.zeta(x, y, t), dtype=float), zero.shape).copy()
        u = zero if self.qx is None else np.broadcast_to(
            np.asarray(self.qx(x, y, t), dtype=float), zero.shape).copy()
        v = zero if self.qy is None else np.broadcast_to(
            np.asarray(self.qy(x, y, t), dtype=float), zero.shape).copy()
        return z, u, v


def wall_everywhere():
    """Wall boundary conditions on all four domain sides."""
    bc = BoundaryCondition("wall")
    return {0: bc, 1: bc, 2: bc, 3: bc}
