"""Reference solutions and setups for the idealized benchmark suite.

Three experiments: a compact-support travelling vortex with a closed-form
solution (convergence and AMR validation), a lake at rest over a
discontinuous bathymetry (well-balance), and a frictional channel flow whose
steady state solves a first-order ODE integrated here to reference accuracy.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .physics import GRAVITY, BoundaryCondition


# -- travelling vortex ------------------------------------------------------

def vortex_H(x):
    """Antiderivative entering the vortex depth profile (even, C^inf)."""
    x = np.asarray(x, dtype=float)
    c = np.cos(x)
    s = np.sin(x)
    c2 = np.cos(2.0 * x)
    s2 = np.sin(2.0 * x)
    return (35.0 * c2 / 384.0
            + 35.0 * x * s2 / 192.0
            + c ** 6 * (c ** 2 / 64.0 + 7.0 / 288.0)
            + 35.0 * c2 ** 2 / 3072.0
            + 35.0 * x ** 2 / 256.0
            + 35.0 * x * c2 * s2 / 768.0
            + x * c ** 5 * s * (c ** 2 + 7.0 / 6.0) / 8.0)


@dataclass(frozen=True)
class VortexParams:
    h0: float = 1.0
    h_min: float = 0.9
    u_inf: float = 6.0
    r0: float = 0.25
    x0: float = 0.5
    y0: float = 0.5
    g: float = GRAVITY
    gamma: float = field(init=False)

    def __post_init__(self):
        # strength fixed by the depth constraint h(0) = h_min
        dH = vortex_H(np.pi / 2.0) - vortex_H(0.0)
        gam = (np.pi / (8.0 * self.r0)) * np.sqrt(
            self.g * (self.h0 - self.h_min) / dH)
        object.__setattr__(self, "gamma", float(gam))


def vortex_exact(x, y, t, params: VortexParams = VortexParams()):
    """Exact (h, u, v) of the travelling vortex at time t."""
    p = params
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dx = x - p.x0 - p.u_inf * t
    dy = y - p.y0
    r = np.hypot(dx, dy)
    inside = r < p.r0
    rho = np.where(inside, np.pi * r / p.r0, np.pi)
    h = p.h0 - (4.0 / p.g) * (4.0 * p.gamma * p.r0 / np.pi) ** 2 * (
        vortex_H(np.pi / 2.0) - vortex_H(rho / 2.0))
    omega = np.where(inside, 4.0 * p.gamma * np.cos(rho / 2.0) ** 4, 0.0)
    u = p.u_inf - dy * omega
    v = dx * omega
    return h, u, v


def vortex_state(x, y, t, params: VortexParams = VortexParams()):
    """Exact prognostic fields (zeta, qx, qy); flat bottom z_b = 0."""
    h, u, v = vortex_exact(x, y, t, params)
    return h, h * u, h * v


def vortex_bathymetry(x, y):
    return np.zeros_like(np.asarray(x, dtype=float))


def vortex_bcs(params: VortexParams = VortexParams()):
    """Supercritical inflow (exact data) left, outflow right, walls top/bottom."""
    def exact_state(x, y, t):
        return vortex_state(x, y, t, params)

    inflow = BoundaryCondition("supercritical_inflow", state=exact_state,
                               time_dependent=True)
    outflow = BoundaryCondition("supercritical_outflow")
    wall = BoundaryCondition("wall")
    return {0: inflow, 1: outflow, 2: wall, 3: wall}


VORTEX_DOMAIN = (0.0, 2.0, 0.0, 1.0)
VORTEX_T_END = 1.0 / 6.0


# -- lake at rest over discontinuous bathymetry -----------------------------

LAKE_DOMAIN = (0.0, 2.0, 0.0, 1.0)
LAKE_T_REST = 48.0
LAKE_T_PERT = 0.48


def lake_bathymetry(x, y):
    """z_b = -0.65 exp(psi), discontinuous across (0.9,1.1) x (0.3,0.7).

    The deep-pool branch uses the distances from (0.9, 0.5); with the
    stated amplitude this keeps the water column h = 1 + z_b positive
    everywhere (minimum depth about 0.14 m at the pool's far corner).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    inside = (x > 0.9) & (x < 1.1) & (y > 0.3) & (y < 0.7)
    psi_in = np.sqrt((x - 0.9) ** 2 + (y - 0.5) ** 2)
    psi_out = -5.0 * (x - 0.9) ** 2 - 50.0 * (y - 0.5) ** 2
    return -0.65 * np.exp(np.where(inside, psi_in, psi_out))


def lake_rest_initial(x, y):
    return np.ones_like(np.asarray(x, dtype=float))


def lake_perturbation_initial(x, y):
    """Flat surface plus a +0.01 m band on the closed interval [0.05, 0.15]."""
    x = np.asarray(x, dtype=float)
    return 1.0 + np.where((x >= 0.05) & (x <= 0.15), 0.01, 0.0)


def lake_bcs(nonreflecting_left=False):
    wall = BoundaryCondition("wall")
    if not nonreflecting_left:
        return {0: wall, 1: wall, 2: wall, 3: wall}
    far = BoundaryCondition(
        "nonreflecting",
        zeta=lambda x, y, t: np.ones_like(np.asarray(x, dtype=float)),
        qx=lambda x, y, t: np.zeros_like(np.asarray(x, dtype=float)),
        qy=lambda x, y, t: np.zeros_like(np.asarray(x, dtype=float)))
    return {0: far, 1: wall, 2: wall, 3: wall}


# -- channel flow with friction ---------------------------------------------

CHANNEL_L = 100.0


@dataclass(frozen=True)
class ChannelConfig:
    name: str
    q0: float
    zb0: float
    c0: float
    manning_n: float
    profile: str = "cos4"       # cos4 | two_tanh
    L: float = CHANNEL_L
    g: float = GRAVITY
    zeta_out: float = 0.0       # prescribed outflow elevation


CHANNEL_CONFIGS = {
    "standard": ChannelConfig("standard", 5.0, 2.0, 20.0, 0.065),
    "strong_friction": ChannelConfig("strong_friction", 5.0, 4.5, 20.0, 1.0),
    "irregular": ChannelConfig("irregular", 5.0, 3.0, 1.0, 0.065,
                               profile="two_tanh"),
}


def channel_bathymetry(config: ChannelConfig):
    """z_b(x) profile and its derivative for one channel configuration."""
    L, zb0, c0 = config.L, config.zb0, config.c0

    if config.profile == "cos4":
        def zb(x, y=None):
            x = np.asarray(x, dtype=float)
            arg = np.pi * (x - L / 2.0) / (2.0 * c0)
            bump = np.where(np.abs(x - L / 2.0) <= c0,
                            zb0 * np.cos(arg) ** 4, 0.0)
            return 4.9 + 0.001 * x - bump

        def dzb(x):
            x = np.asarray(x, dtype=float)
            arg = np.pi * (x - L / 2.0) / (2.0 * c0)
            inside = np.abs(x - L / 2.0) <= c0
            dbump = np.where(
                inside,
                -4.0 * zb0 * np.cos(arg) ** 3 * np.sin(arg)
                * np.pi / (2.0 * c0), 0.0)
            return 0.001 - dbump
    elif config.profile == "two_tanh":
        def zb(x, y=None):
            x = np.asarray(x, dtype=float)
            return (4.9 + 0.001 * x
                    - 0.5 * zb0 * (np.tanh((x - 0.4 * L) / c0)
                                   - np.tanh((x - 0.5 * L) / c0))
                    - 0.25 * zb0 * (np.tanh((x - 0.55 * L) / c0)
                                    - np.tanh((x - 0.6 * L) / c0)))

        def dzb(x):
            x = np.asarray(x, dtype=float)
            sech2 = lambda s: 1.0 / np.cosh(s) ** 2
            return (0.001
                    - 0.5 * zb0 / c0 * (sech2((x - 0.4 * L) / c0)
                                        - sech2((x - 0.5 * L) / c0))
                    - 0.25 * zb0 / c0 * (sech2((x - 0.55 * L) / c0)
                                         - sech2((x - 0.6 * L) / c0)))
    else:
        raise ConfigError(f"unknown channel profile {config.profile!r}")
    return zb, dzb


def channel_reference(config: ChannelConfig, n_steps: int = 200_000):
    """Steady water depth h(x) by RK44 integration of the balance ODE.

    The momentum balance for constant discharge q0 gives
    dh/dx = (-dz_b/dx + gamma(q0, h) q0 / (g h)) / (q0^2/(g h^3) - 1),
    integrated upstream from the outflow where the elevation is prescribed.
    Returns (x grid ascending, h values) for interpolation.
    """
    if n_steps < 100_000:
        raise ConfigError("channel reference needs >= 1e5 ODE steps")
    zb, dzb = channel_bathymetry(config)
    g, q0, n = config.g, config.q0, config.manning_n
    L = config.L

    def slope(x, h):
        denom = q0 * q0 / (g * h ** 3) - 1.0
        if abs(denom) < 1e-6:
            raise ConfigError(
                f"channel flow transitions through critical depth at x={x:.3f};"
                " configuration outside the subcritical envelope")
        gamma = g * n * n * abs(q0) / h ** (7.0 / 3.0)
        return (-dzb(x) + gamma * q0 / (g * h)) / denom

    h_out = config.zeta_out + float(zb(L))
    if h_out <= 0:
        raise ConfigError("non-positive outflow depth")
    dx = -L / n_steps          # integrate upstream
    xs = np.empty(n_steps + 1)
    hs = np.empty(n_steps + 1)
    x, h = L, h_out
    xs[0], hs[0] = x, h
    for k in range(n_steps):
        k1 = slope(x, h)
        k2 = slope(x + dx / 2.0, h + dx * k1 / 2.0)
        k3 = slope(x + dx / 2.0, h + dx * k2 / 2.0)
        k4 = slope(x + dx, h + dx * k3)
        h = h + dx * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        x = L + (k + 1) * dx
        if h <= 0:
            raise ConfigError(f"channel reference went dry at x={x:.3f}")
        xs[k + 1], hs[k + 1] = x, h
    return xs[::-1].copy(), hs[::-1].copy()


def channel_reference_interpolator(config: ChannelConfig,
                                   n_steps: int = 200_000):
    """Callable h(x) built on the dense ODE table (linear interpolation)."""
    xs, hs = channel_reference(config, n_steps)

    def h_of_x(x):
        return np.interp(np.asarray(x, dtype=float), xs, hs)

    return h_of_x


def channel_bcs(config: ChannelConfig):
    """Subcritical: discharge prescribed at inflow, elevation at outflow."""
    q0 = config.q0
    inflow = BoundaryCondition(
        "subcritical_inflow",
        qx=lambda x, y, t: np.full_like(np.asarray(x, dtype=float), q0),
        qy=lambda x, y, t: np.zeros_like(np.asarray(x, dtype=float)))
    outflow = BoundaryCondition(
        "subcritical_outflow",
        zeta=lambda x, y, t: np.full_like(np.asarray(x, dtype=float),
                                          config.zeta_out))
    wall = BoundaryCondition("wall")
    return {0: inflow, 1: outflow, 2: wall, 3: wall}


def channel_initial(config: ChannelConfig, op):
    """Start from still water at the outflow elevation."""
    zeta = op.zeros() + config.zeta_out
    qx = op.zeros()
    qy = op.zeros()
    return zeta, qx, qy


# -- registry ----------------------------------------------------------------

BENCHMARKS = {
    "vortex": "travelling vortex (exact solution, convergence, AMR)",
    "lake_rest": "lake at rest over discontinuous bathymetry (C-property)",
    "lake_perturbation": "small free-surface perturbation over the lake",
    "channel_standard": "frictional channel, smooth bump (Table 3 row 1)",
    "channel_strong_friction": "frictional channel, strong friction",
    "channel_irregular": "frictional channel, two steep obstacles",
}
