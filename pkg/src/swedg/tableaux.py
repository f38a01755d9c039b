"""Butcher tableaux for the explicit and IMEX Runge-Kutta integrators."""

from dataclasses import dataclass

import numpy as np

_TOL = 1e-14


@dataclass(frozen=True)
class ButcherTableau:
    """One Runge-Kutta coefficient set (a, b, c) with its classical order."""

    name: str
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    order: int
    explicit: bool = True

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))

    @property
    def stages(self):
        return len(self.b)

    def validate(self):
        """Check structure, row sums and order conditions; return deviations."""
        s = self.stages
        errs = {}
        if self.a.shape != (s, s):
            raise ValueError(f"{self.name}: A must be {s}x{s}")
        if self.explicit:
            if np.any(np.abs(np.triu(self.a)) > 0):
                raise ValueError(f"{self.name}: explicit A must be strictly "
                                 "lower triangular")
        elif np.any(np.abs(np.triu(self.a, 1)) > 0):
            raise ValueError(f"{self.name}: DIRK A must be lower triangular")
        errs["row_sum"] = float(np.max(np.abs(self.a.sum(axis=1) - self.c)))
        errs["order1"] = abs(self.b.sum() - 1.0)
        if self.order >= 2:
            errs["order2"] = abs(self.b @ self.c - 0.5)
        if self.order >= 3:
            errs["order3a"] = abs(self.b @ self.c ** 2 - 1.0 / 3.0)
            errs["order3b"] = abs(self.b @ self.a @ self.c - 1.0 / 6.0)
        if self.order >= 4:
            errs["order4a"] = abs(self.b @ self.c ** 3 - 0.25)
            errs["order4b"] = abs((self.b * self.c) @ self.a @ self.c - 0.125)
            errs["order4c"] = abs(self.b @ self.a @ self.c ** 2 - 1.0 / 12.0)
            errs["order4d"] = abs(self.b @ self.a @ self.a @ self.c - 1.0 / 24.0)
        bad = {k: v for k, v in errs.items() if v > _TOL}
        if bad:
            raise ValueError(f"{self.name}: order conditions violated: {bad}")
        return errs


@dataclass(frozen=True)
class IMEXTableau:
    """Paired explicit and diagonally-implicit tableaux.

    The implicit part only ever multiplies the stiff friction term. Coupling
    requires matching abscissae (c = c-tilde), matching quadrature weights
    (b = b-tilde, which preserves linear invariants) and the mixed
    second-order conditions.
    """

    name: str
    explicit: ButcherTableau
    implicit: ButcherTableau
    order: int

    @property
    def stages(self):
        return self.explicit.stages

    def validate(self):
        errs = {}
        for k, v in self.explicit.validate().items():
            errs["exp_" + k] = v
        for k, v in self.implicit.validate().items():
            errs["imp_" + k] = v
        b, c = self.explicit.b, self.explicit.c
        bt, ct = self.implicit.b, self.implicit.c
        errs["c_match"] = float(np.max(np.abs(c - ct)))
        errs["b_match"] = float(np.max(np.abs(b - bt)))
        if self.order >= 2:
            errs["coupling_b_ct"] = abs(b @ ct - 0.5)
            errs["coupling_bt_c"] = abs(bt @ c - 0.5)
        bad = {k: v for k, v in errs.items() if v > _TOL}
        if bad:
            raise ValueError(f"{self.name}: coupling conditions violated: {bad}")
        return errs


def make_imex_tableau() -> IMEXTableau:
    """Second-order IMEX pair: explicit RK32 with TR-BDF2 as implicit part."""
    chi = 1.0 - np.sqrt(2.0) / 2.0
    a32 = 0.5
    a = np.array([
        [0.0, 0.0, 0.0],
        [2.0 * chi, 0.0, 0.0],
        [1.0 - a32, a32, 0.0],
    ])
    b2 = (1.0 - 2.0 * chi) / (4.0 * chi)
    b = np.array([1.0 - b2 - chi, b2, chi])
    c = np.array([0.0, 2.0 * chi, 1.0])
    at = np.array([
        [0.0, 0.0, 0.0],
        [chi, chi, 0.0],
        [b[0], b[1], b[2]],
    ])
    explicit = ButcherTableau("rk32", a, b, c, order=2)
    implicit = ButcherTableau("tr-bdf2", at, b.copy(), c.copy(), order=2,
                              explicit=False)
    return IMEXTableau("imex-rk32", explicit, implicit, order=2)


def make_rk32_explicit() -> ButcherTableau:
    """The explicit companion of the IMEX pair, run standalone."""
    return make_imex_tableau().explicit


def make_ssp33() -> ButcherTableau:
    a = np.array([
        [0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.25, 0.25, 0.0],
    ])
    b = np.array([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0])
    c = np.array([0.0, 1.0, 0.5])
    return ButcherTableau("ssp33", a, b, c, order=3)


def make_rk44() -> ButcherTableau:
    a = np.zeros((4, 4))
    a[1, 0] = 0.5
    a[2, 1] = 0.5
    a[3, 2] = 1.0
    b = np.array([1.0, 2.0, 2.0, 1.0]) / 6.0
    c = np.array([0.0, 0.5, 0.5, 1.0])
    return ButcherTableau("rk44", a, b, c, order=4)


def make_forward_euler() -> ButcherTableau:
    """First-order scheme for the piecewise-constant (r = 0) reference path."""
    return ButcherTableau("fe", np.zeros((1, 1)), np.array([1.0]),
                          np.array([0.0]), order=1)


SCHEMES = {
    "imex-rk32": make_imex_tableau,
    "rk32-explicit": make_rk32_explicit,
    "ssp33": make_ssp33,
    "rk44": make_rk44,
    "fe-fv": make_forward_euler,
}


def get_tableau(name: str):
    """Look up a scheme by name (see :data:`SCHEMES`)."""
    try:
        return SCHEMES[name.lower()]()
    except KeyError:
        raise KeyError(f"unknown scheme {name!r}; expected one of "
                       f"{sorted(SCHEMES)}") from None


def validate_all():
    """Validate every built-in tableau; returns {name: max deviation}."""
    out = {}
    for name in SCHEMES:
        errs = get_tableau(name).validate()
        out[name] = max(errs.values()) if errs else 0.0
    return out
