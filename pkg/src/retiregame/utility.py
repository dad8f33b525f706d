"""Felicity functions, their inverse marginals and convex conjugates.

All evaluations accept scalars or numpy arrays and are vectorized.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


class UtilityModel(abc.ABC):
    """Strictly concave felicity ``u`` with ``u'(inf) = 0``.

    Subclasses implement ``u``, ``uprime`` and the raw inverse marginal
    ``_inverse``; ``I`` extends the inverse by zero above ``uprime0`` and
    ``utilde`` defaults to ``u(I(y)) - y I(y)``.
    """

    #: u'(0), possibly +inf
    uprime0: float = math.inf

    @abc.abstractmethod
    def u(self, c): ...

    @abc.abstractmethod
    def uprime(self, c): ...

    @abc.abstractmethod
    def _inverse(self, y): ...

    def I(self, y):  # noqa: E743 - conventional name
        y = np.asarray(y, dtype=float)
        if math.isinf(self.uprime0):
            return self._inverse(y)
        inside = y < self.uprime0
        safe = np.where(inside, y, 0.5 * self.uprime0)
        return np.where(inside, self._inverse(safe), 0.0)

    def utilde(self, y):
        y = np.asarray(y, dtype=float)
        c = self.I(y)
        if math.isinf(self.uprime0):
            return self.u(c) - y * c
        inside = y < self.uprime0
        return np.where(inside, self.u(np.where(inside, c, 1.0)) - y * c, self.u(0.0))

    def utilde_prime(self, y):
        return -self.I(y)


@dataclass(frozen=True)
class CrraSpec:
    gamma: float


class CrraUtility(UtilityModel):
    """u(c) = c^(1-gamma) / (1-gamma)."""

    def __init__(self, gamma: float):
        self.gamma = float(gamma)
        self._p = 1.0 - self.gamma
        self._q = (self.gamma - 1.0) / self.gamma

    def __repr__(self):
        return f"CrraUtility(gamma={self.gamma!r})"

    def u(self, c):
        c = np.asarray(c, dtype=float)
        with np.errstate(divide="ignore"):
            return c**self._p / self._p

    def uprime(self, c):
        return np.asarray(c, dtype=float) ** (-self.gamma)

    def _inverse(self, y):
        return np.asarray(y, dtype=float) ** (-1.0 / self.gamma)

    def utilde(self, y):
        y = np.asarray(y, dtype=float)
        return (self.gamma / (1.0 - self.gamma)) * y**self._q


class LogUtility(UtilityModel):
    """u(c) = ln c."""

    gamma = 1.0

    def __repr__(self):
        return "LogUtility()"

    def u(self, c):
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(c, dtype=float))

    def uprime(self, c):
        return 1.0 / np.asarray(c, dtype=float)

    def _inverse(self, y):
        return 1.0 / np.asarray(y, dtype=float)

    def utilde(self, y):
        return -np.log(np.asarray(y, dtype=float)) - 1.0


def make_crra(spec: CrraSpec | float) -> CrraUtility:
    gamma = spec.gamma if isinstance(spec, CrraSpec) else float(spec)
    if not math.isfinite(gamma) or gamma <= 0:
        raise ValidationError("gamma", "must be positive")
    if gamma == 1.0:
        raise ValidationError("gamma", "gamma = 1 is the log family; use make_log()")
    return CrraUtility(gamma)


def make_log() -> LogUtility:
    return LogUtility()


def from_config(cfg: dict) -> UtilityModel:
    """``{"family": "crra", "gamma": g}`` or ``{"family": "log"}``."""
    family = str(cfg.get("family", "")).lower()
    if family == "crra":
        if "gamma" not in cfg:
            raise ValidationError("utility.gamma", "required for the crra family")
        return make_crra(float(cfg["gamma"]))
    if family == "log":
        return make_log()
    raise ValidationError("utility.family", f"unknown family {family!r}")


def to_config(model: UtilityModel) -> dict:
    if isinstance(model, LogUtility):
        return {"family": "log"}
    if isinstance(model, CrraUtility):
        return {"family": "crra", "gamma": model.gamma}
    return {"family": type(model).__name__}


# ---------------------------------------------------------------------------
# self-consistency


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst_residual: float
    failing_points: list = field(default_factory=list)


@dataclass
class ConsistencyReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def _check(name, grid, residual, tol) -> CheckResult:
    residual = np.asarray(residual, dtype=float)
    bad = ~(residual <= tol)
    worst = float(np.nanmax(residual)) if residual.size else 0.0
    if np.any(np.isnan(residual)):
        worst = math.nan
    return CheckResult(name, not bad.any(), worst, [float(g) for g in grid[bad]])


def conjugate_derivative_error(model: UtilityModel, y, rel_step: float = 1e-4):
    """|central difference of utilde + I|, step ``rel_step * y``."""
    y = np.asarray(y, dtype=float)
    h = rel_step * y
    fd = (model.utilde(y + h) - model.utilde(y - h)) / (2.0 * h)
    return np.abs(fd + model.I(y))


def check_consistency(model: UtilityModel, grid, tol: float = 1e-8) -> ConsistencyReport:
    """Check the inverse, conjugate and derivative identities on ``grid``.

    Residuals are scaled as ``|err| / (1 + |reference|)``; the grid doubles
    as consumption levels for the ``I(u'(c)) = c`` check.
    """
    grid = np.sort(np.asarray(grid, dtype=float))
    if grid.size == 0 or not np.all(np.isfinite(grid)) or np.any(grid <= 0):
        raise ValueError("grid must be non-empty, finite and strictly positive")
    y = grid[grid < model.uprime0]

    c = grid
    inv = np.abs(model.I(model.uprime(c)) - c) / (1.0 + np.abs(c))

    It = model.I(y)
    conj_ref = model.u(It) - y * It
    conj = np.abs(model.utilde(y) - conj_ref) / (1.0 + np.abs(conj_ref))

    dconj = conjugate_derivative_error(model, y) / (1.0 + np.abs(It))

    up = model.uprime(c)
    mono_u = np.append(np.diff(up) >= 0, False)
    mono_i = np.append(np.diff(It) >= 0, False)
    return ConsistencyReport([
        _check("inverse", c, inv, tol),
        _check("conjugate", y, conj, tol),
        _check("conjugate_derivative", y, dconj, tol),
        CheckResult("uprime_decreasing", not mono_u.any(), float(mono_u.sum()), [float(v) for v in c[mono_u]]),
        CheckResult("I_decreasing", not mono_i.any(), float(mono_i.sum()), [float(v) for v in y[mono_i]]),
    ])


def inverse_marginal_exponent(model: UtilityModel, y_small: float = 1e-9) -> float:
    """Local power-law exponent p of I(y) ~ y^p as y -> 0 (log-log slope)."""
    y0, y1 = y_small, 10.0 * y_small
    i0, i1 = float(model.I(y0)), float(model.I(y1))
    return math.log(i1 / i0) / math.log(y1 / y0)


def integrability_holds(model: UtilityModel, n2: float) -> bool:
    """Tail test for  int_0^y eta^{-n2} I(eta) d eta < inf.

    Finite u'(0) makes I vanish near zero, so the integral is trivially finite.
    """
    if math.isfinite(model.uprime0):
        return True
    if isinstance(model, CrraUtility):
        return -n2 - 1.0 / model.gamma + 1.0 > 0
    if isinstance(model, LogUtility):
        return -n2 > 0
    return -n2 + inverse_marginal_exponent(model) + 1.0 > 0
