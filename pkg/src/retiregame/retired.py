"""Post-retirement dual value J_R, its wealth map X_R = -J_R', and V_R."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import xfm
from .errors import RangeError, ValidationError
from .params import MarketParams, derive, merton_constant
from .roots import log_brentq
from .utility import CrraUtility, LogUtility, UtilityModel, integrability_holds


@dataclass(frozen=True)
class RetiredSolution:
    """Evaluators over y > 0.

    ``J, Jp, Jpp, X, Xp`` use the closed forms when the utility family has
    them and the kernel quadrature otherwise; the ``quad_*`` evaluators
    always go through quadrature so both routes stay exercised.
    """

    market: MarketParams
    utility: UtilityModel
    weights: xfm.KernelWeights
    quad: xfm.QuadratureConfig
    closed_form: bool
    _closed: tuple | None = None

    # -- quadrature route --------------------------------------------------
    def quad_J(self, y):
        return xfm.xi(self.utility.utilde, y, self.weights, self.quad)

    def _x_limbs(self, y):
        w = self.weights
        lower = xfm.limb(self.utility.I, y, 1.0 - w.n2, -1, math.inf, (), self.quad)
        upper = xfm.limb(self.utility.I, y, w.n1 - 1.0, 1, math.inf, (), self.quad)
        return lower, upper

    def quad_X(self, y):
        lower, upper = self._x_limbs(y)
        return self.weights.scale * (lower + upper)

    def quad_Xp(self, y):
        w = self.weights
        lower, upper = self._x_limbs(y)
        yy = np.asarray(y, dtype=float)
        return w.scale * ((w.n2 - 1.0) * lower + (w.n1 - 1.0) * upper) / yy

    # -- preferred evaluators ----------------------------------------------
    def J(self, y):
        return self._closed[0](y) if self.closed_form else self.quad_J(y)

    def X(self, y):
        return self._closed[1](y) if self.closed_form else self.quad_X(y)

    def Xp(self, y):
        return self._closed[2](y) if self.closed_form else self.quad_Xp(y)

    def Jp(self, y):
        return -self.X(y)

    def Jpp(self, y):
        return -self.Xp(y)


def _closed_forms(market: MarketParams, utility: UtilityModel) -> tuple[Callable, ...] | None:
    if isinstance(utility, CrraUtility):
        g = utility.gamma
        K = merton_constant(market, g)
        coef = g / (1.0 - g) / K
        q = (g - 1.0) / g
        return (
            lambda y: coef * np.asarray(y, dtype=float) ** q,
            lambda y: np.asarray(y, dtype=float) ** (-1.0 / g) / K,
            lambda y: -(1.0 / g) * np.asarray(y, dtype=float) ** (-1.0 / g - 1.0) / K,
        )
    if isinstance(utility, LogUtility):
        d, r, a = market.delta, market.r, 0.5 * market.theta**2
        const = -(2.0 * d - r - a) / d**2
        return (
            lambda y: -np.log(np.asarray(y, dtype=float)) / d + const,
            lambda y: 1.0 / (d * np.asarray(y, dtype=float)),
            lambda y: -1.0 / (d * np.asarray(y, dtype=float) ** 2),
        )
    return None


def build_retired(market: MarketParams, utility: UtilityModel,
                  quad: xfm.QuadratureConfig = xfm.DEFAULT_QUAD) -> RetiredSolution:
    derived = derive(market)
    if isinstance(utility, CrraUtility):
        if merton_constant(market, utility.gamma) <= 0:
            raise ValidationError("utility.gamma", "infinite post-retirement value (Merton constant K <= 0)")
    if not integrability_holds(utility, derived.n2):
        raise ValidationError("utility", "int_0^y eta^{-n2} I(eta) d eta diverges")
    closed = _closed_forms(market, utility)
    return RetiredSolution(
        market=market,
        utility=utility,
        weights=xfm.KernelWeights.from_derived(derived),
        quad=quad,
        closed_form=closed is not None,
        _closed=closed,
    )


def retired_value(sol: RetiredSolution, x: float) -> tuple[float, float, float]:
    """(V_R(x), y_R, c0) with X_R(y_R) = x and c0 = I(y_R)."""
    if not x > 0 or not math.isfinite(x):
        raise ValueError("wealth must be positive and finite")
    try:
        y_r = log_brentq(lambda y: float(sol.X(y)) - x, 1.0, increasing=False)
    except RangeError as exc:
        raise RangeError(f"wealth {x!r} outside the reachable range of X_R: {exc}") from exc
    v = float(sol.J(y_r)) + y_r * x
    return v, y_r, float(sol.utility.I(y_r))
