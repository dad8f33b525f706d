"""Model constants: market, agent, and the quantities derived from them."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValidationError(name, f"must be finite, got {value!r}")


@dataclass(frozen=True)
class MarketParams:
    """Constant investment opportunity; all rates annualized."""

    r: float
    mu: float
    sigma: float
    delta: float

    def __post_init__(self):
        for name in ("r", "mu", "sigma", "delta"):
            _require_finite(name, getattr(self, name))
        if self.r <= 0:
            raise ValidationError("r", "must be positive")
        if self.sigma <= 0:
            raise ValidationError("sigma", "must be positive")
        if self.delta <= 0:
            raise ValidationError("delta", "must be positive")
        if self.mu <= self.r:
            raise ValidationError("mu", "mu must exceed r")

    @property
    def theta(self) -> float:
        return (self.mu - self.r) / self.sigma


@dataclass(frozen=True)
class AgentParams:
    """Wages and job-satisfaction factors of the two jobs.

    Job B1 pays more (``eps1 > eps2``) but satisfies less (``kappa1 < kappa2``).
    """

    eps1: float
    eps2: float
    kappa1: float
    kappa2: float

    def __post_init__(self):
        for name in ("eps1", "eps2", "kappa1", "kappa2"):
            _require_finite(name, getattr(self, name))
        if not self.eps2 > 0:
            raise ValidationError("eps2", "must be positive")
        if not self.eps1 > self.eps2:
            raise ValidationError("eps1", "eps1 must exceed eps2")
        if not self.kappa1 > 0:
            raise ValidationError("kappa1", "must be positive")
        if not self.kappa2 > self.kappa1:
            raise ValidationError("kappa2", "kappa2 must exceed kappa1")
        if not self.kappa2 < 1:
            raise ValidationError("kappa2", "must be below 1")


@dataclass(frozen=True)
class DerivedParams:
    theta: float
    n1: float
    n2: float

    def quadratic(self, market: MarketParams, n: float) -> float:
        a = 0.5 * self.theta**2
        return a * n * n + (market.delta - market.r - a) * n - market.delta


def derive(market: MarketParams) -> DerivedParams:
    """Sharpe ratio and the two roots of the characteristic quadratic.

    The larger-magnitude root is computed first and the other one from the
    product of roots, which avoids cancellation in the textbook formula.
    """
    if not isinstance(market, MarketParams):
        raise TypeError("market must be a MarketParams")
    theta = market.theta
    a = 0.5 * theta * theta
    b = market.delta - market.r - a
    c = -market.delta
    disc = b * b - 4.0 * a * c  # > b**2 because a*c < 0
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    roots = (q / a, c / q)
    n1, n2 = max(roots), min(roots)
    return DerivedParams(theta=theta, n1=n1, n2=n2)


def merton_constant(market: MarketParams, gamma: float) -> float:
    """K = r + (delta - r)/gamma + (gamma - 1) theta^2 / (2 gamma^2).

    Post-retirement consumption is K times wealth for CRRA utility; the
    retired value is finite iff K > 0.  ``gamma = 1`` gives the log case K = delta.
    """
    th = market.theta
    return (
        market.r
        + (market.delta - market.r) / gamma
        + (gamma - 1.0) * th * th / (2.0 * gamma * gamma)
    )
