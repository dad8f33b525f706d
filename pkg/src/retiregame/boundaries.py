"""Job-switch, retirement and borrowing-constraint thresholds.

Branch convention: job B1 strictly above ``z_S``, job B2 at or below it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import xfm
from .errors import SolverError
from .params import AgentParams, DerivedParams, MarketParams, derive
from .roots import log_brentq, solve_in_bracket
from .utility import UtilityModel

SWITCHING = "SWITCHING"
ALWAYS_B1 = "ALWAYS_B1"
ALWAYS_B2 = "ALWAYS_B2"


def switch_gain(agent: AgentParams, utility: UtilityModel, y):
    """f(y): utility advantage of job B1 over B2 per unit of y."""
    y = np.asarray(y, dtype=float)
    ut = utility.utilde
    return (ut(y / agent.kappa1) - ut(y / agent.kappa2) + y * (agent.eps1 - agent.eps2)) / y


@dataclass(frozen=True)
class SwitchFunctions:
    agent: AgentParams
    utility: UtilityModel
    z_S: float

    def f(self, y):
        return switch_gain(self.agent, self.utility, y)

    def is_b1(self, z):
        return np.asarray(z, dtype=float) > self.z_S

    def kappa(self, z):
        return np.where(self.is_b1(z), self.agent.kappa1, self.agent.kappa2)

    def eps_hat(self, z):
        return np.where(self.is_b1(z), self.agent.eps1, self.agent.eps2)

    def c_hat(self, z):
        z = np.asarray(z, dtype=float)
        kap = self.kappa(z)
        return self.utility.I(z / kap) / kap

    def h(self, z):
        """Pre- minus post-retirement instantaneous dual utility."""
        z = np.asarray(z, dtype=float)
        kap = self.kappa(z)
        return self.utility.utilde(z / kap) - self.utility.utilde(z) + self.eps_hat(z) * z

    def k(self, z):
        """eps_hat - c_hat: net income flow, h' - I."""
        return self.eps_hat(z) - self.c_hat(z)

    def reward(self, z):
        """Running payoff of the game: utilde(z / kappa) + eps_hat z."""
        z = np.asarray(z, dtype=float)
        return self.utility.utilde(z / self.kappa(z)) + self.eps_hat(z) * z


def solve_z_S(agent: AgentParams, utility: UtilityModel) -> float:
    return log_brentq(lambda y: float(switch_gain(agent, utility, y)), 1.0, increasing=True)


def solve_z_hat(agent: AgentParams, utility: UtilityModel, z_S: float) -> float:
    sw = SwitchFunctions(agent, utility, z_S)
    return log_brentq(lambda z: float(sw.h(z)) / z, 1.0, increasing=True)


def solve_z_bar(agent: AgentParams, utility: UtilityModel, z_S: float) -> float:
    sw = SwitchFunctions(agent, utility, z_S)
    return log_brentq(lambda z: float(sw.k(z)), 1.0, increasing=True)


@dataclass(frozen=True)
class BoundaryContext:
    market: MarketParams
    agent: AgentParams
    utility: UtilityModel
    derived: DerivedParams
    weights: xfm.KernelWeights
    quad: xfm.QuadratureConfig
    sw: SwitchFunctions
    z_hat: float
    z_bar: float

    @property
    def z_S(self) -> float:
        return self.sw.z_S

    @property
    def breaks(self) -> tuple:
        return (self.z_S, self.z_bar, self.z_hat)


def make_context(market: MarketParams, agent: AgentParams, utility: UtilityModel,
                 quad: xfm.QuadratureConfig = xfm.DEFAULT_QUAD) -> BoundaryContext:
    derived = derive(market)
    z_S = solve_z_S(agent, utility)
    return BoundaryContext(
        market=market, agent=agent, utility=utility, derived=derived,
        weights=xfm.KernelWeights.from_derived(derived), quad=quad,
        sw=SwitchFunctions(agent, utility, z_S),
        z_hat=solve_z_hat(agent, utility, z_S),
        z_bar=solve_z_bar(agent, utility, z_S),
    )


def _k_upper(z2, ctx):
    return xfm.power_integral(ctx.sw.k, z2, math.inf, -ctx.derived.n1, ctx.breaks, ctx.quad)


def _k_lower(z2, ctx):
    return xfm.power_integral(ctx.sw.k, 0.0, z2, -ctx.derived.n2, ctx.breaks, ctx.quad)


def _h_upper(z1, ctx):
    return xfm.power_integral(ctx.sw.h, z1, math.inf, -ctx.derived.n1 - 1.0, ctx.breaks, ctx.quad)


def _h_lower(z1, ctx):
    return xfm.power_integral(ctx.sw.h, 0.0, z1, -ctx.derived.n2 - 1.0, ctx.breaks, ctx.quad)


def phi1(z1: float, z2: float, ctx: BoundaryContext) -> float:
    return _k_upper(z2, ctx) - ctx.derived.n1 * _h_upper(z1, ctx)


def phi2(z1: float, z2: float, ctx: BoundaryContext) -> float:
    return _k_lower(z2, ctx) - ctx.derived.n2 * _h_lower(z1, ctx)


def inner_root(z1: float, ctx: BoundaryContext) -> tuple[float, int]:
    """z2 with phi2(z1, z2) = 0 on (max(z1, z_bar), inf)."""
    target = ctx.derived.n2 * _h_lower(z1, ctx)

    def g(z2):
        return _k_lower(z2, ctx) - target

    lo = max(z1, ctx.z_bar) * (1.0 + 1e-12)
    if g(lo) >= 0:
        raise SolverError(f"phi2({z1!r}, {lo!r}) >= 0; inner bracket has no sign change")
    hi = 2.0 * lo
    for _ in range(200):
        if g(hi) > 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise SolverError("phi2 did not turn positive while doubling z2")
    return solve_in_bracket(g, lo, hi)


def underline_z(ctx: BoundaryContext) -> float:
    """Root of int_0^z eta^{-n2} (eps_hat - c_hat) d eta = 0, the limit of the inner root at 0+."""
    lo = ctx.z_bar
    hi = 2.0 * lo
    while _k_lower(hi, ctx) < 0:
        lo, hi = hi, 2.0 * hi
    return solve_in_bracket(lambda z: _k_lower(z, ctx), lo, hi)[0]


def outer_function(z1: float, ctx: BoundaryContext) -> float:
    return phi1(z1, inner_root(z1, ctx)[0], ctx)


@dataclass(frozen=True)
class Thresholds:
    z_S: float
    z_hat: float
    z_bar: float
    z_R: float
    z_B: float
    E1: float
    E2: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def regime(self) -> str:
        if self.z_S <= self.z_R:
            return ALWAYS_B1
        if self.z_S >= self.z_B:
            return ALWAYS_B2
        return SWITCHING

    def as_dict(self) -> dict:
        return {
            "z_S": self.z_S, "z_hat": self.z_hat, "z_bar": self.z_bar,
            "z_R": self.z_R, "z_B": self.z_B, "E1": self.E1, "E2": self.E2,
            "regime": self.regime,
        }


def coefficients(z_R: float, ctx: BoundaryContext) -> tuple[float, float]:
    """E1, E2 from value matching and smooth fit at z_R."""
    s = ctx.weights.scale
    return -s * _h_upper(z_R, ctx), -s * _h_lower(z_R, ctx)


def coefficients_from_contact(z_B: float, ctx: BoundaryContext) -> tuple[float, float]:
    """E1, E2 from the super-contact conditions at z_B."""
    s, d = ctx.weights.scale, ctx.derived
    return -s / d.n1 * _k_upper(z_B, ctx), -s / d.n2 * _k_lower(z_B, ctx)


def solve_free_boundaries(ctx: BoundaryContext) -> Thresholds:
    """Nested solve: inner root z2 = theta(z1) of phi2, outer root of phi1(z1, theta(z1)).

    The outer function is strictly decreasing on (0, z_hat), positive near
    0 and negative at z_hat.
    """
    counts = {"outer": 0, "inner": 0}

    def F(z1):
        z2, it = inner_root(z1, ctx)
        counts["inner"] += it
        return phi1(z1, z2, ctx)

    lo, hi = 1e-8 * ctx.z_hat, ctx.z_hat * (1.0 - 1e-10)
    f_lo, f_hi = F(lo), F(hi)
    if not (f_lo > 0 > f_hi):
        raise SolverError(
            f"outer function has no sign change on [{lo!r}, {hi!r}]: F={f_lo!r}, {f_hi!r}; "
            "quadrature tolerance may be too loose")
    z_R, counts["outer"] = solve_in_bracket(F, lo, hi)
    z_B, _ = inner_root(z_R, ctx)
    E1, E2 = coefficients(z_R, ctx)
    E1c, E2c = coefficients_from_contact(z_B, ctx)
    diag = {
        "phi1": phi1(z_R, z_B, ctx),
        "phi2": phi2(z_R, z_B, ctx),
        "E1_contact": E1c,
        "E2_contact": E2c,
        "E1_rel_gap": abs(E1 - E1c) / max(abs(E1), abs(E1c)),
        "E2_rel_gap": abs(E2 - E2c) / max(abs(E2), abs(E2c)),
        "outer_iterations": counts["outer"],
        "inner_iterations": counts["inner"],
        "z_S_residual": float(ctx.sw.f(ctx.z_S)),
        "z_hat_residual": float(ctx.sw.h(ctx.z_hat)),
        "z_bar_residual": float(ctx.sw.k(ctx.z_bar)),
    }
    return Thresholds(z_S=ctx.z_S, z_hat=ctx.z_hat, z_bar=ctx.z_bar, z_R=z_R, z_B=z_B,
                      E1=E1, E2=E2, diagnostics=diag)
