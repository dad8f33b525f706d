"""Dual value Q of the controller-stopper game, its verifier and the primal inversion.

Three representations of Q on (z_R, z_B) are kept side by side:

* coefficient form   E1 z^n1 + E2 z^n2 + Psi_h(z) + J_R(z)    (used for Q)
* retirement anchor  J_R(z) + kernel integrals of h from z_R   (cross-check)
* constraint anchor  Q'(z) as kernel integrals of k up to z_B (used for Q', Q'')

Pasting at z_R is automatic for the second form and super contact at z_B for
the third, so each is checked against the form for which it is not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import xfm
from .boundaries import ALWAYS_B1, ALWAYS_B2, BoundaryContext, Thresholds
from .errors import SolverError, VerificationError
from .retired import RetiredSolution, retired_value
from .roots import solve_in_bracket

COLLAR = 1e-6
# grid region labels
RR, CR, SR = "RR", "CR", "SR"


def psi_h(z, ctx: BoundaryContext):
    return xfm.xi(ctx.sw.h, z, ctx.weights, ctx.quad, breaks=(ctx.z_S, ctx.z_hat))


@dataclass(frozen=True)
class DualSolution:
    thresholds: Thresholds
    retired: RetiredSolution
    ctx: BoundaryContext
    Q_top: float = math.nan
    diagnostics: dict = field(default_factory=dict, compare=False)

    # -- coefficient form ---------------------------------------------------
    def _coef_parts(self, z):
        t, w = self.thresholds, self.ctx.weights
        z = np.asarray(z, dtype=float)
        lower, upper = xfm.xi_limbs(self.ctx.sw.h, z, w, self.ctx.quad, (self.ctx.z_S, self.ctx.z_hat))
        return z, t, w, lower, upper

    def Q_coef(self, z):
        z, t, w, lower, upper = self._coef_parts(z)
        return (t.E1 * z**w.n1 + t.E2 * z**w.n2 + w.scale * (lower + upper)
                + self.retired.J(z))

    def Qp_coef(self, z):
        z, t, w, lower, upper = self._coef_parts(z)
        return (w.n1 * t.E1 * z ** (w.n1 - 1) + w.n2 * t.E2 * z ** (w.n2 - 1)
                + w.scale * (w.n2 * lower + w.n1 * upper) / z + self.retired.Jp(z))

    # -- retirement-anchored form --------------------------------------------
    def _anchor_R(self, z):
        z = np.asarray(z, dtype=float)
        s = np.log(z / self.thresholds.z_R)
        br = (self.ctx.z_S, self.ctx.z_hat)
        w = self.ctx.weights
        l2 = xfm.limb(self.ctx.sw.h, z, -w.n2, -1, s, br, self.ctx.quad)
        l1 = xfm.limb(self.ctx.sw.h, z, -w.n1, -1, s, br, self.ctx.quad)
        return z, w, l2, l1

    def Q_anchor(self, z):
        z, w, l2, l1 = self._anchor_R(z)
        return self.retired.J(z) + w.scale * (l2 - l1)

    def Qp_anchor(self, z):
        z, w, l2, l1 = self._anchor_R(z)
        return self.retired.Jp(z) + w.scale * (w.n2 * l2 - w.n1 * l1) / z

    def Qpp_anchor(self, z):
        z, w, l2, l1 = self._anchor_R(z)
        hz = np.asarray(self.ctx.sw.h(z), dtype=float)
        return (self.retired.Jpp(z)
                + w.scale * (w.n2 * (w.n2 - 1) * l2 - w.n1 * (w.n1 - 1) * l1 + (w.n2 - w.n1) * hz) / (z * z))

    # -- constraint-anchored derivative form -----------------------------------
    def _anchor_B(self, z):
        z = np.asarray(z, dtype=float)
        s = np.log(self.thresholds.z_B / z)
        br = (self.ctx.z_S, self.ctx.z_bar)
        w = self.ctx.weights
        u2 = xfm.limb(self.ctx.sw.k, z, w.n2 - 1.0, 1, s, br, self.ctx.quad)
        u1 = xfm.limb(self.ctx.sw.k, z, w.n1 - 1.0, 1, s, br, self.ctx.quad)
        return z, w, u2, u1

    def Qp_kernel(self, z):
        z, w, u2, u1 = self._anchor_B(z)
        return w.scale * (u1 - u2)

    def Qpp_kernel(self, z):
        z, w, u2, u1 = self._anchor_B(z)
        return w.scale * ((w.n1 - 1.0) * u1 - (w.n2 - 1.0) * u2) / z

    # -- piecewise evaluators --------------------------------------------------
    def _piecewise(self, z, below, inside, above):
        scalar = np.ndim(z) == 0
        z = np.atleast_1d(np.asarray(z, dtype=float))
        t = self.thresholds
        out = np.empty_like(z)
        lo, hi = z <= t.z_R, z >= t.z_B
        mid = ~(lo | hi)
        if lo.any():
            out[lo] = below(z[lo])
        if mid.any():
            out[mid] = inside(z[mid])
        if hi.any():
            out[hi] = above(z[hi])
        return float(out[0]) if scalar else out

    def Q(self, z):
        return self._piecewise(z, self.retired.J, self.Q_coef, lambda v: np.full_like(v, self.Q_top))

    def Qp(self, z):
        return self._piecewise(z, self.retired.Jp, self.Qp_kernel, np.zeros_like)

    def Qpp(self, z):
        return self._piecewise(z, self.retired.Jpp, self.Qpp_kernel, np.zeros_like)

    # -- derived scalars -------------------------------------------------------
    @property
    def x_ret(self) -> float:
        return float(self.retired.X(self.thresholds.z_R))

    @property
    def x_S(self) -> float | None:
        t = self.thresholds
        if t.regime in (ALWAYS_B1, ALWAYS_B2):
            return None
        return float(-self.Qp(t.z_S))


def build_dual(thresholds: Thresholds, retired: RetiredSolution, ctx: BoundaryContext,
               pasting_tol: float = 1e-6) -> DualSolution:
    t = thresholds
    base = DualSolution(thresholds=t, retired=retired, ctx=ctx)
    q_top = float(base.Q_coef(t.z_B))
    mid = 0.5 * (t.z_R + t.z_B)
    q_zr = float(base.Q_coef(t.z_R))
    diag = {
        "value_match_zR": q_zr - float(retired.J(t.z_R)),
        "smooth_fit_zR": float(base.Qp_coef(t.z_R)) - float(retired.Jp(t.z_R)),
        "slope_zB": float(base.Qp_coef(t.z_B)),
        "curvature_zB": float(base.Qpp_anchor(t.z_B)),
        "Q_top_anchor_gap": q_top - float(base.Q_anchor(t.z_B)),
        "midpoint_form_gap": float(base.Q_coef(mid)) - float(base.Q_anchor(mid)),
    }
    scale = 1.0 + abs(q_zr)
    worst = max(abs(v) for v in diag.values())
    if not worst <= pasting_tol * scale:
        bad = max(diag, key=lambda k: abs(diag[k]))
        raise SolverError(f"pasting residual {bad}={diag[bad]!r} exceeds {pasting_tol * scale!r}; "
                          "threshold solve is inaccurate")
    return DualSolution(thresholds=t, retired=retired, ctx=ctx, Q_top=q_top, diagnostics=diag)


def _pair_coefficients(sol: DualSolution, b: float, a: float) -> tuple[float, float]:
    """(A, B) with A a^n1 + B a^n2 + Psi_h(a) = 0 and zero total slope at b."""
    if not 0 < a < b:
        raise ValueError(f"need 0 < a < b, got a={a!r}, b={b!r}")
    ctx, w = sol.ctx, sol.ctx.weights
    br = (ctx.z_S, ctx.z_hat)
    pa = float(xfm.xi(ctx.sw.h, a, w, ctx.quad, br))
    _, pb, _ = xfm.xi_all(ctx.sw.h, b, w, ctx.quad, br)
    M = np.array([[a**w.n1, a**w.n2], [w.n1 * b ** (w.n1 - 1), w.n2 * b ** (w.n2 - 1)]])
    A, B = np.linalg.solve(M, [-pa, -float(sol.retired.Jp(b)) - float(pb)])
    return float(A), float(B)


def pair_value(sol: DualSolution, b: float, a: float, z: float) -> float:
    """Exact game payoff when the controller reflects at b and the stopper stops below a.

    Same form as Q with the coefficients fixed by a zero continuation premium
    at a and zero slope at b.  At (z_B, z_R) this is Q itself.
    """
    A, B = _pair_coefficients(sol, b, a)
    ctx, w = sol.ctx, sol.ctx.weights
    if z <= a:
        return float(sol.retired.J(z))
    zz = min(z, b)
    return float(A * zz**w.n1 + B * zz**w.n2 + psi_h(zz, ctx) + sol.retired.J(zz))


def with_shifted_barrier(sol: DualSolution, factor: float) -> DualSolution:
    """Fault injection: a solution whose barrier is moved to factor * z_B.

    E1, E2 are refitted so that Q is the payoff of the shifted strategy pair,
    i.e. a self-consistent but suboptimal controller.  No pasting checks.
    """
    t = sol.thresholds
    z_B = factor * t.z_B
    E1, E2 = _pair_coefficients(sol, z_B, t.z_R)
    diag = dict(t.diagnostics, barrier_shift=factor)
    bad = replace(t, z_B=z_B, E1=E1, E2=E2, diagnostics=diag)
    base = DualSolution(thresholds=bad, retired=sol.retired, ctx=sol.ctx)
    return replace(base, Q_top=float(base.Q_coef(z_B)), diagnostics={"barrier_shift": factor})


# ---------------------------------------------------------------------------
# HJBQV verification


@dataclass(frozen=True)
class ResidualPoint:
    z: float
    lq: float
    region: str
    passed: bool
    reason: str = ""


def generator_residual(sol: DualSolution, z):
    """(theta^2/2) z^2 Q'' + (delta - r) z Q' - delta Q + utilde + h."""
    z = np.asarray(z, dtype=float)
    w, sw, u = sol.ctx.weights, sol.ctx.sw, sol.ctx.utility
    return (w.generator(z, sol.Q(z), sol.Qp(z), sol.Qpp(z))
            + np.asarray(u.utilde(z), dtype=float) + np.asarray(sw.h(z), dtype=float))


def hjbqv_residual(sol: DualSolution, z, rel_tol: float = 1e-5) -> list[ResidualPoint]:
    """Residual and the variational sign pattern at each abscissa.

    Points within a relative collar of z_R, where Q'' jumps, are classified
    but only the value conditions are asserted there.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    t = sol.thresholds
    lq = np.asarray(generator_residual(sol, z), dtype=float)
    q, qp, jr = sol.Q(z), sol.Qp(z), np.asarray(sol.retired.J(z), dtype=float)
    tol = rel_tol * (1.0 + np.abs(np.asarray(sol.ctx.utility.utilde(z), dtype=float)))
    gap_tol = 1e-10 * (1.0 + np.abs(jr))
    out = []
    for i, zi in enumerate(z):
        collar = abs(zi - t.z_R) <= COLLAR * t.z_R
        reasons = []
        if zi < t.z_R:
            region = RR
            if not collar and not lq[i] <= tol[i]:
                reasons.append("lq > tol")
            if abs(q[i] - jr[i]) > gap_tol[i]:
                reasons.append("Q != J_R")
        elif zi < t.z_B:
            region = CR
            if not collar and not abs(lq[i]) <= tol[i]:
                reasons.append("|lq| > tol")
            if not qp[i] < 0:
                reasons.append("Q' >= 0")
            if not collar and not q[i] > jr[i]:
                reasons.append("Q <= J_R")
        else:
            region = SR
            if not lq[i] >= -tol[i]:
                reasons.append("lq < -tol")
            if qp[i] != 0:
                reasons.append("Q' != 0")
            if not q[i] > jr[i]:
                reasons.append("Q <= J_R")
        out.append(ResidualPoint(float(zi), float(lq[i]), region, not reasons, "; ".join(reasons)))
    return out


def verify_grid(sol: DualSolution, z, rel_tol: float = 1e-5) -> list[ResidualPoint]:
    pts = hjbqv_residual(sol, z, rel_tol)
    bad = [p for p in pts if not p.passed]
    if bad:
        p = bad[0]
        raise VerificationError(f"HJBQV sign pattern violated at z={p.z!r} in region {p.region}: {p.reason}")
    return pts


# ---------------------------------------------------------------------------
# primal side

WORK_B1, WORK_B2 = "WORK_B1", "WORK_B2"
RETIRE_BOUNDARY, CONSTRAINED = "RETIRE_BOUNDARY", "CONSTRAINED"
EDGE_TOL = 1e-9


@dataclass(frozen=True)
class PolicyPoint:
    x: float
    y_star: float
    V: float
    c_star: float
    job: str
    region: str
    # standard dual-hedge portfolio (theta / sigma) y Q''(y); not verified
    pi_candidate: float = math.nan


def invert_primal(sol: DualSolution, x: float) -> PolicyPoint:
    """Optimal dual state, value and policy at wealth ``x >= 0``.

    Wealth at or above X_R(z_R) means immediate retirement; the row then
    carries the post-retirement dual state, value and consumption.
    """
    if not (x >= 0 and math.isfinite(x)):
        raise ValueError("wealth must be non-negative and finite")
    t, m = sol.thresholds, sol.ctx.market
    if x >= sol.x_ret:
        v, y_r, c0 = retired_value(sol.retired, x)
        pi = m.theta / m.sigma * y_r * float(sol.retired.Jpp(y_r))
        return PolicyPoint(x, y_r, v, c0, "NONE", RETIRE_BOUNDARY, pi)
    if x == 0:
        y = t.z_B
    else:
        y, _ = solve_in_bracket(lambda v: -float(sol.Qp(v)) - x, t.z_R * (1 - 1e-9), t.z_B)
    V = float(sol.Q(y)) + y * x
    c = float(sol.ctx.sw.c_hat(y))
    b1 = bool(sol.ctx.sw.is_b1(y))
    if abs(y - t.z_B) <= EDGE_TOL * t.z_B:
        region = CONSTRAINED
    elif abs(y - t.z_R) <= EDGE_TOL * t.z_R:
        region = RETIRE_BOUNDARY
    else:
        region = WORK_B1 if b1 else WORK_B2
    pi = m.theta / m.sigma * y * float(sol.Qpp(y))
    return PolicyPoint(x, y, V, c, "B1" if b1 else "B2", region, pi)


@dataclass(frozen=True)
class PolicyTable:
    rows: list
    x_ret: float
    x_S: float | None
    regime: str


def policy_table(sol: DualSolution, x_grid) -> PolicyTable:
    xs = np.asarray(x_grid, dtype=float)
    if xs.ndim != 1 or np.any(xs < 0) or np.any(np.diff(xs) <= 0):
        raise ValueError("x_grid must be non-negative and strictly increasing")
    rows = [invert_primal(sol, float(x)) for x in xs]
    return PolicyTable(rows, sol.x_ret, sol.x_S, sol.thresholds.regime)
