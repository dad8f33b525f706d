"""Resolvent kernel transform and the shared quadrature engine.

For a function ``g`` on (0, inf) the discounted resolvent

    Xi_g(y) = scale * [ y^n2 int_0^y eta^(-n2-1) g deta + y^n1 int_y^inf eta^(-n1-1) g deta ]

is evaluated through the log substitutions ``eta = y e^{-s}`` (lower limb)
and ``eta = y e^{s}`` (upper limb), which turn both limbs into integrals of
``e^{-rate s} g(y e^{+-s})`` over ``s in (0, inf)``.  Every integral in the
package reduces to such a *limb*, computed by :func:`limb` with adaptive
composite Gauss-Legendre panels, vectorized over many abscissae at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, IntegrandError, QuadratureError
from .params import DerivedParams

_GL_ORDER = 20
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)
# largest |s| before y*e^{+-s} leaves the double range for y ~ 1
_S_LIMIT = 700.0


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_refine: int = 60
    tail_cut: float = 1e-12

    def __post_init__(self):
        if not 0 < self.rel_tol <= 1e-3:
            raise ValueError("rel_tol must lie in (0, 1e-3]")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be non-negative")
        if self.max_refine < 10:
            raise ValueError("max_refine must be at least 10")
        if not 0 < self.tail_cut < 1:
            raise ValueError("tail_cut must lie in (0, 1)")


DEFAULT_QUAD = QuadratureConfig()


@dataclass(frozen=True)
class KernelWeights:
    """Roots of the characteristic quadratic and the kernel prefactor."""

    n1: float
    n2: float
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        if not (self.n1 > 1 and self.n2 < 0):
            raise ValueError("need n1 > 1 > 0 > n2")

    @classmethod
    def from_derived(cls, d: DerivedParams) -> "KernelWeights":
        return cls(n1=d.n1, n2=d.n2, scale=2.0 / (d.theta**2 * (d.n1 - d.n2)))

    # The generator coefficients are recoverable from the roots.
    @property
    def half_theta_sq(self) -> float:
        return 1.0 / (self.scale * (self.n1 - self.n2))

    @property
    def delta(self) -> float:
        return -self.half_theta_sq * self.n1 * self.n2

    @property
    def drift(self) -> float:
        """delta - r."""
        return self.half_theta_sq * (1.0 - self.n1 - self.n2)

    def generator(self, y, v, vp, vpp):
        """(theta^2/2) y^2 v'' + (delta - r) y v' - delta v."""
        return self.half_theta_sq * y * y * vpp + self.drift * y * vp - self.delta * v


# ---------------------------------------------------------------------------
# adaptive engine


def _panel_sums(fs, owner, a, b):
    half = 0.5 * (b - a)
    s = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
    vals = fs(owner, s)
    if not np.all(np.isfinite(vals)):
        i, j = np.argwhere(~np.isfinite(vals))[0]
        raise IntegrandError(_abscissa_hint(fs, owner[i], s[i, j]), float(vals[i, j]))
    return vals @ _GL_W * half, np.abs(vals) @ _GL_W * half


def _abscissa_hint(fs, owner, s):
    eta = getattr(fs, "eta", None)
    return float(eta(owner, s)) if eta is not None else float(s)


def _adaptive(fs, owner, a, b, n_owner, q: QuadratureConfig):
    """Integrate panels [a_i, b_i] (belonging to ``owner_i``) adaptively.

    Each panel is bisected until the Gauss-Legendre estimate on the whole
    panel and the sum over its halves agree to the local tolerance.
    """
    total = np.zeros(n_owner)
    total_abs = np.zeros(n_owner)
    if owner.size == 0:
        return total, total_abs
    whole, _ = _panel_sums(fs, owner, a, b)
    for _ in range(q.max_refine + 1):
        mid = 0.5 * (a + b)
        lv, la = _panel_sums(fs, owner, a, mid)
        rv, ra = _panel_sums(fs, owner, mid, b)
        both = lv + rv
        err = np.abs(whole - both)
        ok = err <= q.rel_tol * (la + ra) + q.abs_tol * np.minimum(1.0, b - a)
        np.add.at(total, owner[ok], both[ok])
        np.add.at(total_abs, owner[ok], (la + ra)[ok])
        bad = ~ok
        if not bad.any():
            return total, total_abs
        owner = np.concatenate([owner[bad], owner[bad]])
        a, b = np.concatenate([a[bad], mid[bad]]), np.concatenate([mid[bad], b[bad]])
        whole = np.concatenate([lv[bad], rv[bad]])
    raise QuadratureError(f"no convergence after {q.max_refine} bisections")


class _LimbIntegrand:
    def __init__(self, g, y, rate, direction):
        self.g, self.y, self.rate, self.direction = g, y, rate, direction

    def eta(self, owner, s):
        return self.y[owner] * np.exp(self.direction * s)

    def __call__(self, owner, s):
        eta = self.y[owner][:, None] * np.exp(self.direction * s)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            return np.exp(-self.rate * s) * np.asarray(self.g(eta), dtype=float)


def limb(g, y, rate: float, direction: int, s_max=math.inf, breaks=(), q: QuadratureConfig = DEFAULT_QUAD):
    """int_0^{s_max} exp(-rate s) g(y exp(direction s)) ds, vectorized over ``y``.

    ``breaks`` are abscissae (in eta) where ``g`` has a kink or jump; panels
    are split there.  For ``s_max = inf`` the tail is covered by windows of
    doubling width until a window's absolute contribution drops below
    ``tail_cut`` times the accumulated absolute integral.
    """
    if direction not in (-1, 1):
        raise ValueError("direction must be -1 or +1")
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if np.any(~(y > 0)) or np.any(~np.isfinite(y)):
        raise ValueError("abscissae must be positive and finite")
    n = y.size
    smax = np.broadcast_to(np.asarray(s_max, dtype=float), y.shape)
    if np.any(smax < 0):
        raise ValueError("s_max must be non-negative")
    fs = _LimbIntegrand(g, y, rate, direction)

    finite = np.isfinite(smax)
    # split points in s for each integral
    bs = np.asarray(sorted(set(float(b) for b in breaks if b > 0 and math.isfinite(b))), dtype=float)
    if bs.size:
        sb = direction * np.log(bs[None, :] / y[:, None])
        cap = np.where(finite, smax, np.inf)[:, None]
        sb = np.where((sb > 0) & (sb < cap), sb, np.nan)
    else:
        sb = np.full((n, 0), np.nan)
    # finite part ends at s_max, or at the last break for semi-infinite limbs
    last_break = np.nan_to_num(np.nanmax(np.concatenate([sb, np.zeros((n, 1))], axis=1), axis=1))
    s_end = np.where(finite, smax, last_break)

    owners, lo, hi = [], [], []
    for i in range(n):
        pts = np.concatenate([[0.0], np.sort(sb[i][~np.isnan(sb[i])]), [s_end[i]]])
        pts = np.unique(pts)
        if pts.size >= 2:
            owners.append(np.full(pts.size - 1, i))
            lo.append(pts[:-1])
            hi.append(pts[1:])
    if owners:
        owner, a, b = np.concatenate(owners), np.concatenate(lo), np.concatenate(hi)
        keep = b > a
        total, total_abs = _adaptive(fs, owner[keep], a[keep], b[keep], n, q)
    else:
        total, total_abs = np.zeros(n), np.zeros(n)

    active = np.flatnonzero(~finite)
    start = s_end.copy()
    width = np.ones(n)
    for _ in range(q.max_refine):
        if active.size == 0:
            break
        if np.any(start[active] > _S_LIMIT):
            raise DivergenceError(
                f"tail did not decay before s={_S_LIMIT} (rate={rate}, direction={direction})")
        a, b = start[active], start[active] + width[active]
        try:
            win, win_abs = _adaptive(fs, np.arange(active.size), a, b, active.size, q)
        except IntegrandError as exc:
            if exc.value == exc.value:  # overflow, not NaN: the tail is growing
                raise DivergenceError(f"tail overflows at eta={exc.abscissa!r}") from exc
            raise
        total[active] += win
        total_abs[active] += win_abs
        done = win_abs <= np.maximum(q.tail_cut * total_abs[active], q.abs_tol * 1e-3)
        start[active] = b
        width[active] *= 2.0
        active = active[~done]
    else:
        if active.size:
            raise DivergenceError(f"tail still significant after {q.max_refine} doublings")
    return float(total[0]) if scalar else total


def power_integral(g, a: float, b: float, p: float, breaks=(), q: QuadratureConfig = DEFAULT_QUAD) -> float:
    """int_a^b eta^p g(eta) d eta for 0 <= a, b <= inf."""
    if a == b:
        return 0.0
    if a > b:
        return -power_integral(g, b, a, p, breaks, q)
    if a == 0:
        if not math.isfinite(b):
            return (power_integral(g, 0.0, 1.0, p, breaks, q)
                    + power_integral(g, 1.0, math.inf, p, breaks, q))
        return b ** (p + 1) * limb(g, b, p + 1.0, -1, math.inf, breaks, q)
    s_max = math.log(b / a) if math.isfinite(b) else math.inf
    return a ** (p + 1) * limb(g, a, -(p + 1.0), 1, s_max, breaks, q)


# ---------------------------------------------------------------------------
# kernel transform


def xi_limbs(g, y, w: KernelWeights, q: QuadratureConfig = DEFAULT_QUAD, breaks=()):
    """(y^n2 int_0^y eta^{-n2-1} g, y^n1 int_y^inf eta^{-n1-1} g)."""
    lower = limb(g, y, -w.n2, -1, math.inf, breaks, q)
    upper = limb(g, y, w.n1, 1, math.inf, breaks, q)
    return lower, upper


def xi(g, y, w: KernelWeights, q: QuadratureConfig = DEFAULT_QUAD, breaks=()):
    lower, upper = xi_limbs(g, y, w, q, breaks)
    return w.scale * (lower + upper)


def xi_prime(g, y, w: KernelWeights, q: QuadratureConfig = DEFAULT_QUAD, breaks=()):
    lower, upper = xi_limbs(g, y, w, q, breaks)
    return w.scale * (w.n2 * lower + w.n1 * upper) / np.asarray(y, dtype=float)


def xi_all(g, y, w: KernelWeights, q: QuadratureConfig = DEFAULT_QUAD, breaks=()):
    """Xi, Xi' and the analytic Xi'' from a single pair of limb integrals."""
    yy = np.asarray(y, dtype=float)
    lower, upper = xi_limbs(g, yy, w, q, breaks)
    v = w.scale * (lower + upper)
    vp = w.scale * (w.n2 * lower + w.n1 * upper) / yy
    vpp = (w.scale * (w.n2 * (w.n2 - 1) * lower + w.n1 * (w.n1 - 1) * upper)
           - np.asarray(g(yy), dtype=float) / w.half_theta_sq) / (yy * yy)
    return v, vp, vpp


def ode_residual(g, y: float, w: KernelWeights, q: QuadratureConfig = DEFAULT_QUAD,
                 fd_step: float | None = None, breaks=()) -> float:
    """Generator residual of Xi_g with Xi'' from central differences of Xi'."""
    h = 1e-4 * y if fd_step is None else fd_step
    if not 0 < h < y:
        raise ValueError("fd_step must lie in (0, y)")
    v, vp = xi(g, y, w, q, breaks), xi_prime(g, y, w, q, breaks)
    vpp = (xi_prime(g, y + h, w, q, breaks) - xi_prime(g, y - h, w, q, breaks)) / (2 * h)
    return float(w.generator(y, v, vp, vpp) + float(g(np.asarray(y))))
