"""Bracketed scalar root finding on the log scale."""

from __future__ import annotations

import math

from scipy.optimize import brentq

from .errors import RangeError, SolverError

_LOG_MAX = 700.0
XTOL = 1e-14  # absolute in log(y), i.e. relative in y
MAXITER = 200


def solve_in_bracket(f, lo: float, hi: float, log_scale: bool = True) -> tuple[float, int]:
    """Root of ``f`` on [lo, hi] (sign change required); returns (root, iterations)."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo, 0
    if fhi == 0:
        return hi, 0
    if math.copysign(1.0, flo) == math.copysign(1.0, fhi):
        raise SolverError(f"no sign change on [{lo!r}, {hi!r}]: f={flo!r}, {fhi!r}")
    if log_scale:
        root, res = brentq(lambda u: f(math.exp(u)), math.log(lo), math.log(hi),
                           xtol=XTOL, rtol=1e-15, maxiter=MAXITER, full_output=True)
        return math.exp(root), res.iterations
    root, res = brentq(f, lo, hi, xtol=XTOL * max(abs(lo), abs(hi)), rtol=1e-15,
                       maxiter=MAXITER, full_output=True)
    return root, res.iterations


def expand_bracket(f, start: float, increasing: bool, factor: float = 4.0) -> tuple[float, float]:
    """Grow [lo, hi] geometrically from ``start`` until ``f`` changes sign.

    ``f`` is assumed monotone in the stated direction on (0, inf).
    """
    lo = hi = start
    val = f(start)
    if val == 0:
        return start, start
    # root lies above start if f is below zero and increasing (or above zero and decreasing)
    go_up = (val < 0) == increasing
    step = math.log(factor)
    u = math.log(start)
    while abs(u - math.log(start)) < _LOG_MAX:
        u = u + step if go_up else u - step
        try:
            v = f(math.exp(u))
        except (OverflowError, ZeroDivisionError) as exc:
            raise RangeError(f"evaluation failed at {math.exp(u)!r}: {exc}") from exc
        if math.isnan(v):
            raise RangeError(f"function is NaN at {math.exp(u)!r}")
        if (v < 0) != (val < 0) or v == 0:
            return (lo, math.exp(u)) if go_up else (math.exp(u), hi)
        if go_up:
            lo = math.exp(u)
        else:
            hi = math.exp(u)
    raise RangeError(f"no sign change within [{math.exp(-_LOG_MAX)!r}, {math.exp(_LOG_MAX)!r}] "
                     f"starting from {start!r}")


def log_brentq(f, start: float, increasing: bool, factor: float = 4.0) -> float:
    lo, hi = expand_bracket(f, start, increasing, factor)
    if lo == hi:
        return lo
    return solve_in_bracket(f, lo, hi)[0]
