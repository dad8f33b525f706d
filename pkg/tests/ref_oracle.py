"""Closed-form reference model: CRRA gamma = 2 with the REF market and agent.

With utilde(y) = -2 sqrt(y) and I(y) = y^{-1/2}, every integrand of the
free-boundary problem is a sum of powers on each job branch, so all the
kernel integrals have elementary antiderivatives.  Nothing here touches the
package's quadrature engine.
"""

import math

from scipy.optimize import brentq

R, MU, SIGMA, DELTA = 0.02, 0.07, 0.25, 0.10
EPS1, EPS2, KAPPA1, KAPPA2 = 1.0, 0.5, 0.25, 0.64
THETA = (MU - R) / SIGMA
N1 = (-3.0 + math.sqrt(29.0)) / 2.0
N2 = (-3.0 - math.sqrt(29.0)) / 2.0
SCALE = 2.0 / (THETA**2 * (N1 - N2))
K_MERTON = 0.065
Z_S = 9.0
Z_HAT = 1.0
Z_BAR = 6.25

# (coefficient, power) terms of each piecewise function, branch B2 below z_S, B1 above
H_TERMS = {"B2": [(0.5, 1.0), (-0.5, 0.5)], "B1": [(1.0, 1.0), (-2.0, 0.5)]}
K_TERMS = {"B2": [(0.5, 0.0), (-1.25, -0.5)], "B1": [(1.0, 0.0), (-2.0, -0.5)]}


def _prim(terms, p, a, b):
    """int_a^b eta^p * sum c eta^q  for one branch (b may be inf)."""
    total = 0.0
    for c, q in terms:
        e = p + q + 1.0
        hi = 0.0 if math.isinf(b) else b**e
        lo = 0.0 if a == 0.0 else a**e
        if math.isinf(b) and e >= 0 or a == 0.0 and e <= 0:
            raise ValueError("divergent power integral")
        total += c * (hi - lo) / e
    return total


def power_int(terms, p, a, b):
    """int_a^b eta^p f(eta) with f switching branch at z_S."""
    out = 0.0
    if a < Z_S:
        out += _prim(terms["B2"], p, a, min(b, Z_S))
    if b > Z_S:
        out += _prim(terms["B1"], p, max(a, Z_S), b)
    return out


def phi1(z1, z2):
    return power_int(K_TERMS, -N1, z2, math.inf) - N1 * power_int(H_TERMS, -N1 - 1, z1, math.inf)


def phi2(z1, z2):
    return power_int(K_TERMS, -N2, 0.0, z2) - N2 * power_int(H_TERMS, -N2 - 1, 0.0, z1)


def inner(z1):
    lo = max(z1, Z_BAR) * (1 + 1e-12)
    hi = 2 * lo
    while phi2(z1, hi) < 0:
        hi *= 2
    return brentq(lambda z2: phi2(z1, z2), lo, hi, xtol=1e-15, rtol=1e-15)


def thresholds():
    z_R = brentq(lambda z1: phi1(z1, inner(z1)), 1e-8, Z_HAT * (1 - 1e-10), xtol=1e-16, rtol=1e-15)
    return z_R, inner(z_R)


def coefficients(z_R):
    return (-SCALE * power_int(H_TERMS, -N1 - 1, z_R, math.inf),
            -SCALE * power_int(H_TERMS, -N2 - 1, 0.0, z_R))


def J_R(y):
    return -2.0 * math.sqrt(y) / K_MERTON


def X_R(y):
    return 1.0 / (math.sqrt(y) * K_MERTON)


def psi_h(z):
    return SCALE * (z**N2 * power_int(H_TERMS, -N2 - 1, 0.0, z) + z**N1 * power_int(H_TERMS, -N1 - 1, z, math.inf))


def psi_h_prime(z):
    return SCALE * (N2 * z ** (N2 - 1) * power_int(H_TERMS, -N2 - 1, 0.0, z)
                    + N1 * z ** (N1 - 1) * power_int(H_TERMS, -N1 - 1, z, math.inf))


def Q(z, z_R, z_B, E1, E2):
    if z <= z_R:
        return J_R(z)
    z = min(z, z_B)
    return E1 * z**N1 + E2 * z**N2 + psi_h(z) + J_R(z)


def Qp(z, z_R, z_B, E1, E2):
    if z <= z_R:
        return -X_R(z)
    if z >= z_B:
        return 0.0
    return N1 * E1 * z ** (N1 - 1) + N2 * E2 * z ** (N2 - 1) + psi_h_prime(z) - X_R(z)
