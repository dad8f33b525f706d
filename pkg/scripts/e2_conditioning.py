"""How well can the contact form of E2 agree with the smooth-fit form?

For CRRA utility on the B2 branch both integrals have closed forms, so with
50-digit arithmetic we can evaluate the contact form exactly at the doubles
next to the true barrier.  The relative gap at those doubles is the best any
double-precision solver can do.  Needs mpmath.

    python scripts/e2_conditioning.py [GAMMA ...]
"""

import sys

import mpmath as mp
import numpy as np

from retiregame.boundaries import make_context, solve_free_boundaries
from retiregame.params import AgentParams, MarketParams
from retiregame.utility import make_crra

mp.mp.dps = 50
MARKET = MarketParams(r=0.02, mu=0.07, sigma=0.25, delta=0.10)
AGENT = AgentParams(eps1=1.0, eps2=0.5, kappa1=0.25, kappa2=0.64)


def report(gamma):
    ctx = make_context(MARKET, AGENT, make_crra(gamma))
    th = solve_free_boundaries(ctx)
    if th.z_B >= th.z_S:
        print(f"gamma={gamma}: barrier above z_S, the single-branch closed form does not apply")
        return
    g, kap, eps = mp.mpf(gamma), mp.mpf(AGENT.kappa2), mp.mpf(AGENT.eps2)
    m = -mp.mpf(ctx.derived.n2)
    ut = lambda y: g / (1 - g) * y ** ((g - 1) / g)  # noqa: E731

    def k_lower(z):
        z = mp.mpf(z)
        e = m + 1 - 1 / g
        return eps * z ** (m + 1) / (m + 1) - kap ** (1 / g - 1) * z**e / e

    h_lower = mp.quad(lambda e: (ut(e / kap) - ut(e) + eps * e) * e ** (m - 1), [0, mp.mpf(th.z_R)])
    target = -m * h_lower
    root = mp.findroot(lambda z: k_lower(z) - target, mp.mpf(th.z_B))
    slope = mp.diff(k_lower, root) * root / target
    print(f"gamma={gamma}: z_B={th.z_B!r}  d log E2c / d log z_B = {mp.nstr(slope, 4)}")
    for z in (np.nextafter(th.z_B, 0), th.z_B, np.nextafter(th.z_B, np.inf)):
        print(f"   z={z!r}: E2c/E2 - 1 = {mp.nstr(k_lower(z) / target - 1, 4)}")


if __name__ == "__main__":
    for gamma in [float(a) for a in sys.argv[1:]] or [0.5, 2.0, 3.0]:
        report(gamma)
