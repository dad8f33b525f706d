"""Print the closed-form reference values that the tests freeze.

Runs the power-sum model in tests/ref_oracle.py (no package code) and then
the package itself, so the two columns can be compared by eye.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

import ref_oracle as ref  # noqa: E402

from retiregame.boundaries import make_context, solve_free_boundaries  # noqa: E402
from retiregame.dualvalue import build_dual  # noqa: E402
from retiregame.params import AgentParams, MarketParams  # noqa: E402
from retiregame.retired import build_retired  # noqa: E402
from retiregame.utility import make_crra  # noqa: E402


def main():
    z_R, z_B = ref.thresholds()
    E1, E2 = ref.coefficients(z_R)
    y0 = 0.5 * (z_R + z_B)
    oracle = {
        "z_R": z_R, "z_B": z_B, "E1": E1, "E2": E2,
        "Q(y0)": ref.Q(y0, z_R, z_B, E1, E2),
        "-Q'(y0)": -ref.Qp(y0, z_R, z_B, E1, E2),
    }
    market = MarketParams(r=ref.R, mu=ref.MU, sigma=ref.SIGMA, delta=ref.DELTA)
    agent = AgentParams(eps1=ref.EPS1, eps2=ref.EPS2, kappa1=ref.KAPPA1, kappa2=ref.KAPPA2)
    u = make_crra(2.0)
    ctx = make_context(market, agent, u)
    th = solve_free_boundaries(ctx)
    sol = build_dual(th, build_retired(market, u), ctx)
    pkg = {
        "z_R": th.z_R, "z_B": th.z_B, "E1": th.E1, "E2": th.E2,
        "Q(y0)": float(sol.Q(y0)), "-Q'(y0)": -float(sol.Qp(y0)),
    }
    print(f"{'quantity':10s} {'closed form':>24s} {'package':>24s} {'rel gap':>10s}")
    for k, v in oracle.items():
        print(f"{k:10s} {v:24.17g} {pkg[k]:24.17g} {abs(pkg[k] / v - 1):10.2e}")


if __name__ == "__main__":
    main()
