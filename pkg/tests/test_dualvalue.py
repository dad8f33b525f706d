import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ref_oracle as ref
from retiregame import dualvalue as DV
from retiregame import xfm
from retiregame.boundaries import SWITCHING, make_context, solve_free_boundaries
from retiregame.errors import VerificationError
from retiregame.params import AgentParams
from retiregame.retired import build_retired
from retiregame.utility import make_crra


@pytest.fixture(scope="module")
def oracle():
    z_R, z_B = ref.thresholds()
    E1, E2 = ref.coefficients(z_R)
    return z_R, z_B, E1, E2


@pytest.fixture(scope="module")
def switching(market):
    ctx = make_context(market, AgentParams(eps1=1.0, eps2=0.5, kappa1=0.4, kappa2=0.64), make_crra(2.0))
    return DV.build_dual(solve_free_boundaries(ctx), build_retired(market, make_crra(2.0)), ctx)


def test_q_matches_closed_form(sol, oracle):
    for z in (0.05, 0.2, 1.0, 3.9, 7.0, 7.6, 20.0):
        assert sol.Q(z) == pytest.approx(ref.Q(z, *oracle), rel=1e-10)
        assert sol.Qp(z) == pytest.approx(ref.Qp(z, *oracle), rel=1e-7, abs=1e-9)


def test_frozen_midpoint_values(sol, thresholds):
    # closed-form oracle (ref_oracle.py) at y0 = (z_R + z_B)/2
    y0 = 0.5 * (thresholds.z_R + thresholds.z_B)
    assert sol.Q(y0) == pytest.approx(-30.294533343334876, rel=1e-11)
    assert -sol.Qp(y0) == pytest.approx(0.5868063940798338, rel=1e-9)


def test_pasting_and_contact(sol, thresholds, retired):
    t = thresholds
    assert abs(sol.Q_coef(t.z_R) - retired.J(t.z_R)) <= 1e-8
    assert abs(sol.Qp_coef(t.z_R) - retired.Jp(t.z_R)) <= 1e-8
    assert abs(sol.Qp_coef(t.z_B)) <= 1e-8
    assert abs(sol.Qp_kernel(t.z_B)) <= 1e-8
    assert abs(sol.Qpp_anchor(t.z_B)) <= 1e-6
    mid = 0.5 * (t.z_R + t.z_B)
    assert sol.Q_coef(mid) == pytest.approx(sol.Q_anchor(mid), rel=1e-7)


def test_psi_h(ctx, sol):
    w = ctx.weights
    br = (ctx.z_S, ctx.z_hat)
    assert abs(xfm.ode_residual(ctx.sw.h, 2.0, w, breaks=br)) <= 1e-6
    assert DV.psi_h(0.01, ctx) < 0
    assert DV.psi_h(2.0, ctx) == pytest.approx(ref.psi_h(2.0), rel=1e-10)


def test_residual_examples(sol, thresholds, ctx):
    t = thresholds
    z = t.z_R / 2
    assert float(DV.generator_residual(sol, z)) == pytest.approx(float(ctx.sw.h(z)), abs=1e-9)
    assert float(ctx.sw.h(z)) < 0
    mid = 0.5 * (t.z_R + t.z_B)
    assert abs(float(DV.generator_residual(sol, mid))) <= 1e-5 * (1 + abs(float(ctx.utility.utilde(mid))))
    z = 2 * t.z_B
    direct = xfm.power_integral(ctx.sw.k, t.z_B, z, 0.0, (ctx.z_S, ctx.z_bar))
    assert float(DV.generator_residual(sol, z)) == pytest.approx(direct, rel=1e-8)
    assert direct > 0


def test_grid_classification(sol, thresholds):
    t = thresholds
    pts = DV.verify_grid(sol, np.geomspace(t.z_R / 10, 10 * t.z_B, 500))
    assert {p.region for p in pts} == {DV.RR, DV.CR, DV.SR}


def test_shape(sol, thresholds, retired):
    t = thresholds
    inner = np.geomspace(t.z_R * (1 + 1e-6), t.z_B * (1 - 1e-6), 500)
    assert np.all(sol.Qpp(inner) > 0)
    below = np.geomspace(t.z_R * 1e-3, t.z_B * (1 - 1e-9), 300)
    assert np.all(sol.Qp(below) < 0)
    above = np.geomspace(t.z_B, 100 * t.z_B, 50)
    assert np.all(sol.Qp(above) == 0) and np.all(sol.Q(above) == sol.Q_top)
    z = np.geomspace(t.z_R * 1e-2, 100 * t.z_B, 400)
    gap = sol.Q(z) - retired.J(z)
    assert np.all(gap[z <= t.z_R] == 0)
    assert np.all(gap[z > t.z_R] > 0)


def _fd_errors(f, fp, z, h):
    return [abs((f(z + k) - f(z - k)) / (2 * k) - fp(z)) for k in (h, h / 2)]


def test_derivative_forms_agree(sol, thresholds):
    # second-order agreement: halving the step cuts the error ~4x until roundoff
    t = thresholds
    for z in np.linspace(t.z_R * 1.05, t.z_B * 0.95, 7):
        e1, e2 = _fd_errors(sol.Q, sol.Qp, z, 1e-3 * z)
        assert e1 <= 1e-5 * (1 + abs(sol.Qp(z)))
        assert e2 <= max(e1 / 3, 1e-9)
        # Q' carries ~1e-9 relative quadrature noise near z_R, which differencing amplifies
        e1, _ = _fd_errors(sol.Qp, sol.Qpp, z, 1e-3 * z)
        assert e1 <= 2e-5 * abs(sol.Qpp(z))


def test_invert_primal_contract(sol, thresholds):
    t = thresholds
    for x in (1e-8, 0.3, 2.0, 10.0, 30.0):
        p = DV.invert_primal(sol, x)
        assert abs(x + sol.Qp(p.y_star)) <= 1e-10 * (1 + x)
        assert t.z_R <= p.y_star <= t.z_B
        assert p.V == pytest.approx(sol.Q(p.y_star) + p.y_star * x, rel=1e-14)
    assert DV.invert_primal(sol, 1e-10).y_star == pytest.approx(t.z_B, rel=1e-3)
    zero = DV.invert_primal(sol, 0.0)
    assert zero.region == DV.CONSTRAINED and zero.y_star == t.z_B


def test_retirement_wealth(sol, thresholds):
    assert sol.x_ret == pytest.approx(thresholds.z_R**-0.5 / 0.065, rel=1e-12)
    p = DV.invert_primal(sol, 1.5 * sol.x_ret)
    assert p.region == DV.RETIRE_BOUNDARY and p.job == "NONE"
    assert p.y_star < thresholds.z_R


def test_policy_table_monotone(sol):
    xs = np.geomspace(1e-3, 2 * sol.x_ret, 40)
    tab = DV.policy_table(sol, xs)
    y = np.array([r.y_star for r in tab.rows])
    c = np.array([r.c_star for r in tab.rows])
    assert np.all(np.diff(y) < 0)
    work = [r.region != DV.RETIRE_BOUNDARY for r in tab.rows]
    assert np.all(np.diff(c[work]) > 0)
    assert tab.x_S is None and tab.regime == "ALWAYS_B2"


def test_switching_policy(switching):
    t = switching.thresholds
    assert t.regime == SWITCHING
    assert switching.x_S == pytest.approx(-switching.Qp(t.z_S))
    xs = np.linspace(0.05, 0.99 * switching.x_ret, 60)
    rows = DV.policy_table(switching, xs).rows
    jobs = [r.job for r in rows]
    # poor agents sit in the high-wage job, richer ones switch to B2 once
    assert jobs[0] == "B1" and jobs[-1] == "B2"
    assert sum(a != b for a, b in zip(jobs, jobs[1:])) == 1
    for job in ("B1", "B2"):
        c = [r.c_star for r in rows if r.job == job]
        assert np.all(np.diff(c) > 0)
    for r in rows:
        assert (r.job == "B1") == (r.x < switching.x_S)


def test_pair_value_at_equilibrium(sol, thresholds):
    t = thresholds
    for z in (0.3, 3.0, 7.0):
        assert DV.pair_value(sol, t.z_B, t.z_R, z) == pytest.approx(sol.Q(z), rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.02, 0.98))
def test_stopper_cannot_gain(sol, thresholds, a_frac, y_frac):
    t = thresholds
    a = a_frac * t.z_B
    z = t.z_R * 0.5 + y_frac * (t.z_B - t.z_R * 0.5)
    assert DV.pair_value(sol, t.z_B, a, z) <= sol.Q(z) + 1e-9 * (1 + abs(sol.Q(z)))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 5.0), st.floats(0.02, 0.98))
def test_controller_cannot_gain(sol, thresholds, b_frac, y_frac):
    t = thresholds
    b = t.z_R + b_frac * (t.z_B - t.z_R)
    z = t.z_R + y_frac * (min(b, t.z_B) - t.z_R)
    assert DV.pair_value(sol, b, t.z_R, z) >= sol.Q(z) - 1e-9 * (1 + abs(sol.Q(z)))


def test_shifted_barrier_fault(sol, thresholds):
    t = thresholds
    bad = DV.with_shifted_barrier(sol, 1.05)
    y = 0.5 * (t.z_R + bad.thresholds.z_B)
    assert bad.thresholds.z_B == pytest.approx(1.05 * t.z_B)
    assert bad.Q(y) == pytest.approx(DV.pair_value(sol, 1.05 * t.z_B, t.z_R, y), rel=1e-12)
    assert bad.Q(y) > sol.Q(y) + 1e-3
    with pytest.raises(VerificationError):
        DV.verify_grid(bad, np.geomspace(t.z_R / 10, 10 * t.z_B, 500))


def test_invert_primal_rejects_negative(sol):
    with pytest.raises(ValueError):
        DV.invert_primal(sol, -1.0)
    with pytest.raises(ValueError):
        DV.policy_table(sol, [2.0, 1.0])
