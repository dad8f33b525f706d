import math

import numpy as np
import pytest

from retiregame import gamesim as G
from retiregame.dualvalue import pair_value
from retiregame.errors import ValidationError

SHORT = G.SimConfig(n_paths=400, dt=1 / 250, horizon=20.0, seed=11)


@pytest.fixture(scope="module")
def model(sol):
    return G.GameModel(sol.ctx, sol.retired, sol)


def test_config_validation():
    with pytest.raises(ValidationError):
        G.SimConfig(n_paths=3)
    G.SimConfig(n_paths=3, antithetic=False)
    with pytest.raises(ValidationError):
        G.SimConfig(horizon=0.01)
    with pytest.raises(ValidationError):
        G.SimConfig(dt=0.0)
    with pytest.raises(ValidationError):
        G.StrategyPair(b=1.0, a=2.0)
    assert G.SimConfig(dt=0.1, horizon=1.05).n_steps % 2 == 0


def test_deterministic_path(market):
    cfg = G.SimConfig(n_paths=2, dt=0.01, horizon=10.0)
    for y0, b in ((1.0, 2.0), (3.0, 2.0)):
        rec = G.simulate_Z_path(y0, G.StrategyPair(b=b, a=0.1), cfg, 0, market=market, theta=0.0)
        expect = np.minimum(min(y0, b) * np.exp((market.delta - market.r) * rec.t), b)
        assert np.allclose(rec.Z, expect, rtol=1e-12)
        assert rec.D[0] == pytest.approx(min(1.0, b / y0), rel=1e-15)


def test_reflection_and_monotone_control(market):
    cfg = G.SimConfig(n_paths=10_000, dt=1 / 250, horizon=1.0, seed=3)
    pair = G.StrategyPair(b=1.2, a=0.0)
    for pid in range(cfg.n_paths):
        rec = G.simulate_Z_path(1.0, pair, cfg, pid, market=market)
        assert np.all(rec.Z <= pair.b * (1 + 1e-15))
        assert np.all(np.diff(rec.D) <= 0)
        assert rec.stop_index == -1


def test_antithetic_partner(market):
    cfg = G.SimConfig(n_paths=2, dt=1 / 250, horizon=2.0, seed=5)
    pair = G.StrategyPair(b=50.0, a=0.0)
    up = G.simulate_Z_path(1.0, pair, cfg, 0, market=market)
    dn = G.simulate_Z_path(1.0, pair, cfg, 1, market=market)
    drift = (market.delta - market.r - 0.5 * market.theta**2) * up.t
    assert np.allclose(np.log(up.Y) - drift, -(np.log(dn.Y) - drift), atol=1e-12)


def test_immediate_stop_is_exact(sol):
    t = sol.thresholds
    out = G.estimate_J0(0.5 * t.z_R, G.StrategyPair(t.z_B, t.z_R), SHORT, sol.ctx, sol.retired)
    assert out.estimate == float(sol.retired.J(0.5 * t.z_R))
    assert out.stderr == 0.0


def test_reproducible_across_threads(sol, model):
    t = sol.thresholds
    pairs = [G.StrategyPair(t.z_B, t.z_R), G.StrategyPair(0.8 * t.z_B, t.z_R)]
    y0 = 0.5 * (t.z_R + t.z_B)
    chans = lambda b: (G.CH_J0, G.CH_PRIMAL)  # noqa: E731
    one = G.simulate(y0, pairs, SHORT, model, chans)
    two = G.simulate(y0, pairs, G.SimConfig(**{**SHORT.__dict__, "threads": 3}), model, chans)
    for k in one:
        assert one[k] == two[k]
    again = G.simulate(y0, pairs, SHORT, model, chans)
    assert again == one
    other = G.simulate(y0, pairs, G.SimConfig(**{**SHORT.__dict__, "seed": 12}), model, chans)
    assert other[(0, G.CH_J0)].estimate != one[(0, G.CH_J0)].estimate


def test_spline_tables_follow_branches(sol, model):
    t = sol.thresholds
    pairs = [G.StrategyPair(3 * sol.ctx.z_S, t.z_R)]
    plan = G._make_plan(1.0, pairs, lambda b: (G.CH_J0,), model)
    run = plan.tables[plan.run_id[G.CH_J0]]
    zs = sol.ctx.z_S
    z = np.concatenate([np.geomspace(t.z_R, 3 * zs, 200), [zs * (1 - 1e-7), zs * (1 + 1e-7)]])
    exact = np.where(z > zs, model.reward_job(1)(z), model.reward_job(2)(z))
    assert np.max(np.abs(run(z) - exact) / (1 + np.abs(exact))) <= 1e-9


def test_antithetic_preserves_mean(sol, model):
    t = sol.thresholds
    y0 = 0.5 * (t.z_R + t.z_B)
    pair = [G.StrategyPair(t.z_B, t.z_R)]
    base = dict(n_paths=2000, horizon=60.0, seed=21)
    a = G.simulate(y0, pair, G.SimConfig(**base), model, lambda b: (G.CH_J0,))[(0, 0)]
    p = G.simulate(y0, pair, G.SimConfig(**base, antithetic=False), model, lambda b: (G.CH_J0,))[(0, 0)]
    assert abs(a.estimate - p.estimate) <= 3 * math.hypot(a.stderr, p.stderr)


def test_short_horizon_flags_truncation(sol, model):
    t = sol.thresholds
    y0 = 0.5 * (t.z_R + t.z_B)
    out = G.simulate(y0, [G.StrategyPair(t.z_B, t.z_R)], SHORT, model, lambda b: (G.CH_J0,))[(0, 0)]
    assert "truncation" in out.warning
    assert out.truncation_bound > out.stderr


def test_budget_near_zero_wealth(sol, model):
    t = sol.thresholds
    y0 = t.z_B * (1 - 1e-3)
    cfg = G.SimConfig(n_paths=2000, horizon=60.0, seed=4)
    res = G.simulate(y0, [G.StrategyPair(t.z_B, t.z_R)], cfg, model, lambda b: (G.CH_BUDGET_Y, G.CH_BUDGET_Z))
    oracle = -sol.Qp(y0)
    assert oracle < 1e-4
    for c in (G.CH_BUDGET_Y, G.CH_BUDGET_Z):
        o = res[(0, c)]
        assert abs(o.estimate - oracle) <= 3 * o.stderr + 1e-4


def test_primal_matches_dual(sol):
    t = sol.thresholds
    y0 = 1.5 * t.z_R
    out, oracle = G.estimate_primal_value(y0, G.SimConfig(n_paths=4000, horizon=120.0, seed=8), sol)
    assert out.n_stopped > 0
    assert abs(out.estimate - oracle) <= 3 * out.stderr


def test_stop_monitoring_bias_shrinks(sol):
    # right at the stopping boundary the grid-monitored stop is late by O(sqrt(dt))
    t = sol.thresholds
    y0 = 1.0001 * t.z_R
    gaps = []
    for dt in (1 / 250, 1 / 4000):
        out, oracle = G.estimate_primal_value(y0, G.SimConfig(n_paths=2000, dt=dt, horizon=5.0, seed=8), sol)
        gaps.append(abs(out.estimate - oracle))
    assert gaps[1] < 0.6 * gaps[0]


def test_pair_kinds(sol):
    t = sol.thresholds
    kinds = [G._pair_kind(p, t.z_R, t.z_B) for p in G.default_perturbations(t.z_R, t.z_B)]
    assert kinds == ["stopper", "stopper", "controller", "controller"]
    with pytest.raises(ValidationError):
        G._pair_kind(G.StrategyPair(2 * t.z_B, 2 * t.z_R), t.z_R, t.z_B)


@pytest.mark.slow
def test_deviation_matches_pair_value(sol, model):
    t = sol.thresholds
    y0 = 0.5 * (t.z_R + t.z_B)
    pairs = [G.StrategyPair(0.75 * t.z_B, t.z_R), G.StrategyPair(t.z_B, 2 * t.z_R)]
    cfg = G.SimConfig(n_paths=4000, horizon=120.0, seed=99)
    res = G.simulate(y0, pairs, cfg, model, lambda b: (G.CH_J0,))
    for j, p in enumerate(pairs):
        o = res[(j, G.CH_J0)]
        assert not o.warning
        assert abs(o.estimate - pair_value(sol, p.b, p.a, y0)) <= 3 * o.stderr
        assert abs(o.estimate - o.dt_bias_probe) <= 2 * o.stderr


@pytest.mark.slow
@pytest.mark.parametrize("seed", [1, 2])
def test_checks_stable_across_seeds(sol, seed):
    t = sol.thresholds
    y0 = 0.5 * (t.z_R + t.z_B)
    rep = G.run_checks(y0, G.SimConfig(n_paths=6000, horizon=120.0, seed=seed), sol)
    assert rep.passed, [c.as_dict() for c in rep.failed()]
