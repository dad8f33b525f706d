"""Monte Carlo checks of the game value, the saddle point, the budget identity and the primal value.

The dual state is built on a time grid from the exact lognormal

    log Y_k = log y0 + (delta - r - theta^2/2) t_k - theta W_k,
    D_k = min(1, b / max_{j<=k} Y_j),   Z_k = Y_k D_k,

so Z never exceeds the barrier b at a grid point; a strategy pair stops at
the first grid point with Z_k < a.  Randomness for antithetic pair p (or
plain path p) comes from a Philox stream keyed by (seed, p), so every path
is reproducible on its own and results do not depend on thread count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import _simkernel as K
from .boundaries import BoundaryContext
from .dualvalue import DualSolution
from .errors import ValidationError
from .retired import RetiredSolution

# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 200_000
    dt: float = 1.0 / 250.0
    horizon: float = 200.0
    seed: int = 20240101
    antithetic: bool = True
    threads: int = 1

    def __post_init__(self):
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ValidationError("sim.n_paths", "must be a positive integer")
        if self.antithetic and self.n_paths % 2:
            raise ValidationError("sim.n_paths", "must be even with antithetic sampling")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValidationError("sim.dt", "must be positive")
        if not (math.isfinite(self.horizon) and self.horizon >= 10 * self.dt):
            raise ValidationError("sim.horizon", "must be at least 10 * dt")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ValidationError("sim.seed", "must be an integer in [0, 2^64)")
        if int(self.threads) != self.threads or self.threads < 1:
            raise ValidationError("sim.threads", "must be a positive integer")

    @property
    def n_steps(self) -> int:
        """Grid steps, rounded up to even so the coarse probe ends at the horizon."""
        n = max(int(round(self.horizon / self.dt)), 10)
        return n + (n % 2)

    @property
    def n_draws(self) -> int:
        """Independent random streams (antithetic pairs or plain paths)."""
        return self.n_paths // 2 if self.antithetic else self.n_paths


@dataclass(frozen=True)
class StrategyPair:
    b: float
    a: float

    def __post_init__(self):
        if not (math.isfinite(self.b) and self.b > 0):
            raise ValidationError("pair.b", "control barrier must be positive and finite")
        if not (math.isfinite(self.a) and self.a >= 0):
            raise ValidationError("pair.a", "stop threshold must be non-negative and finite")
        if not self.a < self.b:
            raise ValidationError("pair.a", "stop threshold must lie below the barrier")


@dataclass(frozen=True)
class SimOutcome:
    estimate: float
    stderr: float
    n_stopped: int
    mean_stop_time: float
    dt_bias_probe: float
    truncation_bound: float = 0.0
    warning: str = ""
    n_samples: int = 0

    def as_dict(self) -> dict:
        return {
            "estimate": self.estimate, "stderr": self.stderr, "n_stopped": self.n_stopped,
            "mean_stop_time": self.mean_stop_time, "dt_bias_probe": self.dt_bias_probe,
            "truncation_bound": self.truncation_bound, "warning": self.warning,
        }


# ---------------------------------------------------------------------------
# spline tables in u = log z


@dataclass(frozen=True)
class LogTable:
    """Cubic spline of one or two smooth pieces on a uniform u-grid.

    With a split, a grid node sits exactly on it; each piece is fitted on its
    own nodes plus a few beyond the split so its end conditions stay smooth.
    """

    u0: float
    du: float
    coef: np.ndarray  # (n_intervals, 4), local polynomial in (u - u_i) / du

    @classmethod
    def build(cls, lo_fn, u_min: float, u_max: float, du: float, hi_fn=None, u_split: float | None = None):
        """Grid from u_min to u_max; when u_split is inside, a node sits on it."""
        if u_split is not None and u_min < u_split < u_max:
            i_s = int(math.ceil((u_split - u_min) / du))
            u0 = u_split - i_s * du
            n = i_s + int(math.ceil((u_max - u_split) / du))
        else:
            i_s, u0, n = None, u_min, int(math.ceil((u_max - u_min) / du))
        if hi_fn is None or i_s is None:
            fn = hi_fn if (hi_fn is not None and u_split is not None and u_split <= u_min) else lo_fn
            return cls(u0, du, cls._fit(fn, u0 + du * np.arange(n + 1), du))
        pad = 3
        left = cls._fit(lo_fn, u0 + du * np.arange(i_s + pad + 1), du)[:i_s]
        right = cls._fit(hi_fn, u0 + du * np.arange(i_s - pad, n + 1), du)[pad:]
        return cls(u0, du, np.ascontiguousarray(np.vstack([left, right])))

    @staticmethod
    def _fit(fn, nodes, du):
        vals = np.asarray(fn(np.exp(nodes)), dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("non-finite value while tabulating a path integrand")
        sp = CubicSpline(nodes, vals)
        c = sp.c  # c[m, i] multiplies (u - u_i)^(3 - m)
        return np.stack([c[3], c[2] * du, c[1] * du**2, c[0] * du**3], axis=1)

    def __call__(self, z):
        u = np.log(np.asarray(z, dtype=float))
        t = np.clip((u - self.u0) / self.du, 0.0, self.coef.shape[0] - 1e-9)
        i = t.astype(int)
        f = t - i
        c = self.coef[i]
        return c[..., 0] + f * (c[..., 1] + f * (c[..., 2] + f * c[..., 3]))


# ---------------------------------------------------------------------------
# model functions along the path


@dataclass(frozen=True)
class GameModel:
    ctx: BoundaryContext
    retired: RetiredSolution
    dual: DualSolution | None = None

    def reward_job(self, job: int):
        a, u = self.ctx.agent, self.ctx.utility
        kap, eps = (a.kappa1, a.eps1) if job == 1 else (a.kappa2, a.eps2)
        return lambda z: u.utilde(z / kap) + eps * z

    def net_spend_job(self, job: int):
        """c_hat - eps_hat on a fixed job."""
        a, u = self.ctx.agent, self.ctx.utility
        kap, eps = (a.kappa1, a.eps1) if job == 1 else (a.kappa2, a.eps2)
        return lambda z: u.I(z / kap) / kap - eps

    def felicity_job(self, job: int):
        a, u = self.ctx.agent, self.ctx.utility
        kap = a.kappa1 if job == 1 else a.kappa2
        return lambda z: u.u(u.I(z / kap))

    def retired_total(self, z):
        """J_R(z) + z X_R(z) = V_R(X_R(z))."""
        return self.retired.J(z) + z * self.retired.X(z)

    def wealth(self, z):
        """-Q'(z) continued smoothly below z_R, used only at the horizon."""
        d = self.dual
        z = np.asarray(z, dtype=float)
        t = d.thresholds
        out = np.zeros_like(z)
        lo = z < t.z_R
        mid = (z >= t.z_R) & (z < t.z_B)
        if lo.any():
            out[lo] = -d.Qp_coef(z[lo])
        if mid.any():
            out[mid] = -d.Qp_kernel(z[mid])
        return out


CH_J0, CH_BUDGET_Y, CH_BUDGET_Z, CH_PRIMAL = 0, 1, 2, 3
CHANNEL_NAMES = ("J0", "budget_unweighted", "budget_weighted", "primal")


@dataclass
class _Plan:
    x0: float
    pairs: list
    groups: list  # barrier values in order
    order: np.ndarray  # pair index -> position in grouped arrays
    chan_active: np.ndarray
    tables: list
    run_id: np.ndarray
    stop_id: np.ndarray
    end_id: np.ndarray
    chan_kind: np.ndarray


def _table_range(y0, pairs):
    b_hi = max(p.b for p in pairs)
    positive = [p.a for p in pairs if p.a > 0]
    z_lo = min(min(positive) if positive else min(y0, b_hi) * 1e-17, min(y0, b_hi))
    return math.log(z_lo) - 1.0, math.log(b_hi) + 1e-3


def _make_plan(y0, pairs, channels_for_group, model: GameModel, n_intervals=6000) -> _Plan:
    barriers = sorted(set(p.b for p in pairs))
    order = sorted(range(len(pairs)), key=lambda j: (barriers.index(pairs[j].b), j))
    u_lo, u_hi = _table_range(y0, pairs)
    du = (u_hi - u_lo) / n_intervals
    us = math.log(model.ctx.z_S)

    def split(lo_fn, hi_fn):
        return LogTable.build(lo_fn, u_lo, u_hi, du, hi_fn=hi_fn, u_split=us)

    def plain(fn):
        return LogTable.build(fn, u_lo, u_hi, du, u_split=us)

    def times_z(fn):
        return lambda z: z * fn(z)

    tables, run_id, stop_id, end_id = [], [], [], []

    def add(t):
        if t is None:
            return -1
        tables.append(t)
        return len(tables) - 1

    used = sorted(set(c for b in barriers for c in channels_for_group(b)))
    chans = {}
    jr = plain(model.retired.J)
    j_id = add(jr)
    for c in range(len(CHANNEL_NAMES)):
        if c not in used:
            run_id.append(-1), stop_id.append(-1), end_id.append(-1)
            continue
        if c == CH_J0:
            r, s, e = add(split(model.reward_job(2), model.reward_job(1))), j_id, -1
        elif c in (CH_BUDGET_Y, CH_BUDGET_Z):
            if "budget" not in chans:
                chans["budget"] = (add(split(times_z(model.net_spend_job(2)), times_z(model.net_spend_job(1)))),
                                   add(plain(times_z(model.retired.X))), add(plain(times_z(model.wealth))))
            r, s, e = chans["budget"]
        else:
            r, s, e = add(split(model.felicity_job(2), model.felicity_job(1))), add(plain(model.retired_total)), -1
        run_id.append(r), stop_id.append(s), end_id.append(e)
    chan_active = np.zeros((len(barriers), len(CHANNEL_NAMES)), dtype=np.bool_)
    for g, b in enumerate(barriers):
        for c in channels_for_group(b):
            chan_active[g, c] = True
    return _Plan(
        x0=math.log(y0), pairs=pairs, groups=barriers, order=np.asarray(order),
        chan_active=chan_active, tables=tables,
        run_id=np.asarray(run_id, dtype=np.int64), stop_id=np.asarray(stop_id, dtype=np.int64),
        end_id=np.asarray(end_id, dtype=np.int64),
        chan_kind=np.asarray([K.W_PLAIN, K.W_Y, K.W_Z, K.W_PLAIN], dtype=np.int64),
    )


def _stack_tables(tables):
    first = tables[0]
    for t in tables[1:]:
        if t.coef.shape != first.coef.shape or t.u0 != first.u0 or t.du != first.du:
            raise ValueError("path tables must share one grid")
    tabs = np.ascontiguousarray(np.stack([t.coef for t in tables]))
    return tabs, first.u0, 1.0 / first.du, first.coef.shape[0]


def path_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))


@dataclass
class RawRun:
    """Per-sample channel values (antithetic pairs already averaged)."""

    fine: np.ndarray  # (n_samples, n_pairs, n_channels)
    coarse: np.ndarray
    stop_step: np.ndarray  # (n_paths, n_pairs), -1 if not stopped
    clamped: int
    cfg: SimConfig


def _run(plan: _Plan, cfg: SimConfig, model: GameModel) -> RawRun:
    m = model.ctx.market
    theta = m.theta
    drift = m.delta - m.r - 0.5 * theta * theta
    n_steps, dt = cfg.n_steps, cfg.dt
    disc = np.exp(-m.delta * dt * np.arange(n_steps + 1))
    ordered = [plan.pairs[j] for j in plan.order]
    group_lb = np.array([math.log(b) for b in plan.groups])
    gidx = [plan.groups.index(p.b) for p in ordered]
    group_start = np.searchsorted(np.asarray(gidx), np.arange(len(plan.groups) + 1)).astype(np.int64)
    pair_la = np.array([math.log(p.a) if p.a > 0 else -np.inf for p in ordered])
    tabs, u0, inv_du, nint = _stack_tables(plan.tables)
    signs = np.array([1.0, -1.0]) if cfg.antithetic else np.array([1.0])
    S, P, C = signs.size, len(ordered), len(CHANNEL_NAMES)
    n = cfg.n_draws
    fine = np.zeros((n, S, P, C))
    coarse = np.zeros((n, S, P, C))
    stop = np.full((n, S, P), -1, dtype=np.int64)
    clamps = np.zeros(n, dtype=np.int64)
    drift_dt, vol_sqdt = drift * dt, theta * math.sqrt(dt)

    def work(lo, hi):
        clamp = np.zeros(1, dtype=np.int64)
        for i in range(lo, hi):
            clamp[0] = 0
            K.simulate_pairs(path_rng(cfg.seed, i), signs, plan.x0, drift_dt, vol_sqdt, dt, n_steps, disc,
                             group_lb, group_start, pair_la, plan.chan_active,
                             plan.chan_kind, plan.run_id, plan.stop_id, plan.end_id,
                             tabs, u0, inv_du, nint,
                             fine[i], coarse[i], stop[i], clamp)
            clamps[i] = clamp[0]

    if cfg.threads == 1:
        work(0, n)
    else:
        chunk = max(1, n // (8 * cfg.threads))
        with ThreadPoolExecutor(cfg.threads) as ex:
            list(ex.map(lambda lo: work(lo, min(n, lo + chunk)), range(0, n, chunk)))
    # back to caller's pair order
    inv = np.empty_like(plan.order)
    inv[plan.order] = np.arange(P)
    fine, coarse, stop = fine[:, :, inv], coarse[:, :, inv], stop[:, :, inv]
    return RawRun(fine.mean(axis=1), coarse.mean(axis=1), stop.reshape(n * S, P),
                  int(clamps.sum()), cfg)


def _summarize(raw: RawRun, j: int, c: int, bound: float) -> SimOutcome:
    v = raw.fine[:, j, c]
    n = v.size
    est = float(math.fsum(v) / n)
    se = float(np.std(v, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    st = raw.stop_step[:, j]
    stopped = st >= 0
    n_stop = int(stopped.sum())
    mst = float(st[stopped].mean() * raw.cfg.dt) if n_stop else math.nan
    probe = float(math.fsum(raw.coarse[:, j, c]) / n)
    warn = []
    if n > 1 and bound > se:
        warn.append(f"horizon truncation bound {bound:.3g} exceeds stderr {se:.3g}")
    if raw.clamped:
        warn.append(f"{raw.clamped} table lookups clamped at the tabulated range")
    return SimOutcome(est, se, n_stop, mst, probe, bound, "; ".join(warn), n)


def _truncation_bounds(y0, pair, model: GameModel, T):
    """e^{-delta T} times a bound on the value left after the horizon, per channel."""
    ctx = model.ctx
    zs = np.geomspace(max(pair.a, 1e-12 * pair.b, min(y0, pair.b) * 1e-3), pair.b, 400)
    jr = np.abs(model.retired.J(zs))
    rew = np.maximum(np.abs(model.reward_job(1)(zs)), np.abs(model.reward_job(2)(zs)))
    fel = np.maximum(np.abs(model.felicity_job(1)(zs)), np.abs(model.felicity_job(2)(zs)))
    delta = ctx.market.delta
    j0 = max(float(jr.max()), float(rew.max()) / delta)
    if model.dual is not None:
        t = model.dual.thresholds
        j0 = max(j0, abs(float(model.dual.Q(t.z_R))), abs(float(model.retired.J(t.z_R))))
    primal = max(float(np.abs(model.retired_total(zs)).max()), float(fel.max()) / delta)
    f = math.exp(-delta * T)
    # the budget channels carry the exact terminal wealth term: no truncation
    return {CH_J0: f * j0, CH_BUDGET_Y: 0.0, CH_BUDGET_Z: 0.0, CH_PRIMAL: f * primal}


def _exact_immediate(y0, pair, model: GameModel):
    z0 = min(y0, pair.b)
    return z0 < pair.a, z0


def simulate(y0: float, pairs: list, cfg: SimConfig, model: GameModel, channels_for_group) -> dict:
    """Run every pair on common random numbers; returns {(pair_index, channel): SimOutcome}."""
    if not (math.isfinite(y0) and y0 > 0):
        raise ValidationError("y0", "must be positive and finite")
    plan = _make_plan(y0, pairs, channels_for_group, model)
    raw = _run(plan, cfg, model)
    out = {}
    for j, p in enumerate(pairs):
        g = plan.groups.index(p.b)
        bounds = _truncation_bounds(y0, p, model, cfg.n_steps * cfg.dt)
        immediate, z0 = _exact_immediate(y0, p, model)
        for c in range(len(CHANNEL_NAMES)):
            if not plan.chan_active[g, c]:
                continue
            if immediate:
                out[(j, c)] = _immediate_outcome(c, y0, z0, model, raw.stop_step.shape[0])
            else:
                out[(j, c)] = _summarize(raw, j, c, bounds[c])
    return out


def _immediate_outcome(c, y0, z0, model, n_paths):
    if c == CH_J0:
        v = float(model.retired.J(z0))
    elif c == CH_BUDGET_Y:
        v = float(model.retired.X(z0))
    elif c == CH_BUDGET_Z:
        v = float(model.retired.X(z0)) * z0 / y0
    else:
        v = float(model.retired_total(z0))
    return SimOutcome(v, 0.0, n_paths, 0.0, v, 0.0, "", n_paths)


# ---------------------------------------------------------------------------
# public operations


@dataclass(frozen=True)
class PathRecord:
    t: np.ndarray
    Y: np.ndarray
    M: np.ndarray
    D: np.ndarray
    Z: np.ndarray
    stop_index: int  # -1 if the threshold is never crossed


def simulate_Z_path(y0: float, pair: StrategyPair, cfg: SimConfig, path_id: int,
                    market=None, theta: float | None = None) -> PathRecord:
    """Grid path of the dual state for one path, identical to the one used in the estimators.

    ``theta`` overrides the market volatility ratio (0 gives a deterministic path).
    """
    if market is None:
        raise ValidationError("market", "market parameters are required")
    th = market.theta if theta is None else float(theta)
    drift = market.delta - market.r - 0.5 * th * th
    stream, sign = (path_id // 2, 1.0 - 2.0 * (path_id % 2)) if cfg.antithetic else (path_id, 1.0)
    lx, lm, lz = K.z_path(path_rng(cfg.seed, stream), sign, math.log(y0), drift * cfg.dt,
                          th * math.sqrt(cfg.dt), cfg.n_steps, math.log(pair.b))
    Y, M, Z = np.exp(lx), np.exp(lm), np.exp(lz)
    below = np.flatnonzero(lz < (math.log(pair.a) if pair.a > 0 else -np.inf))
    return PathRecord(cfg.dt * np.arange(cfg.n_steps + 1), Y, M, np.minimum(1.0, pair.b / M), Z,
                      int(below[0]) if below.size else -1)


def estimate_J0(y0: float, pair: StrategyPair, cfg: SimConfig, ctx: BoundaryContext,
                retired: RetiredSolution) -> SimOutcome:
    res = simulate(y0, [pair], cfg, GameModel(ctx, retired), lambda b: (CH_J0,))
    out = res[(0, CH_J0)]
    if out.warning:
        warnings.warn(out.warning, RuntimeWarning, stacklevel=2)
    return out


@dataclass(frozen=True)
class Comparison:
    name: str
    kind: str  # equilibrium | stopper | controller | budget | primal | agreement
    estimate: float
    stderr: float
    oracle: float
    margin: float  # distance to the failure boundary in units of the comparison; > 0 passes
    passed: bool
    b: float = math.nan
    a: float = math.nan
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {"name": self.name, "kind": self.kind, "estimate": self.estimate, "stderr": self.stderr,
             "oracle": self.oracle, "margin": self.margin, "passed": self.passed}
        if math.isfinite(self.b):
            d["b"], d["a"] = self.b, self.a
        d.update(self.detail)
        return d


@dataclass(frozen=True)
class SimReport:
    y0: float
    comparisons: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.comparisons)

    def failed(self) -> list:
        return [c for c in self.comparisons if not c.passed]

    def __getitem__(self, name: str) -> Comparison:
        for c in self.comparisons:
            if c.name == name:
                return c
        raise KeyError(name)


def default_perturbations(z_R: float, z_B: float) -> list:
    """Two stopper-side and two controller-side deviations.

    The near barrier 0.95 z_B is what exposes a solution whose barrier sits a
    few percent too high: it brings the controller back close to the optimum.
    """
    return [StrategyPair(z_B, 0.5 * z_R), StrategyPair(z_B, 2.0 * z_R),
            StrategyPair(0.95 * z_B, z_R), StrategyPair(1.5 * z_B, z_R)]


def _pair_kind(p: StrategyPair, z_R, z_B):
    if p.b == z_B and p.a == z_R:
        return "equilibrium"
    if p.b == z_B:
        return "stopper"
    if p.a == z_R:
        return "controller"
    raise ValidationError("perturbations", f"pair {p} changes both strategies")


def _nash_comparisons(res, pairs, kinds, q0, k_sigma=3.0):
    out = []
    for j, (p, kind) in enumerate(zip(pairs, kinds)):
        o = res[(j, CH_J0)]
        tol = k_sigma * o.stderr
        if kind == "equilibrium":
            margin = tol - abs(o.estimate - q0)
        elif kind == "stopper":
            margin = q0 + tol - o.estimate
        else:
            margin = o.estimate - (q0 - tol)
        detail = {"dt_bias_probe": o.dt_bias_probe, "n_stopped": o.n_stopped,
                  "truncation_bound": o.truncation_bound}
        if o.warning:
            detail["warning"] = o.warning
        out.append(Comparison(f"nash_{kind}_b{p.b:.6g}_a{p.a:.6g}", kind, o.estimate, o.stderr, q0,
                              margin, margin >= 0 and not o.warning, p.b, p.a, detail))
    return out


def _budget_comparisons(res, j, oracle, k_sigma=3.0):
    u, w = res[(j, CH_BUDGET_Y)], res[(j, CH_BUDGET_Z)]
    out = []
    for name, o in (("budget_unweighted", u), ("budget_weighted", w)):
        margin = k_sigma * o.stderr - abs(o.estimate - oracle)
        out.append(Comparison(name, "budget", o.estimate, o.stderr, oracle, margin, margin >= 0,
                              detail={"dt_bias_probe": o.dt_bias_probe}))
    se = math.hypot(u.stderr, w.stderr)
    margin = k_sigma * se - abs(u.estimate - w.estimate)
    out.append(Comparison("budget_forms_agree", "agreement", u.estimate - w.estimate, se, 0.0,
                          margin, margin >= 0))
    return out


def _primal_comparison(res, j, oracle, k_sigma=3.0):
    o = res[(j, CH_PRIMAL)]
    margin = k_sigma * o.stderr - abs(o.estimate - oracle)
    detail = {"dt_bias_probe": o.dt_bias_probe, "truncation_bound": o.truncation_bound}
    if o.warning:
        detail["warning"] = o.warning
    return Comparison("primal_value", "primal", o.estimate, o.stderr, oracle, margin,
                      margin >= 0 and not o.warning, detail=detail)


def run_checks(y0: float, cfg: SimConfig, sol: DualSolution, perturbations=None,
               nash=True, budget=True, primal=True, k_sigma: float = 3.0) -> SimReport:
    """Every statistical check in one pass on common random numbers."""
    t = sol.thresholds
    eq = StrategyPair(t.z_B, t.z_R)
    pairs = [eq] + list(default_perturbations(t.z_R, t.z_B) if perturbations is None else perturbations)
    kinds = [_pair_kind(p, t.z_R, t.z_B) for p in pairs]
    extra = tuple(c for c, on in ((CH_BUDGET_Y, budget), (CH_BUDGET_Z, budget), (CH_PRIMAL, primal)) if on)
    model = GameModel(sol.ctx, sol.retired, sol)
    res = simulate(y0, pairs, cfg, model, lambda b: (CH_J0,) + (extra if b == t.z_B else ()))
    comps = []
    q0 = float(sol.Q(y0))
    if nash:
        comps += _nash_comparisons(res, pairs, kinds, q0, k_sigma)
    if budget:
        comps += _budget_comparisons(res, 0, -float(sol.Qp(y0)), k_sigma)
    if primal:
        x = -float(sol.Qp(y0))
        comps.append(_primal_comparison(res, 0, q0 + y0 * x, k_sigma))
    return SimReport(y0, comps)


def verify_nash(y0: float, cfg: SimConfig, sol: DualSolution, perturbations=None) -> SimReport:
    t = sol.thresholds
    perts = default_perturbations(t.z_R, t.z_B) if perturbations is None else list(perturbations)
    kinds = {_pair_kind(p, t.z_R, t.z_B) for p in perts}
    if not {"stopper", "controller"} <= kinds:
        raise ValidationError("perturbations", "need stopper-side and controller-side variants")
    return run_checks(y0, cfg, sol, perts, nash=True, budget=False, primal=False)


def verify_budget_identity(y0: float, cfg: SimConfig, sol: DualSolution) -> SimReport:
    t = sol.thresholds
    if not t.z_R < y0 < t.z_B:
        raise ValidationError("y0", "must lie strictly between z_R and z_B")
    return run_checks(y0, cfg, sol, [], nash=False, budget=True, primal=False)


def estimate_primal_value(y0: float, cfg: SimConfig, sol: DualSolution) -> tuple[SimOutcome, float]:
    """(simulated primal utility, V(-Q'(y0)) from the dual)."""
    t = sol.thresholds
    if not t.z_R < y0 < t.z_B:
        raise ValidationError("y0", "must lie strictly between z_R and z_B")
    model = GameModel(sol.ctx, sol.retired, sol)
    res = simulate(y0, [StrategyPair(t.z_B, t.z_R)], cfg, model, lambda b: (CH_PRIMAL,))
    return res[(0, CH_PRIMAL)], float(sol.Q(y0)) - y0 * float(sol.Qp(y0))
