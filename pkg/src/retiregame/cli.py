"""Command-line front end: solve, grid, policy, simulate, verify.

Configuration is one JSON document (``--config``) merged over the built-in
defaults; any field can be overridden with a dotted flag, e.g.
``--sim.seed 7`` or ``--set sim.seed=7``.  ``RETIREGAME_OUTPUT_DIR`` takes
precedence over ``output_dir``.

Exit codes: 0 pass, 2 invalid input, 3 verification failure, 4 solver failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import gamesim, utility
from .boundaries import make_context, solve_free_boundaries
from .dualvalue import build_dual, hjbqv_residual, policy_table, with_shifted_barrier
from .errors import QuadratureError, SolverError, ValidationError, VerificationError
from .params import AgentParams, MarketParams
from .retired import build_retired
from .xfm import QuadratureConfig

EXIT_OK, EXIT_VALIDATION, EXIT_VERIFY, EXIT_SOLVER = 0, 2, 3, 4
OUTPUT_ENV = "RETIREGAME_OUTPUT_DIR"

DEFAULTS = {
    "market": {"r": 0.02, "mu": 0.07, "sigma": 0.25, "delta": 0.10},
    "agent": {"eps1": 1.0, "eps2": 0.5, "kappa1": 0.25, "kappa2": 0.64},
    "utility": {"family": "crra", "gamma": 2.0},
    "numerics": {"rel_tol": 1e-9, "abs_tol": 1e-12, "max_refine": 60, "tail_cut": 1e-12,
                 "pasting_tol": 1e-6, "hjbqv_tol": 1e-5},
    "sim": {"n_paths": 200_000, "dt": 0.004, "horizon": 200.0, "seed": 20240101,
            "antithetic": True, "threads": 1},
    "grid": {"n": 500, "z_min": None, "z_max": None},
    "policy": {"x": [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 60.0]},
    # y0 defaults to the midpoint of (z_R, z_B); barrier_shift != 1 injects a fault
    "verify": {"y0": None, "k_sigma": 3.0, "barrier_shift": 1.0},
    "output_dir": "retiregame_out",
}

GRID_COLUMNS = ["z", "Q", "Qp", "Qpp", "lq_residual", "region", "passed"]
POLICY_COLUMNS = ["x", "y_star", "V", "c_star", "job", "region"]


# ---------------------------------------------------------------------------
# configuration


def _merge(base: dict, over: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        path = f"{prefix}{k}"
        if k not in base:
            if prefix == "utility.":  # family-specific keys
                out[k] = v
                continue
            raise ValidationError(path, "unknown configuration key")
        if isinstance(base[k], dict):
            if not isinstance(v, dict):
                raise ValidationError(path, "expected an object")
            out[k] = _merge(base[k], v, path + ".")
        else:
            out[k] = v
    return out


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_dotted(cfg: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise ValidationError(dotted, "unknown configuration key")
        node = node[k]
    if keys[-1] not in node and keys[0] != "utility":
        raise ValidationError(dotted, "unknown configuration key")
    node[keys[-1]] = value


def load_config(path: str | None, overrides=(), env=None) -> dict:
    """Defaults, then the JSON file, then dotted overrides, then the env output dir."""
    cfg = copy.deepcopy(DEFAULTS)
    if path:
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError("config", f"cannot read {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ValidationError("config", "top level must be an object")
        cfg = _merge(cfg, doc)
    for dotted, value in overrides:
        set_dotted(cfg, dotted, value)
    env = os.environ if env is None else env
    if env.get(OUTPUT_ENV):
        cfg["output_dir"] = env[OUTPUT_ENV]
    return cfg


@dataclass(frozen=True)
class RunConfig:
    market: MarketParams
    agent: AgentParams
    utility: utility.UtilityModel
    quad: QuadratureConfig
    pasting_tol: float
    hjbqv_tol: float
    sim: gamesim.SimConfig
    grid: dict
    policy_x: list
    verify: dict
    output_dir: Path
    raw: dict

    @classmethod
    def from_dict(cls, cfg: dict) -> "RunConfig":
        def build(kind, section, name):
            names = {f.name for f in fields(kind)}
            args = {k: v for k, v in cfg[section].items() if k in names}
            try:
                return kind(**args)
            except ValidationError as exc:
                raise ValidationError(f"{section}.{exc.field}", str(exc).split(": ", 1)[-1]) from exc
            except (TypeError, ValueError) as exc:
                raise ValidationError(name, str(exc)) from exc

        num = cfg["numerics"]
        for key in ("pasting_tol", "hjbqv_tol"):
            if not (isinstance(num[key], (int, float)) and num[key] > 0):
                raise ValidationError(f"numerics.{key}", "must be positive")
        x = cfg["policy"]["x"]
        if not isinstance(x, list) or not all(isinstance(v, (int, float)) for v in x):
            raise ValidationError("policy.x", "must be a list of numbers")
        g = cfg["grid"]
        if not (isinstance(g["n"], int) and g["n"] >= 2):
            raise ValidationError("grid.n", "must be an integer >= 2")
        shift = cfg["verify"]["barrier_shift"]
        if not (isinstance(shift, (int, float)) and shift > 0):
            raise ValidationError("verify.barrier_shift", "must be positive")
        return cls(
            market=build(MarketParams, "market", "market"),
            agent=build(AgentParams, "agent", "agent"),
            utility=utility.from_config(cfg["utility"]),
            quad=build(QuadratureConfig, "numerics", "numerics"),
            pasting_tol=float(num["pasting_tol"]),
            hjbqv_tol=float(num["hjbqv_tol"]),
            sim=build(gamesim.SimConfig, "sim", "sim"),
            grid=dict(g),
            policy_x=[float(v) for v in x],
            verify=dict(cfg["verify"]),
            output_dir=Path(cfg["output_dir"]),
            raw=cfg,
        )


# ---------------------------------------------------------------------------
# deterministic emitters


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"
    path.write_text(text)


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating, int, np.integer)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: Path, columns: list, rows: list) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r[c]) for c in columns])
    path.write_text(buf.getvalue())


# ---------------------------------------------------------------------------
# pipeline


class StageError(Exception):
    def __init__(self, stage: str, cause: Exception):
        self.stage, self.cause = stage, cause
        super().__init__(f"{stage}: {cause}")


def solve(rc: RunConfig):
    """(ctx, thresholds, retired, dual) for a run config; failures carry their stage."""
    stage = "retired"
    try:
        retired = build_retired(rc.market, rc.utility, rc.quad)
        stage = "context"
        ctx = make_context(rc.market, rc.agent, rc.utility, rc.quad)
        stage = "thresholds"
        th = solve_free_boundaries(ctx)
        stage = "dual"
        sol = build_dual(th, retired, ctx, rc.pasting_tol)
    except ValidationError:
        raise
    except (SolverError, QuadratureError, FloatingPointError, ArithmeticError) as exc:
        raise StageError(stage, exc) from exc
    return sol


def solution_document(sol) -> dict:
    t = sol.thresholds
    d = t.as_dict()
    d.update({
        "status": "ok",
        "x_ret": sol.x_ret,
        "x_S": sol.x_S,
        "Q_top": sol.Q_top,
        "diagnostics": {"thresholds": t.diagnostics, "pasting": sol.diagnostics},
    })
    return d


def grid_rows(sol, rc: RunConfig):
    t = sol.thresholds
    z_min = rc.grid["z_min"] if rc.grid["z_min"] is not None else t.z_R / 10.0
    z_max = rc.grid["z_max"] if rc.grid["z_max"] is not None else 10.0 * t.z_B
    if not 0 < z_min < z_max:
        raise ValidationError("grid.z_min", "need 0 < z_min < z_max")
    z = np.geomspace(z_min, z_max, int(rc.grid["n"]))
    pts = hjbqv_residual(sol, z, rc.hjbqv_tol)
    q, qp, qpp = sol.Q(z), sol.Qp(z), sol.Qpp(z)
    rows = [{"z": p.z, "Q": q[i], "Qp": qp[i], "Qpp": qpp[i], "lq_residual": p.lq,
             "region": p.region, "passed": p.passed} for i, p in enumerate(pts)]
    return rows, pts


def policy_rows(sol, rc: RunConfig):
    try:
        tab = policy_table(sol, rc.policy_x)
    except ValueError as exc:
        raise ValidationError("policy.x", str(exc)) from exc
    rows = [{"x": r.x, "y_star": r.y_star, "V": r.V, "c_star": r.c_star, "job": r.job,
             "region": r.region} for r in tab.rows]
    return rows, tab


def _y0(sol, rc: RunConfig) -> float:
    t = sol.thresholds
    y0 = rc.verify["y0"]
    y0 = 0.5 * (t.z_R + t.z_B) if y0 is None else float(y0)
    if not t.z_R < y0 < t.z_B:
        raise ValidationError("verify.y0", f"must lie in ({t.z_R!r}, {t.z_B!r})")
    return y0


def _under_test(sol, rc: RunConfig):
    shift = float(rc.verify["barrier_shift"])
    return sol if shift == 1.0 else with_shifted_barrier(sol, shift)


def sim_document(report: gamesim.SimReport, rc: RunConfig, extra=None) -> dict:
    doc = {
        "y0": report.y0,
        "passed": report.passed,
        "failed": [c.name for c in report.failed()],
        "checks": {c.name: c.as_dict() for c in report.comparisons},
        "sim": rc.raw["sim"],
        "k_sigma": rc.verify["k_sigma"],
    }
    if extra:
        doc.update(extra)
    return doc


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve(rc: RunConfig) -> int:
    sol = solve(rc)
    write_json(rc.output_dir / "solution.json", solution_document(sol))
    return EXIT_OK


def cmd_grid(rc: RunConfig) -> int:
    sol = solve(rc)
    rows, pts = grid_rows(sol, rc)
    write_csv(rc.output_dir / "grid.csv", GRID_COLUMNS, rows)
    bad = [p for p in pts if not p.passed]
    if bad:
        print(f"grid: {len(bad)} rows fail classification, first at z={bad[0].z!r} "
              f"({bad[0].region}: {bad[0].reason})", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_policy(rc: RunConfig) -> int:
    sol = solve(rc)
    rows, _ = policy_rows(sol, rc)
    write_csv(rc.output_dir / "policy.csv", POLICY_COLUMNS, rows)
    return EXIT_OK


def cmd_simulate(rc: RunConfig) -> int:
    """Statistical checks only (Nash battery, budget identity, primal value)."""
    sol = _under_test(solve(rc), rc)
    y0 = _y0(sol, rc)
    rep = gamesim.run_checks(y0, rc.sim, sol, k_sigma=float(rc.verify["k_sigma"]))
    write_json(rc.output_dir / "sim_report.json", sim_document(rep, rc))
    return EXIT_OK


def cmd_verify(rc: RunConfig) -> int:
    sol = _under_test(solve(rc), rc)
    _, pts = grid_rows(sol, rc)
    bad_grid = [p for p in pts if not p.passed]
    y0 = _y0(sol, rc)
    rep = gamesim.run_checks(y0, rc.sim, sol, k_sigma=float(rc.verify["k_sigma"]))
    grid_summary = {"n": len(pts), "n_failed": len(bad_grid), "passed": not bad_grid,
                    "first_failure": bad_grid[0].z if bad_grid else None}
    failed = ([] if not bad_grid else ["hjbqv_grid"]) + [c.name for c in rep.failed()]
    doc = sim_document(rep, rc, {"hjbqv_grid": grid_summary})
    doc["passed"] = not failed
    doc["failed"] = failed
    write_json(rc.output_dir / "sim_report.json", doc)
    if failed:
        print("verify: failed checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "grid": cmd_grid, "policy": cmd_policy,
            "simulate": cmd_simulate, "verify": cmd_verify}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="retiregame", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("-c", "--config", help="JSON config file")
    p.add_argument("-s", "--set", action="append", default=[], metavar="KEY=VALUE",
                   help="dotted override, e.g. sim.seed=7 (repeatable)")
    p.add_argument("-o", "--output-dir", help="output directory (the environment variable wins)")
    return p


def _dotted_flags(extra: list) -> list:
    """``--a.b V`` / ``--a.b=V`` pairs left over by argparse."""
    out, i = [], 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or "." not in tok:
            raise ValidationError("arguments", f"unrecognized argument {tok!r}")
        key, eq, val = tok[2:].partition("=")
        if not eq:
            if i + 1 >= len(extra):
                raise ValidationError(key, "missing value")
            val = extra[i + 1]
            i += 1
        out.append((key, _parse_value(val)))
        i += 1
    return out


def main(argv=None) -> int:
    args, extra = _parser().parse_known_args(argv)
    try:
        overrides = []
        for item in args.set:
            key, eq, val = item.partition("=")
            if not eq:
                raise ValidationError(key, "override must look like KEY=VALUE")
            overrides.append((key, _parse_value(val)))
        overrides += _dotted_flags(extra)
        if args.output_dir:
            overrides.append(("output_dir", args.output_dir))
        rc = RunConfig.from_dict(load_config(args.config, overrides))
        return COMMANDS[args.command](rc)
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except StageError as exc:
        print(f"solver failure in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        doc = {"status": "failed", "stage": exc.stage, "error": type(exc.cause).__name__,
                     "message": str(exc.cause)}
        write_json(rc.output_dir / "solution.json", doc)
        return EXIT_SOLVER
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
