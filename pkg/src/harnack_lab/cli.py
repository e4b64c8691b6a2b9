"""Command-line orchestration.

Subcommands:
  cone      tabulate the closed-form thresholds n -> (k, k0, k1, z, gap) as CSV
  gbound    exponent bounds and admissibility margins for one quintuple
  solve     run the integrator from a config and store the trajectory
  verify    solve (or re-load) and certify the matrix/trace/claim inequalities
  harnack   evaluate path-comparison queries against a trajectory
  validate  exact-solution checks of the integrator

Exit codes: 0 all checks passed, 1 a verification failed, 2 configuration or
guard errors.  Verification reports are JSON lines with the resolved config
embedded; identical config and seed give byte-identical reports.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import cone as cone_mod
from .cone import Quintuple, epsilon_of, exponent_gap, gap_linear, gap_quadratic, is_admissible
from .config import RunConfig, initial_field, load_config
from .fields import FieldCache
from .grid import Grid, ScalarField
from .solver import (
    GuardTrip,
    STATUS_COMPLETED,
    ode_blowup_time,
    read_trajectory,
    solve,
    write_trajectory,
)
from .verifier import (
    ConfigurationError,
    PathQuery,
    verify_claim,
    verify_harnack_pair,
    verify_matrix,
    verify_trace,
)
from .util import json_line

__all__ = ["main", "entrypoint"]


def _emit_reports(reports, config: RunConfig, out_path) -> None:
    lines = []
    resolved = config.resolved_dict()
    for rep in reports:
        payload = rep.to_dict()
        payload["config"] = resolved
        lines.append(json_line(payload))
    text = "\n".join(lines) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(out_path).write_text(text)


def _load_or_solve(config: RunConfig, force_solve: bool = False):
    """Reuse a stored trajectory when the output directory holds one."""
    traj_dir = None
    if config.out_dir is not None:
        traj_dir = Path(config.out_dir) / "trajectory"
    if traj_dir is not None and not force_solve and (traj_dir / "index.json").exists():
        return read_trajectory(traj_dir), False
    traj = solve(
        initial_field(config),
        config.t_end,
        config.dt,
        config.p,
        reaction=config.reaction,
        stride=config.snapshot_stride,
        blowup_cap=config.blowup_cap,
    )
    if traj_dir is not None:
        write_trajectory(traj, traj_dir)
    return traj, True


def _check_exponent(config: RunConfig) -> Quintuple:
    q = config.resolve_quintuple()
    rep = is_admissible(q, config.n, config.tol_boundary)
    if not rep.member:
        raise ConfigurationError(
            f"configured quintuple {q.as_tuple()} is not admissible for n={config.n} "
            f"(margins {rep.margins})"
        )
    gap = exponent_gap(q)
    if not (1.0 < config.p < 1.0 + gap):
        raise ConfigurationError(
            f"p={config.p} violates the exponent bound: need 1 < p < 1 + G = {1.0 + gap:.12g}"
        )
    return q


def cmd_cone(args) -> int:
    if args.n_min > args.n_max:
        rows = []
    else:
        rows = cone_mod.cone_table(args.n_min, args.n_max)
    text = cone_mod.format_cone_csv(rows)
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return 0


def cmd_gbound(args) -> int:
    if args.quintuple is not None:
        vals = [float(v) for v in args.quintuple.split(",")]
        if len(vals) != 5:
            raise ConfigurationError("--quintuple needs five comma-separated values")
        q = Quintuple(*vals)
        n = args.n
    elif args.config is not None:
        config = load_config(args.config, _overrides(args))
        q = config.resolve_quintuple()
        n = config.n
    else:
        raise ConfigurationError("gbound needs --quintuple or --config")
    rep = is_admissible(q, n)
    payload = {
        "quintuple": list(q.as_tuple()),
        "n": n,
        "admissible": rep.member,
        "margins": list(rep.margins),
    }
    if rep.member:
        payload.update(
            {
                "gap_linear": gap_linear(q.b, q.d, q.theta),
                "gap_quadratic": gap_quadratic(q),
                "exponent_gap": exponent_gap(q),
                "p_max": 1.0 + exponent_gap(q),
                "epsilon": epsilon_of(q),
            }
        )
    sys.stdout.write(json_line(payload) + "\n")
    return 0


def _overrides(args) -> dict:
    return {
        "out_dir": getattr(args, "out", None),
        "seed": getattr(args, "seed", None),
        "tol_margin": getattr(args, "tol_margin", None),
    }


def cmd_solve(args) -> int:
    config = load_config(args.config, _overrides(args))
    traj, _fresh = _load_or_solve(config, force_solve=True)
    summary = {
        "status": traj.status,
        "snapshots": len(traj.snapshots),
        "t_final": traj.snapshots[-1].t,
        "guard_time": traj.guard_time,
        "config": config.resolved_dict(),
    }
    sys.stdout.write(json_line(summary) + "\n")
    return 0


def cmd_verify(args) -> int:
    config = load_config(args.config, _overrides(args))
    q = _check_exponent(config)
    traj, _fresh = _load_or_solve(config)
    if traj.status != STATUS_COMPLETED:
        raise ConfigurationError(
            f"trajectory ended with status {traj.status} at t={traj.guard_time}; "
            f"verification needs a completed run"
        )
    cache = FieldCache(traj)
    tol = config.tol_margin
    reports = [
        verify_matrix(traj, q, config.n, tolerance=tol, cache=cache),
        verify_trace(traj, q, config.n, tolerance=tol, cache=cache),
        verify_claim(traj, q, config.n, tolerance=tol, cache=cache),
    ]
    out_path = None
    if config.out_dir is not None:
        out_path = Path(config.out_dir) / "reports.jsonl"
    _emit_reports(reports, config, out_path)
    for rep in reports:
        verdict = "PASS" if rep.passed else "FAIL"
        print(f"{verdict} {rep.kind}: min_margin={rep.min_margin:.6g}", file=sys.stderr)
    return 0 if all(r.passed for r in reports) else 1


def _load_queries(path) -> list:
    queries = []
    text = Path(path).read_text()
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"bad query on line {line_no}: {exc}") from None
        queries.append(
            PathQuery(
                x1=raw["x1"],
                x2=raw["x2"],
                t1=raw["t1"],
                t2=raw["t2"],
                variant=raw.get("variant", "harn"),
                layers=raw.get("layers", 16),
                radius=raw.get("radius", 8),
            )
        )
    if not queries:
        raise ConfigurationError(f"no queries found in {path}")
    return queries


def cmd_harnack(args) -> int:
    config = load_config(args.config, _overrides(args))
    q = config.resolve_quintuple()
    queries = _load_queries(args.queries)
    traj, _fresh = _load_or_solve(config)
    if traj.status != STATUS_COMPLETED:
        raise ConfigurationError(
            f"trajectory ended with status {traj.status}; queries need a completed run"
        )
    cache = FieldCache(traj)
    reports = [
        verify_harnack_pair(traj, query, q, config.n, tolerance=config.tol_margin, cache=cache)
        for query in queries
    ]
    out_path = None
    if config.out_dir is not None:
        out_path = Path(config.out_dir) / "harnack_reports.jsonl"
    _emit_reports(reports, config, out_path)
    n_fail = sum(not r.passed for r in reports)
    print(f"{len(reports)} queries, {n_fail} failed", file=sys.stderr)
    return 0 if n_fail == 0 else 1


def cmd_validate(args) -> int:
    """Exact-solution checks: heat kernel, space-constant reaction, blow-up guard."""
    checks = []

    # Heat-only single mode against the exact kernel.
    grid = Grid(1, 256, 1.0)
    x = grid.coords()
    u0 = ScalarField(grid, 1.0 + 0.5 * np.sin(2.0 * np.pi * x), 0.0)
    traj = solve(u0, 0.1, 1e-6, p=2.0, reaction=False, stride=10_000)
    exact = 1.0 + 0.5 * np.exp(-4.0 * np.pi**2 * 0.1) * np.sin(2.0 * np.pi * x)
    err = float(np.max(np.abs(traj.snapshots[-1].values - exact)))
    checks.append(("heat_exact", err <= 1e-6, f"max_err={err:.3e} tol=1e-06"))

    # Space-constant solution of the reaction ODE.
    grid = Grid(1, 16, 1.0)
    T, p = 2.0, 1.5
    u0 = ScalarField(grid, np.full(grid.shape, ((p - 1.0) * T) ** (-1.0 / (p - 1.0))), 0.0)
    traj = solve(u0, 1.0, 1e-5, p=p, stride=100_000)
    exact_val = ((p - 1.0) * (T - 1.0)) ** (-1.0 / (p - 1.0))
    rel = abs(traj.snapshots[-1].values.max() - exact_val) / exact_val
    checks.append(("constant_exact", rel <= 1e-4, f"rel_err={rel:.3e} tol=1e-04"))

    # Blow-up guard timing against the comparison ODE.
    m0, p = 0.5, 1.2
    u0 = ScalarField(grid, np.full(grid.shape, m0), 0.0)
    traj = solve(u0, 8.0, 1e-3, p=p, stride=1000)
    t_star = ode_blowup_time(m0, p)
    ok = (
        traj.status == "blowup_guard"
        and traj.guard_time is not None
        and 0.9 * t_star <= traj.guard_time <= 1.1 * t_star
    )
    checks.append(("blowup_guard", ok, f"trip={traj.guard_time} expected~{t_star:.4f}"))

    all_ok = True
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        all_ok = all_ok and ok
    return 0 if all_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harnack-lab",
        description="Admissible-cone tables, torus reaction-diffusion solves, "
        "and tensor inequality certification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_cone = sub.add_parser("cone", help="CSV table of the closed-form thresholds")
    p_cone.add_argument("--n-min", type=int, default=1)
    p_cone.add_argument("--n-max", type=int, default=10)
    p_cone.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p_cone.set_defaults(func=cmd_cone)

    p_gbound = sub.add_parser("gbound", help="exponent bounds for one quintuple")
    p_gbound.add_argument("--quintuple", default=None, help="a,b,c,d,theta")
    p_gbound.add_argument("--n", type=int, default=1)
    p_gbound.add_argument("--config", default=None)
    p_gbound.set_defaults(func=cmd_gbound)

    for name, func, needs_queries in (
        ("solve", cmd_solve, False),
        ("verify", cmd_verify, False),
        ("harnack", cmd_harnack, True),
    ):
        p_cmd = sub.add_parser(name)
        p_cmd.add_argument("--config", required=True)
        p_cmd.add_argument("--out", default=None, help="output directory override")
        p_cmd.add_argument("--seed", type=int, default=None)
        p_cmd.add_argument("--tol-margin", dest="tol_margin", type=float, default=None)
        if needs_queries:
            p_cmd.add_argument("--queries", required=True, help="JSON-lines query file")
        p_cmd.set_defaults(func=func)

    p_val = sub.add_parser("validate", help="exact-solution checks of the integrator")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, GuardTrip, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    raise SystemExit(main())
