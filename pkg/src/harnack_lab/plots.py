"""Figure rendering for the delimited outputs.

This is deliberately a separate console script (harnack-lab-plot): it only
consumes files the main CLI already wrote (cone CSV, report JSON lines,
trajectory directories) and renders PNG figures next to them.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .solver import read_trajectory

__all__ = ["plot_cone", "plot_margins", "plot_trajectory", "main", "entrypoint"]


def _out_dir(path, override) -> Path:
    out = Path(override) if override else Path(path).resolve().parent
    out.mkdir(parents=True, exist_ok=True)
    return out


def plot_cone(csv_path, out_dir=None) -> list:
    """Threshold curves and the gap curve from a cone CSV."""
    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"no rows in {csv_path}")
    n = np.array([int(r["n"]) for r in rows])
    k = np.array([float(r["k"]) for r in rows])
    k1 = np.array([float(r["k1"]) for r in rows])
    k0 = np.array([float(r["k0"]) if r["k0"] else np.nan for r in rows])
    gap = np.array([float(r["g_tilde"]) for r in rows])
    out = _out_dir(csv_path, out_dir)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(n, k, "o-", label="k(n)")
    ax.plot(n, k0, "s-", label="k0(n)")
    ax.plot(n, k1, "^-", label="k1(n)")
    ax.set_xlabel("dimension n")
    ax.set_ylabel("threshold")
    ax.legend()
    fig.tight_layout()
    p1 = out / "cone_thresholds.png"
    fig.savefig(p1, dpi=150)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(n, gap, "o-", color="tab:red")
    ax.set_xlabel("dimension n")
    ax.set_ylabel("exponent gap")
    fig.tight_layout()
    p2 = out / "cone_gap.png"
    fig.savefig(p2, dpi=150)
    plt.close(fig)
    return [p1, p2]


def plot_margins(jsonl_path, out_dir=None) -> list:
    """Bar chart of minimum margins per report, with the tolerance line."""
    reports = []
    for line in Path(jsonl_path).read_text().splitlines():
        line = line.strip()
        if line:
            reports.append(json.loads(line))
    if not reports:
        raise ValueError(f"no reports in {jsonl_path}")
    labels = [f"{r['kind']}#{i}" for i, r in enumerate(reports)]
    margins = [r["min_margin"] for r in reports]
    finite = [m if np.isfinite(m) else np.nan for m in margins]
    tol = max(r.get("tolerance", 0.0) for r in reports)
    colors = ["tab:green" if r["pass"] else "tab:red" for r in reports]

    fig, ax = plt.subplots(figsize=(max(6, 0.3 * len(reports)), 4))
    ax.bar(range(len(reports)), finite, color=colors)
    ax.axhline(-tol, color="k", linestyle="--", linewidth=1, label=f"-tolerance ({tol:g})")
    ax.set_xticks(range(len(reports)))
    ax.set_xticklabels(labels, rotation=90, fontsize=6)
    ax.set_ylabel("min margin")
    ax.legend()
    fig.tight_layout()
    out = _out_dir(jsonl_path, out_dir)
    p1 = out / "margins.png"
    fig.savefig(p1, dpi=150)
    plt.close(fig)
    return [p1]


def plot_trajectory(traj_dir, out_dir=None, n_curves: int = 8) -> list:
    """Snapshot waterfall (dim=1) or the final field (dim=2)."""
    traj = read_trajectory(traj_dir)
    out = _out_dir(Path(traj_dir) / "index.json", out_dir)
    fig, ax = plt.subplots(figsize=(6, 4))
    if traj.grid.dim == 1:
        x = traj.grid.coords()
        picks = np.unique(
            np.linspace(0, len(traj.snapshots) - 1, n_curves).astype(int)
        )
        for i in picks:
            snap = traj.snapshots[i]
            ax.plot(x, snap.values, label=f"t={snap.t:.4g}")
        ax.set_xlabel("x")
        ax.set_ylabel("u")
        ax.legend(fontsize=6)
    else:
        snap = traj.snapshots[-1]
        im = ax.imshow(snap.values.T, origin="lower", extent=(0, traj.grid.L, 0, traj.grid.L))
        fig.colorbar(im, ax=ax, label=f"u at t={snap.t:.4g}")
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    fig.tight_layout()
    p1 = out / "trajectory.png"
    fig.savefig(p1, dpi=150)
    plt.close(fig)
    return [p1]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="harnack-lab-plot",
        description="Render figures from cone CSVs, report JSONL files, "
        "and trajectory directories.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("cone", "margins", "trajectory"):
        p_cmd = sub.add_parser(name)
        p_cmd.add_argument("path")
        p_cmd.add_argument("--out-dir", default=None)
    args = parser.parse_args(argv)
    try:
        if args.command == "cone":
            written = plot_cone(args.path, args.out_dir)
        elif args.command == "margins":
            written = plot_margins(args.path, args.out_dir)
        else:
            written = plot_trajectory(args.path, args.out_dir)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


def entrypoint() -> None:
    raise SystemExit(main())
