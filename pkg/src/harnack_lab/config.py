"""Run configuration: one JSON file drives a solve plus its verifications.

Flags override file fields; the fully resolved configuration is embedded in
every report so a run can be reproduced from its output alone.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .cone import ConeFamilyPoint, Quintuple
from .grid import Grid, ScalarField
from .solver import DEFAULT_BLOWUP_CAP

__all__ = ["RunConfig", "load_config", "bundled_config_path", "initial_field"]

U0_KINDS = ("sine", "constant", "exp_neg_cos")


@dataclass
class RunConfig:
    n: int
    p: float
    grid: Grid
    dt: float
    t_end: float
    u0: dict
    quintuple: Quintuple | None = None
    family_point: ConeFamilyPoint | None = None
    snapshot_stride: int = 1
    reaction: bool = True
    tol_margin: float = 1e-3
    tol_boundary: float | None = None
    seed: int = 0
    out_dir: str | None = None
    blowup_cap: float = DEFAULT_BLOWUP_CAP

    def __post_init__(self):
        if self.n != self.grid.dim:
            raise ValueError(f"n={self.n} must equal the grid dimension {self.grid.dim}")
        if not (self.p > 1 and math.isfinite(self.p)):
            raise ValueError(f"p must exceed 1, got {self.p}")
        if self.quintuple is None and self.family_point is None:
            raise ValueError("config needs either a quintuple or a family point")
        if not (self.dt > 0 and self.t_end > 0):
            raise ValueError("dt and t_end must be positive")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be >= 1")
        kind = self.u0.get("kind")
        if kind not in U0_KINDS:
            raise ValueError(f"u0 kind must be one of {U0_KINDS}, got {kind!r}")

    def resolve_quintuple(self) -> Quintuple:
        if self.quintuple is not None:
            return self.quintuple
        return self.family_point.quintuple()

    def resolved_dict(self) -> dict:
        """Plain-JSON view of the full configuration, embedded in reports."""
        out = {
            "n": self.n,
            "p": self.p,
            "grid": {"dim": self.grid.dim, "N": self.grid.N, "L": self.grid.L},
            "dt": self.dt,
            "t_end": self.t_end,
            "u0": self.u0,
            "snapshot_stride": self.snapshot_stride,
            "reaction": self.reaction,
            "tol_margin": self.tol_margin,
            "tol_boundary": self.tol_boundary,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "blowup_cap": self.blowup_cap,
            "quintuple": [float(v) for v in self.resolve_quintuple().as_tuple()],
        }
        if self.family_point is not None:
            fp = self.family_point
            out["family_point"] = {"n": fp.n, "k": fp.k, "z": fp.z, "scale": fp.scale}
        return out


def bundled_config_path(name: str) -> Path:
    """Path of a configuration shipped with the package."""
    return Path(resources.files("harnack_lab").joinpath("configs", name))


def load_config(path_or_name, overrides: dict | None = None) -> RunConfig:
    """Load a config JSON; bare names fall back to the bundled directory."""
    path = Path(path_or_name)
    if not path.exists() and path.name == str(path_or_name):
        bundled = bundled_config_path(path.name)
        if bundled.exists():
            path = bundled
    if not path.exists():
        raise ValueError(f"config file not found: {path_or_name}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed config {path}: {exc}") from None
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})

    grid_raw = raw.get("grid", {})
    grid = Grid(
        int(grid_raw.get("dim", 1)),
        int(grid_raw.get("N", 256)),
        float(grid_raw.get("L", 1.0)),
    )
    quintuple = None
    family_point = None
    if raw.get("quintuple") is not None:
        quintuple = Quintuple(*raw["quintuple"])
    if raw.get("family_point") is not None:
        fp = raw["family_point"]
        family_point = ConeFamilyPoint(
            int(fp["n"]), float(fp["k"]), float(fp["z"]), float(fp.get("scale", 1.0))
        )
    return RunConfig(
        n=int(raw["n"]),
        p=float(raw["p"]),
        grid=grid,
        dt=float(raw["dt"]),
        t_end=float(raw["t_end"]),
        u0=dict(raw["u0"]),
        quintuple=quintuple,
        family_point=family_point,
        snapshot_stride=int(raw.get("snapshot_stride", 1)),
        reaction=bool(raw.get("reaction", True)),
        tol_margin=float(raw.get("tol_margin", 1e-3)),
        tol_boundary=raw.get("tol_boundary"),
        seed=int(raw.get("seed", 0)),
        out_dir=raw.get("out_dir"),
        blowup_cap=float(raw.get("blowup_cap", DEFAULT_BLOWUP_CAP)),
    )


def initial_field(config: RunConfig) -> ScalarField:
    """Build the configured initial data on the configured grid."""
    g = config.grid
    params = config.u0
    kind = params["kind"]
    if kind == "constant":
        value = float(params["value"])
        return ScalarField(g, np.full(g.shape, value), 0.0)
    if kind == "sine":
        mean = float(params.get("mean", 1.0))
        amp = float(params.get("amplitude", 0.5))
        if g.dim == 1:
            x = g.coords()
            vals = mean + amp * np.sin(2.0 * np.pi * x / g.L)
        else:
            X, Y = g.coords()
            vals = mean + amp * np.sin(2.0 * np.pi * X / g.L) * np.sin(2.0 * np.pi * Y / g.L)
        return ScalarField(g, vals, 0.0)
    # exp_neg_cos: strongly log-concave bump, scale * exp(-cos(2 pi x / L))
    scale = float(params.get("scale", 1.0))
    if g.dim == 1:
        x = g.coords()
        vals = scale * np.exp(-np.cos(2.0 * np.pi * x / g.L))
    else:
        X, Y = g.coords()
        vals = scale * np.exp(-np.cos(2.0 * np.pi * X / g.L) * np.cos(2.0 * np.pi * Y / g.L))
    return ScalarField(g, vals, 0.0)
