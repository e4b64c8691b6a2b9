"""Time integration of u_t = Lap(u) + u^p on the periodic torus.

One step treats the reaction explicitly and inverts the diffusion in Fourier
space (multiplier 1/(1 + dt |xi|^2) on the periodic spectrum), so the stiff
part never restricts dt.  Runs are kept inside the window where a positive
classical solution exists by two guards: a hard cap on the field maximum and
a positivity check after every step.  A reaction-stability throttle rejects
steps longer than a tenth of the comparison-ODE blow-up time of the initial
maximum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import Grid, ScalarField, laplacian_symbol, read_snapshot, write_snapshot

__all__ = [
    "GuardTrip",
    "Trajectory",
    "step",
    "solve",
    "ode_blowup_time",
    "write_trajectory",
    "read_trajectory",
]

DEFAULT_BLOWUP_CAP = 1e6

STATUS_COMPLETED = "completed"
STATUS_BLOWUP = "blowup_guard"
STATUS_NONPOSITIVE = "nonpositive_guard"


class GuardTrip(RuntimeError):
    """A step produced a field outside the positive, bounded regime."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind  # "blowup" or "nonpositive"


def ode_blowup_time(m0: float, p: float) -> float:
    """Blow-up time m0^(1-p)/(p-1) of the comparison ODE m' = m^p."""
    if not (m0 > 0 and math.isfinite(m0)):
        raise ValueError(f"m0 must be positive, got {m0}")
    if not (p > 1 and math.isfinite(p)):
        raise ValueError(f"p must exceed 1, got {p}")
    return m0 ** (1.0 - p) / (p - 1.0)


def step(
    u: ScalarField,
    dt: float,
    p: float,
    reaction: bool = True,
    blowup_cap: float = DEFAULT_BLOWUP_CAP,
) -> ScalarField:
    """One reaction-explicit / diffusion-implicit step.

    Raises GuardTrip("blowup") when the new maximum exceeds the cap or the
    field stops being finite, GuardTrip("nonpositive") when the new minimum is
    not strictly positive.
    """
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive, got {dt}")
    if u.min() <= 0:
        raise ValueError("step requires a strictly positive field")
    vals = u.values
    if reaction:
        vals = vals + dt * vals**p
    spectrum = np.fft.rfftn(vals)
    spectrum /= 1.0 + dt * laplacian_symbol(u.grid)
    out = np.fft.irfftn(spectrum, s=u.grid.shape, axes=range(u.grid.dim))
    t_new = u.t + dt
    if not np.all(np.isfinite(out)) or out.max() > blowup_cap:
        raise GuardTrip(
            "blowup",
            f"blow-up guard: max {out.max():.6g} exceeded cap {blowup_cap:.6g} at t={t_new:.6g}",
        )
    if out.min() <= 0:
        raise GuardTrip(
            "nonpositive",
            f"positivity guard: min {out.min():.6g} <= 0 at t={t_new:.6g}",
        )
    return ScalarField(u.grid, out, t_new)


@dataclass
class Trajectory:
    """Time-ordered snapshots of one run, with the integration metadata."""

    p: float
    snapshots: list
    dt: float
    status: str = STATUS_COMPLETED
    reaction: bool = True
    stride: int = 1
    guard_time: float | None = None

    def __post_init__(self):
        times = [s.t for s in self.snapshots]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ValueError("snapshot times must be strictly increasing")
        for s in self.snapshots:
            if s.min() <= 0:
                raise ValueError("snapshots must be strictly positive")

    @property
    def grid(self) -> Grid:
        return self.snapshots[0].grid

    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def index_of_time(self, t: float, tol: float = 1e-9) -> int:
        """Index of the snapshot at time t (exact stored time expected)."""
        times = self.times()
        i = int(np.argmin(np.abs(times - t)))
        if abs(times[i] - t) > tol * max(1.0, abs(t)):
            raise ValueError(f"t={t} is not a snapshot time")
        return i

    def nearest_index(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times() - t)))


def solve(
    u0: ScalarField,
    t_end: float,
    dt: float,
    p: float,
    reaction: bool = True,
    stride: int = 1,
    blowup_cap: float = DEFAULT_BLOWUP_CAP,
) -> Trajectory:
    """Integrate from u0 to t_end, storing every stride-th step.

    Guard trips are normal returns: the trajectory ends early with the
    matching status and never contains the offending field.
    """
    if not (t_end > 0 and math.isfinite(t_end)):
        raise ValueError(f"t_end must be positive, got {t_end}")
    if not (dt > 0 and math.isfinite(dt)):
        raise ValueError(f"dt must be positive, got {dt}")
    if not isinstance(stride, (int, np.integer)) or stride < 1:
        raise ValueError(f"stride must be a positive integer, got {stride}")
    if u0.min() <= 0:
        raise ValueError("initial field must be strictly positive")
    if reaction:
        if not p > 1:
            raise ValueError(f"p must exceed 1, got {p}")
        dt_cap = 0.1 * ode_blowup_time(u0.max(), p)
        if dt > dt_cap:
            raise ValueError(
                f"dt={dt:.6g} exceeds the reaction-stability throttle {dt_cap:.6g} "
                f"(a tenth of the comparison blow-up time of max u0)"
            )
    n_steps = int(round(t_end / dt))
    if n_steps < 1:
        raise ValueError(f"t_end={t_end} shorter than one step dt={dt}")

    first = u0.copy()
    first.t = 0.0
    snaps = [first]
    u = first
    status = STATUS_COMPLETED
    guard_time = None
    for k in range(1, n_steps + 1):
        try:
            u = step(u, dt, p, reaction=reaction, blowup_cap=blowup_cap)
        except GuardTrip as trip:
            status = STATUS_BLOWUP if trip.kind == "blowup" else STATUS_NONPOSITIVE
            guard_time = k * dt
            break
        u.t = k * dt  # exact product, no accumulated roundoff
        if k % stride == 0 or k == n_steps:
            snaps.append(u.copy())
    return Trajectory(
        p=p,
        snapshots=snaps,
        dt=dt,
        status=status,
        reaction=reaction,
        stride=int(stride),
        guard_time=guard_time,
    )


# ---------------------------------------------------------------------------
# Trajectory directory I/O: snapshot files plus an index JSON.
# ---------------------------------------------------------------------------

def write_trajectory(traj: Trajectory, dirpath) -> None:
    d = Path(dirpath)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for i, snap in enumerate(traj.snapshots):
        name = f"snapshot_{i:05d}.dat"
        write_snapshot(snap, d / name, p=traj.p)
        names.append(name)
    index = {
        "p": traj.p,
        "dt": traj.dt,
        "status": traj.status,
        "reaction": traj.reaction,
        "stride": traj.stride,
        "guard_time": traj.guard_time,
        "grid": {"dim": traj.grid.dim, "N": traj.grid.N, "L": traj.grid.L},
        "snapshots": names,
    }
    (d / "index.json").write_text(
        json.dumps(index, sort_keys=True, separators=(",", ":")) + "\n"
    )


def read_trajectory(dirpath) -> Trajectory:
    d = Path(dirpath)
    index_path = d / "index.json"
    if not index_path.exists():
        raise ValueError(f"no trajectory index at {index_path}")
    try:
        index = json.loads(index_path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"corrupt trajectory index {index_path}: {exc}") from None
    for key in ("p", "dt", "status", "snapshots"):
        if key not in index:
            raise ValueError(f"corrupt trajectory index {index_path}: missing {key!r}")
    snaps = []
    for name in index["snapshots"]:
        fld, _ = read_snapshot(d / name)
        snaps.append(fld)
    return Trajectory(
        p=float(index["p"]),
        snapshots=snaps,
        dt=float(index["dt"]),
        status=str(index["status"]),
        reaction=bool(index.get("reaction", True)),
        stride=int(index.get("stride", 1)),
        guard_time=index.get("guard_time"),
    )
