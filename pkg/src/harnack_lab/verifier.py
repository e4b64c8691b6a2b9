"""Certification of the tensor and path inequalities on computed trajectories.

Margin conventions: every check reduces to a scalar field whose nonnegativity
(up to a discretization tolerance) certifies the inequality at that point.

  matrix:  lambda_min(F) + 1/eps            over all grid points, t > 0
  trace:   t [ (theta + n a) Lap f + (b + n c) |grad f|^2
               + n d u^(p-1) ] + n/eps
  claim:   lambda_min(theta^2 Q - F^2 / (eps t^2)) wherever
           lambda_max(F) <= 0 (F^2 is the matrix square); vacuous when no
           point qualifies
  harnack: log u(x2,t2) + (1/eps) log(t2/t1) + psi - log u(x1,t1)

with eps = 1/(2 (theta - b)).  The psi functional is minimized over a layered
space-time graph: S+1 layers at s_j = j/S carry times (1-s_j) t2 + s_j t1,
nodes are grid points, edges connect layer j to j+1 within a periodic radius
of R cells, and the edge cost is the kinetic term at speed dist/(ds) plus the
variant's potential sampled at the destination node (rectangle rule, nearest
stored snapshot in time).  Any discrete path is an admissible competitor, so
the dynamic program returns an upper bound for the continuum infimum that is
nonincreasing as R grows.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cone import Quintuple, epsilon_of, exponent_gap, in_harnack_subcone, is_admissible
from .fields import FieldCache, harnack_tensor, source_tensor
from .grid import TensorField
from .solver import Trajectory
from .util import thread_count

__all__ = [
    "ConfigurationError",
    "MarginReport",
    "PathQuery",
    "epsilon_of",
    "verify_matrix",
    "verify_trace",
    "verify_claim",
    "psi_path",
    "verify_harnack_pair",
    "DEFAULT_MARGIN_TOL",
]

DEFAULT_MARGIN_TOL = 1e-3

VARIANTS = ("harn", "harn2", "harn3")


class ConfigurationError(ValueError):
    """A query or run setup that cannot be evaluated as posed."""


@dataclass
class MarginReport:
    """Outcome of one verification pass: worst margin, where, and verdict."""

    kind: str
    min_margin: float
    argmin: tuple | None  # (x, t); x is a float (dim=1) or pair (dim=2)
    passed: bool
    tolerance: float
    epsilon: float
    quintuple: tuple
    p: float
    n: int
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        if self.argmin is None:
            argmin = None
        else:
            x, t = self.argmin
            x = list(x) if isinstance(x, (tuple, list)) else float(x)
            argmin = {"x": x, "t": float(t)}
        out = {
            "kind": self.kind,
            "min_margin": float(self.min_margin),
            "argmin": argmin,
            "pass": bool(self.passed),
            "tolerance": float(self.tolerance),
            "epsilon": float(self.epsilon),
            "quintuple": [float(v) for v in self.quintuple],
            "p": float(self.p),
            "n": int(self.n),
        }
        out.update(self.extra)
        return out


@dataclass
class PathQuery:
    """One space-time comparison: grid endpoints, times, variant, DP budget.

    x1/x2 are grid indices (int for dim=1, (i, j) pair for dim=2); t1 < t2
    must be stored snapshot times; layers S >= 2; radius R >= 0 cells.
    """

    x1: object
    x2: object
    t1: float
    t2: float
    variant: str = "harn"
    layers: int = 16
    radius: int = 8

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(
                f"variant must be one of {VARIANTS}, got {self.variant!r}"
            )
        self.t1 = float(self.t1)
        self.t2 = float(self.t2)
        if not self.t1 < self.t2:
            raise ConfigurationError(f"need t1 < t2, got t1={self.t1}, t2={self.t2}")
        if not self.t1 > 0:
            raise ConfigurationError(f"need t1 > 0, got t1={self.t1}")
        if int(self.layers) < 2:
            raise ConfigurationError(f"layers must be >= 2, got {self.layers}")
        if int(self.radius) < 0:
            raise ConfigurationError(f"radius must be >= 0, got {self.radius}")
        self.layers = int(self.layers)
        self.radius = int(self.radius)

    def to_dict(self) -> dict:
        def idx(x):
            return list(int(v) for v in x) if isinstance(x, (tuple, list)) else int(x)

        return {
            "x1": idx(self.x1),
            "x2": idx(self.x2),
            "t1": self.t1,
            "t2": self.t2,
            "variant": self.variant,
            "layers": self.layers,
            "radius": self.radius,
        }


def _require_run_preconditions(traj: Trajectory, q: Quintuple, n: int) -> float:
    if n != traj.grid.dim:
        raise ValueError(f"n={n} must equal the grid dimension {traj.grid.dim}")
    if not is_admissible(q, n).member:
        raise ValueError(f"quintuple {q.as_tuple()} is not admissible for n={n}")
    gap = exponent_gap(q)
    if not (1.0 < traj.p < 1.0 + gap):
        raise ValueError(
            f"exponent p={traj.p} outside the certified range "
            f"(1, {1.0 + gap:.12g}) for this quintuple (gap {gap:.12g})"
        )
    return gap


def _map_over_snapshots(indices, worker):
    width = thread_count()
    if width <= 1 or len(indices) < 4:
        return [worker(i) for i in indices]
    with ThreadPoolExecutor(max_workers=width) as pool:
        return list(pool.map(worker, indices))


def _scan_min(traj, cache, margin_field_at):
    """Global minimum of a per-snapshot margin field over all t > 0."""
    indices = [i for i, s in enumerate(traj.snapshots) if s.t > 0]
    if not indices:
        raise ValueError("trajectory holds no snapshot with t > 0")

    def worker(i):
        m = margin_field_at(i)
        j = int(np.argmin(m))
        return float(m.flat[j]), j, i

    results = _map_over_snapshots(indices, worker)
    best = None
    for value, flat_j, i in results:
        if best is None or value < best[0]:
            best = (value, flat_j, i)
    value, flat_j, i = best
    snap = traj.snapshots[i]
    idx = np.unravel_index(flat_j, snap.grid.shape)
    x = snap.grid.point_coord(idx if snap.grid.dim == 2 else idx[0])
    return value, (x, snap.t)


def verify_matrix(
    traj: Trajectory,
    q: Quintuple,
    n: int,
    tolerance: float = DEFAULT_MARGIN_TOL,
    cache: FieldCache | None = None,
) -> MarginReport:
    """Certify lambda_min(F) >= -1/eps over every stored snapshot with t > 0."""
    _require_run_preconditions(traj, q, n)
    eps = epsilon_of(q)
    cache = cache or FieldCache(traj)

    def margin_field(i):
        snap = traj.snapshots[i]
        d = cache.derived(i)
        F = harnack_tensor(d, q, traj.p, snap.t)
        lam_min, _ = F.eig_bounds()
        return lam_min + 1.0 / eps

    value, argmin = _scan_min(traj, cache, margin_field)
    return MarginReport(
        kind="matrix",
        min_margin=value,
        argmin=argmin,
        passed=value >= -tolerance,
        tolerance=tolerance,
        epsilon=eps,
        quintuple=q.as_tuple(),
        p=traj.p,
        n=n,
    )


def verify_trace(
    traj: Trajectory,
    q: Quintuple,
    n: int,
    tolerance: float = DEFAULT_MARGIN_TOL,
    cache: FieldCache | None = None,
) -> MarginReport:
    """Certify the scalar (trace) inequality: trace(F) >= -n/eps."""
    _require_run_preconditions(traj, q, n)
    a, b, c, dd, th = q.as_tuple()
    eps = epsilon_of(q)
    cache = cache or FieldCache(traj)

    def margin_field(i):
        snap = traj.snapshots[i]
        d = cache.derived(i)
        tr = (th + n * a) * d.lap + (b + n * c) * d.grad_sq + n * dd * d.reaction_factor(traj.p)
        return snap.t * tr + n / eps

    value, argmin = _scan_min(traj, cache, margin_field)
    return MarginReport(
        kind="trace",
        min_margin=value,
        argmin=argmin,
        passed=value >= -tolerance,
        tolerance=tolerance,
        epsilon=eps,
        quintuple=q.as_tuple(),
        p=traj.p,
        n=n,
    )


def _matrix_square(F: TensorField) -> tuple:
    if F.grid.dim == 1:
        return (F.comps[0] ** 2,)
    f11, f12, f22 = F.comps
    return (f11 * f11 + f12 * f12, f12 * (f11 + f22), f12 * f12 + f22 * f22)


def verify_claim(
    traj: Trajectory,
    q: Quintuple,
    n: int,
    tolerance: float = DEFAULT_MARGIN_TOL,
    qualify_tol: float = 1e-12,
    cache: FieldCache | None = None,
) -> MarginReport:
    """Certify theta^2 Q >= F^2/(eps t^2) wherever F is negative semidefinite.

    Qualifying points are those with lambda_max(F) <= qualify_tol (a little
    roundoff room at the boundary of the cone of nonpositive tensors).  With
    no qualifying point the report passes vacuously with an infinite margin.
    """
    _require_run_preconditions(traj, q, n)
    th = q.theta
    eps = epsilon_of(q)
    cache = cache or FieldCache(traj)
    indices = [i for i, s in enumerate(traj.snapshots) if s.t > 0]

    def worker(i):
        snap = traj.snapshots[i]
        d = cache.derived(i)
        F = harnack_tensor(d, q, traj.p, snap.t)
        _, lam_max = F.eig_bounds()
        mask = lam_max <= qualify_tol
        count = int(mask.sum())
        if count == 0:
            return math.inf, -1, i, 0
        Q = source_tensor(d, F, q, traj.p, snap.t)
        Fsq = _matrix_square(F)
        scale = 1.0 / (eps * snap.t**2)
        diff = TensorField(
            F.grid,
            snap.t,
            tuple(th**2 * qc - scale * fc for qc, fc in zip(Q.comps, Fsq)),
        )
        lam_min, _ = diff.eig_bounds()
        masked = np.where(mask, lam_min, math.inf)
        j = int(np.argmin(masked))
        return float(masked.flat[j]), j, i, count

    results = _map_over_snapshots(indices, worker)
    qualifying = sum(r[3] for r in results)
    best = None
    for value, flat_j, i, _count in results:
        if flat_j < 0:
            continue
        if best is None or value < best[0]:
            best = (value, flat_j, i)
    if best is None:
        value, argmin = math.inf, None
    else:
        value, flat_j, i = best
        snap = traj.snapshots[i]
        idx = np.unravel_index(flat_j, snap.grid.shape)
        x = snap.grid.point_coord(idx if snap.grid.dim == 2 else idx[0])
        argmin = (x, snap.t)
    return MarginReport(
        kind="claim",
        min_margin=value,
        argmin=argmin,
        passed=value >= -tolerance,
        tolerance=tolerance,
        epsilon=eps,
        quintuple=q.as_tuple(),
        p=traj.p,
        n=n,
        extra={"qualifying_points": qualifying},
    )


# ---------------------------------------------------------------------------
# Path optimization.
# ---------------------------------------------------------------------------

def _as_index(x, grid):
    if grid.dim == 1:
        i = int(x)
        if not 0 <= i < grid.N:
            raise ConfigurationError(f"grid index {x} out of range [0, {grid.N})")
        return i
    i, j = (int(v) for v in x)
    if not (0 <= i < grid.N and 0 <= j < grid.N):
        raise ConfigurationError(f"grid index {x} out of range [0, {grid.N})^2")
    return (i, j)


def _periodic_cells(i1, i2, N):
    d = abs(int(i1) - int(i2)) % N
    return min(d, N - d)


def _variant_coefficients(variant, q: Quintuple, n: int, t21: float):
    """(kinetic coefficient, potential coefficient, potential field kind)."""
    a, b, c, _d, th = q.as_tuple()
    if variant == "harn":
        return a / (4.0 * (a - b - c) * t21), th * t21 / a, "rho"
    if variant == "harn2":
        return n * a / (4.0 * (n * (a - b - c) + th) * t21), th * t21 / a, "rho_ring"
    # harn3: the potential keeps the same (t2 - t1) time factor as the other
    # variants; without it the discrete margins on benign runs go negative by
    # O(u^(p-1)), which is inconsistent with the certified trace inequality.
    return (th + n * a) / (4.0 * (n * (a - c) + th - b) * t21), -th / (th + n * a) * t21, "u_power"


def psi_path(
    traj: Trajectory,
    query: PathQuery,
    q: Quintuple,
    n: int,
    cache: FieldCache | None = None,
) -> float:
    """Minimal layered-graph cost joining (x2, t2) to (x1, t1).

    Variants harn/harn2 require the quintuple in the a = d, b - a + c < 0
    subcone; harn3 requires plain admissibility.
    """
    grid = traj.grid
    if n != grid.dim:
        raise ValueError(f"n={n} must equal the grid dimension {grid.dim}")
    if query.variant in ("harn", "harn2"):
        if not in_harnack_subcone(q, n):
            raise ConfigurationError(
                f"variant {query.variant} requires a = d and b - a + c < 0 "
                f"(got quintuple {q.as_tuple()})"
            )
    else:
        if not is_admissible(q, n).member:
            raise ConfigurationError("variant harn3 requires an admissible quintuple")
    i1 = traj.index_of_time(query.t1)
    i2 = traj.index_of_time(query.t2)
    if traj.snapshots[i1].t <= 0:
        raise ConfigurationError("t1 must be positive")
    x1 = _as_index(query.x1, grid)
    x2 = _as_index(query.x2, grid)

    S = query.layers
    R = min(query.radius, grid.N - 1)
    if grid.dim == 1:
        needed = _periodic_cells(x1, x2, grid.N)
    else:
        needed = max(
            _periodic_cells(x1[0], x2[0], grid.N), _periodic_cells(x1[1], x2[1], grid.N)
        )
    if needed > S * R:
        raise ConfigurationError(
            f"endpoints unreachable: {needed} cells apart but S*R = {S * R}"
        )

    t1, t2 = traj.snapshots[i1].t, traj.snapshots[i2].t
    t21 = t2 - t1
    kin_coef, pot_coef, pot_kind = _variant_coefficients(query.variant, q, n, t21)
    cache = cache or FieldCache(traj)
    ds = 1.0 / S
    h = grid.h

    def potential(layer):
        tau = (1.0 - layer * ds) * t2 + layer * ds * t1
        i = traj.nearest_index(tau)
        if pot_kind == "u_power":
            return pot_coef * traj.snapshots[i].values ** (traj.p - 1.0)
        d = cache.derived(i)
        return pot_coef * (d.rho if pot_kind == "rho" else d.rho_ring)

    if grid.dim == 1:
        offsets = [(o, (min(abs(o), grid.N - abs(o)) * h) ** 2) for o in range(-R, R + 1)]
        dist = np.full(grid.N, math.inf)
        dist[x2] = 0.0
        for layer in range(1, S + 1):
            best = np.full(grid.N, math.inf)
            for o, dist_sq in offsets:
                cand = np.roll(dist, o) + kin_coef * dist_sq / ds
                np.minimum(best, cand, out=best)
            dist = best + ds * potential(layer)
        return float(dist[x1])

    offsets = []
    for ox in range(-R, R + 1):
        dx = min(abs(ox), grid.N - abs(ox)) * h
        for oy in range(-R, R + 1):
            dy = min(abs(oy), grid.N - abs(oy)) * h
            offsets.append((ox, oy, dx * dx + dy * dy))
    dist = np.full(grid.shape, math.inf)
    dist[x2[0], x2[1]] = 0.0
    for layer in range(1, S + 1):
        best = np.full(grid.shape, math.inf)
        for ox, oy, dist_sq in offsets:
            cand = np.roll(np.roll(dist, ox, axis=0), oy, axis=1) + kin_coef * dist_sq / ds
            np.minimum(best, cand, out=best)
        dist = best + ds * potential(layer)
    return float(dist[x1[0], x1[1]])


def verify_harnack_pair(
    traj: Trajectory,
    query: PathQuery,
    q: Quintuple,
    n: int,
    tolerance: float = DEFAULT_MARGIN_TOL,
    cache: FieldCache | None = None,
) -> MarginReport:
    """Check log u(x1,t1) <= log u(x2,t2) + (1/eps) log(t2/t1) + psi.

    The time exponent follows the stated 1/eps; the alternative 1/(a eps)
    arising from the same derivation is reported alongside.
    """
    psi = psi_path(traj, query, q, n, cache=cache)
    eps = epsilon_of(q)
    grid = traj.grid
    i1 = traj.index_of_time(query.t1)
    i2 = traj.index_of_time(query.t2)
    x1 = _as_index(query.x1, grid)
    x2 = _as_index(query.x2, grid)
    u1 = traj.snapshots[i1].values[x1] if grid.dim == 1 else traj.snapshots[i1].values[x1[0], x1[1]]
    u2 = traj.snapshots[i2].values[x2] if grid.dim == 1 else traj.snapshots[i2].values[x2[0], x2[1]]
    t1, t2 = traj.snapshots[i1].t, traj.snapshots[i2].t
    log_ratio = math.log(t2 / t1)
    margin = math.log(u2) + log_ratio / eps + psi - math.log(u1)
    alt_margin = math.log(u2) + log_ratio / (q.a * eps) + psi - math.log(u1)
    extra = {
        "psi": float(psi),
        "variant": query.variant,
        "alt_exponent_margin": float(alt_margin),
        "query": query.to_dict(),
    }
    if query.variant == "harn3":
        extra["notes"] = "harn3 potential carries the (t2-t1) factor"
    return MarginReport(
        kind="harnack",
        min_margin=float(margin),
        argmin=(grid.point_coord(query.x1), t1),
        passed=margin >= -tolerance,
        tolerance=tolerance,
        epsilon=eps,
        quintuple=q.as_tuple(),
        p=traj.p,
        n=n,
        extra=extra,
    )
