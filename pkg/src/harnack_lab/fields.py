"""Differential post-processing of positive fields on the torus.

Everything downstream works with f = log u: its gradient, Hessian, Laplacian,
tracefree Hessian and the spectral radii of the last two, all obtained by
spectral differentiation of f.  On the flat torus the metric is the identity,
so tensors assemble pointwise with g_ij = delta_ij and no curvature terms.

Two symmetric tensors matter:

  harnack_tensor:  F = t (theta f_ij + a Lap(f) g_ij + b f_i f_j
                         + c |grad f|^2 g_ij + d u^(p-1) g_ij)

  source_tensor:   Q = (p-1) u^(p-1) F/t + (p-1)(b + (p-1) theta) u^(p-1) f_i f_j
                       + (p-1)(c + a(p-1) - d p) u^(p-1) |grad f|^2 g_ij
                       + 2 (theta-b) f_ik f_jk + 2 (a-c) |Hess f|^2 g_ij

Q is the zero-order forcing in the evolution of F; the verifier checks its
positivity against F^2 wherever F is negative semidefinite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cone import Quintuple
from .grid import Grid, ScalarField, TensorField, spectral_tables
from .solver import Trajectory

__all__ = [
    "DerivedFields",
    "derive",
    "harnack_tensor",
    "source_tensor",
    "evolution_residual",
    "FieldCache",
]


@dataclass
class DerivedFields:
    """Spectral derivatives of f = log u at one time, plus eigenvalue radii.

    rho is the spectral radius of the Hessian of f, rho_ring the same for the
    tracefree part f_ij - (Lap f / dim) g_ij.
    """

    grid: Grid
    t: float
    u: np.ndarray
    f: np.ndarray
    grad: tuple
    hess: TensorField
    lap: np.ndarray
    grad_sq: np.ndarray
    rho: np.ndarray
    rho_ring: np.ndarray

    def tracefree_hess(self) -> TensorField:
        n = self.grid.dim
        if n == 1:
            return TensorField(self.grid, self.t, (self.hess.comps[0] - self.lap,))
        h11, h12, h22 = self.hess.comps
        shift = self.lap / n
        return TensorField(self.grid, self.t, (h11 - shift, h12, h22 - shift))

    def hess_norm_sq(self) -> np.ndarray:
        """|Hess f|^2 = sum of squared entries (both off-diagonals counted)."""
        if self.grid.dim == 1:
            return self.hess.comps[0] ** 2
        h11, h12, h22 = self.hess.comps
        return h11**2 + 2.0 * h12**2 + h22**2

    def reaction_factor(self, p: float) -> np.ndarray:
        """u^(p-1) = exp((p-1) f)."""
        return np.exp((p - 1.0) * self.f)


def derive(u: ScalarField) -> DerivedFields:
    """All derived fields of f = log u by spectral differentiation."""
    if u.min() <= 0:
        raise ValueError("derive requires a strictly positive field")
    g = u.grid
    f = np.log(u.values)
    tab = spectral_tables(g)
    spectrum = np.fft.rfftn(f)

    def inv(mult):
        return np.fft.irfftn(mult * spectrum, s=g.shape, axes=range(g.dim))

    if g.dim == 1:
        fx = inv(tab["dx"])
        fxx = inv(tab["dxx"])
        grad = (fx,)
        hess = TensorField(g, u.t, (fxx,))
        lap = fxx
        grad_sq = fx**2
        rho = np.abs(fxx)
        rho_ring = np.zeros_like(fxx)
    else:
        fx = inv(tab["dx"])
        fy = inv(tab["dy"])
        fxx = inv(tab["dxx"])
        fyy = inv(tab["dyy"])
        fxy = inv(tab["dxy"])
        grad = (fx, fy)
        hess = TensorField(g, u.t, (fxx, fxy, fyy))
        lap = fxx + fyy
        grad_sq = fx**2 + fy**2
        rho = hess.spectral_radius()
        half = 0.5 * lap
        # tracefree closed form: eigenvalues are (lap/2) +- r shifted by -lap/2
        rho_ring = np.hypot(fxx - half, fxy)
    return DerivedFields(
        grid=g,
        t=u.t,
        u=u.values,
        f=f,
        grad=grad,
        hess=hess,
        lap=lap,
        grad_sq=grad_sq,
        rho=rho,
        rho_ring=rho_ring,
    )


def harnack_tensor(d: DerivedFields, q: Quintuple, p: float, t: float) -> TensorField:
    """Assemble F at time t from derived fields (admissibility not required)."""
    if not (t > 0 and math.isfinite(t)):
        raise ValueError(f"t must be positive, got {t}")
    a, b, c, dd, th = q.as_tuple()
    iso = a * d.lap + c * d.grad_sq + dd * d.reaction_factor(p)
    if d.grid.dim == 1:
        (fx,) = d.grad
        (fxx,) = d.hess.comps
        return TensorField(d.grid, t, (t * (th * fxx + b * fx * fx + iso),))
    fx, fy = d.grad
    h11, h12, h22 = d.hess.comps
    return TensorField(
        d.grid,
        t,
        (
            t * (th * h11 + b * fx * fx + iso),
            t * (th * h12 + b * fx * fy),
            t * (th * h22 + b * fy * fy + iso),
        ),
    )


def source_tensor(
    d: DerivedFields, F: TensorField, q: Quintuple, p: float, t: float
) -> TensorField:
    """Assemble Q at time t from derived fields and the matching F."""
    if not (t > 0 and math.isfinite(t)):
        raise ValueError(f"t must be positive, got {t}")
    a, b, c, dd, th = q.as_tuple()
    e = d.reaction_factor(p)
    pm1 = p - 1.0
    c_f = pm1 * e / t  # multiplies F
    c_grad = pm1 * (b + pm1 * th) * e  # multiplies f_i f_j
    c_iso = pm1 * (c + a * pm1 - dd * p) * e * d.grad_sq  # g_ij part
    hess_sq = d.hess_norm_sq()
    iso = c_iso + 2.0 * (a - c) * hess_sq
    if d.grid.dim == 1:
        (fx,) = d.grad
        (h11,) = d.hess.comps
        q11 = c_f * F.comps[0] + c_grad * fx * fx + iso + 2.0 * (th - b) * h11 * h11
        return TensorField(d.grid, t, (q11,))
    fx, fy = d.grad
    h11, h12, h22 = d.hess.comps
    # (Hess^2)_ij = f_ik f_jk
    sq11 = h11 * h11 + h12 * h12
    sq12 = h12 * (h11 + h22)
    sq22 = h12 * h12 + h22 * h22
    return TensorField(
        d.grid,
        t,
        (
            c_f * F.comps[0] + c_grad * fx * fx + iso + 2.0 * (th - b) * sq11,
            c_f * F.comps[1] + c_grad * fx * fy + 2.0 * (th - b) * sq12,
            c_f * F.comps[2] + c_grad * fy * fy + iso + 2.0 * (th - b) * sq22,
        ),
    )


def evolution_residual(traj: Trajectory, index: int) -> float:
    """Max-norm defect of (d/dt - Lap) f = |grad f|^2 + u^(p-1) at one snapshot.

    The time derivative is the centered difference of the neighboring stored
    snapshots; spatial terms are spectral at the snapshot itself.  Heat-only
    trajectories drop the reaction term.
    """
    last = len(traj.snapshots) - 1
    if not 1 <= index < last:
        raise IndexError(f"index must satisfy 1 <= index < {last}, got {index}")
    before = traj.snapshots[index - 1]
    here = traj.snapshots[index]
    after = traj.snapshots[index + 1]
    ft = (np.log(after.values) - np.log(before.values)) / (after.t - before.t)
    d = derive(here)
    rhs = d.lap + d.grad_sq
    if traj.reaction:
        rhs = rhs + d.reaction_factor(traj.p)
    return float(np.max(np.abs(ft - rhs)))


class FieldCache:
    """Memoized per-snapshot derived fields for repeated verifier passes."""

    def __init__(self, traj: Trajectory):
        self.traj = traj
        self._cache: dict = {}

    def derived(self, index: int) -> DerivedFields:
        if index not in self._cache:
            self._cache[index] = derive(self.traj.snapshots[index])
        return self._cache[index]
