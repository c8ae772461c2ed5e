"""Two-country patch dynamics without inner migration.

Each country carries the ratio-dependent kinetics; capital and labour
additionally migrate between the countries with velocities delta1, delta2,
modulated by positive decreasing migration functions rho1(v), rho2(u)::

    du1/dt = f(u1, v1) + delta1 * (rho1(v2)*u2 - rho1(v1)*u1)
    dv1/dt = g(u1, v1) + delta2 * (rho2(u2)*v2 - rho2(u1)*v1)

and symmetrically for country 2.  Around the symmetric equilibrium the
4x4 linearization splits into two 2x2 blocks, the kinetic Jacobian and the
coupled block B, whose spectra together give the full spectrum; the module
evaluates the two alternative sufficient stability routes (sign stability
of B, and positivity of det B).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dispersion import eig2x2
from .errors import DomainError
from .kinetics import (
    KineticParams,
    State2,
    interior_equilibrium,
    kinetic_conditions,
    ratio_interior_jacobian,
    ratio_rhs,
)
from .reports import Condition, StabilityReport, condition, eig_verdict, sort_eigenvalues

_CUSTOM_SAMPLE_GRID = np.linspace(0.0, 50.0, 101)


@dataclass(frozen=True)
class MigrationFunction:
    """Positive decreasing weight rho(w) with analytic derivative.

    Families:
      rational  -- rho(w) = (alpha + w)/(1 + w), alpha > 1; rho > 1 and
                   rho' = (1 - alpha)/(1 + w)^2 < 0 for all w >= 0.
      constant  -- rho = 1, rho' = 0 (mere self-diffusion).
      custom    -- user-supplied (rho, rho') pair, validated by sampling
                   rho > 0 and rho' < 0 on a grid.
    """

    family: str
    alpha: float | None = None
    rho_fn: Callable | None = field(default=None, repr=False, compare=False)
    drho_fn: Callable | None = field(default=None, repr=False, compare=False)

    @classmethod
    def rational(cls, alpha: float) -> "MigrationFunction":
        if not (math.isfinite(alpha) and alpha > 1.0):
            raise ValueError(f"rational migration function requires alpha > 1, got {alpha!r}")
        return cls("rational", alpha=float(alpha))

    @classmethod
    def constant(cls) -> "MigrationFunction":
        return cls("constant")

    @classmethod
    def custom(cls, rho: Callable, drho: Callable, sample_grid=None) -> "MigrationFunction":
        grid = _CUSTOM_SAMPLE_GRID if sample_grid is None else np.asarray(sample_grid, dtype=float)
        rho_vals = np.asarray([rho(w) for w in grid], dtype=float)
        drho_vals = np.asarray([drho(w) for w in grid], dtype=float)
        if not np.all(rho_vals > 0.0):
            raise ValueError("custom migration function must satisfy rho > 0 on the sample grid")
        if not np.all(drho_vals < 0.0):
            raise ValueError("custom migration function must satisfy rho' < 0 on the sample grid")
        return cls("custom", rho_fn=rho, drho_fn=drho)

    def rho(self, w):
        if self.family == "rational":
            return (self.alpha + w) / (1.0 + w)
        if self.family == "constant":
            return np.ones_like(np.asarray(w, dtype=float)) if np.ndim(w) else 1.0
        return self.rho_fn(w)

    def drho(self, w):
        if self.family == "rational":
            return (1.0 - self.alpha) / (1.0 + w) ** 2
        if self.family == "constant":
            return np.zeros_like(np.asarray(w, dtype=float)) if np.ndim(w) else 0.0
        return self.drho_fn(w)


@dataclass(frozen=True)
class PatchParams:
    """Migration velocities and migration functions of the two countries."""

    delta1: float
    delta2: float
    rho1: MigrationFunction
    rho2: MigrationFunction

    def __post_init__(self):
        for name in ("delta1", "delta2"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
                raise ValueError(f"migration velocity {name} must be >= 0, got {value!r}")


@dataclass(frozen=True)
class State4:
    """Densities (u, v) in country 1 and country 2."""

    u1: float
    v1: float
    u2: float
    v2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u1, self.v1, self.u2, self.v2], dtype=float)


def patch_rhs(p: KineticParams, q: PatchParams, s: State4,
              include_kinetics: bool = True) -> State4:
    """Time derivative of the two-patch system.

    The migration exchange is computed once and applied with opposite signs
    to the two countries, so u1+u2 and v1+v2 are conserved exactly when the
    kinetics are switched off (test hook ``include_kinetics=False``).
    """
    if include_kinetics:
        k1 = ratio_rhs(p, State2(s.u1, s.v1))
        k2 = ratio_rhs(p, State2(s.u2, s.v2))
        f1, g1, f2, g2 = k1.u, k1.v, k2.u, k2.v
    else:
        f1 = g1 = f2 = g2 = 0.0
    flow_u = q.delta1 * (q.rho1.rho(s.v2) * s.u2 - q.rho1.rho(s.v1) * s.u1)
    flow_v = q.delta2 * (q.rho2.rho(s.u2) * s.v2 - q.rho2.rho(s.u1) * s.v1)
    return State4(f1 + flow_u, g1 + flow_v, f2 - flow_u, g2 - flow_v)


def coupling_block(q: PatchParams, eq: State2) -> np.ndarray:
    """The 2x2 migration block M evaluated at the symmetric equilibrium.

    M = [[delta1*rho1(v),  delta1*rho1'(v)*u],
         [delta2*rho2'(u)*v, delta2*rho2(u)]]
    """
    u, v = eq.u, eq.v
    return np.array([
        [q.delta1 * q.rho1.rho(v), q.delta1 * q.rho1.drho(v) * u],
        [q.delta2 * q.rho2.drho(u) * v, q.delta2 * q.rho2.rho(u)],
    ])


def gamma_matrix(q: PatchParams, eq: State2) -> np.ndarray:
    """4x4 linearization of the migration terms at the symmetric equilibrium.

    Block form [[-M, M], [M, -M]]; paired columns (1,3) and (2,4) cancel,
    reflecting conservation of the totals under pure migration.
    """
    M = coupling_block(q, eq)
    gamma = np.zeros((4, 4))
    gamma[:2, :2] = -M
    gamma[:2, 2:] = M
    gamma[2:, :2] = M
    gamma[2:, 2:] = -M
    return gamma


def patch_jacobian(p: KineticParams) -> np.ndarray:
    """Block-diagonal 4x4 kinetic Jacobian at the symmetric equilibrium."""
    A_r = ratio_interior_jacobian(p)
    out = np.zeros((4, 4))
    out[:2, :2] = A_r
    out[2:, 2:] = A_r
    return out


def b_matrix(p: KineticParams, q: PatchParams) -> np.ndarray:
    """Coupled block B = A_r - 2M at the symmetric interior equilibrium."""
    eqm = _require_interior(p)
    return ratio_interior_jacobian(p) - 2.0 * coupling_block(q, eqm.state)


def block_factor(A_p, gamma, tol: float = 1e-12):
    """Split the 4x4 linearization into its two 2x2 spectral factors.

    Requires A_p block-diagonal with identical blocks and gamma of the
    patch form [[-M, M], [M, -M]].  Returns (A_r, B) with B = A_r - 2M;
    the spectrum of A_p + gamma is the union of the spectra of A_r and B.
    """
    A_p = np.asarray(A_p, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if A_p.shape != (4, 4) or gamma.shape != (4, 4):
        raise DomainError("block factorization needs 4x4 matrices")
    A1, A2 = A_p[:2, :2], A_p[2:, 2:]
    if (np.abs(A_p[:2, 2:]).max() > tol or np.abs(A_p[2:, :2]).max() > tol
            or np.abs(A1 - A2).max() > tol):
        raise DomainError("kinetic matrix is not block-diagonal with identical blocks")
    M = -gamma[:2, :2]
    expected = np.block([[-M, M], [M, -M]])
    if np.abs(gamma - expected).max() > tol:
        raise DomainError("migration matrix lacks the antisymmetric patch structure")
    return A1, A1 - 2.0 * M


def _require_interior(p: KineticParams):
    eqm = interior_equilibrium("ratio", p)
    if not eqm.positive:
        raise DomainError("patch analysis requires a positive interior equilibrium")
    return eqm


def _patch_spectrum(p: KineticParams, q: PatchParams):
    A_r = ratio_interior_jacobian(p)
    B = b_matrix(p, q)
    return A_r, B, sort_eigenvalues(eig2x2(A_r) + eig2x2(B))


def check_thm42(p: KineticParams, q: PatchParams) -> StabilityReport:
    """Sign-stability route for the two-patch equilibrium.

    On top of the kinetic conditions, the off-diagonal entry
    b12 = a12 - 2*delta1*rho1'(v)*u must stay negative, which caps the
    capital migration velocity at delta1 < -d^2/(2*rho1'(v)*u*m).
    """
    eqm = _require_interior(p)
    u, v = eqm.state.u, eqm.state.v
    A_r, B, eigs = _patch_spectrum(p, q)
    a12 = A_r[0, 1]
    b12 = B[0, 1]
    conds = kinetic_conditions("ratio", p)
    # Margin normalized by |a12| so the sign flips exactly at the velocity bound.
    conds.append(Condition("p:5", b12 < 0.0, -b12 / abs(a12)))
    drho1 = q.rho1.drho(v)
    bound = -p.d**2 / (2.0 * drho1 * u * p.m) if drho1 < 0.0 else None
    quantities = {
        "delta1_bound": bound,
        "det_B": float(np.linalg.det(B)),
        "trace_B": float(np.trace(B)),
    }
    return StabilityReport(tuple(conds), eigs, eig_verdict(eigs), quantities=quantities)


def check_thm43(p: KineticParams, q: PatchParams) -> StabilityReport:
    """Determinant route for the two-patch equilibrium.

    Beyond m > d and the Allee-zone condition, requires the migration
    elasticity product below one and -1/v < rho1'(v)/rho1(v); together
    these force det B > 0 with a negative diagonal.
    """
    eqm = _require_interior(p)
    u, v = eqm.state.u, eqm.state.v
    growth_floor = (p.m - p.d) / p.a
    elasticity1 = q.rho1.drho(v) * u / q.rho1.rho(v)
    elasticity2 = q.rho2.drho(u) * v / q.rho2.rho(u)
    rel_decay = q.rho1.drho(v) / q.rho1.rho(v)
    conds = [
        condition("h:3rd", p.m, p.d),
        condition("plusmas", p.r, growth_floor * (1.0 + p.d / p.m)),
        condition("1.feltetel", 1.0, elasticity1 * elasticity2),
        condition("2.feltetelujalak", rel_decay, -1.0 / v),
    ]
    _, B, eigs = _patch_spectrum(p, q)
    quantities = {
        "det_B": float(np.linalg.det(B)),
        "trace_B": float(np.trace(B)),
        "elasticity_product": float(elasticity1 * elasticity2),
    }
    return StabilityReport(tuple(conds), eigs, eig_verdict(eigs), quantities=quantities)
