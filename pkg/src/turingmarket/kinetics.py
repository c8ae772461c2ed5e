"""Kinetic (space-free) capital-labour dynamics.

Free jobs u act as prey and labour v as predator.  Two interaction laws are
supported:

* ``simple``  -- bilinear coupling::

      du/dt = r u (1 - u/K) - m u v
      dv/dt = m u v - d v

* ``ratio``   -- saturating, ratio-dependent coupling::

      du/dt = r u (1 - u/K) - m u v / (a v + u)
      dv/dt = m u v / (a v + u) - d v

The module provides right-hand sides, closed-form equilibria, analytic
Jacobians, and evaluation of the non-spatial stability conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .reports import (
    StabilityReport,
    VERDICT_UNDEFINED,
    condition,
    eig_verdict,
    sort_eigenvalues,
)

MODELS = ("simple", "ratio")


@dataclass(frozen=True)
class KineticParams:
    """Scalar parameters of the kinetic models.

    r : per-capita growth rate of free jobs
    K : carrying capacity of free jobs
    m : interaction coefficient (maximum labour growth rate)
    d : death rate of labour
    a : half-saturation constant (ignored by the simple model)
    """

    r: float
    K: float
    m: float
    d: float
    a: float = 1.0

    def __post_init__(self):
        for name in ("r", "K", "m", "d", "a"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"parameter {name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class State2:
    """Densities of free jobs (u) and labour (v)."""

    u: float
    v: float

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v], dtype=float)


@dataclass(frozen=True)
class Equilibrium:
    label: str
    state: State2
    positive: bool
    note: str = ""


def _check_model(model: str) -> None:
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}, expected one of {MODELS}")


def simple_reaction(p: KineticParams, u, v):
    """Vectorised reaction terms of the simple model."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    inter = p.m * u * v
    return p.r * u * (1.0 - u / p.K) - inter, inter - p.d * v


def ratio_reaction(p: KineticParams, u, v):
    """Vectorised reaction terms of the ratio-dependent model.

    The interaction term u*v/(a*v + u) is continuously extended by 0 where
    the denominator vanishes, which covers the origin.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    den = p.a * v + u
    safe = np.where(den == 0.0, 1.0, den)
    inter = np.where(den == 0.0, 0.0, p.m * u * v / safe)
    return p.r * u * (1.0 - u / p.K) - inter, inter - p.d * v


def simple_rhs(p: KineticParams, s: State2) -> State2:
    """Time derivative of the simple model at state s."""
    du, dv = simple_reaction(p, s.u, s.v)
    return State2(float(du), float(dv))


def ratio_rhs(p: KineticParams, s: State2) -> State2:
    """Time derivative of the ratio-dependent model at state s.

    Raises DomainError when a*v + u = 0 away from the origin (reachable
    only with negative inputs); at the origin the continuous extension
    gives (0, 0).
    """
    den = p.a * s.v + s.u
    if den == 0.0 and not (s.u == 0.0 and s.v == 0.0):
        raise DomainError(f"interaction denominator a*v + u vanishes at (u, v) = ({s.u}, {s.v})")
    du, dv = ratio_reaction(p, s.u, s.v)
    return State2(float(du), float(dv))


def rhs(model: str, p: KineticParams, s: State2) -> State2:
    _check_model(model)
    return simple_rhs(p, s) if model == "simple" else ratio_rhs(p, s)


def simple_equilibria(p: KineticParams) -> list:
    """All equilibria of the simple kinetics.

    The interior point is (d/m, (-d r + K m r)/(K m^2)); its labour
    component is positive exactly when K > d/m.
    """
    ubar = p.d / p.m
    vbar = (-p.d * p.r + p.K * p.m * p.r) / (p.K * p.m**2)
    return [
        Equilibrium("E0", State2(0.0, 0.0), False),
        Equilibrium("E1", State2(p.K, 0.0), False),
        Equilibrium("interior", State2(ubar, vbar), ubar > 0.0 and vbar > 0.0),
    ]


def ratio_equilibria(p: KineticParams) -> list:
    """All equilibria of the ratio-dependent kinetics.

    The interior point is (K(d-m+ar)/(ar), K(m-d)(d-m+ar)/(a^2 d r)); it is
    positive exactly when m > d and r > (m-d)/a.  The origin is listed for
    completeness: the vector field is only defined there by continuous
    extension of the interaction term.
    """
    ubar = p.K * (p.d - p.m + p.a * p.r) / (p.a * p.r)
    vbar = p.K * (p.m - p.d) * (p.d - p.m + p.a * p.r) / (p.a**2 * p.d * p.r)
    return [
        Equilibrium("E0", State2(0.0, 0.0), False,
                    note="defined only by continuous extension of the interaction term"),
        Equilibrium("E1", State2(p.K, 0.0), False),
        Equilibrium("interior", State2(ubar, vbar), ubar > 0.0 and vbar > 0.0),
    ]


def equilibria(model: str, p: KineticParams) -> list:
    _check_model(model)
    return simple_equilibria(p) if model == "simple" else ratio_equilibria(p)


def interior_equilibrium(model: str, p: KineticParams) -> Equilibrium:
    return equilibria(model, p)[-1]


def simple_jacobian(p: KineticParams, u: float, v: float) -> np.ndarray:
    """Analytic Jacobian of the simple reaction terms at (u, v)."""
    return np.array([
        [p.r - 2.0 * p.r * u / p.K - p.m * v, -p.m * u],
        [p.m * v, p.m * u - p.d],
    ])


def ratio_jacobian(p: KineticParams, u: float, v: float) -> np.ndarray:
    """Analytic Jacobian of the ratio-dependent reaction terms at (u, v)."""
    den = p.a * v + u
    if den == 0.0:
        raise DomainError(f"Jacobian undefined where a*v + u = 0, at (u, v) = ({u}, {v})")
    den2 = den * den
    cross = p.m * p.a * v * v / den2
    own = p.m * u * u / den2
    return np.array([
        [p.r - 2.0 * p.r * u / p.K - cross, -own],
        [cross, own - p.d],
    ])


def jacobian_at(model: str, p: KineticParams, s: State2) -> np.ndarray:
    _check_model(model)
    if model == "simple":
        return simple_jacobian(p, s.u, s.v)
    return ratio_jacobian(p, s.u, s.v)


def simple_interior_jacobian(p: KineticParams) -> np.ndarray:
    """Closed-form Jacobian of the simple model at its interior equilibrium."""
    return np.array([
        [-p.d * p.r / (p.K * p.m), -p.d],
        [p.r * (1.0 - p.d / (p.K * p.m)), 0.0],
    ])


def ratio_interior_jacobian(p: KineticParams) -> np.ndarray:
    """Closed-form Jacobian of the ratio model at its interior equilibrium."""
    return np.array([
        [(p.m**2 - p.d**2) / (p.m * p.a) - p.r, -p.d**2 / p.m],
        [(p.d - p.m) ** 2 / (p.a * p.m), -p.d * (p.m - p.d) / p.m],
    ])


def interior_jacobian(model: str, p: KineticParams) -> np.ndarray:
    """Closed-form interior Jacobian; requires a positive interior equilibrium."""
    _check_model(model)
    eqm = interior_equilibrium(model, p)
    if not eqm.positive:
        raise DomainError(f"{model} model has no positive interior equilibrium for {p}")
    return simple_interior_jacobian(p) if model == "simple" else ratio_interior_jacobian(p)


def kinetic_conditions(model: str, p: KineticParams) -> list:
    """The named non-spatial stability inequalities with signed margins."""
    _check_model(model)
    if model == "simple":
        return [condition("h:2", p.K, p.d / p.m)]
    growth_floor = (p.m - p.d) / p.a
    return [
        condition("h:3rd", p.m, p.d),
        condition("h:2rd", p.r, growth_floor),
        condition("h:4rd", p.a, 1.0),
        condition("plusmas", p.r, growth_floor * (1.0 + p.d / p.m)),
    ]


def check_kinetic_stability(model: str, p: KineticParams) -> StabilityReport:
    """Evaluate the kinetic stability conditions and the interior spectrum.

    The verdict comes from the eigenvalues of the interior Jacobian; the
    condition list is reported alongside so sufficient conditions and
    eigenvalue truth can be compared.  Without a positive interior
    equilibrium the verdict is "undefined".
    """
    conds = kinetic_conditions(model, p)
    eqm = interior_equilibrium(model, p)
    if not eqm.positive:
        return StabilityReport(tuple(conds), (), VERDICT_UNDEFINED,
                               note="no positive interior equilibrium")
    jac = interior_jacobian(model, p)
    eigs = sort_eigenvalues(np.linalg.eigvals(jac))
    quantities = {"trace": float(np.trace(jac)), "det": float(np.linalg.det(jac))}
    return StabilityReport(tuple(conds), eigs, eig_verdict(eigs), quantities=quantities)
