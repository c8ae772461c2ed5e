"""Two-country model with inner migration and inner diffusion.

Country 2 is rescaled onto the coordinate of country 1 (a point x in
country 1 exchanges migrants with y = x*L2/L1 in country 2), which
multiplies its diffusion coefficients by (L1/L2)^2 and puts all four fields
on the common interval [0, L1] with modes lambda_k = (k*pi/L1)^2.

When the two countries share one diffusion matrix D (the equal-velocity
assumption), every 4x4 mode matrix A_p + Gamma - lambda_k D4 factors into
the two 2x2 problems A_r - lambda D and B - lambda D, and the stability of
the common market reduces to two quadratic positivity checks per mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import (
    DiffusionMatrix2,
    eig2x2,
    lambda_linear_coeff,
    max_real_eig_2x2,
    sufficient_d12_bound,
)
from .errors import DomainError
from .kinetics import KineticParams, kinetic_conditions, ratio_interior_jacobian
from .patch import (
    PatchParams,
    b_matrix,
    block_factor,
    coupling_block,
    _require_interior,
)
from .reports import (
    Condition,
    EPS_MARGIN,
    StabilityReport,
    condition,
    eig_verdict,
    sort_eigenvalues,
)

EQUAL_DIFFUSION_TOL = 1e-12


@dataclass(frozen=True)
class TwoCountryDomain:
    """Country lengths L1, L2 and the mode cutoff on the common coordinate."""

    L1: float
    L2: float
    k_max: int

    def __post_init__(self):
        for name in ("L1", "L2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"country length {name} must be positive, got {value!r}")
        if int(self.k_max) != self.k_max or self.k_max < 0:
            raise ValueError(f"k_max must be a nonnegative integer, got {self.k_max!r}")

    def lambdas(self) -> np.ndarray:
        k = np.arange(self.k_max + 1)
        return (k * np.pi / self.L1) ** 2


def rescale_diffusion(dhat2: DiffusionMatrix2, L1: float, L2: float) -> DiffusionMatrix2:
    """Express country-2 diffusion on the common coordinate of country 1.

    Every coefficient is multiplied by (L1/L2)^2, so the determinant scales
    by (L1/L2)^4 and stays positive.
    """
    factor = (L1 / L2) ** 2
    return DiffusionMatrix2(*(c * factor for c in dhat2.coefficients()))


@dataclass(frozen=True)
class DiffusionMatrix4:
    """Per-country diffusion blocks; country 2 stored post-rescaling."""

    country1: DiffusionMatrix2
    country2: DiffusionMatrix2

    @classmethod
    def equal(cls, D: DiffusionMatrix2) -> "DiffusionMatrix4":
        return cls(D, D)

    def blocks_equal(self, tol: float = EQUAL_DIFFUSION_TOL) -> bool:
        diff = np.array(self.country1.coefficients()) - np.array(self.country2.coefficients())
        return bool(np.abs(diff).max() <= tol)

    def signed(self) -> np.ndarray:
        out = np.zeros((4, 4))
        out[:2, :2] = self.country1.signed()
        out[2:, 2:] = self.country2.signed()
        return out


def mode_matrix4(A_p, gamma, D4: DiffusionMatrix4, lam: float) -> np.ndarray:
    """The 4x4 mode matrix A_p + Gamma - lambda * D4."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    return np.asarray(A_p, dtype=float) + np.asarray(gamma, dtype=float) - lam * D4.signed()


def factor_under_equal_diffusion(A_p, gamma, D4: DiffusionMatrix4, lam: float,
                                 tol: float = EQUAL_DIFFUSION_TOL):
    """Split the 4x4 mode matrix into (A_r - lambda D, B - lambda D).

    Only valid when both countries share the same diffusion block; the
    spectra of the two factors together equal the 4x4 spectrum.
    """
    if not D4.blocks_equal(tol):
        raise DomainError(
            "diffusion blocks differ between the countries; the factorization "
            "requires equal diffusion velocities (condition d-k)")
    A_r, B = block_factor(A_p, gamma, tol=max(tol, 1e-12))
    signed = D4.country1.signed()
    return A_r - lam * signed, B - lam * signed


def two_country_d12_bound(p: KineticParams, q: PatchParams, D: DiffusionMatrix2) -> float | None:
    """Bound on d12 keeping the migration-coupled mode polynomial stable.

    d12 < (delta2*rho2(u)*d11 + delta1*rho1(v)*d22 + delta1*rho1'(v)*u*d21)
          / (-delta2*rho2'(u)*v)

    Returns None (no finite bound) when the denominator vanishes, i.e. when
    the labour migration function has no cross sensitivity at equilibrium.
    """
    eqm = _require_interior(p)
    u, v = eqm.state.u, eqm.state.v
    num = (q.delta2 * q.rho2.rho(u) * D.d11
           + q.delta1 * q.rho1.rho(v) * D.d22
           + q.delta1 * q.rho1.drho(v) * u * D.d21)
    den = -q.delta2 * q.rho2.drho(u) * v
    if den == 0.0:
        return None
    return num / den


def _quadratic_min_on_halfline(c2: float, c1: float, c0: float) -> float:
    """Minimum over lambda >= 0 of c2*lambda^2 - c1*lambda + c0 (c2 > 0)."""
    if c1 <= 0.0:
        return c0
    return c0 - c1 * c1 / (4.0 * c2)


def _positivity_condition(cid: str, c2: float, c1: float, c0: float) -> Condition:
    minval = _quadratic_min_on_halfline(c2, c1, c0)
    margin = minval / abs(c0) if c0 != 0.0 else minval
    return Condition(cid, minval > 0.0, margin)


def check_thm44(p: KineticParams, q: PatchParams, D: DiffusionMatrix2,
                dom: TwoCountryDomain, eps: float = EPS_MARGIN) -> StabilityReport:
    """Full condition set for the common market with inner migration.

    Both countries are assumed to share the diffusion matrix D (enter
    unequal matrices through :func:`rescale_diffusion` and compare first).
    Reports the kinetic and patch conditions, the single-country d12 bound,
    the migration-coupled d12 bound, exact positivity of both factor
    determinants for all lambda >= 0, and the per-mode spectrum verdict.
    """
    eqm = _require_interior(p)
    u, v = eqm.state.u, eqm.state.v
    A_r = ratio_interior_jacobian(p)
    B = b_matrix(p, q)
    det_A = float(np.linalg.det(A_r))
    det_B = float(np.linalg.det(B))
    det_D = D.det

    conds = kinetic_conditions("ratio", p)

    bound1 = sufficient_d12_bound("ratio", p, D.d11, D.d21, D.d22)
    margin1 = (bound1 - D.d12) / abs(bound1) if bound1 != 0.0 else -D.d12
    conds.append(Condition("h:7rd", D.d12 < bound1, margin1))

    elasticity1 = q.rho1.drho(v) * u / q.rho1.rho(v)
    elasticity2 = q.rho2.drho(u) * v / q.rho2.rho(u)
    conds.append(condition("1.feltetel", 1.0, elasticity1 * elasticity2))
    conds.append(condition("2.feltetelujalak", q.rho1.drho(v) / q.rho1.rho(v), -1.0 / v))

    bound2 = two_country_d12_bound(p, q, D)
    if bound2 is None:
        # No destabilizing cross term from labour migration: bound is vacuous.
        conds.append(Condition("pathdkepletmas", True, 1.0))
    else:
        margin2 = (bound2 - D.d12) / abs(bound2) if bound2 != 0.0 else -D.d12
        conds.append(Condition("pathdkepletmas", D.d12 < bound2, margin2))

    conds.append(Condition("d-k", True, 0.0))

    S = lambda_linear_coeff(A_r, D)
    T = (q.delta2 * q.rho2.rho(u) * D.d11
         + q.delta1 * q.rho1.rho(v) * D.d22
         + q.delta2 * q.rho2.drho(u) * v * D.d12
         + q.delta1 * q.rho1.drho(v) * u * D.d21)
    conds.append(_positivity_condition("det1", det_D, S, det_A))
    conds.append(_positivity_condition("det2", det_D, S - 2.0 * T, det_B))

    lam = dom.lambdas()
    d11, _, _, d22 = D.coefficients()
    max_re = np.full_like(lam, -np.inf)
    for mat, det_M, S_M in ((A_r, det_A, S), (B, det_B, S - 2.0 * T)):
        tr = (mat[0, 0] + mat[1, 1]) - lam * (d11 + d22)
        det = det_M + lam * lam * det_D - lam * S_M
        max_re = np.maximum(max_re, max_real_eig_2x2(tr, det))
    worst_k = int(np.argmax(max_re))
    signed = D.signed()
    eigs = sort_eigenvalues(eig2x2(A_r - lam[worst_k] * signed)
                            + eig2x2(B - lam[worst_k] * signed))

    worst = float(max_re.max())
    if worst < -eps:
        verdict = "stable"
    elif worst > eps:
        verdict = "unstable"
    else:
        verdict = "marginal"

    quantities = {
        "d12_sufficient_bound": bound1,
        "d12_bound_two_country": bound2,
        "det_B": det_B,
        "worst_mode": worst_k,
        "max_re_over_modes": worst,
    }
    return StabilityReport(tuple(conds), eigs, verdict, quantities=quantities)
