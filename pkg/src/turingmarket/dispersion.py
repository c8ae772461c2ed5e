"""Linear stability of the spatially extended single-country models.

With Fourier modes lambda_k = (k*pi/L)^2 on a closed interval [0, L], the
constant interior state is stable exactly when every mode matrix
A - lambda_k * D is stable, where D carries the cross-diffusion sign
convention [[d11, -d12], [-d21, d22]].  This module builds those matrices,
scans dispersion curves, evaluates the closed-form sufficient bounds on the
capital-toward-labour coefficient d12, and locates the exact onset of
diffusion-driven (Turing) instability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .kinetics import KineticParams, _check_model
from .reports import EPS_MARGIN
from .serialize import csv_text


@dataclass(frozen=True)
class DiffusionMatrix2:
    """Nonnegative diffusion rates for one country.

    d11, d22 are self-diffusion of capital and labour; d12 is the velocity
    of capital flowing toward labour and d21 of labour moving toward free
    jobs.  Used as the signed matrix [[d11, -d12], [-d21, d22]], whose
    determinant must be positive for the problem to be well posed.
    """

    d11: float
    d12: float
    d21: float
    d22: float

    def __post_init__(self):
        for name in ("d11", "d12", "d21", "d22"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
                raise ValueError(f"diffusion coefficient {name} must be >= 0, got {value!r}")
        if self.det <= 0.0:
            raise ValueError(
                f"diffusion matrix must have positive determinant, "
                f"got d11*d22 - d12*d21 = {self.det}")

    @property
    def det(self) -> float:
        return self.d11 * self.d22 - self.d12 * self.d21

    def coefficients(self) -> tuple:
        return (self.d11, self.d12, self.d21, self.d22)

    def signed(self) -> np.ndarray:
        return np.array([[self.d11, -self.d12], [-self.d21, self.d22]])

    def row_sum_max(self) -> float:
        return max(self.d11 + self.d12, self.d21 + self.d22)


def _coefficients(D) -> tuple:
    """Accept a DiffusionMatrix2 or a plain (d11, d12, d21, d22) quadruple."""
    if isinstance(D, DiffusionMatrix2):
        return D.coefficients()
    quad = tuple(float(x) for x in D)
    if len(quad) != 4:
        raise ValueError("diffusion coefficients must be a (d11, d12, d21, d22) quadruple")
    return quad


def signed_diffusion(D) -> np.ndarray:
    d11, d12, d21, d22 = _coefficients(D)
    return np.array([[d11, -d12], [-d21, d22]])


@dataclass(frozen=True)
class SpatialDomain:
    """Interval [0, L] with Fourier modes k = 0..k_max."""

    L: float
    k_max: int

    def __post_init__(self):
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError(f"domain length must be positive, got {self.L!r}")
        if int(self.k_max) != self.k_max or self.k_max < 0:
            raise ValueError(f"k_max must be a nonnegative integer, got {self.k_max!r}")

    def lambdas(self) -> np.ndarray:
        k = np.arange(self.k_max + 1)
        return (k * np.pi / self.L) ** 2


def mode_matrix(A, D, lam: float) -> np.ndarray:
    """The mode matrix A - lambda * D (signed convention applied to D)."""
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    return np.asarray(A, dtype=float) - lam * signed_diffusion(D)


def lambda_linear_coeff(A, D) -> float:
    """Coefficient S in det(A - lambda D) = det A - S*lambda + det D*lambda^2.

    S = a11*d22 + a22*d11 + a12*d21 + a21*d12; the sufficient stability
    bound on d12 is exactly S < 0.
    """
    A = np.asarray(A, dtype=float)
    d11, d12, d21, d22 = _coefficients(D)
    return float(A[0, 0] * d22 + A[1, 1] * d11 + A[0, 1] * d21 + A[1, 0] * d12)


def max_real_eig_2x2(trace, det):
    """Largest real part of the eigenvalues of a 2x2 matrix, vectorised."""
    trace = np.asarray(trace, dtype=float)
    det = np.asarray(det, dtype=float)
    disc = trace * trace / 4.0 - det
    return np.where(disc >= 0.0, trace / 2.0 + np.sqrt(np.maximum(disc, 0.0)), trace / 2.0)


def eig2x2(mat) -> tuple:
    """Both eigenvalues of a 2x2 matrix from its characteristic polynomial."""
    mat = np.asarray(mat, dtype=float)
    tr = mat[0, 0] + mat[1, 1]
    det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    disc = tr * tr / 4.0 - det
    root = np.sqrt(complex(disc))
    return (tr / 2.0 - root, tr / 2.0 + root)


@dataclass(frozen=True)
class DispersionCurve:
    """Per-mode trace, determinant and growth rate of A - lambda_k D."""

    k: np.ndarray
    lam: np.ndarray
    trace: np.ndarray
    det: np.ndarray
    max_re: np.ndarray

    def to_csv(self) -> str:
        rows = zip(self.k.tolist(), self.lam.tolist(), self.trace.tolist(),
                   self.det.tolist(), self.max_re.tolist())
        return csv_text(("k", "lambda_k", "trace", "det", "max_re_eig"), rows)


def dispersion_scan(A, D, domain: SpatialDomain) -> DispersionCurve:
    """Trace/determinant/growth-rate samples over all modes of the domain.

    Mode 0 reproduces the kinetic matrix A exactly; the trace is strictly
    decreasing in lambda because d11 + d22 > 0.
    """
    A = np.asarray(A, dtype=float)
    d11, d12, d21, d22 = _coefficients(D)
    lam = domain.lambdas()
    tr_A = A[0, 0] + A[1, 1]
    det_A = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    det_D = d11 * d22 - d12 * d21
    S = lambda_linear_coeff(A, D)
    trace = tr_A - lam * (d11 + d22)
    det = det_A + lam * lam * det_D - lam * S
    return DispersionCurve(np.arange(domain.k_max + 1), lam, trace, det,
                           max_real_eig_2x2(trace, det))


def sufficient_d12_bound(model: str, p: KineticParams, d11: float, d21: float, d22: float) -> float:
    """Closed-form bound on d12 below which no mode can lose stability.

    simple model:  (d*r/(K*m) * d22 + d*d21) / (r*(1 - d/(K*m)))
    ratio model:   a*d/(m-d) * d11 + a*d^2/(m-d)^2 * d21
                   + (-(m+d)/(m-d) + a*m*r/(m-d)^2) * d22
    """
    _check_model(model)
    if model == "simple":
        denom = p.r * (1.0 - p.d / (p.K * p.m))
        if denom <= 0.0:
            raise DomainError("bound undefined: simple model needs K > d/m")
        return (p.d * p.r / (p.K * p.m) * d22 + p.d * d21) / denom
    if p.m <= p.d:
        raise DomainError("bound undefined: ratio model needs m > d")
    md = p.m - p.d
    return (p.a * p.d / md * d11
            + p.a * p.d**2 / md**2 * d21
            + (-(p.m + p.d) / md + p.a * p.m * p.r / md**2) * d22)


def exact_turing_threshold(A, d11: float, d21: float, d22: float) -> float | None:
    """Smallest d12 >= 0 at which min over lambda >= 0 of det(A - lambda D)
    reaches zero, i.e. the true onset of diffusion-driven instability.

    Requires A stable.  Returns None when no such d12 exists below the
    well-posedness ceiling d11*d22/d21 (where det D would vanish).  Solved
    by bracketed root finding of S(d12) - 2*sqrt(det A * det D(d12)).
    """
    A = np.asarray(A, dtype=float)
    tr_A = A[0, 0] + A[1, 1]
    det_A = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if not (tr_A < 0.0 and det_A > 0.0):
        raise DomainError("exact threshold requires a stable kinetic matrix")
    a21 = A[1, 0]
    s0 = A[0, 0] * d22 + A[1, 1] * d11 + A[0, 1] * d21

    def excess(d12: float) -> float:
        det_D = d11 * d22 - d12 * d21
        return s0 + a21 * d12 - 2.0 * math.sqrt(det_A * det_D)

    if excess(0.0) >= 0.0:
        return 0.0
    if d21 == 0.0:
        # det D is constant, the marginal condition is linear in d12.
        if a21 <= 0.0:
            return None
        return float((2.0 * math.sqrt(det_A * d11 * d22) - s0) / a21)
    ceiling = d11 * d22 / d21
    hi = ceiling * (1.0 - 1e-9)
    if excess(hi) < 0.0:
        return None
    return float(brentq(excess, 0.0, hi, xtol=1e-300, rtol=1e-12))


@dataclass(frozen=True)
class TuringReport:
    """Verdict of the diffusion-driven instability analysis."""

    stable_sufficient: bool
    d12_sufficient_bound: float | None
    d12_exact_threshold: float | None
    critical_mode: int | None
    verdict: str

    def to_dict(self) -> dict:
        return {
            "stable_sufficient": self.stable_sufficient,
            "d12_sufficient_bound": self.d12_sufficient_bound,
            "d12_exact_threshold": self.d12_exact_threshold,
            "critical_mode": self.critical_mode,
            "verdict": self.verdict,
        }


def classify(A, D, domain: SpatialDomain, eps: float = EPS_MARGIN) -> TuringReport:
    """Combine the sufficient bound, the exact threshold and a mode scan.

    The scan extends beyond domain.k_max if needed so the band around the
    continuous minimizer lambda* = sqrt(det A / det D) is sampled; the
    critical mode is the k minimising det(A - lambda_k D) when that minimum
    is negative, ties broken toward small k (long wavelengths).
    """
    A = np.asarray(A, dtype=float)
    d11, d12, d21, d22 = _coefficients(D)
    tr_A = A[0, 0] + A[1, 1]
    det_A = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    det_D = d11 * d22 - d12 * d21
    if det_D <= 0.0:
        raise DomainError("classification requires det D > 0")

    S = lambda_linear_coeff(A, D)
    stable_sufficient = bool(S < 0.0)
    a21 = A[1, 0]
    s0 = A[0, 0] * d22 + A[1, 1] * d11 + A[0, 1] * d21
    bound = float(-s0 / a21) if a21 > 0.0 else None

    kinetic_stable = tr_A < 0.0 and det_A > 0.0
    threshold = exact_turing_threshold(A, d11, d21, d22) if kinetic_stable else None

    k_scan = domain.k_max
    if kinetic_stable:
        lam_star = math.sqrt(det_A / det_D)
        k_cover = math.ceil(domain.L * math.sqrt(10.0 * lam_star) / math.pi)
        k_scan = max(k_scan, k_cover)
    scan = dispersion_scan(A, D, SpatialDomain(domain.L, k_scan))

    critical_mode = None
    if scan.det.min() < 0.0:
        critical_mode = int(np.argmin(scan.det))

    worst = float(scan.max_re.max())
    if float(scan.max_re[0]) > eps:
        verdict = "unstable"
    elif worst > eps:
        verdict = "turing-unstable"
    elif worst < -eps:
        verdict = "stable"
    else:
        verdict = "marginal"
    return TuringReport(stable_sufficient, bound, threshold, critical_mode, verdict)
