"""Condition bookkeeping and stability verdicts.

Every inequality evaluated by the analysis modules is reported as a
:class:`Condition` with a signed margin: positive margin means the condition
holds, and the margin changes sign exactly where the inequality saturates,
which is what parameter sweeps use to locate stability boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

# Fixed registry of condition labels that reports may emit.  Sweep CSV
# columns and report JSON use these ids verbatim.
CONDITION_REGISTRY = (
    "h:2",               # simple kinetics: K > d/m
    "h:3rd",             # ratio kinetics: m > d
    "h:2rd",             # ratio kinetics: r > (m-d)/a
    "h:4rd",             # ratio kinetics: a > 1
    "plusmas",           # capital growth outside the Allee zone
    "h:5",               # simple model bound on d12
    "h:7rd",             # ratio model bound on d12
    "sign",              # negative capital->labour entry of the coupled block
    "p:5",               # capital migration velocity bound (same boundary as "sign")
    "1.feltetel",        # migration elasticity product below one
    "2.feltetelujalak",  # relative decay of rho1 bounded by labour density
    "d-k",               # equal diffusion velocities in both countries
    "det1",              # first factor determinant positive for all modes
    "det2",              # second factor determinant positive for all modes
    "pathdkepletmas",    # two-country bound on d12
)

# Eigenvalues within this distance of the imaginary axis give a "marginal"
# verdict instead of a binary answer.
EPS_MARGIN = 1e-10

VERDICT_STABLE = "stable"
VERDICT_UNSTABLE = "unstable"
VERDICT_MARGINAL = "marginal"
VERDICT_UNDEFINED = "undefined"


def signed_slack(lhs: float, rhs: float) -> float:
    """Margin of the strict inequality lhs > rhs.

    Normalized by |rhs| when rhs is nonzero so sweeps over different scales
    stay comparable; plain difference otherwise.
    """
    if rhs != 0.0:
        return (lhs - rhs) / abs(rhs)
    return lhs - rhs


@dataclass(frozen=True)
class Condition:
    """One named inequality with its boolean outcome and signed margin."""

    cid: str
    holds: bool
    margin: float

    def __post_init__(self):
        if self.cid not in CONDITION_REGISTRY:
            raise ValueError(f"unknown condition id {self.cid!r}")
        # normalize numpy scalars so reports serialize cleanly
        object.__setattr__(self, "holds", bool(self.holds))
        object.__setattr__(self, "margin", float(self.margin))

    def to_dict(self) -> dict:
        return {"id": self.cid, "holds": self.holds, "margin": self.margin}


def condition(cid: str, lhs: float, rhs: float) -> Condition:
    """Condition asserting lhs > rhs, with margin from :func:`signed_slack`."""
    margin = signed_slack(lhs, rhs)
    return Condition(cid, margin > 0.0, margin)


def eig_verdict(eigenvalues, eps: float = EPS_MARGIN) -> str:
    """Classify a spectrum: stable / unstable / marginal.

    Stable requires every real part below -eps, unstable some real part
    above +eps; anything pinned to the axis within eps is marginal.
    """
    real_parts = [complex(ev).real for ev in eigenvalues]
    if not real_parts:
        return VERDICT_UNDEFINED
    worst = max(real_parts)
    if worst < -eps:
        return VERDICT_STABLE
    if worst > eps:
        return VERDICT_UNSTABLE
    return VERDICT_MARGINAL


def sort_eigenvalues(eigenvalues) -> tuple:
    """Deterministic eigenvalue ordering (by real part, then imaginary)."""
    return tuple(sorted((complex(ev) for ev in eigenvalues),
                        key=lambda z: (z.real, z.imag)))


@dataclass(frozen=True)
class StabilityReport:
    """Structured verdict: which conditions hold, eigenvalues, margins."""

    conditions: tuple
    eigenvalues: tuple
    verdict: str
    note: str = ""
    quantities: Mapping = field(default_factory=dict)

    def condition(self, cid: str) -> Condition:
        for c in self.conditions:
            if c.cid == cid:
                return c
        raise KeyError(cid)

    def all_hold(self) -> bool:
        return all(c.holds for c in self.conditions)

    def to_dict(self) -> dict:
        return {
            "conditions": [c.to_dict() for c in self.conditions],
            "eigenvalues": [{"re": z.real, "im": z.imag} for z in self.eigenvalues],
            "verdict": self.verdict,
            "note": self.note,
            "quantities": dict(self.quantities),
        }
