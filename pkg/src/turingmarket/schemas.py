"""Pydantic request/response models for the service and CLI.

Run configurations are strict: unknown keys are rejected so silent typos in
parameter names cannot slip through, and a schema_version field pins the
format.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .dispersion import DiffusionMatrix2, SpatialDomain
from .kinetics import KineticParams
from .patch import MigrationFunction, PatchParams
from .patch_pde import TwoCountryDomain
from .pde_sim import Grid1D, SimConfig


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class KineticsSection(StrictModel):
    r: float = Field(gt=0)
    K: float = Field(gt=0)
    m: float = Field(gt=0)
    d: float = Field(gt=0)
    a: float = Field(default=1.0, gt=0)

    def to_domain(self) -> KineticParams:
        return KineticParams(self.r, self.K, self.m, self.d, self.a)


class DiffusionSection(StrictModel):
    d11: float = Field(ge=0)
    d12: float = Field(ge=0)
    d21: float = Field(ge=0)
    d22: float = Field(ge=0)

    @model_validator(mode="after")
    def _well_posed(self):
        if self.d11 * self.d22 - self.d12 * self.d21 <= 0:
            raise ValueError("diffusion matrix needs d11*d22 - d12*d21 > 0")
        return self

    def to_domain(self) -> DiffusionMatrix2:
        return DiffusionMatrix2(self.d11, self.d12, self.d21, self.d22)


class MigrationSection(StrictModel):
    family: Literal["rational", "constant"]
    alpha: Optional[float] = None

    @model_validator(mode="after")
    def _family_args(self):
        if self.family == "rational":
            if self.alpha is None or self.alpha <= 1.0:
                raise ValueError("rational migration function needs alpha > 1")
        elif self.alpha is not None:
            raise ValueError("constant migration function takes no alpha")
        return self

    def to_domain(self) -> MigrationFunction:
        if self.family == "rational":
            return MigrationFunction.rational(self.alpha)
        return MigrationFunction.constant()


class PatchSection(StrictModel):
    delta1: float = Field(ge=0)
    delta2: float = Field(ge=0)
    rho1: MigrationSection
    rho2: MigrationSection

    def to_domain(self) -> PatchParams:
        return PatchParams(self.delta1, self.delta2,
                           self.rho1.to_domain(), self.rho2.to_domain())


class DomainSection(StrictModel):
    L: float = Field(gt=0)
    k_max: int = Field(default=200, ge=0)

    def to_domain(self) -> SpatialDomain:
        return SpatialDomain(self.L, self.k_max)


class TwoCountrySection(StrictModel):
    L1: float = Field(gt=0)
    L2: float = Field(gt=0)
    k_max: int = Field(default=200, ge=0)

    def to_domain(self) -> TwoCountryDomain:
        return TwoCountryDomain(self.L1, self.L2, self.k_max)


class SimSection(StrictModel):
    t_end: float = Field(default=200.0, gt=0)
    dt: float | Literal["auto"] = "auto"
    safety: float = Field(default=0.4, gt=0, le=1)
    perturbation: float = Field(default=1e-3, ge=0)
    seed: int = 0
    record_every: float | Literal["auto"] = "auto"
    n: int = Field(default=256, ge=16)
    tol_conv: float = Field(default=1e-6, gt=0)
    snapshots: bool = True
    plot: bool = False

    def to_domain(self) -> SimConfig:
        return SimConfig(t_end=self.t_end, dt=self.dt, safety=self.safety,
                         perturbation=self.perturbation, seed=self.seed,
                         record_every=self.record_every, tol_conv=self.tol_conv)

    def grid(self, L: float) -> Grid1D:
        return Grid1D(L, self.n)


class RunConfig(StrictModel):
    """One self-contained run description, shared by every command."""

    schema_version: Literal[1]
    model: Literal["simple", "ratio", "patch_pde"]
    kinetics: KineticsSection
    diffusion: Optional[DiffusionSection] = None
    diffusion2: Optional[DiffusionSection] = None
    patch: Optional[PatchSection] = None
    domain: Optional[DomainSection] = None
    two_country_domain: Optional[TwoCountrySection] = None
    sim: SimSection = Field(default_factory=SimSection)
    out: Optional[str] = None


class ConditionModel(StrictModel):
    id: str
    holds: bool
    margin: float


class EigenvalueModel(StrictModel):
    re: float
    im: float


class EquilibriumModel(StrictModel):
    label: str
    u: float
    v: float
    positive: bool
    note: str = ""


class ReportModel(StrictModel):
    conditions: list[ConditionModel]
    eigenvalues: list[EigenvalueModel]
    verdict: str
    note: str = ""
    quantities: dict[str, Optional[float]] = {}


class AnalyzeResponse(StrictModel):
    schema_version: int = 1
    model: str
    equilibria: list[EquilibriumModel]
    conditions: list[ConditionModel]
    eigenvalues: list[EigenvalueModel]
    verdicts: dict[str, str]
    quantities: dict[str, Optional[float]]
    notes: list[str]


class TuringReportModel(StrictModel):
    stable_sufficient: bool
    d12_sufficient_bound: Optional[float]
    d12_exact_threshold: Optional[float]
    critical_mode: Optional[int]
    verdict: str


class DispersionResponse(StrictModel):
    report: TuringReportModel
    curve_csv: str


class PatchCheckResponse(StrictModel):
    thm42: ReportModel
    thm43: ReportModel
    thm44: Optional[ReportModel] = None


class SimulateResponse(StrictModel):
    verdict: str
    dominant_mode: Optional[int]
    final_deviation: Optional[float]
    dt: float
    steps: int
    seed: int
    deviation_csv: str
    final_profile_csv: str
    snapshots_csv: Optional[str] = None
    profile_svg: Optional[str] = None


class SweepRequest(StrictModel):
    config: RunConfig
    axis: str
    lo: float
    hi: float
    steps: int = Field(ge=1)


class SweepResponse(StrictModel):
    axis: str
    lo: float
    hi: float
    steps: int
    columns: list[str]
    csv: str
