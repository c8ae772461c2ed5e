"""Service layer: one handler per command, plus the FastAPI wiring.

The handlers take validated request models and return response models; the
HTTP endpoints and the CLI both call them, so local runs and a deployed
service produce identical results.
"""

from __future__ import annotations

import copy
import io
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import ValidationError

from . import __version__
from .dispersion import classify, dispersion_scan, sufficient_d12_bound
from .errors import ConfigError, DomainError, NumericalError
from .kinetics import check_kinetic_stability, equilibria, interior_jacobian
from .patch import check_thm42, check_thm43
from .patch_pde import check_thm44, rescale_diffusion
from .pde_sim import Grid1D, simulate
from .reports import CONDITION_REGISTRY, Condition
from .schemas import (
    AnalyzeResponse,
    ConditionModel,
    DispersionResponse,
    EigenvalueModel,
    EquilibriumModel,
    PatchCheckResponse,
    ReportModel,
    RunConfig,
    SimulateResponse,
    SweepRequest,
    SweepResponse,
    TuringReportModel,
)
from .serialize import csv_text


def _base_model(cfg: RunConfig) -> str:
    return "simple" if cfg.model == "simple" else "ratio"


def _require(cfg: RunConfig, section: str, command: str) -> None:
    if getattr(cfg, section) is None:
        raise ConfigError(f"config is missing required section {section!r} for {command}")


def _common_diffusion(cfg: RunConfig):
    """Resolve the per-country diffusion blocks to one shared matrix.

    A second-country block is rescaled onto the common coordinate and must
    then match the first block; otherwise the analysis is rejected, since
    the factorization needs equal diffusion velocities (condition d-k).
    """
    D = cfg.diffusion.to_domain()
    if cfg.diffusion2 is None:
        return D
    _require(cfg, "two_country_domain", "rescaling the second-country diffusion block")
    dom = cfg.two_country_domain
    rescaled = rescale_diffusion(cfg.diffusion2.to_domain(), dom.L1, dom.L2)
    gap = max(abs(x - y) for x, y in zip(D.coefficients(), rescaled.coefficients()))
    if gap > 1e-12:
        raise ConfigError(
            "rescaled country-2 diffusion block differs from country 1 "
            f"(max coefficient gap {gap:g}); equal diffusion velocities "
            "(condition d-k) are required")
    return D


def _condition_models(conditions) -> list:
    return [ConditionModel(id=c.cid, holds=c.holds, margin=float(c.margin))
            for c in conditions]


def _eig_models(eigenvalues) -> list:
    return [EigenvalueModel(re=z.real, im=z.imag) for z in eigenvalues]


def _report_model(report) -> ReportModel:
    return ReportModel(
        conditions=_condition_models(report.conditions),
        eigenvalues=_eig_models(report.eigenvalues),
        verdict=report.verdict,
        note=report.note,
        quantities={k: (None if v is None else float(v))
                    for k, v in report.quantities.items()},
    )


def _merge_conditions(table: dict, conditions) -> None:
    for c in conditions:
        table.setdefault(c.cid, c)


def _d12_bound_condition(model: str, p, D) -> Condition:
    bound = sufficient_d12_bound(model, p, D.d11, D.d21, D.d22)
    cid = "h:5" if model == "simple" else "h:7rd"
    margin = (bound - D.d12) / abs(bound) if bound != 0.0 else -D.d12
    return Condition(cid, D.d12 < bound, margin)


def run_analyze(cfg: RunConfig) -> AnalyzeResponse:
    """Full condition table for every section present in the config."""
    p = cfg.kinetics.to_domain()
    model = _base_model(cfg)
    kin = check_kinetic_stability(model, p)

    table: dict = {}
    _merge_conditions(table, kin.conditions)
    verdicts = {"kinetic": kin.verdict}
    quantities = {k: (None if v is None else float(v)) for k, v in kin.quantities.items()}
    notes = [kin.note] if kin.note else []

    if cfg.diffusion is not None:
        D = _common_diffusion(cfg)
        try:
            cond = _d12_bound_condition(model, p, D)
            _merge_conditions(table, [cond])
            quantities["d12_sufficient_bound"] = float(
                sufficient_d12_bound(model, p, D.d11, D.d21, D.d22))
        except DomainError as exc:
            notes.append(f"d12 bound unavailable: {exc}")

    if cfg.patch is not None:
        if cfg.model == "simple":
            raise ConfigError("patch analysis uses the ratio-dependent kinetics; "
                              "set model to 'ratio' or 'patch_pde'")
        q = cfg.patch.to_domain()
        try:
            t42 = check_thm42(p, q)
            t43 = check_thm43(p, q)
            _merge_conditions(table, t42.conditions)
            _merge_conditions(table, t43.conditions)
            verdicts["patch"] = t42.verdict
            for key in ("delta1_bound", "det_B"):
                value = t42.quantities.get(key, t43.quantities.get(key))
                quantities[key] = None if value is None else float(value)
        except DomainError as exc:
            notes.append(f"patch analysis unavailable: {exc}")

        if cfg.diffusion is not None and cfg.two_country_domain is not None:
            D = _common_diffusion(cfg)
            try:
                t44 = check_thm44(p, q, D, cfg.two_country_domain.to_domain())
                _merge_conditions(table, t44.conditions)
                verdicts["two_country"] = t44.verdict
                bound2 = t44.quantities.get("d12_bound_two_country")
                quantities["d12_bound_two_country"] = None if bound2 is None else float(bound2)
            except DomainError as exc:
                notes.append(f"two-country analysis unavailable: {exc}")

    ordered = [table[cid] for cid in CONDITION_REGISTRY if cid in table]
    eq_models = [EquilibriumModel(label=e.label, u=e.state.u, v=e.state.v,
                                  positive=e.positive, note=e.note)
                 for e in equilibria(model, p)]
    return AnalyzeResponse(
        model=cfg.model,
        equilibria=eq_models,
        conditions=_condition_models(ordered),
        eigenvalues=_eig_models(kin.eigenvalues),
        verdicts=verdicts,
        quantities=quantities,
        notes=notes,
    )


def run_dispersion(cfg: RunConfig) -> DispersionResponse:
    """Dispersion curve plus the Turing classification."""
    if cfg.model == "patch_pde":
        raise ConfigError("dispersion analysis is single-country; "
                          "set model to 'simple' or 'ratio'")
    _require(cfg, "diffusion", "dispersion")
    _require(cfg, "domain", "dispersion")
    p = cfg.kinetics.to_domain()
    D = cfg.diffusion.to_domain()
    dom = cfg.domain.to_domain()
    A = interior_jacobian(cfg.model, p)
    curve = dispersion_scan(A, D, dom)
    report = classify(A, D, dom)
    return DispersionResponse(
        report=TuringReportModel(**report.to_dict()),
        curve_csv=curve.to_csv(),
    )


def run_patch_check(cfg: RunConfig) -> PatchCheckResponse:
    """Two-patch theorems, and the two-country PDE theorem when configured."""
    _require(cfg, "patch", "patch-check")
    if cfg.model == "simple":
        raise ConfigError("patch analysis uses the ratio-dependent kinetics; "
                          "set model to 'ratio' or 'patch_pde'")
    p = cfg.kinetics.to_domain()
    q = cfg.patch.to_domain()
    t42 = check_thm42(p, q)
    t43 = check_thm43(p, q)
    t44 = None
    if cfg.diffusion is not None and cfg.two_country_domain is not None:
        D = _common_diffusion(cfg)
        t44 = _report_model(check_thm44(p, q, D, cfg.two_country_domain.to_domain()))
    return PatchCheckResponse(thm42=_report_model(t42), thm43=_report_model(t43), thm44=t44)


def _profile_csv(grid: Grid1D, fields: np.ndarray) -> str:
    headers = ("x", "u", "v") if fields.shape[0] == 2 else ("x", "u", "v", "u2", "v2")
    x = grid.centers()
    rows = ((x[i], *(fields[s, i] for s in range(fields.shape[0]))) for i in range(grid.n))
    return csv_text(headers, rows)


def _snapshots_csv(grid: Grid1D, snapshots) -> str:
    base = ("u", "v") if snapshots[0][1].shape[0] == 2 else ("u", "v", "u2", "v2")
    x = grid.centers()

    def rows():
        for t, fields in snapshots:
            for i in range(grid.n):
                yield (t, x[i], *(fields[s, i] for s in range(fields.shape[0])))

    return csv_text(("t", "x") + base, rows())


def _profile_svg(grid: Grid1D, fields: np.ndarray) -> str:
    import matplotlib
    matplotlib.rcParams["svg.hashsalt"] = "turingmarket"
    from matplotlib.figure import Figure

    labels = ("u", "v") if fields.shape[0] == 2 else ("u", "v", "u2", "v2")
    fig = Figure(figsize=(7.0, 4.0))
    ax = fig.add_subplot(111)
    x = grid.centers()
    for row, label in zip(fields, labels):
        ax.plot(x, row, label=label)
    ax.set_xlabel("x")
    ax.set_ylabel("density")
    ax.legend(loc="best")
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def run_simulate(cfg: RunConfig) -> SimulateResponse:
    """Integrate the configured model and package the artifacts."""
    p = cfg.kinetics.to_domain()
    sim = cfg.sim
    if cfg.model == "patch_pde":
        _require(cfg, "patch", "simulate")
        _require(cfg, "diffusion", "simulate")
        _require(cfg, "two_country_domain", "simulate")
        D = _common_diffusion(cfg)
        grid = sim.grid(cfg.two_country_domain.L1)
        result = simulate("patch_pde", p, D, grid, sim.to_domain(),
                          patch_params=cfg.patch.to_domain())
    else:
        _require(cfg, "diffusion", "simulate")
        _require(cfg, "domain", "simulate")
        D = cfg.diffusion.to_domain()
        grid = sim.grid(cfg.domain.L)
        result = simulate(cfg.model, p, D, grid, sim.to_domain())

    final_dev = float(result.deviations[-1])
    deviation_csv = csv_text(("t", "deviation"),
                             zip(result.times.tolist(), result.deviations.tolist()))
    return SimulateResponse(
        verdict=result.verdict,
        dominant_mode=result.dominant_mode,
        final_deviation=final_dev if np.isfinite(final_dev) else None,
        dt=result.dt,
        steps=result.steps,
        seed=sim.seed,
        deviation_csv=deviation_csv,
        final_profile_csv=_profile_csv(grid, result.final_fields),
        snapshots_csv=_snapshots_csv(grid, result.snapshots) if sim.snapshots else None,
        profile_svg=_profile_svg(grid, result.final_fields) if sim.plot else None,
    )


def _expected_condition_ids(cfg: RunConfig) -> list:
    if cfg.model == "simple":
        ids = {"h:2"}
        if cfg.diffusion is not None:
            ids.add("h:5")
    else:
        ids = {"h:3rd", "h:2rd", "h:4rd", "plusmas"}
        if cfg.diffusion is not None:
            ids.add("h:7rd")
        if cfg.patch is not None:
            ids.update({"p:5", "1.feltetel", "2.feltetelujalak"})
            if cfg.diffusion is not None and cfg.two_country_domain is not None:
                ids.update({"pathdkepletmas", "d-k", "det1", "det2"})
    return [cid for cid in CONDITION_REGISTRY if cid in ids]


def _verdict_columns(cfg: RunConfig) -> list:
    cols = ["verdict_kinetic"]
    if cfg.patch is not None and cfg.model != "simple":
        cols.append("verdict_patch")
        if cfg.diffusion is not None and cfg.two_country_domain is not None:
            cols.append("verdict_two_country")
    return cols


def _set_axis(dump: dict, axis: str, value: float) -> dict:
    node = dump
    parts = axis.split(".")
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node or node[part] is None:
            raise ConfigError(f"sweep axis {axis!r} not found in config")
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"sweep axis {axis!r} not found in config")
    if isinstance(node[leaf], bool) or not isinstance(node[leaf], (int, float)):
        raise ConfigError(f"sweep axis {axis!r} does not point at a numeric parameter")
    node[leaf] = value
    return dump


def _thread_cap() -> int:
    raw = os.environ.get("TM_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"TM_THREADS must be an integer, got {raw!r}") from None
    return min(8, os.cpu_count() or 1)


def run_sweep(req: SweepRequest) -> SweepResponse:
    """Evaluate the condition table along one parameter axis.

    Rows keep their sweep order regardless of execution order; points whose
    configuration becomes infeasible produce empty margins and an "error"
    verdict instead of aborting the sweep.
    """
    if not (req.hi > req.lo):
        raise ConfigError(f"empty sweep range [{req.lo}, {req.hi}]")
    base = req.config.model_dump()
    _set_axis(req.config.model_dump(), req.axis, req.lo)  # fail fast on a bad axis

    cond_ids = _expected_condition_ids(req.config)
    verdict_cols = _verdict_columns(req.config)
    values = [req.lo + (req.hi - req.lo) * i / req.steps for i in range(req.steps + 1)]

    def evaluate(value: float):
        try:
            patched = RunConfig.model_validate(
                _set_axis(copy.deepcopy(base), req.axis, value))
            response = run_analyze(patched)
        except (ConfigError, DomainError, ValidationError, ValueError):
            return [""] * len(cond_ids), ["error"] * len(verdict_cols)
        margins = {c.id: c.margin for c in response.conditions}
        cells = [margins.get(cid, "") for cid in cond_ids]
        verdicts = [response.verdicts.get(col.removeprefix("verdict_"), "")
                    for col in verdict_cols]
        return cells, verdicts

    with ThreadPoolExecutor(max_workers=_thread_cap()) as pool:
        outcomes = list(pool.map(evaluate, values))

    header = ["index", "value"] + cond_ids + verdict_cols
    rows = [[i, values[i], *outcomes[i][0], *outcomes[i][1]] for i in range(len(values))]
    return SweepResponse(axis=req.axis, lo=req.lo, hi=req.hi, steps=req.steps,
                         columns=header, csv=csv_text(header, rows))


def create_app() -> FastAPI:
    app = FastAPI(title="turingmarket", version=__version__)

    @app.exception_handler(ConfigError)
    async def _config_error(request, exc):
        return JSONResponse(status_code=400,
                            content={"detail": str(exc), "kind": "config"})

    @app.exception_handler(DomainError)
    async def _domain_error(request, exc):
        return JSONResponse(status_code=400,
                            content={"detail": str(exc), "kind": "config"})

    @app.exception_handler(NumericalError)
    async def _numerical_error(request, exc):
        return JSONResponse(status_code=500,
                            content={"detail": str(exc), "kind": "numerical"})

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/analyze", response_model=AnalyzeResponse)
    def analyze(cfg: RunConfig):
        return run_analyze(cfg)

    @app.post("/dispersion", response_model=DispersionResponse)
    def dispersion(cfg: RunConfig):
        return run_dispersion(cfg)

    @app.post("/patch-check", response_model=PatchCheckResponse)
    def patch_check(cfg: RunConfig):
        return run_patch_check(cfg)

    @app.post("/simulate", response_model=SimulateResponse)
    def do_simulate(cfg: RunConfig):
        return run_simulate(cfg)

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest):
        return run_sweep(req)

    return app


app = create_app()
