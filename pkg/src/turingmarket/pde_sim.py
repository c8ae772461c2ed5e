"""Direct nonlinear integration of the reaction-cross-diffusion systems.

Method of lines on a cell-centered 1-D grid: the Neumann (zero-flux)
Laplacian uses mirrored ghost cells, which makes the discrete operator
conserve mass exactly, and time stepping is classical fourth-order
Runge-Kutta with a CFL-limited step.  Simulations start from the spatially
constant equilibrium plus a small seeded random perturbation and classify
the outcome as converged, pattern, or diverged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.fft import dct

from .dispersion import DiffusionMatrix2
from .errors import DomainError
from .kinetics import (
    KineticParams,
    interior_equilibrium,
    ratio_reaction,
    simple_reaction,
)
from .patch import PatchParams
from .patch_pde import DiffusionMatrix4

SIM_MODELS = ("simple", "ratio", "patch_pde")


@dataclass(frozen=True)
class Grid1D:
    """Cell-centered grid with n cells on [0, L]."""

    L: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError(f"grid length must be positive, got {self.L!r}")
        if int(self.n) != self.n or self.n < 16:
            raise ValueError(f"grid needs at least 16 cells, got {self.n!r}")

    @property
    def h(self) -> float:
        return self.L / self.n

    def centers(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.h


@dataclass(frozen=True)
class SimConfig:
    """Integration controls.

    dt and record_every accept "auto"; the automatic step obeys
    dt <= safety * h^2 / (2 * max diffusion row sum) and a kinetic-rate cap,
    and the automatic recording cadence is t_end/100.  The perturbation is
    a relative amplitude applied cell-wise with a seeded uniform draw.
    """

    t_end: float
    dt: float | str = "auto"
    safety: float = 0.4
    perturbation: float = 1e-3
    seed: int = 0
    record_every: float | str = "auto"
    tol_conv: float = 1e-6

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be positive, got {self.t_end!r}")
        if not (0.0 < self.safety <= 1.0):
            raise ValueError(f"safety must lie in (0, 1], got {self.safety!r}")
        if self.dt != "auto" and not (isinstance(self.dt, (int, float)) and self.dt > 0):
            raise ValueError(f"dt must be 'auto' or positive, got {self.dt!r}")
        if self.record_every != "auto" and not (
                isinstance(self.record_every, (int, float)) and self.record_every > 0):
            raise ValueError(f"record_every must be 'auto' or positive, got {self.record_every!r}")
        if self.perturbation < 0:
            raise ValueError(f"perturbation must be >= 0, got {self.perturbation!r}")


@dataclass
class SimResult:
    """Deviation history, final fields and the outcome classification."""

    times: np.ndarray
    deviations: np.ndarray
    final_fields: np.ndarray
    equilibrium: np.ndarray
    verdict: str
    dominant_mode: int | None
    dt: float
    steps: int
    snapshots: tuple


def laplacian_neumann(f, h: float) -> np.ndarray:
    """Second-order zero-flux Laplacian of cell-centered data.

    Ghost cells mirror the boundary values, so a constant field maps to
    zero and the cell sums telescope to zero (exact mass conservation).
    Accepts (..., n) arrays and differentiates the last axis.
    """
    f = np.asarray(f, dtype=float)
    if f.shape[-1] < 3:
        raise ValueError("need at least 3 cells")
    out = np.empty_like(f)
    inv_h2 = 1.0 / (h * h)
    out[..., 1:-1] = (f[..., 2:] - 2.0 * f[..., 1:-1] + f[..., :-2]) * inv_h2
    out[..., 0] = (f[..., 1] - f[..., 0]) * inv_h2
    out[..., -1] = (f[..., -2] - f[..., -1]) * inv_h2
    return out


def step(rhs: Callable, y: np.ndarray, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of y' = rhs(y)."""
    k1 = rhs(y)
    k2 = rhs(y + 0.5 * dt * k1)
    k3 = rhs(y + 0.5 * dt * k2)
    k4 = rhs(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _as_diffusion4(D) -> DiffusionMatrix4:
    if isinstance(D, DiffusionMatrix4):
        return D
    if isinstance(D, DiffusionMatrix2):
        return DiffusionMatrix4.equal(D)
    raise TypeError(f"expected DiffusionMatrix2 or DiffusionMatrix4, got {type(D)!r}")


def make_rhs(model: str, p: KineticParams, D, grid: Grid1D,
             patch_params: PatchParams | None = None,
             include_reaction: bool = True) -> Callable:
    """Build the method-of-lines right-hand side for one model.

    ``include_reaction=False`` leaves only the diffusion (and migration)
    operator, which the conservation tests rely on.
    """
    if model not in SIM_MODELS:
        raise ValueError(f"unknown model {model!r}, expected one of {SIM_MODELS}")
    h = grid.h
    if model in ("simple", "ratio"):
        signed = D.signed() if isinstance(D, DiffusionMatrix2) else np.asarray(D, dtype=float)
        reaction = simple_reaction if model == "simple" else ratio_reaction

        def rhs(y: np.ndarray) -> np.ndarray:
            out = signed @ laplacian_neumann(y, h)
            if include_reaction:
                du, dv = reaction(p, y[0], y[1])
                out[0] += du
                out[1] += dv
            return out

        return rhs

    if patch_params is None:
        raise ValueError("patch_pde model needs patch parameters")
    q = patch_params
    signed4 = _as_diffusion4(D).signed()

    def rhs4(y: np.ndarray) -> np.ndarray:
        out = signed4 @ laplacian_neumann(y, h)
        if include_reaction:
            du1, dv1 = ratio_reaction(p, y[0], y[1])
            du2, dv2 = ratio_reaction(p, y[2], y[3])
            flow_u = q.delta1 * (q.rho1.rho(y[3]) * y[2] - q.rho1.rho(y[1]) * y[0])
            flow_v = q.delta2 * (q.rho2.rho(y[2]) * y[3] - q.rho2.rho(y[0]) * y[1])
            out[0] += du1 + flow_u
            out[1] += dv1 + flow_v
            out[2] += du2 - flow_u
            out[3] += dv2 - flow_v
        return out

    return rhs4


def stable_dt(p: KineticParams, D, grid: Grid1D, safety: float,
              patch_params: PatchParams | None = None) -> float:
    """CFL-limited explicit step.

    Diffusion bound from the row sums of |D| (conservative spectral
    estimate including the cross terms), plus a cap from the fastest
    kinetic or migration rate.
    """
    D4 = _as_diffusion4(D) if isinstance(D, (DiffusionMatrix2, DiffusionMatrix4)) else None
    if D4 is None:
        raise TypeError("stable_dt needs a diffusion matrix type")
    row_max = max(D4.country1.row_sum_max(), D4.country2.row_sum_max())
    rate = max(p.r, p.m, p.d)
    if patch_params is not None:
        rate = max(rate,
                   patch_params.delta1 * float(patch_params.rho1.rho(0.0)),
                   patch_params.delta2 * float(patch_params.rho2.rho(0.0)))
    dt_diff = grid.h ** 2 / (2.0 * row_max)
    dt_react = 1.0 / (2.0 * rate)
    return safety * min(dt_diff, dt_react)


def equilibrium_vector(model: str, p: KineticParams) -> np.ndarray:
    """Spatially constant equilibrium the simulation perturbs around."""
    base_model = "simple" if model == "simple" else "ratio"
    eqm = interior_equilibrium(base_model, p)
    if not eqm.positive:
        raise DomainError(f"{model} simulation needs a positive interior equilibrium")
    pair = [eqm.state.u, eqm.state.v]
    return np.array(pair * 2 if model == "patch_pde" else pair, dtype=float)


def dominant_mode(field: np.ndarray) -> int | None:
    """Index of the strongest cosine mode (k >= 1) of one species' profile."""
    field = np.asarray(field, dtype=float)
    coeffs = dct(field - field.mean(), type=2)
    mags = np.abs(coeffs[1:])
    if mags.size == 0 or mags.max() == 0.0:
        return None
    return int(np.argmax(mags)) + 1


def simulate(model: str, p: KineticParams, D, grid: Grid1D, config: SimConfig,
             patch_params: PatchParams | None = None) -> SimResult:
    """Integrate from equilibrium plus seeded noise and classify the outcome.

    Verdicts: "converged" when the final relative sup-norm deviation is
    below tol_conv; "pattern" when the deviation grew to at least 1000x the
    initial amplitude while staying bounded and spatially non-constant;
    "diverged" when the blow-up guard (1e6x initial scale) trips; otherwise
    "undecided" (still in transient at t_end).
    """
    if model == "patch_pde":
        if patch_params is None:
            raise ValueError("patch_pde model needs patch parameters")
        D4 = _as_diffusion4(D)
        if not D4.blocks_equal():
            raise DomainError("patch_pde simulation requires equal diffusion blocks "
                              "in the two countries (condition d-k)")
    eq = equilibrium_vector(model, p)
    n_species = eq.size
    rhs = make_rhs(model, p, D, grid, patch_params=patch_params)

    rng = np.random.default_rng(config.seed)
    noise = rng.uniform(-1.0, 1.0, size=(n_species, grid.n))
    y = eq[:, None] * (1.0 + config.perturbation * noise)

    dt = stable_dt(p, D, grid, config.safety, patch_params) if config.dt == "auto" \
        else float(config.dt)
    n_steps = max(1, math.ceil(config.t_end / dt))
    dt = config.t_end / n_steps

    rec_every = config.t_end / 100.0 if config.record_every == "auto" else float(config.record_every)
    stride = max(1, round(rec_every / dt))

    eq_norm = float(np.abs(eq).max())
    blow_limit = 1e6 * max(float(np.abs(y).max()), eq_norm)

    def deviation(state: np.ndarray) -> float:
        return float(np.abs(state - eq[:, None]).max()) / eq_norm

    times = [0.0]
    devs = [deviation(y)]
    snapshots = [(0.0, y.copy())]
    diverged = False
    done = 0
    for i in range(1, n_steps + 1):
        y = step(rhs, y, dt)
        done = i
        if i % stride == 0 or i == n_steps:
            peak = float(np.abs(y).max())
            if not math.isfinite(peak) or peak > blow_limit:
                diverged = True
                times.append(i * dt)
                devs.append(math.inf if not math.isfinite(peak) else deviation(y))
                break
            times.append(i * dt)
            devs.append(deviation(y))
            snapshots.append((i * dt, y.copy()))

    final_dev = devs[-1]
    if diverged:
        verdict = "diverged"
    elif final_dev < config.tol_conv:
        verdict = "converged"
    else:
        spread = float((y.max(axis=1) - y.min(axis=1)).max()) / eq_norm
        grown = final_dev > 1e3 * config.perturbation
        if grown and spread > 10.0 * config.tol_conv:
            verdict = "pattern"
        else:
            verdict = "undecided"

    return SimResult(
        times=np.asarray(times),
        deviations=np.asarray(devs),
        final_fields=y,
        equilibrium=eq,
        verdict=verdict,
        dominant_mode=dominant_mode(y[0]),
        dt=dt,
        steps=done,
        snapshots=tuple(snapshots),
    )
