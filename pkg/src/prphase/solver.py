"""Semi-implicit time stepper with a mass-constraint multiplier.

One step solves, for the new cell field c and a scalar mu_e,

    c/tau_eff - kappa*Lap(c) + nu(c_old)*c = c_old/tau_eff + s_r(c_old) + mu_e
    <c, 1> = c_t                                       (total moles fixed)

where tau_eff = mobility*tau and Lap is the Neumann five-point Laplacian.
The operator A = I/tau_eff - kappa*Lap + nu is symmetric positive definite,
so the constrained system is solved by two unconstrained solves:

    y1 = A^{-1} (c_old/tau_eff + s_r),   y2 = A^{-1} 1,
    mu_e = (c_t - <y1, 1>) / <y2, 1>,    c = y1 + mu_e*y2.

The mass constraint then holds to inner-product round-off regardless of the
iterative-solver tolerance.  A is applied matrix-free; the linear solves use
preconditioned conjugate gradients with a diagonal (Jacobi) preconditioner
that accounts for the reduced stencil at boundary cells.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from . import diagnostics
from .ef import EfParams, SchemeCoefficients, scheme_coefficients
from .eos import EosParams
from .errors import BoundsViolationError, ConvergenceError, InvariantViolation, ParameterError
from .grid import Grid2D, discrete_laplacian, inner

log = logging.getLogger(__name__)

_PRECONDITIONERS = ("diagonal", "none")
_VIOLATION_MODES = ("continue", "abort")


@dataclass(frozen=True)
class SolverConfig:
    """Tuning knobs for the stepper; only ``tau`` has no default.

    tau : time-step size in s.
    cg_rel_tol : stop conjugate gradients once ||r|| <= cg_rel_tol*||rhs||.
    cg_max_iter : iteration cap; ``None`` means 10 * (number of cells).
    preconditioner : "diagonal" (Jacobi) or "none".
    mobility : constant mobility folded into the effective step tau*mobility.
    on_violation : "continue" records failed invariant checks in the step
        report; "abort" raises instead.
    energy_slack_rel : dissipation checks allow an increase of this fraction
        of the reference energy (absorbs finite solver residuals only).
    bounds_slack_rel : window checks allow excursions of this fraction of
        max(|c_m|, |c_M|).
    """

    tau: float
    cg_rel_tol: float = 1e-10
    cg_max_iter: Optional[int] = None
    preconditioner: str = "diagonal"
    mobility: float = 1.0
    on_violation: str = "continue"
    energy_slack_rel: float = 1e-8
    bounds_slack_rel: float = 1e-10

    def __post_init__(self):
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ParameterError(f"tau must be finite and positive, got {self.tau!r}")
        if not (0.0 < self.cg_rel_tol < 1.0):
            raise ParameterError(f"cg_rel_tol must lie in (0, 1), got {self.cg_rel_tol!r}")
        if self.cg_max_iter is not None and self.cg_max_iter < 1:
            raise ParameterError(f"cg_max_iter must be >= 1, got {self.cg_max_iter!r}")
        if self.preconditioner not in _PRECONDITIONERS:
            raise ParameterError(
                f"preconditioner must be one of {_PRECONDITIONERS}, got {self.preconditioner!r}"
            )
        if not (math.isfinite(self.mobility) and self.mobility > 0):
            raise ParameterError(f"mobility must be finite and positive, got {self.mobility!r}")
        if self.on_violation not in _VIOLATION_MODES:
            raise ParameterError(
                f"on_violation must be one of {_VIOLATION_MODES}, got {self.on_violation!r}"
            )
        if not (self.energy_slack_rel >= 0 and self.bounds_slack_rel >= 0):
            raise ParameterError("invariant slacks must be nonnegative")

    def tau_eff(self) -> float:
        return self.tau * self.mobility

    def resolved_max_iter(self, g: Grid2D) -> int:
        return self.cg_max_iter if self.cg_max_iter is not None else 10 * g.ncells


@dataclass(frozen=True)
class StepReport:
    """Per-step record of the solve and the invariant checks."""

    step_index: int
    mu_e: float
    energy: float
    c_min: float
    c_max: float
    mass: float
    cg_iters_1: int
    cg_iters_2: int
    residual_1: float
    residual_2: float
    admissibility_ok: bool
    bounds_ok: bool
    energy_decreased: bool

    @property
    def all_ok(self) -> bool:
        return self.admissibility_ok and self.bounds_ok and self.energy_decreased


def apply_operator(
    c: np.ndarray, coeffs: SchemeCoefficients, cfg: SolverConfig, kappa: float, g: Grid2D
) -> np.ndarray:
    """A c = c/tau_eff - kappa*Lap(c) + nu*c."""
    return c / cfg.tau_eff() - kappa * discrete_laplacian(c, g) + coeffs.nu * c


def operator_diagonal(
    coeffs: SchemeCoefficients, cfg: SolverConfig, kappa: float, g: Grid2D
) -> np.ndarray:
    """Exact diagonal of A, with the reduced Laplacian stencil at boundaries."""
    neighbors = np.full(g.cell_shape(), 4.0)
    neighbors[0, :] -= 1.0
    neighbors[-1, :] -= 1.0
    neighbors[:, 0] -= 1.0
    neighbors[:, -1] -= 1.0
    return 1.0 / cfg.tau_eff() + coeffs.nu + kappa * neighbors / (g.h * g.h)


def solve_spd(
    rhs: np.ndarray,
    coeffs: SchemeCoefficients,
    cfg: SolverConfig,
    kappa: float,
    g: Grid2D,
    x0: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, int, float]:
    """Preconditioned conjugate gradients for A x = rhs.

    Returns (x, iterations, ||r||/||rhs||).  Convergence is declared when the
    unpreconditioned residual norm drops below cg_rel_tol*||rhs||; exceeding
    the iteration cap raises ``ConvergenceError`` with the residual history
    attached.  ``x0`` provides a warm start (already-converged starts return
    immediately with zero iterations).
    """
    rhs = np.asarray(rhs, dtype=float)
    b_norm = math.sqrt(inner(rhs, rhs, g))
    if b_norm == 0.0:
        return np.zeros(g.cell_shape()), 0, 0.0

    if cfg.preconditioner == "diagonal":
        diag = operator_diagonal(coeffs, cfg, kappa, g)
    else:
        diag = np.ones(g.cell_shape())

    if x0 is None:
        x = np.zeros(g.cell_shape())
        r = rhs.copy()
    else:
        x = np.array(x0, dtype=float, copy=True)
        r = rhs - apply_operator(x, coeffs, cfg, kappa, g)

    tol_abs = cfg.cg_rel_tol * b_norm
    max_iter = cfg.resolved_max_iter(g)
    history: List[float] = []

    z = r / diag
    p = z.copy()
    rz = inner(r, z, g)
    for k in range(max_iter + 1):
        res = math.sqrt(inner(r, r, g))
        history.append(res)
        if res <= tol_abs:
            return x, k, res / b_norm
        if k == max_iter:
            break
        Ap = apply_operator(p, coeffs, cfg, kappa, g)
        pAp = inner(p, Ap, g)
        if pAp <= 0.0:
            raise ConvergenceError(
                f"conjugate gradients lost positive definiteness (p'Ap = {pAp})",
                residual_history=history,
            )
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        z = r / diag
        rz_new = inner(r, z, g)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceError(
        f"conjugate gradients did not reach ||r|| <= {tol_abs:.3e} within "
        f"{max_iter} iterations (last residual {history[-1]:.3e})",
        residual_history=history,
    )


def _check_window(c: np.ndarray, ef: EfParams, cfg: SolverConfig) -> Tuple[bool, float]:
    slack = cfg.bounds_slack_rel * max(abs(ef.c_m), abs(ef.c_M))
    ok = bool(np.min(c) >= ef.c_m - slack and np.max(c) <= ef.c_M + slack)
    return ok, slack


def _advance(
    c_old: np.ndarray,
    ef: EfParams,
    p: EosParams,
    cfg: SolverConfig,
    g: Grid2D,
    step_index: int,
    c_t: float,
    interval: "diagnostics.AdmissibleInterval",
    energy_slack: float,
    prev_energy: float,
    warm1: Optional[np.ndarray],
    warm2: Optional[np.ndarray],
):
    """One step; returns (c_new, report, y1, y2) with y1/y2 kept for warm starts."""
    ok_in, slack = _check_window(c_old, ef, cfg)
    if not ok_in and cfg.on_violation == "abort":
        # Re-raise with the offending cell identified.
        scheme_coefficients(c_old, ef, p, bounds_slack=slack)
    coeffs = scheme_coefficients(c_old, ef, p, bounds_slack=np.inf if not ok_in else slack)
    if not ok_in:
        warnings.warn(
            f"step {step_index}: previous state leaves the density window "
            f"[{ef.c_m}, {ef.c_M}]; continuing as configured",
            stacklevel=2,
        )

    tau_eff = cfg.tau_eff()
    ones = np.ones(g.cell_shape())
    rhs1 = c_old / tau_eff + coeffs.s_r
    y1, it1, res1 = solve_spd(rhs1, coeffs, cfg, p.kappa, g, x0=warm1)
    y2, it2, res2 = solve_spd(ones, coeffs, cfg, p.kappa, g, x0=warm2)

    s2 = inner(y2, ones, g)
    if not s2 > 0.0:
        raise ConvergenceError(f"degenerate multiplier denominator <A^-1 1, 1> = {s2}")
    mu_e = (c_t - inner(y1, ones, g)) / s2
    c_new = y1 + mu_e * y2

    mass = inner(c_new, ones, g)
    energy = diagnostics.discrete_energy(c_new, p, p.kappa, g).total
    bounds_ok, _ = _check_window(c_new, ef, cfg)
    admissibility_ok = bool(interval.mu_lower <= mu_e <= interval.mu_upper)
    energy_decreased = bool(energy <= prev_energy + energy_slack)

    report = StepReport(
        step_index=step_index,
        mu_e=float(mu_e),
        energy=float(energy),
        c_min=float(np.min(c_new)),
        c_max=float(np.max(c_new)),
        mass=float(mass),
        cg_iters_1=it1,
        cg_iters_2=it2,
        residual_1=float(res1),
        residual_2=float(res2),
        admissibility_ok=admissibility_ok,
        bounds_ok=bounds_ok,
        energy_decreased=energy_decreased,
    )
    if cfg.on_violation == "abort" and not report.all_ok:
        raise InvariantViolation(
            f"step {step_index}: invariant check failed "
            f"(admissibility={admissibility_ok}, bounds={bounds_ok}, "
            f"dissipation={energy_decreased})"
        )
    return c_new, report, y1, y2


def step(
    c_old: np.ndarray,
    ef: EfParams,
    p: EosParams,
    cfg: SolverConfig,
    g: Grid2D,
    c_t: Optional[float] = None,
    interval: Optional["diagnostics.AdmissibleInterval"] = None,
    prev_energy: Optional[float] = None,
    energy_baseline: Optional[float] = None,
) -> Tuple[np.ndarray, StepReport]:
    """Advance one step of size cfg.tau.

    ``c_t`` (target total moles), the admissible multiplier ``interval``,
    and the previous energy may be passed in to avoid recomputation inside
    loops; each defaults to the value implied by ``c_old``.  The dissipation
    check allows energy_slack_rel * |energy_baseline| of increase, with the
    baseline defaulting to the previous energy.
    """
    c_old = np.asarray(c_old, dtype=float)
    if c_old.shape != g.cell_shape():
        raise ParameterError(f"step: expected cell shape {g.cell_shape()}, got {c_old.shape}")
    ones = np.ones(g.cell_shape())
    if c_t is None:
        c_t = inner(c_old, ones, g)
    if interval is None:
        interval = diagnostics.admissible_interval(ef, p)
    if prev_energy is None:
        prev_energy = diagnostics.discrete_energy(c_old, p, p.kappa, g).total
    if energy_baseline is None:
        energy_baseline = prev_energy
    energy_slack = cfg.energy_slack_rel * abs(energy_baseline)
    c_new, report, _, _ = _advance(
        c_old, ef, p, cfg, g, 0, c_t, interval, energy_slack, prev_energy, None, None
    )
    return c_new, report


def run(
    c0: np.ndarray,
    n_steps: int,
    ef: EfParams,
    p: EosParams,
    cfg: SolverConfig,
    g: Grid2D,
    observer: Optional[Callable[[np.ndarray, StepReport], None]] = None,
) -> Tuple[np.ndarray, List[StepReport]]:
    """March ``n_steps`` steps from ``c0``.

    The target mass, admissible interval and energy slack are fixed once
    from the initial state; each linear solve is warm-started from the
    previous step.  ``observer(c, report)`` is called after every step.
    """
    if n_steps < 0:
        raise ParameterError(f"n_steps must be nonnegative, got {n_steps}")
    c = np.array(c0, dtype=float, copy=True)
    if c.shape != g.cell_shape():
        raise ParameterError(f"run: expected cell shape {g.cell_shape()}, got {c.shape}")
    ones = np.ones(g.cell_shape())
    c_t = inner(c, ones, g)
    interval = diagnostics.admissible_interval(ef, p)
    if interval.empty:
        raise ParameterError(
            f"admissible multiplier interval is empty for this window: "
            f"[{interval.mu_lower}, {interval.mu_upper}]"
        )
    energy0 = diagnostics.discrete_energy(c, p, p.kappa, g).total
    energy_slack = cfg.energy_slack_rel * abs(energy0)

    reports: List[StepReport] = []
    prev_energy = energy0
    warm1: Optional[np.ndarray] = None
    warm2: Optional[np.ndarray] = None
    for n in range(1, n_steps + 1):
        c, report, warm1, warm2 = _advance(
            c, ef, p, cfg, g, n, c_t, interval, energy_slack, prev_energy, warm1, warm2
        )
        prev_energy = report.energy
        reports.append(report)
        if observer is not None:
            observer(c, report)
    return c, reports
