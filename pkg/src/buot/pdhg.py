"""Primal-dual hybrid gradient solver for the discrete Beckmann problems.

Balanced (OT)::

    min_m  sum_x |m(x)|_p h^d          s.t.  div^h m = rho0 - rho1

Unbalanced (UOT), source weight ``alpha``::

    min_{m, eta}  sum_x (|m(x)|_p + alpha |eta(x)|) h^d   s.t.  div^h m - eta = rho0 - rho1

``alpha = inf`` selects the balanced problem, which runs on its own code path
without source variables so that the two iterations can be compared directly.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from buot import _backend
from buot.grid import (FluxField, Grid, ScalarField, _check_p, _same_grid, divergence, inner_h,
                       norm_h2, objective_flux, objective_source, operator_norm_bound)

log = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "SolverState",
    "Solution",
    "MassMismatchError",
    "initial_state",
    "pdhg_step_ot",
    "pdhg_step_uot",
    "primal_dual_gap",
    "solve",
    "feasibility_residual",
    "compare_solutions",
    "MASS_TOL",
]

MASS_TOL = 1e-9
STEP_SAFETY = 0.99
_CHUNK = 4096


class MassMismatchError(ValueError):
    """Balanced transport requested between densities of different mass."""


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters.

    ``mu`` / ``tau`` left as ``None`` are filled by :meth:`resolve` with
    ``sqrt(0.99 / bound)``, ``bound`` being the analytic operator-norm bound
    of the grid (plus one for the source block in the unbalanced case).
    """

    alpha: float = math.inf
    p: int = 2
    mu: Optional[float] = None
    tau: Optional[float] = None
    tol: float = 1e-6
    max_iters: int = 300_000
    record_history: bool = False

    def __post_init__(self):
        _check_p(self.p)
        if not (self.alpha > 0):
            raise ValueError(f"alpha must be positive (or inf), got {self.alpha!r}")
        for name in ("mu", "tau"):
            v = getattr(self, name)
            if v is not None and not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters!r}")

    @property
    def balanced(self) -> bool:
        return math.isinf(self.alpha)

    def step_bound(self, grid: Grid) -> float:
        return operator_norm_bound(grid, with_source=not self.balanced)

    def resolve(self, grid: Grid) -> "SolverConfig":
        """Fill unset step sizes for ``grid`` and check ``mu * tau * bound < 1``."""
        bound = self.step_bound(grid)
        default = math.sqrt(STEP_SAFETY / bound)
        mu = self.mu if self.mu is not None else default
        tau = self.tau if self.tau is not None else default
        if not mu * tau * bound < 1.0:
            raise ValueError(
                f"step sizes violate mu*tau*||K||^2 < 1: mu={mu:g}, tau={tau:g}, bound={bound:g}")
        return dataclasses.replace(self, mu=mu, tau=tau)


@dataclass
class SolverState:
    m: FluxField
    eta: ScalarField
    phi: ScalarField
    m_bar: FluxField
    eta_bar: ScalarField
    k: int = 0

    @property
    def grid(self) -> Grid:
        return self.phi.grid

    def copy(self) -> "SolverState":
        return SolverState(self.m.copy(), self.eta.copy(), self.phi.copy(),
                           self.m_bar.copy(), self.eta_bar.copy(), self.k)


@dataclass
class Solution:
    m: FluxField
    eta: ScalarField
    phi: ScalarField
    objective: float
    gap: float
    residual: float
    iters: int
    converged: bool
    config: SolverConfig
    history: Optional[list] = field(default=None, repr=False)

    @property
    def grid(self) -> Grid:
        return self.phi.grid

    def summary(self) -> dict:
        return {
            "alpha": self.config.alpha if not self.config.balanced else "inf",
            "p": self.config.p,
            "mu": self.config.mu,
            "tau": self.config.tau,
            "tol": self.config.tol,
            "objective": self.objective,
            "gap": self.gap,
            "residual": self.residual,
            "iters": self.iters,
            "converged": self.converged,
            "eta_norm": norm_h2(self.eta),
        }


def initial_state(grid: Grid) -> SolverState:
    """All-zero primal, source and dual variables."""
    return SolverState(grid.zero_flux(), grid.zeros(), grid.zeros(),
                       grid.zero_flux(), grid.zeros(), 0)


def _advance(state: SolverState, rho: ScalarField, cfg: SolverConfig, n_steps: int,
             tol: float, gaps: np.ndarray) -> int:
    """Run up to ``n_steps`` iterations in place; returns steps taken."""
    g = state.grid
    balanced = cfg.balanced
    done = _backend.pdhg_run(
        state.m.values, None if balanced else state.eta.values, state.phi.values,
        state.m_bar.values, None if balanced else state.eta_bar.values,
        rho.values, g.shape, g.spacings, float(cfg.mu), float(cfg.tau),
        float(cfg.alpha), int(cfg.p), int(n_steps), float(tol), gaps)
    state.k += done
    return done


def _step(state, rho, cfg):
    _same_grid(state.phi, rho)
    cfg = cfg.resolve(state.grid)
    nxt = state.copy()
    _advance(nxt, rho, cfg, 1, -math.inf, np.empty(1))
    return nxt


def pdhg_step_ot(state: SolverState, rho: ScalarField, cfg: SolverConfig) -> SolverState:
    """One balanced iteration: flux prox, extrapolation, dual ascent.

    ``cfg.alpha`` is ignored; the step never touches the source variables.
    """
    return _step(state, rho, dataclasses.replace(cfg, alpha=math.inf))


def pdhg_step_uot(state: SolverState, rho: ScalarField, cfg: SolverConfig) -> SolverState:
    """One unbalanced iteration; adds the source prox with threshold ``alpha * mu``."""
    if cfg.balanced:
        raise ValueError("pdhg_step_uot needs a finite alpha; use pdhg_step_ot")
    return _step(state, rho, cfg)


def primal_dual_gap(prev: SolverState, nxt: SolverState, cfg: SolverConfig) -> float:
    """Stopping quantity for the step ``prev -> nxt``.

    ``(|dm|^2 + |deta|^2)/mu + |dphi|^2/tau - 2 <dphi, div(dm) - deta>``, all
    in the ``h^d``-weighted metric.  Nonnegative whenever ``mu*tau*||K||^2 < 1``.
    """
    cfg = cfg.resolve(prev.grid)
    dm = FluxField(prev.grid, nxt.m.values - prev.m.values)
    dphi = ScalarField(prev.grid, nxt.phi.values - prev.phi.values)
    coupling = divergence(dm)
    r = inner_h(dm, dm) / cfg.mu + inner_h(dphi, dphi) / cfg.tau
    if not cfg.balanced:
        deta = ScalarField(prev.grid, nxt.eta.values - prev.eta.values)
        r += inner_h(deta, deta) / cfg.mu
        coupling = ScalarField(prev.grid, coupling.values - deta.values)
    return r - 2.0 * inner_h(dphi, coupling)


def _validate_inputs(rho0: ScalarField, rho1: ScalarField, cfg: SolverConfig) -> ScalarField:
    _same_grid(rho0, rho1)
    if not (np.all(np.isfinite(rho0.values)) and np.all(np.isfinite(rho1.values))):
        raise ValueError("densities contain non-finite values")
    rho = ScalarField(rho0.grid, rho0.values - rho1.values)
    if cfg.balanced:
        gap = abs(rho0.total() - rho1.total())
        if gap > MASS_TOL:
            raise MassMismatchError(
                f"balanced transport needs equal masses: |mass0 - mass1| = {gap:.3e} > {MASS_TOL:g}")
    return rho


def _objective(state: SolverState, cfg: SolverConfig) -> float:
    obj = objective_flux(state.m, cfg.p)
    if not cfg.balanced:
        obj += cfg.alpha * objective_source(state.eta)
    return obj


def _residual(m, eta, rho, balanced):
    r = divergence(m).values - rho.values
    if not balanced:
        r = r - eta.values
    return norm_h2(ScalarField(rho.grid, r))


def solve(rho0: ScalarField, rho1: ScalarField, cfg: SolverConfig = SolverConfig(),
          state: Optional[SolverState] = None) -> Solution:
    """Run PDHG from the zero state until the gap is ``<= cfg.tol`` or ``cfg.max_iters``.

    Raises :class:`MassMismatchError` in balanced mode when the masses differ by
    more than ``MASS_TOL`` and ``ValueError`` for non-finite inputs or invalid
    step sizes.  ``state`` warm-starts the iteration (it is not modified).
    """
    rho = _validate_inputs(rho0, rho1, cfg)
    grid = rho.grid
    cfg = cfg.resolve(grid)
    state = initial_state(grid) if state is None else state.copy()
    history = [] if cfg.record_history else None

    chunk = 1 if cfg.record_history else _CHUNK
    gaps = np.empty(chunk)
    gap = math.inf
    iters = 0
    converged = False
    while iters < cfg.max_iters:
        n = min(chunk, cfg.max_iters - iters)
        done = _advance(state, rho, cfg, n, cfg.tol, gaps)
        iters += done
        gap = float(gaps[done - 1])
        if not math.isfinite(gap):
            raise FloatingPointError(f"PDHG diverged at iteration {iters} (gap={gap})")
        if history is not None:
            history.append((gap, _objective(state, cfg),
                            _residual(state.m, state.eta, rho, cfg.balanced)))
        if gap <= cfg.tol:
            converged = True
            break
    if not converged:
        log.info("PDHG stopped at max_iters=%d with gap %.3e > tol %.1e",
                 cfg.max_iters, gap, cfg.tol)

    return Solution(
        m=state.m, eta=state.eta, phi=state.phi,
        objective=_objective(state, cfg), gap=gap,
        residual=_residual(state.m, state.eta, rho, cfg.balanced),
        iters=iters, converged=converged, config=cfg, history=history)


def feasibility_residual(sol: Solution, rho: ScalarField) -> float:
    """``||div^h m - eta - rho||_{h,2}`` for ``rho = rho0 - rho1``."""
    _same_grid(sol.phi, rho)
    return _residual(sol.m, sol.eta, rho, balanced=False)


def compare_solutions(uot: Solution, ot: Solution) -> tuple:
    """``(||m_uot - m_ot||_{h,2}, ||eta_uot||_{h,2})``."""
    _same_grid(uot.phi, ot.phi)
    dm = FluxField(uot.grid, uot.m.values - ot.m.values)
    return norm_h2(dm), norm_h2(uot.eta)
