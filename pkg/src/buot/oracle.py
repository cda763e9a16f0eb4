"""Exact ground truth for small instances.

With ``p = 1`` the discrete problems are linear programs after splitting
``m = m+ - m-`` and ``eta = eta+ - eta-``.  They are solved here by a dense
two-phase revised simplex with Bland's rule, which is slow but deterministic
and cycle-free; instances are capped at ``MAX_POINTS`` grid points.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from buot.generators import random_pair
from buot.grid import FluxField, Grid, ScalarField, _same_grid, make_grid, norm_h2
from buot.pdhg import MASS_TOL, Solution, SolverConfig, feasibility_residual, solve

log = logging.getLogger(__name__)

__all__ = ["LpInstance", "LpSolution", "InfeasibleError", "build_lp", "solve_lp",
           "OracleReport", "oracle_check", "oracle_suite", "MAX_POINTS", "ORACLE_RTOL"]

MAX_POINTS = 4096
ORACLE_RTOL = 1e-5
ORACLE_RESIDUAL = 1e-4

FLUX, SOURCE = 0, 1


class InfeasibleError(ValueError):
    pass


@dataclass
class LpInstance:
    """``min c.x  s.t.  A x = b, x >= 0``, with a map from columns back to the grid.

    ``c`` holds the true costs (``h^d`` per flux column, ``alpha h^d`` per
    source column).  Column ``j`` is ``sign[j]`` times the unit in variable
    ``kind[j]`` (flux / source), component ``axis[j]``, at grid point ``point[j]``.
    """

    grid: Grid
    alpha: float
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    kind: np.ndarray
    axis: np.ndarray
    point: np.ndarray
    sign: np.ndarray

    @property
    def shape(self):
        return self.A.shape


@dataclass
class LpSolution:
    objective: float
    m: FluxField
    eta: ScalarField
    basis: np.ndarray
    pivots: int


def build_lp(rho0: ScalarField, rho1: ScalarField, alpha: float = math.inf) -> LpInstance:
    """Split-variable LP of the ``p = 1`` problem; ``alpha = inf`` drops the source columns."""
    _same_grid(rho0, rho1)
    g = rho0.grid
    if g.n_points > MAX_POINTS:
        raise ValueError(f"LP oracle limited to {MAX_POINTS} grid points, got {g.n_points}")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    n = g.n_points
    w = g.cell_volume
    cols = []
    for i, (stride, size, h) in enumerate(zip(g.strides, g.shape, g.spacings)):
        idx = np.arange(n)
        interior = (idx // stride) % size < size - 1
        for x in idx[interior]:
            # m_i(x) enters div at x with +1/h and at x + e_i with -1/h
            for s in (1.0, -1.0):
                cols.append((FLUX, i, x, s, {x: s / h, x + stride: -s / h}, w))
    balanced = math.isinf(alpha)
    if not balanced:
        for x in range(n):
            for s in (1.0, -1.0):
                cols.append((SOURCE, -1, x, s, {x: -s}, alpha * w))

    A = np.zeros((n, len(cols)))
    for j, (_, _, _, _, entries, _) in enumerate(cols):
        for row, v in entries.items():
            A[row, j] = v
    return LpInstance(
        grid=g, alpha=alpha, A=A,
        b=rho0.values - rho1.values,
        c=np.array([col[5] for col in cols]),
        kind=np.array([col[0] for col in cols], dtype=np.int8),
        axis=np.array([col[1] for col in cols], dtype=np.int64),
        point=np.array([col[2] for col in cols], dtype=np.int64),
        sign=np.array([col[3] for col in cols]),
    )


class _Simplex:
    """Revised simplex over a fixed dense matrix, Bland's rule throughout."""

    def __init__(self, A, b, tol=1e-9):
        self.A = A
        self.b = b
        self.tol = tol
        self.pivots = 0

    def run(self, c, basis, allowed):
        A, b, tol = self.A, self.b, self.tol
        m, ncol = A.shape
        allowed = np.asarray(allowed, dtype=bool)
        max_pivots = 50 * (m + ncol) + 1000
        for _ in range(max_pivots):
            B = A[:, basis]
            xb = np.linalg.solve(B, b)
            y = np.linalg.solve(B.T, c[basis])
            reduced = c - A.T @ y
            in_basis = np.zeros(ncol, dtype=bool)
            in_basis[basis] = True
            cand = np.flatnonzero(allowed & ~in_basis & (reduced < -tol))
            if cand.size == 0:
                return basis, xb
            enter = cand[0]
            direction = np.linalg.solve(B, A[:, enter])
            rows = np.flatnonzero(direction > tol)
            if rows.size == 0:
                raise RuntimeError("LP unbounded; costs are nonnegative so this is a bug")
            ratios = xb[rows] / direction[rows]
            best = ratios.min()
            ties = rows[ratios <= best + tol * max(1.0, abs(best))]
            leave = ties[np.argmin(basis[ties])]
            basis = basis.copy()
            basis[leave] = enter
            self.pivots += 1
        raise RuntimeError("simplex pivot limit reached")


def solve_lp(lp: LpInstance) -> LpSolution:
    """Optimal basic solution of ``lp``.

    Raises :class:`InfeasibleError` (balanced instance with unequal masses).
    """
    g = lp.grid
    A = lp.A.copy()
    b = lp.b.copy()
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    m, ncol = A.shape
    # costs scaled to O(1); objective is rescaled at the end
    c = lp.c / g.cell_volume

    # phase 1: artificials on every row
    A1 = np.hstack([A, np.eye(m)])
    c1 = np.concatenate([np.zeros(ncol), np.ones(m)])
    simplex = _Simplex(A1, b)
    basis = np.arange(ncol, ncol + m)
    basis, xb = simplex.run(c1, basis, np.ones(ncol + m, dtype=bool))
    infeas = float(c1[basis] @ xb)
    if infeas > 1e-9 * max(1.0, np.abs(b).sum()):
        raise InfeasibleError(f"LP infeasible (phase-1 objective {infeas:.3e}); "
                              "balanced transport needs equal masses")

    # Drive zero-level artificials out of the basis.  One whose tableau row is
    # zero over the real columns marks its own constraint row as redundant.
    drop_pos = []
    for r in range(m):
        if basis[r] < ncol:
            continue
        unit = np.zeros(m)
        unit[r] = 1.0
        tableau_row = np.linalg.solve(A1[:, basis].T, unit) @ A
        in_basis = set(basis.tolist())
        swap = [j for j in np.flatnonzero(np.abs(tableau_row) > 1e-9) if j not in in_basis]
        if swap:
            basis[r] = swap[0]
        else:
            drop_pos.append(r)
    drop_rows = [basis[r] - ncol for r in drop_pos]
    A2 = np.delete(A, drop_rows, axis=0)
    b2 = np.delete(b, drop_rows)
    basis2 = np.delete(basis, drop_pos)
    if np.any(basis2 >= ncol):
        raise RuntimeError("artificial variable left in basis after phase 1")

    simplex2 = _Simplex(A2, b2)
    simplex2.pivots = simplex.pivots
    basis2, xb = simplex2.run(c, basis2, np.ones(ncol, dtype=bool))
    x = np.zeros(ncol)
    x[basis2] = np.maximum(xb, 0.0)

    mvals = np.zeros((g.d, g.n_points))
    eta = np.zeros(g.n_points)
    flux = lp.kind == FLUX
    np.add.at(mvals, (lp.axis[flux], lp.point[flux]), lp.sign[flux] * x[flux])
    src = ~flux
    np.add.at(eta, lp.point[src], lp.sign[src] * x[src])
    return LpSolution(objective=float(lp.c @ x), m=FluxField(g, mvals), eta=ScalarField(g, eta),
                      basis=basis2, pivots=simplex2.pivots)


@dataclass
class OracleReport:
    d: int
    N: int
    alpha: float
    lp_objective: float
    pdhg_objective: float
    abs_error: float
    residual: float
    iters: int
    passed: bool
    solution: Optional[Solution] = field(default=None, repr=False, compare=False)
    mass_change: float = 0.0  # (M1 - M0), the total source mass a feasible eta must carry

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        a = "inf" if math.isinf(self.alpha) else f"{self.alpha:g}"
        return (f"{status} d={self.d} N={self.N} alpha={a} lp={self.lp_objective:.9f} "
                f"pdhg={self.pdhg_objective:.9f} err={self.abs_error:.2e} "
                f"res={self.residual:.2e} iters={self.iters}")


def oracle_check(rho0: ScalarField, rho1: ScalarField, alpha: float = math.inf,
                 cfg: Optional[SolverConfig] = None) -> OracleReport:
    """Solve with PDHG (``p = 1``) and the LP; pass when the objectives agree to
    ``1e-5 (1 + |lp|)`` and the PDHG feasibility residual is ``<= 1e-4``."""
    if cfg is None:
        cfg = SolverConfig(alpha=alpha, p=1, tol=1e-14, max_iters=3_000_000)
    elif cfg.alpha != alpha or cfg.p != 1:
        cfg = SolverConfig(alpha=alpha, p=1, mu=cfg.mu, tau=cfg.tau, tol=cfg.tol,
                           max_iters=cfg.max_iters)
    lp_sol = solve_lp(build_lp(rho0, rho1, alpha))
    sol = solve(rho0, rho1, cfg)
    rho = ScalarField(rho0.grid, rho0.values - rho1.values)
    residual = feasibility_residual(sol, rho)
    err = abs(sol.objective - lp_sol.objective)
    ok = err <= ORACLE_RTOL * (1.0 + abs(lp_sol.objective)) and residual <= ORACLE_RESIDUAL
    g = rho0.grid
    return OracleReport(g.d, g.sizes[0], alpha, lp_sol.objective, sol.objective, err,
                        residual, sol.iters, bool(ok), sol,
                        (rho1.values.sum() - rho0.values.sum()) * g.cell_volume)


def oracle_suite(seed: int = 0, cases: int = 30, max_n: int = 16, dims=(1, 2),
                 alphas=(0.2, 0.5, 2.0, math.inf), max_n_2d: int = 5,
                 mismatched: int = 0) -> list:
    """Random PDHG-vs-LP comparisons; deterministic for a given seed.

    Cases cycle through ``dims`` and ``alphas``; 2-D grids use at most
    ``max_n_2d`` cells per axis.  ``mismatched`` extra unbalanced cases use
    densities of different mass.
    """
    rng = np.random.default_rng(seed)
    reports = []
    for k in range(cases + mismatched):
        d = dims[k % len(dims)]
        cap = max_n if d == 1 else min(max_n, max_n_2d)
        N = int(rng.integers(1, cap + 1))
        grid = make_grid(d, 1.0, N)
        if k < cases:
            alpha = alphas[(k // len(dims)) % len(alphas)]
            r0, r1 = random_pair(grid, rng, equal_mass=True, sparsity=0.5)
        else:
            finite = [a for a in alphas if math.isfinite(a)] or [0.5]
            alpha = finite[k % len(finite)]
            r0, r1 = random_pair(grid, rng, equal_mass=False, sparsity=0.5)
        rep = oracle_check(r0, r1, alpha)
        log.info(rep.line())
        reports.append(rep)
    return reports


def masses_match(rho0: ScalarField, rho1: ScalarField) -> bool:
    return abs(rho0.total() - rho1.total()) <= MASS_TOL
