"""Grid solvers for Beckmann-form balanced and unbalanced optimal transport."""

from buot._backend import NAME as BACKEND
from buot.grid import (FluxField, Grid, ScalarField, divergence, gradient, inner_h, make_grid,
                       norm_h2, objective_flux, operator_norm_bound)
from buot.pdhg import (MassMismatchError, Solution, SolverConfig, SolverState, compare_solutions,
                       feasibility_residual, primal_dual_gap, solve)

__version__ = "0.1.0"
