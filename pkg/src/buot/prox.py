"""Closed-form proximal maps for the flux and source costs.

Both the cost ``f`` and the quadratic penalty of the prox carry the same
``h^d`` weight, so it cancels: thresholds are the plain step sizes (``mu`` for
the flux, ``alpha * mu`` for the source).
"""

import numpy as np

from buot.grid import FluxField, ScalarField, _check_p

__all__ = ["shrink_scalar", "shrink_vector_l2", "prox_flux", "prox_source"]


def _check_lambda(lam):
    if not lam >= 0:
        raise ValueError(f"threshold must be nonnegative, got {lam!r}")


def shrink_scalar(v, lam):
    """Soft thresholding ``sign(v) * max(|v| - lam, 0)``, elementwise.

    The dead zone ``|v| <= lam`` maps to an exact ``+0.0``.  Scalars in,
    scalar out; arrays in, array out.
    """
    _check_lambda(lam)
    arr = np.asarray(v, dtype=np.float64)
    out = np.where(arr > lam, arr - lam, np.where(arr < -lam, arr + lam, 0.0))
    return float(out) if out.ndim == 0 else out


def shrink_vector_l2(v, lam):
    """Radial shrinkage ``v * max(1 - lam/|v|_2, 0)``.

    ``v`` is a single vector, or an array whose *first* axis holds the vector
    components (the flux layout ``(d, n_points)``).
    """
    _check_lambda(lam)
    arr = np.asarray(v, dtype=np.float64)
    norm = np.sqrt((arr * arr).sum(axis=0))
    scale = np.where(norm > lam, 1.0 - lam / np.where(norm > 0, norm, 1.0), 0.0)
    return arr * scale


def prox_flux(m: FluxField, lam: float, p: int = 2) -> FluxField:
    """Prox of ``lam * sum_x |m(x)|_p``: componentwise (p=1) or radial (p=2) shrinkage."""
    _check_p(p)
    if p == 1:
        out = shrink_scalar(m.values, lam)
    else:
        out = shrink_vector_l2(m.values, lam)
    return FluxField(m.grid, out)


def prox_source(eta: ScalarField, lam: float) -> ScalarField:
    return ScalarField(eta.grid, shrink_scalar(eta.values, lam))
