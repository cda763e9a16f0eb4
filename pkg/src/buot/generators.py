"""Built-in density pairs, so experiments run without external images.

Every generator returns ``(rho0, rho1)`` on the given grid, each normalized to
unit mass (``sum(rho) * h^d == 1``) unless noted.
"""

import numpy as np

from buot.grid import Grid, ScalarField, make_grid

__all__ = ["GENERATORS", "generate", "diracs1d", "gaussians2d", "disks2d",
           "random_pair", "normalize"]


def normalize(values: np.ndarray, grid: Grid, mass: float = 1.0) -> np.ndarray:
    total = values.sum() * grid.cell_volume
    if not total > 0:
        raise ValueError("density has no positive mass")
    return values * (mass / total)


def diracs1d(grid: Grid = None):
    """Unit point masses at ``x = 0`` and ``x = L`` on a 1-D grid (value ``1/h``)."""
    grid = grid or make_grid(1, 1.0, 16)
    if grid.d != 1:
        raise ValueError("diracs1d needs a 1-D grid")
    r0 = np.zeros(grid.n_points)
    r1 = np.zeros(grid.n_points)
    r0[0] = 1.0 / grid.h
    r1[-1] = 1.0 / grid.h
    return ScalarField(grid, r0), ScalarField(grid, r1)


def _gaussian(grid, center, sigma):
    r2 = sum((grid.coordinates(i) - c) ** 2 for i, c in enumerate(center))
    return np.exp(-r2 / (2.0 * sigma ** 2))


def gaussians2d(grid: Grid = None, centers=((0.3, 0.3), (0.7, 0.6)), sigmas=(0.08, 0.1)):
    """Two isotropic Gaussian bumps, scaled to the box."""
    grid = grid or make_grid(2, 1.0, 32)
    if grid.d != 2:
        raise ValueError("gaussians2d needs a 2-D grid")
    scale = np.array(grid.lengths)
    rho = []
    for c, s in zip(centers, sigmas):
        v = _gaussian(grid, np.asarray(c) * scale, s * scale.min())
        rho.append(ScalarField(grid, normalize(v, grid)))
    return tuple(rho)


def _disk_coverage(grid, center, radius, supersample=8):
    """Fraction of each point's dual cell ``x +- h/2`` (clipped to the box) inside the disk."""
    hx, hy = grid.spacings
    offs = (np.arange(supersample) + 0.5) / supersample - 0.5
    x = grid.coordinates(0)
    y = grid.coordinates(1)
    inside = np.zeros(grid.n_points)
    count = np.zeros(grid.n_points)
    for ox in offs:
        for oy in offs:
            sx = x + ox * hx
            sy = y + oy * hy
            valid = (sx >= 0) & (sx <= grid.lengths[0]) & (sy >= 0) & (sy <= grid.lengths[1])
            hit = (sx - center[0]) ** 2 + (sy - center[1]) ** 2 <= radius ** 2
            inside += hit & valid
            count += valid
    return inside / count


def disks2d(grid: Grid = None, centers=((0.3, 0.35), (0.68, 0.62)), radii=(0.16, 0.2)):
    """Two area-sampled disks of unit mass: a silhouette pair that rasterizes
    consistently across resolutions."""
    grid = grid or make_grid(2, 1.0, 32)
    if grid.d != 2:
        raise ValueError("disks2d needs a 2-D grid")
    scale = np.array(grid.lengths)
    rho = []
    for c, r in zip(centers, radii):
        v = _disk_coverage(grid, np.asarray(c) * scale, r * scale.min())
        rho.append(ScalarField(grid, normalize(v, grid)))
    return tuple(rho)


def random_pair(grid: Grid, rng: np.random.Generator, equal_mass: bool = True,
                sparsity: float = 0.0):
    """Random nonnegative densities; unit mass each when ``equal_mass``,
    otherwise masses drawn from ``[0.5, 1.5]``."""
    out = []
    for _ in range(2):
        v = rng.random(grid.n_points)
        if sparsity > 0:
            v[rng.random(grid.n_points) < sparsity] = 0.0
        if not v.any():
            v[rng.integers(grid.n_points)] = 1.0
        mass = 1.0 if equal_mass else rng.uniform(0.5, 1.5)
        out.append(ScalarField(grid, normalize(v, grid, mass)))
    return tuple(out)


def smooth_random_pair(grid: Grid, rng: np.random.Generator, n_bumps: int = 3):
    """Equal-mass sums of random Gaussian bumps plus a small floor."""
    out = []
    scale = np.array(grid.lengths)
    for _ in range(2):
        v = np.full(grid.n_points, 0.05)
        for _ in range(n_bumps):
            c = rng.uniform(0.15, 0.85, grid.d) * scale
            s = rng.uniform(0.06, 0.15) * scale.min()
            v += rng.uniform(0.5, 1.5) * _gaussian(grid, c, s)
        out.append(ScalarField(grid, normalize(v, grid)))
    return tuple(out)


GENERATORS = {
    "diracs1d": (1, diracs1d),
    "gaussians2d": (2, gaussians2d),
    "disks2d": (2, disks2d),
}


def generate(name: str, N: int, L: float = 1.0):
    """Build a named generator's pair on a fresh ``[0, L]^d`` grid with ``N`` cells."""
    try:
        d, fn = GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}") from None
    return fn(make_grid(d, L, N))
