"""Image-side tools: densities from silhouettes and UOT color transfer.

Color transfer works channel by channel in CIE-Lab.  Lightness is left alone.
For each of the ``a`` and ``b`` channels, a 1-D unbalanced transport problem
is solved between the two channel histograms.  Each pixel value is then
pushed along the velocity ``m*(x) / (t rho1(x) + (1-t) rho0(x) + eps)`` by
forward Euler.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from buot.grid import Grid, ScalarField, make_grid
from buot.pdhg import Solution, SolverConfig, solve

log = logging.getLogger(__name__)

try:
    from PIL import Image as _PILImage
    HAVE_PNG = True
except ImportError:  # optional dependency
    _PILImage = None
    HAVE_PNG = False

__all__ = [
    "RasterImage", "read_netpbm", "write_netpbm", "read_image", "HAVE_PNG",
    "load_density", "LabPlanes", "rgb_to_lab", "lab_to_rgb", "to_uint8",
    "Histogram1D", "channel_histogram", "histogram_w1",
    "TransportMap1D", "solve_transport_map", "transport_values",
    "ColorTransferResult", "run_color_transfer", "color_transfer", "synthetic_image",
    "DEFAULT_BINS", "DEFAULT_EPSILON", "DEFAULT_STEPS",
]

DEFAULT_BINS = 32
DEFAULT_EPSILON = 1e-6
DEFAULT_STEPS = 64


# --------------------------------------------------------------------------- raster I/O

@dataclass
class RasterImage:
    """8-bit raster, row-major; ``samples`` is ``(height, width)`` or ``(height, width, 3)``."""

    width: int
    height: int
    channels: int
    samples: np.ndarray
    maxval: int = 255

    def __post_init__(self):
        s = np.asarray(self.samples)
        expected = (self.height, self.width) if self.channels == 1 else (self.height, self.width, 3)
        if self.channels not in (1, 3):
            raise ValueError(f"channels must be 1 or 3, got {self.channels}")
        if s.size != self.width * self.height * self.channels:
            raise ValueError(f"sample count {s.size} != {self.width}x{self.height}x{self.channels}")
        if not 1 <= self.maxval <= 255:
            raise ValueError(f"only 8-bit rasters are supported (maxval {self.maxval})")
        self.samples = s.reshape(expected).astype(np.uint8)

    @classmethod
    def from_array(cls, arr) -> "RasterImage":
        arr = np.asarray(arr)
        if arr.ndim == 2:
            return cls(arr.shape[1], arr.shape[0], 1, arr)
        if arr.ndim == 3 and arr.shape[2] == 3:
            return cls(arr.shape[1], arr.shape[0], 3, arr)
        raise ValueError(f"cannot build an image from an array of shape {arr.shape}")


def _header_tokens(data: bytes, count: int):
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise ValueError("truncated Netpbm header")
        if data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates maxval from the raster
    return tokens, pos + 1


def read_netpbm(path) -> RasterImage:
    """Read binary PGM (P5) or PPM (P6) with ``maxval <= 255``."""
    data = Path(path).read_bytes()
    tokens, offset = _header_tokens(data, 4)
    magic = tokens[0]
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"{path}: not a binary PGM/PPM file (magic {magic!r})")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval > 255:
        raise ValueError(f"{path}: 16-bit Netpbm is not supported (maxval {maxval})")
    channels = 1 if magic == b"P5" else 3
    n = width * height * channels
    raster = np.frombuffer(data, dtype=np.uint8, count=n, offset=offset) \
        if len(data) - offset >= n else None
    if raster is None:
        raise ValueError(f"{path}: raster truncated ({len(data) - offset} of {n} bytes)")
    return RasterImage(width, height, channels, raster.copy(), maxval)


def write_netpbm(path, img: RasterImage) -> None:
    magic = b"P5" if img.channels == 1 else b"P6"
    header = b"%s\n%d %d\n%d\n" % (magic, img.width, img.height, img.maxval)
    Path(path).write_bytes(header + np.ascontiguousarray(img.samples, dtype=np.uint8).tobytes())


def read_image(path) -> RasterImage:
    """Netpbm natively; PNG (and anything else Pillow reads) when Pillow is installed."""
    head = Path(path).read_bytes()[:2]
    if head in (b"P5", b"P6"):
        return read_netpbm(path)
    if not HAVE_PNG:
        raise ValueError(f"{path}: only PGM/PPM are readable without Pillow")
    with _PILImage.open(path) as im:
        im = im.convert("L" if im.mode in ("1", "L", "I", "I;16", "F") else "RGB")
        return RasterImage.from_array(np.asarray(im))


# --------------------------------------------------------------------------- densities

def load_density(img: RasterImage, grid: Grid) -> ScalarField:
    """Intensity-proportional density of unit mass (``sum(rho) h^2 = 1``).

    Image rows map to grid axis 0, columns to axis 1.  No resampling: the
    image must be ``(N+1) x (N+1)`` for the grid.
    """
    if img.channels != 1:
        raise ValueError("load_density needs a grayscale image")
    if grid.d != 2 or (img.height, img.width) != grid.shape:
        raise ValueError(f"image is {img.height}x{img.width} but the grid has "
                         f"{grid.shape} points; resize the image first")
    v = img.samples.astype(np.float64).ravel()
    total = v.sum()
    if total <= 0:
        raise ValueError("image is entirely black; no mass to transport")
    return ScalarField(grid, v / (total * grid.cell_volume))


# --------------------------------------------------------------------------- color spaces

@dataclass
class LabPlanes:
    """Lab planes with ``a`` and ``b`` affinely mapped to ``[0, 1]``.

    ``a_raw = a * a_scale + a_offset`` (same for ``b``).
    """

    l: np.ndarray
    a: np.ndarray
    b: np.ndarray
    a_offset: float
    a_scale: float
    b_offset: float
    b_scale: float

    @property
    def a_raw(self) -> np.ndarray:
        return self.a * self.a_scale + self.a_offset

    @property
    def b_raw(self) -> np.ndarray:
        return self.b * self.b_scale + self.b_offset


def _affine(values, bounds):
    lo, hi = bounds if bounds is not None else (float(values.min()), float(values.max()))
    span = hi - lo
    if span <= 1e-12:
        span = 1.0
    return (values - lo) / span, lo, span


def raw_lab(img: RasterImage) -> np.ndarray:
    """sRGB -> CIE-Lab (D65), shape ``(height, width, 3)``."""
    from skimage.color import rgb2lab
    if img.channels != 3:
        raise ValueError("Lab conversion needs a 3-channel image")
    return rgb2lab(img.samples.astype(np.float64) / 255.0, illuminant="D65")


def rgb_to_lab(img: RasterImage, a_bounds=None, b_bounds=None) -> LabPlanes:
    """Convert to Lab and map ``a``, ``b`` into ``[0, 1]``.

    Bounds default to the image's own min/max; pass explicit ``(lo, hi)`` to
    share one normalization between images.
    """
    lab = raw_lab(img)
    a, a_off, a_scale = _affine(lab[..., 1], a_bounds)
    b, b_off, b_scale = _affine(lab[..., 2], b_bounds)
    return LabPlanes(lab[..., 0], a, b, a_off, a_scale, b_off, b_scale)


def to_uint8(x) -> np.ndarray:
    """Round and clamp to ``0..255``."""
    return np.clip(np.rint(np.asarray(x, dtype=np.float64)), 0, 255).astype(np.uint8)


def lab_to_rgb(planes: LabPlanes) -> RasterImage:
    from skimage.color import lab2rgb
    lab = np.stack([planes.l, planes.a_raw, planes.b_raw], axis=-1)
    with warnings.catch_warnings():
        # out-of-gamut Lab values are clipped, which is what we want
        warnings.simplefilter("ignore", UserWarning)
        rgb = lab2rgb(lab, illuminant="D65")
    return RasterImage.from_array(to_uint8(rgb * 255.0))


# --------------------------------------------------------------------------- histograms

@dataclass
class Histogram1D:
    """Unit-mass density on the ``B``-point grid ``{0, 1/(B-1), ..., 1}``."""

    bins: np.ndarray
    clamped: int = 0

    @property
    def B(self) -> int:
        return self.bins.size

    @property
    def grid(self) -> Grid:
        return make_grid(1, 1.0, self.B - 1)

    def density(self) -> ScalarField:
        return ScalarField(self.grid, self.bins)


def channel_histogram(values, B: int = DEFAULT_BINS) -> Histogram1D:
    """Hard-binned histogram of ``values`` in ``[0, 1]``, normalized so ``sum(bins) h = 1``.

    Bin ``i`` collects the values nearest to the grid point ``i/(B-1)``, so
    all bins have width ``h = 1/(B-1)`` (the two end bins lie half outside
    ``[0, 1]``).  Out-of-range values are clamped and counted in ``clamped``.
    """
    if int(B) != B or B < 2:
        raise ValueError(f"need at least two bins, got {B!r}")
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("cannot histogram an empty set of values")
    # affine normalization can overshoot [0, 1] by rounding; that is not clamping
    outside = int(np.count_nonzero((v < -1e-9) | (v > 1 + 1e-9)))
    if outside:
        log.info("channel_histogram: clamped %d values outside [0, 1]", outside)
    idx = np.rint(np.clip(v, 0.0, 1.0) * (B - 1)).astype(np.int64)
    counts = np.bincount(idx, minlength=B).astype(np.float64)
    h = 1.0 / (B - 1)
    return Histogram1D(counts / (v.size * h), clamped=outside)


def histogram_w1(p: Histogram1D, q: Histogram1D) -> float:
    """1-D earth mover distance between two equal-size histograms, via CDFs."""
    if p.B != q.B:
        raise ValueError("histograms have different bin counts")
    h = 1.0 / (p.B - 1)
    return float(np.abs(np.cumsum(p.bins - q.bins) * h).sum() * h)


# --------------------------------------------------------------------------- transport

@dataclass
class TransportMap1D:
    """A solved 1-D flux with the densities it connects and the integrator settings."""

    grid: Grid
    m: np.ndarray
    eta: np.ndarray
    rho0: np.ndarray
    rho1: np.ndarray
    epsilon: float = DEFAULT_EPSILON
    steps: int = DEFAULT_STEPS
    solution: Optional[Solution] = field(default=None, repr=False)

    def __post_init__(self):
        if self.grid.d != 1 or self.grid.L != 1.0:
            raise ValueError("transport maps live on the unit interval")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ValueError("steps must be a positive integer")


def solve_transport_map(h0: Histogram1D, h1: Histogram1D, alpha: float,
                        cfg: Optional[SolverConfig] = None, epsilon: float = DEFAULT_EPSILON,
                        steps: int = DEFAULT_STEPS) -> TransportMap1D:
    """Solve the 1-D problem from ``h0`` to ``h1`` (``alpha = inf`` for balanced)."""
    if cfg is None:
        cfg = SolverConfig(alpha=alpha, tol=1e-9, max_iters=1_000_000)
    else:
        cfg = SolverConfig(alpha=alpha, p=cfg.p, mu=cfg.mu, tau=cfg.tau, tol=cfg.tol,
                           max_iters=cfg.max_iters)
    r0, r1 = h0.density(), h1.density()
    sol = solve(r0, r1, cfg)
    if not sol.converged:
        log.warning("histogram transport stopped at gap %.2e after %d iterations",
                    sol.gap, sol.iters)
    return TransportMap1D(r0.grid, sol.m.values[0].copy(), sol.eta.values.copy(),
                          r0.values.copy(), r1.values.copy(), epsilon, steps, sol)


def transport_values(values, tmap: TransportMap1D) -> np.ndarray:
    """Push values in ``[0, 1]`` through the flow of ``m* / (mu_t + eps)``.

    Forward Euler with ``dt = 1/steps``; ``m*`` and ``mu_t`` are linearly
    interpolated between grid points (constant beyond the ends) and positions
    are clamped to ``[0, 1]`` after every step.
    """
    if tmap is None or tmap.m is None:
        raise ValueError("transport map is not solved")
    x = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    nodes = np.linspace(0.0, 1.0, tmap.grid.n_points)
    dt = 1.0 / tmap.steps
    for k in range(tmap.steps):
        t = k * dt
        flux = np.interp(x, nodes, tmap.m)
        dens = t * np.interp(x, nodes, tmap.rho1) + (1.0 - t) * np.interp(x, nodes, tmap.rho0)
        x = np.clip(x + dt * flux / (dens + tmap.epsilon), 0.0, 1.0)
    return x


# --------------------------------------------------------------------------- color transfer

@dataclass
class ColorTransferResult:
    image: RasterImage
    lab_in: LabPlanes
    lab_out: LabPlanes
    maps: dict
    histograms: dict
    w1: dict


def run_color_transfer(src: RasterImage, tgt: RasterImage, alpha: float,
                       cfg: Optional[SolverConfig] = None, bins: int = DEFAULT_BINS,
                       epsilon: float = DEFAULT_EPSILON, steps: int = DEFAULT_STEPS,
                       recolor: str = "target") -> ColorTransferResult:
    """Move the ``a``/``b`` distribution of one image toward the other's.

    By default the target image is recolored toward the source palette
    (``rho0`` = target histogram, ``rho1`` = source histogram);
    ``recolor="source"`` swaps the roles.  Both images share one ``[0, 1]``
    normalization per channel so histogram positions mean the same color.
    """
    if recolor not in ("target", "source"):
        raise ValueError("recolor must be 'target' or 'source'")
    if src.channels != 3 or tgt.channels != 3:
        raise ValueError("color transfer needs two 3-channel images")
    moving, reference = (tgt, src) if recolor == "target" else (src, tgt)
    lab_m = raw_lab(moving)
    lab_r = raw_lab(reference)
    bounds = {}
    for c, name in ((1, "a"), (2, "b")):
        lo = float(min(lab_m[..., c].min(), lab_r[..., c].min()))
        hi = float(max(lab_m[..., c].max(), lab_r[..., c].max()))
        bounds[name] = (lo, hi)
    planes_m = rgb_to_lab(moving, bounds["a"], bounds["b"])
    planes_r = rgb_to_lab(reference, bounds["a"], bounds["b"])

    maps, hists, w1 = {}, {}, {}
    moved = {}
    for name in ("a", "b"):
        h0 = channel_histogram(getattr(planes_m, name), bins)
        h1 = channel_histogram(getattr(planes_r, name), bins)
        tmap = solve_transport_map(h0, h1, alpha, cfg, epsilon, steps)
        moved[name] = transport_values(getattr(planes_m, name), tmap)
        out_hist = channel_histogram(moved[name], bins)
        maps[name] = tmap
        hists[name] = (h0, h1, out_hist)
        w1[name] = (histogram_w1(h0, h1), histogram_w1(out_hist, h1))

    out = LabPlanes(planes_m.l, moved["a"], moved["b"], planes_m.a_offset, planes_m.a_scale,
                    planes_m.b_offset, planes_m.b_scale)
    return ColorTransferResult(lab_to_rgb(out), planes_m, out, maps, hists, w1)


def color_transfer(src: RasterImage, tgt: RasterImage, alpha: float,
                   cfg: Optional[SolverConfig] = None, **kwargs) -> RasterImage:
    return run_color_transfer(src, tgt, alpha, cfg, **kwargs).image


def synthetic_image(kind: str, size: int = 64, seed: int = 0) -> RasterImage:
    """Deterministic test pictures: ``"warm"``, ``"cool"``, ``"gray"``, ``"noise"``."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size] / max(size - 1, 1)
    if kind == "warm":
        r = 0.75 + 0.2 * xx
        g = 0.35 + 0.35 * yy
        b = 0.15 + 0.1 * xx * yy
    elif kind == "cool":
        r = 0.15 + 0.25 * yy
        g = 0.45 + 0.3 * xx
        b = 0.65 + 0.3 * (1 - yy)
    elif kind == "gray":
        r = g = b = 0.2 + 0.6 * xx
    elif kind == "noise":
        r, g, b = rng.random((3, size, size))
    else:
        raise ValueError(f"unknown synthetic image {kind!r}")
    rgb = np.stack([r, g, b], axis=-1)
    if kind != "noise":
        rgb = rgb + rng.normal(0.0, 0.03, rgb.shape)
    return RasterImage.from_array(to_uint8(rgb * 255.0))
