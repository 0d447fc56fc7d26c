"""Boundary measurements U_k = F_k s on the circle of radius R.

Two independent forward maps are provided: tensor quadrature of the
Green's-function integral (the reference simulation) and the singular value
expansion, which needs no 2-D quadrature for Fourier-Bessel sources.
"""

from dataclasses import dataclass, field
import json
import logging
import math

import numpy as np

from . import _backend, fbbasis, kmatrix, specfun, sve
from .errors import DomainError, SimulationError, UsageError
from .sve import GREEN_FACTOR

log = logging.getLogger(__name__)

MIN_SAMPLES = 8
NODES_PER_WAVELENGTH = 10.0
SOURCE_NAMES = ("eq44", "smooth522", "discont523")


@dataclass(frozen=True)
class Measurement:
    """Samples of the radiated field at theta_p = 2 pi p / P on radius R.

    Attributes
    ----------
    k : float
        Wavenumber.
    R : float
        Measurement radius.
    samples : ndarray of complex, length P (even, >= 8)
    noise_level : float
        Relative L2 noise level that was added (0 for clean data).
    seed : int or None
        Noise seed, if any.
    """

    k: float
    R: float
    samples: np.ndarray = field(repr=False)
    noise_level: float = 0.0
    seed: object = None

    def __post_init__(self):
        s = np.array(self.samples, dtype=np.complex128).ravel()
        if not (self.k > 0 and math.isfinite(self.k)):
            raise UsageError(f"wavenumber must be positive, got {self.k}")
        if not self.R > 0:
            raise UsageError("measurement radius must be positive")
        if s.size < MIN_SAMPLES or s.size % 2:
            raise UsageError(f"need an even sample count >= {MIN_SAMPLES}, got {s.size}")
        if not np.all(np.isfinite(s)):
            raise UsageError("samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def P(self):
        return self.samples.size

    @property
    def theta(self):
        return 2.0 * np.pi * np.arange(self.P) / self.P

    def norm(self):
        """L2 norm over the measurement circle (trapezoid rule)."""
        return math.sqrt(2.0 * math.pi * self.R / self.P * float(np.sum(np.abs(self.samples) ** 2)))

    def to_dict(self):
        out = {"k": self.k, "samples": [[float(v.real), float(v.imag)] for v in self.samples]}
        if self.noise_level:
            out["noise"] = self.noise_level
            out["seed"] = self.seed
        return out


def save_measurements(path, measurements):
    """Write measurements sharing R and P to a JSON file."""
    measurements = list(measurements)
    if not measurements:
        raise UsageError("no measurements to write")
    R, P = measurements[0].R, measurements[0].P
    if any(m.R != R or m.P != P for m in measurements):
        raise UsageError("measurements in one file must share R and P")
    doc = {"R": R, "P": P, "measurements": [m.to_dict() for m in measurements]}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def parse_measurements(doc):
    try:
        R, P = float(doc["R"]), int(doc["P"])
        out = []
        for i, entry in enumerate(doc["measurements"]):
            samples = [complex(re, im) for re, im in entry["samples"]]
            if len(samples) != P:
                raise ValueError(f"measurement {i} has {len(samples)} samples, expected {P}")
            out.append(Measurement(float(entry["k"]), R, samples, float(entry.get("noise", 0.0)), entry.get("seed")))
        return out
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed measurement document: {exc}") from exc


def load_measurements(path):
    with open(path) as fh:
        return parse_measurements(json.load(fh))


# --------------------------------------------------------------------------
# sources


class SourceSpec:
    """A source term on the disc of radius R0.

    Subclasses provide ``sample(grid)``; sources that lie in a finite
    Fourier-Bessel space also expose ``expansion``.
    """

    name = "source"
    expansion = None

    def sample(self, grid):
        raise NotImplementedError


class FBSource(SourceSpec):
    """Finite Fourier-Bessel combination."""

    def __init__(self, expansion, name="fb"):
        self.expansion = expansion
        self.name = name

    @property
    def R0(self):
        return self.expansion.R0

    def sample(self, grid):
        return fbbasis.synthesize(self.expansion, grid)


class FunctionSource(SourceSpec):
    """Source given pointwise by f(x, y), zero outside the disc."""

    def __init__(self, func, R0=1.0, name="function"):
        self.func = func
        self.R0 = float(R0)
        self.name = name

    def sample(self, grid):
        x, y = grid.cartesian()
        return np.asarray(self.func(x, y), dtype=complex)


class GridSource(SourceSpec):
    """Source known only by its samples on one polar grid."""

    def __init__(self, values, grid, name="grid"):
        self.values = grid.check_field(np.asarray(values, dtype=complex))
        self.grid = grid
        self.R0 = grid.R0
        self.name = name

    def sample(self, grid):
        if grid != self.grid:
            raise UsageError("a sampled source can only be evaluated on its own grid")
        return self.values


def eq44_expansion():
    """2 phi_{0,1} + pi phi_{3,3} on the unit disc."""
    return fbbasis.FBExpansion.from_terms(3, 3, 1.0, {(0, 1): 2.0, (3, 3): math.pi})


def smooth_source(x, y):
    """Smooth peaks-type source on the unit disc."""
    X, Y = 3.0 * x, 3.0 * y
    return (
        0.3 * (1 - X) ** 2 * np.exp(-(X**2) - (Y + 1) ** 2)
        - (0.2 * X - X**3 - Y**5) * np.exp(-(X**2) - Y**2)
        - 0.03 * np.exp(-((X + 1) ** 2) - Y**2)
    )


def discontinuous_source(x, y):
    """Piecewise-constant source: background 0.1 plus a disc and two boxes."""
    s = np.full(np.broadcast(x, y).shape, 0.1)
    s += np.where((x + 0.4) ** 2 + (y + 0.08) ** 2 <= 0.05**2, 1.0, 0.0)
    s += np.where((np.abs(x - 0.2) <= 0.15) & (np.abs(y + 0.4) <= 0.15), 0.5, 0.0)
    s += np.where((np.abs(x + 0.2) <= 0.2) & (np.abs(y - 0.4) <= 0.3), 2.0, 0.0)
    return s


def named_source(name):
    """One of the three experiment sources, all on the unit disc."""
    if name == "eq44":
        return FBSource(eq44_expansion(), name="eq44")
    if name == "smooth522":
        return FunctionSource(smooth_source, 1.0, name="smooth522")
    if name == "discont523":
        return FunctionSource(discontinuous_source, 1.0, name="discont523")
    raise UsageError(f"unknown source {name!r}; choose from {', '.join(SOURCE_NAMES)}")


# --------------------------------------------------------------------------
# forward maps


def green_kernel(k, x, y):
    """G_k(x, y) = -(i/4) H_0^(1)(k |x - y|) for planar points x != y."""
    d = math.hypot(x[0] - y[0], x[1] - y[1])
    if d == 0.0:
        raise DomainError("Green's function is singular at coincident points")
    return GREEN_FACTOR * specfun.hankel1(0, k * d)


def boundary_points(R, P):
    theta = 2.0 * np.pi * np.arange(P) / P
    return R * np.cos(theta), R * np.sin(theta)


def _check_geometry(k, R, P, R0):
    if not (k > 0 and math.isfinite(k)):
        raise UsageError(f"wavenumber must be positive, got {k}")
    if not (0 < R0 < R):
        raise UsageError(f"need 0 < R0 < R, got R0={R0}, R={R}")
    if int(P) != P or P < MIN_SAMPLES or P % 2:
        raise UsageError(f"need an even sample count >= {MIN_SAMPLES}, got {P}")


def check_resolution(k, grid, strict=False):
    """Warn (or raise when strict) if the radial rule has < 10 nodes per wavelength."""
    per_wave = 2.0 * math.pi * grid.n_r / (k * grid.R0)
    if per_wave >= NODES_PER_WAVELENGTH:
        return True
    msg = f"grid {grid} has {per_wave:.1f} radial nodes per wavelength at k={k:g}"
    if strict:
        raise SimulationError(msg)
    log.warning(msg)
    return False


def forward_quadrature_fields(fields, k, R, P, grid, strict=False):
    """Quadrature forward map for several sampled sources at once.

    Parameters
    ----------
    fields : ndarray, shape grid.shape or (count,) + grid.shape
    k, R : float
    P : int
    grid : PolarGrid

    Returns
    -------
    ndarray of complex, shape (P,) or (P, count)
    """
    _check_geometry(k, R, P, grid.R0)
    check_resolution(k, grid, strict)
    fields = np.asarray(fields, dtype=complex)
    single = fields.ndim == 2
    stack = fields[None] if single else fields
    if stack.shape[1:] != grid.shape:
        raise UsageError(f"fields of shape {stack.shape[1:]} do not match grid {grid.shape}")
    nx, ny = (a.ravel() for a in grid.cartesian())
    w = (stack * grid.weights).reshape(stack.shape[0], -1).T
    bx, by = boundary_points(R, P)
    u = GREEN_FACTOR * _backend.green_sum(float(k), bx, by, nx, ny, np.ascontiguousarray(w))
    return u[:, 0] if single else u


def forward_quadrature(src, k, R, P=200, grid=None, strict=False):
    """Measurement from tensor quadrature of the Green's-function integral."""
    grid = grid or fbbasis.PolarGrid(src.R0)
    if abs(grid.R0 - src.R0) > 1e-12 * src.R0:
        raise UsageError("grid radius differs from the source disc")
    return Measurement(k, R, forward_quadrature_fields(src.sample(grid), k, R, P, grid, strict))


def forward_sve(expansion, k, R, P=200, n_max=None):
    """Measurement of a Fourier-Bessel source from the singular value expansion.

    Only orders |m| <= M contribute, so the series is exact up to rounding.
    ``n_max`` (default M) may not be smaller than the expansion order M.
    """
    R0 = expansion.R0
    _check_geometry(k, R, P, R0)
    M, N = expansion.M, expansion.N
    if n_max is None:
        n_max = M
    if n_max < M:
        raise UsageError(f"n_max={n_max} truncates an expansion of order {M}")
    theta = 2.0 * np.pi * np.arange(P) / P
    u = np.zeros(P, dtype=complex)
    overlaps = np.array([[kmatrix.fb_overlap(m, n, k, R0) for n in range(1, N + 1)] for m in range(M + 1)])
    h = specfun.hankel1(0, k * R)
    for m in range(-M, M + 1):
        c = expansion.block(m) @ overlaps[abs(m)]
        if c == 0:
            continue
        hm = h if m == 0 else specfun.hankel1(m, k * R)
        u += GREEN_FACTOR * hm * c * np.exp(1j * m * theta)
    return Measurement(k, R, u)


def forward_sve_sampled(field, grid, k, R, P=200, n_max=None):
    """SVE forward map for a source known on a polar grid.

    The angular moments come from an FFT and the radial moments from the
    grid's Gauss-Legendre rule; orders up to ``n_max`` (default and maximum
    n_theta/2 - 1) are summed.
    """
    _check_geometry(k, R, P, grid.R0)
    field = grid.check_field(np.asarray(field, dtype=complex))
    limit = grid.n_theta // 2 - 1
    n_max = limit if n_max is None else int(n_max)
    if n_max > limit:
        raise UsageError(f"n_max={n_max} exceeds the grid's alias limit {limit}")
    ang = np.fft.fft(field, axis=1) * grid.w_theta
    jr = specfun.bessel_j_orders(n_max, k * grid.r)
    hk = np.atleast_1d(specfun.hankel1(0, k * R))
    ys = specfun.bessel_y_orders(n_max, [k * R])[:, 0]
    js = specfun.bessel_j_orders(n_max, [k * R])[:, 0]
    theta = 2.0 * np.pi * np.arange(P) / P
    u = np.zeros(P, dtype=complex)
    # J_a(k r) Y_a(k R) ~ (r/R)^a, so orders where Y_a overflows add nothing
    overflow = np.flatnonzero(~np.isfinite(ys))
    if overflow.size:
        n_max = min(n_max, int(overflow[0]) - 1)
    for m in range(-n_max, n_max + 1):
        a = abs(m)
        sign = -1.0 if (m < 0 and a % 2) else 1.0
        moment = sign * np.sum(jr[a] * ang[:, m % grid.n_theta] * grid.w_r)
        hm = hk[0] if a == 0 else complex(js[a], ys[a])
        u += GREEN_FACTOR * sign * hm * moment * np.exp(1j * m * theta)
    return Measurement(k, R, u)


def noise_rng(seed, k):
    """Generator derived from (seed, k) so runs are order independent."""
    if int(seed) != seed or seed < 0:
        raise UsageError("seed must be a non-negative integer")
    return np.random.default_rng([int(seed), int(round(float(k) * 1e9))])


def add_noise(meas, level, seed):
    """Add complex Gaussian noise scaled to relative L2 norm ``level`` exactly.

    Raises
    ------
    UsageError
        If ``level`` is negative, or positive while the data are zero.
    """
    if not (level >= 0 and math.isfinite(level)):
        raise UsageError("noise level must be non-negative")
    if level == 0:
        return meas
    unorm = np.linalg.norm(meas.samples)
    if unorm == 0:
        raise UsageError("cannot scale relative noise on a zero measurement")
    rng = noise_rng(seed, meas.k)
    eps = rng.standard_normal(meas.P) + 1j * rng.standard_normal(meas.P)
    eps *= level * unorm / np.linalg.norm(eps)
    return Measurement(meas.k, meas.R, meas.samples + eps, float(level), int(seed))
