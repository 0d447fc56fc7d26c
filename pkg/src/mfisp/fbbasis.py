"""Fourier-Bessel basis on the disc of radius R0.

    phi_{m,n}(r, theta) = e^{i m theta} J_m(k_{m,n} r) / (sqrt(pi) |J_{|m|+1}(j_{|m|,n})| R0)

with k_{m,n} = j_{|m|,n} / R0.  Coefficient vectors use the block order

    (1,1)..(1,N), (2,1)..(M,N), (0,1)..(0,N), (-1,1)..(-M,N)

i.e. positive orders first, then order zero, then negative orders.
"""

import csv
from dataclasses import dataclass
import json
import math

import numpy as np

from . import specfun
from .errors import DomainError, UsageError

RADIUS_SLACK = 1e-12


@dataclass(frozen=True, order=True)
class FBIndex:
    """Basis label (m, n) with |m| <= M and 1 <= n <= N."""

    m: int
    n: int


def _check_space(M, N):
    if int(M) != M or int(N) != N or M < 0 or N < 1:
        raise UsageError(f"invalid space S_{{M,N}} with M={M!r}, N={N!r}")
    return int(M), int(N)


def dimension(M, N):
    M, N = _check_space(M, N)
    return (2 * M + 1) * N


def pack_index(m, n, M, N):
    """Flat position of (m, n) in the coefficient vector.

    Examples
    --------
    >>> pack_index(1, 1, 3, 3), pack_index(0, 1, 3, 3), pack_index(-1, 1, 3, 3)
    (0, 9, 12)
    """
    M, N = _check_space(M, N)
    if not (abs(m) <= M and 1 <= n <= N):
        raise UsageError(f"index ({m}, {n}) outside S_{{{M},{N}}}")
    if m > 0:
        return (m - 1) * N + n - 1
    if m == 0:
        return M * N + n - 1
    return (M + 1) * N + (-m - 1) * N + n - 1


def unpack_position(p, M, N):
    """Inverse of :func:`pack_index`."""
    M, N = _check_space(M, N)
    if not 0 <= p < (2 * M + 1) * N:
        raise UsageError(f"position {p} outside S_{{{M},{N}}}")
    block, n = divmod(int(p), N)
    if block < M:
        m = block + 1
    elif block == M:
        m = 0
    else:
        m = -(block - M)
    return FBIndex(m, n + 1)


def orders(M, N):
    """Arrays (m, n) for every flat position, in coefficient order."""
    M, N = _check_space(M, N)
    blocks = list(range(1, M + 1)) + [0] + [-k for k in range(1, M + 1)]
    m = np.repeat(np.array(blocks, dtype=int), N)
    n = np.tile(np.arange(1, N + 1), 2 * M + 1)
    return m, n


def scaled_zeros(M, N, R0):
    """k_{m,n} = j_{m,n}/R0 as an (M+1, N) array."""
    M, N = _check_space(M, N)
    return specfun.zero_table(M, N).zeros / float(R0)


def normalization(m, n, R0):
    """1 / (sqrt(pi) |J_{|m|+1}(j_{|m|,n})| R0); identical for +m and -m."""
    m = abs(int(m))
    j = specfun.bessel_zero(m, n)
    return 1.0 / (math.sqrt(math.pi) * abs(specfun.bessel_j(m + 1, j)) * R0)


def _check_radius(r, R0):
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 0.0) or np.any(r > R0 * (1.0 + RADIUS_SLACK)):
        raise DomainError(f"radius outside [0, R0={R0}]")
    return np.minimum(r, R0)


def radial_profile(m, n, r, R0):
    """Real radial factor of phi_{m,n}: normalization * J_m(k_{m,n} r)."""
    r = _check_radius(r, R0)
    k = specfun.bessel_zero(abs(m), n) / R0
    return normalization(m, n, R0) * np.asarray(specfun.bessel_j(m, k * r))


def eval_basis(m, n, r, theta, R0):
    """phi_{m,n}(r, theta) with broadcasting over ``r`` and ``theta``.

    Raises
    ------
    DomainError
        If any radius lies outside [0, R0].
    """
    r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
    val = radial_profile(m, n, r, R0) * np.exp(1j * m * theta)
    return val[()] if val.ndim == 0 else val


class PolarGrid:
    """Tensor quadrature on the disc: Gauss-Legendre in r, trapezoid in theta.

    Parameters
    ----------
    R0 : float
        Disc radius.
    n_r : int, default 160
        Radial Gauss-Legendre nodes on [0, R0].
    n_theta : int, default 256
        Uniform angular nodes theta_q = 2 pi q / n_theta.

    Notes
    -----
    ``weights`` already contain the Jacobian r, so ``sum(f * weights)``
    approximates the area integral of f over the disc.
    """

    def __init__(self, R0=1.0, n_r=160, n_theta=256):
        if not R0 > 0:
            raise UsageError("R0 must be positive")
        if n_r < 1 or n_theta < 1:
            raise UsageError("grid sizes must be positive")
        self.R0 = float(R0)
        self.n_r = int(n_r)
        self.n_theta = int(n_theta)
        t, w = np.polynomial.legendre.leggauss(self.n_r)
        self.r = 0.5 * self.R0 * (t + 1.0)
        self.w_r = 0.5 * self.R0 * w * self.r
        self.theta = 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta
        self.w_theta = 2.0 * np.pi / self.n_theta
        self.weights = np.outer(self.w_r, np.full(self.n_theta, self.w_theta))
        for arr in (self.r, self.w_r, self.theta, self.weights):
            arr.setflags(write=False)

    @property
    def shape(self):
        return (self.n_r, self.n_theta)

    def refined(self, factor=2):
        return PolarGrid(self.R0, factor * self.n_r, factor * self.n_theta)

    def mesh(self):
        """(r, theta) arrays of shape ``self.shape``."""
        return np.meshgrid(self.r, self.theta, indexing="ij")

    def cartesian(self):
        r, t = self.mesh()
        return r * np.cos(t), r * np.sin(t)

    def check_field(self, field):
        field = np.asarray(field)
        if field.shape != self.shape:
            raise UsageError(f"field shape {field.shape} does not match grid {self.shape}")
        return field

    def integrate(self, field):
        return np.sum(self.check_field(field) * self.weights)

    def inner(self, f, g):
        """(f, g) = integral of f * conj(g) over the disc."""
        return np.sum(self.check_field(f) * np.conj(self.check_field(g)) * self.weights)

    def norm(self, field):
        field = self.check_field(field)
        return math.sqrt(float(np.sum(np.abs(field) ** 2 * self.weights)))

    def __eq__(self, other):
        return isinstance(other, PolarGrid) and (self.R0, self.shape) == (other.R0, other.shape)

    def __hash__(self):
        return hash((self.R0, self.shape))

    def __repr__(self):
        return f"PolarGrid(R0={self.R0}, n_r={self.n_r}, n_theta={self.n_theta})"


class FBExpansion:
    """Finite expansion sum over S_{M,N} of c_{m,n} phi_{m,n}.

    Parameters
    ----------
    M, N : int
    R0 : float
    coeffs : array_like of complex, length (2M+1)N
        Values in packed order (see :func:`pack_index`).
    """

    def __init__(self, M, N, R0, coeffs):
        self.M, self.N = _check_space(M, N)
        if not R0 > 0:
            raise UsageError("R0 must be positive")
        self.R0 = float(R0)
        c = np.array(coeffs, dtype=np.complex128).ravel()
        if c.size != dimension(self.M, self.N):
            raise UsageError(f"expected {dimension(self.M, self.N)} coefficients, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise UsageError("coefficients must be finite")
        c.setflags(write=False)
        self.coeffs = c

    @classmethod
    def zeros(cls, M, N, R0=1.0):
        return cls(M, N, R0, np.zeros(dimension(M, N), dtype=complex))

    @classmethod
    def from_terms(cls, M, N, R0, terms):
        """Build from a mapping {(m, n): value}."""
        c = np.zeros(dimension(M, N), dtype=complex)
        for (m, n), v in terms.items():
            c[pack_index(m, n, M, N)] += v
        return cls(M, N, R0, c)

    def __getitem__(self, mn):
        m, n = mn
        return complex(self.coeffs[pack_index(m, n, self.M, self.N)])

    def __len__(self):
        return self.coeffs.size

    def __eq__(self, other):
        return (
            isinstance(other, FBExpansion)
            and (self.M, self.N, self.R0) == (other.M, other.N, other.R0)
            and np.array_equal(self.coeffs, other.coeffs)
        )

    def __repr__(self):
        return f"FBExpansion(M={self.M}, N={self.N}, R0={self.R0})"

    def with_coeffs(self, coeffs):
        return FBExpansion(self.M, self.N, self.R0, coeffs)

    def block(self, m):
        """The N coefficients of order m."""
        p = pack_index(m, 1, self.M, self.N)
        return self.coeffs[p : p + self.N]

    def symmetrized(self):
        """Average with the real-source image c_{-m,n} -> (-1)^m conj(c_{m,n})."""
        m, n = orders(self.M, self.N)
        mirror = np.array([pack_index(-a, b, self.M, self.N) for a, b in zip(m, n)], dtype=int)
        image = np.where(m % 2, -1.0, 1.0) * np.conj(self.coeffs[mirror])
        return self.with_coeffs(0.5 * (self.coeffs + image))

    def to_dict(self):
        return {
            "M": self.M,
            "N": self.N,
            "R0": self.R0,
            "coeffs": [[float(v.real), float(v.imag)] for v in self.coeffs],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            c = [complex(re, im) for re, im in data["coeffs"]]
            return cls(int(data["M"]), int(data["N"]), float(data["R0"]), c)
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"malformed expansion document: {exc}") from exc

    def dumps(self):
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def loads(cls, text):
        return cls.from_dict(json.loads(text))


def radial_table(M, N, r, R0):
    """Radial profiles for m = 0..M, shape (M+1, N, len(r)).

    Order -m uses (-1)^m times row m.
    """
    r = _check_radius(np.atleast_1d(r), R0)
    k = scaled_zeros(M, N, R0)
    out = np.empty((M + 1, N, r.size))
    for m in range(M + 1):
        for n in range(N):
            out[m, n] = normalization(m, n + 1, R0) * np.asarray(specfun.bessel_j(m, k[m, n] * r))
    return out


def _signed_radial(table, m):
    row = table[abs(m)]
    return -row if (m < 0 and m % 2) else row


def project(field, grid, M, N):
    """Coefficients (s, phi_{m,n}) under the grid quadrature.

    The angular integral is an FFT over the uniform nodes, followed by the
    radial Gauss-Legendre sum.

    Raises
    ------
    UsageError
        On a shape mismatch, or if ``grid.n_theta <= 2M`` (orders would alias).
    """
    M, N = _check_space(M, N)
    field = grid.check_field(field)
    if grid.n_theta <= 2 * M:
        raise UsageError(f"n_theta={grid.n_theta} cannot resolve orders up to {M}")
    ang = np.fft.fft(field, axis=1) * grid.w_theta
    table = radial_table(M, N, grid.r, grid.R0)
    coeffs = np.empty(dimension(M, N), dtype=complex)
    for m in range(-M, M + 1):
        prof = _signed_radial(table, m)
        vals = prof @ (ang[:, m % grid.n_theta] * grid.w_r)
        p = pack_index(m, 1, M, N)
        coeffs[p : p + N] = vals
    return FBExpansion(M, N, grid.R0, coeffs)


def synthesize(expansion, grid):
    """Field sum c_{m,n} phi_{m,n} sampled on ``grid`` (shape grid.shape)."""
    if abs(expansion.R0 - grid.R0) > 1e-12 * grid.R0:
        raise UsageError("expansion and grid radii differ")
    M, N = expansion.M, expansion.N
    table = radial_table(M, N, grid.r, grid.R0)
    out = np.zeros(grid.shape, dtype=complex)
    for m in range(-M, M + 1):
        radial = expansion.block(m) @ _signed_radial(table, m)
        if np.any(radial):
            out += np.outer(radial, np.exp(1j * m * grid.theta))
    return out


def synthesize_at(expansion, r, theta):
    """Evaluate the expansion at arbitrary polar points (broadcast)."""
    M, N = expansion.M, expansion.N
    r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
    flat_r = r.ravel()
    table = radial_table(M, N, flat_r, expansion.R0)
    out = np.zeros(flat_r.size, dtype=complex)
    flat_t = theta.ravel()
    for m in range(-M, M + 1):
        radial = expansion.block(m) @ _signed_radial(table, m)
        if np.any(radial):
            out += radial * np.exp(1j * m * flat_t)
    return out.reshape(r.shape)


def write_field_csv(path, grid, field, cartesian=False):
    """Write a grid field as rows (r, theta, re, im) or (x, y, re, im)."""
    field = grid.check_field(field)
    rr, tt = grid.mesh()
    a, b = (rr * np.cos(tt), rr * np.sin(tt)) if cartesian else (rr, tt)
    head = ("x", "y") if cartesian else ("r", "theta")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(head + ("re", "im"))
        for row in zip(a.ravel(), b.ravel(), field.real.ravel(), np.imag(field).ravel()):
            w.writerow([f"{v:.17g}" for v in row])
