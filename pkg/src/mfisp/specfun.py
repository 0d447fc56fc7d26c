"""Integer-order Bessel functions, their zeros and the coupling norm A_n.

All evaluators accept a scalar or an array argument and return a float (or
complex) of matching shape.  Negative orders are served through the
reflection J_{-m} = (-1)^m J_m and Y_{-m} = (-1)^m Y_m.

The numerical work happens in ``_backend`` (compiled when available); this
module owns validation, reflection and the zero tables.
"""

from dataclasses import dataclass, field
from functools import lru_cache
import hashlib
import math
import threading

import numpy as np

from . import _backend
from .errors import ConvergenceError, DomainError

MAX_ORDER = 400
MAX_ARG = 5000.0
ZERO_RESIDUAL = 1e-11
ZERO_MAX_ITER = 60
RADICAND_CLAMP = 1e-12


def _check_order(m):
    if isinstance(m, (bool, np.bool_)) or int(m) != m:
        raise DomainError(f"order must be an integer, got {m!r}")
    m = int(m)
    if abs(m) > MAX_ORDER:
        raise DomainError(f"|order| {abs(m)} exceeds supported maximum {MAX_ORDER}")
    return m


def _check_arg(x, positive=False):
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DomainError("argument must be finite")
    if positive and np.any(arr <= 0.0):
        raise DomainError("argument must be strictly positive")
    if np.any(arr < 0.0):
        raise DomainError("argument must be non-negative")
    if np.any(arr > MAX_ARG):
        raise DomainError(f"argument exceeds supported maximum {MAX_ARG}")
    return arr


def _shape_like(values, template):
    if template.ndim == 0:
        return values.reshape(()).item()
    return values.reshape(template.shape)


def _reflect(m):
    """(|m|, sign) such that f_m = sign * f_|m| for J and Y."""
    if m < 0 and m % 2:
        return -m, -1.0
    return abs(m), 1.0


def bessel_j(m, x):
    """Bessel function of the first kind J_m(x) for integer m, x >= 0.

    Parameters
    ----------
    m : int
        Order, |m| <= 400.
    x : float or array_like
        Argument(s) in [0, 5000].

    Returns
    -------
    float or ndarray
    """
    m = _check_order(m)
    arr = _check_arg(x)
    order, sign = _reflect(m)
    vals = _backend.besselj(order, arr.ravel())
    return _shape_like(sign * vals, arr)


def bessel_j_orders(max_order, x):
    """J_0..J_max_order at every x, shape (max_order + 1,) + x.shape."""
    max_order = _check_order(max_order)
    if max_order < 0:
        raise DomainError("max_order must be non-negative")
    arr = _check_arg(x)
    vals = _backend.besselj_orders(max_order, arr.ravel())
    return vals.reshape((max_order + 1,) + arr.shape)


def bessel_j_derivative(m, x):
    """J_m'(x) = (J_{m-1}(x) - J_{m+1}(x)) / 2."""
    m = _check_order(m)
    if abs(m) + 1 > MAX_ORDER:
        raise DomainError("derivative needs order |m| + 1 within range")
    return 0.5 * (np.asarray(bessel_j(m - 1, x)) - np.asarray(bessel_j(m + 1, x)))[()]


def bessel_y(m, x):
    """Bessel function of the second kind Y_m(x) for x > 0.

    Values that overflow for large orders at small arguments are returned
    as ``-inf``.
    """
    m = _check_order(m)
    arr = _check_arg(x, positive=True)
    order, sign = _reflect(m)
    vals = _backend.bessely(order, arr.ravel())
    return _shape_like(sign * vals, arr)


def bessel_y_orders(max_order, x):
    """Y_0..Y_max_order at every x > 0."""
    max_order = _check_order(max_order)
    arr = _check_arg(x, positive=True)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = _backend.bessely_orders(max_order, arr.ravel())
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    return vals.reshape((max_order + 1,) + arr.shape)


def hankel1(n, x):
    """Hankel function of the first kind H_n^(1)(x) = J_n(x) + i Y_n(x).

    Examples
    --------
    >>> h = hankel1(0, 1.0)
    >>> round(h.real, 12), round(h.imag, 12)
    (0.765197686558, 0.088256964216)
    """
    n = _check_order(n)
    arr = _check_arg(x, positive=True)
    order, sign = _reflect(n)
    flat = arr.ravel()
    if order == 0:
        vals = _backend.hankel0(flat)
    else:
        vals = _backend.besselj(order, flat) + 1j * _backend.bessely(order, flat)
    return _shape_like(sign * vals, arr)


def coupling_norm(n, kappa):
    """A_n(kappa) = sqrt(J_n^2 - J_{n-1} J_{n+1}).

    The radicand equals (2/kappa^2) * integral_0^kappa J_n(t)^2 t dt and is
    therefore positive; round-off values in [-1e-12, 0) are clamped to 0.

    Raises
    ------
    ConvergenceError
        If the radicand is below -1e-12.
    """
    n = abs(_check_order(n))
    if n + 1 > MAX_ORDER:
        raise DomainError("coupling norm needs order n + 1 within range")
    arr = _check_arg(kappa, positive=True)
    flat = arr.ravel()
    jn = _backend.besselj(n, flat)
    jp = _backend.besselj(n + 1, flat)
    jm = -jp if n == 0 else _backend.besselj(n - 1, flat)
    rad = jn * jn - jm * jp
    if np.any(rad < -RADICAND_CLAMP):
        worst = float(rad.min())
        raise ConvergenceError("negative coupling-norm radicand", order=n, radicand=worst)
    return _shape_like(np.sqrt(np.maximum(rad, 0.0)), arr)


# --------------------------------------------------------------------------
# zeros


def _mcmahon(m, n):
    beta = (n + 0.5 * m - 0.25) * math.pi
    mu = 4.0 * m * m
    return beta - (mu - 1.0) / (8.0 * beta) - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * (8.0 * beta) ** 3)


def _refine(m, lo, hi, guess):
    """Safeguarded Newton on J_m inside the sign-change brackets (lo, hi)."""
    lo = lo.copy()
    hi = hi.copy()
    x = np.where((guess > lo) & (guess < hi), guess, 0.5 * (lo + hi))
    f_lo = _backend.besselj(m, lo)
    active = np.ones(x.size, dtype=bool)
    for _ in range(ZERO_MAX_ITER):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            return x
        xa = x[idx]
        f = _backend.besselj(m, xa)
        df = (m / xa) * f - _backend.besselj(m + 1, xa)
        same = np.sign(f) == np.sign(f_lo[idx])
        lo[idx] = np.where(same, xa, lo[idx])
        hi[idx] = np.where(same, hi[idx], xa)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / df
        cand = xa - step
        hit = f == 0.0
        bad = ~hit & (~np.isfinite(cand) | (cand <= lo[idx]) | (cand >= hi[idx]))
        cand = np.where(hit, xa, np.where(bad, 0.5 * (lo[idx] + hi[idx]), cand))
        x[idx] = cand
        done = ((np.abs(step) <= 4e-15 * xa) & ~bad) | (hi[idx] - lo[idx] <= 4e-15 * xa) | hit
        active[idx[done]] = False
    if active.any():
        raise ConvergenceError(
            "Bessel zero iteration did not converge",
            order=m,
            indices=(np.flatnonzero(active) + 1).tolist(),
            iterations=ZERO_MAX_ITER,
        )
    return x


def _order_zeros(m, count, prev):
    """First ``count`` zeros of J_m given at least count+1 zeros of J_{m-1}."""
    n = np.arange(1, count + 1, dtype=float)
    if m == 0:
        lo = (n - 0.5) * math.pi
        hi = n * math.pi
    else:
        lo = prev[:count].copy()
        hi = prev[1 : count + 1].copy()
    guess = np.array([_mcmahon(m, k) for k in range(1, count + 1)])
    return _refine(m, lo, hi, guess)


@dataclass(frozen=True)
class BesselZeroTable:
    """Positive zeros j_{m,n} of J_m for m = 0..max_order, n = 1..max_index.

    Attributes
    ----------
    max_order, max_index : int
    zeros : ndarray, shape (max_order + 1, max_index)
        Read-only; ``zeros[m, n - 1]`` is j_{m,n}.
    """

    max_order: int
    max_index: int
    zeros: np.ndarray = field(repr=False)

    def __call__(self, m, n):
        m = abs(int(m))
        if not (0 <= m <= self.max_order and 1 <= n <= self.max_index):
            raise DomainError(f"zero ({m}, {n}) outside table {self.max_order}x{self.max_index}")
        return float(self.zeros[m, n - 1])

    def order(self, m):
        return self.zeros[abs(int(m))]

    def digest(self):
        """SHA-256 of the table contents, for plan provenance."""
        h = hashlib.sha256()
        h.update(np.asarray([self.max_order, self.max_index], dtype=np.int64).tobytes())
        # rounded so the digest does not depend on which master table served it
        h.update(np.round(self.zeros, 9).tobytes())
        return h.hexdigest()

    def check_invariants(self):
        """Return a dict of boolean invariant checks over the whole table."""
        z = self.zeros
        m = np.arange(self.max_order + 1)[:, None]
        n = np.arange(1, self.max_index + 1)[None, :]
        increasing = bool(np.all(np.diff(z, axis=1) > 0))
        lower = bool(np.all(z > m + n * math.pi - math.pi / 2 + 0.5))
        interlace = True
        if self.max_order >= 1:
            interlace = bool(np.all(z[:-1] < z[1:]))
            if self.max_index >= 2:
                interlace &= bool(np.all(z[1:, :-1] < z[:-1, 1:]))
        residual = max(
            float(np.max(np.abs(_backend.besselj(k, z[k])))) for k in range(self.max_order + 1)
        )
        return {
            "increasing": increasing,
            "lower_bound": lower,
            "interlacing": interlace,
            "residual": residual < ZERO_RESIDUAL,
        }


def _build_zeros(max_order, max_index):
    rows = []
    prev = None
    for m in range(max_order + 1):
        # interlacing brackets for order m need one more zero of order m-1
        count = max_index + (max_order - m)
        prev = _order_zeros(m, count, prev)
        rows.append(prev[:max_index])
    zeros = np.array(rows)
    worst = max(float(np.max(np.abs(_backend.besselj(m, zeros[m])))) for m in range(max_order + 1))
    if worst >= ZERO_RESIDUAL:
        raise ConvergenceError("zero residual above tolerance", residual=worst)
    zeros.setflags(write=False)
    return zeros


_master = {"zeros": None}
_master_lock = threading.Lock()


@lru_cache(maxsize=64)
def zero_table(max_order, max_index):
    """Cached immutable table of j_{m,n}, m <= max_order, n <= max_index.

    All tables are views of one shared master table that grows to cover
    the largest request seen so far.
    """
    max_order = _check_order(max_order)
    if max_order < 0 or int(max_index) < 1:
        raise DomainError("zero table needs max_order >= 0 and max_index >= 1")
    max_index = int(max_index)
    with _master_lock:
        master = _master["zeros"]
        if master is None or master.shape[0] <= max_order or master.shape[1] < max_index:
            top_m = max(max_order, -1 if master is None else master.shape[0] - 1)
            top_n = max(max_index, 0 if master is None else master.shape[1])
            if _mcmahon(0, top_n + top_m) > MAX_ARG:
                raise DomainError("zero table extends beyond the supported argument range")
            master = _build_zeros(top_m, top_n)
            _master["zeros"] = master
    return BesselZeroTable(max_order, max_index, master[: max_order + 1, :max_index])


def bessel_zero(m, n):
    """n-th positive zero j_{m,n} of J_m.

    Examples
    --------
    >>> round(bessel_zero(0, 1), 6)
    2.404826
    """
    m = abs(_check_order(m))
    if int(n) != n or n < 1:
        raise DomainError("zero index must be a positive integer")
    return zero_table(m, int(n))(m, int(n))


def zeros_below(max_order, x_max):
    """All zeros j_{m,n} < x_max with m <= max_order.

    Returns
    -------
    list of ndarray
        Entry m holds the zeros of J_m below ``x_max`` (possibly empty).
    """
    x_max = float(x_max)
    if not (0.0 < x_max <= MAX_ARG):
        raise DomainError("x_max must lie in (0, 5000]")
    # j_{m,1} > m, so orders above x_max contribute nothing
    top = min(_check_order(max_order), int(x_max))
    if top < 0:
        return []
    # lower bound j_{m,n} > m + n pi - pi/2 + 1/2 caps the index
    count = max(1, int((x_max + math.pi / 2 - 0.5) / math.pi) + 1)
    table = zero_table(top, count)
    out = [table.zeros[m][table.zeros[m] < x_max] for m in range(top + 1)]
    out += [np.empty(0)] * (int(max_order) - top)
    return out
