"""Closed-form singular system of the single-frequency forward operator.

For the disc D0 = {|y| < R0} and boundary samples on the circle |x| = R the
operator

    (F_k s)(x) = integral_{D0} G_k(x, y) s(y) dy,   G_k = -(i/4) H_0^(1)(k|x-y|)

has singular triples (sigma_n, psi_n, phi_n), n in Z, with

    psi_n(r, t) = J_n(k r) e^{int} / (sqrt(pi) R0 A_n(k R0))
    phi_n(t)    = e^{i arg(-i H_n(kR))} e^{int} / sqrt(2 pi R)
    sigma_n     = |GREEN_FACTOR| sqrt(2R) pi R0 |H_n(kR)| A_n(k R0)

The factor |GREEN_FACTOR| = 1/4 and the phase -i come from the -(i/4)
normalisation of the Green's function, so that F_k psi_n = sigma_n phi_n
holds exactly for the operator that ``forward`` simulates.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import specfun
from .errors import DomainError, UsageError, VanishingSingularValueError

GREEN_FACTOR = -0.25j
VANISHING_RATIO = 1e-13
RULES = ("trapezoid", "simpson")


@dataclass(frozen=True)
class SingularSystem:
    """Geometry and frequency of one forward operator.

    Attributes
    ----------
    k : float
        Wavenumber (> 0).
    R : float
        Measurement radius.
    R0 : float
        Source-disc radius, strictly below ``R``.
    """

    k: float
    R: float
    R0: float

    def __post_init__(self):
        if not (self.k > 0 and math.isfinite(self.k)):
            raise DomainError(f"wavenumber must be positive, got {self.k}")
        if not (0 < self.R0 < self.R):
            raise DomainError(f"need 0 < R0 < R, got R0={self.R0}, R={self.R}")

    @property
    def kappa(self):
        return self.k * self.R

    @property
    def kappa0(self):
        return self.k * self.R0


def singular_value(n, sys):
    """sigma_n for the system ``sys``; sigma_{-n} = sigma_n.

    Examples
    --------
    >>> s = SingularSystem(3.0, 1.5, 1.0)
    >>> singular_value(2, s) == singular_value(-2, s)
    True
    """
    n = abs(int(n))
    h = abs(specfun.hankel1(n, sys.kappa))
    a = specfun.coupling_norm(n, sys.kappa0)
    return abs(GREEN_FACTOR) * math.sqrt(2.0 * sys.R) * math.pi * sys.R0 * h * a


def singular_values(n_max, sys):
    """sigma_0..sigma_{n_max} as an array."""
    return np.array([singular_value(n, sys) for n in range(int(n_max) + 1)])


def vanishing_threshold(sys):
    return VANISHING_RATIO * max(singular_value(0, sys), 1.0)


def eval_psi(n, sys, r, theta):
    """Right singular function psi_n on the source disc (broadcasting)."""
    r, theta = np.broadcast_arrays(np.asarray(r, float), np.asarray(theta, float))
    if np.any(r < 0) or np.any(r > sys.R0 * (1 + 1e-12)):
        raise DomainError("psi is defined for 0 <= r <= R0")
    a = specfun.coupling_norm(n, sys.kappa0)
    if a == 0.0:
        raise VanishingSingularValueError(f"A_{n}(k R0) vanishes at k={sys.k}")
    val = np.asarray(specfun.bessel_j(n, sys.k * r)) * np.exp(1j * n * theta)
    val = val / (math.sqrt(math.pi) * sys.R0 * a)
    return val[()] if val.ndim == 0 else val


def phase(n, sys):
    """Unit complex number e^{i arg(-i H_n(kR))}."""
    h = GREEN_FACTOR * specfun.hankel1(int(n), sys.kappa)
    return complex(np.exp(1j * math.atan2(h.imag, h.real)))


def eval_phi(n, sys, theta):
    """Left singular function phi_n on the measurement circle."""
    theta = np.asarray(theta, float)
    val = phase(n, sys) * np.exp(1j * int(n) * theta) / math.sqrt(2.0 * math.pi * sys.R)
    return val[()] if val.ndim == 0 else val


def quadrature_weights(P, R, rule="trapezoid"):
    """Weights for the integral over the circle of radius R from P uniform samples.

    ``simpson`` is the periodic composite Simpson rule (P even).
    """
    if rule not in RULES:
        raise UsageError(f"unknown quadrature rule {rule!r}")
    h = 2.0 * math.pi * R / P
    if rule == "trapezoid":
        return np.full(P, h)
    if P % 2:
        raise UsageError("Simpson's rule needs an even sample count")
    return np.where(np.arange(P) % 2 == 0, 2.0 * h / 3.0, 4.0 * h / 3.0)


def boundary_inner(samples, order, sys, rule="trapezoid"):
    """(U, phi_order) over the circle of radius ``sys.R``."""
    samples = np.asarray(samples, dtype=complex)
    P = samples.size
    theta = 2.0 * math.pi * np.arange(P) / P
    w = quadrature_weights(P, sys.R, rule)
    return complex(np.sum(w * samples * np.conj(eval_phi(order, sys, theta))))


def alias_limit(P):
    return P // 2 - 1


def extract_coefficient(meas, order, R0, rule="trapezoid"):
    """SVE coefficient (U, phi_order) / sigma_|order| from one measurement.

    Parameters
    ----------
    meas : Measurement
        Boundary samples at wavenumber ``meas.k`` on radius ``meas.R``.
    order : int
        Angular order i with |i| <= P/2 - 1.
    R0 : float
        Source-disc radius.
    rule : {"trapezoid", "simpson"}

    Raises
    ------
    UsageError
        If |order| exceeds the alias limit of the sample count.
    VanishingSingularValueError
        If sigma_|order| is below 1e-13 * max(sigma_0, 1).
    """
    order = int(order)
    if abs(order) > alias_limit(meas.P):
        raise UsageError(f"order {order} exceeds alias limit {alias_limit(meas.P)} for P={meas.P}")
    sys = SingularSystem(meas.k, meas.R, R0)
    sigma = singular_value(order, sys)
    if not sigma >= vanishing_threshold(sys):
        raise VanishingSingularValueError(
            f"sigma_{abs(order)} = {sigma:.3e} at k={meas.k} is below the vanishing threshold"
        )
    return boundary_inner(meas.samples, order, sys, rule) / sigma


def bandwidth_lower(k, R0):
    """Smallest m >= 0 with j_{m,1} >= k R0.

    Examples
    --------
    >>> bandwidth_lower(1.0, 1.0)
    0
    >>> bandwidth_lower(specfun.bessel_zero(1, 1), 1.0)
    1
    """
    kr = float(k) * float(R0)
    if not (kr > 0 and math.isfinite(kr)):
        raise DomainError("bandwidth_lower needs k R0 > 0")
    # j_{m,1} > m, so the answer is at most ceil(k R0)
    top = min(int(math.ceil(kr)) + 1, specfun.MAX_ORDER)
    first = specfun.zero_table(top, 1).zeros[:, 0]
    hits = np.flatnonzero(first >= kr)
    if hits.size == 0:
        raise DomainError(f"k R0 = {kr} beyond the supported order range")
    return int(hits[0])
