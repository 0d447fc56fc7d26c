"""Change of basis from Fourier-Bessel to SVE coefficients.

Row i of block m pairs the basis functions phi_{m,n} with the right
singular function psi_m at the frequency k~_{m,i} assigned to (m, i):

    K_m[i, n] = (phi_{m,n}, psi_m^{k~_{m,i}})
              = -sign(J_{m+1}(j_{m,n})) 2 J_m(k~ R0) / (R0 A_m(k~ R0)) * k_{m,n} / (k~^2 - k_{m,n}^2)

The negative-order block equals the positive one, so K is stored as M+1
real N x N blocks.
"""

import csv
import math

import numpy as np
import scipy.linalg

from . import fbbasis, specfun
from .errors import SolveError, UsageError, VanishingSingularValueError

NEAR_DIAGONAL = 1e-6
RESIDUAL_TOL = 1e-10


def radial_overlap(m, n, k, R0):
    """integral_0^R0 J_m(k_{m,n} r) J_m(k r) r dr, with k_{m,n} = j_{m,n}/R0.

    Uses the Lommel closed form; within 1e-6 of the zero (in k R0) a second
    order expansion around the zero replaces the 0/0 quotient.
    """
    m = abs(int(m))
    j = specfun.bessel_zero(m, n)
    jp = specfun.bessel_j(m + 1, j)
    x = float(k) * R0
    eps = x - j
    if abs(eps) < NEAR_DIAGONAL:
        # J_m(x) / (j^2 - x^2) ~ J_{m+1}(j) (1 - eps/(2j)) / (2j + eps)
        ratio = jp * (1.0 - eps / (2.0 * j)) / (2.0 * j + eps)
    else:
        ratio = specfun.bessel_j(m, x) / (j * j - x * x)
    return R0 * R0 * j * jp * ratio


def fb_overlap(m, n, k, R0):
    """(phi_{m,n}, J_m(k r) e^{i m theta})_{L^2(D0)}; same value for -m."""
    c = fbbasis.normalization(m, n, R0)
    return 2.0 * math.pi * c * radial_overlap(m, n, k, R0)


def k_entry(m, n, k_tilde, R0):
    """(phi_{m,n}, psi_m^{k_tilde}) in closed form.

    Parameters
    ----------
    m : int
        Angular order (the sign is irrelevant).
    n : int
        Radial index of the basis function.
    k_tilde : float
        Frequency of the singular function.
    R0 : float

    Raises
    ------
    VanishingSingularValueError
        If A_m(k_tilde R0) is zero.
    """
    if not k_tilde > 0:
        raise UsageError("k_tilde must be positive")
    a = specfun.coupling_norm(m, k_tilde * R0)
    if a == 0.0:
        raise VanishingSingularValueError(f"A_{abs(m)}({k_tilde * R0}) vanishes")
    return fb_overlap(m, n, k_tilde, R0) / (math.sqrt(math.pi) * R0 * a)


class KMatrix:
    """Block-diagonal matrix with blocks K_0, K_1, ..., K_M (K_{-m} = K_m).

    Attributes
    ----------
    M, N : int
    blocks : ndarray, shape (M+1, N, N)
        ``blocks[m]`` is K_m; read-only.
    """

    def __init__(self, M, N, blocks):
        blocks = np.array(blocks, dtype=float)
        if blocks.shape != (M + 1, N, N):
            raise UsageError(f"blocks shape {blocks.shape} != {(M + 1, N, N)}")
        if not np.all(np.isfinite(blocks)):
            raise UsageError("K entries must be finite")
        blocks.setflags(write=False)
        self.M, self.N, self.blocks = int(M), int(N), blocks
        self._lu = {}

    @classmethod
    def identity(cls, M, N):
        return cls(M, N, np.broadcast_to(np.eye(N), (M + 1, N, N)))

    def block(self, m):
        return self.blocks[abs(int(m))]

    def dense(self):
        """Full (2M+1)N square matrix in coefficient order."""
        M, N = self.M, self.N
        out = np.zeros((fbbasis.dimension(M, N),) * 2)
        for m in range(-M, M + 1):
            p = fbbasis.pack_index(m, 1, M, N)
            out[p : p + N, p : p + N] = self.block(m)
        return out

    def matvec(self, s):
        s = np.asarray(s)
        self._check_vector(s)
        out = np.empty_like(s, dtype=np.result_type(s, float))
        for m in range(-self.M, self.M + 1):
            p = fbbasis.pack_index(m, 1, self.M, self.N)
            out[p : p + self.N] = self.block(m) @ s[p : p + self.N]
        return out

    def _check_vector(self, v):
        if v.shape != (fbbasis.dimension(self.M, self.N),):
            raise UsageError(f"vector length {v.shape} does not match K of size {(2 * self.M + 1) * self.N}")

    def _factor(self, m):
        m = abs(m)
        if m not in self._lu:
            self._lu[m] = scipy.linalg.lu_factor(self.blocks[m], check_finite=False)
        return self._lu[m]


def assemble(plan):
    """K for a frequency plan: row i of block m uses k~ = plan.assigned(m, i)."""
    M, N, R0 = plan.M, plan.N, plan.R0
    blocks = np.empty((M + 1, N, N))
    for m in range(M + 1):
        for i in range(1, N + 1):
            kt = plan.assigned(m, i)
            for n in range(1, N + 1):
                blocks[m, i - 1, n - 1] = k_entry(m, n, kt, R0)
    return KMatrix(M, N, blocks)


def dominance_report(K):
    """Row margins |a_ii| - sum_{j != i} |a_ij| as an (M+1, N) array."""
    b = np.abs(np.asarray(K.blocks if isinstance(K, KMatrix) else K, dtype=float))
    if b.ndim == 2:
        b = b[None]
    diag = np.diagonal(b, axis1=1, axis2=2)
    return 2.0 * diag - b.sum(axis=2)


def solve(K, u_hat):
    """Solve K s = u block by block.

    Raises
    ------
    SolveError
        If a block is numerically singular or the residual check fails;
        the error carries the dominance margins.
    """
    u = np.asarray(u_hat, dtype=complex)
    K._check_vector(u)
    M, N = K.M, K.N
    s = np.empty_like(u)
    with np.errstate(all="ignore"):
        for m in range(-M, M + 1):
            p = fbbasis.pack_index(m, 1, M, N)
            lu = K._factor(m)
            if np.any(np.diag(lu[0]) == 0.0):
                raise SolveError(f"block {m} is singular", margins=dominance_report(K))
            s[p : p + N] = scipy.linalg.lu_solve(lu, u[p : p + N], check_finite=False)
    if not np.all(np.isfinite(s)):
        raise SolveError("non-finite solution", margins=dominance_report(K))
    scale = np.max(np.abs(u)) if u.size else 0.0
    resid = np.max(np.abs(K.matvec(s) - u)) if u.size else 0.0
    if resid > RESIDUAL_TOL * max(scale, np.finfo(float).tiny):
        raise SolveError(f"residual {resid:.3e} exceeds tolerance", margins=dominance_report(K))
    return s


def write_csv(path, K):
    """Dump blocks and row margins as rows (m, i, n, value) and (m, i, margin)."""
    margins = dominance_report(K)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "m", "i", "n", "value"])
        for m in range(K.M + 1):
            for i in range(K.N):
                for n in range(K.N):
                    w.writerow(["entry", m, i + 1, n + 1, f"{K.blocks[m, i, n]:.17g}"])
                w.writerow(["margin", m, i + 1, "", f"{margins[m, i]:.17g}"])
