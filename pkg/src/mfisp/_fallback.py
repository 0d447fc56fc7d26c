"""Pure NumPy implementations of the numerical kernels.

Every function here has a twin with the same signature in the compiled
``_kernels`` extension; ``_backend`` picks one at import time.  Inputs are
assumed validated by the caller (``specfun``): orders are non-negative
integers and arguments are finite, non-negative float64 arrays.
"""

import math

import numpy as np

EULER_GAMMA = 0.57721566490153286061
_BIG = 1e250
_SMALL = 1e-250
_SQRT_HALF = math.sqrt(0.5)
# cos/sin of q*pi/4 for q = 0..7
_QUARTER_COS = (1.0, _SQRT_HALF, 0.0, -_SQRT_HALF, -1.0, -_SQRT_HALF, 0.0, _SQRT_HALF)
_QUARTER_SIN = (0.0, _SQRT_HALF, 1.0, _SQRT_HALF, 0.0, -_SQRT_HALF, -1.0, -_SQRT_HALF)

ASYMPTOTIC_MIN_ARG = 25.0


def miller_start(nmax, xmax):
    """Even starting index for the backward recurrence."""
    n = max(float(nmax), float(xmax))
    start = int(n + 10.0 + 10.0 * n ** (1.0 / 3.0))
    return start + (start % 2)


def use_asymptotic(m, x):
    return x >= max(ASYMPTOTIC_MIN_ARG, 0.5 * m * m)


def use_series(m, x):
    return x * x < 4.0 * (m + 1)


def _series_j(m, x):
    half = 0.5 * x
    term = np.exp(m * np.log(half) - math.lgamma(m + 1.0))
    total = term.copy()
    q = half * half
    for k in range(1, 300):
        term = -term * q / (k * (k + m))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def _asymptotic_pq(nu, x):
    mu = 4.0 * nu * nu
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    for k in range(1, 120):
        term = term * ((mu - (2 * k - 1) ** 2) / (8.0 * k * x))
        if k % 2:
            q += term if (k // 2) % 2 == 0 else -term
        else:
            p += term if (k // 2) % 2 == 0 else -term
        if np.all(np.abs(term) < 1e-17):
            break
    return p, q


def _asymptotic_jy(nu, x):
    p, q = _asymptotic_pq(nu, x)
    phase = (2 * nu + 1) % 8
    cx, sx = np.cos(x), np.sin(x)
    cchi = cx * _QUARTER_COS[phase] + sx * _QUARTER_SIN[phase]
    schi = sx * _QUARTER_COS[phase] - cx * _QUARTER_SIN[phase]
    amp = np.sqrt(2.0 / (np.pi * x))
    return amp * (p * cchi - q * schi), amp * (p * schi + q * cchi)


def _miller(x, mmax, keep_all, neumann):
    """Backward recurrence for J_0..J_mmax at every positive ``x``.

    Returns ``(rows, j0, j1, s0, s1)``; ``rows`` has shape (mmax+1, n) when
    ``keep_all`` else (1, n) holding order ``mmax`` only.  ``s0``/``s1`` are
    the normalised Neumann sums used by ``_neumann_y01`` (None unless
    requested).
    """
    n = x.size
    tox = 2.0 / x
    start = miller_start(mmax, x.max())
    rows = np.zeros((mmax + 1 if keep_all else 1, n))
    bjp = np.zeros(n)
    bj = np.ones(n)
    even_sum = np.zeros(n)
    s0 = np.zeros(n) if neumann else None
    s1 = np.zeros(n) if neumann else None
    j1 = np.zeros(n)
    for j in range(start, 0, -1):
        bjm = j * tox * bj - bjp
        bjp = bj
        bj = bjm
        idx = j - 1
        if idx <= mmax:
            if keep_all:
                rows[idx] = bj
            elif idx == mmax:
                rows[0] = bj
        if idx == 1:
            j1 = bj.copy()
        if idx >= 2 and idx % 2 == 0:
            even_sum += bj
            if neumann:
                k = idx // 2
                s0 += bj * ((-1.0) ** k / k)
        if neumann and idx % 2 == 1:
            k = (idx + 1) // 2
            if k == 1:
                s1 -= bj
            else:
                s1 += bj * ((-1.0) ** k * (2 * k - 1) / (k * (k - 1)))
        big = np.abs(bj) > _BIG
        if big.any():
            bj = np.where(big, bj * _SMALL, bj)
            bjp = np.where(big, bjp * _SMALL, bjp)
            even_sum = np.where(big, even_sum * _SMALL, even_sum)
            j1 = np.where(big, j1 * _SMALL, j1)
            rows[:, big] *= _SMALL
            if neumann:
                s0 = np.where(big, s0 * _SMALL, s0)
                s1 = np.where(big, s1 * _SMALL, s1)
    norm = bj + 2.0 * even_sum
    rows /= norm
    j0 = bj / norm
    j1 = j1 / norm
    if neumann:
        s0 = s0 / norm
        s1 = s1 / norm
    return rows, j0, j1, s0, s1


def _neumann_y01(x):
    _, j0, j1, s0, s1 = _miller(x, 1, keep_all=False, neumann=True)
    log_term = np.log(0.5 * x) + EULER_GAMMA
    y0 = (2.0 / np.pi) * (log_term * j0 - 2.0 * s0)
    y1 = (2.0 / np.pi) * (-j0 / x + log_term * j1 + s1)
    return j0, y0, y1


def _y01(x):
    y0 = np.empty_like(x)
    y1 = np.empty_like(x)
    asy = x >= ASYMPTOTIC_MIN_ARG
    if asy.any():
        y0[asy] = _asymptotic_jy(0, x[asy])[1]
        y1[asy] = _asymptotic_jy(1, x[asy])[1]
    low = ~asy
    if low.any():
        _, y0[low], y1[low] = _neumann_y01(x[low])
    return y0, y1


def besselj(m, x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(x)
    zero = x == 0.0
    out[zero] = 1.0 if m == 0 else 0.0
    ser = ~zero & use_series(m, x)
    asy = ~zero & ~ser & use_asymptotic(m, x)
    mil = ~(zero | ser | asy)
    if ser.any():
        out[ser] = _series_j(m, x[ser])
    if asy.any():
        out[asy] = _asymptotic_jy(m, x[asy])[0]
    if mil.any():
        out[mil] = _miller(x[mil], m, keep_all=False, neumann=False)[0][0]
    return out


def bessely(m, x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y0, y1 = _y01(x)
    if m == 0:
        return y0
    prev, cur = y0, y1
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, m):
            prev, cur = cur, (2.0 * n / x) * cur - prev
            # Y_n diverges to -inf once the recurrence overflows
            cur = np.where(np.isfinite(cur), cur, -np.inf)
    return cur


def besselj_orders(mmax, x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.zeros((mmax + 1, x.size))
    zero = x == 0.0
    out[0, zero] = 1.0
    pos = ~zero
    if pos.any():
        out[:, pos] = _miller(x[pos], mmax, keep_all=True, neumann=False)[0]
    return out


def bessely_orders(mmax, x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty((mmax + 1, x.size))
    y0, y1 = _y01(x)
    out[0] = y0
    if mmax >= 1:
        out[1] = y1
    for n in range(1, mmax):
        out[n + 1] = (2.0 * n / x) * out[n] - out[n - 1]
    return out


def hankel0(z):
    """H_0^(1) at positive arguments (J_0 and Y_0 from one pass)."""
    z = np.ascontiguousarray(z, dtype=np.float64)
    j0 = np.empty_like(z)
    y0 = np.empty_like(z)
    asy = z >= ASYMPTOTIC_MIN_ARG
    if asy.any():
        j0[asy], y0[asy] = _asymptotic_jy(0, z[asy])
    low = ~asy
    if low.any():
        j0[low], y0[low], _ = _neumann_y01(z[low])
    return j0 + 1j * y0


def green_sum(k, bx, by, nx, ny, w, chunk=8):
    """sum_j w_j H_0^(1)(k |b_p - n_j|) for every boundary point b_p.

    ``w`` may be 2-D (nodes x right-hand sides); the kernel is then
    evaluated once and applied to every column.
    """
    bx = np.asarray(bx, dtype=np.float64)
    by = np.asarray(by, dtype=np.float64)
    nx = np.asarray(nx, dtype=np.float64)
    ny = np.asarray(ny, dtype=np.float64)
    w = np.asarray(w, dtype=np.complex128)
    out = np.empty((bx.size,) + w.shape[1:], dtype=np.complex128)
    for lo in range(0, bx.size, chunk):
        hi = min(lo + chunk, bx.size)
        d = np.hypot(bx[lo:hi, None] - nx[None, :], by[lo:hi, None] - ny[None, :])
        h = hankel0((k * d).ravel()).reshape(d.shape)
        out[lo:hi] = h @ w
    return out
