# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels.

Same algorithms and switch points as ``_fallback``: ascending series for
small arguments, Miller backward recurrence with sum normalisation in the
mid range, Hankel asymptotic expansions for large arguments.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cbrt, cos, exp, fabs, lgamma, log, sin, sqrt

cnp.import_array()

cdef double EULER_GAMMA = 0.57721566490153286061
cdef double PI = 3.14159265358979323846
cdef double BIG = 1e250
cdef double SMALL = 1e-250
cdef double ASYMPTOTIC_MIN_ARG = 25.0
cdef double SQRT_HALF = 0.70710678118654752440
cdef double[8] QCOS
cdef double[8] QSIN
QCOS[:] = [1.0, SQRT_HALF, 0.0, -SQRT_HALF, -1.0, -SQRT_HALF, 0.0, SQRT_HALF]
QSIN[:] = [0.0, SQRT_HALF, 1.0, SQRT_HALF, 0.0, -SQRT_HALF, -1.0, -SQRT_HALF]


cdef inline int miller_start(int nmax, double x) nogil:
    cdef double n = nmax if nmax > x else x
    cdef int start = <int>(n + 10.0 + 10.0 * cbrt(n))
    return start + (start % 2)


cdef inline bint use_asymptotic(int m, double x) nogil:
    cdef double lim = 0.5 * m * m
    if lim < ASYMPTOTIC_MIN_ARG:
        lim = ASYMPTOTIC_MIN_ARG
    return x >= lim


cdef double series_j(int m, double x) nogil:
    cdef double half = 0.5 * x
    cdef double term = exp(m * log(half) - lgamma(m + 1.0))
    cdef double total = term
    cdef double q = half * half
    cdef int k
    for k in range(1, 300):
        term = -term * q / (k * (k + m))
        total += term
        if fabs(term) <= 1e-17 * fabs(total):
            break
    return total


cdef void asymptotic_jy(int nu, double x, double* j, double* y) nogil:
    cdef double mu = 4.0 * nu * nu
    cdef double p = 1.0, q = 0.0, term = 1.0
    cdef int k, phase
    cdef double cx, sx, cchi, schi, amp
    for k in range(1, 120):
        term = term * ((mu - (2 * k - 1) * (2 * k - 1)) / (8.0 * k * x))
        if k % 2:
            if (k // 2) % 2 == 0:
                q += term
            else:
                q -= term
        else:
            if (k // 2) % 2 == 0:
                p += term
            else:
                p -= term
        if fabs(term) < 1e-17:
            break
    phase = (2 * nu + 1) % 8
    cx = cos(x)
    sx = sin(x)
    cchi = cx * QCOS[phase] + sx * QSIN[phase]
    schi = sx * QCOS[phase] - cx * QSIN[phase]
    amp = sqrt(2.0 / (PI * x))
    j[0] = amp * (p * cchi - q * schi)
    y[0] = amp * (p * schi + q * cchi)


cdef double miller_j(int m, double x) nogil:
    cdef double tox = 2.0 / x
    cdef int start = miller_start(m, x)
    cdef double bjp = 0.0, bj = 1.0, bjm, even_sum = 0.0, ans = 0.0
    cdef int j, idx
    for j in range(start, 0, -1):
        bjm = j * tox * bj - bjp
        bjp = bj
        bj = bjm
        idx = j - 1
        if idx == m:
            ans = bj
        if idx >= 2 and idx % 2 == 0:
            even_sum += bj
        if fabs(bj) > BIG:
            bj *= SMALL
            bjp *= SMALL
            even_sum *= SMALL
            ans *= SMALL
    return ans / (bj + 2.0 * even_sum)


cdef void neumann_jy01(double x, double* j0, double* y0, double* y1) nogil:
    cdef double tox = 2.0 / x
    cdef int start = miller_start(1, x)
    cdef double bjp = 0.0, bj = 1.0, bjm, even_sum = 0.0
    cdef double s0 = 0.0, s1 = 0.0, j1 = 0.0, norm, log_term, sgn
    cdef int j, idx, k
    for j in range(start, 0, -1):
        bjm = j * tox * bj - bjp
        bjp = bj
        bj = bjm
        idx = j - 1
        if idx == 1:
            j1 = bj
        if idx >= 2 and idx % 2 == 0:
            even_sum += bj
            k = idx // 2
            sgn = 1.0 if k % 2 == 0 else -1.0
            s0 += bj * sgn / k
        if idx % 2 == 1:
            k = (idx + 1) // 2
            if k == 1:
                s1 -= bj
            else:
                sgn = 1.0 if k % 2 == 0 else -1.0
                s1 += bj * sgn * (2 * k - 1) / (k * (k - 1.0))
        if fabs(bj) > BIG:
            bj *= SMALL
            bjp *= SMALL
            even_sum *= SMALL
            s0 *= SMALL
            s1 *= SMALL
            j1 *= SMALL
    norm = bj + 2.0 * even_sum
    log_term = log(0.5 * x) + EULER_GAMMA
    j0[0] = bj / norm
    y0[0] = (2.0 / PI) * (log_term * j0[0] - 2.0 * s0 / norm)
    y1[0] = (2.0 / PI) * (-j0[0] / x + log_term * j1 / norm + s1 / norm)


cdef double jn_scalar(int m, double x) nogil:
    cdef double j, y
    if x == 0.0:
        return 1.0 if m == 0 else 0.0
    if x * x < 4.0 * (m + 1):
        return series_j(m, x)
    if use_asymptotic(m, x):
        asymptotic_jy(m, x, &j, &y)
        return j
    return miller_j(m, x)


cdef void y01_scalar(double x, double* y0, double* y1) nogil:
    cdef double j, j0
    if x >= ASYMPTOTIC_MIN_ARG:
        asymptotic_jy(0, x, &j, y0)
        asymptotic_jy(1, x, &j, y1)
    else:
        neumann_jy01(x, &j0, y0, y1)


cdef double yn_scalar(int m, double x) nogil:
    cdef double y0, y1, prev, cur, nxt
    cdef int n
    y01_scalar(x, &y0, &y1)
    if m == 0:
        return y0
    prev = y0
    cur = y1
    for n in range(1, m):
        nxt = (2.0 * n / x) * cur - prev
        prev = cur
        cur = nxt
        if fabs(cur) > 1.7976931348623157e308:
            return -1.0 / 0.0
    return cur


# Order-0 specialisations for the Green's function sum.
DEF H0_TERMS = 12
DEF H0_MILLER_MAX = 128
cdef double[H0_TERMS] H0_P
cdef double[H0_TERMS] H0_Q
cdef double[H0_MILLER_MAX] NEU_S0
cdef double[H0_MILLER_MAX] NEU_S1


cdef void _init_tables():
    cdef int k, kk
    cdef double term = 1.0
    for k in range(H0_TERMS):
        H0_P[k] = 0.0
        H0_Q[k] = 0.0
    # coefficient of x**-k in P (even k) or Q (odd k)
    H0_P[0] = 1.0
    for k in range(1, 2 * H0_TERMS):
        term = term * (-(2 * k - 1) * (2 * k - 1)) / (8.0 * k)
        if k % 2:
            H0_Q[k // 2] = term if (k // 2) % 2 == 0 else -term
        else:
            H0_P[k // 2] = term if (k // 2) % 2 == 0 else -term
    for kk in range(H0_MILLER_MAX):
        NEU_S0[kk] = 0.0
        NEU_S1[kk] = 0.0
        if kk >= 2 and kk % 2 == 0:
            k = kk // 2
            NEU_S0[kk] = (1.0 if k % 2 == 0 else -1.0) / k
        elif kk % 2 == 1:
            k = (kk + 1) // 2
            if k == 1:
                NEU_S1[kk] = -1.0
            else:
                NEU_S1[kk] = (1.0 if k % 2 == 0 else -1.0) * (2 * k - 1) / (k * (k - 1.0))


_init_tables()


cdef inline void asymptotic_h0(double x, double* re, double* im) nogil:
    cdef double w = 1.0 / (x * x)
    cdef double p = 0.0, q = 0.0
    cdef int k
    # P = sum H0_P[k] x^{-2k}, Q = x^{-1} sum H0_Q[k] x^{-2k}
    for k in range(H0_TERMS - 1, -1, -1):
        p = p * w + H0_P[k]
        q = q * w + H0_Q[k]
    q = q / x
    cdef double cx = cos(x), sx = sin(x)
    # chi = x - pi/4
    cdef double cchi = SQRT_HALF * (cx + sx)
    cdef double schi = SQRT_HALF * (sx - cx)
    cdef double amp = sqrt(2.0 / (PI * x))
    re[0] = amp * (p * cchi - q * schi)
    im[0] = amp * (p * schi + q * cchi)


cdef inline void miller_h0(double x, double* re, double* im) nogil:
    cdef double tox = 2.0 / x
    cdef int start = miller_start(1, x)
    cdef double bjp = 0.0, bj = 1.0, bjm, even_sum = 0.0, s0 = 0.0, s1 = 0.0
    cdef double norm, log_term
    cdef int j
    if start + 1 >= H0_MILLER_MAX:
        neumann_jy01(x, re, im, &norm)
        return
    # start is even: alternate odd-index and even-index steps
    j = start
    while j > 1:
        bjm = j * tox * bj - bjp
        bjp = bj
        bj = bjm
        s1 += NEU_S1[j - 1] * bj
        bjm = (j - 1) * tox * bj - bjp
        bjp = bj
        bj = bjm
        if j > 2:
            even_sum += bj
            s0 += NEU_S0[j - 2] * bj
        if fabs(bj) > BIG:
            bj *= SMALL
            bjp *= SMALL
            even_sum *= SMALL
            s0 *= SMALL
            s1 *= SMALL
        j -= 2
    norm = bj + 2.0 * even_sum
    log_term = log(0.5 * x) + EULER_GAMMA
    re[0] = bj / norm
    im[0] = (2.0 / PI) * (log_term * re[0] - 2.0 * s0 / norm)


cdef inline void hankel0_scalar(double z, double* re, double* im) nogil:
    if z >= ASYMPTOTIC_MIN_ARG:
        asymptotic_h0(z, re, im)
    else:
        miller_h0(z, re, im)


def besselj(int m, x):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty(n)
    cdef double[::1] ov = out
    with nogil:
        for i in range(n):
            ov[i] = jn_scalar(m, xv[i])
    return out


def bessely(int m, x):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty(n)
    cdef double[::1] ov = out
    with nogil:
        for i in range(n):
            ov[i] = yn_scalar(m, xv[i])
    return out


def besselj_orders(int mmax, x):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.zeros((mmax + 1, n))
    cdef double[:, ::1] ov = out
    cdef double tox, bjp, bj, bjm, even_sum, norm, xi
    cdef int j, idx, start, r
    with nogil:
        for i in range(n):
            xi = xv[i]
            if xi == 0.0:
                ov[0, i] = 1.0
                continue
            tox = 2.0 / xi
            start = miller_start(mmax, xi)
            bjp = 0.0
            bj = 1.0
            even_sum = 0.0
            for j in range(start, 0, -1):
                bjm = j * tox * bj - bjp
                bjp = bj
                bj = bjm
                idx = j - 1
                if idx <= mmax:
                    ov[idx, i] = bj
                if idx >= 2 and idx % 2 == 0:
                    even_sum += bj
                if fabs(bj) > BIG:
                    bj *= SMALL
                    bjp *= SMALL
                    even_sum *= SMALL
                    for r in range(idx, mmax + 1):
                        ov[r, i] *= SMALL
            norm = bj + 2.0 * even_sum
            for r in range(mmax + 1):
                ov[r, i] /= norm
    return out


def bessely_orders(int mmax, x):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty((mmax + 1, n))
    cdef double[:, ::1] ov = out
    cdef double y0, y1, xi
    cdef int r
    with nogil:
        for i in range(n):
            xi = xv[i]
            y01_scalar(xi, &y0, &y1)
            ov[0, i] = y0
            if mmax >= 1:
                ov[1, i] = y1
            for r in range(1, mmax):
                ov[r + 1, i] = (2.0 * r / xi) * ov[r, i] - ov[r - 1, i]
    return out


def hankel0(z):
    cdef const double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t n = zv.shape[0], i
    re = np.empty(n)
    im = np.empty(n)
    cdef double[::1] rv = re
    cdef double[::1] iv = im
    with nogil:
        for i in range(n):
            hankel0_scalar(zv[i], &rv[i], &iv[i])
    return re + 1j * im


def green_sum(double k, bx, by, nx, ny, w):
    warr = np.asarray(w, dtype=np.complex128)
    single = warr.ndim == 1
    if single:
        warr = warr[:, None]
    cdef const double[::1] bxv = np.ascontiguousarray(bx, dtype=np.float64)
    cdef const double[::1] byv = np.ascontiguousarray(by, dtype=np.float64)
    cdef const double[::1] nxv = np.ascontiguousarray(nx, dtype=np.float64)
    cdef const double[::1] nyv = np.ascontiguousarray(ny, dtype=np.float64)
    cdef const double[:, ::1] wre = np.ascontiguousarray(warr.real)
    cdef const double[:, ::1] wim = np.ascontiguousarray(warr.imag)
    cdef Py_ssize_t nb = bxv.shape[0], nn = nxv.shape[0], nr = wre.shape[1], p, q, r
    out_re = np.zeros((nb, nr))
    out_im = np.zeros((nb, nr))
    cdef double[:, ::1] orv = out_re
    cdef double[:, ::1] oiv = out_im
    cdef double hr, hi, dx, dy
    with nogil:
        for p in range(nb):
            for q in range(nn):
                dx = bxv[p] - nxv[q]
                dy = byv[p] - nyv[q]
                hankel0_scalar(k * sqrt(dx * dx + dy * dy), &hr, &hi)
                for r in range(nr):
                    orv[p, r] += hr * wre[q, r] - hi * wim[q, r]
                    oiv[p, r] += hr * wim[q, r] + hi * wre[q, r]
    out = out_re + 1j * out_im
    return out[:, 0] if single else out
