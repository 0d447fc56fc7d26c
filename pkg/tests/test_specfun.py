import math

import mpmath
import numpy as np
import pytest
import scipy.special as sp

from mfisp import specfun
from mfisp.errors import DomainError

mpmath.mp.dps = 30


@pytest.mark.parametrize("m", [0, 1, 2, 5, 17, 60])
@pytest.mark.parametrize("x", [1e-3, 0.7, 3.2, 12.5, 48.0, 230.0])
def test_bessel_j_matches_mpmath(m, x):
    ref = float(mpmath.besselj(m, x))
    assert specfun.bessel_j(m, x) == pytest.approx(ref, rel=1e-11, abs=1e-15)


@pytest.mark.parametrize("m", [0, 1, 3, 9, 30])
@pytest.mark.parametrize("x", [0.05, 1.0, 7.7, 40.0, 333.0])
def test_bessel_y_matches_mpmath(m, x):
    ref = float(mpmath.bessely(m, x))
    assert specfun.bessel_y(m, x) == pytest.approx(ref, rel=1e-10)


def test_reflection_for_negative_orders():
    x = np.linspace(0.1, 20, 17)
    for m in range(1, 6):
        np.testing.assert_allclose(specfun.bessel_j(-m, x), (-1) ** m * specfun.bessel_j(m, x))
        np.testing.assert_allclose(specfun.hankel1(-m, x), (-1) ** m * specfun.hankel1(m, x))


def test_array_shape_preserved():
    x = np.linspace(0.5, 9, 12).reshape(3, 4)
    assert specfun.bessel_j(2, x).shape == (3, 4)
    assert isinstance(specfun.bessel_j(2, 1.5), float)
    assert specfun.bessel_j_orders(6, x).shape == (7, 3, 4)


def test_orders_table_matches_individual():
    x = np.array([0.3, 4.0, 25.0])
    tab = specfun.bessel_j_orders(40, x)
    for m in (0, 7, 40):
        np.testing.assert_allclose(tab[m], sp.jv(m, x), rtol=1e-10, atol=1e-300)


def test_derivative_matches_mpmath():
    for m, x in [(0, 2.0), (3, 5.5), (8, 11.0)]:
        ref = float(mpmath.besselj(m, x, derivative=1))
        assert specfun.bessel_j_derivative(m, x) == pytest.approx(ref, rel=1e-10)


def test_hankel_combines_j_and_y():
    for n in (0, 2, 11):
        h = specfun.hankel1(n, 6.3)
        ref = complex(mpmath.hankel1(n, 6.3))
        assert abs(h - ref) < 1e-11 * abs(ref)


@pytest.mark.parametrize("n,kappa", [(0, 0.4), (1, 2.0), (4, 3.3), (12, 9.0), (3, 30.0)])
def test_coupling_norm_is_scaled_radial_integral(n, kappa):
    # A_n(kappa)^2 = 2/kappa^2 * int_0^kappa J_n(t)^2 t dt
    integral = mpmath.quad(lambda t: mpmath.besselj(n, t) ** 2 * t, [0, kappa])
    ref = math.sqrt(2.0 * float(integral)) / kappa
    assert specfun.coupling_norm(n, kappa) == pytest.approx(ref, rel=1e-9)


def test_domain_errors():
    with pytest.raises(DomainError):
        specfun.bessel_j(1.5, 2.0)
    with pytest.raises(DomainError):
        specfun.bessel_j(1, -1.0)
    with pytest.raises(DomainError):
        specfun.bessel_y(0, 0.0)
    with pytest.raises(DomainError):
        specfun.bessel_j(specfun.MAX_ORDER + 1, 1.0)
    with pytest.raises(DomainError):
        specfun.bessel_j(0, float("nan"))


def test_zero_table_against_scipy():
    tab = specfun.zero_table(30, 30)
    for m in (0, 1, 7, 30):
        np.testing.assert_allclose(tab.order(m), sp.jn_zeros(m, 30), rtol=1e-12)


def test_zero_residuals_small():
    tab = specfun.zero_table(20, 20)
    for m in range(21):
        vals = specfun.bessel_j(m, tab.order(m))
        assert np.max(np.abs(vals)) < specfun.ZERO_RESIDUAL


def test_table_invariants_and_known_zero():
    tab = specfun.zero_table(50, 50)
    assert all(tab.check_invariants().values())
    assert tab(0, 1) == pytest.approx(2.404825557695773, abs=1e-12)
    assert specfun.bessel_zero(-3, 2) == tab(3, 2)


def test_table_is_read_only_and_digest_stable():
    tab = specfun.zero_table(5, 5)
    with pytest.raises(ValueError):
        tab.zeros[0, 0] = 1.0
    assert tab.digest() == specfun.zero_table(5, 5).digest()


def test_zeros_below_counts():
    zs = specfun.zeros_below(10, 20.0)
    for m, z in enumerate(zs):
        ref = sp.jn_zeros(m, 20)
        assert z.size == np.count_nonzero(ref < 20.0)
        assert np.all(z < 20.0)


def test_small_argument_values():
    assert specfun.bessel_j(0, 0.0) == 1.0
    assert specfun.bessel_j(3, 0.0) == 0.0
    assert abs(specfun.bessel_j(0, 2.4048)) < 5e-4


@pytest.mark.parametrize("n", [1, 2, 6, 20])
def test_wronskian(n):
    x = np.linspace(0.3, 60, 50)
    w = specfun.bessel_j(n + 1, x) * specfun.bessel_y(n, x) - specfun.bessel_j(n, x) * specfun.bessel_y(n + 1, x)
    np.testing.assert_allclose(w, 2 / (np.pi * x), rtol=1e-10)


def test_derivative_identities():
    assert specfun.bessel_j_derivative(0, 1.0) == pytest.approx(-specfun.bessel_j(1, 1.0), rel=1e-14)
    j = specfun.bessel_zero(4, 3)
    assert specfun.bessel_j_derivative(4, j) == pytest.approx(-specfun.bessel_j(5, j), rel=1e-12)
    h = 1e-6
    fd = (specfun.bessel_j(2, 3.7 + h) - specfun.bessel_j(2, 3.7 - h)) / (2 * h)
    assert abs(specfun.bessel_j_derivative(2, 3.7) - fd) < 1e-7


def test_j0_against_long_series():
    # 200-term power series in exact rationals
    from fractions import Fraction

    term, total = Fraction(1), Fraction(1)
    for k in range(1, 200):
        term *= Fraction(-1, 4 * k * k)
        total += term
    assert specfun.bessel_j(0, 1.0) == pytest.approx(float(total), rel=1e-15)


def test_hankel0_imaginary_part_is_y0():
    x = np.logspace(-3, 3, 40)
    np.testing.assert_allclose(specfun.hankel1(0, x).imag, specfun.bessel_y(0, x), rtol=1e-12)


def test_second_zero_against_bisection():
    lo, hi = 3.0, 7.0
    f = lambda x: float(mpmath.besselj(0, x))  # noqa: E731
    # [3, 7] brackets only j_{0,2}
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if f(lo) * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    assert specfun.bessel_zero(0, 2) == pytest.approx(0.5 * (lo + hi), abs=1e-9)


def test_lower_bound_on_zeros():
    tab = specfun.zero_table(50, 50)
    m = np.arange(51)[:, None]
    n = np.arange(1, 51)[None, :]
    assert np.all(tab.zeros > m + n * np.pi - np.pi / 2 + 0.5)


def test_coupling_norm_at_zero_and_sign():
    j = specfun.bessel_zero(0, 1)
    assert specfun.coupling_norm(0, j) == pytest.approx(abs(specfun.bessel_j(1, j)), abs=1e-6)
    for m, n in [(2, 1), (5, 4)]:
        jm = specfun.bessel_zero(m, n)
        assert specfun.coupling_norm(m, jm) == pytest.approx(abs(specfun.bessel_j(m + 1, jm)), rel=1e-10)
    kap = np.linspace(0.01, 40, 300)
    for n in range(6):
        assert np.all(specfun.coupling_norm(n, kap) >= 0)
