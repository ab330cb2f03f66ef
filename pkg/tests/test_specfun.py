import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from conftest import random_model
from sl2lyap import specfun as sf
from sl2lyap.coeffs import DisorderModel, build_coefficients, classify_zeros
from sl2lyap.sl2 import DomainError


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def richardson_derivative(f, x, h):
    d = lambda s: (f(x + s) - f(x - s)) / (2 * s)
    return (4 * d(h / 2) - d(h)) / 3


# ---------------------------------------------------------------- Gamma

@given(st.floats(-8, 8), st.floats(-30, 30))
def test_gamma_against_mpmath(x, y):
    z = complex(x, y)
    if abs(z - round(x)) < 1e-3 and round(x) <= 0:
        return
    assert rel(sf.gamma(z), complex(mpmath.gamma(z))) < 1e-10


def test_gamma_pole():
    with pytest.raises(DomainError):
        sf.gamma(-2.0)


# ---------------------------------------------------------------- Airy

def test_airy_at_zero():
    p = sf.airy_ai(0)
    assert p.value == pytest.approx(3 ** (-2 / 3) / sf.gamma(2 / 3).real, rel=1e-14)
    assert p.derivative == pytest.approx(-(3 ** (-1 / 3)) / sf.gamma(1 / 3).real, rel=1e-14)


def test_airy_taylor_oracle():
    # y'' = x y: c_{n+2} = c_{n-1} / ((n+2)(n+1)) from Ai(0), Ai'(0)
    c = [3 ** (-2 / 3) / math.gamma(2 / 3), -(3 ** (-1 / 3)) / math.gamma(1 / 3), 0.0]
    for n in range(1, 120):
        c.append(c[n - 1] / ((n + 2) * (n + 1)))
    x = 2.0
    val = sum(ci * x**i for i, ci in enumerate(c))
    der = sum(i * ci * x ** (i - 1) for i, ci in enumerate(c) if i)
    p = sf.airy_ai(x)
    assert rel(p.value, val) < 1e-12 and rel(p.derivative, der) < 1e-12


@pytest.mark.parametrize("x", list(np.linspace(-5, 5, 21)) + [-20.0, 12.0])
def test_airy_wronskian(x):
    a, b = sf.airy_ai(x), sf.airy_bi(x)
    assert abs((a.derivative * b.value - a.value * b.derivative) + 1 / math.pi) < 1e-12


@given(st.floats(-30, 30), st.floats(-30, 30))
def test_airy_complex_against_mpmath(x, y):
    z = complex(x, y)
    if abs(z) > 30:
        return
    p = sf.airy_ai(z)
    assert rel(p.value, complex(mpmath.airyai(z))) < 1e-10
    assert rel(p.derivative, complex(mpmath.airyai(z, derivative=1))) < 1e-10


@pytest.mark.parametrize("x", [-6.0, -1.0, 0.0, 2.0, 7.5, 40.0])
def test_airy_ratio(x):
    want = complex((mpmath.airyai(x, 1) + 1j * mpmath.airybi(x, 1)) / (mpmath.airyai(x) + 1j * mpmath.airybi(x)))
    assert rel(sf.airy_ratio(x), want) < 1e-12


# ---------------------------------------------------------------- Bessel

def test_bessel_k_ode():
    nu, x = 0.7, 2.3
    p = sf.bessel_k(nu, x)
    d2 = richardson_derivative(lambda t: sf.bessel_k(nu, t).derivative, x, 1e-3)
    res = x * x * d2 + x * p.derivative - (x * x + nu * nu) * p.value
    assert abs(res) < 1e-9


def test_bessel_k_domain():
    with pytest.raises(DomainError):
        sf.bessel_k(0.5, 0.0)
    with pytest.raises(DomainError):
        sf.bessel_jn(0.5, 0.0)


@given(st.floats(-20, 20), st.floats(0.01, 50))
def test_bessel_k_logderiv(nu, x):
    want = float(-(mpmath.besselk(nu - 1, x) + mpmath.besselk(nu + 1, x)) / (2 * mpmath.besselk(nu, x)))
    assert rel(sf.bessel_k_logderiv(nu, x), want) < 1e-9


@pytest.mark.parametrize("zeta", list(np.linspace(0.2, 20, 20)) + [1.5])
def test_jn_wronskian(zeta):
    nu = 0.37
    j, n = sf.bessel_jn(nu, zeta)
    assert abs(j.derivative * n.value - j.value * n.derivative + 2 / (math.pi * zeta)) < 1e-12


def test_i_imaginary_order_series_oracle():
    lam, x = 1.0, 2.0
    nu = 1j * lam
    total = sum(mpmath.power(x / 2, nu + 2 * k) / (mpmath.factorial(k) * mpmath.gamma(nu + k + 1))
                for k in range(60))
    assert rel(sf.bessel_i(nu, x).value, complex(total)) < 1e-12


@pytest.mark.parametrize("nu", [0.0, 3.5, -7.25, 20.0, 5j, -12j, 20j, 1 + 2j])
@pytest.mark.parametrize("x", [0.05, 1.0, 7.0, 25.0, 50.0])
def test_bessel_i_against_mpmath(nu, x):
    if isinstance(nu, float) and nu < 0 and nu == int(nu):
        return
    p = sf.bessel_i(nu, x)
    assert rel(p.value, complex(mpmath.besseli(nu, x))) < 1e-9
    assert rel(p.derivative, complex(mpmath.besseli(nu, x, derivative=1))) < 1e-9
    assert rel(sf.bessel_i_ratio(nu, x), complex(mpmath.besseli(nu + 1, x) / mpmath.besseli(nu, x))) < 1e-9


@pytest.mark.parametrize("nu,zeta", [(0.3, 0.5), (2.0, 7.0), (-1.4, 30.0)])
def test_hankel_logderiv(nu, zeta):
    h = mpmath.hankel2(nu, zeta)
    dh = (mpmath.hankel2(nu - 1, zeta) - mpmath.hankel2(nu + 1, zeta)) / 2
    assert rel(sf.hankel2_logderiv(nu, zeta), complex(dh / h)) < 1e-10


# ---------------------------------------------------------------- Whittaker

def whittaker_ode_residual(l, m, x):
    # W'' = (1/4 - l/x + (m^2 - 1/4)/x^2) W, second derivative by central differences
    f = lambda t: sf.whittaker_w(l, m, t)
    d2 = richardson_derivative(lambda t: f(t).derivative, x, 1e-3 * max(1.0, abs(x)))
    p = f(x)
    return abs(d2 - (0.25 - l / x + (m * m - 0.25) / (x * x)) * p.value) / abs(p.value)


@pytest.mark.parametrize("l,m,x", [(0.3j, -0.4, 1 + 0j), (-0.7j, 0.25, 3 + 1j), (1.2j, 1.1, 0.6j),
                                   (0.5j, -0.6, -2.5j), (0.1 + 0.2j, 0.3, 5.0)])
def test_whittaker_ode(l, m, x):
    assert whittaker_ode_residual(l, m, x) < 1e-8


@pytest.mark.parametrize("l,m,x", [(0.3j, -0.4, 1 + 0j), (0.586j, -0.611, 1.474j),
                                   (-0.28j, -0.611, -1.474j), (2j, 0.8, 4j), (-1j, 1.5, 0.3j)])
def test_whittaker_against_mpmath(l, m, x):
    p = sf.whittaker_w(l, m, x)
    assert rel(p.value, complex(mpmath.whitw(l, m, x))) < 1e-9
    assert rel(p.derivative, complex(mpmath.diff(lambda t: mpmath.whitw(l, m, t), x))) < 1e-8


@pytest.mark.parametrize("x", [0.5j, 5j, -40j, 120j, 360j, 25 + 0j])
def test_whittaker_logderiv_continued_fraction(x):
    l, m = 0.7j, -0.35
    with mpmath.workdps(40):
        want = complex(x * mpmath.diff(lambda t: mpmath.whitw(l, m, t), x) / mpmath.whitw(l, m, x))
    assert rel(sf.whittaker_logderiv(l, m, x), want) < 1e-11


@pytest.mark.parametrize("x", [1e-3j, 0.01j, 0.001 + 0j, 0.02 - 0.01j])
@pytest.mark.parametrize("l", [12.1j, -3.0j, 0.4 + 8j])
def test_whittaker_logderiv_small_argument(l, x):
    # slow continued fraction; the ratio of neighbours gives x W'/W exactly
    m = 0.134
    with mpmath.workdps(40):
        want = complex(0.5 * x - l - mpmath.whitw(l + 1, m, x) / mpmath.whitw(l, m, x))
    assert rel(sf.whittaker_logderiv(l, m, x), want) < 1e-12


def test_tricomi_relation_against_direct_integral():
    a, b, z = 0.6, 1.3, 1.7
    # U(a, b, z) = 1/Gamma(a) int_0^oo e^{-zt} t^{a-1} (1+t)^{b-a-1} dt
    direct = quad(lambda t: math.exp(-z * t) * t ** (a - 1) * (1 + t) ** (b - a - 1), 0, np.inf)[0]
    direct /= math.gamma(a)
    w = sf.whittaker_w(-a + b / 2, (b - 1) / 2, z).value
    assert rel(z ** (-b / 2) * math.exp(z / 2) * w, direct) < 1e-9


def test_whittaker_at_imaginary_argument_quadrature():
    # defining integral W_{l,m}(x) = x^{m+1/2} e^{-x/2}/Gamma(m-l+1/2) int_0^oo e^{-xt} t^{m-l-1/2} (1+t)^{m+l-1/2} dt
    # with Re(m - l + 1/2) > 0, rotated onto the ray t = s e^{-i arg x}
    l, m, x = 0.4j, 0.2, 2.0j
    a = m - l + 0.5
    phase = cmath.exp(-1j * cmath.phase(x))

    def integrand(s, part):
        t = s * phase
        v = cmath.exp(-x * t) * t ** (a - 1) * (1 + t) ** (m + l - 0.5) * phase
        return v.real if part == 0 else v.imag

    re = quad(integrand, 0, 60, args=(0,), limit=400)[0]
    im = quad(integrand, 0, 60, args=(1,), limit=400)[0]
    want = x ** (m + 0.5) * cmath.exp(-x / 2) / sf.gamma(a) * complex(re, im)
    assert rel(sf.whittaker_w(l, m, x).value, want) < 1e-7


# ---------------------------------------------------------------- elliptic

def test_elliptic_at_zero():
    K, E = sf.elliptic_ke(0.0)
    assert K.value == pytest.approx(math.pi / 2, rel=1e-15)
    assert E.value == pytest.approx(math.pi / 2, rel=1e-15)


def test_elliptic_lemniscate():
    K, _ = sf.elliptic_ke(0.5)
    G = 0.8346268416740731862814297  # Gauss's constant 1/agm(1, sqrt 2)
    assert K.value == pytest.approx(math.pi * G / math.sqrt(2), rel=1e-14)


@pytest.mark.parametrize("m", [0.09, -0.7, 0.5, 0.95, -30.0])
def test_elliptic_quadrature_oracle(m):
    K, E = sf.elliptic_ke(m)
    kq = quad(lambda t: 1 / math.sqrt(1 - m * math.sin(t) ** 2), 0, math.pi / 2, epsabs=0, epsrel=1e-13)[0]
    eq = quad(lambda t: math.sqrt(1 - m * math.sin(t) ** 2), 0, math.pi / 2, epsabs=0, epsrel=1e-13)[0]
    assert rel(K.value, kq) < 1e-13 and rel(E.value, eq) < 1e-13
    # dK/dm = (E - (1 - m) K) / (2 m (1 - m)), dE/dm = (E - K) / (2 m)
    assert rel(K.derivative, (eq - (1 - m) * kq) / (2 * m * (1 - m))) < 1e-12
    assert rel(E.derivative, (eq - kq) / (2 * m)) < 1e-12


@pytest.mark.parametrize("m", [0.1, 0.5, 3.0])
def test_imaginary_modulus_transformation(m):
    # K(-m) = K(m/(1+m)) / sqrt(1+m)
    assert rel(sf.elliptic_ke(-m)[0].value, sf.elliptic_ke(m / (1 + m))[0].value / math.sqrt(1 + m)) < 1e-10


def test_elliptic_domain():
    with pytest.raises(DomainError):
        sf.elliptic_ke(1.0)


# ---------------------------------------------------------------- 2F1

def test_hyp2f1_trivial():
    assert sf.hyp2f1(0.3 + 1j, -0.2, 1.1, 0.0).value == 1
    x = 0.4
    assert rel(sf.hyp2f1(1, 1, 2, x).value, -math.log(1 - x) / x) < 1e-14


def hyp_params(rng):
    m = random_model(rng)
    c = build_coefficients(m)
    z = classify_zeros(c, m)
    a1, a2, a3, _ = z.exponents
    return 1 - a3, a1, a1 + a2


def test_hyp2f1_partial_sums_oracle(rng):
    a, b, c = hyp_params(rng)
    x = 0.3
    term, partial = 1.0 + 0j, []
    s = 0j
    for n in range(400):
        s += term
        partial.append(s)
        term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * x
    # Richardson on the geometric tail: the last partial sums are converged
    want = partial[-1]
    assert abs(partial[-1] - partial[-2]) < 1e-15 * abs(want)
    assert rel(sf.hyp2f1(a, b, c, x).value, want) < 1e-12


@pytest.mark.parametrize("x", [0.1, 0.45, 0.55, 0.8, 0.97])
def test_hyp2f1_random_against_mpmath(rng, x):
    for _ in range(10):
        a, b, c = hyp_params(rng)
        p = sf.hyp2f1(a, b, c, x)
        assert rel(p.value, complex(mpmath.hyp2f1(a, b, c, x))) < 1e-9
        # differential relation F' = ab/c F(a+1, b+1; c+1)
        assert rel(p.derivative, a * b / c * complex(mpmath.hyp2f1(a + 1, b + 1, c + 1, x))) < 1e-9


def test_hyp2f1_large_parameters_fallback():
    a, b, c, x = -45.3 + 2j, 0.5 - 1j, 1.7 + 0.4j, 0.6
    assert rel(sf.hyp2f1(a, b, c, x).value, complex(mpmath.hyp2f1(a, b, c, x))) < 1e-9


def test_hyp2f1_ode_residual(rng):
    a, b, c = hyp_params(rng)
    for x in np.linspace(0.05, 0.95, 10):
        p = sf.hyp2f1(a, b, c, x)
        d2 = richardson_derivative(lambda t: sf.hyp2f1(a, b, c, t).derivative, x, 5e-3 * min(x, 1 - x))
        res = x * (1 - x) * d2 + (c - (a + b + 1) * x) * p.derivative - a * b * p.value
        assert abs(res) < 1e-8 * max(1.0, abs(p.value))


def test_hyp2f1_logderiv_large_parameters(rng):
    # near-degenerate covariances push the exponents to hundreds
    checked = 0
    while checked < 8:
        m = random_model(rng)
        m = DisorderModel(m.means, (10 ** rng.uniform(-3, -1.5) * m.cov_array).tolist())
        z = classify_zeros(build_coefficients(m), m)
        y1, y2 = z.labelled[:2]
        a1, a2, a3, _ = z.exponents
        a, b, c = 1 - a3, a1, a1 + a2
        x = abs((y2 - y1) / (y2.conjugate() - y1)) ** 2
        if max(abs(a), abs(b), abs(c)) <= 40:
            continue
        with mpmath.workdps(40):
            want = complex(x * a * b / c * mpmath.hyp2f1(a + 1, b + 1, c + 1, x, maxterms=10**6)
                           / mpmath.hyp2f1(a, b, c, x, maxterms=10**6))
        assert rel(sf.hyp2f1_logderiv(a, b, c, x), want) < 1e-9
        checked += 1


def test_hyp2f1_logderiv_small_parameters(rng):
    a, b, c = hyp_params(rng)
    for x in (0.2, 0.7):
        p = sf.hyp2f1(a, b, c, x)
        assert rel(sf.hyp2f1_logderiv(a, b, c, x), x * p.derivative / p.value) < 1e-13
