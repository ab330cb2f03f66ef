"""Complex special-function kernels returning (value, derivative) pairs.

Airy and integer-path Bessel kernels wrap ``scipy.special``.  The complex
Gamma function, Bessel I of complex order, the Whittaker function, complete
elliptic integrals and Gauss's hypergeometric function are implemented here;
2F1 values with large parameters fall back to mpmath, while its log-derivative
is integrated directly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from numba import njit
from scipy import special as sp
from scipy.integrate import solve_ivp

from .sl2 import DomainError


@dataclass(frozen=True)
class FunPair:
    value: complex
    derivative: complex

    @property
    def log_derivative(self) -> complex:
        return self.derivative / self.value


# ---------------------------------------------------------------- Gamma

_LANCZOS_G = 7
_LANCZOS = (
    0.99999999999980993, 676.5203681218851, -1259.1392167224028,
    771.32342877765313, -176.61502916214059, 12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7,
)


def loggamma(z: complex) -> complex:
    """Principal-branch log Gamma via the Lanczos approximation."""
    z = complex(z)
    if z.real < 0.5:
        if z.imag == 0.0 and z.real == math.floor(z.real):
            raise DomainError("Gamma has a pole at non-positive integers")
        # Reflection; the branch is fixed by continuity in Im z only up to
        # 2 pi i, which cancels in every exp(loggamma) use.
        return cmath.log(math.pi / cmath.sin(math.pi * z)) - loggamma(1.0 - z)
    if abs(z) > 30.0:
        return _stirling(z)
    z -= 1.0
    x = _LANCZOS[0]
    for i in range(1, _LANCZOS_G + 2):
        x += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return 0.5 * math.log(2.0 * math.pi) + (z + 0.5) * cmath.log(t) - t + cmath.log(x)


_STIRLING = (1 / 12, -1 / 360, 1 / 1260, -1 / 1680, 1 / 1188, -691 / 360360, 1 / 156)


def _stirling(z: complex) -> complex:
    s = (z - 0.5) * cmath.log(z) - z + 0.5 * math.log(2.0 * math.pi)
    zi = 1.0 / z
    z2 = zi * zi
    p = zi
    for c in _STIRLING:
        s += c * p
        p *= z2
    return s


def gamma(z: complex) -> complex:
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real):
        raise DomainError("Gamma has a pole at non-positive integers")
    if z.real < 0.5:
        return math.pi / (cmath.sin(math.pi * z) * gamma(1.0 - z))
    return cmath.exp(loggamma(z))


def rgamma(z: complex) -> complex:
    """1/Gamma(z), zero at the poles."""
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real):
        return 0.0j
    return 1.0 / gamma(z)


# ---------------------------------------------------------------- Airy

def airy_ai(z: complex) -> FunPair:
    if abs(z) > 1e3:
        raise DomainError("|z| must not exceed 1e3")
    ai, aip, _, _ = sp.airy(complex(z))
    return FunPair(complex(ai), complex(aip))


def airy_bi(x: float) -> FunPair:
    _, _, bi, bip = sp.airy(float(x))
    return FunPair(float(bi), float(bip))


def airy_ratio(x: float) -> complex:
    """(Ai' + i Bi')/(Ai + i Bi) on the real axis, overflow free."""
    x = float(x)
    if x > 5.0:
        # airye scales Ai by exp(zeta) and Bi by exp(-zeta), zeta = 2/3 x^1.5.
        ai, aip, bi, bip = sp.airye(x)
        r = math.exp(-2.0 * (2.0 / 3.0) * x ** 1.5)
        return complex(aip * r + 1j * bip) / complex(ai * r + 1j * bi)
    ai, aip, bi, bip = sp.airy(x)
    return complex(aip + 1j * bip) / complex(ai + 1j * bi)


# ---------------------------------------------------------------- Bessel

def bessel_k(nu: float, x: complex) -> FunPair:
    if x == 0:
        raise DomainError("K_nu is singular at x = 0")
    return FunPair(complex(sp.kv(nu, x)), complex(sp.kvp(nu, x)))


def bessel_k_logderiv(nu: float, x: float) -> float:
    """K'_nu(x)/K_nu(x) for real x > 0 using exponentially scaled kernels."""
    nu = abs(nu)
    if nu < 1e-300:
        nu = 0.0  # scipy returns nan for subnormal orders
    k0 = sp.kve(nu, x)
    return float(-(sp.kve(nu - 1.0, x) + sp.kve(nu + 1.0, x)) / (2.0 * k0))


def bessel_jn(nu: float, zeta: float) -> tuple[FunPair, FunPair]:
    if zeta <= 0.0:
        raise DomainError("zeta must be positive")
    j = FunPair(float(sp.jv(nu, zeta)), float(sp.jvp(nu, zeta)))
    n = FunPair(float(sp.yv(nu, zeta)), float(sp.yvp(nu, zeta)))
    return j, n


def hankel2_logderiv(nu: float, zeta: float) -> complex:
    """H2'_nu / H2_nu with exponential scaling."""
    h = sp.hankel2e(nu, zeta)
    hm = sp.hankel2e(nu - 1.0, zeta)
    hp = sp.hankel2e(nu + 1.0, zeta)
    return complex(0.5 * (hm - hp) / h)


def _bessel_i_series(nu: complex, x: float, terms: int = 400) -> complex:
    half = 0.5 * x
    lt = nu * math.log(half) - loggamma(nu + 1.0)
    term = cmath.exp(lt)
    total = term
    q = half * half
    for n in range(1, terms):
        term *= q / (n * (nu + n))
        total += term
        if abs(term) < 1e-17 * abs(total) and n > abs(nu):
            break
    return total


def bessel_i(nu: complex, x: float) -> FunPair:
    """I_nu(x) for complex order and 0 < x <= 50 by the ascending series."""
    if x <= 0.0:
        raise DomainError("x must be positive")
    nu = complex(nu)
    i0 = _bessel_i_series(nu, x)
    i1 = _bessel_i_series(nu + 1.0, x)
    return FunPair(i0, nu / x * i0 + i1)


def bessel_i_ratio(nu: complex, x: float, tol: float = 1e-16, max_terms: int = 100000) -> complex:
    """I_{nu+1}(x)/I_nu(x) by modified Lentz on the Gauss continued fraction."""
    nu = complex(nu)
    tiny = 1e-300
    f = tiny
    C, D = f, 0.0j
    for k in range(1, max_terms):
        b = 2.0 * (nu + k) / x
        a = 1.0
        D = b + a * D
        D = tiny if D == 0 else D
        C = b + a / C
        C = tiny if C == 0 else C
        D = 1.0 / D
        delta = C * D
        f *= delta
        if abs(delta - 1.0) < tol:
            return f
    raise ArithmeticError("continued fraction for the Bessel ratio did not converge")


# ---------------------------------------------------------------- Whittaker

def _exp_sinh_nodes(h: float = 1.0 / 24.0, tmax: float = 4.5) -> tuple[np.ndarray, np.ndarray]:
    tau = np.arange(-tmax, tmax + 0.5 * h, h)
    e = 0.5 * math.pi * np.sinh(tau)
    return np.exp(e), 0.5 * math.pi * np.cosh(tau) * h


_ES_S, _ES_W = _exp_sinh_nodes()


def laplace_moments(a: complex, b: complex, x: complex, orders=(0, 1)) -> list[complex]:
    """Integrals of t^(a-1+k) (1+t)^(b-1) exp(-x t) over (0, inf) for k in orders.

    The ray is rotated to t = s exp(-i arg x) so that x t is real; requires
    Re a > 0 and |arg x| < pi.
    """
    x = complex(x)
    theta = cmath.phase(x)
    r = abs(x)
    rot = cmath.exp(-1j * theta)
    s = _ES_S / r
    ls = np.log(s)
    base = (b - 1.0) * np.log1p(s * rot) - r * s + np.log(_ES_W)
    out = []
    for k in orders:
        ak = a + k
        logint = ak * (ls - 1j * theta) + base
        shift = float(np.max(logint.real))
        val = np.sum(np.exp(logint - shift))
        out.append(complex(val) * math.exp(shift))
    return out


def whittaker_w(l: complex, m: float, x: complex) -> FunPair:
    """W_{l,m}(x) and dW/dx from the Laplace-type integral representation."""
    m = abs(float(m))
    a = m - l + 0.5
    b = m + l + 0.5
    if complex(a).real <= 0.0:
        raise DomainError("integral representation needs Re(m - l + 1/2) > 0")
    if x == 0:
        raise DomainError("x must be non-zero")
    I0, I1 = laplace_moments(complex(a), complex(b), x)
    pref = cmath.exp((m + 0.5) * cmath.log(x) - 0.5 * x - loggamma(a))
    w = pref * I0
    dw = w * ((m + 0.5) / x - 0.5) - pref * I1
    return FunPair(complex(w), complex(dw))


def tricomi_u_ratio(a: complex, b: complex, x: complex, tol: float = 1e-16,
                    max_terms: int = 1_000_000) -> complex:
    """U(a+1, b, x) / U(a, b, x) for |arg x| < pi.

    U is the minimal solution of its three-term recurrence in a, so the ratio
    is the limit of a continued fraction (modified Lentz).
    """
    x = complex(x)
    if x == 0:
        raise DomainError("x must be non-zero")
    tiny = 1e-300

    def beta(n):
        return b - 2.0 * (a + n) - x

    def alpha(n):
        return (a + n) * (a + n - b + 1.0)

    f = beta(1) or tiny
    c, d = f, 0.0
    for n in range(2, max_terms):
        an, bn = -alpha(n - 1), beta(n)
        d = bn + an * d
        d = 1.0 / (d or tiny)
        c = bn + an / c or tiny
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < tol:
            return complex(-1.0 / f)
    raise ArithmeticError("Tricomi U continued fraction did not converge")


_WHIT_MAX_CANCEL = 1e4
_WHIT_MAX_TERMS = 2000


def _whittaker_ratio_mpmath(l: complex, m: float, x: complex, digits: int) -> complex:
    with mpmath.workdps(digits):
        l, x = mpmath.mpc(l), mpmath.mpc(x)
        return complex(mpmath.whitw(l + 1, m, x) / mpmath.whitw(l, m, x))


def whittaker_ratio(l: complex, m: float, x: complex) -> complex:
    """W_{l+1,m}(x) / W_{l,m}(x).

    The continued fraction needs O(1/|x|) terms and loses a digit per decade
    of them, and mapping U back to W can cancel; both cases go to mpmath.
    """
    m = abs(float(m))
    a = 0.5 + m - l
    b = 1.0 + 2.0 * m
    try:
        rho = tricomi_u_ratio(a, b, x, max_terms=_WHIT_MAX_TERMS)
    except ArithmeticError:
        return _whittaker_ratio_mpmath(l, m, x, 30)
    t1 = b - 2.0 * a - x
    t2 = a * (a - b + 1.0) * rho
    r = complex(-t1 - t2)
    cancel = max(abs(t1), abs(t2)) / max(abs(r), 1e-300)
    if cancel > _WHIT_MAX_CANCEL:
        return _whittaker_ratio_mpmath(l, m, x, 20 + int(math.log10(cancel)))
    return r


def whittaker_logderiv(l: complex, m: float, x: complex) -> complex:
    """x W'/W, free of the Gamma prefactor and valid for large parameters."""
    x = complex(x)
    return 0.5 * x - l - whittaker_ratio(l, m, x)


# ---------------------------------------------------------------- elliptic

def _agm_ke(m: float) -> tuple[float, float]:
    a, b = 1.0, math.sqrt(1.0 - m)
    c2sum = 0.5 * m
    p = 1.0
    for _ in range(60):
        an = 0.5 * (a + b)
        c = 0.5 * (a - b)
        b = math.sqrt(a * b)
        a = an
        p *= 2.0
        c2sum += 0.5 * p * c * c
        if abs(c) < 1e-17 * a:
            break
    K = math.pi / (2.0 * a)
    return K, K * (1.0 - c2sum)


def elliptic_ke(m: float) -> tuple[FunPair, FunPair]:
    """Complete integrals K(m), E(m) with m = k^2 < 1 and d/dm derivatives."""
    m = float(m)
    if m >= 1.0:
        raise DomainError("elliptic parameter must satisfy k^2 < 1")
    K, E = _agm_ke(m)
    if m == 0.0:
        dK, dE = math.pi / 8.0, -math.pi / 8.0
    else:
        dK = (E - (1.0 - m) * K) / (2.0 * m * (1.0 - m))
        dE = (E - K) / (2.0 * m)
    return FunPair(K, dK), FunPair(E, dE)


# ---------------------------------------------------------------- 2F1

def _hyp2f1_series(a: complex, b: complex, c: complex, x: complex,
                   max_terms: int = 100000) -> tuple[complex, complex, float]:
    """Partial sums of 2F1 and its derivative, plus the cancellation ratio max|term|/|sum|."""
    term = 1.0 + 0j
    total = term
    dtotal = 0.0j
    biggest = 1.0
    for n in range(max_terms):
        # dtotal accumulates n a_n x^(n-1)
        term = term * (a + n) * (b + n) / ((c + n) * (n + 1)) * x
        total += term
        dtotal += (n + 1) * term
        biggest = max(biggest, abs(term))
        if abs(term) * (n + 2) < 1e-17 * abs(total) and n > 5:
            deriv = dtotal / x if x != 0 else a * b / c
            return total, deriv, biggest / abs(total)
    raise ArithmeticError("hypergeometric series did not converge")


# Above these thresholds the double-precision series/ODE path loses more than
# about four digits and the evaluation moves to mpmath.
_HYP_MAX_PARAM = 40.0
_HYP_MAX_CANCEL = 1e4


def _hyp2f1_mpmath(a: complex, b: complex, c: complex, x: float) -> FunPair:
    with mpmath.workdps(30):
        F = mpmath.hyp2f1(a, b, c, x)
        dF = a * b / c * mpmath.hyp2f1(a + 1, b + 1, c + 1, x)
    return FunPair(complex(F), complex(dF))


def hyp2f1(a: complex, b: complex, c: complex, x: float) -> FunPair:
    """Gauss 2F1 and its x-derivative for 0 <= x < 1.

    The series is summed for x <= 1/2; beyond, the hypergeometric ODE is
    integrated from x = 1/2, which stays well conditioned when c - a - b is
    an integer (a case the 1 - x connection formula cannot handle directly).
    Large parameters, where the series cancels badly, go to mpmath.
    """
    x = float(x)
    a, b, c = complex(a), complex(b), complex(c)
    if c.imag == 0.0 and c.real <= 0.0 and c.real == math.floor(c.real):
        raise DomainError("c must not be a non-positive integer")
    if not (0.0 <= x < 1.0):
        raise DomainError("x must lie in [0, 1)")
    if x == 0.0:
        return FunPair(1.0 + 0j, a * b / c)
    if max(abs(a), abs(b), abs(c)) > _HYP_MAX_PARAM:
        return _hyp2f1_mpmath(a, b, c, x)
    x0 = min(x, 0.5)
    v0, d0, cancel = _hyp2f1_series(a, b, c, x0)
    if cancel > _HYP_MAX_CANCEL:
        return _hyp2f1_mpmath(a, b, c, x)
    if x <= 0.5:
        return FunPair(v0, d0)

    def rhs(t, y):
        F, dF = y
        return [dF, (a * b * F - (c - (a + b + 1.0) * t) * dF) / (t * (1.0 - t))]

    sol = solve_ivp(rhs, (x0, x), [v0, d0], method="DOP853", rtol=1e-13, atol=1e-300)
    if not sol.success:
        raise ArithmeticError(sol.message)
    return FunPair(complex(sol.y[0, -1]), complex(sol.y[1, -1]))


# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = np.array([
    [0, 0, 0, 0, 0, 0],
    [1 / 5, 0, 0, 0, 0, 0],
    [3 / 40, 9 / 40, 0, 0, 0, 0],
    [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
_DP_E = np.array([35 / 384 - 5179 / 57600, 0.0, 500 / 1113 - 7571 / 16695, 125 / 192 - 393 / 640,
                  -2187 / 6784 + 92097 / 339200, 11 / 84 - 187 / 2100, -1 / 40])


@njit(cache=True)
def _logderiv_rhs(s, G, a, b, c):
    t = math.exp(s)
    return G - G * G + (a * b * t - (c - (a + b + 1.0) * t) * G) / (1.0 - t)


@njit(cache=True)
def _integrate_logderiv(G, s0, s1, a, b, c, rtol, atol, A, C, E):
    # dG/ds for G = x F'/F, s = log x; adaptive Dormand-Prince with FSAL.
    k = np.empty(7, dtype=np.complex128)
    h = (s1 - s0) * 1e-3
    s = s0
    k[0] = _logderiv_rhs(s, G, a, b, c)
    steps = 0
    while s < s1:
        steps += 1
        if steps > 50_000_000:
            return G, False
        if s + h > s1:
            h = s1 - s
        for i in range(1, 7):
            acc = G
            for j in range(i):
                acc += h * A[i, j] * k[j]
            k[i] = _logderiv_rhs(s + C[i] * h, acc, a, b, c)
        Gn = G
        for j in range(6):
            Gn += h * A[6, j] * k[j]
        err = 0j
        for j in range(7):
            err += E[j] * k[j]
        ratio = abs(h * err) / (atol + rtol * max(abs(G), abs(Gn)))
        if ratio <= 1.0:
            s += h
            G = Gn
            k[0] = k[6]
        fac = 0.9 * ratio ** -0.2 if ratio > 0 else 5.0
        h *= min(5.0, max(0.2, fac))
    return G, True


def hyp2f1_logderiv(a: complex, b: complex, c: complex, x: float, rtol: float = 1e-12) -> complex:
    """x F'(x)/F(x) for F = 2F1(a, b; c; x), 0 < x < 1, without forming F.

    For large parameters F over- or underflows and its series cancels, while
    the log-derivative stays moderate.  It obeys a Riccati equation in log x,
    integrated from a point x0 where a handful of series terms suffice.
    F must not vanish on (0, x), where G would have a pole.
    """
    a, b, c = complex(a), complex(b), complex(c)
    x = float(x)
    if not (0.0 < x < 1.0):
        raise DomainError("x must lie in (0, 1)")
    big = max(abs(a), abs(b), abs(c), 1.0)
    if big <= _HYP_MAX_PARAM:
        F = hyp2f1(a, b, c, x)
        return x * F.derivative / F.value
    x0 = min(x, 0.05 / big)
    v0, d0, _ = _hyp2f1_series(a, b, c, x0)
    G0 = x0 * d0 / v0
    if x0 == x:
        return complex(G0)
    G, ok = _integrate_logderiv(complex(G0), math.log(x0), math.log(x), a, b, c,
                                rtol, 1e-14 * big, _DP_A, _DP_C, _DP_E)
    if not ok:
        raise ArithmeticError("log-derivative integration did not finish")
    return complex(G)
