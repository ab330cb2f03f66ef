"""Stationary density of the angle phi = 2 arctan z and quantities built on it.

With diffusion in the rotation angle the angular problem is uniformly
elliptic and periodic, so everything is done spectrally on a uniform grid.
Without it the angular diffusion vanishes at phi = +-pi and the problem is
solved instead on the real line in the Riccati variable z.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .coeffs import DisorderModel, build_coefficients

TWO_PI = 2.0 * math.pi
ZERO_CURRENT_TOL = 1e-10
# Beyond this spread of the drift potential the FFT form cancels badly.
SPECTRAL_RANGE = 12.0


class DegenerateDiffusionError(ValueError):
    """The diffusion coefficient vanishes on the real line."""


@dataclass
class DensityProfile:
    """Angular density sampled on ``phi`` (periodic grids omit phi = pi).

    For real-line solutions ``z`` and ``fz`` hold the density of the Riccati
    variable on a non-uniform grid, and ``phi``/``values`` its angular image.
    """

    phi: np.ndarray
    values: np.ndarray
    j: float
    normalization_error: float
    zero_current: bool
    method: str
    z: Optional[np.ndarray] = None
    fz: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def periodic(self) -> bool:
        return self.method == "spectral"


def angular_coefficients(m: DisorderModel, phi: np.ndarray):
    """Angular drift v_a, variance sigma_a^2 and d(sigma_a^2)/dphi."""
    a, w, u = m.means
    S = m.cov_array
    s, c = np.sin(phi), np.cos(phi)
    g = np.stack([np.full_like(phi, 2.0), -2.0 * s, -1.0 - c])
    dg = np.stack([np.zeros_like(phi), -2.0 * c, s])
    Sg = S @ g
    s2 = np.einsum("in,in->n", g, Sg)
    ds2 = 2.0 * np.einsum("in,in->n", dg, Sg)
    cvec = np.array([m.D_wu, -m.D_au, m.D_aw])
    cross = np.cross(g.T, dg.T).T
    va = 0.5 * (0.5 * ds2 - cvec @ cross) - (a * g[0] + w * g[1] + u * g[2])
    return va, s2, ds2


def _current_density_spectral(P: np.ndarray, kappa: float, s2: np.ndarray):
    """f_a = 2 j exp(P) S / sigma_a^2 with S the periodic solution of S' - kappa S = exp(-P)."""
    n = P.size
    h = TWO_PI / n
    pmin = float(np.min(P))
    e = np.exp(pmin - P)
    k = np.fft.fftfreq(n, d=1.0 / n)
    Sf = np.fft.ifft(np.fft.fft(e) / (1j * k - kappa)).real
    shape = 2.0 * np.exp(P) * Sf / s2
    scale = 1.0 / (np.sum(shape) * h)
    return scale * shape, float(scale * math.exp(pmin))


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    mx = np.max(a, axis=1, keepdims=True)
    return (mx + np.log(np.sum(np.exp(a - mx), axis=1, keepdims=True)))[:, 0]


# Euler-Maclaurin coefficients B_2k / (2k)! for k = 1, 2, 3.
_EM = (1.0 / 12.0, -1.0 / 720.0, 1.0 / 30240.0)


def _current_density_direct(P: np.ndarray, kappa: float, s2: np.ndarray, q: np.ndarray,
                            chunk: int = 256):
    """Same density as the spectral form, summed in log space without cancellation.

    For kappa > 0 the periodic solution is
    S(phi) = -(1 - e^{-2 pi kappa})^{-1} int_0^{2 pi} e^{-kappa s - P(phi + s)} ds,
    and for kappa < 0 the mirror image integrates P(phi - s) with the opposite
    sign.  Each integrand g is positive, so the trapezoid sums are formed from
    logarithms; the Euler-Maclaurin end corrections are exact in closed form
    because g(2 pi) = e^{-2 pi |kappa|} g(0) and log g has a periodic slope.
    """
    n = P.size
    h = TWO_PI / n
    sgn = 1 if kappa > 0 else -1
    w = np.ones(n + 1)
    w[0] = w[-1] = 0.5
    base = np.log(w * h) - abs(kappa) * h * np.arange(n + 1)
    src = P if sgn > 0 else P[::-1]
    windows = np.lib.stride_tricks.sliding_window_view(np.concatenate([src, src, src[:1]]), n + 1)
    # Row i lists P(phi_i + sgn * s_k) for k = 0..n.
    order = np.arange(n) if sgn > 0 else n - 1 - np.arange(n)
    logT = np.empty(n)
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        logT[start:stop] = _logsumexp_rows(base[None, :] - windows[order[start:stop]])
    # d/ds log g = -sgn * q(phi + sgn s); D_{n+1} = sgn D_n' + r D_n gives g^(n) / g.
    r = -sgn * q
    D = [r]
    for _ in range(4):
        D.append(sgn * _spectral_derivative(D[-1]) + r * D[-1])
    jump = math.expm1(-TWO_PI * abs(kappa))
    corr = -(_EM[0] * h ** 2 * D[0] + _EM[1] * h ** 4 * D[2] + _EM[2] * h ** 6 * D[4]) * jump
    logS = logT + np.log1p(corr * np.exp(-P - logT))
    logS -= math.log(-jump)
    logshape = math.log(2.0) + P + logS - np.log(s2)
    mx = float(np.max(logshape))
    tot = float(np.sum(np.exp(logshape - mx)) * h)
    f = np.exp(logshape - mx) / tot
    # exponentially small currents underflow to a signed zero
    j = -sgn * math.exp(max(-mx - math.log(tot), -800.0))
    return f, float(j)


def _spectral_derivative(y: np.ndarray) -> np.ndarray:
    n = y.size
    k = np.fft.rfftfreq(n, d=1.0 / n)
    yh = np.fft.rfft(y)
    dh = 1j * k * yh
    if n % 2 == 0:
        dh[-1] = 0.0
    return np.fft.irfft(dh, n)


def _spectral_antiderivative(y: np.ndarray) -> np.ndarray:
    """Zero-mean periodic antiderivative of a zero-mean periodic sample."""
    n = y.size
    k = np.fft.rfftfreq(n, d=1.0 / n)
    yh = np.fft.rfft(y)
    ih = np.zeros_like(yh)
    ih[1:] = yh[1:] / (1j * k[1:])
    if n % 2 == 0:
        ih[-1] = 0.0
    return np.fft.irfft(ih, n)


def angular_grid(n: int) -> np.ndarray:
    return -math.pi + TWO_PI * np.arange(n) / n


def stationary_density(m: DisorderModel, grid_size: int = 4096) -> DensityProfile:
    """Periodic stationary solution of (sigma_a^2 f_a / 2)' - v_a f_a = j."""
    if m.D_aa <= 0.0:
        return _line_density(m)
    n = int(grid_size)
    phi = angular_grid(n)
    va, s2, _ = angular_coefficients(m, phi)
    if np.min(s2) <= 1e-14 * np.max(s2):
        raise DegenerateDiffusionError("angular variance vanishes on the circle")
    q = 2.0 * va / s2
    kappa = float(np.mean(q))
    P = _spectral_antiderivative(q - kappa)
    P -= np.max(P)
    zero_current = abs(TWO_PI * kappa) < ZERO_CURRENT_TOL
    h = TWO_PI / n
    if zero_current:
        f = np.exp(P) / s2
        f /= np.sum(f) * h
        j = 0.0
    elif -float(np.min(P)) < SPECTRAL_RANGE:
        f, j = _current_density_spectral(P, kappa, s2)
    else:
        f, j = _current_density_direct(P, kappa, s2, q)
    norm_err = abs(np.sum(f) * h - 1.0)
    if np.min(f) < -1e-10 * np.max(f):
        warnings.warn("stationary density has negative samples; grid too coarse", RuntimeWarning)
    return DensityProfile(phi, f, float(j), float(norm_err), bool(zero_current), "spectral",
                          meta={"J_pi": TWO_PI * kappa, "grid_size": n})


def _pv_tan_half(h: np.ndarray, dh: np.ndarray) -> float:
    """PV of the periodic integral of tan(phi/2) h(phi) on the standard grid.

    Subtracting h(pi) leaves a smooth periodic integrand whose value at the
    pole is the limit -2 h'(pi); the grid node phi = -pi carries it.
    """
    n = h.size
    phi = angular_grid(n)
    g = np.empty(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        g[1:] = np.tan(0.5 * phi[1:]) * (h[1:] - h[0])
    g[0] = -2.0 * dh[0]
    return float(np.sum(g) * TWO_PI / n)


def gamma_from_density(m: DisorderModel, d: DensityProfile) -> float:
    """Lyapunov exponent from the density via two principal-value integrals."""
    if not d.periodic:
        return _line_gamma(m, d)
    f = d.values
    df = _spectral_derivative(f)
    t1 = _pv_tan_half(f, df)
    g2 = 2.0 * df
    t2 = _pv_tan_half(g2, _spectral_derivative(g2))
    return float(-m.w + m.D_au + (m.alpha + 2.0 * m.D_aw) * t1 + 0.5 * m.D_aa * t2)


def rice_residual(m: DisorderModel, d: DensityProfile) -> float:
    """|boundary flux at phi = pi minus j| using the periodic density."""
    if d.periodic:
        f0 = float(d.values[0])
        df0 = float(_spectral_derivative(d.values)[0])
        lhs = 2.0 * m.D_aa * df0 + 2.0 * (m.alpha + 2.0 * m.D_aw) * f0
        return abs(lhs - d.j)
    # Without angular diffusion the tail obeys z^2 f -> j / alpha.
    tail = _line_tail_limit(d)
    return abs(m.alpha * tail - d.j)


_HILBERT_MAX_GRID = 1 << 22


def _hilbert_grid_size(n: int, y: complex) -> int:
    """Trapezoid error decays like exp(-n * dist) with dist the pole's distance from the real phi axis."""
    y = complex(y)
    dist = 2.0 * abs(y.imag) / (1.0 + abs(y) ** 2)
    need = 40.0 / max(dist, 1e-300)
    m = n
    while m < need and m < _HILBERT_MAX_GRID:
        m *= 2
    return m


def _upsample(values: np.ndarray, m: int) -> np.ndarray:
    """Trigonometric interpolation of a periodic sample onto m >= n points."""
    n = values.size
    if m == n:
        return values
    c = np.fft.rfft(values)
    if n % 2 == 0:
        c[-1] *= 0.5  # split the Nyquist mode symmetrically
    pad = np.zeros(m // 2 + 1, dtype=complex)
    pad[: c.size] = c
    return np.fft.irfft(pad, m) * (m / n)


def hilbert_transform(d: DensityProfile, y: complex) -> tuple[complex, complex]:
    """F(y) = int f(z)/(y - z) dz and F'(y) for Im y != 0."""
    if d.periodic:
        values = _upsample(d.values, _hilbert_grid_size(d.values.size, y))
        n = values.size
        z = np.tan(0.5 * angular_grid(n))
        z[0] = np.inf
        w = values * (TWO_PI / n)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(np.isinf(z), 0.0, 1.0 / (y - z))
    else:
        z, w = d.z, d.weights * d.fz
        inv = 1.0 / (y - z)
    F = complex(np.sum(w * inv))
    dF = complex(-np.sum(w * inv * inv))
    return F, dF


def hilbert_residual(m: DisorderModel, d: DensityProfile, omega: complex,
                     probes: Sequence[complex]) -> float:
    """max |Q F' + R F - S - 2 Omega| over lower half-plane probes."""
    c = build_coefficients(m)
    worst = 0.0
    for y in probes:
        y = complex(y)
        if y.imag > -0.1:
            raise ValueError("probes must satisfy Im y <= -0.1")
        F, dF = hilbert_transform(d, y)
        r = c.Q(y) * dF + c.R(y) * F - c.S(y) - 2.0 * omega
        worst = max(worst, abs(r))
    return worst


# ------------------------------------------------------------ real-line solver

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _line_potential(m: DisorderModel):
    """Exact antiderivative Phi of 2 v / Q when there is no angular noise."""
    a_, w, u = m.means
    dww, duu, dwu = m.D_ww, m.D_uu, m.D_wu
    e2, e1, e0 = -2.0 * a_, 4.0 * (w + dww), 2.0 * (u - a_ + 2.0 * dwu)
    if dww == 0.0:
        if duu <= 0.0:
            raise DegenerateDiffusionError("no diffusion at all")

        def Phi(z):
            return (e2 * z ** 3 / 3.0 + 0.5 * e1 * z * z + e0 * z) / duu

        return Phi, (lambda z: np.full_like(z, duu)), None
    qa, qb, qc = 4.0 * dww, 4.0 * dwu, duu
    disc = 4.0 * qa * qc - qb * qb
    if disc <= 1e-14 * (4.0 * qa * qc):
        raise DegenerateDiffusionError("Q has a real zero: diffusion degenerates on the line")
    sd = math.sqrt(disc)
    B = e1 - e2 * qb / qa
    C = e0 - e2 * qc / qa

    def Q(z):
        return (qa * z + qb) * z + qc

    def Phi(z):
        return (e2 / qa) * z + (B / (2.0 * qa)) * np.log(Q(z)) + (2.0 * C - B * qb / qa) / sd * np.arctan(
            (2.0 * qa * z + qb) / sd)

    return Phi, Q, B / qa


def _steep_tail(zb, v2, q2, dv2, dq2) -> float:
    """Laplace expansion of int_{-inf}^{zb} exp(Phi(zb) - Phi(t)) dt for steep Phi."""
    lam = -v2(zb) / q2(zb)
    d2 = (dv2(zb) * q2(zb) - v2(zb) * dq2(zb)) / q2(zb) ** 2
    return float(1.0 / lam - d2 / lam ** 3 + 3.0 * d2 * d2 / lam ** 5)


def _advance(Ia, za, zb, Phi, pa, pb, v2, q2, dv2, dq2) -> float:
    """Carry the running integral from za to zb."""
    drop = pa - pb
    if drop > 40.0 and v2(zb) < 0.0:
        return _steep_tail(zb, v2, q2, dv2, dq2)
    k = max(1, min(64, int(abs(drop) / 2.0) + 1))
    edges = np.linspace(za, zb, k + 1)
    total = Ia
    prev = pa
    for lo, hi in zip(edges[:-1], edges[1:]):
        t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * _GL_X
        cur = float(Phi(np.array([hi]))[0]) if hi != zb else pb
        total = math.exp(cur - prev) * total + 0.5 * (hi - lo) * float(np.sum(_GL_W * np.exp(cur - Phi(t))))
        prev = cur
    return total


def _line_density(m: DisorderModel, grid_size: int = 4096, zmax: float = 1e8) -> DensityProfile:
    if m.alpha < 0.0:
        d = _line_density(m.reflected(), grid_size, zmax)
        z = -d.z[::-1]
        fz = d.fz[::-1]
        return DensityProfile(2.0 * np.arctan(z), 0.5 * (1.0 + z * z) * fz, -d.j,
                              d.normalization_error, d.zero_current, "line", z, fz,
                              d.weights[::-1], d.meta)
    Phi, Q, tail_power = _line_potential(m)
    scale = 1.0 + abs(m.w / m.D_ww) if m.D_ww > 0 else 1.0
    smax = math.asinh(zmax / scale)
    n = int(grid_size) | 1
    s = np.linspace(-smax, smax, n)
    hs = s[1] - s[0]
    z = scale * np.sinh(s)
    dz = scale * np.cosh(s)
    # Simpson weights in s.
    ws = np.ones(n)
    ws[1:-1:2] = 4.0
    ws[2:-1:2] = 2.0
    weights = ws * hs / 3.0 * dz
    phi_z = Phi(z)
    if m.alpha == 0.0:
        if tail_power is None or tail_power >= 1.0:
            raise DegenerateDiffusionError("no normalisable stationary density")
        logf = math.log(2.0) + phi_z - np.log(Q(z))
        f = np.exp(logf - np.max(logf))
        j = 0.0
        zero_current = True
    else:
        # I_i = int_{-inf}^{z_i} exp(Phi(z_i) - Phi(t)) dt by an exponential recursion.
        cset = build_coefficients(m)
        v2, q2 = 2.0 * cset.v, cset.Q
        dv2, dq2 = v2.deriv(), q2.deriv()
        I = np.empty(n)
        I[0] = _steep_tail(z[0], v2, q2, dv2, dq2)
        for i in range(1, n):
            I[i] = _advance(I[i - 1], z[i - 1], z[i], Phi, phi_z[i - 1], phi_z[i], v2, q2, dv2, dq2)
        f = 2.0 * I / Q(z)
        zero_current = False
    # Tail masses beyond +-zmax from the local power law.
    mass = float(np.sum(weights * f))
    for end in (0, -1):
        k = -(math.log(f[end]) - math.log(f[end + (1 if end == 0 else -1)])) / (
            math.log(abs(z[end])) - math.log(abs(z[end + (1 if end == 0 else -1)])))
        if k > 1.0:
            mass += f[end] * abs(z[end]) / (k - 1.0)
    f = f / mass
    j = 0.0 if zero_current else float(1.0 / mass)
    fa = 0.5 * (1.0 + z * z) * f
    return DensityProfile(2.0 * np.arctan(z), fa, j, 0.0, zero_current, "line", z, f, weights,
                          meta={"zmax": zmax, "grid_size": n})


def _line_gamma(m: DisorderModel, d: DensityProfile) -> float:
    pv = float(np.sum(d.weights * d.z * d.fz))
    return float(-m.w + m.D_au + (m.alpha + 2.0 * m.D_aw) * pv)


def _line_tail_limit(d: DensityProfile) -> float:
    """Average of the z^2 f(z) limits at both ends, extrapolated in 1/z."""
    out = []
    for sl in (slice(0, 40), slice(-40, None)):
        z, f = d.z[sl], d.fz[sl]
        c = np.polyfit(1.0 / z, z * z * f, 1)
        out.append(c[-1])
    return float(np.mean(out))
