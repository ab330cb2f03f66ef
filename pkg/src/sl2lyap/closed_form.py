"""Closed-form characteristic exponent Omega = gamma + i pi j.

Each family reduces Omega to a prefactor times a scaling function G of one
argument, plus an offset.  Families are chosen structurally from which
covariances vanish; the generic case goes through Gauss's hypergeometric
function of the cross ratio of the four zeros of Q.

Models with a negative mean rotation are mapped to positive rotation by the
reflection z -> -z, under which Omega becomes its complex conjugate.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import specfun
from .coeffs import (DisorderModel, NotApplicableError, build_coefficients,
                     classify_zeros, structural_family)

FAMILIES = ("none", "airy", "bessel_K", "bessel_JN", "bessel_I_imag", "whittaker",
            "elliptic_I", "elliptic_II", "hypergeometric")

FAMILY_NAMES = {
    "none": "none", "airy": "Airy", "bessel_K": "Bessel (real index)",
    "bessel_JN": "Bessel (real index)", "bessel_I_imag": "Bessel (imaginary index)",
    "whittaker": "Whittaker", "elliptic_I": "elliptic", "elliptic_II": "elliptic",
    "hypergeometric": "hypergeometric",
}


class UnsupportedFamilyError(ValueError):
    """No closed form applies to the zero pattern of this model."""


@dataclass(frozen=True)
class ScalingEvaluation:
    family: str
    argument: complex
    indices: dict
    G: complex
    prefactor: float
    offset: complex
    omega: complex
    reflected: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def gamma(self) -> float:
        return self.omega.real

    @property
    def j(self) -> float:
        return self.omega.imag / math.pi


# ------------------------------------------------------------ scaling functions

def g_airy(x: float) -> complex:
    return specfun.airy_ratio(float(np.real(x)))


def g_bessel_k(x: float, nu: float) -> complex:
    x = float(np.real(x))
    if x == 0.0:
        return complex(abs(nu))
    return complex(-x * specfun.bessel_k_logderiv(nu, x))


def g_bessel_jn(zeta: float, nu: float) -> complex:
    zeta = float(np.real(zeta))
    return -zeta * specfun.hankel2_logderiv(nu, zeta)


def g_bessel_i_imag(x: float, lam: float) -> complex:
    # Index -i lambda: the conjugate of the i lambda solution for real x,
    # which is the one carrying a current in the direction of the rotation.
    nu = complex(0.0, -lam)
    x = float(np.real(x))
    if x == 0.0:
        return nu
    return nu + x * specfun.bessel_i_ratio(nu, x)


def g_whittaker(x: complex, l: complex, m: float) -> complex:
    return 1.0 - 2.0 * specfun.whittaker_logderiv(l, m, x)


def g_elliptic_i(k: float) -> complex:
    m = k * k
    K, _ = specfun.elliptic_ke(m)
    return complex(2.0 * m * K.derivative / K.value - m / (1.0 - m))


def g_elliptic_ii(kh: float) -> complex:
    m = kh * kh
    K, _ = specfun.elliptic_ke(m)
    return complex((1.0 - m) * 2.0 * m * K.derivative / K.value)


def g_hypergeometric(x: float, a1: complex, a2: complex, a3: complex) -> complex:
    return specfun.hyp2f1_logderiv(1.0 - a3, a1, a1 + a2, x)


SCALING: dict[str, Callable[..., complex]] = {
    "airy": g_airy, "bessel_K": g_bessel_k, "bessel_JN": g_bessel_jn,
    "bessel_I_imag": g_bessel_i_imag, "whittaker": g_whittaker,
    "elliptic_I": g_elliptic_i, "elliptic_II": g_elliptic_ii,
    "hypergeometric": g_hypergeometric,
}


def scaling_function(family: str, argument: complex, indices: dict) -> complex:
    fn = SCALING[family]
    return fn(argument, **indices)


# ------------------------------------------------------------ families

def _eval(family, arg, idx, pref, offset=0.0, **meta) -> ScalingEvaluation:
    G = scaling_function(family, arg, idx)
    return ScalingEvaluation(family, complex(arg), idx, complex(G), float(pref),
                             complex(offset), complex(pref * G + offset), meta=meta)


def _clean(m: DisorderModel) -> ScalingEvaluation:
    mu = m.mu()
    return ScalingEvaluation("none", 0j, {}, mu, 1.0, 0j, mu)


def _commuting(m: DisorderModel, reason: str) -> ScalingEvaluation:
    om = complex(abs(m.w))
    return ScalingEvaluation("none", 0j, {}, om, 1.0, 0j, om, meta={"reason": reason})


def _airy(m: DisorderModel) -> ScalingEvaluation:
    a, w, u = m.means
    beta = (a * a * m.D_uu / 2.0) ** (1.0 / 3.0)
    x = (w * w + a * u - a * a) / (beta * beta)
    return _eval("airy", x, {}, beta, beta=beta)


def _bessel_real_index(nu: float, s: float, dww: float, offset: float = 0.0,
                       **meta) -> ScalingEvaluation:
    """Omega = D_ww G for G = -x K'_nu/K_nu with x^2 = s / D_ww^2."""
    if s >= 0.0:
        return _eval("bessel_K", math.sqrt(s) / dww, {"nu": nu}, dww, offset, **meta)
    return _eval("bessel_JN", math.sqrt(-s) / dww, {"nu": nu}, dww, offset, **meta)


def _supersymmetric(m: DisorderModel) -> ScalingEvaluation:
    a, w, u = m.means
    return _bessel_real_index(w / m.D_ww, a * (u - a), m.D_ww)


def _fully_correlated(m: DisorderModel) -> ScalingEvaluation:
    a, w, u = m.means
    dww, duu = m.D_ww, m.D_uu
    c = math.copysign(1.0, m.D_wu)
    y0 = 0.5 * math.sqrt(duu / dww)
    nu = (w + a * c * y0) / dww
    beta = u - a + 2.0 * (dww - w) * c * y0 - a * y0 * y0
    return _bessel_real_index(nu, a * beta, dww, c=c, y0=y0, beta=beta)


def whittaker_parameters(m: DisorderModel) -> tuple[complex, complex, float]:
    """(x, l, m) of the partly correlated potential family."""
    a, w, u = m.means
    dww, duu, dwu = m.D_ww, m.D_uu, m.D_wu
    c = dwu / math.sqrt(dww * duu)
    b = math.sqrt(1.0 - c * c)
    y0 = 0.5 * math.sqrt(duu / dww)
    x = 1j * a * b * y0 / dww
    l = 1j * c / (2.0 * b) + 1j * (u - a - 2.0 * w * c * y0 + a * (1.0 - 2.0 * c * c) * y0 * y0) / (
        4.0 * dww * b * y0)
    mm = -(w + a * c * y0) / (2.0 * dww)
    return x, l, mm


def _whittaker(m: DisorderModel) -> ScalingEvaluation:
    x, l, mm = whittaker_parameters(m)
    return _eval("whittaker", x, {"l": l, "m": mm}, m.D_ww)


def _distance(m: DisorderModel, shift: float = 0.0) -> ScalingEvaluation:
    a, w, u = m.means
    w = w - shift
    daa = m.D_aa
    lam = (u - 2.0 * a) / (2.0 * daa)
    x = math.sqrt(4.0 * w * w + u * u) / (2.0 * daa)
    return _eval("bessel_I_imag", x, {"lam": lam}, daa, shift)


def _elliptic(m: DisorderModel) -> ScalingEvaluation:
    daa, dww, duu = m.D_aa, m.D_ww, m.D_uu
    delta = math.sqrt(daa * (daa + duu))
    s = daa + 2.0 * dww
    if abs(delta - s) <= 1e-14 * s:
        return ScalingEvaluation("elliptic_I", 0j, {}, 0j, delta, complex(dww), complex(dww),
                                 meta={"borderline": True})
    if delta < s:
        k = math.sqrt((s - delta) / (s + delta))
        return _eval("elliptic_I", k, {}, delta, dww, delta=delta)
    kh = math.sqrt((delta - s) / (2.0 * delta))
    return _eval("elliptic_II", kh, {}, delta, dww, delta=delta)


def _is_elliptic(m: DisorderModel) -> bool:
    return (m.D_aa > 0.0 and not any(m.means)
            and m.D_aw == 0.0 and m.D_au == 0.0 and m.D_wu == 0.0)


def omega_hypergeometric(m: DisorderModel, allow_continuation: bool = False) -> ScalingEvaluation:
    """Generic four-simple-zero case through 2F1 of the cross ratio.

    The integral representation behind the formula needs Re a1, Re a2 > 0.
    With ``allow_continuation`` the same 2F1 expression is used outside that
    region; it agrees with the Fokker-Planck route there, and the result is
    tagged ``meta["analytic_continuation"]``.
    """
    c = build_coefficients(m)
    z = classify_zeros(c)
    if z.label != "4s" or z.labelled is None or m.D_aa <= 0.0:
        raise NotApplicableError(f"hypergeometric route needs four simple zeros, got {z.label}")
    y1, y2, y3, y4 = z.labelled
    a1, a2, a3, a4 = z.exponents
    continued = a1.real <= 0.0 or a2.real <= 0.0
    if continued and not allow_continuation:
        raise UnsupportedFamilyError("exponents a1, a2 must have positive real parts")
    x = abs((y2 - y1) / (y2.conjugate() - y1)) ** 2
    pref = m.D_aa * (y1 - y4) * (y3 - y2)
    offset = c.R(y1) / (y1 - y3) - c.S(y1)
    idx = {"a1": a1, "a2": a2, "a3": a3}
    G = g_hypergeometric(x, a1, a2, a3)
    om = 0.5 * (pref * G + offset)
    return ScalingEvaluation("hypergeometric", complex(x), idx, complex(G), float("nan"),
                             complex(0.5 * offset), complex(om),
                             meta={"zeros": z.labelled, "exponents": z.exponents,
                                   "prefactor": complex(0.5 * pref),
                                   "analytic_continuation": continued})


def _conjugate(e: ScalingEvaluation) -> ScalingEvaluation:
    return ScalingEvaluation(e.family, e.argument, e.indices, e.G, e.prefactor, e.offset,
                             e.omega.conjugate(), True, e.meta)


def omega_closed(m: DisorderModel) -> ScalingEvaluation:
    fam = structural_family(m)
    if fam == "none":
        return _clean(m)
    if fam in ("scalar", "supersymmetric", "fully_correlated", "potential", "distance",
               "shifted_distance") and m.alpha < 0.0:
        return _conjugate(omega_closed(m.reflected()))
    if fam in ("scalar", "supersymmetric", "fully_correlated", "potential") and m.alpha == 0.0:
        # Upper-triangular products: the diagonal part alone sets the growth.
        return _commuting(m, "no mean rotation")
    if fam == "scalar":
        return _airy(m)
    if fam == "supersymmetric":
        return _supersymmetric(m)
    if fam == "fully_correlated":
        return _fully_correlated(m)
    if fam == "potential":
        return _whittaker(m)
    if fam == "distance":
        return _distance(m)
    if fam == "shifted_distance":
        return _distance(m, shift=m.D_ww)
    if _is_elliptic(m):
        return _elliptic(m)
    try:
        return omega_hypergeometric(m, allow_continuation=True)
    except NotApplicableError as exc:
        raise UnsupportedFamilyError(str(exc)) from exc


# ------------------------------------------------------------ Riccati identities

def _riccati_rhs(family: str, x: complex, idx: dict) -> Callable[[complex, complex], complex]:
    if family == "airy":
        return lambda G, dG: G * G + dG - x
    if family == "bessel_K":
        return lambda G, dG: G * G - x * dG - (x * x + idx["nu"] ** 2)
    if family == "bessel_JN":
        return lambda G, dG: G * G - x * dG - (idx["nu"] ** 2 - x * x)
    if family == "bessel_I_imag":
        return lambda G, dG: G * G + x * dG - (x * x - idx["lam"] ** 2)
    if family == "whittaker":
        l, m = idx["l"], idx["m"]
        return lambda G, dG: G * G - 2.0 * x * dG - (x * x - 4.0 * l * x + 4.0 * m * m)
    if family == "elliptic_I":
        return lambda G, dG: G * G + x * dG + x * x / (1.0 - x * x) ** 2
    if family == "elliptic_II":
        return lambda G, dG: G * G + x * (1.0 - x * x) * dG - x * x * (1.0 - x * x)
    if family == "hypergeometric":
        a1, a2, a3 = idx["a1"], idx["a2"], idx["a3"]
        return lambda G, dG: ((1.0 - x) * G * G + x * (1.0 - x) * dG
                              + ((a3 - a1 - 1.0) * x + a1 + a2 - 1.0) * G - a1 * (1.0 - a3) * x)
    raise ValueError(f"no Riccati identity for family {family!r}")


def riccati_residual(e: ScalingEvaluation, rel_step: float = 1e-4) -> float:
    """|Riccati identity| at the evaluation's argument with a Richardson FD derivative."""
    if e.family == "none":
        raise ValueError("the clean family has no scaling function")
    x = complex(e.argument)
    real_arg = e.family != "whittaker"
    if real_arg:
        x = complex(x.real)
    direction = x / abs(x) if (not real_arg and x != 0) else 1.0
    h = rel_step * max(abs(x), 1e-2)
    if e.family in ("elliptic_I", "elliptic_II", "hypergeometric"):
        h = min(h, 0.25 * min(abs(x), 1.0 - abs(x)))

    def G(t):
        return scaling_function(e.family, t.real if real_arg else t, e.indices)

    def d(step):
        s = step * direction
        return (G(x + s) - G(x - s)) / (2.0 * s)

    dG = (4.0 * d(0.5 * h) - d(h)) / 3.0
    return float(abs(_riccati_rhs(e.family, x if not real_arg else x.real, e.indices)(G(x), dG)))
