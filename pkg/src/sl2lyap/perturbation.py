"""Weak-disorder series for the characteristic exponent.

The series is asymptotic, not convergent: it misses contributions such as the
exponentially small imaginary part outside the band, so it is used only as an
oracle at small covariances.
"""
from __future__ import annotations

import cmath
import math

from .coeffs import DisorderModel
from .sl2 import IwasawaParams, mu_exact


class PoleError(ZeroDivisionError):
    """The expansion has a pole here (band edge or degenerate mean matrix)."""


# Monomials in the six covariances, ordered as (D_aa, D_ww, D_uu, D_aw, D_au, D_wu).
COV_NAMES = ("D_aa", "D_ww", "D_uu", "D_aw", "D_au", "D_wu")


def _mu(m: DisorderModel) -> complex:
    mu = m.mu()
    if mu == 0:
        raise PoleError("mu = 0: the weak-disorder series is singular at the band edge")
    return mu


def omega2_terms(a: float, w: float, u: float, mu: complex) -> dict[tuple[str, ...], complex]:
    """Coefficients c with -8 mu^2 Omega_2 = sum c * D."""
    return {
        ("D_aa",): 4 * w**2 + u**2,
        ("D_ww",): 4 * a * (a - u),
        ("D_uu",): a**2,
        ("D_aw",): 4 * (-u * mu - 2 * a * w + w * u),
        ("D_au",): 2 * (2 * w * mu - 2 * w**2 - a * u),
        ("D_wu",): 4 * a * (w - mu),
    }


def omega4_terms(a: float, w: float, u: float, mu: complex) -> dict[tuple[str, ...], complex]:
    """Coefficients c with -128 mu^5 Omega_4 = sum c * D_i D_j (21 monomials)."""
    return {
        ("D_aa", "D_aa"): (4 * w**2 + u**2) * (16 * a**2 - 16 * a * u + 4 * w**2 + 5 * u**2),
        ("D_ww", "D_ww"): 16 * a * (a - u) * (a**2 - a * u + 4 * w**2),
        ("D_uu", "D_uu"): 5 * a**4,
        ("D_aw", "D_aw"): 16 * (4 * u * w * (2 * a - u) * mu + 20 * a**2 * w**2
                                + a**2 * u**2 - 20 * a * w**2 * u - a * u**3 + 4 * w**2 * u**2),
        ("D_au", "D_au"): 4 * a * (-8 * w * (2 * a - u) * mu + 8 * a**2 * u + 20 * a * w**2
                                   - 3 * a * u**2 - 8 * u * w**2),
        ("D_wu", "D_wu"): 16 * a**2 * (-4 * w * mu + a**2 - a * u + 4 * w**2),
        ("D_aa", "D_ww"): 8 * (20 * a**2 * w**2 - a**2 * u**2 + a * u**3
                               - 20 * a * u * w**2 + 6 * u**2 * w**2),
        ("D_aa", "D_uu"): 2 * (8 * a**3 * u + 12 * a**2 * w**2 - 3 * a**2 * u**2 + 8 * w**4),
        ("D_aa", "D_aw"): 8 * (2 * a - u) * (-2 * u * (2 * a - u) * mu
                                             - w * (8 * a**2 - 8 * a * u + 5 * u**2 + 12 * w**2)),
        ("D_aa", "D_au"): 4 * (4 * w * (2 * a - u)**2 * mu - 8 * a**3 * u - 32 * a**2 * w**2
                               + 4 * a**2 * u**2 - a * u**3 + 20 * a * u * w**2
                               - 8 * w**4 - 6 * u**2 * w**2),
        ("D_aa", "D_wu"): 8 * (-2 * (2 * a - u) * (2 * w**2 + a * u) * mu
                               + w * (8 * a**3 + 12 * a * w**2 - 3 * a * u**2 - 8 * u * w**2)),
        ("D_ww", "D_uu"): 8 * a**2 * (-a**2 + a * u + 6 * w**2),
        ("D_ww", "D_aw"): 32 * w * (-2 * w * u * mu - 6 * a**3 + 9 * a**2 * u - 4 * a * w**2
                                    - 3 * a * u**2 + 2 * u * w**2),
        ("D_ww", "D_au"): 16 * a * (4 * (a - u) * w * mu + a**2 * u - 10 * a * w**2
                                    - a * u**2 + 4 * u * w**2),
        ("D_ww", "D_wu"): 32 * a * w * (-2 * w * mu + 3 * a**2 - 3 * a * u + 2 * w**2),
        ("D_uu", "D_aw"): 8 * a * (2 * (-2 * a**2 + a * u + 2 * w**2) * mu
                                   - w * (2 * a**2 + 3 * a * u + 8 * w**2)),
        ("D_uu", "D_au"): 4 * a**2 * (4 * w * mu - 4 * a**2 - a * u - 6 * w**2),
        ("D_uu", "D_wu"): 8 * a**3 * (5 * w - 2 * mu),
        ("D_aw", "D_au"): 16 * (2 * (2 * a - u) * (a * u - 2 * w**2) * mu
                                # 12 a w^2: forced by the F_2 recursion (checked symbolically in tests)
                                + w * (8 * a**3 - 4 * a**2 * u + a * u**2 + 12 * a * w**2
                                       - 4 * u * w**2)),
        ("D_aw", "D_wu"): 32 * (4 * w**3 * mu - 4 * a**4 + 5 * a**3 * u - 2 * a**2 * w**2
                                - a**2 * u**2 - 4 * w**4),
        ("D_au", "D_wu"): 16 * a * (2 * (2 * a**2 - a * u + 2 * w**2) * mu
                                    + w * (-6 * a**2 + a * u - 4 * w**2)),
    }


def _contract(terms: dict, m: DisorderModel) -> complex:
    total = 0j
    for key, coef in terms.items():
        prod = 1.0
        for name in key:
            prod *= getattr(m, name)
        total += coef * prod
    return total


def omega2(m: DisorderModel) -> complex:
    mu = _mu(m)
    return -_contract(omega2_terms(m.alpha, m.w, m.u, mu), m) / (8 * mu**2)


def omega4(m: DisorderModel) -> complex:
    mu = _mu(m)
    return -_contract(omega4_terms(m.alpha, m.w, m.u, mu), m) / (128 * mu**5)


def omega_weak(m: DisorderModel, order: int = 4) -> complex:
    if order not in (0, 2, 4):
        raise ValueError(f"order must be 0, 2 or 4, got {order}")
    om = _mu(m)
    if order >= 2:
        om += omega2(m)
    if order >= 4:
        om += omega4(m)
    return complex(om)


def omega2_general(m: DisorderModel) -> complex:
    """Second-order term for a product with finite (not small) mean parameters.

    Here the means are the Iwasawa parameters of one step and mu is the exact
    exponent of the mean matrix, 2 cosh mu = tr M0.
    """
    a, w, u = m.alpha, m.w, m.u
    mu = mu_exact(IwasawaParams(a, w, u))
    sa, ca = math.sin(a), math.cos(a)
    den = -8 * sa * cmath.sinh(mu) ** 2
    # sin(pi) is 1.2e-16 in floating point
    if abs(sa) < 1e-12 or abs(cmath.sinh(mu)) < 1e-12:
        raise PoleError("sin(alpha) sinh(mu)^2 vanishes")
    ew = math.exp(w)
    ch = cmath.cosh(w - mu)
    num = (sa * (u**2 * ew**2 + 4 * math.sinh(w) ** 2) * m.D_aa
           + 4 * sa**2 * (sa - u * ca) * m.D_ww
           + sa**3 * ew**2 * m.D_uu
           - 8 * (ch - ca) * (1 - ca * cmath.exp(-w - mu)) * m.D_aw
           - 4 * sa * cmath.exp(w - mu) * (ch - ca) * m.D_au
           - 4 * sa**2 * (ca - cmath.exp(w - mu)) * m.D_wu)
    return complex(num / den)
