"""Coefficient polynomials of the continuum problem and the zeros of Q.

Polynomials are ``numpy.polynomial.Polynomial`` objects in the complexified
Riccati variable.  The variance polynomial ``Q`` never vanishes on the real
axis for a non-degenerate covariance, so its zeros come in conjugate pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial

from .sl2 import DomainError, IwasawaParams, mu_continuum

PARAM_NAMES = ("alpha", "w", "u", "D_aa", "D_ww", "D_uu", "D_aw", "D_au", "D_wu")
_COV_INDEX = {
    "D_aa": (0, 0), "D_ww": (1, 1), "D_uu": (2, 2),
    "D_aw": (0, 1), "D_au": (0, 2), "D_wu": (1, 2),
}


class NotApplicableError(ValueError):
    """The operation requires a different zero pattern."""


@dataclass(frozen=True)
class DisorderModel:
    """Mean Iwasawa vector and 3x3 covariance, ordered (alpha, w, u)."""

    means: tuple[float, float, float]
    cov: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        m = tuple(float(x) for x in self.means)
        c = np.asarray(self.cov, dtype=float)
        if len(m) != 3 or c.shape != (3, 3):
            raise DomainError("means must have 3 entries and cov must be 3x3")
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(c))):
            raise DomainError("model parameters must be finite")
        scale = max(1.0, float(np.max(np.abs(c))))
        if np.max(np.abs(c - c.T)) > 1e-14 * scale:
            raise DomainError("covariance is not symmetric")
        c = 0.5 * (c + c.T)
        if np.min(np.linalg.eigvalsh(c)) < -1e-12 * scale:
            raise DomainError("covariance is not positive semi-definite")
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "cov", tuple(tuple(float(x) for x in row) for row in c))

    @classmethod
    def from_params(cls, alpha: float = 0.0, w: float = 0.0, u: float = 0.0,
                    D_aa: float = 0.0, D_ww: float = 0.0, D_uu: float = 0.0,
                    D_aw: float = 0.0, D_au: float = 0.0, D_wu: float = 0.0) -> "DisorderModel":
        cov = ((D_aa, D_aw, D_au), (D_aw, D_ww, D_wu), (D_au, D_wu, D_uu))
        return cls((alpha, w, u), cov)

    @property
    def alpha(self) -> float:
        return self.means[0]

    @property
    def w(self) -> float:
        return self.means[1]

    @property
    def u(self) -> float:
        return self.means[2]

    def __getattr__(self, name: str) -> float:
        if name in _COV_INDEX:
            i, j = _COV_INDEX[name]
            return self.cov[i][j]
        raise AttributeError(name)

    @property
    def cov_array(self) -> np.ndarray:
        return np.array(self.cov)

    @property
    def mean_params(self) -> IwasawaParams:
        return IwasawaParams(*self.means)

    def params(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in PARAM_NAMES}

    def replace(self, **kw: float) -> "DisorderModel":
        p = self.params()
        for k, v in kw.items():
            if k not in p:
                raise KeyError(k)
            p[k] = v
        return DisorderModel.from_params(**p)

    def scaled(self, s: float) -> "DisorderModel":
        return DisorderModel.from_params(**{k: s * v for k, v in self.params().items()})

    def reflected(self) -> "DisorderModel":
        """Image under z -> -z; the exponent maps to its complex conjugate."""
        p = self.params()
        for k in ("alpha", "u", "D_aw", "D_wu"):
            p[k] = -p[k]
        return DisorderModel.from_params(**p)

    def is_clean(self) -> bool:
        return not np.any(self.cov_array)

    def mu(self) -> complex:
        return mu_continuum(self.mean_params)


@dataclass(frozen=True)
class CoefficientSet:
    Q: Polynomial
    R: Polynomial
    S: Polynomial
    R0: Polynomial
    S0: Polynomial
    R2: Polynomial
    S2: Polynomial
    v: Polynomial
    sigma2: Polynomial


def _poly(*c: float) -> Polynomial:
    return Polynomial(np.array(c, dtype=float))


def build_coefficients(m: DisorderModel) -> CoefficientSet:
    a, w, u = m.means
    Daa, Dww, Duu = m.D_aa, m.D_ww, m.D_uu
    Daw, Dau, Dwu = m.D_aw, m.D_au, m.D_wu
    v = _poly(-a + u + 2 * Dwu, 2 * w + Daa + 2 * Dww - 2 * Dau, -a - 4 * Daw, Daa)
    q = _poly(Daa + Duu - 2 * Dau, 4 * Dwu - 4 * Daw, 2 * Daa + 4 * Dww - 2 * Dau,
              -4 * Daw, Daa)
    r0 = _poly(2 * (a - u), -4 * w, 2 * a)
    s0 = _poly(-2 * w, 2 * a)
    r2 = _poly(-4 * Daw, 2 * (Daa + 2 * Dww), -4 * Daw, 2 * Daa)
    s2 = _poly(Daa, 0.0, Daa)
    return CoefficientSet(Q=q, R=r0 + r2, S=s0 + s2, R0=r0, S0=s0, R2=r2, S2=s2,
                          v=v, sigma2=q)


@dataclass(frozen=True)
class ZeroPattern:
    """Zeros of Q grouped by multiplicity; ``None`` stands for infinity."""

    zeros: tuple[Optional[complex], ...]
    multiplicities: tuple[int, ...]
    label: str
    real_zero: bool = False
    exponents: Optional[tuple[complex, ...]] = None
    labelled: Optional[tuple[complex, complex, complex, complex]] = field(default=None)

    @property
    def infinite_multiplicity(self) -> int:
        return sum(k for z, k in zip(self.zeros, self.multiplicities) if z is None)


LABELS = ("none", "1q", "2d", "1d+2s", "4s", "degenerate-other")


def _degree(p: Polynomial) -> int:
    c = p.coef
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    if scale == 0.0:
        return -1
    nz = np.nonzero(np.abs(c) > 1e-14 * scale)[0]
    return int(nz[-1])


def polish_roots(p: Polynomial, roots: np.ndarray, steps: int = 2) -> np.ndarray:
    dp = p.deriv()
    out = np.array(roots, dtype=complex)
    for _ in range(steps):
        d = dp(out)
        ok = np.abs(d) > 1e-300
        out[ok] = out[ok] - p(out[ok]) / d[ok]
    return out


def quartic_zeros(q: Polynomial) -> np.ndarray:
    """Finite zeros of Q: companion-matrix eigenvalues plus Newton polish."""
    deg = _degree(q)
    if deg <= 0:
        return np.zeros(0, dtype=complex)
    c = q.coef[: deg + 1]
    r = np.roots(c[::-1])
    return polish_roots(Polynomial(c), r)


def _cluster(roots: np.ndarray) -> list[tuple[complex, int]]:
    groups: list[list[complex]] = []
    for r in sorted(roots, key=lambda z: (z.real, z.imag)):
        for g in groups:
            if abs(r - g[0]) <= 1e-6 * (1.0 + abs(g[0])):
                g.append(r)
                break
        else:
            groups.append([r])
    return [(complex(np.mean(g)), len(g)) for g in groups]


def _label_from_multiplicities(mults: list[int]) -> str:
    ms = sorted(mults, reverse=True)
    return {
        (4,): "1q", (2, 2): "2d", (2, 1, 1): "1d+2s", (1, 1, 1, 1): "4s",
    }.get(tuple(ms), "degenerate-other")


def structural_family(m: DisorderModel) -> Optional[str]:
    """Family implied by which covariances vanish, if the pattern is special."""
    Daa, Dww, Duu = m.D_aa, m.D_ww, m.D_uu
    Daw, Dau, Dwu = m.D_aw, m.D_au, m.D_wu
    if m.is_clean():
        return "none"
    if Daa == 0.0:
        if Dww == 0.0:
            return "scalar"
        if Duu == 0.0:
            return "supersymmetric"
        if abs(Dwu * Dwu - Dww * Duu) <= 1e-12 * Dww * Duu:
            return "fully_correlated"
        return "potential"
    if Dww == 0.0 and Duu == 0.0:
        return "distance"
    if Daw == 0.0 and Dwu == 0.0 and Dau == 2.0 * Dww and Duu == 4.0 * Dww:
        return "shifted_distance"
    return None


_STRUCTURAL_LABELS = {
    "none": "none", "scalar": "1q", "supersymmetric": "2d", "distance": "2d",
    "shifted_distance": "2d", "fully_correlated": "2d", "potential": "1d+2s",
}


def label_zeros(zeros: list[tuple[complex, int]], inf_mult: int) -> ZeroPattern:
    zs: list[Optional[complex]] = [z for z, _ in zeros]
    ms = [k for _, k in zeros]
    if inf_mult:
        zs.append(None)
        ms.append(inf_mult)
    real = any(abs(z.imag) <= 1e-9 * (1.0 + abs(z)) for z, _ in zeros)
    label = _label_from_multiplicities(ms)
    return ZeroPattern(tuple(zs), tuple(ms), label, real)


def classify_zeros(c: CoefficientSet, model: Optional[DisorderModel] = None) -> ZeroPattern:
    """Group the four zeros of Q (infinity included) and attach a pattern label.

    When ``model`` is given its structural family overrides the numerical
    clustering label, since floating-point arithmetic may split a true double
    zero into two nearby simple ones.
    """
    deg = _degree(c.Q)
    if deg < 0:
        return ZeroPattern((), (), "none")
    roots = quartic_zeros(c.Q)
    pat = label_zeros(_cluster(roots), 4 - deg)
    if model is not None:
        fam = structural_family(model)
        if fam is not None and _STRUCTURAL_LABELS[fam] != pat.label:
            pat = ZeroPattern(pat.zeros, pat.multiplicities, _STRUCTURAL_LABELS[fam],
                              pat.real_zero)
    if pat.label == "4s" and not pat.real_zero:
        ys = labelled_zeros(roots)
        pat = ZeroPattern(pat.zeros, pat.multiplicities, pat.label, pat.real_zero,
                          exponents=_exponents_at(c, ys), labelled=ys)
    return pat


def labelled_zeros(roots: np.ndarray) -> tuple[complex, complex, complex, complex]:
    """Order (y1, y2, y3, y4) with y1, y2 below the axis, y3 = y2*, y4 = y1*.

    y1 is the lower zero with the smaller real part; the exponent formula is
    symmetric under the alternative choice only up to the conjugate solution,
    so this choice is pinned by the cross-route tests.
    """
    lower = sorted((complex(r) for r in roots if r.imag < 0), key=lambda z: (z.real, z.imag))
    if len(lower) != 2:
        raise NotApplicableError("expected two zeros in each half-plane")
    y1, y2 = lower
    return (y1, y2, y2.conjugate(), y1.conjugate())


def _exponents_at(c: CoefficientSet, ys) -> tuple[complex, ...]:
    dq = c.Q.deriv()
    return tuple(complex(c.R(y) / dq(y)) for y in ys)


def exponents(c: CoefficientSet, z: ZeroPattern) -> tuple[complex, complex, complex, complex]:
    """Residues a_i = R(y_i)/Q'(y_i) at four simple finite zeros."""
    if z.label != "4s" or z.labelled is None:
        raise NotApplicableError(f"exponents need four simple finite zeros, got {z.label}")
    return tuple(_exponents_at(c, z.labelled))  # type: ignore[return-value]


@dataclass(frozen=True)
class ZeroCurrentVerdict:
    zero_current: bool
    residual: float
    reason: str


def zero_current_test(m: DisorderModel, tol: float = 1e-8) -> ZeroCurrentVerdict:
    """Decide whether the stationary current vanishes."""
    c = build_coefficients(m)
    z = classify_zeros(c, m)
    if z.label == "4s" and z.exponents is not None:
        a1, a2 = z.exponents[0], z.exponents[1]
        res = abs((a1 + a2).imag)
        return ZeroCurrentVerdict(res < tol, res, "Im(a1 + a2)")
    # Degenerate patterns: the current vanishes iff the drift integral
    # of R/Q over the real line does, which needs a vanishing mean rotation
    # for the patterns with a zero at infinity.
    if m.D_aa == 0.0:
        res = abs(m.alpha)
        return ZeroCurrentVerdict(res < tol, res, "mean rotation")
    if z.label == "none":
        mu = m.mu()
        return ZeroCurrentVerdict(abs(mu.imag) < tol, abs(mu.imag), "clean exponent")
    res = abs(angular_drift_integral(m))
    return ZeroCurrentVerdict(res < tol, res, "drift integral")


def angular_drift_integral(m: DisorderModel, n: int = 4096) -> float:
    """J(pi) = 2 * integral over a period of v_a / sigma_a^2 (needs D_aa > 0)."""
    from .fp_solver import angular_coefficients

    phi = -math.pi + 2.0 * math.pi * np.arange(n) / n
    va, s2 = angular_coefficients(m, phi)[:2]
    return float(2.0 * np.sum(va / s2) * (2.0 * math.pi / n))
