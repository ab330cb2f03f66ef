"""Parameter maps into the nine-parameter continuum model."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .closed_form import g_airy, g_bessel_i_imag, g_bessel_jn, g_bessel_k, g_whittaker
from .coeffs import DisorderModel
from .sl2 import DomainError

ZD_FIELDS = ("aa", "ab", "ac", "ad", "bb", "bc", "bd", "cc", "cd", "dd")


@dataclass(frozen=True)
class ZdCovariances:
    """Second moments of the entries of A = I + [[a, b], [c, d]] with zero means."""

    aa: float = 0.0
    ab: float = 0.0
    ac: float = 0.0
    ad: float = 0.0
    bb: float = 0.0
    bc: float = 0.0
    bd: float = 0.0
    cc: float = 0.0
    cd: float = 0.0
    dd: float = 0.0

    def matrix(self) -> np.ndarray:
        return np.array([[self.aa, self.ab, self.ac, self.ad],
                         [self.ab, self.bb, self.bc, self.bd],
                         [self.ac, self.bc, self.cc, self.cd],
                         [self.ad, self.bd, self.cd, self.dd]], dtype=float)

    def __post_init__(self) -> None:
        c = self.matrix()
        if not np.all(np.isfinite(c)):
            raise DomainError("covariances must be finite")
        scale = max(1.0, float(np.abs(c).max()))
        if np.linalg.eigvalsh(c).min() < -1e-12 * scale:
            raise DomainError("the 4x4 covariance of (a, b, c, d) is not positive semi-definite")


def zd_to_model(z: ZdCovariances) -> tuple[DisorderModel, float]:
    """Iwasawa parameters of M = A / sqrt(det A) to leading order, and the offset.

    The exponent of the A-product is Gamma = Omega + offset.
    """
    model = DisorderModel.from_params(
        alpha=-z.ac,
        w=0.25 * (-z.aa + 2.0 * z.cc + z.dd + 2.0 * z.bc),
        u=-z.ab - 2.0 * z.ac + z.cd,
        D_aa=z.cc,
        D_ww=0.25 * (z.aa + z.dd - 2.0 * z.ad),
        D_uu=z.bb + z.cc + 2.0 * z.bc,
        D_aw=0.5 * (z.ac - z.cd),
        D_au=z.bc + z.cc,
        D_wu=0.5 * (z.ab + z.ac - z.bd - z.cd),
    )
    return model, -0.25 * (z.aa + z.dd + 2.0 * z.bc)


def zd_example1(sigma2: float = 1.0) -> ZdCovariances:
    """Independent off-diagonal entries b, c of variance sigma2."""
    return ZdCovariances(bb=sigma2, cc=sigma2)


def zd_example2(sigma2: float = 1.0) -> ZdCovariances:
    """All four entries independent with variance sigma2."""
    return ZdCovariances(aa=sigma2, bb=sigma2, cc=sigma2, dd=sigma2)


FLAVORS = ("halperin", "susy", "distance", "mixed")


@dataclass(frozen=True)
class QuantumModel:
    """Regular lattice of point scatterers probed at energy k^2.

    Impurity strengths are w (supersymmetric part) and v = k u (potential
    part).  ``var_alpha`` is the phase variance of forward scatterers and is
    only used by the distance flavor.
    """

    k: float
    ell: float
    flavor: str
    mean_w: float = 0.0
    mean_v: float = 0.0
    var_w: float = 0.0
    var_v: float = 0.0
    cov_wv: float = 0.0
    var_alpha: float = 0.0

    def __post_init__(self) -> None:
        if self.k <= 0 or self.ell <= 0:
            raise DomainError("k and ell must be positive")
        if self.flavor not in FLAVORS:
            raise DomainError(f"flavor must be one of {FLAVORS}")
        if min(self.var_w, self.var_v, self.var_alpha) < 0:
            raise DomainError("variances must be non-negative")
        if self.cov_wv * self.cov_wv > self.var_w * self.var_v * (1 + 1e-12):
            raise DomainError("|cov(w, v)| exceeds sqrt(var_w var_v)")
        checks = {
            "halperin": self.var_w == 0 and self.cov_wv == 0 and self.var_alpha == 0,
            "susy": self.var_v == 0 and self.cov_wv == 0 and self.var_alpha == 0,
            "distance": self.var_w == 0 and self.var_v == 0 and self.cov_wv == 0,
            "mixed": self.var_alpha == 0 and self.var_w > 0,
        }
        if not checks[self.flavor]:
            raise DomainError(f"statistics are inconsistent with flavor {self.flavor!r}")


def quantum_to_model(q: QuantumModel) -> DisorderModel:
    """Iwasawa parameters of one lattice cell: alpha = k ell, u = v / k."""
    k = q.k
    return DisorderModel.from_params(
        alpha=k * q.ell, w=q.mean_w, u=q.mean_v / k,
        D_aa=q.var_alpha, D_ww=q.var_w, D_uu=q.var_v / k**2, D_wu=q.cov_wv / k)


def mixed_energy_shift(q: QuantumModel) -> float:
    """Energy offset -D_wu / alpha (k = 1 units) between the lattice and the decorrelated continuum."""
    m = quantum_to_model(q)
    return -m.D_wu / m.alpha


@dataclass(frozen=True)
class MixedParameters:
    nu: float
    g: float
    sigma2: float
    E0: float
    xi: complex
    theta: complex
    meta: dict = field(default_factory=dict)


def mixed_parameters(q: QuantumModel, energy_shift: float = 0.0) -> MixedParameters:
    """Decorrelated-noise parameters (nu, g, sigma^2, E0) and the Whittaker data (xi, theta).

    Uses E = k^2 = 1 units, so requires k = 1.  ``energy_shift`` is added to
    the energy entering theta.
    """
    if q.flavor != "mixed" or not math.isclose(q.k, 1.0):
        raise DomainError("mixed_parameters needs the mixed flavor at k = 1")
    m = quantum_to_model(q)
    a, w, u = m.means
    dww, duu, dwu = m.D_ww, m.D_uu, m.D_wu
    g = dww / a
    nu = (-w / a - dwu / (2.0 * dww)) / g
    sigma2 = (duu * dww - dwu**2) / (a * dww)
    E0 = u / a - w * dwu / (a * dww) - (dwu / (2.0 * dww)) ** 2
    Et = 1.0 + energy_shift - E0
    r = cmath.sqrt(sigma2 / g**3)
    xi = -0.5j * r
    theta = 0.5j * (0.25 * r - Et / cmath.sqrt(sigma2 * g))
    return MixedParameters(nu, g, sigma2, E0, complex(xi), complex(theta),
                           meta={"energy_shift": energy_shift})


def omega_mixed(q: QuantumModel) -> complex:
    """Omega per cell from the decorrelated continuum, W_{-theta, nu/2}(xi).

    The continuum exponent per unit length is the complex conjugate of ours
    (opposite sign convention for the integrated density of states).
    """
    p = mixed_parameters(q, mixed_energy_shift(q))
    G = g_whittaker(p.xi, -p.theta, 0.5 * p.nu)
    return complex(q.k * q.ell * p.g * G).conjugate()


def omega_halperin(q: QuantumModel) -> complex:
    """Omega per cell = ell (sigma^2/2)^(1/3) G_Airy(E_eff / (sigma^2/2)^(2/3))."""
    if q.flavor != "halperin":
        raise DomainError("omega_halperin needs the halperin flavor")
    k, ell = q.k, q.ell
    s = (q.var_v / (2.0 * ell)) ** (1.0 / 3.0)
    W1, W2 = q.mean_w / ell, q.mean_v / ell
    return ell * s * g_airy((W1 * W1 + W2 - k * k) / (s * s))


def omega_susy(q: QuantumModel) -> complex:
    """Omega per cell = ell g G_nu(sqrt(<W2> - k^2) / g), g = var_w / ell, nu = <w> / var_w."""
    if q.flavor != "susy":
        raise DomainError("omega_susy needs the susy flavor")
    k, ell = q.k, q.ell
    g = q.var_w / ell
    nu = q.mean_w / q.var_w
    e = q.mean_v / ell - k * k
    if e >= 0:
        return ell * g * g_bessel_k(math.sqrt(e) / g, nu)
    return ell * g * g_bessel_jn(math.sqrt(-e) / g, nu)


def omega_distance(q: QuantumModel) -> complex:
    """Omega per cell for random forward-scatterer phases (index -i lambda)."""
    if q.flavor != "distance":
        raise DomainError("omega_distance needs the distance flavor")
    k, ell, d = q.k, q.ell, q.var_alpha
    lam = (q.mean_v - 2.0 * k * k * ell) / (2.0 * k * d)
    x = math.hypot(2.0 * k * q.mean_w, q.mean_v) / (2.0 * k * d)
    return d * g_bessel_i_imag(x, lam)


def hyperbolic_bm_model(eps: float) -> DisorderModel:
    """Brownian motion on the hyperbolic plane with drift eps; gamma = eps / 2."""
    if eps <= 0:
        raise DomainError("eps must be positive")
    return DisorderModel.from_params(w=-0.5 * eps, D_ww=0.25, D_uu=1.0)


def hyperbolic_bm_density(eps: float, z: np.ndarray) -> np.ndarray:
    """Stationary density of the Riccati variable for the hyperbolic-BM model."""
    log_c = math.lgamma(eps + 0.5) - math.lgamma(eps) - 0.5 * math.log(math.pi)
    return np.exp(log_c - (eps + 0.5) * np.log1p(np.asarray(z, dtype=float) ** 2))
