"""Unimodular 2x2 matrices, Iwasawa coordinates and the projective line."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

DET_RTOL = 1e-12


class DomainError(ValueError):
    """Input lies outside the domain of an operation."""


@dataclass(frozen=True)
class Mat2:
    m11: float
    m12: float
    m21: float
    m22: float

    def __post_init__(self) -> None:
        scale = max(1.0, abs(self.m11 * self.m22), abs(self.m12 * self.m21))
        if abs(self.det() - 1.0) > DET_RTOL * scale:
            raise DomainError(f"determinant {self.det()!r} is not 1")

    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m21

    def trace(self) -> float:
        return self.m11 + self.m22

    def __matmul__(self, other: "Mat2") -> "Mat2":
        a, b, c, d = self.m11, self.m12, self.m21, self.m22
        e, f, g, h = other.m11, other.m12, other.m21, other.m22
        return Mat2(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def to_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    @classmethod
    def from_array(cls, a) -> "Mat2":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0, 0]), float(a[0, 1]), float(a[1, 0]), float(a[1, 1]))

    @classmethod
    def identity(cls) -> "Mat2":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def rotation(cls, alpha: float) -> "Mat2":
        c, s = math.cos(alpha), math.sin(alpha)
        return cls(c, -s, s, c)

    @classmethod
    def stretch(cls, w: float) -> "Mat2":
        return cls(math.exp(w), 0.0, 0.0, math.exp(-w))

    @classmethod
    def shear(cls, u: float) -> "Mat2":
        return cls(1.0, u, 0.0, 1.0)


@dataclass(frozen=True)
class IwasawaParams:
    alpha: float
    w: float
    u: float


class _Infinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITY"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()
ProjectivePoint = Union[float, _Infinity]


def principal_angle(a: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    r = math.remainder(a, 2.0 * math.pi)
    return math.pi if r == -math.pi else r


def iwasawa_compose(p: IwasawaParams) -> Mat2:
    c, s = math.cos(p.alpha), math.sin(p.alpha)
    e = math.exp(p.w)
    ie = 1.0 / e
    # R(alpha) @ diag(e, 1/e) @ [[1, u], [0, 1]]
    return Mat2(c * e, c * e * p.u - s * ie, s * e, s * e * p.u + c * ie)


def iwasawa_decompose(m: Mat2) -> IwasawaParams:
    """Gram-Schmidt on the columns: the first column fixes the angle and stretch."""
    if not isinstance(m, Mat2):
        m = Mat2.from_array(m)
    norm1 = math.hypot(m.m11, m.m21)
    alpha = principal_angle(math.atan2(m.m21, m.m11))
    u = (m.m11 * m.m12 + m.m21 * m.m22) / (norm1 * norm1)
    return IwasawaParams(alpha, math.log(norm1), u)


def moebius_apply(m: Mat2, z: ProjectivePoint) -> ProjectivePoint:
    if z is INFINITY:
        num, den = m.m11, m.m21
    else:
        num = m.m11 * z + m.m12
        den = m.m21 * z + m.m22
    if den == 0.0:
        return INFINITY
    return num / den


def moebius_upper(m: Mat2, z: complex) -> complex:
    """Action on the upper half-plane."""
    return (m.m11 * z + m.m12) / (m.m21 * z + m.m22)


def hyperbolic_distance(z1: complex, z2: complex) -> float:
    x, y = z1.real, z1.imag
    xp, yp = z2.real, z2.imag
    return math.acosh(((x - xp) ** 2 + y * y + yp * yp) / (2.0 * y * yp))


def mu_exact(means: IwasawaParams) -> complex:
    """Root of 2 cosh(mu) = tr M0 for the mean matrix M0."""
    a, w, u = means.alpha, means.w, means.u
    tr = math.sin(a) * math.exp(w) * u + 2.0 * math.cos(a) * math.cosh(w)
    if abs(tr) <= 2.0:
        return complex(0.0, math.copysign(math.acos(tr / 2.0), math.sin(a) if math.sin(a) else a))
    mu = cmath.acosh(tr / 2.0)
    return complex(abs(mu.real), mu.imag if mu.real >= 0 else -mu.imag)


def mu_continuum(means: IwasawaParams) -> complex:
    a, w, u = means.alpha, means.w, means.u
    m2 = w * w + a * u - a * a
    if m2 >= 0.0:
        return complex(math.sqrt(m2), 0.0)
    return complex(0.0, math.copysign(math.sqrt(-m2), a))
