"""Monte Carlo estimates of gamma, j and the invariant angular density.

Two simulators:

* ``simulate_lyapunov`` / ``simulate_rotation_number`` / ``empirical_density``
  multiply random Iwasawa matrices ``R(alpha) D(w) U(u)`` acting on a vector.
  The Riccati variable is ``z = x1 / x2`` and ``phi = 2 arctan z``.
* ``simulate_sde`` integrates the Stratonovich limit of that product on the
  vector itself (Heun scheme), so the finite-time blow-up of ``z`` never has
  to be handled.

Each replica owns a generator spawned from ``SeedSequence(seed)``; replicas
may run on threads, and the reduction is done in replica order, so results
are bit-identical for a given configuration.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from numba import njit

from .coeffs import DisorderModel
from .fp_solver import DensityProfile

_CHUNK = 1 << 16
# initial vector angle; the lifted angle must start here for phi = pi - 2 theta
_THETA0 = 0.3


class StepSizeError(RuntimeError):
    """SDE step too large for the drift and diffusion scales of the model."""


@dataclass(frozen=True)
class McConfig:
    n_steps: int = 1_000_000
    n_replicas: int = 8
    seed: int = 0
    renorm_interval: int = 1
    burn_in: Optional[int] = None  # steps; default 10% of n_steps
    distribution: str = "gaussian"
    # Per-step law is the model scaled by this factor and estimates are divided
    # by it, so they approximate the continuum exponent.
    continuum_scale: Optional[float] = None
    dt: float = 1e-3  # SDE only
    thin: int = 1  # density sampling stride
    workers: int = 1

    def __post_init__(self) -> None:
        if self.n_steps < 1000:
            raise ValueError("n_steps must be at least 1000")
        if self.renorm_interval < 1:
            raise ValueError("renorm_interval must be >= 1")
        if self.n_replicas < 2:
            raise ValueError("at least two replicas are needed for an error bar")
        if self.distribution != "gaussian":
            raise ValueError(f"unsupported step distribution {self.distribution!r}")
        if self.burn_in is not None and not 0 <= self.burn_in < self.n_steps:
            raise ValueError("burn_in must lie in [0, n_steps)")
        if self.continuum_scale is not None and self.continuum_scale <= 0:
            raise ValueError("continuum_scale must be positive")
        if self.dt <= 0 or self.thin < 1:
            raise ValueError("dt and thin must be positive")

    @property
    def burn(self) -> int:
        return self.n_steps // 10 if self.burn_in is None else self.burn_in


@dataclass(frozen=True)
class McEstimate:
    gamma: float
    gamma_stderr: float
    j: float
    j_stderr: float
    n_samples: int
    n_replicas: int
    per_replica: np.ndarray = field(repr=False)  # columns (gamma, j)

    @property
    def omega(self) -> complex:
        return complex(self.gamma, math.pi * self.j)


def gaussian_sqrt(cov: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD matrix; tiny negative eigenvalues are clipped."""
    lam, vec = np.linalg.eigh(np.asarray(cov, dtype=float))
    return (vec * np.sqrt(np.clip(lam, 0.0, None))) @ vec.T


def _step_law(m: DisorderModel, cfg: McConfig) -> tuple[np.ndarray, np.ndarray, float]:
    s = 1.0 if cfg.continuum_scale is None else cfg.continuum_scale
    return np.asarray(m.means) * s, gaussian_sqrt(m.cov_array * s), s


def _replica_rngs(cfg: McConfig) -> list[np.random.Generator]:
    return [np.random.default_rng(ss) for ss in np.random.SeedSequence(cfg.seed).spawn(cfg.n_replicas)]


def _map_replicas(fn, cfg: McConfig) -> list:
    rngs = _replica_rngs(cfg)
    if cfg.workers <= 1:
        return [fn(r) for r in rngs]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(fn, rngs))


# ------------------------------------------------------------ product kernel

@njit(cache=True, nogil=True)
def _product_chunk(params, state, renorm, hist, bin_width, thin, record, zbuf):
    # state: x1, x2, log-norm, lifted angle of the vector, step counter, samples taken
    x1, x2, logn, theta, k = state[0], state[1], state[2], state[3], state[4]
    nz = int(state[5])
    nb = hist.shape[0]
    for i in range(params.shape[0]):
        a, w, u = params[i, 0], params[i, 1], params[i, 2]
        t0 = math.atan2(x2, x1)
        # U then D keep the sign of x2, so the angle moves by less than pi
        x1 = (x1 + u * x2) * math.exp(w)
        x2 = x2 * math.exp(-w)
        d = math.atan2(x2, x1) - t0
        if d > math.pi:
            d -= 2.0 * math.pi
        elif d < -math.pi:
            d += 2.0 * math.pi
        c, s = math.cos(a), math.sin(a)
        x1, x2 = c * x1 - s * x2, s * x1 + c * x2
        theta += d + a
        k += 1.0
        if k % renorm == 0.0:
            r = math.hypot(x1, x2)
            logn += math.log(r)
            x1 /= r
            x2 /= r
        if record and k % thin == 0.0:
            # phi = 2 arctan(x1 / x2) = pi - 2 theta (mod 2 pi)
            phi = math.pi - 2.0 * theta
            phi -= 2.0 * math.pi * math.floor((phi + math.pi) / (2.0 * math.pi))
            b = int((phi + math.pi) / bin_width)
            if 0 <= b < nb:
                hist[b] += 1.0
            if nz < zbuf.shape[0]:
                zbuf[nz] = x1 / x2 if x2 != 0.0 else math.inf
                nz += 1
    state[0], state[1], state[2], state[3], state[4] = x1, x2, logn, theta, k
    state[5] = nz


def _run_product(m: DisorderModel, cfg: McConfig, rng: np.random.Generator, bins: int = 1,
                 samples: int = 0):
    """One replica: returns (gamma, j, phi histogram, z samples every cfg.thin steps)."""
    mean, L, _ = _step_law(m, cfg)
    state = np.array([math.cos(_THETA0), math.sin(_THETA0), 0.0, _THETA0, 0.0, 0.0])
    hist = np.zeros(bins)
    width = 2.0 * math.pi / bins
    zbuf = np.empty(samples)
    done, mark = 0, None
    while done < cfg.n_steps:
        if done == cfg.burn and mark is None:
            mark = (state[2] + math.log(math.hypot(state[0], state[1])), state[3])
        limit = cfg.burn if done < cfg.burn else cfg.n_steps
        n = min(_CHUNK, limit - done)
        p = rng.standard_normal((n, 3)) @ L + mean
        _product_chunk(p, state, cfg.renorm_interval, hist, width, cfg.thin,
                       done >= cfg.burn, zbuf)
        done += n
    if mark is None:
        mark = (0.0, 0.0)
    n_post = cfg.n_steps - cfg.burn
    logn = state[2] + math.log(math.hypot(state[0], state[1]))
    gamma = (logn - mark[0]) / n_post
    # net passages of z through infinity: the vector angle crosses a multiple of pi
    crossings = math.floor(state[3] / math.pi) - math.floor(mark[1] / math.pi)
    return gamma, crossings / n_post, hist, zbuf[:int(state[5])]


def _estimate(rows: np.ndarray, scale: float, n_samples: int) -> McEstimate:
    rows = rows / scale
    mean = rows.mean(axis=0)
    err = rows.std(axis=0, ddof=1) / math.sqrt(rows.shape[0])
    # stderr > 0 even when every replica agrees exactly (clean products)
    tiny = np.finfo(float).eps * np.maximum(np.abs(mean), 1.0)
    err = np.maximum(err, tiny)
    return McEstimate(float(mean[0]), float(err[0]), float(mean[1]), float(err[1]),
                      n_samples, rows.shape[0], rows)


def simulate_product(m: DisorderModel, cfg: McConfig) -> McEstimate:
    """Joint gamma and j estimate from the matrix product."""
    _, _, s = _step_law(m, cfg)
    out = _map_replicas(lambda r: _run_product(m, cfg, r), cfg)
    rows = np.array([[g, j] for g, j, _, _ in out])
    return _estimate(rows, s, (cfg.n_steps - cfg.burn) * cfg.n_replicas)


def simulate_lyapunov(m: DisorderModel, cfg: McConfig) -> McEstimate:
    return simulate_product(m, cfg)


def simulate_rotation_number(m: DisorderModel, cfg: McConfig) -> McEstimate:
    return simulate_product(m, cfg)


def empirical_density(m: DisorderModel, cfg: McConfig, bins: int = 128) -> DensityProfile:
    """Histogram of phi = 2 arctan z over the stationary stretch, normalized on [-pi, pi)."""
    _, _, s = _step_law(m, cfg)
    out = _map_replicas(lambda r: _run_product(m, cfg, r, bins=bins), cfg)
    hist = np.sum([h for _, _, h, _ in out], axis=0)
    width = 2.0 * math.pi / bins
    values = hist / (hist.sum() * width)
    phi = -math.pi + width * (np.arange(bins) + 0.5)
    j = float(np.mean([jj for _, jj, _, _ in out])) / s
    return DensityProfile(phi, values, j, 0.0, False, "mc",
                          meta={"counts": hist, "bin_width": width, "samples": int(hist.sum())})


def riccati_samples(m: DisorderModel, cfg: McConfig, n_samples: int) -> np.ndarray:
    """Samples of z every cfg.thin steps of the stationary stretch, pooled over replicas."""
    per = -(-n_samples // cfg.n_replicas)
    if per * cfg.thin > cfg.n_steps - cfg.burn:
        raise ValueError("not enough post burn-in steps for the requested samples")
    out = _map_replicas(lambda r: _run_product(m, cfg, r, samples=per), cfg)
    return np.concatenate([z for _, _, _, z in out])[:n_samples]


# ------------------------------------------------------------ continuum SDE

# Generators of rotation, stretch and shear in sl(2, R).
_X = np.array([[[0.0, -1.0], [1.0, 0.0]],
               [[1.0, 0.0], [0.0, -1.0]],
               [[0.0, 1.0], [0.0, 0.0]]])


def sde_generators(m: DisorderModel) -> tuple[np.ndarray, np.ndarray]:
    """Drift matrix A and noise matrices B_k of dx = A x dt + sum_k B_k x o dW_k.

    A carries the mean and the ordering term (1/2) sum_{i<j} D_ij [X_i, X_j]
    produced by composing rotation, stretch and shear in that order.
    """
    C = m.cov_array
    A = np.tensordot(np.asarray(m.means), _X, axes=1)
    for i in range(3):
        for j in range(i + 1, 3):
            A = A + 0.5 * C[i, j] * (_X[i] @ _X[j] - _X[j] @ _X[i])
    L = gaussian_sqrt(C)
    B = np.tensordot(L.T, _X, axes=1)  # B_k = sum_i L[i, k] X_i
    return A, B


@njit(cache=True, nogil=True)
def _sde_chunk(xi, A, B, dt, state, hist, bin_width, record):
    x1, x2, logn, theta = state[0], state[1], state[2], state[3]
    sq = math.sqrt(dt)
    nb = hist.shape[0]
    for i in range(xi.shape[0]):
        # M = A dt + sum_k B_k dW_k, Heun (midpoint-trapezoid) for Stratonovich
        m11 = A[0, 0] * dt
        m12 = A[0, 1] * dt
        m21 = A[1, 0] * dt
        m22 = A[1, 1] * dt
        for k in range(3):
            dw = xi[i, k] * sq
            m11 += B[k, 0, 0] * dw
            m12 += B[k, 0, 1] * dw
            m21 += B[k, 1, 0] * dw
            m22 += B[k, 1, 1] * dw
        p1 = x1 + m11 * x1 + m12 * x2
        p2 = x2 + m21 * x1 + m22 * x2
        y1 = x1 + 0.5 * (m11 * (x1 + p1) + m12 * (x2 + p2))
        y2 = x2 + 0.5 * (m21 * (x1 + p1) + m22 * (x2 + p2))
        d = math.atan2(y2, y1) - math.atan2(x2, x1)
        if d > math.pi:
            d -= 2.0 * math.pi
        elif d < -math.pi:
            d += 2.0 * math.pi
        theta += d
        r = math.hypot(y1, y2)
        logn += math.log(r)
        x1 = y1 / r
        x2 = y2 / r
        if record:
            phi = math.pi - 2.0 * theta
            phi -= 2.0 * math.pi * math.floor((phi + math.pi) / (2.0 * math.pi))
            b = int((phi + math.pi) / bin_width)
            if 0 <= b < nb:
                hist[b] += 1.0
    state[0], state[1], state[2], state[3] = x1, x2, logn, theta


def _check_step(A: np.ndarray, B: np.ndarray, dt: float) -> None:
    drift = float(np.abs(A).max()) * dt
    kick = float(np.sqrt(sum(np.abs(b).max() ** 2 for b in B) * dt))
    if drift > 0.05 or kick > 0.3:
        raise StepSizeError(f"dt = {dt:g} too large: drift/step {drift:.3g}, noise/step {kick:.3g};"
                            " reduce dt below 0.05/|A| and 0.09/|B|^2")


def simulate_sde(m: DisorderModel, cfg: McConfig, bins: int = 128) -> tuple[McEstimate, DensityProfile]:
    """Heun integration of the continuum limit for n_steps steps of size cfg.dt."""
    A, B = sde_generators(m)
    _check_step(A, B, cfg.dt)

    def one(rng):
        state = np.array([math.cos(_THETA0), math.sin(_THETA0), 0.0, _THETA0])
        hist = np.zeros(bins)
        width = 2.0 * math.pi / bins
        done, mark = 0, None
        while done < cfg.n_steps:
            if done == cfg.burn and mark is None:
                mark = (state[2], state[3])
            limit = cfg.burn if done < cfg.burn else cfg.n_steps
            n = min(_CHUNK, limit - done)
            xi = rng.standard_normal((n, 3))
            _sde_chunk(xi, A, B, cfg.dt, state, hist, width, done >= cfg.burn)
            done += n
        if mark is None:
            mark = (0.0, 0.0)
        if not np.all(np.isfinite(state)):
            raise StepSizeError("SDE integration produced non-finite values")
        T = (cfg.n_steps - cfg.burn) * cfg.dt
        return (state[2] - mark[0]) / T, (state[3] - mark[1]) / (math.pi * T), hist

    out = _map_replicas(one, cfg)
    rows = np.array([[g, j] for g, j, _ in out])
    est = _estimate(rows, 1.0, (cfg.n_steps - cfg.burn) * cfg.n_replicas)
    hist = np.sum([h for _, _, h in out], axis=0)
    width = 2.0 * math.pi / bins
    phi = -math.pi + width * (np.arange(bins) + 0.5)
    dens = DensityProfile(phi, hist / (hist.sum() * width), est.j, 0.0, False, "sde",
                          meta={"counts": hist, "bin_width": width})
    return est, dens
