import math

import numpy as np
import pytest
from scipy import stats

from sl2lyap import DisorderModel, McConfig, omega_closed, simulate_product, simulate_sde, stationary_density
from sl2lyap.model_maps import hyperbolic_bm_model
from sl2lyap.monte_carlo import StepSizeError, empirical_density, riccati_samples
from sl2lyap.sl2 import IwasawaParams, iwasawa_compose

GENERIC = DisorderModel.from_params(alpha=1, w=.1, u=.3, D_aa=.5, D_ww=.4, D_uu=.8,
                                    D_aw=.1, D_au=-.2, D_wu=.1)
SCALAR_IN_BAND = DisorderModel.from_params(alpha=1, w=.2, u=.5, D_uu=.3)


def sigma(e):
    return math.hypot(e.gamma_stderr, math.pi * e.j_stderr)


def scaled(m, k):
    return DisorderModel(tuple(k * x for x in m.means), (k * m.cov_array).tolist())


def ks_against_fp(profile, m):
    """Sup distance between the histogram CDF and the fp CDF at the bin edges."""
    d = stationary_density(m, 4096)
    h = 2 * math.pi / d.values.size
    grid = -math.pi + h * np.arange(d.values.size + 1)
    cdf = np.concatenate([[0.0], np.cumsum(d.values) * h])
    width = profile.meta["bin_width"]
    edges = -math.pi + width * np.arange(profile.values.size + 1)
    ecdf = np.concatenate([[0.0], np.cumsum(profile.values) * width])
    return float(np.max(np.abs(ecdf - np.interp(edges, grid, cdf))))


def test_config_validation():
    for bad in (dict(n_steps=999), dict(renorm_interval=0), dict(n_replicas=1),
                dict(distribution="student"), dict(burn_in=2000, n_steps=2000),
                dict(continuum_scale=0.0), dict(dt=-1.0)):
        with pytest.raises(ValueError):
            McConfig(**bad)


def test_identity_product():
    e = simulate_product(DisorderModel.from_params(), McConfig(n_steps=10_000, n_replicas=2))
    assert e.gamma == 0.0 and e.j == 0.0
    assert e.gamma_stderr > 0 and e.j_stderr > 0


def test_commuting_diagonal_product():
    e = simulate_product(DisorderModel.from_params(w=.1, D_ww=1e-4),
                         McConfig(n_steps=100_000, n_replicas=4, seed=1))
    assert abs(e.gamma - 0.1) < 3 * e.gamma_stderr
    assert e.j == 0.0


def test_pure_rotation_rate():
    a = 0.3
    cfg = McConfig(n_steps=100_000, n_replicas=4, seed=1)
    e = simulate_product(DisorderModel.from_params(alpha=a, w=-1e-9, D_aa=1e-8, D_uu=1e-8), cfg)
    # one passage through infinity per pi of rotation; counts are integers
    assert abs(e.j - a / math.pi) <= 1.0 / (cfg.n_steps - cfg.burn)


def test_independent_zero_mean_has_no_current():
    e = simulate_product(DisorderModel.from_params(D_aa=.3, D_ww=.2, D_uu=.5),
                         McConfig(n_steps=200_000, n_replicas=8, continuum_scale=1e-2, workers=8))
    assert abs(e.j) < 3 * e.j_stderr


def test_scalar_in_band_rotation_number():
    e = simulate_product(SCALAR_IN_BAND, McConfig(n_steps=400_000, n_replicas=8, seed=0,
                                                  continuum_scale=1e-2, workers=8))
    want = omega_closed(SCALAR_IN_BAND).omega.imag / math.pi
    assert abs(e.j - want) < 3 * e.j_stderr


@pytest.mark.parametrize("route", ["product", "sde"])
def test_hyperbolic_brownian_motion_gamma(route):
    m = hyperbolic_bm_model(0.5)
    if route == "product":
        e = simulate_product(m, McConfig(n_steps=400_000, continuum_scale=1e-2, workers=8))
    else:
        e, _ = simulate_sde(m, McConfig(n_steps=400_000, dt=1e-3, workers=8))
    assert abs(e.gamma - 0.25) < 3 * e.gamma_stderr


def test_hyperbolic_brownian_motion_poisson_kernel():
    cfg = McConfig(n_steps=400_000, n_replicas=8, seed=1, continuum_scale=1e-2, thin=50, workers=8)
    z = riccati_samples(hyperbolic_bm_model(0.5), cfg, 40_000)
    assert stats.kstest(z, stats.cauchy.cdf).statistic < 0.02


@pytest.mark.parametrize("m", [
    DisorderModel.from_params(alpha=.8, w=.2, u=1.5, D_ww=.4),
    DisorderModel.from_params(alpha=.8, w=.2, u=1.5, D_ww=.4, D_uu=.9, D_wu=-.6),
    DisorderModel.from_params(alpha=.8, w=.2, u=3.0, D_ww=.4, D_uu=.9, D_wu=-.6),
], ids=["susy", "fully_correlated_JN", "fully_correlated_K"])
def test_degenerate_diffusion_models_against_closed_form(m):
    # Q has a real zero, so fp cannot be used; the SDE has no step bias in the limit
    e, _ = simulate_sde(m, McConfig(n_steps=1_000_000, n_replicas=8, seed=2, dt=1e-3, workers=8))
    assert abs(e.omega - omega_closed(m).omega) < 3 * sigma(e)


def test_sde_scalar_against_airy():
    e, _ = simulate_sde(SCALAR_IN_BAND, McConfig(n_steps=1_000_000, seed=4, dt=1e-3, workers=8))
    assert omega_closed(SCALAR_IN_BAND).family == "airy"
    want = omega_closed(SCALAR_IN_BAND).omega.imag / math.pi
    assert abs(e.j - want) < 3 * e.j_stderr


def test_sde_drift_only_fixed_point():
    m = DisorderModel.from_params(alpha=.2, w=.5, u=.1)
    mu = m.mu().real
    e, d = simulate_sde(m, McConfig(n_steps=100_000, n_replicas=2, dt=1e-2), bins=512)
    peak = d.phi[np.argmax(d.values)]
    assert abs(peak - 2 * math.atan((m.w + mu) / m.alpha)) < 2 * d.meta["bin_width"]
    assert abs(e.gamma - mu) < 1e-3


def test_product_no_disorder_fixed_point():
    # a finite step converges to the dominant eigenvector of the mean matrix
    p = IwasawaParams(.2, .5, .1)
    M0 = iwasawa_compose(p)
    lam, vec = np.linalg.eig(np.array([[M0.m11, M0.m12], [M0.m21, M0.m22]]))
    v = vec[:, np.argmax(np.abs(lam))].real
    d = empirical_density(DisorderModel.from_params(alpha=.2, w=.5, u=.1),
                          McConfig(n_steps=20_000, n_replicas=2), bins=512)
    peak = d.phi[np.argmax(d.values)]
    assert abs(peak - 2 * math.atan(v[0] / v[1])) < 2 * d.meta["bin_width"]


def test_sde_step_size_guard():
    with pytest.raises(StepSizeError):
        simulate_sde(GENERIC, McConfig(n_steps=1000, dt=0.5))


def test_determinism():
    cfg = McConfig(n_steps=20_000, n_replicas=4, seed=11, continuum_scale=1e-2)
    a = simulate_product(GENERIC, cfg)
    b = simulate_product(GENERIC, cfg)
    c = simulate_product(GENERIC, McConfig(n_steps=20_000, n_replicas=4, seed=11,
                                           continuum_scale=1e-2, workers=4))
    assert np.array_equal(a.per_replica, b.per_replica)
    assert np.array_equal(a.per_replica, c.per_replica)
    s1, _ = simulate_sde(GENERIC, McConfig(n_steps=20_000, n_replicas=4, seed=11))
    s2, _ = simulate_sde(GENERIC, McConfig(n_steps=20_000, n_replicas=4, seed=11, workers=4))
    assert np.array_equal(s1.per_replica, s2.per_replica)
    d = simulate_product(GENERIC, McConfig(n_steps=20_000, n_replicas=4, seed=12,
                                           continuum_scale=1e-2))
    assert not np.array_equal(a.per_replica, d.per_replica)


def test_renormalization_interval_invariance():
    est = [simulate_product(GENERIC, McConfig(n_steps=200_000, seed=3, renorm_interval=r,
                                              continuum_scale=1e-2, workers=8))
           for r in (1, 10, 100)]
    for e in est[1:]:
        assert abs(e.gamma - est[0].gamma) < est[0].gamma_stderr
        assert e.j == est[0].j


@pytest.mark.slow
def test_continuum_convergence():
    # discretization bias is a function of eps^2 * model, so a large model exposes it
    m = scaled(GENERIC, 30)
    want = omega_closed(m).omega
    err = []
    for eps, n in ((0.3, 1_000_000), (0.1, 1_000_000), (0.03, 4_000_000)):
        e = simulate_product(m, McConfig(n_steps=n, seed=5, continuum_scale=eps**2, workers=8))
        err.append(abs(e.omega - want))
    assert err[0] > err[1] > err[2]


@pytest.mark.parametrize("route", ["product", "sde"])
def test_empirical_density_against_fp(route):
    if route == "product":
        d = empirical_density(GENERIC, McConfig(n_steps=1_000_000, seed=1, continuum_scale=1e-2,
                                                workers=8))
    else:
        _, d = simulate_sde(GENERIC, McConfig(n_steps=1_000_000, seed=1, dt=1e-3, workers=8))
    assert ks_against_fp(d, GENERIC) < 0.02
