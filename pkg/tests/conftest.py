import numpy as np
import pytest
from hypothesis import settings, strategies as st

from sl2lyap.coeffs import DisorderModel

settings.register_profile("repo", max_examples=60, deadline=None)
settings.load_profile("repo")


def random_model(rng: np.random.Generator, mean_scale: float = 1.0, cov_scale: float = 1.0,
                 positive_rotation: bool = True) -> DisorderModel:
    a = rng.normal(size=(3, 3))
    cov = cov_scale * (a @ a.T) / 3.0
    means = mean_scale * rng.normal(size=3)
    if positive_rotation:
        means[0] = abs(means[0])
    return DisorderModel((float(means[0]), float(means[1]), float(means[2])), cov.tolist())


@st.composite
def psd_models(draw, mean_scale=1.0, cov_scale=1.0):
    seed = draw(st.integers(min_value=0, max_value=2**32 - 1))
    return random_model(np.random.default_rng(seed), mean_scale, cov_scale)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
