import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def sim_sharp():
    """One simulated sample with strength 0.3, sharpness 0.8, n = 5000."""
    from sharpiv.simlab import DGPConfig, simulate_draws

    return simulate_draws(DGPConfig.from_targets(0.3, 0.8, n=5000, seed=11))


@pytest.fixture(scope="session")
def sim_sharp_fit(sim_sharp):
    from sharpiv import LearnerSpec, assign_folds, fit_crossfit

    ds = sim_sharp.dataset
    folds = assign_folds(ds.n, 2, seed=5)
    nf = fit_crossfit(ds, folds, LearnerSpec("logistic"), lambda_spec=LearnerSpec("linear"))
    return ds, folds, nf


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
