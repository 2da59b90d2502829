import itertools
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sharpiv import (
    IVDataset,
    NuisanceFit,
    assign_folds,
    estimate_sharpness,
    estimate_strength,
    fold_quantile_classifier,
    phi_mu,
    quantile_classifier,
    sharpness_identities,
    youden_index,
)
from sharpiv.bounds import bound_length
from sharpiv.classify import ComplierAssignment, classification_error
from sharpiv.errors import DegeneracyWarning, ValidationError
from sharpiv.sharpness import (
    classifier_identities,
    classifier_sharpness,
    sharpness_influence,
    variance_explained,
)

from .bruteforce import calibrated_population, enum_strength, expand, random_discrete_sample, saturated_fit


def test_identity_examples():
    err, length = sharpness_identities(0.3, 0.8)
    assert err == pytest.approx(0.084) and length == pytest.approx(0.14)
    assert sharpness_identities(0.4, 1.0) == (0.0, 0.0)
    err, _ = sharpness_identities(0.301, 0.209)
    assert round(err, 3) == 0.333


@given(st.floats(0.01, 0.99), st.floats(0, 1))
def test_generalized_identity_reduces_at_calibrated_size(mu, psi):
    assert classifier_identities(mu, psi, mu) == pytest.approx(sharpness_identities(mu, psi), abs=1e-12)


@pytest.mark.parametrize("seed", range(12))
def test_identities_on_calibrated_population(seed):
    rng = np.random.default_rng(seed)
    counts, gamma, top = calibrated_population(rng, int(rng.integers(3, 8)), 1 + seed % 2)
    g, = expand(counts, gamma)
    total = sum(counts)
    mu = sum((c * gm for c, gm in zip(counts, gamma)), Fraction(0)) / total
    hq = quantile_classifier(g, float(mu))
    psi = classifier_sharpness(g, hq)
    # sharpness as a correlation between latent compliance and the classifier, by enumeration
    e_ch = sum((c * gm for c, gm, t in zip(counts, gamma, top) if t), Fraction(0)) / total
    e_h = sum((c for c, t in zip(counts, top) if t), 0) / Fraction(total)
    var_c, var_h = mu * (1 - mu), e_h * (1 - e_h)
    assert var_c == var_h  # the top group has mass mu, so corr = cov / var
    corr = (e_ch - mu * e_h) / var_c
    assert psi == pytest.approx(float(corr), abs=1e-10)
    err, length = sharpness_identities(float(mu), psi)
    assert classification_error(g, hq) == pytest.approx(err, abs=1e-10)
    assert bound_length(g, hq) == pytest.approx(length, abs=1e-10)
    # any other classifier satisfies the generalized identities
    for mask in itertools.product((0, 1), repeat=len(gamma)):
        if not any(mask):
            continue
        h = np.repeat(np.array(mask), counts)
        psi_h = classifier_sharpness(g, h)
        err_h, len_h = classifier_identities(float(mu), psi_h, h.mean())
        assert classification_error(g, h) == pytest.approx(err_h, abs=1e-10)
        assert bound_length(g, h) == pytest.approx(len_h, abs=1e-10)


def test_youden_examples():
    c = np.array([1, 0, 1, 1, 0, 0])
    assert youden_index(c, c) == 1.0
    rng = np.random.default_rng(0)
    c = rng.integers(0, 2, 200_000)
    h = rng.integers(0, 2, 200_000)
    assert abs(youden_index(c, h)) < 0.01
    with pytest.raises(ValidationError):
        youden_index(np.ones(4), np.ones(4))
    with pytest.raises(ValidationError):
        variance_explained(np.ones(4), np.ones(4))


def test_youden_equals_variance_explained_small():
    for n in range(2, 7):
        for c in itertools.product((0, 1), repeat=n):
            if len(set(c)) < 2:
                continue
            for h in itertools.product((0, 1), repeat=n):
                assert youden_index(c, h) == pytest.approx(variance_explained(c, h), abs=1e-12)


def test_strength_examples():
    n = 10
    z = np.arange(n) % 2
    ds = IVDataset(np.zeros(n), z, z, np.zeros(n))
    nf = NuisanceFit.from_arrays(np.full(n, 0.5), np.zeros(n), np.ones(n), assign_folds(n, 2))
    with pytest.warns(DegeneracyWarning, match="outside"):
        est = estimate_strength(ds, nf)
    assert est.mu_hat == 1.0 and not est.in_unit_interval
    with pytest.raises(ValidationError, match="outside"):
        estimate_sharpness(ds, nf, quantile_classifier(np.arange(n, dtype=float), 0.5))


def test_strength_in_simulation(sim_sharp_fit):
    ds, _, nf = sim_sharp_fit
    est = estimate_strength(ds, nf)
    assert abs(est.mu_hat - 0.3) < 3 * est.se


@pytest.mark.parametrize("seed", range(25))
def test_strength_matches_enumeration(seed):
    rng = np.random.default_rng(300 + seed)
    levels = int(rng.integers(1, 4))
    n = int(rng.integers(2 * levels, 13))
    x, z, a, y = random_discrete_sample(rng, n, levels)
    ds, nf = saturated_fit(x, z, a, y)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegeneracyWarning)
        est = estimate_strength(ds, nf)
    assert est.mu_hat == pytest.approx(float(enum_strength(x, z, a)), abs=1e-10)


def test_sharpness_in_simulation(sim_sharp_fit):
    ds, folds, nf = sim_sharp_fit
    mu = estimate_strength(ds, nf).mu_hat
    hq = fold_quantile_classifier(nf.gamma, folds, mu)
    rep = estimate_sharpness(ds, nf, hq, mu_hat=mu)
    assert abs(rep.psi_hat - 0.8) < 3 * rep.psi_se
    assert 0.02 < rep.psi_se < 0.045
    assert 0 <= rep.logit_ci[0] < rep.psi_hat < rep.logit_ci[1] <= 1
    wald_mid = np.mean(rep.wald_ci)
    logit_mid = np.mean(rep.logit_ci)
    assert abs(wald_mid - logit_mid) < 0.5 * (rep.wald_ci[1] - rep.wald_ci[0])
    assert rep.xi_hat == pytest.approx(np.mean(phi_mu(ds, nf) * hq.h))
    assert set(rep.as_dict()) >= {"psi_hat", "psi_se", "wald_ci", "logit_ci", "mu_hat", "xi_hat"}


def test_sharpness_degenerate_quantile():
    n = 40
    rng = np.random.default_rng(2)
    z = rng.integers(0, 2, n)
    a = rng.integers(0, 2, n)
    ds = IVDataset(np.zeros(n), z, a, np.zeros(n))
    nf = NuisanceFit.from_arrays(np.full(n, 0.5), np.full(n, 0.2), np.full(n, 0.5), assign_folds(n, 2))
    with pytest.warns(DegeneracyWarning):
        hq = quantile_classifier(nf.gamma, 0.3)
    with pytest.warns(DegeneracyWarning, match="degenerate quantile"):
        rep = estimate_sharpness(ds, nf, hq, mu_hat=0.3)
    assert rep.psi_hat == 0.0 and "degenerate_quantile" in rep.flags


def test_sharpness_outside_unit_interval_flagged():
    n = 40
    z = np.arange(n) % 2
    a = 1 - z  # the score ranking is reversed relative to observed compliance
    ds = IVDataset(np.zeros(n), z, a, np.zeros(n))
    gam = np.linspace(0, 1, n)
    nf = NuisanceFit.from_arrays(np.full(n, 0.5), np.zeros(n), gam, assign_folds(n, 2))
    hq = ComplierAssignment(gam > 0.5, "quantile", {"qhat": 0.5})
    with pytest.warns(DegeneracyWarning, match="logit interval undefined"):
        rep = estimate_sharpness(ds, nf, hq, mu_hat=0.4)
    assert not 0 < rep.psi_hat < 1
    assert all(math.isnan(v) for v in rep.logit_ci)
    assert all(math.isfinite(v) for v in rep.wald_ci)
    assert "psi_outside_unit_interval" in rep.flags


@given(st.floats(0.05, 0.95), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_influence_function_matches_numerical_derivative(mu, xi_frac, q):
    """The influence function is the pathwise derivative of (xi - mu^2)/(mu - mu^2) along (mu, xi)."""
    xi = mu * mu + xi_frac * (mu - mu * mu)  # keep psi in [0, 1]
    f = lambda m, x: (x - m * m) / (m - m * m)
    eps = 1e-6
    dmu = (f(mu + eps, xi) - f(mu - eps, xi)) / (2 * eps)
    dxi = (f(mu, xi + eps) - f(mu, xi - eps)) / (2 * eps)
    # one-unit perturbation: phi_mu shifts by 1 and the xi influence by h + q (1 - 0)
    pmu, h = np.array([mu + 1.0]), np.array([1.0])
    got = sharpness_influence(pmu, h, mu, xi, q)[0]
    xi_if = (mu + 1.0) * 1.0 + q * ((mu + 1.0) - 1.0) - xi
    assert got == pytest.approx(dxi * xi_if + dmu * 1.0, rel=1e-5, abs=1e-5)
