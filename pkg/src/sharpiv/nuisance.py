"""Regression learners, K-fold cross-fitting and uncentered influence functions.

Every nuisance prediction for unit ``i`` comes from a model trained only on
units whose fold id differs from ``B_i``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree
from scipy.special import expit, xlogy

from .data import FoldAssignment, IVDataset
from .errors import ValidationError

DEFAULT_CLIP_EPS = 0.01
# total deviance below this means the labels are (quasi-)separated and fitted
# probabilities already sit at 0/1; further Newton steps only inflate coefficients
SEPARATION_DEVIANCE = 1e-6

LEARNER_KINDS = ("logistic", "linear", "knn", "constant")


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class LearnerSpec:
    """Which regression learner to use and its hyperparameters.

    ``kind`` is one of ``logistic`` (IRLS on a logit link, labels in [0,1]),
    ``linear`` (least squares with intercept, predictions clipped to [0,1]),
    ``knn`` (local label mean of the ``k`` nearest training rows) or
    ``constant`` (overall label mean).
    """

    kind: str = "logistic"
    k: int = 25
    max_iter: int = 50
    tol: float = 1e-10

    def __post_init__(self):
        if self.kind not in LEARNER_KINDS:
            raise ValidationError(f"unknown learner kind {self.kind!r}")
        if self.k < 1:
            raise ValidationError("knn needs k >= 1")
        if self.max_iter < 1 or not self.tol > 0:
            raise ValidationError("IRLS needs max_iter >= 1 and tol > 0")

    @classmethod
    def parse(cls, text: str) -> "LearnerSpec":
        """Parse the CLI form ``logistic``, ``constant`` or ``knn:K``."""
        text = text.strip().lower()
        if text.startswith("knn"):
            _, _, k = text.partition(":")
            return cls("knn", k=int(k) if k else 25)
        if text in ("logistic", "logistic-irls"):
            return cls("logistic")
        if text in ("linear", "ols"):
            return cls("linear")
        if text in ("constant", "constant-mean"):
            return cls("constant")
        raise ValidationError(f"cannot parse learner {text!r}")

    def __str__(self):
        return f"knn:{self.k}" if self.kind == "knn" else self.kind


@dataclass
class FittedLearner:
    """Deterministic prediction function ``x -> [0, 1]``."""

    kind: str
    coef: Optional[np.ndarray] = None
    constant: float = 0.0
    converged: bool = True
    n_iter: int = 0
    _tree: Optional[cKDTree] = field(default=None, repr=False)
    _labels: Optional[np.ndarray] = field(default=None, repr=False)
    _k: int = 1

    def __call__(self, features) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features[:, None]
        if self.kind == "constant":
            return np.full(features.shape[0], self.constant)
        if self.kind == "logistic":
            return expit(self.coef[0] + features @ self.coef[1:])
        if self.kind == "linear":
            return np.clip(self.coef[0] + features @ self.coef[1:], 0.0, 1.0)
        _, idx = self._tree.query(features, k=self._k)
        idx = np.asarray(idx).reshape(features.shape[0], -1)
        return self._labels[idx].mean(axis=1)


def _binomial_deviance(y, mu):
    return 2.0 * np.sum(xlogy(y, y) - xlogy(y, mu) + xlogy(1 - y, 1 - y) - xlogy(1 - y, 1 - mu))


def _newton_step(design, w, resid, jitter=1e-8):
    hess = design.T @ (w[:, None] * design)
    grad = design.T @ resid
    try:
        np.linalg.cholesky(hess)
        return np.linalg.solve(hess, grad)
    except np.linalg.LinAlgError:
        return np.linalg.solve(hess + jitter * np.eye(len(grad)), grad)


def fit_logistic_irls(features, labels, max_iter: int = 50, tol: float = 1e-10):
    """Fit a logistic regression (with intercept) by iteratively reweighted least squares.

    Labels may be fractional (quasi-binomial fit). Convergence uses the
    relative deviance change ``|D - D_old| / (|D| + 0.1) < tol``; a separated
    sample is declared converged (with a warning) once its deviance is below
    ``SEPARATION_DEVIANCE``.

    Returns
    -------
    coef : ndarray, shape (p + 1,)
    converged : bool
    n_iter : int
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    m = len(labels)
    design = np.column_stack([np.ones(m), features])
    ybar = np.clip(labels.mean(), 1e-6, 1 - 1e-6)
    coef = np.zeros(design.shape[1])
    coef[0] = np.log(ybar / (1 - ybar))
    mu = expit(design @ coef)
    dev_old = _binomial_deviance(labels, mu)
    for it in range(1, max_iter + 1):
        w = np.clip(mu * (1 - mu), 1e-12, None)
        coef = coef + _newton_step(design, w, labels - mu)
        mu = expit(design @ coef)
        dev = _binomial_deviance(labels, mu)
        if not np.isfinite(dev):
            return coef, False, it
        if abs(dev - dev_old) / (abs(dev) + 0.1) < tol:
            return coef, True, it
        if dev < SEPARATION_DEVIANCE:
            warnings.warn("labels are separated; fitted probabilities are numerically 0 or 1",
                          ConvergenceWarning)
            return coef, True, it
        dev_old = dev
    return coef, False, max_iter


def train_learner(spec: LearnerSpec, features, labels) -> FittedLearner:
    """Train a regression of ``labels`` (in [0,1]) on ``features``."""
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features[:, None]
    labels = np.asarray(labels, dtype=float)
    if len(labels) == 0:
        raise ValidationError("cannot train a learner on zero rows")
    if np.any(labels < 0) or np.any(labels > 1):
        raise ValidationError("learner labels must lie in [0, 1]")
    mean = float(labels.mean())

    if spec.kind == "constant":
        return FittedLearner("constant", constant=mean)

    if spec.kind == "knn":
        k = min(spec.k, len(labels))
        return FittedLearner("knn", _tree=cKDTree(features), _labels=labels.copy(), _k=k)

    m, p = features.shape
    if spec.kind == "linear":
        design = np.column_stack([np.ones(m), features])
        coef, *_ = np.linalg.lstsq(design, labels, rcond=None)
        return FittedLearner("linear", coef=coef)

    if m < p + 1:
        raise ValidationError(f"logistic fit needs at least p+1={p + 1} rows, got {m}")
    if mean in (0.0, 1.0):
        # all labels identical: the MLE is the boundary constant
        return FittedLearner("constant", constant=mean)
    coef, converged, n_iter = fit_logistic_irls(features, labels, spec.max_iter, spec.tol)
    if not converged:
        warnings.warn(
            f"IRLS did not converge in {spec.max_iter} iterations; using constant mean",
            ConvergenceWarning,
        )
        return FittedLearner("constant", constant=mean, converged=False, n_iter=n_iter)
    return FittedLearner("logistic", coef=coef, n_iter=n_iter)


NU_KEYS = ("u1", "u0", "l1", "l0")


@dataclass(frozen=True)
class NuisanceFit:
    """Out-of-fold nuisance predictions, one entry per unit.

    ``nu`` maps ``u1, u0, l1, l0`` to the regressions ``E(V_{j,z} | X, Z=z)``;
    ``ey`` maps ``0, 1`` to ``E(Y | X, Z=z)`` (used by the LATE estimator).
    """

    pi1: np.ndarray
    lambda0: np.ndarray
    lambda1: np.ndarray
    nu: dict
    ey: dict
    folds: FoldAssignment
    clip_eps: float = DEFAULT_CLIP_EPS

    @property
    def gamma(self) -> np.ndarray:
        return self.lambda1 - self.lambda0

    @property
    def n(self) -> int:
        return len(self.pi1)

    def pi(self, z: int) -> np.ndarray:
        return self.pi1 if z == 1 else 1.0 - self.pi1

    def lam(self, z: int) -> np.ndarray:
        return self.lambda1 if z == 1 else self.lambda0

    def to_frame(self) -> pd.DataFrame:
        cols = {
            "unit": np.arange(self.n),
            "fold": self.folds.b,
            "pi1": self.pi1,
            "lambda0": self.lambda0,
            "lambda1": self.lambda1,
            "gamma": self.gamma,
        }
        for key in NU_KEYS:
            cols[f"nu_{key}"] = self.nu[key]
        for z in (0, 1):
            cols[f"ey{z}"] = self.ey[z]
        return pd.DataFrame(cols)

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False, float_format="%.17g")

    @classmethod
    def from_arrays(cls, pi1, lambda0, lambda1, folds, nu=None, ey=None, clip_eps=DEFAULT_CLIP_EPS):
        """Assemble a fit from given per-unit predictions (oracle or hand-built nuisances)."""
        n = len(pi1)
        zeros = np.zeros(n)
        nu = {key: np.asarray(nu[key], float) if nu else zeros for key in NU_KEYS}
        ey = {z: np.asarray(ey[z], float) if ey else zeros for z in (0, 1)}
        return cls(np.asarray(pi1, float), np.asarray(lambda0, float),
                   np.asarray(lambda1, float), nu, ey, folds, clip_eps)


def fit_crossfit(
    ds: IVDataset,
    folds: FoldAssignment,
    spec: LearnerSpec = LearnerSpec(),
    clip_eps: float = DEFAULT_CLIP_EPS,
    pi_spec: Optional[LearnerSpec] = None,
    lambda_spec: Optional[LearnerSpec] = None,
    nu_spec: Optional[LearnerSpec] = None,
    features: Optional[np.ndarray] = None,
) -> NuisanceFit:
    """Cross-fit all nuisance regressions.

    For every fold ``b`` the propensity ``pi_1``, the stratum regressions
    ``lambda_z`` (trained on units with ``Z = z``), the four transformed-outcome
    regressions and ``E(Y | X, Z=z)`` are trained on units outside ``b`` and
    evaluated on ``b``. ``pi_1`` is clipped into ``[clip_eps, 1 - clip_eps]``.
    """
    from .bounds import transform_outcomes

    if folds.n != ds.n:
        raise ValidationError("fold assignment does not match dataset size")
    if not 0 < clip_eps < 0.5:
        raise ValidationError("clip_eps must lie in (0, 0.5)")
    pi_spec = pi_spec or spec
    lambda_spec = lambda_spec or spec
    nu_spec = nu_spec or lambda_spec
    xmat = ds.x if features is None else np.asarray(features, dtype=float)
    v = transform_outcomes(ds)
    v_by_key = {"u1": v.v_u1, "u0": v.v_u0, "l1": v.v_l1, "l0": v.v_l0}

    n = ds.n
    pi1 = np.empty(n)
    lam = {0: np.empty(n), 1: np.empty(n)}
    nu = {key: np.empty(n) for key in NU_KEYS}
    ey = {0: np.empty(n), 1: np.empty(n)}
    for fold, test in folds.masks():
        train = ~test
        arms = {z: train & (ds.z == z) for z in (0, 1)}
        if not arms[0].any() or not arms[1].any():
            raise ValidationError(f"degenerate instrument arm: fold {fold} training set lacks Z=0 or Z=1")
        x_test = xmat[test]
        pi1[test] = train_learner(pi_spec, xmat[train], ds.z[train])(x_test)
        for z in (0, 1):
            lam[z][test] = train_learner(lambda_spec, xmat[arms[z]], ds.a[arms[z]])(x_test)
            ey[z][test] = train_learner(nu_spec, xmat[arms[z]], ds.y[arms[z]])(x_test)
        for key in NU_KEYS:
            z = int(key[1])
            nu[key][test] = train_learner(nu_spec, xmat[arms[z]], v_by_key[key][arms[z]])(x_test)

    pi1 = np.clip(pi1, clip_eps, 1.0 - clip_eps)
    return NuisanceFit(pi1, lam[0], lam[1], nu, ey, folds, clip_eps)


def uncentered_if(z_obs, z: int, t_value, t_reg, pi_z) -> np.ndarray:
    """``1(Z=z)/pi_z (T - E[T|X,Z=z]) + E[T|X,Z=z]`` evaluated elementwise."""
    ind = (np.asarray(z_obs) == z).astype(float)
    t_reg = np.asarray(t_reg, dtype=float)
    return ind / np.asarray(pi_z, dtype=float) * (np.asarray(t_value, dtype=float) - t_reg) + t_reg


def phi_z(ds: IVDataset, z: int, t_value, t_reg, nf: NuisanceFit) -> np.ndarray:
    """Per-unit uncentered influence function for ``E{E(T | X, Z=z)}``."""
    return uncentered_if(ds.z, z, t_value, t_reg, nf.pi(z))


def phi_mu(ds: IVDataset, nf: NuisanceFit) -> np.ndarray:
    """Per-unit uncentered influence function of strength, ``phi_1(A) - phi_0(A)``."""
    return phi_z(ds, 1, ds.a, nf.lambda1, nf) - phi_z(ds, 0, ds.a, nf.lambda0, nf)


def with_nuisances(nf: NuisanceFit, **changes) -> NuisanceFit:
    """Copy of ``nf`` with some prediction vectors replaced."""
    return replace(nf, **changes)
