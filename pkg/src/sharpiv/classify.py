"""Complier classifiers built from compliance scores, and their identified errors."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .data import FoldAssignment
from .errors import DegeneracyWarning, ValidationError

CLASSIFIER_KINDS = ("bayes", "quantile", "stochastic", "modified")


@dataclass(frozen=True)
class ComplierAssignment:
    """Per-unit 0/1 complier predictions plus the parameters that produced them."""

    h: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)
    gamma_source: Optional[np.ndarray] = field(default=None, repr=False)
    flags: tuple = ()

    def __post_init__(self):
        h = np.asarray(self.h).astype(np.int8)
        if not np.all((h == 0) | (h == 1)):
            raise ValidationError("assignment must be 0/1")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return len(self.h)

    @property
    def size(self) -> float:
        """Fraction of units predicted to be compliers."""
        return float(self.h.mean())


def _as_array(h: Union[ComplierAssignment, np.ndarray]) -> np.ndarray:
    return h.h if isinstance(h, ComplierAssignment) else np.asarray(h, dtype=float)


def _finite(gamma_hat) -> np.ndarray:
    gamma_hat = np.asarray(gamma_hat, dtype=float)
    if not np.all(np.isfinite(gamma_hat)):
        raise ValidationError("compliance scores must be finite")
    return gamma_hat


def bayes_classifier(gamma_hat) -> ComplierAssignment:
    """Plug-in Bayes rule ``1{gamma_hat > 1/2}``; exact ties at 1/2 go to 0."""
    gamma_hat = _finite(gamma_hat)
    return ComplierAssignment(gamma_hat > 0.5, "bayes", {}, gamma_hat)


def _order_index(n: int, level: float) -> int:
    # round away float noise such as 1000 * 0.7 = 700.0000000000001
    return math.ceil(round(n * (1.0 - level), 9))


def quantile_threshold(gamma_hat, level: float) -> float:
    """Empirical ``(1 - level)`` quantile: the order statistic at index ``ceil(n (1 - level))``."""
    gamma_hat = _finite(gamma_hat)
    if not 0.0 < level < 1.0:
        raise ValidationError("quantile level must lie in (0, 1)")
    n = len(gamma_hat)
    k = _order_index(n, level)
    if k >= n or k < 1:
        raise ValidationError(f"level {level} leaves an empty or full selection out of n={n}")
    return float(np.sort(gamma_hat)[k - 1])


def _check_ties(h, level, where=""):
    n = len(h)
    realized = float(np.mean(h))
    if abs(realized - level) > 1.0 / n + 1e-12:
        warnings.warn(
            f"ties at the quantile{where}: selected fraction {realized:.4f} instead of {level:.4f}",
            DegeneracyWarning,
        )
        return ("quantile_ties",)
    return ()


def quantile_classifier(gamma_hat, level: float) -> ComplierAssignment:
    """Predict the top ``100 * level`` percent of scores as compliers: ``1{gamma_hat > qhat}``.

    With ties at ``qhat`` the tied units are classified 0 and the realized
    selection fraction is reported through a warning and the ``flags`` field.
    """
    gamma_hat = _finite(gamma_hat)
    qhat = quantile_threshold(gamma_hat, level)
    h = gamma_hat > qhat
    flags = _check_ties(h, level)
    params = {"level": float(level), "qhat": qhat, "selected": float(h.mean())}
    return ComplierAssignment(h, "quantile", params, gamma_hat, flags)


def fold_quantile_classifier(gamma_hat, folds: FoldAssignment, level: float) -> ComplierAssignment:
    """Quantile classifier with a separate threshold ``qhat_b`` computed inside each fold.

    ``params['qhat']`` holds the average of the fold thresholds.
    """
    gamma_hat = _finite(gamma_hat)
    if folds.n != len(gamma_hat):
        raise ValidationError("fold assignment does not match score vector")
    h = np.zeros(len(gamma_hat), dtype=bool)
    fold_q = []
    flags = ()
    for fold, mask in folds.masks():
        q_b = quantile_threshold(gamma_hat[mask], level)
        h[mask] = gamma_hat[mask] > q_b
        fold_q.append(q_b)
        flags = flags or _check_ties(h[mask], level, where=f" in fold {fold}")
    params = {
        "level": float(level),
        "qhat": float(np.mean(fold_q)),
        "fold_qhat": [float(q) for q in fold_q],
        "selected": float(h.mean()),
    }
    return ComplierAssignment(h, "quantile", params, gamma_hat, flags)


def stochastic_classifier(gamma_hat, seed: int = 0) -> ComplierAssignment:
    """``1{gamma_hat > U}`` with an independent ``U ~ Unif(0,1)`` per unit."""
    gamma_hat = _finite(gamma_hat)
    u = np.random.default_rng(seed).uniform(size=len(gamma_hat))
    return ComplierAssignment(gamma_hat > u, "stochastic", {"seed": int(seed)}, gamma_hat)


def modified_quantile_classifier(gamma_hat, qhat: float, kappa1: float, kappa2: float) -> ComplierAssignment:
    """Quantile rule that defers to the plug-in Bayes rule in a window around ``qhat``.

    ``h = 1{gamma_hat >= qhat - kappa * 1(gamma_hat >= 1/2) + kappa * 1(gamma_hat < 1/2)}``
    with ``kappa = kappa1 + kappa2``; ``kappa1`` should bound the sup-norm error of
    the scores and ``kappa2`` the error of ``qhat``.
    """
    gamma_hat = _finite(gamma_hat)
    if kappa1 < 0 or kappa2 < 0:
        raise ValidationError("kappa1 and kappa2 must be non-negative")
    kappa = kappa1 + kappa2
    upper = gamma_hat >= 0.5
    threshold = qhat - kappa * upper + kappa * (~upper)
    h = gamma_hat >= threshold
    params = {"qhat": float(qhat), "kappa1": float(kappa1), "kappa2": float(kappa2)}
    return ComplierAssignment(h, "modified", params, gamma_hat)


def classification_error(gamma, h, gamma_hat=None) -> float:
    """Identified error ``mean[gamma (1 - h) + (1 - gamma) h]``.

    For a stochastic assignment, passing ``gamma_hat`` replaces the realized draw
    by its conditional mean (Rao-Blackwellized form); otherwise the realized
    draw is used.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma_hat is not None:
        hval = np.clip(np.asarray(gamma_hat, dtype=float), 0.0, 1.0)
    else:
        hval = _as_array(h).astype(float)
    if hval.shape != gamma.shape:
        raise ValidationError("scores and assignment must have equal length")
    return float(np.mean(gamma * (1 - hval) + (1 - gamma) * hval))


def quantile_error(gamma, level: Optional[float] = None) -> float:
    """Sample analogue of ``2 E[gamma 1{gamma <= q}]`` with ``q`` the ``1 - level`` quantile."""
    gamma = np.asarray(gamma, dtype=float)
    level = float(np.mean(gamma)) if level is None else level
    q = quantile_threshold(gamma, level)
    return float(2 * np.mean(gamma * (gamma <= q)))


def stochastic_error(gamma) -> float:
    """Sample analogue of ``2 E(gamma - gamma^2)`` (scores clipped to [0,1])."""
    gamma = np.clip(np.asarray(gamma, dtype=float), 0.0, 1.0)
    return float(2 * np.mean(gamma - gamma ** 2))


def bayes_error_bounds(e: float, which: str = "from_Eq") -> tuple[float, float]:
    """Bounds on the optimal (Bayes) error given the quantile or stochastic error ``e``.

    Both inputs give ``((1 - sqrt(1 - 2e)) / 2, e)``. Since ``E_q <= E_s`` the
    quantile error gives the smaller upper bound and the stochastic error the
    larger lower bound.
    """
    if which not in ("from_Eq", "from_Es"):
        raise ValidationError("which must be 'from_Eq' or 'from_Es'")
    if not 0.0 <= e <= 0.5:
        raise ValidationError(f"error must lie in [0, 1/2], got {e}")
    return (1.0 - math.sqrt(1.0 - 2.0 * e)) / 2.0, float(e)


@dataclass(frozen=True)
class ErrorReport:
    e_hat: float
    e_q: float
    e_s: float
    bayes_lower: float
    bayes_upper: float


def error_report(gamma, h, level: Optional[float] = None) -> ErrorReport:
    """Identified errors of ``h``, the quantile and stochastic rules, and the Bayes sandwich."""
    gamma = np.asarray(gamma, dtype=float)
    e_q = quantile_error(gamma, level)
    lo, hi = bayes_error_bounds(min(max(e_q, 0.0), 0.5))
    return ErrorReport(classification_error(gamma, h), e_q, stochastic_error(gamma), lo, hi)


def complier_characteristic(f_values, hs: ComplierAssignment) -> float:
    """Mean of ``f`` over predicted compliers of a stochastic assignment."""
    f_values = np.asarray(f_values, dtype=float)
    h = _as_array(hs).astype(float)
    if h.sum() == 0:
        raise ValidationError("no predicted compliers")
    return float(np.mean(f_values * h) / np.mean(h))


def heuristic_kappas(gamma_a, gamma_b, qhat_a: float, qhat_b: float, coverage: float = 0.95):
    """Heuristic window widths for the modified classifier from two independent cross-fits.

    ``kappa1`` is the ``coverage`` quantile of the absolute score disagreement and
    ``kappa2`` the disagreement between the two thresholds. This is a heuristic:
    the guarantee of the modified rule needs true error bounds.
    """
    diff = np.abs(np.asarray(gamma_a, float) - np.asarray(gamma_b, float))
    return float(np.quantile(diff, coverage)), float(abs(qhat_a - qhat_b))
