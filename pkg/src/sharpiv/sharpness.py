"""Strength and sharpness of an instrument: estimators, intervals and closed-form identities."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import expit, logit
from scipy.stats import norm

from .classify import ComplierAssignment
from .data import IVDataset
from .errors import DegeneracyWarning, ValidationError
from .nuisance import NuisanceFit, phi_mu


class StrengthEstimate(NamedTuple):
    mu_hat: float
    se: float
    in_unit_interval: bool


def estimate_strength(ds: IVDataset, nf: NuisanceFit) -> StrengthEstimate:
    """Cross-fitted estimate of the complier share, ``P_n(phi_mu)``, with its standard error."""
    vals = phi_mu(ds, nf)
    mu = float(vals.mean())
    se = float(vals.std(ddof=1) / np.sqrt(ds.n)) if ds.n > 1 else float("nan")
    ok = 0.0 < mu < 1.0
    if not ok:
        warnings.warn(f"strength estimate outside (0,1): {mu:.4f}", DegeneracyWarning)
    return StrengthEstimate(mu, se, ok)


@dataclass(frozen=True)
class SharpnessReport:
    mu_hat: float
    mu_se: float
    xi_hat: float
    psi_hat: float
    psi_se: float
    qhat: float
    wald_ci: tuple
    logit_ci: tuple
    level: float = 0.95
    flags: tuple = ()

    def as_dict(self) -> dict:
        return {
            "mu_hat": self.mu_hat, "mu_se": self.mu_se, "xi_hat": self.xi_hat,
            "psi_hat": self.psi_hat, "psi_se": self.psi_se, "qhat": self.qhat,
            "wald_ci": list(self.wald_ci), "logit_ci": list(self.logit_ci),
            "level": self.level, "flags": list(self.flags),
        }


def sharpness_influence(pmu, h, mu: float, xi: float, q: float) -> np.ndarray:
    """Per-unit influence function of sharpness evaluated at ``(mu, xi, q)``."""
    v = mu - mu ** 2
    return (pmu * h + q * (pmu - h) - xi) / v + (2 * mu * xi - xi - mu ** 2) / v ** 2 * (pmu - mu)


def estimate_sharpness(
    ds: IVDataset,
    nf: NuisanceFit,
    hq: ComplierAssignment,
    mu_hat: Optional[float] = None,
    level: float = 0.95,
) -> SharpnessReport:
    """Estimate sharpness ``(xi - mu^2) / (mu (1 - mu))`` with ``xi = P_n(phi_mu * h_q)``.

    ``hq`` should be the fold-specific quantile classifier at level ``mu_hat``;
    its averaged threshold enters the variance. Returns both the Wald interval
    and the logit-transformed interval (the latter only when ``0 < psi_hat < 1``).
    """
    pmu = phi_mu(ds, nf)
    n = ds.n
    mu = float(pmu.mean()) if mu_hat is None else float(mu_hat)
    mu_se = float(pmu.std(ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    if not 0.0 < mu < 1.0:
        raise ValidationError(f"strength estimate outside (0,1): {mu:.4f}; sharpness undefined")
    h = hq.h.astype(float)
    q = float(hq.params.get("qhat", 0.0))
    z = float(norm.ppf(0.5 + level / 2))
    nan2 = (float("nan"), float("nan"))
    if h.sum() == 0:
        warnings.warn("degenerate quantile classifier (no units selected); sharpness set to 0",
                      DegeneracyWarning)
        return SharpnessReport(mu, mu_se, 0.0, 0.0, float("nan"), q, nan2, nan2, level,
                               ("degenerate_quantile",))
    xi = float(np.mean(pmu * h))
    psi = (xi - mu ** 2) / (mu * (1 - mu))
    infl = sharpness_influence(pmu, h, mu, xi, q)
    sd = float(infl.std(ddof=1)) if n > 1 else float("nan")
    se = sd / np.sqrt(n)
    wald = (psi - z * se, psi + z * se)
    flags = tuple(hq.flags)
    if 0.0 < psi < 1.0:
        half = z * se / (psi - psi ** 2)
        logit_ci = (float(expit(logit(psi) - half)), float(expit(logit(psi) + half)))
    else:
        warnings.warn(f"sharpness estimate {psi:.4f} outside (0,1); logit interval undefined",
                      DegeneracyWarning)
        logit_ci = nan2
        flags += ("psi_outside_unit_interval",)
    return SharpnessReport(mu, mu_se, xi, float(psi), float(se), q,
                           (float(wald[0]), float(wald[1])), logit_ci, level, flags)


def sharpness_identities(mu: float, psi: float) -> tuple[float, float]:
    """Classification error and bound length of the quantile rule from strength and sharpness."""
    return 2 * mu * (1 - mu) * (1 - psi), (1 - mu) * (1 - psi)


def classifier_identities(mu: float, psi_h: float, mean_h: float) -> tuple[float, float]:
    """Error and bound length of a generic classifier ``h`` with sharpness ``psi_h`` and size ``E h``."""
    error = 2 * mu * (1 - mu) * (1 - psi_h) + (1 - 2 * mu) * (mean_h - mu)
    length = (1 - mu) * (1 - mu * psi_h / mean_h)
    return error, length


def variance_explained(c, h) -> float:
    """``cov(C, h) / var(C)``."""
    c = np.asarray(c, dtype=float)
    h = np.asarray(getattr(h, "h", h), dtype=float)
    var = c.var()
    if var == 0:
        raise ValidationError("labels contain a single class")
    return float(np.mean((c - c.mean()) * (h - h.mean())) / var)


def youden_index(c_labels, h) -> float:
    """True-positive rate minus false-positive rate, ``P(h=1|C=1) - P(h=1|C=0)``."""
    c = np.asarray(c_labels)
    hv = np.asarray(getattr(h, "h", h), dtype=float)
    pos, neg = c == 1, c == 0
    if not pos.any() or not neg.any():
        raise ValidationError("labels contain a single class")
    return float(hv[pos].mean() - hv[neg].mean())


def classifier_sharpness(gamma, h, weights=None) -> float:
    """Population sharpness of a classifier ``h``: ``E{(gamma - mu) h} / (mu - mu^2)``."""
    gamma = np.asarray(gamma, dtype=float)
    h = np.asarray(getattr(h, "h", h), dtype=float)
    w = np.full(len(gamma), 1.0 / len(gamma)) if weights is None else np.asarray(weights, float)
    mu = float(np.sum(w * gamma))
    return float(np.sum(w * (gamma - mu) * h) / (mu - mu ** 2))
