"""Covariate-adjusted bounds on subgroup effects, the LATE, and Imbens-Manski intervals."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy.stats import norm

from .classify import ComplierAssignment
from .data import IVDataset, ScaleInfo
from .errors import DegeneracyWarning, NumericalError, ValidationError
from .nuisance import NuisanceFit, phi_mu, phi_z


@dataclass(frozen=True)
class TransformedOutcomes:
    v_u1: np.ndarray
    v_u0: np.ndarray
    v_l1: np.ndarray
    v_l0: np.ndarray


def transform_outcomes(ds: IVDataset) -> TransformedOutcomes:
    """Outcomes whose arm-specific regressions give the upper/lower bound contrasts.

    ``V_u1 = YA + 1 - A``, ``V_u0 = Y(1 - A)``, ``V_l1 = YA``, ``V_l0 = Y(1 - A) + A``.
    """
    y = ds.y
    if np.any(y < 0) or np.any(y > 1):
        raise ValidationError("outcome must lie in [0, 1]; call rescale_outcome first")
    a = ds.a.astype(float)
    return TransformedOutcomes(
        v_u1=y * a + 1 - a,
        v_u0=y * (1 - a),
        v_l1=y * a,
        v_l0=y * (1 - a) + a,
    )


def _subgroup(g, n: int):
    if g is None:
        return np.ones(n), "all"
    if isinstance(g, ComplierAssignment):
        return g.h.astype(float), g.kind
    g = np.asarray(g, dtype=float)
    if g.shape != (n,):
        raise ValidationError("subgroup indicator must have n entries")
    return g, "custom"


def contrast_ifs(ds: IVDataset, nf: NuisanceFit) -> dict:
    """Per-unit ``phi_1(V_{j,1}) - phi_0(V_{j,0})`` for ``j`` in ``{'l', 'u'}``."""
    v = transform_outcomes(ds)
    return {
        "u": phi_z(ds, 1, v.v_u1, nf.nu["u1"], nf) - phi_z(ds, 0, v.v_u0, nf.nu["u0"], nf),
        "l": phi_z(ds, 1, v.v_l1, nf.nu["l1"], nf) - phi_z(ds, 0, v.v_l0, nf.nu["l0"], nf),
    }


@dataclass(frozen=True)
class BoundsReport:
    beta_l: float
    beta_u: float
    se_l: float
    se_u: float
    im_interval: tuple
    level: float
    subgroup_size: float
    crossed: bool = False
    subgroup: str = "all"

    @property
    def length(self) -> float:
        return self.beta_u - self.beta_l

    def to_original(self, scale: ScaleInfo) -> "BoundsReport":
        """Express bounds, SEs and the interval in the original outcome units."""
        f = lambda v: float(scale.effect_to_original(v))
        return replace(
            self,
            beta_l=f(self.beta_l), beta_u=f(self.beta_u),
            se_l=f(self.se_l), se_u=f(self.se_u),
            im_interval=(f(self.im_interval[0]), f(self.im_interval[1])),
        )

    def as_dict(self) -> dict:
        return {
            "beta_l": self.beta_l, "beta_u": self.beta_u,
            "se_l": self.se_l, "se_u": self.se_u,
            "ci_lo": self.im_interval[0], "ci_hi": self.im_interval[1],
            "level": self.level, "subgroup_size": self.subgroup_size,
            "crossed": self.crossed, "subgroup": self.subgroup,
        }


def subgroup_bounds(
    ds: IVDataset,
    nf: NuisanceFit,
    g=None,
    level: float = 0.95,
    mu_hat: Optional[float] = None,
) -> BoundsReport:
    """Influence-function estimates of the lower/upper bounds on the effect in ``{g = 1}``.

    ``g=None`` gives the bounds on the average treatment effect. For a quantile
    assignment the standard errors use the variance in which the estimated
    strength ``mu_hat`` normalizes and ``phi_mu`` absorbs the estimated subgroup
    size; for any other subgroup they use the ratio-estimator variance with
    ``mean(g)``.
    """
    n = ds.n
    gv, label = _subgroup(g, n)
    gbar = gv.mean()
    if gbar <= 0:
        raise ValidationError("empty subgroup")
    contrasts = contrast_ifs(ds, nf)
    use_mu = label == "quantile"
    if use_mu:
        mu = float(np.mean(phi_mu(ds, nf))) if mu_hat is None else float(mu_hat)
        pmu = phi_mu(ds, nf)
    est, se = {}, {}
    for j, d in contrasts.items():
        beta = float(np.mean(d * gv) / gbar)
        if use_mu:
            infl = (d * gv - beta * pmu) / mu
        else:
            infl = (d - beta) * gv / gbar
        est[j] = beta
        se[j] = float(np.std(infl, ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
    crossed = est["l"] > est["u"]
    if crossed:
        warnings.warn("estimated bounds cross (beta_l > beta_u)", DegeneracyWarning)
    if se["l"] > 0 and se["u"] > 0:
        interval = imbens_manski_ci(est["l"], est["u"], se["l"], se["u"], n=1, level=level)
    else:
        interval = (min(est.values()), max(est.values()))
    return BoundsReport(est["l"], est["u"], se["l"], se["u"], interval, level, float(gbar), crossed, label)


def bound_length(gamma, g) -> float:
    """Plug-in bound length ``E(1 - gamma | g = 1)``: the non-complier share of the subgroup."""
    gamma = np.asarray(gamma, dtype=float)
    gv, _ = _subgroup(g, len(gamma))
    if gv.sum() <= 0:
        raise ValidationError("empty subgroup")
    return float(np.sum((1 - gamma) * gv) / np.sum(gv))


class LateEstimate(NamedTuple):
    estimate: float
    se: float

    def ci(self, level: float = 0.95) -> tuple:
        z = norm.ppf(0.5 + level / 2)
        return self.estimate - z * self.se, self.estimate + z * self.se


def estimate_late(ds: IVDataset, nf: NuisanceFit, g=None, min_denominator: float = 1e-6) -> LateEstimate:
    """Ratio of influence-function means, ``P_n[(phi_1(Y) - phi_0(Y)) g] / P_n[phi_mu g]``.

    The standard error comes from the delta method applied to the two
    influence functions.
    """
    gv, _ = _subgroup(g, ds.n)
    num = (phi_z(ds, 1, ds.y, nf.ey[1], nf) - phi_z(ds, 0, ds.y, nf.ey[0], nf)) * gv
    den = phi_mu(ds, nf) * gv
    den_mean = den.mean()
    if abs(den_mean) <= min_denominator:
        raise NumericalError("instrument too weak in subgroup")
    est = float(num.mean() / den_mean)
    infl = (num - est * den) / den_mean
    se = float(np.std(infl, ddof=1) / np.sqrt(ds.n)) if ds.n > 1 else float("nan")
    return LateEstimate(est, se)


def imbens_manski_critical_value(width_ratio: float, level: float = 0.95, tol: float = 1e-10) -> float:
    """Solve ``Phi(c + width_ratio) - Phi(-c) = level`` for ``c`` by bisection."""
    if width_ratio < 0:
        raise ValidationError("width ratio must be non-negative")
    f = lambda c: norm.cdf(c + width_ratio) - norm.cdf(-c) - level
    lo, hi = 0.0, float(norm.ppf(0.5 + level / 2))
    if not (f(lo) <= 0 <= f(hi) + 1e-15):
        raise NumericalError("Imbens-Manski bisection bracket failure")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def imbens_manski_ci(beta_l, beta_u, se_l, se_u, n: int = 1, level: float = 0.95) -> tuple:
    """Confidence interval for a partially identified parameter.

    ``se_l / sqrt(n)`` and ``se_u / sqrt(n)`` must be the standard errors of the
    bound estimates; pass ``n=1`` when already-scaled standard errors are given.
    Crossed bounds are swapped (with a warning) before building the interval.
    """
    if not (se_l > 0 and se_u > 0):
        raise ValidationError("standard errors must be positive")
    if beta_l > beta_u:
        warnings.warn("lower bound exceeds upper bound; swapping", DegeneracyWarning)
        beta_l, beta_u, se_l, se_u = beta_u, beta_l, se_u, se_l
    root_n = np.sqrt(n)
    ratio = root_n * (beta_u - beta_l) / max(se_l, se_u)
    c = imbens_manski_critical_value(ratio, level)
    return float(beta_l - c * se_l / root_n), float(beta_u + c * se_u / root_n)
