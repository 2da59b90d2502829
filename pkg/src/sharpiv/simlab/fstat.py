"""First-stage F-statistics for two equally strong instruments of different sharpness."""
from __future__ import annotations

from typing import Callable, NamedTuple

import numpy as np


class FStatMeans(NamedTuple):
    z1: float
    z2_nointer: float
    z2_inter: float


def robust_wald_f(design: np.ndarray, y: np.ndarray, tested: list[int]) -> float:
    """Wald F for ``coef[tested] = 0`` in an OLS fit, with the HC0 sandwich covariance."""
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    bread = np.linalg.inv(design.T @ design)
    meat = design.T @ (resid[:, None] ** 2 * design)
    cov = bread @ meat @ bread
    b = coef[tested]
    v = cov[np.ix_(tested, tested)]
    return float(b @ np.linalg.solve(v, b) / len(tested))


def _treat_z1(x, z):
    return 0.2 * x + 0.25 * z


def _treat_z2(x, z):
    return 0.3 * x + 0.5 * x * z


def first_stage_fstat_demo(n: int = 1000, nsim: int = 1000, seed: int = 1000,
                           p1: Callable = _treat_z1, p2: Callable = _treat_z2) -> FStatMeans:
    """Average first-stage F over ``nsim`` samples.

    ``X ~ U(0,1)``, ``Z ~ Bern(1/2)``. By default instrument 1 has
    ``A ~ Bern(0.2 X + 0.25 Z)`` and instrument 2 ``A ~ Bern(0.3 X + 0.5 X Z)``;
    ``p1``/``p2`` override these treatment probabilities. Instrument 2 is tested
    both with the additive model ``a ~ x + z`` and with ``a ~ x * z`` (``Z`` and
    ``XZ`` jointly).
    """
    rng = np.random.default_rng(seed)
    out = np.empty((nsim, 3))
    for i in range(nsim):
        x = rng.uniform(size=n)
        z = (rng.uniform(size=n) < 0.5).astype(float)
        ones = np.ones(n)
        additive = np.column_stack([ones, x, z])
        a1 = (rng.uniform(size=n) < p1(x, z)).astype(float)
        out[i, 0] = robust_wald_f(additive, a1, [2])
        a2 = (rng.uniform(size=n) < p2(x, z)).astype(float)
        out[i, 1] = robust_wald_f(additive, a2, [2])
        out[i, 2] = robust_wald_f(np.column_stack([additive, x * z]), a2, [2, 3])
    return FStatMeans(*(float(v) for v in out.mean(axis=0)))


def oracle_strength_sharpness() -> dict:
    """Population strength and sharpness of the two demo instruments (scores 0.25 and X/2)."""
    # gamma_2 = X/2 with X ~ U(0,1): the top 25% of scores are X > 0.75
    mu = 0.25
    xi2 = (1 - 0.75 ** 2) / 4
    return {"z1": (mu, 0.0), "z2": (mu, (xi2 - mu ** 2) / (mu - mu ** 2))}
