"""Simulation model with a probit compliance score, one-sided-coin non-compliers and binary outcomes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from ..data import IVDataset
from ..errors import ValidationError
from .oracle import solve_dgp_params


@dataclass(frozen=True)
class DGPConfig:
    """Parameters of one simulated sample.

    ``include_score`` appends the true score ``gamma(x)`` as a second covariate,
    so correctly specified parametric learners can use it.
    """

    b0: float
    b1: float
    beta: float = 0.2
    n: int = 1000
    seed: int = 0
    include_score: bool = True

    def __post_init__(self):
        if abs(self.beta) > 1:
            raise ValidationError("|beta| must be at most 1 so outcome probabilities stay in [0,1]")
        if self.n < 1:
            raise ValidationError("n must be positive")

    @classmethod
    def from_targets(cls, mu: float, psi: float, **kwargs) -> "DGPConfig":
        b0, b1 = solve_dgp_params(mu, psi)
        return cls(b0, b1, **kwargs)

    def gamma(self, x) -> np.ndarray:
        return norm.cdf(self.b0 + self.b1 * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SimDraws:
    """A simulated sample together with the quantities estimators never see."""

    dataset: IVDataset
    x: np.ndarray
    gamma: np.ndarray
    y1: np.ndarray
    y0: np.ndarray


def simulate_draws(cfg: DGPConfig) -> SimDraws:
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    x = rng.standard_normal(n)
    gamma = cfg.gamma(x)
    c = (rng.uniform(size=n) < gamma).astype(np.int8)
    z = (rng.uniform(size=n) < expit(x)).astype(np.int8)
    a_star = (rng.uniform(size=n) < 0.5).astype(np.int8)
    a = c * z + (1 - c) * a_star
    y1 = (rng.uniform(size=n) < 0.5 + cfg.beta / 2).astype(float)
    y0 = (rng.uniform(size=n) < 0.5 - cfg.beta / 2).astype(float)
    y = a * y1 + (1 - a) * y0
    if cfg.include_score:
        cov, names = np.column_stack([x, gamma]), ("x", "gamma")
    else:
        cov, names = x[:, None], ("x",)
    ds = IVDataset(cov, z, a, y, latent_c=c, x_names=names)
    return SimDraws(ds, x, gamma, y1, y0)


def simulate_dataset(cfg: DGPConfig) -> IVDataset:
    """Draw one sample; deterministic given ``cfg.seed``."""
    return simulate_draws(cfg).dataset
