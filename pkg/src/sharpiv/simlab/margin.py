"""Margin-condition curves ``t -> P(|gamma - q| <= t)`` and power-law envelopes ``C t^alpha``."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import pandas as pd

from ..errors import ValidationError
from .oracle import margin_probability

DEFAULT_ALPHAS = np.round(np.arange(0.05, 4.0001, 0.05), 2)
DEFAULT_C_MAX = 10.0


@dataclass(frozen=True)
class MarginFit:
    """Margin curve on a grid plus the fitted envelope.

    ``alpha``/``C`` is the envelope ``C t^alpha >= P(t)`` whose largest log-gap over
    the grid is smallest. ``c_by_alpha[k]`` is the smallest constant making
    ``alpha_grid[k]`` valid on the grid; an exponent is called admissible when that
    constant is at most ``c_max``.
    """

    t: np.ndarray
    prob: np.ndarray
    C: float
    alpha: float
    alpha_grid: np.ndarray
    c_by_alpha: np.ndarray
    c_max: float
    degenerate: bool = False

    @property
    def max_admissible_alpha(self) -> float:
        ok = self.alpha_grid[self.c_by_alpha <= self.c_max]
        return float(ok.max()) if len(ok) else float("nan")

    def admits(self, alpha: float) -> bool:
        """Whether ``P(t) <= c_max t^alpha`` on the whole grid."""
        return bool(np.max(self.prob / self.t ** alpha) <= self.c_max)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.t, "prob": self.prob, "envelope": self.C * self.t ** self.alpha})


def fit_margin(t, prob, alphas=DEFAULT_ALPHAS, c_max: float = DEFAULT_C_MAX) -> MarginFit:
    """Grid search over exponents for the tightest power-law envelope of a margin curve."""
    t = np.asarray(t, dtype=float)
    prob = np.asarray(prob, dtype=float)
    alphas = np.asarray(alphas, dtype=float)
    if t.ndim != 1 or len(t) == 0 or np.any(t <= 0) or np.any(t >= 1):
        raise ValidationError("t grid must be a non-empty subset of (0, 1)")
    if np.allclose(prob, 1.0):
        c_by = np.max(prob[None, :] / t[None, :] ** alphas[:, None], axis=1)
        return MarginFit(t, prob, float("nan"), float("nan"), alphas, c_by, c_max, degenerate=True)
    if np.any(prob <= 0):
        raise ValidationError("margin probabilities must be positive on the grid")
    ratios = prob[None, :] / t[None, :] ** alphas[:, None]
    c_by = ratios.max(axis=1)
    gaps = np.log(c_by[:, None] / ratios).max(axis=1)
    k = int(np.argmin(gaps))
    return MarginFit(t, prob, float(c_by[k]), float(alphas[k]), alphas, c_by, c_max)


def margin_curve(b0: float, b1: float, t_grid, alphas=DEFAULT_ALPHAS, c_max: float = DEFAULT_C_MAX,
                 prob_fn: Optional[Callable] = None) -> MarginFit:
    """Margin curve of the probit score ``Phi(b0 + b1 x)`` (or of ``prob_fn(t)`` if given) and its fit.

    A constant score (``b1 = 0``) has ``P = 1`` for every ``t`` and is flagged degenerate.
    """
    t = np.asarray(t_grid, dtype=float)
    prob = prob_fn(t) if prob_fn is not None else margin_probability(b0, b1, t)
    return fit_margin(t, prob, alphas, c_max)


def uniform_margin_probability(q: float = 0.5) -> Callable:
    """``P(|U - q| <= t)`` for ``U ~ Unif(0, 1)``; equals ``2t`` while ``t <= min(q, 1-q)``."""
    return lambda t: np.minimum(q + np.asarray(t), 1.0) - np.maximum(q - np.asarray(t), 0.0)
