"""Population quantities for the probit compliance score ``gamma(x) = Phi(b0 + b1 x)``, ``X ~ N(0,1)``.

Everything here is deterministic: closed forms where available, adaptive
quadrature otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.stats import norm

from ..errors import NumericalError, ValidationError

# N(0,1) mass beyond +-12 is below 1e-32, far under any tolerance used here
_X_LIMIT = 12.0
_QUAD_TOL = 1e-13
B1_BRACKET = (math.exp(-2.8), math.exp(5.5))


@dataclass(frozen=True)
class OracleMoments:
    """Strength, quantile, sharpness and error/length functionals of a probit score."""

    mu: float
    q: float
    psi: float
    e_q: float
    e_s: float
    e_h0: float
    length_hq: float

    def identity_residuals(self) -> tuple[float, float]:
        """Differences between the error/length of the quantile rule and their strength-sharpness forms."""
        mu, psi = self.mu, self.psi
        return (
            self.e_q - 2 * mu * (1 - mu) * (1 - psi),
            self.length_hq - (1 - mu) * (1 - psi),
        )

    def error_chain(self) -> list[float]:
        """``[(1-sqrt(1-2E_s))/2, (1-sqrt(1-2E_q))/2, E(h0), E_q, E_s]``, ascending in theory."""
        lo = lambda e: (1 - math.sqrt(max(1 - 2 * e, 0.0))) / 2
        return [lo(self.e_s), lo(self.e_q), self.e_h0, self.e_q, self.e_s]


def _gamma(b0, b1):
    return lambda x: norm.cdf(b0 + b1 * x)


def _quad(f, a, b, points=()):
    pts = [p for p in points if a < p < b]
    val, err = integrate.quad(f, a, b, points=pts or None, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=500)
    if not np.isfinite(val) or err > 1e-9:
        raise NumericalError(f"quadrature did not converge (error estimate {err:.2e})")
    return val


def _step_points(center: float, b1: float) -> tuple:
    """Breakpoints bracketing the transition of ``Phi(b1 (x - center))``, which is ~1/b1 wide."""
    return (center,) + tuple(center + sgn * k / b1 for k in (1.0, 4.0, 10.0) for sgn in (-1, 1))


def _expect(g, lo=-_X_LIMIT, hi=_X_LIMIT, points=()):
    """``E[g(X) 1{lo < X < hi}]`` for ``X ~ N(0,1)``."""
    lo, hi = max(lo, -_X_LIMIT), min(hi, _X_LIMIT)
    if hi <= lo:
        return 0.0
    return _quad(lambda x: g(x) * norm.pdf(x), lo, hi, points)


def strength(b0: float, b1: float) -> float:
    return float(norm.cdf(b0 / math.sqrt(1 + b1 ** 2)))


def quantile_cut(b0: float, b1: float) -> tuple[float, float]:
    """``(x_q, q)``: covariate cut-off with ``P(X > x_q) = mu`` and the score there."""
    s = math.sqrt(1 + b1 ** 2)
    x_q = -b0 / s
    return x_q, float(norm.cdf(b0 - b0 * b1 / s))


def oracle_moments(b0: float, b1: float) -> OracleMoments:
    """Population moments of ``gamma(X) = Phi(b0 + b1 X)``.

    ``mu`` and ``q`` are closed forms; every other field is its own quadrature of
    the defining expectation, so the algebraic identities linking them are a
    genuine cross-check rather than true by construction.
    """
    if not (np.isfinite(b0) and np.isfinite(b1)):
        raise ValidationError("b0 and b1 must be finite")
    b1 = abs(b1)  # X is symmetric, so flipping its sign leaves every moment unchanged
    mu = strength(b0, b1)
    if b1 == 0.0:
        # constant score: the top-mu rule is a random mu-fraction
        return OracleMoments(mu, mu, 0.0, 2 * mu * (1 - mu), 2 * (mu - mu ** 2), min(mu, 1 - mu), 1 - mu)
    x_q, q = quantile_cut(b0, b1)
    x_half = -b0 / b1
    bps = (x_q,) + _step_points(x_half, b1)
    gam = _gamma(b0, b1)
    xi = _expect(gam, lo=x_q, points=bps)
    psi = (xi - mu ** 2) / (mu * (1 - mu))
    e_q = 2 * _expect(gam, hi=x_q, points=bps)
    e_s = 2 * _expect(lambda x: gam(x) * (1 - gam(x)), points=bps)
    e_h0 = _expect(gam, hi=x_half, points=bps) + _expect(lambda x: 1 - gam(x), lo=x_half, points=bps)
    length = _expect(lambda x: 1 - gam(x), lo=x_q, points=bps) / mu
    return OracleMoments(mu, q, psi, e_q, e_s, e_h0, length)


def psi_from_strength(mu: float, b1: float) -> float:
    """Sharpness of the probit score with strength ``mu`` and slope ``b1``.

    ``[int_{-Phi^{-1}(mu)}^inf Phi(sqrt(1+b1^2) Phi^{-1}(mu) + b1 x) phi(x) dx - mu^2] / (mu (1 - mu))``
    """
    if not 0 < mu < 1:
        raise ValidationError("mu must lie in (0, 1)")
    if b1 == 0:
        return 0.0
    zmu = norm.ppf(mu)
    s = math.sqrt(1 + b1 ** 2)
    f = lambda x: norm.cdf(s * zmu + b1 * x)
    xi = _expect(f, lo=-zmu, points=(-zmu,) + _step_points(-s * zmu / b1, b1))
    return (xi - mu ** 2) / (mu * (1 - mu))


def intercept_for(mu: float, b1: float) -> float:
    """``b0 = Phi^{-1}(mu) sqrt(1 + b1^2)``, the intercept giving strength ``mu``."""
    return float(norm.ppf(mu) * math.sqrt(1 + b1 ** 2))


def solve_dgp_params(mu: float, psi: float, bracket=B1_BRACKET, tol: float = 1e-10) -> tuple[float, float]:
    """Find ``(b0, b1)`` whose probit score has strength ``mu`` and sharpness ``psi``.

    Sharpness increases in ``b1`` at fixed strength, so the root in ``log b1`` is
    bracketed by ``bracket`` and found with Brent's method. ``psi = 0`` returns
    the constant score ``(Phi^{-1}(mu), 0)``.
    """
    if not 0 < mu < 1:
        raise ValidationError("mu must lie in (0, 1)")
    if psi == 0:
        return intercept_for(mu, 0.0), 0.0
    if not 0 < psi < 1:
        raise ValidationError("psi must lie in [0, 1); psi = 1 needs an indicator score")
    lo, hi = math.log(bracket[0]), math.log(bracket[1])
    f = lambda lb: psi_from_strength(mu, math.exp(lb)) - psi
    f_lo, f_hi = f(lo), f(hi)
    if f_lo > 0 or f_hi < 0:
        raise ValidationError(
            f"psi={psi} unreachable for mu={mu}: bracket covers [{f_lo + psi:.4f}, {f_hi + psi:.4f}]"
        )
    b1 = math.exp(optimize.brentq(f, lo, hi, xtol=tol, rtol=1e-14))
    return intercept_for(mu, b1), b1


def sharpness_scan(mu: float, b1_values) -> np.ndarray:
    """Sharpness along a grid of slopes at fixed strength."""
    return np.array([psi_from_strength(mu, float(b)) for b in b1_values])


def monte_carlo_sharpness(b0: float, b1: float, draws: int = 10_000_000, seed: int = 0,
                          chunk: int = 1_000_000) -> tuple[float, float]:
    """Simulation estimate of sharpness from latent complier draws, with its Monte Carlo SE.

    Draws ``X`` and ``C ~ Bern(gamma(X))``, sets ``h = 1{X > x_q}`` and estimates
    ``(E[C h] - mu^2) / (mu (1 - mu))`` using the closed-form strength.
    """
    rng = np.random.default_rng(seed)
    b1 = abs(b1)
    mu = strength(b0, b1)
    x_q, _ = quantile_cut(b0, b1)
    total, total_sq, done = 0.0, 0.0, 0
    while done < draws:
        m = min(chunk, draws - done)
        x = rng.standard_normal(m)
        c = rng.uniform(size=m) < norm.cdf(b0 + b1 * x)
        h = x > x_q
        ch = (c & h).astype(float)
        total += ch.sum()
        total_sq += (ch ** 2).sum()
        done += m
    mean = total / draws
    sd = math.sqrt(max(total_sq / draws - mean ** 2, 0.0))
    scale = mu * (1 - mu)
    return (mean - mu ** 2) / scale, sd / math.sqrt(draws) / scale


def margin_probability(b0: float, b1: float, t) -> np.ndarray:
    """``P(|gamma(X) - q| <= t)`` in closed form through the probit link."""
    t = np.asarray(t, dtype=float)
    b1 = abs(b1)
    if b1 == 0:
        return np.ones_like(t)
    _, q = quantile_cut(b0, b1)
    upper = norm.ppf(np.clip(q + t, 0.0, 1.0))
    lower = norm.ppf(np.clip(q - t, 0.0, 1.0))
    return norm.cdf((upper - b0) / b1) - norm.cdf((lower - b0) / b1)
