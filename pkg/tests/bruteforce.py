"""Exact enumeration oracles on small discrete samples, in rational arithmetic."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from sharpiv.data import IVDataset, assign_folds
from sharpiv.nuisance import NuisanceFit

Y_GRID = [Fraction(k, 4) for k in range(5)]


def random_discrete_sample(rng: np.random.Generator, n: int, levels: int):
    """Covariate levels 0..levels-1 where every (level, arm) cell is occupied.

    Returns python lists (x, z, a, y) with ``y`` as Fractions on a quarter grid.
    """
    assert n >= 2 * levels
    cells = [(lv, z) for lv in range(levels) for z in (0, 1)]
    x = [c[0] for c in cells] + list(rng.integers(0, levels, size=n - len(cells)))
    z = [c[1] for c in cells] + list(rng.integers(0, 2, size=n - len(cells)))
    order = rng.permutation(n)
    x = [int(x[i]) for i in order]
    z = [int(z[i]) for i in order]
    a = [int(v) for v in rng.integers(0, 2, size=n)]
    y = [Y_GRID[int(k)] for k in rng.integers(0, len(Y_GRID), size=n)]
    return x, z, a, y


def transformed(a, y):
    """Exact ``V_u1, V_u0, V_l1, V_l0`` per unit."""
    return {
        "u1": [yi * ai + 1 - ai for ai, yi in zip(a, y)],
        "u0": [yi * (1 - ai) for ai, yi in zip(a, y)],
        "l1": [yi * ai for ai, yi in zip(a, y)],
        "l0": [yi * (1 - ai) + ai for ai, yi in zip(a, y)],
    }


def cell_mean(x, z, t, level, arm) -> Fraction:
    vals = [Fraction(ti) for xi, zi, ti in zip(x, z, t) if xi == level and zi == arm]
    return sum(vals, Fraction(0)) / len(vals)


def level_share(x, level, weights=None) -> Fraction:
    weights = weights or [1] * len(x)
    return Fraction(sum(w for xi, w in zip(x, weights) if xi == level), sum(weights))


def saturated_fit(x, z, a, y) -> tuple[IVDataset, NuisanceFit]:
    """Dataset plus in-sample cell-mean nuisances, so influence-function corrections cancel per cell."""
    n = len(x)
    ds = IVDataset(np.array(x, float), z, a, np.array([float(v) for v in y]))
    levels = sorted(set(x))
    pi = {lv: Fraction(sum(zi for xi, zi in zip(x, z) if xi == lv), x.count(lv)) for lv in levels}
    lam = {(lv, arm): cell_mean(x, z, a, lv, arm) for lv in levels for arm in (0, 1)}
    v = transformed(a, y)
    nu = {k: [float(cell_mean(x, z, v[k], xi, int(k[1]))) for xi in x] for k in v}
    ey = {arm: [float(cell_mean(x, z, y, xi, arm)) for xi in x] for arm in (0, 1)}
    folds = assign_folds(n, 2, seed=0)
    nf = NuisanceFit.from_arrays(
        [float(pi[xi]) for xi in x],
        [float(lam[(xi, 0)]) for xi in x],
        [float(lam[(xi, 1)]) for xi in x],
        folds, nu=nu, ey=ey, clip_eps=1e-6,
    )
    return ds, nf


def enum_bounds(x, z, a, y, g_level) -> tuple[Fraction, Fraction]:
    """``sum_x p(x | g=1) {E(V_j1 | x, Z=1) - E(V_j0 | x, Z=0)}`` for ``j = l, u``."""
    v = transformed(a, y)
    weights = [g_level[xi] for xi in x]
    out = []
    for j in ("l", "u"):
        total = Fraction(0)
        for lv in sorted(set(x)):
            share = level_share(x, lv, weights)
            if share:
                total += share * (cell_mean(x, z, v[j + "1"], lv, 1) - cell_mean(x, z, v[j + "0"], lv, 0))
        out.append(total)
    return out[0], out[1]


def enum_late(x, z, a, y, g_level) -> Fraction:
    weights = [g_level[xi] for xi in x]
    num = den = Fraction(0)
    for lv in sorted(set(x)):
        share = level_share(x, lv, weights)
        num += share * (cell_mean(x, z, y, lv, 1) - cell_mean(x, z, y, lv, 0))
        den += share * (cell_mean(x, z, a, lv, 1) - cell_mean(x, z, a, lv, 0))
    return num / den


def enum_strength(x, z, a) -> Fraction:
    return sum(
        (level_share(x, lv) * (cell_mean(x, z, a, lv, 1) - cell_mean(x, z, a, lv, 0)) for lv in sorted(set(x))),
        Fraction(0),
    )


def enum_error_latent(weights, gamma, h) -> Fraction:
    """``P(h != C)`` by summing over latent complier status at each covariate point."""
    total = Fraction(0)
    for w, g, hv in zip(weights, gamma, h):
        for c, pc in ((1, g), (0, 1 - g)):
            if hv != c:
                total += w * pc
    return total / sum(weights)


def calibrated_population(rng: np.random.Generator, n_points: int, k_top: int):
    """Equal-within-group weighted scores whose top-``k_top`` group has mass exactly ``mu``.

    Returns ``(counts, gamma, top)``: integer replication counts, Fraction scores
    and the boolean top-group mask. Scores are distinct tenths, so the
    ``1 - mu`` quantile is unique and equals the largest score outside the top group.
    """
    vals = sorted(rng.choice(np.arange(1, 10), size=n_points, replace=False).tolist())
    gamma = [Fraction(int(v), 10) for v in vals]
    top = [i >= n_points - k_top for i in range(n_points)]
    g_top = sum((g for g, t in zip(gamma, top) if t), Fraction(0)) / k_top
    g_rest = sum((g for g, t in zip(gamma, top) if not t), Fraction(0)) / (n_points - k_top)
    s = g_rest / (1 - g_top + g_rest)  # makes the top-group mass equal to the strength
    w_top, w_rest = s / k_top, (1 - s) / (n_points - k_top)
    denom = math.lcm(w_top.denominator, w_rest.denominator)
    counts = [int((w_top if t else w_rest) * denom) for t in top]
    return counts, gamma, np.array(top)


def expand(counts, *columns):
    """Replicate each column entry by its count, as float arrays."""
    return [np.repeat(np.array([float(v) for v in col]), counts) for col in columns]


def balanced_population(rng: np.random.Generator, levels: int):
    """Finite population with latent strata whose counts factor as Z x stratum x (Y1, Y0).

    The product form makes Z independent of strata and potential outcomes within
    each covariate level, so cell means of the finite sample are the population law.
    Returns ``(x, z, a, y, complier, y1, y0)`` as python lists.
    """
    out = {k: [] for k in ("x", "z", "a", "y", "c", "y1", "y0")}
    for lv in range(levels):
        m = {0: int(rng.integers(1, 3)), 1: int(rng.integers(1, 3))}
        k = {"c": int(rng.integers(0, 3)), "at": int(rng.integers(0, 3)), "nt": int(rng.integers(0, 3))}
        if sum(k.values()) == 0:
            k["nt"] = 1
        r = {s: [int(v) for v in rng.integers(0, 3, 4)] for s in k}
        for s in k:
            if sum(r[s]) == 0:
                r[s][int(rng.integers(0, 4))] = 1
        for z in (0, 1):
            for s, ks in k.items():
                for idx, (y1, y0) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
                    for _ in range(m[z] * ks * r[s][idx]):
                        a = z if s == "c" else int(s == "at")
                        out["x"].append(lv)
                        out["z"].append(z)
                        out["a"].append(a)
                        out["y"].append(Fraction(y1 if a else y0))
                        out["c"].append(int(s == "c"))
                        out["y1"].append(y1)
                        out["y0"].append(y0)
    return tuple(out[k] for k in ("x", "z", "a", "y", "c", "y1", "y0"))


GRID = 64  # dyadic grid: every score, threshold and window is exact in binary floating point


def modified_classifier_instance(rng: np.random.Generator, n_points: int = 6):
    """Random weighted scores, perturbed estimates and error bounds ``kappa`` that hold.

    Returns ``(weights, gamma, gamma_hat, q, qhat, kappa1, kappa2)`` on the
    ``1/GRID`` lattice; ``q`` sits between lattice points so the true rule has
    no ties.
    """
    weights = [int(v) for v in rng.integers(1, 6, n_points)]
    gamma = [Fraction(int(v), GRID) for v in rng.integers(0, GRID + 1, n_points)]
    gamma_hat = [min(max(g + Fraction(int(d), GRID), Fraction(0)), Fraction(1))
                 for g, d in zip(gamma, rng.integers(-12, 13, n_points))]
    q = Fraction(2 * int(rng.integers(0, GRID)) + 1, 2 * GRID)
    qhat = min(max(q + Fraction(int(rng.integers(-8, 9)), 2 * GRID), Fraction(0)), Fraction(1))
    kappa1 = max(abs(gh - g) for gh, g in zip(gamma_hat, gamma)) + Fraction(int(rng.integers(0, 3)), GRID)
    kappa2 = abs(qhat - q) + Fraction(int(rng.integers(0, 3)), GRID)
    return weights, gamma, gamma_hat, q, qhat, kappa1, kappa2


def modified_excess_check(rng: np.random.Generator) -> tuple[Fraction, Fraction]:
    """``(excess error over the true-threshold rule, 2 * weighted mean |gamma_hat - gamma|)``."""
    from sharpiv.classify import modified_quantile_classifier

    w, gamma, gamma_hat, q, qhat, k1, k2 = modified_classifier_instance(rng)
    h = modified_quantile_classifier([float(v) for v in gamma_hat], float(qhat), float(k1), float(k2)).h
    h_true = [int(g > q) for g in gamma]
    excess = enum_error_latent(w, gamma, [int(v) for v in h]) - enum_error_latent(w, gamma, h_true)
    l1 = sum((wi * abs(gh - g) for wi, gh, g in zip(w, gamma_hat, gamma)), Fraction(0)) / sum(w)
    return excess, 2 * l1
