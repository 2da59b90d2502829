"""End-to-end analysis of one dataset: cross-fit, classify, bound, and measure sharpness."""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from .bounds import estimate_late, subgroup_bounds
from .classify import (
    CLASSIFIER_KINDS,
    bayes_classifier,
    error_report,
    fold_quantile_classifier,
    heuristic_kappas,
    modified_quantile_classifier,
    stochastic_classifier,
)
from .data import IVDataset, assign_folds, rescale_outcome
from .errors import ValidationError
from .nuisance import DEFAULT_CLIP_EPS, LearnerSpec, fit_crossfit
from .sharpness import estimate_sharpness, estimate_strength

SCHEMA_VERSION = "1.0"
BOUND_KINDS = ("ate", "hq", "custom")
CI_KINDS = ("wald", "logit", "both")


@dataclass(frozen=True)
class AnalysisConfig:
    learner: str = "logistic"
    pi_learner: Optional[str] = None
    folds: int = 2
    clip_eps: float = DEFAULT_CLIP_EPS
    seed: int = 0
    classifier: str = "quantile"
    bounds: tuple = ("ate", "hq")
    level: float = 0.95
    sharpness: bool = True
    ci: str = "both"
    late: bool = False
    kappa1: Optional[float] = None
    kappa2: Optional[float] = None

    def __post_init__(self):
        if self.folds < 2:
            raise ValidationError("folds must be at least 2")
        if not 0 < self.level < 1:
            raise ValidationError("level must lie in (0, 1)")
        if self.classifier not in CLASSIFIER_KINDS:
            raise ValidationError(f"classifier must be one of {CLASSIFIER_KINDS}")
        bad = [b for b in self.bounds if b not in BOUND_KINDS]
        if bad:
            raise ValidationError(f"unknown bound kinds {bad}")
        if self.ci not in CI_KINDS:
            raise ValidationError(f"ci must be one of {CI_KINDS}")
        LearnerSpec.parse(self.learner)
        if self.pi_learner:
            LearnerSpec.parse(self.pi_learner)


@dataclass
class AnalysisResult:
    summary: dict
    units: pd.DataFrame
    warnings: list = field(default_factory=list)


def _seeds(seed: int, k: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(k)]


def run_analysis(ds: IVDataset, cfg: AnalysisConfig, subgroup=None) -> AnalysisResult:
    """Run the full pipeline; ``subgroup`` is the 0/1 indicator used for ``custom`` bounds."""
    if "custom" in cfg.bounds and subgroup is None:
        raise ValidationError("custom bounds need a subgroup indicator")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        summary, units = _run(ds, cfg, subgroup)
    messages = [f"{w.category.__name__}: {w.message}" for w in caught]
    summary["warnings"] = messages
    return AnalysisResult(summary, units, messages)


def _run(ds: IVDataset, cfg: AnalysisConfig, subgroup):
    fold_seed, coin_seed, refit_seed = _seeds(cfg.seed, 3)
    ds_unit, scale = rescale_outcome(ds)
    spec = LearnerSpec.parse(cfg.learner)
    pi_spec = LearnerSpec.parse(cfg.pi_learner) if cfg.pi_learner else None
    folds = assign_folds(ds.n, cfg.folds, seed=fold_seed)
    nf = fit_crossfit(ds_unit, folds, spec, cfg.clip_eps, pi_spec=pi_spec)
    strength = estimate_strength(ds_unit, nf)
    mu = strength.mu_hat
    gam = nf.gamma
    hq = fold_quantile_classifier(gam, folds, mu) if 0 < mu < 1 else None

    if cfg.classifier == "bayes":
        h = bayes_classifier(gam)
    elif cfg.classifier == "stochastic":
        h = stochastic_classifier(gam, seed=coin_seed)
    elif hq is None:
        raise ValidationError(f"strength estimate {mu:.4f} outside (0,1); quantile rules undefined")
    elif cfg.classifier == "quantile":
        h = hq
    else:
        k1, k2 = cfg.kappa1, cfg.kappa2
        if k1 is None or k2 is None:
            refolds = assign_folds(ds.n, cfg.folds, seed=refit_seed)
            nf_b = fit_crossfit(ds_unit, refolds, spec, cfg.clip_eps, pi_spec=pi_spec)
            hq_b = fold_quantile_classifier(nf_b.gamma, refolds, mu)
            auto1, auto2 = heuristic_kappas(gam, nf_b.gamma, hq.params["qhat"], hq_b.params["qhat"])
            k1 = auto1 if k1 is None else k1
            k2 = auto2 if k2 is None else k2
        h = modified_quantile_classifier(gam, hq.params["qhat"], k1, k2)

    summary = {
        "schema_version": SCHEMA_VERSION,
        "n": ds.n,
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(cfg).items()},
        "scale": {"y_min": scale.y_min, "y_max": scale.y_max, "degenerate": scale.degenerate},
        "strength": {"mu_hat": mu, "se": strength.se, "in_unit_interval": strength.in_unit_interval},
    }
    errs = error_report(gam, h, level=mu if 0 < mu < 1 else None) if hq is not None else None
    summary["classifier"] = {
        "kind": h.kind,
        "params": h.params,
        "size": h.size,
        "flags": list(h.flags),
        "errors": None if errs is None else asdict(errs),
    }

    bounds = {}
    groups = {"ate": None, "hq": hq, "custom": subgroup}
    for kind in cfg.bounds:
        if kind == "hq" and hq is None:
            continue
        rep = subgroup_bounds(ds_unit, nf, groups[kind], cfg.level, mu_hat=mu if kind == "hq" else None)
        bounds[kind] = rep.to_original(scale).as_dict()
    summary["bounds"] = bounds

    if cfg.sharpness and hq is not None:
        sharp = estimate_sharpness(ds_unit, nf, hq, mu_hat=mu, level=cfg.level).as_dict()
        if cfg.ci == "wald":
            sharp.pop("logit_ci")
        elif cfg.ci == "logit":
            sharp.pop("wald_ci")
        summary["sharpness"] = sharp

    if cfg.late:
        late = estimate_late(ds_unit, nf)
        est = float(scale.effect_to_original(late.estimate))
        se = float(scale.effect_to_original(late.se))
        lo, hi = late.ci(cfg.level)
        summary["late"] = {
            "estimate": est, "se": se,
            "ci": [float(scale.effect_to_original(lo)), float(scale.effect_to_original(hi))],
        }

    units = pd.DataFrame({
        "unit": np.arange(ds.n),
        "fold": folds.b,
        "gamma_hat": gam,
        "h": h.h.astype(int),
        "classifier": h.kind,
    })
    for key, val in h.params.items():
        if np.isscalar(val):
            units[key] = val
    return summary, units
