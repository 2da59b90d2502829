"""Complier classification, subgroup bounds and instrument sharpness with cross-fitted influence functions."""
from .analysis import AnalysisConfig, run_analysis
from .bounds import (
    BoundsReport,
    bound_length,
    estimate_late,
    imbens_manski_ci,
    subgroup_bounds,
    transform_outcomes,
)
from .classify import (
    ComplierAssignment,
    bayes_classifier,
    bayes_error_bounds,
    classification_error,
    fold_quantile_classifier,
    modified_quantile_classifier,
    quantile_classifier,
    stochastic_classifier,
)
from .data import IVDataset, assign_folds, load_csv, rescale_outcome, save_csv
from .errors import DegeneracyWarning, NumericalError, SharpIVError, ValidationError
from .nuisance import LearnerSpec, NuisanceFit, fit_crossfit, phi_mu, phi_z, train_learner
from .sharpness import (
    SharpnessReport,
    estimate_sharpness,
    estimate_strength,
    sharpness_identities,
    youden_index,
)

__version__ = "0.1.0"
