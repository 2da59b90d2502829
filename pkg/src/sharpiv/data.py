"""Observational IV datasets: loading, validation, outcome rescaling, fold splits."""
from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .errors import DegeneracyWarning, ValidationError


def _as_binary(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional")
    if not np.all(np.isin(arr, (0.0, 1.0))):
        raise ValidationError(f"non-binary {name}")
    return arr.astype(np.int8)


@dataclass(frozen=True)
class IVDataset:
    """Sample of ``(X, Z, A, Y)`` with optional latent complier labels.

    Arrays are copied and marked read-only on construction so a dataset can be
    shared between workers.
    """

    x: np.ndarray
    z: np.ndarray
    a: np.ndarray
    y: np.ndarray
    latent_c: Optional[np.ndarray] = None
    x_names: tuple = ()

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2:
            raise ValidationError("covariates must be an n x p matrix")
        n = x.shape[0]
        if n < 1:
            raise ValidationError("dataset must contain at least one unit")
        # "instrument"/"treatment" appear in the error text users see
        z = _as_binary(self.z, "instrument")
        a = _as_binary(self.a, "treatment")
        y = np.array(self.y, dtype=float)
        if len(z) != n or len(a) != n or y.shape != (n,):
            raise ValidationError("x, z, a, y must all have n rows")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValidationError("missing or non-finite values are not allowed")
        c = self.latent_c
        if c is not None:
            c = _as_binary(c, "latent complier label")
            if len(c) != n:
                raise ValidationError("latent_c must have n entries")
            c.setflags(write=False)
        names = tuple(self.x_names) or tuple(f"x{j + 1}" for j in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise ValidationError("x_names must match the number of covariates")
        for arr in (x, z, a, y):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "latent_c", c)
        object.__setattr__(self, "x_names", names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def with_y(self, y) -> "IVDataset":
        return IVDataset(self.x, self.z, self.a, y, self.latent_c, self.x_names)


@dataclass(frozen=True)
class ScaleInfo:
    """Affine map between the original outcome scale and [0, 1]."""

    y_min: float = 0.0
    y_max: float = 1.0
    degenerate: bool = False

    @property
    def span(self) -> float:
        return self.y_max - self.y_min

    def to_unit(self, y):
        if self.degenerate:
            return np.zeros_like(np.asarray(y, dtype=float))
        return (np.asarray(y, dtype=float) - self.y_min) / self.span

    def to_original(self, y_unit):
        return np.asarray(y_unit, dtype=float) * self.span + self.y_min

    def effect_to_original(self, effect):
        """Map a difference of outcome means (an effect or bound) back to original units."""
        if self.degenerate:
            return 0.0 * np.asarray(effect, dtype=float)
        return np.asarray(effect, dtype=float) * self.span


def rescale_outcome(ds: IVDataset) -> tuple[IVDataset, ScaleInfo]:
    """Rescale ``y`` into [0, 1].

    Outcomes already inside [0, 1] are left untouched (identity ScaleInfo).
    A constant outcome outside [0, 1] cannot be rescaled; it is mapped to zeros
    and the returned ScaleInfo is flagged degenerate.
    """
    y = ds.y
    lo, hi = float(np.min(y)), float(np.max(y))
    if lo >= 0.0 and hi <= 1.0:
        return ds, ScaleInfo(0.0, 1.0)
    if hi == lo:
        warnings.warn("constant outcome; rescaled outcome set to 0", DegeneracyWarning)
        info = ScaleInfo(lo, hi, degenerate=True)
        return ds.with_y(np.zeros(ds.n)), info
    info = ScaleInfo(lo, hi)
    y_unit = np.clip(info.to_unit(y), 0.0, 1.0)
    return ds.with_y(y_unit), info


@dataclass(frozen=True)
class FoldAssignment:
    """Fold ids ``b`` in 1..k for each unit."""

    b: np.ndarray
    k: int
    seed: int
    attempts: int = field(default=1, compare=False)

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.int64)
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return len(self.b)

    def masks(self):
        """Yield ``(fold_id, in_fold_mask)`` for each fold."""
        for fold in range(1, self.k + 1):
            yield fold, self.b == fold


def assign_folds(n: int, k: int = 2, seed: int = 0) -> FoldAssignment:
    """Draw each fold id uniformly from {1..k}; re-draw with seed+1 until no fold is empty."""
    if k < 2 or k > n:
        raise ValidationError(f"fold count must satisfy 2 <= k <= n (got k={k}, n={n})")
    attempt_seed = seed
    attempts = 0
    while True:
        attempts += 1
        b = np.random.default_rng(attempt_seed).integers(1, k + 1, size=n)
        if len(np.unique(b)) == k:
            return FoldAssignment(b, k, seed, attempts)
        attempt_seed += 1


def load_csv(
    path,
    y_col: str = "y",
    a_col: str = "a",
    z_col: str = "z",
    x_cols: Optional[Sequence[str]] = None,
    c_col: Optional[str] = None,
) -> IVDataset:
    """Read an IV dataset from a CSV file with a header row.

    ``x_cols=None`` takes every column not otherwise named as a covariate.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    frame = pd.read_csv(path, float_precision="round_trip")
    named = [y_col, a_col, z_col] + ([c_col] if c_col else [])
    if x_cols is None:
        x_cols = [col for col in frame.columns if col not in named]
    missing = [col for col in list(named) + list(x_cols) if col not in frame.columns]
    if missing:
        raise ValidationError(f"schema mismatch: missing columns {missing}")
    sub = frame[list(named) + list(x_cols)]
    bad = [col for col in sub.columns if not pd.api.types.is_numeric_dtype(sub[col])]
    if bad:
        raise ValidationError(f"non-numeric cell in columns {bad}")
    if sub.isna().any().any():
        raise ValidationError("missing values are not allowed; encode them as columns")
    x = sub[list(x_cols)].to_numpy(dtype=float) if x_cols else np.zeros((len(sub), 0))
    return IVDataset(
        x=x,
        z=sub[z_col].to_numpy(),
        a=sub[a_col].to_numpy(),
        y=sub[y_col].to_numpy(dtype=float),
        latent_c=sub[c_col].to_numpy() if c_col else None,
        x_names=tuple(x_cols),
    )


def save_csv(ds: IVDataset, path, include_latent: bool = True) -> None:
    """Write a dataset so that :func:`load_csv` recovers it bit-exactly."""
    columns = {name: ds.x[:, j] for j, name in enumerate(ds.x_names)}
    columns.update(z=ds.z, a=ds.a, y=ds.y)
    if include_latent and ds.latent_c is not None:
        columns["c"] = ds.latent_c
    frame = pd.DataFrame(columns)
    frame.to_csv(os.fspath(path), index=False, float_format="%.17g")
