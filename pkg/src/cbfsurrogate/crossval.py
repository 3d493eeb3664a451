"""Nested k-fold cross-validation with per-outer-fold grid search.

Outer folds produce out-of-fold predictions; for each outer training
set an inner k-fold grid search picks the hyperparameters minimizing
mean validation RMSE. Everything is driven by a single seed through a
counter-based generator (numpy Philox), so results are reproducible
across platforms and independent of task scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from cbfsurrogate.svr import ConvergenceError, SvrHyperParams, predict_svr, train_svr

DEFAULT_C_VALUES = tuple(2.0**k for k in (-3, -1, 1, 3, 5, 7, 9))
DEFAULT_GAMMA_EXPONENTS = (-9, -7, -5, -3, -1, 1)
DEFAULT_EPSILON_VALUES = (0.01, 0.1, 0.3)


@dataclass(frozen=True)
class FoldAssignment:
    fold_of: np.ndarray  # fold id per subject index
    k: int
    seed: int

    def indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def complement(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)


@dataclass(frozen=True)
class HyperGrid:
    c_values: tuple[float, ...]
    gamma_values: tuple[float, ...]
    epsilon_values: tuple[float, ...]

    def __post_init__(self):
        if not (self.c_values and self.gamma_values and self.epsilon_values):
            raise ValueError("grid axes must be non-empty")
        if min(self.c_values) <= 0 or min(self.gamma_values) <= 0:
            raise ValueError("c and gamma values must be positive")
        if min(self.epsilon_values) < 0:
            raise ValueError("epsilon values must be >= 0")

    @classmethod
    def default(cls, n_features: int) -> "HyperGrid":
        if n_features < 1:
            raise ValueError("n_features must be >= 1")
        gammas = tuple(2.0**e / n_features for e in DEFAULT_GAMMA_EXPONENTS)
        return cls(c_values=DEFAULT_C_VALUES, gamma_values=gammas, epsilon_values=DEFAULT_EPSILON_VALUES)

    def combos(self) -> list[SvrHyperParams]:
        """All combinations in tie-break order: c, then gamma ascending, epsilon descending."""
        return [
            SvrHyperParams(c=c, gamma=g, epsilon=e)
            for c in sorted(self.c_values)
            for g in sorted(self.gamma_values)
            for e in sorted(self.epsilon_values, reverse=True)
        ]

    def resolve(self, n_features: int) -> "HyperGrid":
        return self


@dataclass(frozen=True)
class GridSpec:
    """Partial grid override; unset axes fall back to the defaults (the
    default gamma axis scales with 1/n_features)."""

    c_values: tuple[float, ...] | None = None
    gamma_values: tuple[float, ...] | None = None
    epsilon_values: tuple[float, ...] | None = None

    def resolve(self, n_features: int) -> HyperGrid:
        gammas = self.gamma_values or tuple(2.0**e / n_features for e in DEFAULT_GAMMA_EXPONENTS)
        return HyperGrid(
            c_values=self.c_values or DEFAULT_C_VALUES,
            gamma_values=gammas,
            epsilon_values=self.epsilon_values or DEFAULT_EPSILON_VALUES,
        )


@dataclass
class OofPrediction:
    """One out-of-fold prediction per subject plus the per-fold audit trail."""

    actual: np.ndarray
    predicted: np.ndarray
    outer_fold: np.ndarray
    chosen_params: list[SvrHyperParams]  # indexed by outer fold id
    folds: FoldAssignment
    train_indices: list[np.ndarray] = field(repr=False, default_factory=list)
    seed: int = 0


def make_folds(n: int, k: int, seed: int) -> FoldAssignment:
    """Seeded shuffle of 0..n-1 dealt round-robin into k folds."""
    if k < 2:
        raise ValueError(f"need k >= 2, got {k}")
    if k > n:
        raise ValueError(f"k ({k}) exceeds n ({n})")
    rng = np.random.Generator(np.random.Philox(seed))
    order = rng.permutation(n)
    fold_of = np.empty(n, dtype=np.int64)
    fold_of[order] = np.arange(n) % k
    return FoldAssignment(fold_of=fold_of, k=k, seed=seed)


def _inner_seed(seed: int, outer_fold: int) -> int:
    # pure function of (seed, fold) so parallel schedules cannot interact
    return (seed + 1) * 1_000_003 + outer_fold


def _cv_rmse(features, targets, params, folds, tol, max_passes) -> float:
    fold_rmse = []
    for f in range(folds.k):
        tr = folds.complement(f)
        va = folds.indices(f)
        model = train_svr(features[tr], targets[tr], params, tol=tol, max_passes=max_passes)
        pred = predict_svr(model, features[va])
        fold_rmse.append(math.sqrt(float(np.mean((targets[va] - pred) ** 2))))
    return float(np.mean(fold_rmse))


def grid_search(
    features,
    targets,
    grid: HyperGrid,
    k_inner: int,
    seed: int,
    tol: float = 1e-3,
    max_passes: int = 10_000,
) -> SvrHyperParams:
    """Pick the combo minimizing mean inner-fold validation RMSE.

    Ties keep the earlier combo in (smaller c, smaller gamma, larger
    epsilon) order. Non-converging combos are skipped; if every combo
    fails the last error propagates.
    """
    features = np.asarray(features, dtype=float)
    targets = np.asarray(targets, dtype=float)
    n = targets.size
    if n < k_inner:
        raise ValueError(f"need at least k_inner={k_inner} samples, got {n}")
    folds = make_folds(n, k_inner, seed)
    best: SvrHyperParams | None = None
    best_rmse = math.inf
    last_error: ConvergenceError | None = None
    for params in grid.combos():
        try:
            rmse = _cv_rmse(features, targets, params, folds, tol, max_passes)
        except ConvergenceError as err:
            last_error = err
            continue
        if rmse < best_rmse:
            best_rmse = rmse
            best = params
    if best is None:
        raise ConvergenceError(f"every grid combination failed to converge; last error: {last_error}")
    return best


def nested_cv_predict(
    features,
    targets,
    grid: HyperGrid,
    k_outer: int = 10,
    k_inner: int = 10,
    seed: int = 0,
    tol: float = 1e-3,
    max_passes: int = 10_000,
) -> OofPrediction:
    """Out-of-fold predictions: per outer fold, tune on the complement via
    inner-fold grid search, train there, and predict the held-out fold."""
    features = np.asarray(features, dtype=float)
    if features.ndim == 1:
        features = features.reshape(-1, 1)
    targets = np.asarray(targets, dtype=float)
    n = targets.size
    if n < k_outer:
        raise ValueError(f"k_outer ({k_outer}) exceeds n ({n})")
    max_fold = -(-n // k_outer)
    if k_inner > n - max_fold:
        raise ValueError(f"k_inner ({k_inner}) exceeds smallest outer-training size ({n - max_fold})")
    folds = make_folds(n, k_outer, seed)
    predicted = np.full(n, np.nan)
    chosen: list[SvrHyperParams] = []
    train_sets: list[np.ndarray] = []
    for f in range(k_outer):
        tr = folds.complement(f)
        te = folds.indices(f)
        params = grid_search(features[tr], targets[tr], grid, k_inner, _inner_seed(seed, f), tol, max_passes)
        model = train_svr(features[tr], targets[tr], params, tol=tol, max_passes=max_passes)
        predicted[te] = predict_svr(model, features[te])
        chosen.append(params)
        train_sets.append(tr)
    return OofPrediction(
        actual=targets.copy(),
        predicted=predicted,
        outer_fold=folds.fold_of.copy(),
        chosen_params=chosen,
        folds=folds,
        train_indices=train_sets,
        seed=seed,
    )
