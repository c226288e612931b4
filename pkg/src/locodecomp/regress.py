"""Subset least-squares models, prediction error, and LOCO importance.

The core quantity is epsilon(S), the mean squared prediction error of a
no-intercept linear model restricted to feature subset S. Data are
standardized, so the empty model predicts 0 and epsilon(empty) = mean(y^2).
LOCO importance of a driver x given a context subset z is

    loco(x, z) = epsilon(z) - epsilon(z + {x})

which is the drop in error from adding the driver to the context. Rank
deficient designs are handled by the minimum-norm least squares solution, so
duplicated or collinear features never raise.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .dataset import Dataset
from .errors import NumericError

# Relative singular value cutoff for rank decisions in the least squares solve.
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class EvalScheme:
    """How prediction error is estimated.

    "in-sample" fits and scores on the full table. "kfold" fits each fold's
    model on the other folds and scores rows out of fold, removing the
    optimism of in-sample error at the cost of fold noise.
    """

    kind: str = "in-sample"
    k: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("in-sample", "kfold"):
            raise ValueError(f"unknown evaluation scheme '{self.kind}'")
        if self.kind == "kfold" and self.k < 2:
            raise ValueError("k-fold evaluation needs k >= 2")

    @classmethod
    def in_sample(cls) -> "EvalScheme":
        return cls()

    @classmethod
    def kfold(cls, k: int, seed: int = 0) -> "EvalScheme":
        return cls("kfold", k, seed)

    @property
    def is_in_sample(self) -> bool:
        return self.kind == "in-sample"

    def label(self) -> str:
        if self.is_in_sample:
            return "in-sample"
        return f"kfold(k={self.k}, seed={self.seed})"


def normalize_subset(subset, n_features: int, driver: int | None = None) -> tuple[int, ...]:
    """Validate a feature subset and return it as a sorted tuple of ints."""
    cols = tuple(int(i) for i in subset)
    if len(set(cols)) != len(cols):
        raise ValueError(f"subset contains duplicate indices: {cols}")
    for i in cols:
        if not 0 <= i < n_features:
            raise ValueError(f"feature index {i} out of range [0, {n_features})")
    if driver is not None:
        if not 0 <= int(driver) < n_features:
            raise ValueError(f"driver index {driver} out of range [0, {n_features})")
        if int(driver) in cols:
            raise ValueError(f"subset must not contain the driver (index {driver})")
    return tuple(sorted(cols))


def _solve(design: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, int]:
    """Minimum-norm least squares fit; empty designs get an empty coefficient."""
    if design.shape[1] == 0:
        return np.zeros(0), 0
    coef, _, rank, _ = np.linalg.lstsq(design, target, rcond=RANK_RTOL)
    if not np.all(np.isfinite(coef)):
        raise NumericError("least squares produced non-finite coefficients")
    return coef, int(rank)


def _fold_assignment(n_rows: int, k: int, seed: int) -> np.ndarray:
    """Deterministic fold label per row, near-equal fold sizes."""
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    order = rng.permutation(n_rows)
    fold = np.empty(n_rows, dtype=np.intp)
    for f, chunk in enumerate(np.array_split(order, k)):
        fold[chunk] = f
    return fold


@dataclass(frozen=True)
class FittedModel:
    """No-intercept linear model on a fixed column subset."""

    columns: tuple[int, ...]
    coef: np.ndarray
    rank: int
    training_mse: float

    def predict(self, values: np.ndarray) -> np.ndarray:
        if not self.columns:
            return np.zeros(values.shape[0])
        return values[:, self.columns] @ self.coef


@dataclass(frozen=True)
class CrossFitModel:
    """Per-fold linear models; each row is predicted by its out-of-fold model.

    Predictions are only defined for the table the folds were drawn on, so
    ``predict`` requires a matrix with the original number of rows.
    """

    columns: tuple[int, ...]
    fold_coefs: tuple[np.ndarray, ...]
    row_fold: np.ndarray
    rank: int
    training_mse: float

    def predict(self, values: np.ndarray) -> np.ndarray:
        if values.shape[0] != self.row_fold.shape[0]:
            raise ValueError("cross-fit models only predict rows of the fitting table")
        out = np.zeros(values.shape[0])
        if self.columns:
            sub = values[:, self.columns]
            for f, coef in enumerate(self.fold_coefs):
                mask = self.row_fold == f
                out[mask] = sub[mask] @ coef
        return out


def fit(
    dataset: Dataset,
    subset,
    include_driver: bool = False,
    driver: int | None = None,
    scheme: EvalScheme | None = None,
):
    """Fit a linear model of the target on a feature subset.

    Args:
        dataset: standardized data.
        subset: context feature indices (must exclude the driver).
        include_driver: if True, the driver column joins the design.
        driver: driver feature index, required when include_driver is set.
        scheme: evaluation scheme; defaults to in-sample.

    Returns:
        FittedModel for in-sample schemes, CrossFitModel for k-fold.
    """
    scheme = scheme or EvalScheme.in_sample()
    subset = normalize_subset(subset, dataset.n_features, driver)
    if include_driver:
        if driver is None:
            raise ValueError("include_driver requires a driver index")
        columns = tuple(sorted(subset + (int(driver),)))
    else:
        columns = subset
    return _fit_columns(dataset, columns, scheme)


def _fit_columns(dataset: Dataset, columns: tuple[int, ...], scheme: EvalScheme):
    y = dataset.target
    if scheme.is_in_sample:
        design = dataset.values[:, columns]
        coef, rank = _solve(design, y)
        resid = y if not columns else y - design @ coef
        model = FittedModel(columns, coef, rank, float(np.mean(resid**2)))
    else:
        row_fold = _fold_assignment(dataset.n_patterns, scheme.k, scheme.seed)
        sub = dataset.values[:, columns]
        coefs = []
        rank = len(columns)
        pred = np.zeros(dataset.n_patterns)
        for f in range(scheme.k):
            train = row_fold != f
            coef, fold_rank = _solve(sub[train], y[train])
            coefs.append(coef)
            rank = min(rank, fold_rank)
            if columns:
                mask = ~train
                pred[mask] = sub[mask] @ coef
        resid = y - pred
        model = CrossFitModel(columns, tuple(coefs), row_fold, rank, float(np.mean(resid**2)))
    if not np.isfinite(model.training_mse):
        raise NumericError(f"non-finite prediction error for columns {columns}")
    return model


def mse(model, dataset: Dataset, rows=None) -> float:
    """Mean squared prediction error of a fitted model, optionally on a row subset."""
    resid = dataset.target - model.predict(dataset.values)
    if rows is not None:
        rows = np.asarray(rows, dtype=np.intp)
        if rows.size == 0:
            raise ValueError("empty row set")
        resid = resid[rows]
    value = float(np.mean(resid**2))
    if not np.isfinite(value):
        raise NumericError("non-finite prediction error")
    return value


class ModelCache:
    """LRU store of fitted models keyed by design column tuple.

    Thread safe, since decompositions may share one cache across workers.
    """

    def __init__(self, capacity: int | None = None):
        if capacity is not None and capacity < 1:
            raise ValueError("cache capacity must be positive")
        self.capacity = capacity
        self.hits = 0
        self.misses = 0
        self._store: OrderedDict[tuple[int, ...], object] = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._store)

    def get(self, key: tuple[int, ...]):
        with self._lock:
            model = self._store.get(key)
            if model is None:
                self.misses += 1
                return None
            self.hits += 1
            self._store.move_to_end(key)
            return model

    def put(self, key: tuple[int, ...], model) -> None:
        with self._lock:
            self._store[key] = model
            self._store.move_to_end(key)
            if self.capacity is not None and len(self._store) > self.capacity:
                self._store.popitem(last=False)

    def clear(self) -> None:
        with self._lock:
            self._store.clear()
            self.hits = 0
            self.misses = 0


class LocoEvaluator:
    """Computes and caches subset prediction errors for one dataset and scheme.

    Every LOCO-derived quantity in the package (greedy paths, per-pattern
    scores, Shapley effects) goes through one of these, so identical subsets
    are fitted once and all scores are consistent by construction. Cached
    results do not depend on call order; with caching disabled every value is
    recomputed and must match.
    """

    def __init__(
        self,
        dataset: Dataset,
        scheme: EvalScheme | None = None,
        cache: bool = True,
        capacity: int | None = None,
    ):
        self.dataset = dataset
        self.scheme = scheme or EvalScheme.in_sample()
        self._cache = ModelCache(capacity) if cache else None
        if not self.scheme.is_in_sample:
            self._row_fold = _fold_assignment(
                dataset.n_patterns, self.scheme.k, self.scheme.seed
            )
        else:
            self._row_fold = None

    @property
    def cache(self) -> ModelCache | None:
        return self._cache

    def model(self, columns: Iterable[int]):
        cols = normalize_subset(columns, self.dataset.n_features)
        if self._cache is not None:
            cached = self._cache.get(cols)
            if cached is not None:
                return cached
        model = _fit_columns(self.dataset, cols, self.scheme)
        if self._cache is not None:
            self._cache.put(cols, model)
        return model

    def error(self, columns: Iterable[int]) -> float:
        """epsilon(columns): mean squared error of the subset model."""
        return self.model(columns).training_mse

    def squared_residuals(self, columns: Iterable[int]) -> np.ndarray:
        """Per-row squared prediction errors of the subset model."""
        model = self.model(columns)
        resid = self.dataset.target - model.predict(self.dataset.values)
        return resid**2

    def design_error(self, design: np.ndarray) -> float:
        """Prediction error for an explicit design matrix, bypassing the cache.

        Used by surrogate tests, where one column is a permuted copy that
        must not pollute the cache.
        """
        y = self.dataset.target
        if self.scheme.is_in_sample:
            coef, _ = _solve(design, y)
            resid = y if design.shape[1] == 0 else y - design @ coef
            value = float(np.mean(resid**2))
        else:
            pred = np.zeros(design.shape[0])
            for f in range(self.scheme.k):
                train = self._row_fold != f
                coef, _ = _solve(design[train], y[train])
                if design.shape[1]:
                    mask = ~train
                    pred[mask] = design[mask] @ coef
            value = float(np.mean((y - pred) ** 2))
        if not np.isfinite(value):
            raise NumericError("non-finite prediction error for explicit design")
        return value

    def loco(self, driver: int, subset) -> float:
        """Error drop from adding the driver to the context subset."""
        subset = normalize_subset(subset, self.dataset.n_features, driver)
        with_driver = tuple(sorted(subset + (int(driver),)))
        return self.error(subset) - self.error(with_driver)

    def pairwise_power(self, driver: int) -> float:
        """LOCO against the empty context: variance explained by the driver alone."""
        return self.loco(driver, ())


def loco(
    dataset: Dataset,
    driver: int,
    subset,
    scheme: EvalScheme | None = None,
    evaluator: LocoEvaluator | None = None,
) -> float:
    """One-shot LOCO importance; see LocoEvaluator.loco for the cached form."""
    ev = evaluator or LocoEvaluator(dataset, scheme)
    return ev.loco(driver, subset)


def pairwise_power(
    dataset: Dataset,
    driver: int,
    scheme: EvalScheme | None = None,
    evaluator: LocoEvaluator | None = None,
) -> float:
    """LOCO of the driver against the empty subset."""
    return loco(dataset, driver, (), scheme, evaluator)
