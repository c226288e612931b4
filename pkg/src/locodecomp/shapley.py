"""Shapley effects over LOCO values: exact enumeration and Monte Carlo.

The Shapley effect of a driver x among p features is the weighted average of
its LOCO value over all context subsets z drawn from the other n = p - 1
features:

    shapley(x) = sum over z of  |z|! (n - |z|)! / (n + 1)!  * loco(x, z)

This equals the classical Shapley value of the explained-variance game
v(S) = epsilon(empty) - epsilon(S), so the effects inherit its efficiency
property: they sum to the variance explained by the full model. The Monte
Carlo estimator averages marginal contributions along random feature
orderings; one pass over an ordering yields one marginal for every driver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from .dataset import Dataset
from .errors import NumericError
from .regress import LocoEvaluator

# Exact enumeration visits 2^(p-1) subsets per driver; beyond this it is
# cheaper and saner to sample.
MAX_EXACT_FEATURES = 20


@dataclass(frozen=True)
class ShapleyEstimate:
    """Shapley effect of one driver, exact or sampled."""

    driver: int
    value: float
    method: str
    n_permutations: int | None = None
    standard_error: float | None = None

    def __post_init__(self):
        if self.method not in ("exact", "monte-carlo"):
            raise ValueError(f"unknown method '{self.method}'")
        if self.method == "exact" and self.standard_error is not None:
            raise ValueError("exact estimates carry no standard error")


def subset_weights(n_context: int) -> list[float]:
    """Shapley weight per context size k for n_context other features.

    Computed in exact rational arithmetic and verified to sum to 1 over all
    subsets before converting to float.
    """
    if n_context < 0:
        raise ValueError("n_context must be nonnegative")
    f = math.factorial
    weights = [
        Fraction(f(k) * f(n_context - k), f(n_context + 1)) for k in range(n_context + 1)
    ]
    total = sum(math.comb(n_context, k) * w for k, w in enumerate(weights))
    if total != 1:
        raise NumericError(f"Shapley weights sum to {total}, expected 1")
    return [float(w) for w in weights]


def _check_enumerable(n_features: int, max_features: int) -> None:
    if n_features > max_features:
        raise ValueError(
            f"exact enumeration over {n_features} features needs"
            f" 2^{n_features - 1} subsets per driver; limit is {max_features}"
            " (use the Monte Carlo estimator)"
        )


def exact_shapley(
    dataset: Dataset,
    driver: int,
    *,
    evaluator: LocoEvaluator | None = None,
    max_features: int = MAX_EXACT_FEATURES,
) -> ShapleyEstimate:
    """Exact Shapley effect of one driver by full subset enumeration."""
    _check_enumerable(dataset.n_features, max_features)
    ev = evaluator or LocoEvaluator(dataset)
    driver = int(driver)
    if not 0 <= driver < dataset.n_features:
        raise ValueError(f"driver index {driver} out of range")
    others = [j for j in range(dataset.n_features) if j != driver]
    weights = subset_weights(len(others))
    total = 0.0
    for k in range(len(others) + 1):
        w = weights[k]
        for combo in combinations(others, k):
            with_driver = tuple(sorted(combo + (driver,)))
            total += w * (ev.error(combo) - ev.error(with_driver))
    return ShapleyEstimate(driver=driver, value=total, method="exact")


def exact_shapley_all(
    dataset: Dataset,
    *,
    evaluator: LocoEvaluator | None = None,
    max_features: int = MAX_EXACT_FEATURES,
) -> list[ShapleyEstimate]:
    """Exact Shapley effects for every driver, sharing one evaluator cache."""
    ev = evaluator or LocoEvaluator(dataset)
    return [
        exact_shapley(dataset, d, evaluator=ev, max_features=max_features)
        for d in range(dataset.n_features)
    ]


def _draw_permutations(n_features: int, n_permutations: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    return np.array([rng.permutation(n_features) for _ in range(n_permutations)])


def _mc_marginals(
    dataset: Dataset, n_permutations: int, seed: int, ev: LocoEvaluator
) -> np.ndarray:
    """(n_permutations, p) marginal contributions along sampled orderings."""
    if n_permutations < 100:
        raise ValueError("n_permutations must be at least 100")
    p = dataset.n_features
    perms = _draw_permutations(p, n_permutations, seed)
    marginals = np.empty((n_permutations, p))
    for t, perm in enumerate(perms):
        prefix: list[int] = []
        err_prev = ev.error(())
        for j in perm:
            prefix.append(int(j))
            err_next = ev.error(tuple(sorted(prefix)))
            marginals[t, j] = err_prev - err_next
            err_prev = err_next
    return marginals


def mc_shapley_all(
    dataset: Dataset,
    n_permutations: int = 2000,
    seed: int = 0,
    *,
    evaluator: LocoEvaluator | None = None,
) -> list[ShapleyEstimate]:
    """Monte Carlo Shapley effects for every driver.

    Samples whole feature orderings, so each permutation contributes one
    marginal per driver and the estimates share subset evaluations. The
    standard error is the sample standard deviation of the marginals over
    permutations divided by sqrt(n_permutations).
    """
    ev = evaluator or LocoEvaluator(dataset)
    marginals = _mc_marginals(dataset, n_permutations, seed, ev)
    out = []
    for d in range(dataset.n_features):
        col = marginals[:, d]
        se = float(np.std(col, ddof=1) / math.sqrt(n_permutations))
        out.append(
            ShapleyEstimate(
                driver=d,
                value=float(np.mean(col)),
                method="monte-carlo",
                n_permutations=n_permutations,
                standard_error=se,
            )
        )
    return out


def mc_shapley(
    dataset: Dataset,
    driver: int,
    n_permutations: int = 2000,
    seed: int = 0,
    *,
    evaluator: LocoEvaluator | None = None,
) -> ShapleyEstimate:
    """Monte Carlo Shapley effect of one driver.

    Permutation sampling prices all drivers at once, so this simply indexes
    the all-driver estimate; ask for all drivers when you need them.
    """
    driver = int(driver)
    if not 0 <= driver < dataset.n_features:
        raise ValueError(f"driver index {driver} out of range")
    return mc_shapley_all(dataset, n_permutations, seed, evaluator=evaluator)[driver]


def exact_local_shapley_matrix(
    dataset: Dataset,
    *,
    evaluator: LocoEvaluator | None = None,
    max_features: int = MAX_EXACT_FEATURES,
) -> np.ndarray:
    """N x p matrix of exact per-pattern Shapley effects.

    Row i decomposes like the global effect but with squared residuals of
    pattern i in place of their mean, so column means equal the global exact
    values under in-sample evaluation.
    """
    _check_enumerable(dataset.n_features, max_features)
    ev = evaluator or LocoEvaluator(dataset)
    p = dataset.n_features
    weights = subset_weights(p - 1)
    acc = np.zeros((dataset.n_patterns, p))
    for k in range(p + 1):
        for combo in combinations(range(p), k):
            sq = ev.squared_residuals(combo)
            members = set(combo)
            for d in range(p):
                if d in members:
                    acc[:, d] -= weights[k - 1] * sq
                else:
                    acc[:, d] += weights[k] * sq
    return acc


def mc_local_shapley_matrix(
    dataset: Dataset,
    n_permutations: int = 2000,
    seed: int = 0,
    *,
    evaluator: LocoEvaluator | None = None,
) -> np.ndarray:
    """N x p Monte Carlo per-pattern Shapley effects.

    Uses the same permutation stream as mc_shapley_all for the same seed, so
    column means match the global sampled estimates to float precision.
    """
    if n_permutations < 100:
        raise ValueError("n_permutations must be at least 100")
    ev = evaluator or LocoEvaluator(dataset)
    p = dataset.n_features
    perms = _draw_permutations(p, n_permutations, seed)
    acc = np.zeros((dataset.n_patterns, p))
    for perm in perms:
        prefix: list[int] = []
        sq_prev = ev.squared_residuals(())
        for j in perm:
            prefix.append(int(j))
            sq_next = ev.squared_residuals(tuple(sorted(prefix)))
            acc[:, j] += sq_prev - sq_next
            sq_prev = sq_next
    acc /= n_permutations
    return acc


def _exact_local_column(dataset: Dataset, driver: int, ev: LocoEvaluator) -> np.ndarray:
    others = [j for j in range(dataset.n_features) if j != driver]
    weights = subset_weights(len(others))
    acc = np.zeros(dataset.n_patterns)
    for k in range(len(others) + 1):
        w = weights[k]
        for combo in combinations(others, k):
            with_driver = tuple(sorted(combo + (driver,)))
            acc += w * (ev.squared_residuals(combo) - ev.squared_residuals(with_driver))
    return acc


def local_shapley(
    dataset: Dataset,
    driver: int,
    index: int,
    method: str = "exact",
    n_permutations: int = 2000,
    seed: int = 0,
    *,
    evaluator: LocoEvaluator | None = None,
) -> float:
    """Per-pattern Shapley effect of one driver at one pattern."""
    driver = int(driver)
    if not 0 <= driver < dataset.n_features:
        raise ValueError(f"driver index {driver} out of range")
    if not 0 <= index < dataset.n_patterns:
        raise IndexError(f"pattern index {index} out of range [0, {dataset.n_patterns})")
    ev = evaluator or LocoEvaluator(dataset)
    if method == "exact":
        _check_enumerable(dataset.n_features, MAX_EXACT_FEATURES)
        return float(_exact_local_column(dataset, driver, ev)[index])
    if method == "monte-carlo":
        matrix = mc_local_shapley_matrix(
            dataset, n_permutations, seed, evaluator=ev
        )
        return float(matrix[index, driver])
    raise ValueError(f"unknown method '{method}'")
