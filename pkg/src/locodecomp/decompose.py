"""Unique / redundant / synergistic decomposition of LOCO importance.

For each driver feature x the engine searches over context subsets z for the
subsets that minimize and maximize loco(x, z). Writing L0 for the empty
context value, Lmin and Lmax for the optima found, the decomposition is

    unique    U = Lmin          importance no context can explain away
    redundant R = L0 - Lmin     pairwise importance shared with other features
    synergy   S = Lmax - L0     importance that only appears in context

so U + R + S = Lmax by construction. The search is greedy: grow the subset
one feature at a time, always taking the candidate with the best LOCO value
in the search direction, and stop when the best candidate fails a surrogate
significance test. The surrogate null row-permutes only the candidate column,
which destroys its relation to everything else while keeping its marginal
distribution, so chance-level improvements are filtered out.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import NumericError
from .regress import EvalScheme, LocoEvaluator, normalize_subset

# Search directions and their codes used in per-step RNG streams.
_DIRECTIONS = {"min": 0, "max": 1}


@dataclass(frozen=True)
class SurrogateConfig:
    """Settings for the permutation stopping test."""

    n_surrogates: int = 100
    alpha: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.n_surrogates < 20:
            raise ValueError("n_surrogates must be at least 20")
        if not 0.0 < self.alpha < 0.5:
            raise ValueError("alpha must lie in (0, 0.5)")


@dataclass(frozen=True)
class GreedyStep:
    """One accepted expansion of the context subset."""

    feature: int
    loco_after: float
    delta: float
    p_value: float


@dataclass(frozen=True)
class GreedyPath:
    """A full greedy trajectory for one driver and direction."""

    direction: str
    steps: tuple[GreedyStep, ...]
    subset: tuple[int, ...]
    loco_start: float
    loco_final: float

    def __post_init__(self):
        if self.direction not in _DIRECTIONS:
            raise ValueError(f"unknown direction '{self.direction}'")
        if len(self.steps) != len(self.subset):
            raise ValueError("path steps and final subset disagree")


@dataclass(frozen=True)
class FeatureDecomposition:
    """Global scores for one driver plus the paths that produced them."""

    driver: int
    loco_empty: float
    loco_min: float
    loco_max: float
    unique: float
    redundant: float
    synergy: float
    path_min: GreedyPath
    path_max: GreedyPath

    def __post_init__(self):
        if self.redundant < 0.0 or self.synergy < 0.0:
            raise NumericError(
                f"driver {self.driver}: negative redundancy or synergy"
                f" (R={self.redundant}, S={self.synergy})"
            )
        gap = abs(self.loco_max - (self.unique + self.redundant + self.synergy))
        if gap > 1e-10:
            raise NumericError(
                f"driver {self.driver}: U + R + S misses the max LOCO by {gap}"
            )


def _step_rng(config: SurrogateConfig, driver: int, direction: str, step: int):
    """Independent, scheduling-invariant RNG stream for one search step."""
    seq = np.random.SeedSequence([config.seed, driver, _DIRECTIONS[direction], step])
    return np.random.default_rng(seq)


def surrogate_test(
    dataset: Dataset,
    driver: int,
    current_subset,
    candidate: int,
    direction: str,
    config: SurrogateConfig | None = None,
    *,
    evaluator: LocoEvaluator | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """P-value of the improvement from adding one candidate to the context.

    The observed improvement is the signed change in loco(driver, .) when the
    candidate joins the subset (positive is better in the given direction).
    Null improvements are produced by refitting with the candidate column row
    permuted; the one-sided p-value is (r + 1) / (n + 1) where r counts null
    improvements at least as large as the observed one.
    """
    config = config or SurrogateConfig()
    if direction not in _DIRECTIONS:
        raise ValueError(f"unknown direction '{direction}'")
    ev = evaluator or LocoEvaluator(dataset)
    subset = normalize_subset(current_subset, dataset.n_features, driver)
    candidate = int(candidate)
    if candidate == int(driver) or candidate in subset:
        raise ValueError("candidate must be outside the driver and current subset")
    if not 0 <= candidate < dataset.n_features:
        raise ValueError(f"candidate index {candidate} out of range")
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence([config.seed]))

    sign = 1.0 if direction == "max" else -1.0
    loco_current = ev.loco(driver, subset)
    loco_candidate = ev.loco(driver, subset + (candidate,))
    observed = sign * (loco_candidate - loco_current)

    # Permutations are drawn up front so the p-value depends only on the rng
    # state handed in, not on evaluation order.
    n = dataset.n_patterns
    perms = [rng.permutation(n) for _ in range(config.n_surrogates)]

    base = dataset.values[:, subset]
    cand_col = dataset.values[:, candidate]
    driver_col = dataset.values[:, int(driver)]
    design = np.empty((n, len(subset) + 2))
    design[:, : len(subset)] = base
    design[:, -1] = driver_col

    exceed = 0
    for perm in perms:
        design[:, len(subset)] = cand_col[perm]
        err_without = ev.design_error(design[:, :-1])
        err_with = ev.design_error(design)
        null_improvement = sign * ((err_without - err_with) - loco_current)
        if null_improvement >= observed:
            exceed += 1
    return (exceed + 1) / (config.n_surrogates + 1)


def greedy_search(
    dataset: Dataset,
    driver: int,
    direction: str,
    config: SurrogateConfig | None = None,
    *,
    evaluator: LocoEvaluator | None = None,
) -> GreedyPath:
    """Grow a context subset greedily toward extreme LOCO for one driver.

    Each step scores every remaining candidate, takes the best in the search
    direction (ties go to the lowest feature index), and accepts it only if
    it strictly improves on the current value and passes the surrogate test.
    The first rejection ends the path. Steps use pre-seeded RNG streams keyed
    by (seed, driver, direction, step), so results do not depend on worker
    scheduling.
    """
    config = config or SurrogateConfig()
    if direction not in _DIRECTIONS:
        raise ValueError(f"unknown direction '{direction}'")
    ev = evaluator or LocoEvaluator(dataset)
    driver = int(driver)
    if not 0 <= driver < dataset.n_features:
        raise ValueError(f"driver index {driver} out of range")

    sign = 1.0 if direction == "max" else -1.0
    loco_start = ev.pairwise_power(driver)
    current: list[int] = []
    remaining = [j for j in range(dataset.n_features) if j != driver]
    steps: list[GreedyStep] = []
    loco_current = loco_start

    for step_index in range(len(remaining)):
        best = None
        best_value = 0.0
        for cand in remaining:
            value = ev.loco(driver, tuple(sorted(current + [cand])))
            if best is None or sign * value > sign * best_value:
                best, best_value = cand, value
        if best is None or sign * (best_value - loco_current) <= 0.0:
            break
        p_value = surrogate_test(
            dataset,
            driver,
            tuple(current),
            best,
            direction,
            config,
            evaluator=ev,
            rng=_step_rng(config, driver, direction, step_index),
        )
        if p_value > config.alpha:
            break
        steps.append(GreedyStep(best, best_value, best_value - loco_current, p_value))
        current.append(best)
        remaining.remove(best)
        loco_current = best_value

    return GreedyPath(
        direction=direction,
        steps=tuple(steps),
        subset=tuple(sorted(current)),
        loco_start=loco_start,
        loco_final=loco_current,
    )


def decompose_feature(
    dataset: Dataset,
    driver: int,
    config: SurrogateConfig | None = None,
    *,
    evaluator: LocoEvaluator | None = None,
) -> FeatureDecomposition:
    """Run both greedy searches for one driver and assemble its scores."""
    config = config or SurrogateConfig()
    ev = evaluator or LocoEvaluator(dataset)
    path_min = greedy_search(dataset, driver, "min", config, evaluator=ev)
    path_max = greedy_search(dataset, driver, "max", config, evaluator=ev)
    loco_empty = path_min.loco_start
    unique = path_min.loco_final
    return FeatureDecomposition(
        driver=int(driver),
        loco_empty=loco_empty,
        loco_min=path_min.loco_final,
        loco_max=path_max.loco_final,
        unique=unique,
        redundant=loco_empty - unique,
        synergy=path_max.loco_final - loco_empty,
        path_min=path_min,
        path_max=path_max,
    )


def decompose_all(
    dataset: Dataset,
    config: SurrogateConfig | None = None,
    *,
    workers: int = 1,
    evaluator: LocoEvaluator | None = None,
    scheme: EvalScheme | None = None,
) -> list[FeatureDecomposition]:
    """Decompose every feature, optionally fanning drivers out over threads.

    Thread workers share the evaluator cache; per-step RNG streams make the
    result identical for any worker count.
    """
    config = config or SurrogateConfig()
    ev = evaluator or LocoEvaluator(dataset, scheme)
    drivers = range(dataset.n_features)
    if workers <= 1:
        return [decompose_feature(dataset, d, config, evaluator=ev) for d in drivers]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(decompose_feature, dataset, d, config, evaluator=ev)
            for d in drivers
        ]
        return [f.result() for f in futures]
