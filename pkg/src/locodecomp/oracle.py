"""Exhaustive subset search over LOCO values, for validating the greedy engine.

Enumerates every context subset of a driver and reports the extreme values,
which is feasible only for small feature counts but gives ground truth the
greedy search can be compared against.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .dataset import Dataset
from .regress import EvalScheme, LocoEvaluator

# Values within this distance of the optimum count as ties; the smallest,
# lexicographically first subset wins. Matches the tie rule of the synthetic
# population oracle.
TIE_TOLERANCE = 1e-12

MAX_EXHAUSTIVE_FEATURES = 16


@dataclass(frozen=True)
class ExhaustiveResult:
    """Ground-truth extreme LOCO values and the subsets attaining them."""

    driver: int
    loco_min: float
    subset_min: tuple[int, ...]
    loco_max: float
    subset_max: tuple[int, ...]
    n_subsets: int


def subset_loco_values(
    dataset: Dataset,
    driver: int,
    *,
    evaluator: LocoEvaluator | None = None,
    max_features: int = MAX_EXHAUSTIVE_FEATURES,
) -> list[tuple[tuple[int, ...], float]]:
    """LOCO of the driver for every context subset, size then lexicographic."""
    p = dataset.n_features
    if p > max_features:
        raise ValueError(
            f"exhaustive search over {p} features needs 2^{p - 1} subsets;"
            f" limit is {max_features}"
        )
    driver = int(driver)
    if not 0 <= driver < p:
        raise ValueError(f"driver index {driver} out of range")
    ev = evaluator or LocoEvaluator(dataset)
    others = [j for j in range(p) if j != driver]
    out = []
    for k in range(len(others) + 1):
        for combo in combinations(others, k):
            out.append((combo, ev.loco(driver, combo)))
    return out


def exhaustive_minmax(
    dataset: Dataset,
    driver: int,
    *,
    evaluator: LocoEvaluator | None = None,
    scheme: EvalScheme | None = None,
    max_features: int = MAX_EXHAUSTIVE_FEATURES,
    tie_tolerance: float = TIE_TOLERANCE,
) -> ExhaustiveResult:
    """Extreme LOCO values of a driver over all context subsets.

    Near-ties (within tie_tolerance of the optimum) resolve to the first
    subset in size-then-lexicographic order, so degenerate landscapes give
    the smallest possible subset rather than an arbitrary one.
    """
    ev = evaluator or LocoEvaluator(dataset, scheme)
    pairs = subset_loco_values(dataset, driver, evaluator=ev, max_features=max_features)
    values = np.array([v for _, v in pairs])
    vmin = float(values.min())
    vmax = float(values.max())
    idx_min = next(i for i, v in enumerate(values) if v <= vmin + tie_tolerance)
    idx_max = next(i for i, v in enumerate(values) if v >= vmax - tie_tolerance)
    return ExhaustiveResult(
        driver=int(driver),
        loco_min=float(values[idx_min]),
        subset_min=pairs[idx_min][0],
        loco_max=float(values[idx_max]),
        subset_max=pairs[idx_max][0],
        n_subsets=len(pairs),
    )
