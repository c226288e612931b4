"""Per-pattern score decomposition and threshold analysis.

The global LOCO value is a mean over rows of squared-error differences, so it
splits naturally into one contribution per pattern:

    loco_i(x, z) = (y_i - f_z(i))^2 - (y_i - f_xz(i))^2

where f_z is the model without the driver and f_xz the model with it. Row
scores can be negative even when the global score is positive; a driver may
hurt individual predictions while helping on average. Evaluating loco_i at
the subsets found by the global search gives per-pattern unique, redundant
and synergy scores whose column means recover the global values exactly
under in-sample evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .decompose import FeatureDecomposition
from .errors import DataError
from .regress import LocoEvaluator, normalize_subset

TERTILE_NAMES = ("Low", "Medium", "High")


@dataclass(frozen=True)
class LocalScoreMatrix:
    """N x p matrix of one score kind, columns aligned with feature order."""

    kind: str
    values: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != len(self.feature_names):
            raise ValueError("score matrix shape does not match feature names")

    def column(self, feature: int) -> np.ndarray:
        return self.values[:, feature]


def local_loco_values(
    dataset: Dataset,
    driver: int,
    subset,
    *,
    evaluator: LocoEvaluator | None = None,
) -> np.ndarray:
    """Per-row LOCO contributions of a driver given a context subset.

    The mean of the returned vector equals the global loco(driver, subset)
    under in-sample evaluation.
    """
    ev = evaluator or LocoEvaluator(dataset)
    subset = normalize_subset(subset, dataset.n_features, driver)
    without = ev.squared_residuals(subset)
    with_driver = ev.squared_residuals(tuple(sorted(subset + (int(driver),))))
    return without - with_driver


def local_loco(
    dataset: Dataset,
    driver: int,
    subset,
    index: int,
    *,
    evaluator: LocoEvaluator | None = None,
) -> float:
    """LOCO contribution of one pattern; see local_loco_values for the vector."""
    values = local_loco_values(dataset, driver, subset, evaluator=evaluator)
    if not 0 <= index < dataset.n_patterns:
        raise IndexError(f"pattern index {index} out of range [0, {dataset.n_patterns})")
    return float(values[index])


def local_score_vectors(
    dataset: Dataset,
    decomposition: FeatureDecomposition,
    *,
    evaluator: LocoEvaluator | None = None,
) -> dict[str, np.ndarray]:
    """Per-pattern scores for one driver at the subsets its global search chose.

    Returns vectors keyed "loco" (at the synergy subset), "unique",
    "redundant" and "synergy". Row sums satisfy unique + redundant + synergy
    = loco exactly, mirroring the global identity.
    """
    ev = evaluator or LocoEvaluator(dataset)
    driver = decomposition.driver
    empty_vec = local_loco_values(dataset, driver, (), evaluator=ev)
    unique_vec = local_loco_values(dataset, driver, decomposition.path_min.subset, evaluator=ev)
    max_vec = local_loco_values(dataset, driver, decomposition.path_max.subset, evaluator=ev)
    return {
        "loco": max_vec,
        "unique": unique_vec,
        "redundant": empty_vec - unique_vec,
        "synergy": max_vec - empty_vec,
    }


def local_scores(
    dataset: Dataset,
    decomposition: FeatureDecomposition,
    index: int,
    *,
    evaluator: LocoEvaluator | None = None,
) -> tuple[float, float, float]:
    """(unique, redundant, synergy) for one pattern and one driver."""
    if not 0 <= index < dataset.n_patterns:
        raise IndexError(f"pattern index {index} out of range [0, {dataset.n_patterns})")
    vecs = local_score_vectors(dataset, decomposition, evaluator=evaluator)
    return (
        float(vecs["unique"][index]),
        float(vecs["redundant"][index]),
        float(vecs["synergy"][index]),
    )


def local_score_matrices(
    dataset: Dataset,
    decompositions,
    *,
    evaluator: LocoEvaluator | None = None,
) -> dict[str, LocalScoreMatrix]:
    """Stack per-driver score vectors into N x p matrices for all score kinds."""
    ev = evaluator or LocoEvaluator(dataset)
    kinds = ("loco", "unique", "redundant", "synergy")
    columns = {kind: [] for kind in kinds}
    for dec in decompositions:
        vecs = local_score_vectors(dataset, dec, evaluator=ev)
        for kind in kinds:
            columns[kind].append(vecs[kind])
    return {
        kind: LocalScoreMatrix(kind, np.column_stack(columns[kind]), dataset.feature_names)
        for kind in kinds
    }


def tertile_classes(values: np.ndarray) -> np.ndarray:
    """Split rows into balanced Low / Medium / High thirds by value rank.

    Ties are broken by row order (stable sort), so group sizes differ by at
    most one even for heavily tied targets.
    """
    values = np.asarray(values)
    order = np.argsort(values, kind="stable")
    labels = np.empty(values.shape[0], dtype=object)
    for name, chunk in zip(TERTILE_NAMES, np.array_split(order, 3)):
        labels[chunk] = name
    return labels


def class_conditional_means(
    values: np.ndarray, class_labels: np.ndarray, retained=None
) -> dict[str, float]:
    """Mean of a value vector within each class, optionally on retained rows only."""
    values = np.asarray(values, dtype=float)
    labels = np.asarray(class_labels, dtype=object)
    if retained is not None:
        retained = np.asarray(retained, dtype=np.intp)
        values = values[retained]
        labels = labels[retained]
    out: dict[str, float] = {}
    for name in dict.fromkeys(labels.tolist()):
        mask = labels == name
        out[str(name)] = float(np.mean(values[mask]))
    return out


@dataclass(frozen=True)
class ThresholdPoint:
    """One point of the retention sweep."""

    discard_percent: float
    retained_n: int
    u_threshold: float
    pearson_r: float
    retained: np.ndarray
    class_counts: dict[str, np.ndarray]


@dataclass(frozen=True)
class ThresholdAnalysis:
    """Retention sweep for one driver: keep only high unique-score patterns."""

    driver: int
    bin_edges: np.ndarray
    class_names: tuple[str, ...]
    points: tuple[ThresholdPoint, ...]


def u_threshold_analysis(
    dataset: Dataset,
    driver: int,
    u_values: np.ndarray,
    *,
    discard_percents=None,
    keep_fractions=None,
    class_labels=None,
    bins: int = 30,
) -> ThresholdAnalysis:
    """Sweep a retention threshold over per-pattern unique scores.

    For each sweep point the patterns with the highest unique scores are
    retained and two summaries are computed on the retained set: the Pearson
    correlation between the driver and the target, and class-conditional
    histograms of the driver values. Classes default to target tertiles.

    Args:
        dataset: standardized data.
        driver: feature index whose unique scores are swept.
        u_values: per-pattern unique scores, length N.
        discard_percents: percentages of patterns to drop, default 0..80 by 5.
        keep_fractions: alternative sweep as fractions kept; exclusive with
            discard_percents.
        class_labels: length-N labels; default is target tertiles.
        bins: histogram bin count; edges are shared across all sweep points.

    Raises:
        DataError: a sweep point would retain fewer than 2 patterns.
    """
    driver = int(driver)
    if not 0 <= driver < dataset.n_features:
        raise ValueError(f"driver index {driver} out of range")
    u_values = np.asarray(u_values, dtype=float)
    n = dataset.n_patterns
    if u_values.shape != (n,):
        raise ValueError(f"u_values must have shape ({n},)")
    if discard_percents is not None and keep_fractions is not None:
        raise ValueError("give either discard_percents or keep_fractions, not both")
    if keep_fractions is not None:
        discards = [100.0 * (1.0 - float(f)) for f in keep_fractions]
    elif discard_percents is not None:
        discards = [float(d) for d in discard_percents]
    else:
        discards = [float(d) for d in range(0, 85, 5)]
    for d in discards:
        if not 0.0 <= d < 100.0:
            raise ValueError(f"discard percent {d} out of range [0, 100)")

    if class_labels is None:
        labels = tertile_classes(dataset.target)
        class_names = TERTILE_NAMES
    else:
        labels = np.asarray(class_labels, dtype=object)
        if labels.shape[0] != n:
            raise ValueError("class_labels length does not match the dataset")
        class_names = tuple(str(c) for c in dict.fromkeys(labels.tolist()))

    x = dataset.values[:, driver]
    y = dataset.target
    edges = np.histogram_bin_edges(x, bins=bins)
    order = np.argsort(-u_values, kind="stable")

    points = []
    for d in discards:
        keep_n = n - int(round(d * n / 100.0))
        if keep_n < 2:
            raise DataError(
                f"discarding {d}% keeps {keep_n} patterns; need at least 2"
            )
        retained = np.sort(order[:keep_n])
        threshold = float(u_values[order[keep_n - 1]])
        xr, yr = x[retained], y[retained]
        if np.std(xr) == 0.0 or np.std(yr) == 0.0:
            pearson = float("nan")
        else:
            pearson = float(np.corrcoef(xr, yr)[0, 1])
        counts = {}
        for name in class_names:
            mask = labels[retained] == name
            counts[name] = np.histogram(xr[mask], bins=edges)[0]
        points.append(
            ThresholdPoint(
                discard_percent=d,
                retained_n=keep_n,
                u_threshold=threshold,
                pearson_r=pearson,
                retained=retained,
                class_counts=counts,
            )
        )

    return ThresholdAnalysis(
        driver=driver,
        bin_edges=edges,
        class_names=tuple(class_names),
        points=tuple(points),
    )
