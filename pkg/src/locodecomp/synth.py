"""Synthetic regression tables with analytically known decomposition targets.

Each family pins down a distinct behavior of the decomposition:

  suppressor        x and noise eta are independent standard normals,
                    z = x + eta, y = eta. Alone, x carries nothing (corr 0),
                    but given z it reveals eta exactly up to scale. After
                    standardizing, the residual variance of y given both is
                    0.5, so for driver x: U = 0, R = 0, S = 0.5.
  duplicate         z is an exact copy of x and y = x + sigma * e. Either
                    copy alone explains R^2 = 1 / (1 + sigma^2) of y, and
                    given the other copy a driver adds nothing: U = 0,
                    R = R^2, S = 0 (default sigma = 1 gives R = 0.5).
  additive          y = sum beta_j x_j + sigma * e with mutually orthogonal
                    regressors. Context never changes a driver's LOCO, so
                    R = S = 0 and U = beta_j^2 / (sum beta^2 + sigma^2).
                    Columns are orthogonalized within the sample, which
                    leaves the population targets unchanged but makes every
                    context subset give the identical LOCO value, so subset
                    searches have an unambiguous optimum at the empty set.
  correlated-block  features come in correlated pairs (correlation rho) and
                    all enter y additively; redundancy appears within pairs.
  noise-only        y is independent of all features; every score is 0.

Population targets come from the family's population covariance: for
standardized jointly Gaussian variables the subset prediction error is the
conditional variance Var(y | S) = 1 - c_S' inv(C_SS) c_S. In every family
features interact only inside their own pair while distinct pairs are
independent, so a driver's population LOCO depends on its context only
through partner membership. generate() exploits that two-point structure,
which keeps target computation cheap at any width; the exhaustive
enumeration over all context subsets remains available for small feature
counts via population_decomposition().
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .dataset import RawTable

FAMILIES = ("suppressor", "duplicate", "additive", "correlated-block", "noise-only")

# LOCO differences closer than this are population ties; the smallest,
# lexicographically first subset wins.
TIE_TOLERANCE = 1e-12

# Exhaustive enumeration doubles per feature; beyond this it is refused.
MAX_ENUMERATION_FEATURES = 16


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic table.

    noise defaults per family (suppressor ignores it; duplicate 1.0,
    additive 0.5, correlated-block 1.0, noise-only fixed). n_features and
    betas apply to the additive, correlated-block and noise-only families.
    """

    family: str
    n: int = 10000
    seed: int = 0
    noise: float | None = None
    n_features: int | None = None
    betas: tuple[float, ...] | None = None
    rho: float = 0.6

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family '{self.family}'; choose from {FAMILIES}")
        if self.n < 4:
            raise ValueError("need at least 4 rows")
        if self.noise is not None and self.noise < 0:
            raise ValueError("noise must be nonnegative")
        if not -0.999 < self.rho < 0.999:
            raise ValueError("rho must lie strictly inside (-1, 1)")


@dataclass(frozen=True)
class PopulationScores:
    """Analytic decomposition targets for one driver, standardized units."""

    driver: int
    name: str
    unique: float
    redundant: float
    synergy: float
    loco_empty: float
    loco_max: float
    subset_min: tuple[int, ...]
    subset_max: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "driver": self.driver,
            "name": self.name,
            "unique": self.unique,
            "redundant": self.redundant,
            "synergy": self.synergy,
            "loco_empty": self.loco_empty,
            "loco_max": self.loco_max,
            "subset_min": list(self.subset_min),
            "subset_max": list(self.subset_max),
        }


def _to_correlation(cov: np.ndarray) -> np.ndarray:
    sd = np.sqrt(np.diag(cov))
    return cov / np.outer(sd, sd)


def population_error(cov: np.ndarray, subset) -> float:
    """Var(y | subset) for standardized Gaussian variables, target last."""
    corr = _to_correlation(np.asarray(cov, dtype=float))
    cols = sorted(int(i) for i in subset)
    if not cols:
        return 1.0
    c_ss = corr[np.ix_(cols, cols)]
    c_sy = corr[cols, -1]
    value = 1.0 - float(c_sy @ np.linalg.pinv(c_ss, rcond=1e-10) @ c_sy)
    return max(value, 0.0)


def population_loco(cov: np.ndarray, driver: int, subset) -> float:
    """Population LOCO of a driver given a context subset."""
    cols = sorted(int(i) for i in subset)
    if int(driver) in cols:
        raise ValueError("subset must not contain the driver")
    return population_error(cov, cols) - population_error(cov, cols + [int(driver)])


def population_decomposition(
    cov: np.ndarray,
    driver: int,
    name: str = "",
    max_features: int = MAX_ENUMERATION_FEATURES,
) -> PopulationScores:
    """Exhaustive population decomposition of one driver from a covariance.

    All context subsets are enumerated by size then lexicographic order;
    values within TIE_TOLERANCE of the optimum tie, and the first subset in
    that order wins the tie. Refuses more than max_features features because
    the subset count doubles per feature.
    """
    cov = np.asarray(cov, dtype=float)
    p = cov.shape[0] - 1
    if p > max_features:
        raise ValueError(
            f"exhaustive enumeration over {p} features would visit 2^{p - 1}"
            f" context subsets; limit is {max_features}"
        )
    driver = int(driver)
    others = [j for j in range(p) if j != driver]
    subsets = []
    for k in range(len(others) + 1):
        subsets.extend(combinations(others, k))
    values = [population_loco(cov, driver, s) for s in subsets]
    vmin, vmax = min(values), max(values)
    subset_min = next(s for s, v in zip(subsets, values) if v <= vmin + TIE_TOLERANCE)
    loco_min = values[subsets.index(subset_min)]
    subset_max = next(s for s, v in zip(subsets, values) if v >= vmax - TIE_TOLERANCE)
    loco_max = values[subsets.index(subset_max)]
    loco_empty = values[0]
    return PopulationScores(
        driver=driver,
        name=name,
        unique=loco_min,
        redundant=loco_empty - loco_min,
        synergy=loco_max - loco_empty,
        loco_empty=loco_empty,
        loco_max=loco_max,
        subset_min=tuple(subset_min),
        subset_max=tuple(subset_max),
    )


def _partner(family: str, p: int, driver: int) -> int | None:
    """Index of the one feature a driver interacts with, if any.

    Suppressor and duplicate couple their two features; correlated-block
    couples consecutive pairs, leaving the last feature alone when p is odd.
    Additive and noise-only features are mutually independent.
    """
    if family in ("suppressor", "duplicate"):
        return 1 - driver
    if family == "correlated-block":
        if driver % 2 == 0:
            return driver + 1 if driver + 1 < p else None
        return driver - 1
    return None


def _two_point_targets(
    cov: np.ndarray, driver: int, partner: int | None, name: str
) -> PopulationScores:
    """Population decomposition when only one partner can move a driver's LOCO.

    Features outside the driver's pair sit in independent blocks, so their
    explained variance cancels in the LOCO difference and only two context
    values exist: partner absent and partner present. Ties resolve the same
    way enumeration would, toward the smaller subset.
    """
    empty = population_loco(cov, driver, ())
    if partner is None:
        return PopulationScores(
            driver, name, empty, 0.0, 0.0, empty, empty, (), ()
        )
    paired = population_loco(cov, driver, (partner,))
    if abs(paired - empty) <= TIE_TOLERANCE:
        lo, hi = empty, empty
        subset_min: tuple[int, ...] = ()
        subset_max: tuple[int, ...] = ()
    elif paired < empty:
        lo, hi, subset_min, subset_max = paired, empty, (partner,), ()
    else:
        lo, hi, subset_min, subset_max = empty, paired, (), (partner,)
    return PopulationScores(
        driver, name, lo, empty - lo, hi - empty, empty, hi, subset_min, subset_max
    )


def _orthonormal_columns(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    """Columns that are exactly zero mean, unit sample sd, and orthogonal."""
    raw = rng.standard_normal((n, k + 1))
    raw -= raw.mean(axis=0)
    q, _ = np.linalg.qr(raw)
    # Drop one column so centering cost the rank we spent on it.
    q = q[:, :k]
    q = q - q.mean(axis=0)
    return q / np.std(q, axis=0, ddof=1)


def _default_betas(p: int) -> tuple[float, ...]:
    if p == 2:
        return (0.6, 0.8)
    return tuple(np.linspace(1.0, 0.4, p))


def _build(spec: SyntheticSpec):
    """Returns (feature matrix, target, names, population covariance)."""
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed]))
    n = spec.n

    if spec.family == "suppressor":
        x = rng.standard_normal(n)
        eta = rng.standard_normal(n)
        features = np.column_stack([x, x + eta])
        cov = np.array([[1.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 1.0]])
        return features, eta, ("x", "z"), cov

    if spec.family == "duplicate":
        sigma = 1.0 if spec.noise is None else spec.noise
        x = rng.standard_normal(n)
        y = x + sigma * rng.standard_normal(n)
        features = np.column_stack([x, x.copy()])
        vy = 1.0 + sigma**2
        cov = np.array([[1.0, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, vy]])
        return features, y, ("x", "z"), cov

    if spec.family == "additive":
        betas = spec.betas or _default_betas(spec.n_features or 2)
        betas = tuple(float(b) for b in betas)
        p = len(betas)
        if spec.n_features is not None and spec.n_features != p:
            raise ValueError("n_features disagrees with the number of betas")
        sigma = 0.5 if spec.noise is None else spec.noise
        basis = _orthonormal_columns(rng, n, p + 1)
        features = basis[:, :p]
        y = features @ np.array(betas) + sigma * basis[:, p]
        cov = np.eye(p + 1)
        cov[:p, -1] = betas
        cov[-1, :p] = betas
        cov[-1, -1] = float(np.dot(betas, betas)) + sigma**2
        names = tuple(f"x{j + 1}" for j in range(p))
        return features, y, names, cov

    if spec.family == "correlated-block":
        p = spec.n_features or (len(spec.betas) if spec.betas else 4)
        betas = spec.betas or tuple(1.0 for _ in range(p))
        betas = tuple(float(b) for b in betas)
        if len(betas) != p:
            raise ValueError("n_features disagrees with the number of betas")
        sigma = 1.0 if spec.noise is None else spec.noise
        cov_x = np.eye(p)
        for j in range(0, p - 1, 2):
            cov_x[j, j + 1] = cov_x[j + 1, j] = spec.rho
        chol = np.linalg.cholesky(cov_x)
        features = rng.standard_normal((n, p)) @ chol.T
        beta_vec = np.array(betas)
        y = features @ beta_vec + sigma * rng.standard_normal(n)
        cov = np.empty((p + 1, p + 1))
        cov[:p, :p] = cov_x
        cov[:p, -1] = cov_x @ beta_vec
        cov[-1, :p] = cov[:p, -1]
        cov[-1, -1] = float(beta_vec @ cov_x @ beta_vec) + sigma**2
        names = tuple(f"x{j + 1}" for j in range(p))
        return features, y, names, cov

    # noise-only
    p = spec.n_features or 3
    features = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    cov = np.eye(p + 1)
    names = tuple(f"x{j + 1}" for j in range(p))
    return features, y, names, cov


def generate(spec: SyntheticSpec) -> tuple[RawTable, tuple[PopulationScores, ...]]:
    """Draw one synthetic table and its per-driver population targets.

    The table is raw (not standardized); run it through standardize() like
    any loaded CSV. Targets are in standardized population units, which is
    what the engine estimates.
    """
    features, target, names, cov = _build(spec)
    table = RawTable(
        feature_names=names,
        features=features,
        target_name="y",
        target=target,
    )
    p = len(names)
    targets = tuple(
        _two_point_targets(cov, d, _partner(spec.family, p, d), names[d])
        for d in range(p)
    )
    return table, targets
