"""Shared fixtures: synthetic datasets and the optional wine-quality table."""

import csv
import os
from pathlib import Path

import numpy as np
import pytest

from locodecomp import (
    LocoEvaluator,
    SurrogateConfig,
    SyntheticSpec,
    decompose_all,
    generate,
    standardize,
)

# Collected by the acceptance tests; echoed at the end of the run so the
# per-criterion lines are visible even under output capture.
ACCEPTANCE_LINES: list[str] = []

WINE_FEATURES = (
    "fixed acidity",
    "volatile acidity",
    "citric acid",
    "residual sugar",
    "chlorides",
    "free sulfur dioxide",
    "total sulfur dioxide",
    "density",
    "pH",
    "sulphates",
)

WINE_SKIP_REASON = (
    "wine-quality CSV not available: set WINE_QUALITY_CSV to a combined file,"
    " or place winequality.csv (combined) or winequality-red.csv plus"
    " winequality-white.csv under data/"
)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_family(family, n, seed, **kwargs):
    """Generate, standardize, and wrap one synthetic family."""
    table, targets = generate(SyntheticSpec(family, n=n, seed=seed, **kwargs))
    dataset, _ = standardize(table)
    return dataset, targets, LocoEvaluator(dataset)


@pytest.fixture(scope="session")
def suppressor_case():
    return make_family("suppressor", 10000, 7)


@pytest.fixture(scope="session")
def duplicate_case():
    return make_family("duplicate", 10000, 11)


@pytest.fixture(scope="session")
def additive8_case():
    return make_family("additive", 10000, 13, n_features=8)


@pytest.fixture(scope="session")
def corr6_case():
    return make_family(
        "correlated-block",
        2000,
        17,
        n_features=6,
        betas=(1.0, 0.8, 0.6, 0.5, 0.4, 0.3),
    )


def _find_wine_sources():
    env = os.environ.get("WINE_QUALITY_CSV")
    if env and Path(env).exists():
        return [Path(env)]
    data = Path(__file__).resolve().parent.parent / "data"
    combined = data / "winequality.csv"
    if combined.exists():
        return [combined]
    red = data / "winequality-red.csv"
    white = data / "winequality-white.csv"
    if red.exists() and white.exists():
        return [red, white]
    return None


def _read_wine_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        sample = fh.readline()
        delim = ";" if sample.count(";") > sample.count(",") else ","
        fh.seek(0)
        rows = list(csv.reader(fh, delimiter=delim))
    header = [h.strip().strip('"') for h in rows[0]]
    return header, rows[1:]


@pytest.fixture(scope="session")
def wine_csv(tmp_path_factory):
    """Canonical comma-delimited wine table, or skip when unavailable."""
    sources = _find_wine_sources()
    if not sources:
        pytest.skip(WINE_SKIP_REASON)
    header0, _ = _read_wine_rows(sources[0])
    for name in WINE_FEATURES + ("quality",):
        if name not in header0:
            pytest.skip(f"wine CSV lacks expected column '{name}'")
    out = tmp_path_factory.mktemp("wine") / "winequality.csv"
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        columns = list(WINE_FEATURES) + ["quality"]
        writer.writerow(columns)
        for path in sources:
            header, rows = _read_wine_rows(path)
            idx = [header.index(c) for c in columns]
            for row in rows:
                if not row or all(not c.strip() for c in row):
                    continue
                writer.writerow([row[i].strip() for i in idx])
    return out


@pytest.fixture(scope="session")
def wine_case(wine_csv):
    from locodecomp import load_csv

    raw = load_csv(wine_csv, "quality")
    dataset, report = standardize(raw)
    return dataset, report, LocoEvaluator(dataset)


@pytest.fixture(scope="session")
def wine_decompositions(wine_case):
    dataset, _, evaluator = wine_case
    config = SurrogateConfig(n_surrogates=100, alpha=0.05, seed=20240)
    return decompose_all(dataset, config, workers=2, evaluator=evaluator)
