"""CSV ingestion and z-score standardization for regression tables.

Everything downstream assumes standardized data: each feature column and the
target have mean 0 and sample standard deviation 1 (ddof=1). Identifier
columns (for example a group label) are carried through verbatim and never
enter any model.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

# Cell spellings treated as missing values, compared lowercase.
_MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none"})


@dataclass(frozen=True)
class RawTable:
    """Parsed but not yet standardized tabular data."""

    feature_names: tuple[str, ...]
    features: np.ndarray
    target_name: str
    target: np.ndarray
    id_names: tuple[str, ...] = ()
    id_values: np.ndarray | None = None
    dropped_rows: tuple[tuple[int, str], ...] = ()

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class ColumnStats:
    """Original mean and sd of one column; None for identifier columns."""

    name: str
    role: str  # "feature" | "target" | "id"
    mean: float | None = None
    sd: float | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "role": self.role, "mean": self.mean, "sd": self.sd}


@dataclass(frozen=True)
class StandardizationReport:
    """Per-column moments plus any rows dropped during loading.

    Multiplying a standardized column by ``sd`` and adding ``mean`` recovers
    the original values, so reports can translate scores back to raw units.
    """

    columns: tuple[ColumnStats, ...]
    dropped_rows: tuple[tuple[int, str], ...] = ()

    def stats(self, name: str) -> ColumnStats:
        for col in self.columns:
            if col.name == name:
                return col
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "columns": [c.to_dict() for c in self.columns],
            "dropped_rows": [{"line": ln, "reason": why} for ln, why in self.dropped_rows],
        }


@dataclass(frozen=True)
class Dataset:
    """Standardized design matrix and target, immutable once constructed.

    Invariants are checked on construction: at least 2 rows, at least 1
    feature, all values finite, every modeled column centered and scaled.
    """

    values: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...]
    id_names: tuple[str, ...] = ()
    id_values: np.ndarray | None = None

    def __post_init__(self):
        v, y = self.values, self.target
        if v.ndim != 2 or y.ndim != 1 or v.shape[0] != y.shape[0]:
            raise DataError("features must be (N, p) with a matching length-N target")
        n, p = v.shape
        if n < 2:
            raise DataError(f"need at least 2 rows, found {n}")
        if p < 1:
            raise DataError("need at least 1 feature column")
        if len(self.feature_names) != p:
            raise DataError("feature_names length does not match the feature matrix")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(y))):
            raise DataError("non-finite values in standardized data")
        for name, col in zip(self.feature_names + ("target",), list(v.T) + [y]):
            if abs(float(np.mean(col))) > 1e-9 or abs(float(np.std(col, ddof=1)) - 1.0) > 1e-9:
                raise DataError(f"column '{name}' is not standardized (mean 0, sd 1)")
        v.setflags(write=False)
        y.setflags(write=False)

    @property
    def n_patterns(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def feature_index(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise DataError(f"unknown feature '{name}'") from None


def _parse_cell(text: str, line: int, column: str) -> float | None:
    """Parse one cell; returns None for missing, raises DataError for garbage."""
    stripped = text.strip()
    if stripped.lower() in _MISSING_TOKENS:
        return None
    try:
        value = float(stripped)
    except ValueError:
        raise DataError(f"line {line}, column '{column}': non-numeric value '{stripped}'") from None
    if not np.isfinite(value):
        return None
    return value


def load_csv(
    path,
    target_column: str,
    ignore_columns=(),
    drop_missing_rows: bool = False,
    delimiter: str | None = None,
) -> RawTable:
    """Read a delimited text file into a RawTable.

    Args:
        path: file to read. The first row must be a header.
        target_column: header name of the regression target.
        ignore_columns: header names excluded from modeling but kept as
            identifier columns (group labels, sample ids).
        drop_missing_rows: if True, rows with missing or non-finite cells in
            modeled columns are skipped and recorded; otherwise they are an
            error.
        delimiter: field separator; autodetected between ',' and ';' if None.

    Raises:
        DataError: missing file, malformed header or rows, unusable cells,
            or fewer than 2 usable rows.
    """
    ignore_columns = tuple(ignore_columns)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            first = fh.readline()
            if not first.strip():
                raise DataError(f"{path}: empty file")
            if delimiter is None:
                delimiter = ";" if first.count(";") > first.count(",") else ","
            fh.seek(0)
            rows = list(csv.reader(fh, delimiter=delimiter))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None

    header = [name.strip().strip('"') for name in rows[0]]
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise DataError(f"duplicate column names in header: {', '.join(dupes)}")
    if target_column not in header:
        raise DataError(f"target column '{target_column}' not found in header")
    for name in ignore_columns:
        if name not in header:
            raise DataError(f"ignored column '{name}' not found in header")
    if target_column in ignore_columns:
        raise DataError(f"target column '{target_column}' cannot also be ignored")

    feature_names = tuple(
        h for h in header if h != target_column and h not in ignore_columns
    )
    if not feature_names:
        raise DataError("no feature columns left after removing target and ignored columns")
    id_names = tuple(h for h in header if h in ignore_columns)

    col_index = {name: header.index(name) for name in header}
    modeled = list(feature_names) + [target_column]

    kept_features: list[list[float]] = []
    kept_target: list[float] = []
    kept_ids: list[list[str]] = []
    dropped: list[tuple[int, str]] = []

    for offset, row in enumerate(rows[1:]):
        line = offset + 2
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise DataError(f"line {line}: expected {len(header)} fields, found {len(row)}")
        parsed: dict[str, float] = {}
        missing_in: str | None = None
        for name in modeled:
            value = _parse_cell(row[col_index[name]], line, name)
            if value is None:
                missing_in = name
                break
            parsed[name] = value
        if missing_in is not None:
            if drop_missing_rows:
                dropped.append((line, f"missing value in column '{missing_in}'"))
                continue
            raise DataError(
                f"line {line}, column '{missing_in}': missing value"
                " (enable row dropping to skip such rows)"
            )
        kept_features.append([parsed[name] for name in feature_names])
        kept_target.append(parsed[target_column])
        kept_ids.append([row[col_index[name]].strip() for name in id_names])

    if len(kept_target) < 2:
        raise DataError(f"{path}: fewer than 2 usable rows")

    id_values = np.array(kept_ids, dtype=object) if id_names else None
    return RawTable(
        feature_names=feature_names,
        features=np.asarray(kept_features, dtype=float),
        target_name=target_column,
        target=np.asarray(kept_target, dtype=float),
        id_names=id_names,
        id_values=id_values,
        dropped_rows=tuple(dropped),
    )


def _zscore(column: np.ndarray, name: str) -> tuple[np.ndarray, float, float]:
    if not np.all(np.isfinite(column)):
        raise DataError(f"column '{name}' contains non-finite values")
    mean = float(np.mean(column))
    sd = float(np.std(column, ddof=1))
    if sd == 0.0 or not np.isfinite(sd):
        raise DataError(f"column '{name}' has zero variance and cannot be z-scored")
    z = (column - mean) / sd
    # Second pass removes the tiny residual moments float cancellation leaves
    # behind, so the Dataset invariant holds at any input scale.
    z = (z - np.mean(z)) / np.std(z, ddof=1)
    return z, mean, sd


def standardize(raw: RawTable) -> tuple[Dataset, StandardizationReport]:
    """Z-score every modeled column of a RawTable.

    Returns the immutable Dataset plus a report holding the original moments
    (so scores can be mapped back to raw units) and any dropped rows.

    Raises:
        DataError: a modeled column is constant or contains non-finite values.
    """
    if raw.n_rows < 2:
        raise DataError("need at least 2 rows to standardize")
    stats: list[ColumnStats] = []
    cols = np.empty_like(raw.features, dtype=float)
    for j, name in enumerate(raw.feature_names):
        cols[:, j], mean, sd = _zscore(raw.features[:, j], name)
        stats.append(ColumnStats(name, "feature", mean, sd))
    target, mean, sd = _zscore(raw.target, raw.target_name)
    stats.append(ColumnStats(raw.target_name, "target", mean, sd))
    for name in raw.id_names:
        stats.append(ColumnStats(name, "id"))
    dataset = Dataset(
        values=cols,
        target=target,
        feature_names=raw.feature_names,
        id_names=raw.id_names,
        id_values=raw.id_values,
    )
    report = StandardizationReport(tuple(stats), raw.dropped_rows)
    return dataset, report


def format_float(value) -> str:
    """Shortest digit string that round-trips, for stable text output."""
    return repr(float(value))


def write_raw_csv(raw: RawTable, path) -> None:
    """Write a RawTable back out as comma-separated text."""
    header = list(raw.id_names) + list(raw.feature_names) + [raw.target_name]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(raw.n_rows):
            row = []
            if raw.id_names:
                row.extend(str(v) for v in raw.id_values[i])
            row.extend(format_float(v) for v in raw.features[i])
            row.append(format_float(raw.target[i]))
            writer.writerow(row)
