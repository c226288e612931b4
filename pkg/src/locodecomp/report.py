"""Analysis orchestration and file outputs.

The run_* functions execute a configured analysis and write a fixed set of
artifacts into the output directory: a JSON report, delimited score tables,
and rendered figures. CSV cells are formatted with shortest round-trip float
strings and a fixed line terminator, so identical configurations and seeds
produce byte-identical tables on any platform.
"""

from __future__ import annotations

import csv
import json
import re
import time
from pathlib import Path

import numpy as np

from ._version import __version__
from .config import AUTO_EXACT_LIMIT, RunConfig
from .dataset import Dataset, format_float, load_csv, standardize
from .decompose import decompose_all
from .errors import ConfigError, DataError
from .local_scores import local_score_matrices, u_threshold_analysis
from .regress import LocoEvaluator
from .shapley import (
    MAX_EXACT_FEATURES,
    exact_local_shapley_matrix,
    exact_shapley_all,
    mc_local_shapley_matrix,
    mc_shapley_all,
)
from . import plots

SCHEMA_VERSION = 1

# Order in which per-pattern score panels appear in files and figures.
PANEL_KINDS = ("unique", "redundant", "synergy", "shapley", "loco")

_IDENTITY_CAVEAT = (
    "out-of-fold evaluation: per-pattern column means track global scores"
    " only approximately; the exact identity holds in-sample"
)


def resolve_shapley_method(method: str, n_features: int) -> str:
    """Map the configured method onto 'exact' or 'monte-carlo'."""
    if method == "exact":
        return "exact"
    if method == "mc":
        return "monte-carlo"
    return "exact" if n_features <= AUTO_EXACT_LIMIT else "monte-carlo"


class AnalysisResult:
    """In-memory bundle of everything a run computed."""

    def __init__(self, config, dataset, std_report, evaluator, decompositions, shapley):
        self.config = config
        self.dataset = dataset
        self.std_report = std_report
        self.evaluator = evaluator
        self.decompositions = decompositions
        self.shapley = shapley
        self.shapley_method = shapley[0].method if shapley else "exact"
        self.timings: dict[str, float] = {}


def load_standardized(config: RunConfig) -> tuple:
    """Load and standardize the configured input table."""
    raw = load_csv(
        config.input,
        config.target,
        ignore_columns=config.ignore,
        drop_missing_rows=config.drop_missing,
    )
    return standardize(raw)


def analyze(config: RunConfig) -> AnalysisResult:
    """Load data and compute the full global decomposition plus Shapley effects."""
    timings = {}
    start = time.perf_counter()
    dataset, std_report = load_standardized(config)
    timings["load"] = time.perf_counter() - start

    evaluator = LocoEvaluator(dataset, config.eval_scheme())
    start = time.perf_counter()
    decompositions = decompose_all(
        dataset, config.surrogate_config(), workers=config.workers, evaluator=evaluator
    )
    timings["decompose"] = time.perf_counter() - start

    method = resolve_shapley_method(config.shapley_method, dataset.n_features)
    if method == "exact" and dataset.n_features > MAX_EXACT_FEATURES:
        raise ConfigError(
            f"exact Shapley enumeration is limited to {MAX_EXACT_FEATURES} features;"
            " set shapley_method = mc"
        )
    start = time.perf_counter()
    if method == "exact":
        shapley = exact_shapley_all(dataset, evaluator=evaluator)
    else:
        shapley = mc_shapley_all(
            dataset, config.n_permutations, config.seed, evaluator=evaluator
        )
    timings["shapley"] = time.perf_counter() - start

    result = AnalysisResult(config, dataset, std_report, evaluator, decompositions, shapley)
    result.timings.update(timings)
    return result


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name.strip()) or "column"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _path_dict(path, names) -> dict:
    return {
        "direction": path.direction,
        "subset": [names[j] for j in path.subset],
        "loco_start": path.loco_start,
        "loco_final": path.loco_final,
        "steps": [
            {
                "feature": names[s.feature],
                "loco_after": s.loco_after,
                "delta": s.delta,
                "p_value": s.p_value,
            }
            for s in path.steps
        ],
    }


def _decomposition_dict(dec, names) -> dict:
    return {
        "feature": names[dec.driver],
        "driver": dec.driver,
        "unique": dec.unique,
        "redundant": dec.redundant,
        "synergy": dec.synergy,
        "loco_empty": dec.loco_empty,
        "loco_min": dec.loco_min,
        "loco_max": dec.loco_max,
        "path_min": _path_dict(dec.path_min, names),
        "path_max": _path_dict(dec.path_max, names),
    }


def _shapley_dict(est, names) -> dict:
    return {
        "feature": names[est.driver],
        "driver": est.driver,
        "value": est.value,
        "method": est.method,
        "n_permutations": est.n_permutations,
        "standard_error": est.standard_error,
    }


def _path_matrix(decompositions, n_features: int, direction: str) -> np.ndarray:
    """Rows are drivers; cell (d, j) is the LOCO change when j joined d's path."""
    matrix = np.zeros((n_features, n_features))
    for dec in decompositions:
        path = dec.path_min if direction == "min" else dec.path_max
        for step in path.steps:
            matrix[dec.driver, step.feature] = step.delta
    return matrix


def _write_global_tables(result: AnalysisResult, outdir: Path) -> dict[str, str]:
    names = result.dataset.feature_names
    files = {}

    rows = []
    for dec, est in zip(result.decompositions, result.shapley):
        rows.append(
            [
                names[dec.driver],
                format_float(dec.unique),
                format_float(dec.redundant),
                format_float(dec.synergy),
                format_float(dec.loco_empty),
                format_float(dec.loco_max),
                format_float(est.value),
            ]
        )
    _write_csv(
        outdir / "global_scores.csv",
        ["feature", "unique", "redundant", "synergy", "loco_empty", "loco_max", "shapley"],
        rows,
    )
    files["global_scores"] = "global_scores.csv"

    for direction, filename in (("min", "path_redundant.csv"), ("max", "path_synergistic.csv")):
        matrix = _path_matrix(result.decompositions, len(names), direction)
        rows = [
            [names[d]] + [format_float(v) for v in matrix[d]]
            for d in range(len(names))
        ]
        _write_csv(outdir / filename, ["driver"] + list(names), rows)
        files[filename.removesuffix(".csv")] = filename
    return files


def _render_global_figures(result: AnalysisResult, outdir: Path) -> dict[str, str]:
    names = result.dataset.feature_names
    files = {}
    plots.save_global_scores(
        result.decompositions, result.shapley, names, outdir / "global_scores.png"
    )
    files["global_scores_figure"] = "global_scores.png"
    for direction, stem, title in (
        ("min", "path_redundant", "LOCO change along redundancy paths"),
        ("max", "path_synergistic", "LOCO change along synergy paths"),
    ):
        matrix = _path_matrix(result.decompositions, len(names), direction)
        plots.save_path_matrix(matrix, names, outdir / f"{stem}.png", title)
        files[f"{stem}_figure"] = f"{stem}.png"
    return files


def _base_report(result: AnalysisResult) -> dict:
    names = result.dataset.feature_names
    scheme = result.config.eval_scheme()
    return {
        "schema_version": SCHEMA_VERSION,
        "engine_version": __version__,
        "config": result.config.to_dict(),
        "eval_scheme": scheme.label(),
        "identity_caveat": None if scheme.is_in_sample else _IDENTITY_CAVEAT,
        "n_patterns": result.dataset.n_patterns,
        "n_features": result.dataset.n_features,
        "features": list(names),
        "standardization": result.std_report.to_dict(),
        "decompositions": [
            _decomposition_dict(d, names) for d in result.decompositions
        ],
        "shapley": [_shapley_dict(s, names) for s in result.shapley],
    }


def _finish_report(report: dict, result: AnalysisResult, files: dict, outdir: Path) -> dict:
    files["report"] = "report.json"
    report["files"] = files
    report["timings"] = {k: round(v, 6) for k, v in result.timings.items()}
    with open(outdir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    return report


def run_global(config: RunConfig, figures: bool = True) -> dict:
    """Global decomposition run: report.json, score tables, path matrices."""
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    result = analyze(config)

    start = time.perf_counter()
    files = _write_global_tables(result, outdir)
    result.timings["write"] = time.perf_counter() - start
    if figures:
        start = time.perf_counter()
        files.update(_render_global_figures(result, outdir))
        result.timings["figures"] = time.perf_counter() - start

    return _finish_report(_base_report(result), result, files, outdir)


def _local_matrices(result: AnalysisResult) -> dict[str, np.ndarray]:
    dataset, ev = result.dataset, result.evaluator
    matrices = local_score_matrices(dataset, result.decompositions, evaluator=ev)
    out = {kind: matrices[kind].values for kind in ("loco", "unique", "redundant", "synergy")}
    if result.shapley_method == "exact":
        out["shapley"] = exact_local_shapley_matrix(dataset, evaluator=ev)
    else:
        out["shapley"] = mc_local_shapley_matrix(
            dataset, result.config.n_permutations, result.config.seed, evaluator=ev
        )
    return out


_LOCAL_FILENAMES = {
    "loco": "local_loco.csv",
    "unique": "local_u.csv",
    "redundant": "local_r.csv",
    "synergy": "local_s.csv",
    "shapley": "local_shapley.csv",
}


def _panel_scores(result: AnalysisResult) -> dict[str, list[float]]:
    by_kind = {
        "unique": [d.unique for d in result.decompositions],
        "redundant": [d.redundant for d in result.decompositions],
        "synergy": [d.synergy for d in result.decompositions],
        "loco": [d.loco_max for d in result.decompositions],
        "shapley": [s.value for s in result.shapley],
    }
    return by_kind


def _panel_order(scores: list[float]) -> list[int]:
    # Descending score; ties keep feature order.
    return list(np.argsort(-np.asarray(scores), kind="stable"))


def _write_local_tables(
    result: AnalysisResult, matrices: dict[str, np.ndarray], outdir: Path
) -> dict[str, str]:
    dataset = result.dataset
    names = dataset.feature_names
    files = {}
    id_header = list(dataset.id_names)

    for kind, filename in _LOCAL_FILENAMES.items():
        matrix = matrices[kind]
        rows = []
        for i in range(dataset.n_patterns):
            row = [str(i)]
            if id_header:
                row.extend(str(v) for v in dataset.id_values[i])
            row.extend(format_float(v) for v in matrix[i])
            rows.append(row)
        _write_csv(outdir / filename, ["pattern"] + id_header + list(names), rows)
        files[filename.removesuffix(".csv")] = filename

    panel_scores = _panel_scores(result)
    rows = []
    for kind in PANEL_KINDS:
        for rank, j in enumerate(_panel_order(panel_scores[kind])):
            rows.append([kind, str(rank), names[j]])
    _write_csv(outdir / "panel_order.csv", ["panel", "rank", "feature"], rows)
    files["panel_order"] = "panel_order.csv"

    if result.config.group:
        files.update(_write_group_means(result, matrices, outdir))
    return files


def _write_group_means(
    result: AnalysisResult, matrices: dict[str, np.ndarray], outdir: Path
) -> dict[str, str]:
    dataset = result.dataset
    group_col = result.config.group
    if group_col not in dataset.id_names:
        raise DataError(f"group column '{group_col}' not found among ignored columns")
    labels = dataset.id_values[:, dataset.id_names.index(group_col)]
    groups = sorted({str(v) for v in labels})
    files = {}
    for kind, filename in _LOCAL_FILENAMES.items():
        matrix = matrices[kind]
        rows = []
        for name in groups:
            mask = np.array([str(v) == name for v in labels])
            mean = matrix[mask].mean(axis=0)
            rows.append(
                [name, str(int(mask.sum()))] + [format_float(v) for v in mean]
            )
        out_name = f"group_means_{filename.removesuffix('.csv').removeprefix('local_')}.csv"
        _write_csv(
            outdir / out_name,
            ["group", "n_patterns"] + list(dataset.feature_names),
            rows,
        )
        files[out_name.removesuffix(".csv")] = out_name
    return files


def run_local(config: RunConfig, figures: bool = True) -> dict:
    """Per-pattern run: everything run_global writes plus the local score maps."""
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    result = analyze(config)

    start = time.perf_counter()
    matrices = _local_matrices(result)
    result.timings["local"] = time.perf_counter() - start

    start = time.perf_counter()
    files = _write_global_tables(result, outdir)
    files.update(_write_local_tables(result, matrices, outdir))
    result.timings["write"] = time.perf_counter() - start

    if figures:
        start = time.perf_counter()
        files.update(_render_global_figures(result, outdir))
        panel_scores = _panel_scores(result)
        panels = []
        for kind in PANEL_KINDS:
            order = _panel_order(panel_scores[kind])
            panels.append(
                (
                    kind,
                    matrices[kind][:, order],
                    [result.dataset.feature_names[j] for j in order],
                )
            )
        plots.save_local_panels(panels, outdir / "local_scores.png")
        files["local_scores_figure"] = "local_scores.png"
        result.timings["figures"] = time.perf_counter() - start

    return _finish_report(_base_report(result), result, files, outdir)


def _class_labels(result: AnalysisResult):
    """Labels from the configured class column, or None for target tertiles."""
    dataset = result.dataset
    column = result.config.class_column
    if not column:
        return None
    if column not in dataset.id_names:
        raise DataError(f"class column '{column}' not found among ignored columns")
    return dataset.id_values[:, dataset.id_names.index(column)].astype(object)


def run_threshold(
    config: RunConfig,
    feature: str,
    discard_percents=None,
    figures: bool = True,
) -> dict:
    """Retention sweep over one driver's per-pattern unique scores.

    Writes uthresh_<feature>.csv (one row per sweep point), one histogram
    table per point and class, a JSON summary, and optionally the sweep
    figure.
    """
    outdir = Path(config.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    result = analyze(config)
    dataset, ev = result.dataset, result.evaluator
    driver = dataset.feature_index(feature)

    start = time.perf_counter()
    matrices = local_score_matrices(dataset, result.decompositions, evaluator=ev)
    u_values = matrices["unique"].values[:, driver]
    analysis = u_threshold_analysis(
        dataset,
        driver,
        u_values,
        discard_percents=discard_percents,
        class_labels=_class_labels(result),
    )
    result.timings["threshold"] = time.perf_counter() - start

    stem = f"uthresh_{_safe_name(feature)}"
    files = {}
    rows = []
    for point in analysis.points:
        hist_names = []
        for cls in analysis.class_names:
            pct = f"{point.discard_percent:g}".replace(".", "p")
            hist_name = f"{stem}_d{pct}_{_safe_name(cls)}.csv"
            hist_rows = [
                [
                    format_float(analysis.bin_edges[b]),
                    format_float(analysis.bin_edges[b + 1]),
                    str(int(point.class_counts[cls][b])),
                ]
                for b in range(len(analysis.bin_edges) - 1)
            ]
            _write_csv(outdir / hist_name, ["bin_left", "bin_right", "count"], hist_rows)
            hist_names.append(hist_name)
        rows.append(
            [
                format_float(point.discard_percent),
                str(point.retained_n),
                format_float(point.u_threshold),
                format_float(point.pearson_r),
                ";".join(hist_names),
            ]
        )
    _write_csv(
        outdir / f"{stem}.csv",
        ["discard_percent", "retained_n", "u_threshold", "pearson_r", "hist_files"],
        rows,
    )
    files["uthresh"] = f"{stem}.csv"

    if figures:
        plots.save_threshold_sweep(analysis, feature, outdir / f"{stem}.png")
        files["uthresh_figure"] = f"{stem}.png"

    summary = {
        "schema_version": SCHEMA_VERSION,
        "engine_version": __version__,
        "config": result.config.to_dict(),
        "feature": feature,
        "classes": list(analysis.class_names),
        "points": [
            {
                "discard_percent": pt.discard_percent,
                "retained_n": pt.retained_n,
                "u_threshold": pt.u_threshold,
                "pearson_r": pt.pearson_r,
            }
            for pt in analysis.points
        ],
        "files": files,
        "timings": {k: round(v, 6) for k, v in result.timings.items()},
    }
    with open(outdir / f"{stem}.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    return summary
