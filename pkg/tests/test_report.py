"""Report orchestration: artifact layout, content identities, determinism."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from locodecomp import RunConfig, run_global, run_local, run_threshold
from locodecomp.dataset import write_raw_csv
from locodecomp.report import resolve_shapley_method
from locodecomp.synth import SyntheticSpec, generate


@pytest.fixture(scope="module")
def synth_csv(tmp_path_factory):
    """Correlated 4-feature table with a cyclic group label column."""
    table, _ = generate(SyntheticSpec("correlated-block", n=400, seed=19, n_features=4))
    base = tmp_path_factory.mktemp("synthdata")
    plain = base / "plain.csv"
    write_raw_csv(table, plain)
    grouped = base / "grouped.csv"
    with open(plain) as fh:
        rows = list(csv.reader(fh))
    with open(grouped, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["site"] + rows[0])
        for i, row in enumerate(rows[1:]):
            writer.writerow([f"s{i % 3}"] + row)
    return grouped


def make_config(synth_csv, outdir, **kwargs):
    defaults = dict(
        input=str(synth_csv),
        target="y",
        ignore=("site",),
        group="site",
        seed=123,
        n_surrogates=30,
        n_permutations=150,
        outdir=str(outdir),
    )
    defaults.update(kwargs)
    return RunConfig(**defaults)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_resolve_shapley_method():
    assert resolve_shapley_method("auto", 10) == "exact"
    assert resolve_shapley_method("auto", 13) == "monte-carlo"
    assert resolve_shapley_method("exact", 30) == "exact"
    assert resolve_shapley_method("mc", 2) == "monte-carlo"


def test_run_global_artifacts(synth_csv, tmp_path):
    outdir = tmp_path / "out"
    report = run_global(make_config(synth_csv, outdir))

    scores = read_csv(outdir / "global_scores.csv")
    assert scores[0] == [
        "feature",
        "unique",
        "redundant",
        "synergy",
        "loco_empty",
        "loco_max",
        "shapley",
    ]
    assert len(scores) == 5  # header + 4 features
    for row in scores[1:]:
        u, r, s, _, lmax = (float(v) for v in row[1:6])
        assert abs(lmax - (u + r + s)) < 1e-10

    for name in ("path_redundant.csv", "path_synergistic.csv"):
        rows = read_csv(outdir / name)
        assert rows[0][0] == "driver"
        assert len(rows) == 5
        for row in rows[1:]:
            # drivers never appear on their own path
            assert float(row[1 + rows[0].index(row[0]) - 1]) == 0.0

    data = json.loads((outdir / "report.json").read_text())
    assert data["schema_version"] == 1
    assert data["n_features"] == 4
    assert data["eval_scheme"] == "in-sample"
    assert data["identity_caveat"] is None
    assert data["config"]["seed"] == 123
    assert len(data["decompositions"]) == 4
    assert {d["feature"] for d in data["decompositions"]} == {"x1", "x2", "x3", "x4"}
    for dec in data["decompositions"]:
        assert dec["path_min"]["direction"] == "min"
        for step in dec["path_max"]["steps"]:
            assert step["p_value"] <= 0.05
    assert data["shapley"][0]["method"] == "exact"
    assert "load" in data["timings"] and "decompose" in data["timings"]

    for figure in ("global_scores.png", "path_redundant.png", "path_synergistic.png"):
        assert (outdir / figure).stat().st_size > 0
    assert report["files"]["global_scores"] == "global_scores.csv"


def test_run_global_no_figures(synth_csv, tmp_path):
    outdir = tmp_path / "out"
    run_global(make_config(synth_csv, outdir), figures=False)
    assert not list(outdir.glob("*.png"))


def test_run_local_artifacts(synth_csv, tmp_path):
    outdir = tmp_path / "out"
    report = run_local(make_config(synth_csv, outdir))

    local_names = {
        "local_loco.csv",
        "local_u.csv",
        "local_r.csv",
        "local_s.csv",
        "local_shapley.csv",
    }
    for name in local_names:
        rows = read_csv(outdir / name)
        assert rows[0] == ["pattern", "site", "x1", "x2", "x3", "x4"]
        assert len(rows) == 401
        assert rows[1][0] == "0" and rows[1][1] == "s0"

    # column means of the local tables match the global scores
    scores = {row[0]: row for row in read_csv(outdir / "global_scores.csv")[1:]}
    locals_u = read_csv(outdir / "local_u.csv")
    for j, feature in enumerate(["x1", "x2", "x3", "x4"]):
        column = np.array([float(r[2 + j]) for r in locals_u[1:]])
        assert np.mean(column) == pytest.approx(float(scores[feature][1]), abs=1e-9)

    panel = read_csv(outdir / "panel_order.csv")
    assert panel[0] == ["panel", "rank", "feature"]
    assert len(panel) == 1 + 5 * 4  # five panels, four features each

    means = read_csv(outdir / "group_means_u.csv")
    assert means[0] == ["group", "n_patterns", "x1", "x2", "x3", "x4"]
    assert [row[0] for row in means[1:]] == ["s0", "s1", "s2"]
    counts = [int(row[1]) for row in means[1:]]
    assert sum(counts) == 400
    # group means weighted by size recover the overall mean
    column = np.array([float(r[2]) for r in locals_u[1:]])
    weighted = sum(
        int(row[1]) * float(row[2]) for row in means[1:]
    ) / 400.0
    assert weighted == pytest.approx(float(np.mean(column)), abs=1e-9)

    assert (outdir / "local_scores.png").stat().st_size > 0
    assert "local_loco" in report["files"]


def test_run_threshold_artifacts(synth_csv, tmp_path):
    outdir = tmp_path / "out"
    summary = run_threshold(
        make_config(synth_csv, outdir), "x1", discard_percents=[0, 40, 80]
    )

    sweep = read_csv(outdir / "uthresh_x1.csv")
    assert sweep[0] == [
        "discard_percent",
        "retained_n",
        "u_threshold",
        "pearson_r",
        "hist_files",
    ]
    assert len(sweep) == 4
    assert int(sweep[1][1]) == 400
    for row in sweep[1:]:
        for hist_name in row[4].split(";"):
            hist = read_csv(outdir / hist_name)
            assert hist[0] == ["bin_left", "bin_right", "count"]
            assert len(hist) == 31  # 30 bins
    total_last = sum(
        sum(int(r[2]) for r in read_csv(outdir / h)[1:])
        for h in sweep[-1][4].split(";")
    )
    assert total_last == int(sweep[-1][1])

    assert (outdir / "uthresh_x1.png").stat().st_size > 0
    data = json.loads((outdir / "uthresh_x1.json").read_text())
    assert data["feature"] == "x1"
    assert [pt["discard_percent"] for pt in data["points"]] == [0.0, 40.0, 80.0]
    assert summary["classes"] == ["Low", "Medium", "High"]


def test_threshold_class_column(synth_csv, tmp_path):
    outdir = tmp_path / "out"
    config = make_config(synth_csv, outdir, class_column="site")
    summary = run_threshold(config, "x2", discard_percents=[0])
    assert summary["classes"] == ["s0", "s1", "s2"]


def test_csv_outputs_byte_identical(synth_csv, tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    run_local(make_config(synth_csv, out_a), figures=False)
    run_local(make_config(synth_csv, out_b), figures=False)
    names = sorted(p.name for p in out_a.glob("*.csv"))
    assert names
    for name in names:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


def test_seed_flows_into_sampling(synth_csv, tmp_path):
    report_a = run_global(
        make_config(synth_csv, tmp_path / "a", shapley_method="mc"), figures=False
    )
    report_b = run_global(
        make_config(synth_csv, tmp_path / "b", shapley_method="mc", seed=321),
        figures=False,
    )
    values_a = [s["value"] for s in report_a["shapley"]]
    values_b = [s["value"] for s in report_b["shapley"]]
    assert values_a != values_b


def test_kfold_run_flags_identity_caveat(synth_csv, tmp_path):
    config = make_config(synth_csv, tmp_path / "out", scheme="kfold", kfold=4)
    report = run_global(config, figures=False)
    assert report["eval_scheme"] == "kfold(k=4, seed=123)"
    assert "out-of-fold" in report["identity_caveat"]


def test_mc_shapley_run(synth_csv, tmp_path):
    config = make_config(synth_csv, tmp_path / "out", shapley_method="mc")
    report = run_global(config, figures=False)
    assert report["shapley"][0]["method"] == "monte-carlo"
    assert report["shapley"][0]["standard_error"] > 0.0
