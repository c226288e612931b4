"""Command-line interface: subcommands, exit codes, artifact emission."""

import csv
import json
from pathlib import Path

import pytest

from locodecomp.cli import main


@pytest.fixture(scope="module")
def synth_csv(tmp_path_factory):
    out = tmp_path_factory.mktemp("clidata") / "table.csv"
    code = main(
        [
            "synth",
            "--family",
            "correlated-block",
            "--n",
            "300",
            "--features",
            "4",
            "--seed",
            "5",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    return out


def write_config(tmp_path, synth_csv, outdir, extra=""):
    path = tmp_path / "run.conf"
    path.write_text(
        f"input = {synth_csv}\n"
        "target = y\n"
        "seed = 77\n"
        "n_surrogates = 25\n"
        "n_permutations = 120\n"
        f"outdir = {outdir}\n" + extra
    )
    return path


def test_synth_writes_table_and_targets(synth_csv):
    with open(synth_csv, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x1", "x2", "x3", "x4", "y"]
    assert len(rows) == 301
    targets = json.loads(
        synth_csv.with_name(synth_csv.stem + "_targets.json").read_text()
    )
    assert [t["name"] for t in targets] == ["x1", "x2", "x3", "x4"]
    assert all("unique" in t for t in targets)


def test_synth_rejects_bad_family(tmp_path, capsys):
    with pytest.raises(SystemExit):
        main(["synth", "--family", "bogus", "--out", str(tmp_path / "x.csv")])


def test_analyze_end_to_end(tmp_path, synth_csv):
    outdir = tmp_path / "out"
    config = write_config(tmp_path, synth_csv, outdir)
    assert main(["analyze", "--config", str(config)]) == 0
    for name in (
        "report.json",
        "global_scores.csv",
        "path_redundant.csv",
        "path_synergistic.csv",
        "global_scores.png",
    ):
        assert (outdir / name).exists(), name


def test_local_end_to_end(tmp_path, synth_csv):
    outdir = tmp_path / "out"
    config = write_config(tmp_path, synth_csv, outdir)
    assert main(["local", "--config", str(config), "--no-figures"]) == 0
    for name in (
        "local_loco.csv",
        "local_u.csv",
        "local_r.csv",
        "local_s.csv",
        "local_shapley.csv",
        "panel_order.csv",
    ):
        assert (outdir / name).exists(), name
    assert not (outdir / "local_scores.png").exists()


def test_uthresh_end_to_end(tmp_path, synth_csv):
    outdir = tmp_path / "out"
    config = write_config(tmp_path, synth_csv, outdir)
    code = main(
        [
            "uthresh",
            "--config",
            str(config),
            "--feature",
            "x1",
            "--discard",
            "0,30,60",
        ]
    )
    assert code == 0
    rows = list(csv.reader(open(outdir / "uthresh_x1.csv")))
    assert len(rows) == 4
    assert (outdir / "uthresh_x1.png").exists()


def test_oracle_end_to_end(tmp_path, synth_csv):
    outdir = tmp_path / "out"
    config = write_config(tmp_path, synth_csv, outdir)
    assert main(["oracle", "--config", str(config), "--feature", "x1"]) == 0
    rows = list(csv.reader(open(outdir / "oracle_check.csv")))
    assert rows[0][0] == "feature"
    assert len(rows) == 2


def test_seed_override_and_determinism(tmp_path, synth_csv):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    config_a = write_config(tmp_path, synth_csv, out_a)
    assert main(["analyze", "--config", str(config_a), "--no-figures"]) == 0
    config_b = tmp_path / "later.conf"
    config_b.write_text(config_a.read_text().replace(str(out_a), str(out_b)))
    assert (
        main(["analyze", "--config", str(config_b), "--no-figures", "--seed", "77"])
        == 0
    )
    for name in ("global_scores.csv", "path_redundant.csv", "path_synergistic.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_missing_config_key_exits_1(tmp_path, synth_csv):
    config = tmp_path / "bad.conf"
    config.write_text(f"input = {synth_csv}\ntarget = y\n")  # no seed
    assert main(["analyze", "--config", str(config)]) == 1


def test_unreadable_config_exits_1(tmp_path):
    assert main(["analyze", "--config", str(tmp_path / "missing.conf")]) == 1


def test_missing_input_exits_2(tmp_path):
    config = tmp_path / "run.conf"
    config.write_text("input = /no/such/table.csv\ntarget = y\nseed = 1\n")
    assert main(["analyze", "--config", str(config)]) == 2


def test_bad_column_exits_2(tmp_path, synth_csv):
    config = tmp_path / "run.conf"
    config.write_text(
        f"input = {synth_csv}\ntarget = nope\nseed = 1\noutdir = {tmp_path / 'o'}\n"
    )
    assert main(["analyze", "--config", str(config)]) == 2


def test_numeric_failure_exits_3(tmp_path, synth_csv, monkeypatch):
    from locodecomp.errors import NumericError
    import locodecomp.cli as cli

    def boom(config, figures=True):
        raise NumericError("synthetic failure")

    monkeypatch.setattr(cli, "run_global", boom)
    config = write_config(tmp_path, synth_csv, tmp_path / "out")
    assert main(["analyze", "--config", str(config)]) == 3


def test_unknown_feature_exits_2(tmp_path, synth_csv):
    config = write_config(tmp_path, synth_csv, tmp_path / "out")
    code = main(["uthresh", "--config", str(config), "--feature", "zz"])
    assert code == 2
