import csv
import io
import os
import subprocess
import sys

import pytest

from gaitse.cli import main
from gaitse.entropy import profiles_from_csv


@pytest.fixture(scope="session")
def workspace(tmp_path_factory):
    """A two-day synthetic corpus and its entropy table, made through the CLI."""
    root = tmp_path_factory.mktemp("cli")
    corpus = root / "corpus"
    assert main(["synth", "--subjects", "3", "--trials", "3", "--days", "2", "--duration", "4",
                 "--seed", "3", "--out-dir", str(corpus), "--out", str(root / "synth.csv")]) == 0
    table = root / "se.csv"
    assert main(["entropy", str(corpus / "manifest.csv"), "--trim", "--out", str(table)]) == 0
    return root, corpus / "manifest.csv", table


def _run(tmp_path, name, argv):
    out = tmp_path / name
    assert main([*argv, "--out", str(out)]) == 0, argv
    return out.read_bytes()


def _twice(tmp_path, argv):
    a = _run(tmp_path, "a.out", argv)
    b = _run(tmp_path, "b.out", argv)
    assert a == b, argv
    return a


def _commands(manifest, table):
    m, t = str(manifest), str(table)
    return [
        ["validate", m],
        ["trim", m],
        ["tilt", m, "--params", "V2"],
        ["entropy", m, "--joints", "middle5", "--r", "0.01"],
        ["entropy", m, "--gait-params", "V1,V2,V3"],
        ["compare", t],
        ["anova", t, "--channel", "SpineBase:Y"],
        ["grr", t, "--channel", "SpineBase:Y"],
        ["features", t, "--labeling", "five"],
        ["cv", t, "--model", "knn"],
        ["cv", t, "--model", "logit", "--report", "confusion"],
        ["cv", t, "--model", "rf", "--trees", "10", "--report", "folds"],
        ["cv", t, "--model", "svm", "--drop", "C"],
        ["rank", t],
        ["plot", "star", t],
        ["plot", "box", t, "--channel", "SpineBase:Y", "--group-by", "subject"],
        ["plot", "interval", t, "--device", "KB"],
        ["plot", "bar", t, "--models", "knn,logit"],
    ]


def test_every_subcommand_is_deterministic(workspace, tmp_path):
    _, manifest, table = workspace
    for argv in _commands(manifest, table):
        data = _twice(tmp_path, argv)
        assert data, argv


def test_synth_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["synth", "--subjects", "2", "--trials", "1", "--duration", "3", "--seed", "9",
                     "--out-dir", str(tmp_path / d), "--out", str(tmp_path / f"{d}.csv")]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert len(files) == 1 + 2 * 2 * 5
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_worker_count_does_not_change_output(workspace, tmp_path):
    _, manifest, table = workspace
    one = _run(tmp_path, "one.csv", ["entropy", str(manifest), "--trim", "--jobs", "1"])
    two = _run(tmp_path, "two.csv", ["entropy", str(manifest), "--trim", "--jobs", "2"])
    assert one == two == table.read_bytes()
    t1 = _run(tmp_path, "t1.csv", ["trim", str(manifest), "--jobs", "1"])
    t2 = _run(tmp_path, "t2.csv", ["trim", str(manifest), "--jobs", "2"])
    assert t1 == t2


@pytest.mark.parametrize("argv", [
    ["cv", "{t}", "--model", "logit"],
    ["plot", "star", "{t}"],
    ["anova", "{t}", "--channel", "Head:Y"],
])
def test_thread_settings_do_not_change_output(workspace, argv):
    _, _, table = workspace
    argv = [a.format(t=table) for a in argv]
    outs = []
    for threads in ("1", "4"):
        env = dict(os.environ, OMP_NUM_THREADS=threads, OPENBLAS_NUM_THREADS=threads, MKL_NUM_THREADS=threads)
        proc = subprocess.run([sys.executable, "-m", "gaitse.cli", *argv], env=env, capture_output=True, check=True)
        outs.append(proc.stdout)
    assert outs[0] == outs[1] and outs[0]


def test_entropy_table_contents(workspace):
    root, _, table = workspace
    profiles = profiles_from_csv(table.read_text())
    assert len(profiles) == 3 * 5 * 3 * 2
    assert all(len(p.entries) == 15 for p in profiles)
    rows = list(csv.DictReader(io.StringIO((root / "synth.csv").read_text())))
    assert len(rows) == len(profiles)


def test_stdout_and_metrics(workspace, capsysbinary):
    _, _, table = workspace
    assert main(["cv", str(table), "--model", "knn"]) == 0
    text = capsysbinary.readouterr().out.decode()
    metrics = dict(row for row in csv.reader(io.StringIO(text)))
    assert metrics["model"] == "knn(k=1)" and metrics["instances"] == "90"
    assert float(metrics["accuracy"]) >= 0.9


def test_grr_and_anova_outputs(workspace, tmp_path):
    _, _, table = workspace
    rows = list(csv.DictReader(io.StringIO(_run(tmp_path, "a.csv", ["anova", str(table), "--channel", "Head:Y",
                                                                   "--interaction", "yes"]).decode())))
    assert [r["source"] for r in rows] == ["Day", "Subject", "Day*Subject", "Repeatability", "Total"]
    assert [int(r["df"]) for r in rows] == [1, 2, 2, 12, 17]
    grr = list(csv.DictReader(io.StringIO(_run(tmp_path, "g.csv", ["grr", str(table), "--channel", "Head:Y"]).decode())))
    assert {"Repeatability", "Total Variation"} <= {r["source"] for r in grr}


def test_exit_codes(workspace, tmp_path, capsys):
    _, manifest, table = workspace
    assert main([]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["entropy", str(manifest), "--r", "0.1", "--r-auto"]) == 2
    assert main(["cv", str(table), "--model", "tree"]) == 2
    assert main(["cv", str(table), "--folds", "0"]) == 2
    # validation failures
    bad = tmp_path / "manifest.csv"
    bad.write_text(manifest.read_text().replace("S01_NW_Sagittal_d1_t1.csv", "missing.csv"))
    for name in os.listdir(manifest.parent):
        if name.endswith(".csv") and name != "manifest.csv":
            (tmp_path / name).write_bytes((manifest.parent / name).read_bytes())
    assert main(["validate", str(bad)]) == 1
    assert "missing.csv" in capsys.readouterr().err
    assert main(["cv", str(table), "--model", "svm", "--labeling", "five"]) == 1
    assert main(["anova", str(table), "--channel", "Elbow:Q"]) == 2  # bad argument value
    assert main(["compare", str(tmp_path / "nope.csv")]) == 1
