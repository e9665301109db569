import csv
import hashlib
import json
import math
import subprocess
import sys

import pytest

from lcavarsel import cli
from lcavarsel.data import load_csv
from lcavarsel.lca import FitFailure

from oracles import independence_bic


def run(*argv):
    try:
        return cli.main([str(a) for a in argv])
    except SystemExit as exc:  # argparse usage errors
        return exc.code


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert run("simulate", "--scenario", 1, "--n", 500, "--reps", 3, "--seed", 7, "--out-dir", out) == 0
    return out


def first_csv(d):
    return sorted(d.glob("*.csv"))[0]


class TestSimulate:
    def test_files_and_manifest(self, sim_dir):
        assert len(list(sim_dir.glob("scenario1_n500_rep*.csv"))) == 3
        assert len(list(sim_dir.glob("scenario1_n500_rep*.json"))) == 3
        manifest = json.loads((sim_dir / "manifest.json").read_text())
        assert manifest["command"] == "simulate" and manifest["seed"] == 7
        assert manifest["tool_version"]

    def test_rerun_byte_identical(self, sim_dir, tmp_path):
        assert run("simulate", "--scenario", 1, "--n", 500, "--reps", 3, "--seed", 7, "--out-dir", tmp_path) == 0
        for f in sim_dir.glob("scenario1_*"):
            assert (tmp_path / f.name).read_bytes() == f.read_bytes()

    def test_scenario2_binary(self, tmp_path):
        assert run("simulate", "--scenario", 2, "--n", 1500, "--reps", 1, "--out-dir", tmp_path) == 0
        with first_csv(tmp_path).open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [f"X{j}" for j in range(1, 11)]
        assert {v for r in rows[1:] for v in r} <= {"1", "2"}
        assert len(rows) == 1501

    def test_invalid_scenario(self, tmp_path, capsys):
        assert run("simulate", "--scenario", 3, "--n", 10, "--out-dir", tmp_path) == 1
        assert "invalid choice" in capsys.readouterr().err

    def test_zero_reps(self, tmp_path):
        assert run("simulate", "--scenario", 1, "--n", 10, "--reps", 0, "--out-dir", tmp_path) == 1


class TestFit:
    def test_one_class_closed_form(self, sim_dir, tmp_path, capsys):
        data = first_csv(sim_dir)
        assert run("fit", data, "--g-max", 1, "--out-dir", tmp_path) == 0
        assert capsys.readouterr().out.startswith("g=1 ")
        model = json.loads((tmp_path / "model.json").read_text())
        d = load_csv(data)
        assert model["bic"] == pytest.approx(independence_bic(d.codes, d.n_categories), abs=1e-8)

    def test_clustering_variables_with_labels(self, sim_dir, tmp_path, capsys):
        data = first_csv(sim_dir)
        labels = data.with_suffix(".json")
        code = run("fit", data, "--vars", "X1,X2,X3,X4", "--g-max", 7, "--labels", labels, "--out-dir", tmp_path)
        assert code == 0
        out = capsys.readouterr().out
        assert out.startswith("g=3 ") and "n_params=" in out and "ari=" in out
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["input_digest"][str(data)] == hashlib.sha256(data.read_bytes()).hexdigest()

    def test_missing_file(self, tmp_path, capsys):
        missing = tmp_path / "nope.csv"
        assert run("fit", missing, "--out-dir", tmp_path) == 1
        assert str(missing) in capsys.readouterr().err

    def test_unknown_variable(self, sim_dir, tmp_path):
        assert run("fit", first_csv(sim_dir), "--vars", "X1,Q", "--out-dir", tmp_path) == 1

    def test_fit_failure_exit_code(self, sim_dir, tmp_path, monkeypatch):
        def fail(*args, **kwargs):
            raise FitFailure("forced")

        monkeypatch.setattr(cli, "best_lca_over_g", fail)
        assert run("fit", first_csv(sim_dir), "--out-dir", tmp_path) == 2


class TestSelect:
    def test_outputs(self, sim_dir, tmp_path, capsys):
        data = first_csv(sim_dir)
        trace = tmp_path / "t" / "trace.jsonl"
        code = run("select", data, "--mode", "swap", "--g-max", 3, "--restarts", 3, "--trace", trace,
                   "--out-dir", tmp_path)
        assert code == 0
        out = capsys.readouterr().out
        assert out.startswith("selected: ")
        lines = trace.read_text().splitlines()
        summary = json.loads(lines[-1])["summary"]
        assert len(lines) - 1 >= 4 * summary["n_cycles"]
        roles = json.loads((tmp_path / "roles.json").read_text())
        assert roles["clustering"] == summary["selected"]
        assert json.loads((tmp_path / "model.json").read_text())["vars"] == summary["selected"]
        assert json.loads((tmp_path / "manifest.json").read_text())["config"]["mode"] == "swap"

    def test_one_variable(self, tmp_path, capsys):
        p = tmp_path / "one.csv"
        p.write_text("a\nx\ny\nx\n")
        assert run("select", p, "--out-dir", tmp_path) == 1
        assert "need >= 2 variables" in capsys.readouterr().err

    def test_bad_mode(self, sim_dir, tmp_path):
        assert run("select", first_csv(sim_dir), "--mode", "greedy", "--out-dir", tmp_path) == 1


class TestAssociate:
    def test_matrix(self, sim_dir, tmp_path):
        code = run("associate", first_csv(sim_dir), "--clustering", "X1,X2,X3,X4",
                   "--discarded", "X5,X6,X7,X8,X9,X10,X11,X12", "--out-dir", tmp_path)
        assert code == 0
        with (tmp_path / "association.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["discarded", "X1", "X2", "X3", "X4"]
        values = {r[0]: [float(v) for v in r[1:]] for r in rows[1:]}
        for i, name in enumerate(["X5", "X6", "X7", "X8"]):
            assert values[name][i] > 0
        assert json.loads((tmp_path / "association.json").read_text())["selected"] == ["X1", "X2", "X3", "X4"]

    def test_unknown_name(self, sim_dir, tmp_path):
        assert run("associate", first_csv(sim_dir), "--clustering", "X1", "--discarded", "X99",
                   "--out-dir", tmp_path) == 1

    def test_empty_discarded(self, sim_dir, tmp_path, capsys):
        assert run("associate", first_csv(sim_dir), "--clustering", "X1", "--discarded", "",
                   "--out-dir", tmp_path) == 1
        assert "both role sets must be non-empty" in capsys.readouterr().err


class TestReplicate:
    def test_zero_reps(self, tmp_path):
        assert run("replicate", "--scenario", 1, "--n-list", 100, "--reps", 0, "--out-dir", tmp_path) == 1

    def test_bad_n_list(self, tmp_path):
        assert run("replicate", "--scenario", 1, "--n-list", "10,x", "--reps", 1, "--out-dir", tmp_path) == 1

    def test_small_run(self, tmp_path):
        code = run("replicate", "--scenario", 2, "--n-list", "150", "--reps", 2, "--modes", "swap",
                   "--g-max", 2, "--restarts", 2, "--seed", 3, "--out-dir", tmp_path)
        assert code == 0
        for name in ("selection_frequencies.csv", "top_sets.csv", "ari.csv", "ari_summary.csv", "manifest.json"):
            assert (tmp_path / name).exists()
        with (tmp_path / "selection_frequencies.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 10 and all(0 <= float(r["frequency"]) <= 1 for r in rows)
        with (tmp_path / "ari.csv").open() as fh:
            ari_rows = list(csv.DictReader(fh))
        assert len(ari_rows) == 2
        assert math.isnan(float(ari_rows[0]["selInd"]))


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "lcavarsel", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "simulate" in out.stdout
