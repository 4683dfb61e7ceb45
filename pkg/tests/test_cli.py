import hashlib
import json
import subprocess
import sys

import pytest

from vqcqst.cli import main


def run(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "vqcqst.cli", *args], capture_output=True, text=True, cwd=cwd
    )


@pytest.fixture
def ghz_file(tmp_path):
    out = tmp_path / "ghz.json"
    res = run("gen-data", "--target", "ghz:n=3", "--seed", "5", "--out", str(out))
    assert res.returncode == 0, res.stderr
    return out


class TestGenData:
    def test_prints_path_and_checksum(self, tmp_path):
        out = tmp_path / "d.json"
        res = run("gen-data", "--target", "ghz:n=3", "--shots", "100", "--bases", "all", "--out", str(out))
        path, digest = res.stdout.split()
        assert path == str(out)
        assert digest == hashlib.sha256(out.read_bytes()).hexdigest()
        assert len(json.loads(out.read_text())["records"]) == 27

    def test_random_subset(self, tmp_path):
        out = tmp_path / "d.json"
        run("gen-data", "--target", "xxz:L=6,J=1,Delta=1,h=1", "--bases", "random:200", "--out", str(out))
        assert len(json.loads(out.read_text())["records"]) == 200

    def test_byte_identical(self, tmp_path):
        outs = [tmp_path / "a.json", tmp_path / "b.json"]
        for out in outs:
            run("gen-data", "--target", "ghz:n=3", "--seed", "9", "--out", str(out))
        assert outs[0].read_bytes() == outs[1].read_bytes()

    def test_config_file_with_override(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"target": "ghz:n=4", "shots": 10, "bases": "random:5"}))
        out = tmp_path / "d.json"
        assert main(["gen-data", "--config", str(cfg), "--shots", "20", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["n_qubits"] == 4 and doc["shots_per_basis"] == 20 and len(doc["records"]) == 5

    def test_unwritable_path(self, tmp_path):
        res = run("gen-data", "--out", str(tmp_path / "missing" / "dir" / "d.json"))
        assert res.returncode != 0 and "I/O error" in res.stderr

    def test_bad_config(self):
        res = run("gen-data", "--bases", "half")
        assert res.returncode == 2 and "bases" in res.stderr


class TestTrain:
    def test_report(self, ghz_file, tmp_path):
        out = tmp_path / "r.json"
        res = run("train", str(ghz_file), "--layers", "10", "--optimizer", "spsa", "--iterations", "40", "--out", str(out))
        assert res.returncode == 0, res.stderr
        assert res.stdout.strip() == str(out)
        doc = json.loads(out.read_text())
        assert 0 <= doc["fidelity"] <= 1 and doc["function_calls"] == 80
        assert doc["seeds"]["data"] == json.loads(ghz_file.read_text())["seed"]

    def test_low_fidelity_is_not_an_error(self, ghz_file, tmp_path):
        res = run("train", str(ghz_file), "--iterations", "0", "--out", str(tmp_path / "r.json"))
        assert res.returncode == 0

    def test_malformed_dataset(self, ghz_file, tmp_path):
        doc = json.loads(ghz_file.read_text())
        doc["records"][4]["counts"] = {"000": 1}
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(doc))
        res = run("train", str(bad), "--out", str(tmp_path / "r.json"))
        assert res.returncode == 2
        assert "records[4]" in res.stderr

    def test_parameter_shift_exact_is_deterministic(self, ghz_file, tmp_path):
        traces = []
        for name in ("a", "b"):
            out = tmp_path / f"{name}.json"
            res = run("train", str(ghz_file), "--exact-mode", "--optimizer", "parameter-shift",
                      "--layers", "2", "--iterations", "3", "--out", str(out))
            assert res.returncode == 0, res.stderr
            traces.append(json.loads(out.read_text())["loss_trace"])
        assert traces[0] == traces[1]

    def test_parameter_shift_without_exact_mode(self, ghz_file, tmp_path):
        res = run("train", str(ghz_file), "--optimizer", "parameter-shift", "--out", str(tmp_path / "r.json"))
        assert res.returncode == 2 and "exact" in res.stderr

    def test_progress_goes_to_stderr(self, ghz_file, tmp_path):
        out = tmp_path / "r.json"
        res = run("train", str(ghz_file), "--iterations", "20", "--progress-every", "10", "--out", str(out))
        assert "iter 10" in res.stderr and res.stdout.strip() == str(out)

    def test_missing_file(self, tmp_path):
        res = run("train", str(tmp_path / "nope.json"))
        assert res.returncode == 1


class TestBatchAndCompare:
    def test_batch(self, tmp_path):
        res = run("batch", "--target", "ghz:n=3", "--trials", "2", "--iterations", "10", "--output-dir", str(tmp_path / "b"))
        assert res.returncode == 0, res.stderr
        summary_path, csv_path = res.stdout.split()
        doc = json.loads(open(summary_path).read())
        assert len(doc["trials"]) == 2 and doc["csv_path"] == csv_path

    def test_compare(self, tmp_path):
        res = run("compare-optimizers", "--optimizers", "spsa,nelder-mead", "--compare-trials", "2",
                  "--layers", "2", "--iterations", "5", "--output-dir", str(tmp_path / "c"))
        assert res.returncode == 0, res.stderr
        doc = json.loads(open(res.stdout.strip()).read())
        assert set(doc["optimizers"]) == {"spsa", "nelder-mead"}

    def test_compare_single_optimizer(self):
        res = run("compare-optimizers", "--optimizers", "spsa")
        assert res.returncode == 2

    def test_compare_unknown_optimizer(self):
        res = run("compare-optimizers", "--optimizers", "spsa,powell")
        assert res.returncode == 2 and "valid names" in res.stderr
