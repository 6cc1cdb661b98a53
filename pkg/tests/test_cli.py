"""Command-line interface: exit codes, embedded config, determinism."""

import json
import pathlib
import subprocess
import sys

import numpy as np
import pytest

from nearcomm.cli import EXIT_ERROR, EXIT_FLAGGED, EXIT_OK, RunConfig, main
from nearcomm.ensembles import instance_rng, pair_instance
from nearcomm.serialize import matrix_to_json

GAUSSIAN_FIXTURE = pathlib.Path(__file__).resolve().parents[1] / "demos" \
    / "measure_gaussian16.json"


def write_pair(path, n=6, nu=1e-3, seed=42):
    inst = pair_instance(n, nu, instance_rng(seed, 0, 0, 0))
    payload = {"a": matrix_to_json(inst.a), "b": matrix_to_json(inst.b)}
    path.write_text(json.dumps(payload))
    return inst


def header_config(path):
    first = path.read_text().splitlines()[0]
    assert first.startswith("# config: ")
    return json.loads(first[len("# config: "):])


class TestRunConfig:
    def test_rejects_unknown_keys(self):
        with pytest.raises(ValueError, match="unknown config keys.*bogus"):
            RunConfig.from_mapping({"command": "sweep", "bogus": 1})

    def test_rejects_unknown_command(self):
        with pytest.raises(ValueError, match="unknown command"):
            RunConfig(command="dance")

    def test_field_validation(self):
        with pytest.raises(ValueError, match="eps"):
            RunConfig(command="correct", eps=-1.0)
        with pytest.raises(ValueError, match="trials"):
            RunConfig(command="sweep", trials=0)
        with pytest.raises(ValueError, match="nonzero"):
            RunConfig(command="kms", c=0.0)

    def test_embed_payload_drops_execution_fields(self):
        cfg = RunConfig(command="sweep", output_path="/tmp/x.csv", workers=4,
                        dims=(8,), nu_targets=(1e-2,))
        payload = cfg.embed_payload()
        assert "workers" not in payload and "output_path" not in payload
        assert payload["dims"] == [8]


class TestCorrectCommand:
    def test_commuting_pair(self, tmp_path):
        inp, out = tmp_path / "pair.json", tmp_path / "res.json"
        write_pair(inp, nu=0.0)
        code = main(["correct", "--input", str(inp), "--output", str(out)])
        assert code == EXIT_OK
        result = json.loads(out.read_text())
        assert result["result"]["dist_a"] < 1e-8
        assert result["result"]["dist_b"] < 1e-8
        assert not result["result"]["out_of_regime"]
        assert set(result) == {"config", "constants", "result"}
        assert result["constants"]["k1"] > 0

    def test_small_commutator(self, tmp_path):
        inp, out = tmp_path / "pair.json", tmp_path / "res.json"
        write_pair(inp, nu=1e-3)
        code = main(["correct", "--input", str(inp), "--output", str(out),
                     "--eps", "0.05"])
        assert code == EXIT_OK
        result = json.loads(out.read_text())["result"]
        assert result["nu"] == pytest.approx(1e-3, rel=0.06)
        assert result["block_count"] == len(result["block_comms"])

    def test_out_of_regime_flag(self, tmp_path):
        inp, out = tmp_path / "pair.json", tmp_path / "res.json"
        write_pair(inp, n=8, nu=0.5)
        code = main(["correct", "--input", str(inp), "--output", str(out)])
        assert code == EXIT_FLAGGED
        assert json.loads(out.read_text())["result"]["out_of_regime"]

    def test_missing_field_is_named(self, tmp_path, capsys):
        inp, out = tmp_path / "pair.json", tmp_path / "res.json"
        inp.write_text(json.dumps({"a": matrix_to_json(np.eye(2))}))
        code = main(["correct", "--input", str(inp), "--output", str(out)])
        assert code == EXIT_ERROR
        assert "'b'" in capsys.readouterr().err

    def test_byte_identical_reruns(self, tmp_path):
        inp = tmp_path / "pair.json"
        write_pair(inp, nu=1e-3)
        outs = []
        for name in ("r1.json", "r2.json"):
            out = tmp_path / name
            assert main(["correct", "--input", str(inp),
                         "--output", str(out)]) == EXIT_OK
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestSweepCommand:
    def test_single_commuting_row(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        code = main(["sweep", "--output", str(out), "--dims", "4",
                     "--nu-targets", "0", "--trials", "1"])
        assert code == EXIT_OK
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# config: ")
        assert lines[1].startswith("# constants: ")
        assert lines[2].split(",")[0] == "n"
        assert len(lines) == 4
        assert float(lines[3].split(",")[3]) <= 1e-8
        assert "medians" in capsys.readouterr().out

    def test_byte_identical_across_workers(self, tmp_path):
        texts = []
        for name, workers in (("s1.csv", None), ("s2.csv", "3")):
            out = tmp_path / name
            args = ["sweep", "--output", str(out), "--dims", "6",
                    "--nu-targets", "1e-2,1e-3", "--trials", "2"]
            if workers:
                args += ["--workers", workers]
            assert main(args) == EXIT_OK
            texts.append(out.read_bytes())
        assert texts[0] == texts[1]

    def test_embedded_config_omits_workers(self, tmp_path):
        out = tmp_path / "sweep.csv"
        main(["sweep", "--output", str(out), "--dims", "4",
              "--nu-targets", "1e-3", "--trials", "1", "--workers", "2"])
        cfg = header_config(out)
        assert "workers" not in cfg and "output_path" not in cfg
        assert cfg["seed"] == 20240915


class TestKmsCommand:
    def test_default_small_run(self, tmp_path, capsys):
        out = tmp_path / "kms.csv"
        code = main(["kms", "--output", str(out), "--trials", "4",
                     "--c", "-1.0", "--seed", "3"])
        assert code == EXIT_OK
        assert "worst_margin" in capsys.readouterr().out
        lines = out.read_text().splitlines()
        assert lines[2].split(",")[0] == "seed"

    def test_equal_perturbations_zero_lhs(self, tmp_path):
        out = tmp_path / "kms.csv"
        code = main(["kms", "--output", str(out), "--trials", "3",
                     "--nu", "0", "--seed", "4"])
        assert code == EXIT_OK
        rows = out.read_text().splitlines()[3:]
        assert all(float(r.split(",")[4]) < 1e-10 for r in rows)

    def test_byte_identical_across_workers(self, tmp_path):
        texts = []
        for name, workers in (("k1.csv", None), ("k2.csv", "2")):
            out = tmp_path / name
            args = ["kms", "--output", str(out), "--trials", "4", "--seed", "9"]
            if workers:
                args += ["--workers", workers]
            assert main(args) == EXIT_OK
            texts.append(out.read_bytes())
        assert texts[0] == texts[1]


class TestCarPathCommand:
    def test_gaussian_fixture(self, tmp_path, capsys):
        out = tmp_path / "trace.csv"
        code = main(["car-path", "--input", str(GAUSSIAN_FIXTURE),
                     "--output", str(out)])
        assert code == EXIT_OK
        assert "max_drift" in capsys.readouterr().out
        rows = out.read_text().splitlines()
        assert rows[2].startswith("stage,t,mean,variance,support_size")
        assert rows[-1].split(",")[4] == "3"  # final support size

    def test_single_atom_guidance(self, tmp_path, capsys):
        inp, out = tmp_path / "m.json", tmp_path / "trace.csv"
        inp.write_text(json.dumps({"atoms": [0.0, 1.0], "weights": [0.5, 0.5],
                                   "xi_re": [1.4142135623730951, 0.0],
                                   "xi_im": [0.0, 0.0]}))
        code = main(["car-path", "--input", str(inp), "--output", str(out)])
        assert code == EXIT_ERROR
        err = capsys.readouterr().err
        assert "degenerate measure" in err and "single-atom" in err


class TestCalibrateCommand:
    def test_writes_to_env_override(self, tmp_path, monkeypatch, capsys):
        from nearcomm.calibration import DATA_ENV_VAR, load_calibration
        monkeypatch.setenv(DATA_ENV_VAR, str(tmp_path))
        code = main(["calibrate", "--dims", "4", "--trials", "1", "--seed", "2"])
        assert code == EXIT_OK
        written = tmp_path / "calibration.json"
        assert written.exists()
        payload = json.loads(written.read_text())
        assert payload["meta"]["dims"] == [4]
        assert str(written) in capsys.readouterr().out
        monkeypatch.delenv(DATA_ENV_VAR)
        load_calibration.cache_clear()

    def test_explicit_output_path(self, tmp_path):
        out = tmp_path / "table.json"
        code = main(["calibrate", "--dims", "4", "--trials", "1",
                     "--seed", "2", "--output", str(out)])
        assert code == EXIT_OK
        assert json.loads(out.read_text())["meta"]["trials"] == 1


class TestModuleEntryPoint:
    def test_python_dash_m(self, tmp_path):
        out = tmp_path / "sweep.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "nearcomm.cli", "sweep", "--output",
             str(out), "--dims", "4", "--nu-targets", "1e-3", "--trials", "1"],
            capture_output=True, text=True)
        assert proc.returncode == EXIT_OK
        assert "medians" in proc.stdout
        assert out.exists()
