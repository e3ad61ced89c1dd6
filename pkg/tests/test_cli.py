import json
import math

import pytest

from gtbounds.cli import _parse_n_grid, main, resolve_config, build_parser
from gtbounds.errors import ParameterError
from gtbounds.simulator import EnsembleSpec, gen_matrix, save_matrix


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


class TestThresholdCommand:
    def test_json_output(self, capsys):
        doc = run_json(
            capsys,
            "threshold", "--channel", "noiseless", "--p", "1000000", "--k", "10",
        )
        assert doc["schema_version"] == 1
        res = doc["results"]
        assert res["strong_threshold"] == pytest.approx(
            math.log(math.comb(10**6, 10)) / math.log(2), rel=1e-6
        )
        # Weak threshold lands within 5% of k log2(p/k) for the noiseless model.
        target = 10 * math.log2(10**6 / 10)
        weak = res["weak_threshold"]["n_threshold"]
        assert abs(weak - target) / target < 0.05
        assert res["capacity"] >= res["i_star"] - 1e-9

    def test_csv_format(self, capsys):
        code, out, err = run_cli(
            capsys,
            "threshold", "--channel", "symmetric:0.11", "--p", "100", "--k", "3",
            "--format", "csv",
        )
        assert code == 0
        lines = out.splitlines()
        comments = [ln for ln in lines if ln.startswith("#")]
        assert any("strong_threshold" in ln for ln in comments)
        header_idx = next(i for i, ln in enumerate(lines) if not ln.startswith("#"))
        assert lines[header_idx] == "ell,nu,mi,delta_ell,ratio"
        assert len(lines) - header_idx - 1 == 3  # one row per ell

    def test_mixture_block(self, capsys):
        doc = run_json(
            capsys,
            "threshold", "--channel", "noiseless", "--p", "60", "--k", "2",
            "--mixture-atoms", "2",
        )
        mix = doc["results"]["mixture_threshold"]
        assert mix["n_threshold"] <= doc["results"]["weak_threshold"]["n_threshold"] + 1e-9

    def test_plot_written(self, capsys, tmp_path):
        img = tmp_path / "perell.png"
        code, _, err = run_cli(
            capsys,
            "threshold", "--channel", "noiseless", "--p", "50", "--k", "2",
            "--plot", str(img), "--output", str(tmp_path / "out.json"),
        )
        assert code == 0, err
        assert img.stat().st_size > 0

    def test_missing_required(self, capsys):
        code, _, err = run_cli(capsys, "threshold", "--channel", "noiseless", "--p", "10")
        assert code == 1
        assert "--k" in err

    def test_bad_channel(self, capsys):
        code, _, err = run_cli(
            capsys, "threshold", "--channel", "symmetric:0.7", "--p", "10", "--k", "2"
        )
        assert code == 1
        assert "error" in err


class TestBoundCommand:
    def test_exhaustive_runs_without_seed(self, capsys, tmp_path):
        path = tmp_path / "m.txt"
        save_matrix(gen_matrix(EnsembleSpec("iid", nu=1.0, seed=1), 4, 12, 2), path)
        doc = run_json(
            capsys,
            "bound", "--channel", "noiseless", "--k", "2", "--matrix", str(path),
            "--sampler", "exhaustive",
        )
        res = doc["results"]
        assert 0.0 <= res["value"] <= 1.0
        assert res["matrix_shape"] == [4, 12]

    def test_mc_requires_seed(self, capsys, tmp_path):
        path = tmp_path / "m.txt"
        save_matrix(gen_matrix(EnsembleSpec("iid", nu=1.0, seed=1), 4, 12, 2), path)
        code, _, err = run_cli(
            capsys,
            "bound", "--channel", "noiseless", "--k", "2", "--matrix", str(path),
            "--sampler", "mc",
        )
        assert code == 1
        assert "seed" in err

    def test_matrix_parse_error(self, capsys, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("oops\n")
        code, _, err = run_cli(
            capsys,
            "bound", "--channel", "noiseless", "--k", "2", "--matrix", str(path),
            "--sampler", "exhaustive",
        )
        assert code == 1


class TestSimulateCommand:
    def test_trivial_all_defective(self, capsys):
        doc = run_json(
            capsys,
            "simulate", "--channel", "noiseless", "--p", "4", "--k", "4",
            "--n", "2", "--ensemble", "iid:1.0", "--trials", "20", "--seed", "0",
        )
        assert doc["results"]["estimate"]["pe_hat"] == 0.0

    def test_matrix_file_input_and_save(self, capsys, tmp_path):
        src = tmp_path / "m.txt"
        copy = tmp_path / "copy.txt"
        save_matrix(gen_matrix(EnsembleSpec("iid", nu=1.0, seed=4), 6, 8, 2), src)
        doc = run_json(
            capsys,
            "simulate", "--channel", "symmetric:0.11", "--k", "2",
            "--matrix", str(src), "--trials", "50", "--seed", "7",
            "--save-matrix", str(copy),
        )
        assert doc["config"]["p"] == 8 and doc["config"]["n"] == 6
        assert copy.read_text() == src.read_text()

    def test_infodensity_decoder_needs_gamma(self, capsys):
        code, _, err = run_cli(
            capsys,
            "simulate", "--channel", "noiseless", "--p", "6", "--k", "2",
            "--n", "4", "--ensemble", "iid:1.0", "--decoder", "infodensity",
            "--trials", "5", "--seed", "0",
        )
        assert code == 1
        assert "gamma" in err

    def test_infodensity_decoder_runs(self, capsys):
        doc = run_json(
            capsys,
            "simulate", "--channel", "noiseless", "--p", "6", "--k", "2",
            "--n", "8", "--ensemble", "iid:1.0", "--decoder", "infodensity",
            "--gamma", "-1000", "--trials", "40", "--seed", "0",
        )
        assert 0.0 <= doc["results"]["estimate"]["pe_hat"] <= 1.0

    def test_seed_auto(self, capsys):
        code, out, err = run_cli(
            capsys,
            "simulate", "--channel", "noiseless", "--p", "4", "--k", "2",
            "--n", "3", "--ensemble", "iid:1.0", "--trials", "5", "--seed", "auto",
        )
        assert code == 0
        assert "seed auto ->" in err
        assert isinstance(json.loads(out)["config"]["seed"], int)


class TestSweepCommand:
    def test_csv_and_plot(self, capsys, tmp_path):
        img = tmp_path / "sweep.png"
        code, out, err = run_cli(
            capsys,
            "sweep", "--channel", "noiseless", "--p", "10", "--k", "2",
            "--n-grid", "0,20", "--ensemble", "iid:0.7", "--trials", "100",
            "--seed", "3", "--plot", str(img),
        )
        assert code == 0, err
        lines = out.splitlines()
        assert any(ln.startswith("# strong_threshold=") for ln in lines)
        assert any(ln.startswith("# crossing_pe_0.5=") for ln in lines)
        header_idx = next(i for i, ln in enumerate(lines) if not ln.startswith("#"))
        assert lines[header_idx] == "n,trials,errors,pe_hat,ci_low,ci_high"
        assert len(lines) - header_idx - 1 == 2
        assert img.stat().st_size > 0

    def test_range_grid_parsing(self):
        assert _parse_n_grid("4:10:2") == [4, 6, 8, 10]
        assert _parse_n_grid("4:6") == [4, 5, 6]
        assert _parse_n_grid("3,9") == [3, 9]
        with pytest.raises(ParameterError):
            _parse_n_grid("1:2:3:4")


class TestVerifyCommand:
    def test_small_grid(self, capsys):
        doc = run_json(
            capsys, "verify", "--grid", "small", "--trials", "100", "--seed", "42"
        )
        res = doc["results"]
        assert res["passed"] is True
        assert res["tv_chain"]["passed"] is True
        assert res["mi_continuity"]["violations"] == []


class TestConfigResolution:
    def test_file_then_flag_precedence(self, capsys, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"p": 100, "k": 2, "channel": "noiseless", "eta": 0.2}))
        doc = run_json(capsys, "threshold", "--config", str(cfg_path), "--eta", "0.0")
        assert doc["config"]["eta"] == 0.0
        assert doc["config"]["p"] == 100

    def test_defaults_applied(self):
        args = build_parser().parse_args(["threshold", "--channel", "noiseless",
                                          "--p", "10", "--k", "2"])
        cfg = resolve_config(args)
        assert cfg["eta"] == 0.0 and cfg["numerator"] == "ell_log"

    def test_config_must_be_object(self, capsys, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text("[1,2]")
        code, _, err = run_cli(capsys, "threshold", "--config", str(cfg_path))
        assert code == 1

    def test_output_file(self, capsys, tmp_path):
        out_path = tmp_path / "res.json"
        code, out, _ = run_cli(
            capsys,
            "threshold", "--channel", "noiseless", "--p", "10", "--k", "2",
            "--output", str(out_path),
        )
        assert code == 0 and out == ""
        assert json.loads(out_path.read_text())["schema_version"] == 1

    def test_unknown_command_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["nonsense"])
        assert exc.value.code == 2


def test_determinism_across_invocations(capsys):
    argv = [
        "simulate", "--channel", "symmetric:0.11", "--p", "8", "--k", "2",
        "--n", "10", "--ensemble", "iid:1.0", "--trials", "60", "--seed", "5",
    ]
    a = run_json(capsys, *argv)
    b = run_json(capsys, *argv)
    assert a == b
