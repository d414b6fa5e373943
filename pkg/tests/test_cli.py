"""Config parsing, subcommand execution, artifact files, exit codes."""

import json

import numpy as np
import pytest

from qwave.cli import (
    EXIT_CONFIG,
    EXIT_GUARD,
    EXIT_IO,
    EXIT_OK,
    ExperimentConfig,
    apply_overrides,
    execute,
    main,
    parse_config,
)
from qwave.errors import ConfigError

FAST = [
    "N = 256", "r_max = 8", "T = 2", "sample_dt = 0.5",
    "state_stride = 2", "char_seeds = 0,2", "refine = false",
    "per_region = 4",
]


def fast_cfg(*extra):
    return parse_config("\n".join(FAST + list(extra)))


class TestParseConfig:
    def test_empty_gives_defaults(self):
        cfg = parse_config("")
        assert cfg == ExperimentConfig()

    def test_single_key(self):
        cfg = parse_config("epsilon = 0.02\n")
        assert cfg.epsilon == 0.02
        assert cfg.N == ExperimentConfig().N

    def test_comments_and_blanks(self):
        cfg = parse_config("# a comment\n\nepsilon = 0.5  # trailing\n")
        assert cfg.epsilon == 0.5

    def test_cfl_constraint_named(self):
        with pytest.raises(ConfigError, match=r"\(0, 1\)") as exc:
            parse_config("cfl = 1.5")
        assert "line 1" in str(exc.value)

    def test_unknown_key_line_number(self):
        with pytest.raises(ConfigError, match="unknown key 'cfi'") as exc:
            parse_config("epsilon = 0.01\ncfi = 0.5")
        assert "line 2" in str(exc.value)

    def test_malformed_value(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("N = twelve")

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config("just words")

    def test_overrides(self):
        cfg = apply_overrides(ExperimentConfig(), ["epsilon=0.5", "N=128"])
        assert cfg.epsilon == 0.5 and cfg.N == 128
        with pytest.raises(ConfigError):
            apply_overrides(ExperimentConfig(), ["nope=1"])


class TestRunCommand:
    def test_zero_data_series(self, tmp_path):
        cfg = fast_cfg("epsilon = 0")
        assert execute(cfg, "run", tmp_path) == EXIT_OK
        lines = (tmp_path / "series.csv").read_text().splitlines()
        assert lines[0] == ("t,sup_u,sup_du_in_cone,sup_du_out_cone,"
                            "E1,E2,W_K_partial,log_disp_partial")
        data = np.loadtxt(tmp_path / "series.csv", delimiter=",", skiprows=1)
        assert np.all(data[:, 1:] == 0.0)
        assert (tmp_path / "run_manifest.json").exists()

    def test_artifacts_present(self, tmp_path):
        cfg = fast_cfg("epsilon = 0.05")
        execute(cfg, "run", tmp_path)
        assert (tmp_path / "characteristics.csv").exists()
        states = sorted(tmp_path.glob("state_*.csv"))
        assert states
        head = states[0].read_text().splitlines()[0]
        assert head == "r,v,w,u,ut,ur"
        manifest = json.loads((tmp_path / "run_manifest.json").read_text())
        assert manifest["config"]["epsilon"] == 0.05
        assert "dt" in manifest["derived"]

    def test_reproducibility(self, tmp_path):
        cfg = fast_cfg("epsilon = 0.05")
        a, b = tmp_path / "a", tmp_path / "b"
        execute(cfg, "run", a)
        execute(cfg, "run", b)
        for name in ("series.csv", "run_manifest.json", "characteristics.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_guard_exit_code(self, tmp_path):
        cfg = fast_cfg("epsilon = 5", "a_min = 0.5", "r_max = 24",
                       "N = 768", "T = 10")
        assert execute(cfg, "run", tmp_path) == EXIT_GUARD
        err = json.loads((tmp_path / "error.json").read_text())
        assert err["error"] in ("CoefficientDomainExceeded", "NonFinite")
        # nothing non-finite may be left behind in any emitted CSV
        for csv in tmp_path.glob("*.csv"):
            body = np.loadtxt(csv, delimiter=",", skiprows=1)
            assert np.all(np.isfinite(body))

    def test_io_failure(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        cfg = fast_cfg("epsilon = 0")
        assert execute(cfg, "run", blocker / "sub") == EXIT_IO


class TestVerifyCommand:
    def test_report_written(self, tmp_path):
        cfg = fast_cfg("epsilon = 0.01", "K = 3", "T = 4", "model = one_plus_u")
        status = execute(cfg, "verify", tmp_path)
        assert status in (EXIT_OK, 4)
        payload = json.loads((tmp_path / "report.json").read_text())
        assert {"B18a", "B19a", "B21", "B3", "A7"} <= set(payload["bounds"])
        for rec in payload["bounds"].values():
            assert set(rec) == {"bound_id", "fitted_constant", "sup_t", "sup_r",
                                "saturated", "refinement_ratio", "status"}
        lines = (tmp_path / "report.csv").read_text().splitlines()
        assert lines[0] == "bound_id,fitted_constant,sup_t,sup_r,saturated,refinement_ratio"

    def test_manifest_reuse(self, tmp_path, capsys):
        cfg = fast_cfg("epsilon = 0.01", "K = 3", "T = 4", "model = one_plus_u")
        execute(cfg, "run", tmp_path)
        # a second invocation with no config picks the manifest back up
        code = main(["verify", "--out", str(tmp_path), "--override", "refine=false"])
        assert code in (EXIT_OK, 4)
        assert (tmp_path / "report.json").exists()


class TestOtherCommands:
    def test_maximal_selftest(self, tmp_path):
        cfg = parse_config("maximal_n = 128\nmaximal_cases = 10")
        assert execute(cfg, "maximal-selftest", tmp_path) == EXIT_OK
        lines = (tmp_path / "maximal_selftest.csv").read_text().splitlines()
        assert lines[0] == "case,p,norm_ratio"
        assert len(lines) == 11
        assert all(line.split(",")[0].endswith("_pass") for line in lines[1:])

    def test_convergence(self, tmp_path):
        cfg = parse_config("resolutions = 256,512,1024\nr_max = 8\nT = 2\nepsilon = 0.05")
        assert execute(cfg, "convergence", tmp_path) == EXIT_OK
        payload = json.loads((tmp_path / "convergence.json").read_text())
        assert payload["estimated_order"] == pytest.approx(2.0, abs=0.35)

    def test_linear_check(self, tmp_path):
        cfg = parse_config("N = 512\nr_max = 4\nT = 3\ndelta = 0.75")
        assert execute(cfg, "linear-check", tmp_path) == EXIT_OK
        payload = json.loads((tmp_path / "linear_check.json").read_text())
        assert payload["max_over_min"] <= 3.0
        assert (tmp_path / "linear_check.csv").exists()

    def test_stability(self, tmp_path):
        cfg = fast_cfg("epsilon = 0.01", "model = one_plus_u", "lambdas = 0,1")
        assert execute(cfg, "stability", tmp_path) == EXIT_OK
        payload = json.loads((tmp_path / "stability.json").read_text())
        assert payload["kappa"] > 0
        assert np.isfinite(payload["sup_ratio"])


class TestMain:
    def test_config_error_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("cfl = 2.0\n")
        code = main(["run", "--config", str(bad), "--out", str(tmp_path / "o")])
        assert code == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_run_roundtrip(self, tmp_path):
        cfgfile = tmp_path / "exp.cfg"
        cfgfile.write_text("\n".join(FAST) + "\nepsilon = 0.01\n")
        code = main(["run", "--config", str(cfgfile), "--out", str(tmp_path / "out")])
        assert code == EXIT_OK
        assert (tmp_path / "out" / "series.csv").exists()
