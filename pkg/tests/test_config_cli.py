"""Configuration parsing, scenario orchestration, CLI, and reports."""

import json

import numpy as np
import pytest

from eprqkd.adversary import BeamsplitterTap, InterceptResend, NoEve, QndTap
from eprqkd.cli import main
from eprqkd.config import ConfigError, parse_config
from eprqkd.report import RunReport, to_json
from eprqkd.scenarios import run_scenario, sweep_rows

MINIMAL_SIMULATE = """
scenario: simulate
seed: 5
"""

SIMULATE_WITH_EVE = """
scenario: simulate
seed: 5
protocol:
  rounds: 1500
  eve:
    model: intercept-resend
    r: 2.0
"""


class TestParseConfig:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL_SIMULATE)
        assert cfg.kind == "simulate"
        assert cfg.protocol.rounds == 10_000
        assert cfg.protocol.alarm_z == 3.0
        assert isinstance(cfg.protocol.eve, NoEve)
        assert cfg.protocol.seed == 5

    def test_range_error_names_field(self):
        text = MINIMAL_SIMULATE + "protocol:\n  channel_eta: 1.2\n"
        with pytest.raises(ConfigError, match="channel_eta"):
            parse_config(text)

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="mystery"):
            parse_config(MINIMAL_SIMULATE + "mystery: 1\n")

    def test_unknown_protocol_key(self):
        with pytest.raises(ConfigError, match="protocol"):
            parse_config(MINIMAL_SIMULATE + "protocol:\n  bogus: 1\n")

    def test_syntax_error_reports_position(self):
        with pytest.raises(ConfigError, match="line"):
            parse_config("scenario: simulate\nprotocol: [unclosed\n")

    def test_eve_models(self):
        for snippet, expected in [
            ("model: none", NoEve()),
            ("model: intercept-resend\n    r: 3.0", InterceptResend(r=3.0)),
            ("model: tap\n    eta_tap: 0.7", BeamsplitterTap(eta_tap=0.7)),
            ("model: qnd\n    eta_tap: 0.7\n    r_sq: 4.0", QndTap(eta_tap=0.7, r_sq=4.0)),
        ]:
            text = f"scenario: simulate\nprotocol:\n  eve:\n    {snippet}\n"
            assert parse_config(text).protocol.eve == expected

    def test_unknown_eve_model(self):
        text = "scenario: simulate\nprotocol:\n  eve:\n    model: mitm\n"
        with pytest.raises(ConfigError, match="model"):
            parse_config(text)

    def test_bell_scenario_defaults(self):
        cfg = parse_config("scenario: bell\nbell:\n  state: pair-coherent\n  r0: 1.1\n")
        assert cfg.bell.effective_truncation() == 40
        angles = cfg.bell.effective_angles()
        assert angles.phi == pytest.approx(-np.pi / 4)

    def test_sweep_grid(self):
        text = (
            "scenario: attack-sweep\nprotocol:\n  eve:\n    model: tap\n"
            "sweep:\n  param: eta_tap\n  start: 0.5\n  stop: 1.0\n  step: 0.25\n"
        )
        cfg = parse_config(text)
        np.testing.assert_allclose(cfg.sweep.values(), [0.5, 0.75, 1.0])

    def test_single_point_grid(self):
        text = (
            "scenario: attack-sweep\nprotocol: {}\n"
            "sweep:\n  param: channel_eta\n  start: 0.8\n  stop: 0.8\n  step: 0.1\n"
        )
        assert parse_config(text).sweep.values().tolist() == [0.8]

    def test_non_monotone_grid_rejected(self):
        text = (
            "scenario: attack-sweep\nprotocol: {}\n"
            "sweep:\n  param: channel_eta\n  start: 0.9\n  stop: 0.5\n  step: 0.1\n"
        )
        with pytest.raises(ConfigError, match="monotone"):
            parse_config(text)

    def test_missing_section_rejected(self):
        with pytest.raises(ConfigError, match="bell"):
            parse_config("scenario: bell\n")

    def test_empty_config_rejected(self):
        with pytest.raises(ConfigError):
            parse_config("")


class TestJsonReport:
    def test_float_formatting_and_sorted_keys(self):
        text = to_json({"b": 1.0 / 3.0, "a": True, "c": [1, 2.5], "d": None})
        parsed = json.loads(text)
        assert parsed["b"] == pytest.approx(1.0 / 3.0, rel=1e-16)
        assert text.index('"a"') < text.index('"b"') < text.index('"c"')
        assert "0.33333333333333331" in text

    def test_numpy_types(self):
        text = to_json({"x": np.float64(0.5), "n": np.int64(3), "flag": np.bool_(True)})
        assert json.loads(text) == {"x": 0.5, "n": 3, "flag": True}

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            to_json({"x": float("nan")})

    def test_report_roundtrip(self, tmp_path):
        report = RunReport(
            scenario="simulate",
            config_echo={"seed": 1},
            payload={"alarm": False, "value": 0.25},
            wall_time_s=0.1,
        )
        path = tmp_path / "report.json"
        from eprqkd.report import write_report

        write_report(path, report)
        parsed = json.loads(path.read_text())
        assert parsed["scenario"] == "simulate"
        assert parsed["payload"]["value"] == 0.25
        assert parsed["rng_algorithm"] == "numpy-philox4x64"


class TestScenarios:
    def test_simulate_clean_exit(self):
        cfg = parse_config(MINIMAL_SIMULATE + "protocol:\n  rounds: 1500\n")
        report = run_scenario(cfg)
        assert report.exit_code == 0
        assert report.payload["alarm"] is False
        assert report.payload["rounds"] == 1500

    def test_simulate_alarm_exit(self):
        report = run_scenario(parse_config(SIMULATE_WITH_EVE))
        assert report.exit_code == 2
        assert report.payload["alarm"] is True

    def test_payload_deterministic_across_runs_and_workers(self):
        cfg1 = parse_config(MINIMAL_SIMULATE + "protocol:\n  rounds: 2000\n")
        cfg8 = parse_config(
            MINIMAL_SIMULATE + "workers: 8\nprotocol:\n  rounds: 2000\n"
        )
        a = run_scenario(cfg1).payload_json()
        b = run_scenario(cfg1).payload_json()
        c = run_scenario(cfg8).payload_json()
        assert a == b == c

    def test_epr_check_payload(self):
        cfg = parse_config("scenario: epr-check\nseed: 3\nprotocol:\n  rounds: 5000\n")
        report = run_scenario(cfg)
        analytic = report.payload["analytic"]
        assert analytic["product"] == pytest.approx(1 / np.cosh(1.0) ** 2, rel=1e-12)
        assert analytic["epr_correlated"] is True
        est = report.payload["estimated"]
        assert abs(est["product"] - analytic["product"]) < 4 * est["stderr"]

    def test_sweep_rows_tradeoff(self):
        cfg = parse_config(
            "scenario: attack-sweep\nseed: 9\n"
            "protocol:\n  eve:\n    model: tap\n"
            "sweep:\n  param: eta_tap\n  start: 0.5\n  stop: 1.0\n  step: 0.1\n"
            "  repeats: 4\n  rounds: 800\n"
        )
        rows = sweep_rows(cfg.protocol, cfg.sweep, cfg.seed)
        assert len(rows) == 6
        bers = [row["eve_ber"] for row in rows]
        assert all(b >= a - 1e-12 for a, b in zip(bers, bers[1:]))
        assert rows[0]["alarm_rate"] >= rows[-1]["alarm_rate"]
        assert rows[0]["alarm_rate"] == 1.0 and rows[-1]["alarm_rate"] == 0.0

    def test_loss_sweep_products(self):
        cfg = parse_config(
            "scenario: attack-sweep\nseed: 9\n"
            "protocol:\n  kappa_t: 0.5\n"
            "sweep:\n  param: channel_eta\n  start: 0.0\n  stop: 1.0\n  step: 0.2\n"
            "  repeats: 2\n  rounds: 500\n"
        )
        rows = sweep_rows(cfg.protocol, cfg.sweep, cfg.seed)
        by_eta = {round(r["param"], 3): r["product"] for r in rows}
        d = 1 / np.cosh(1.0)
        assert by_eta[1.0] == pytest.approx(d * d, rel=1e-12)
        assert by_eta[0.8] == pytest.approx((0.8 * d + 0.2) ** 2, rel=1e-12)
        assert by_eta[0.0] == pytest.approx(1.0, rel=1e-12)

    def test_bell_scenario(self):
        cfg = parse_config(
            "scenario: bell\nbell:\n  state: pair-coherent\n  r0: 1.1\n  truncation: 30\n"
        )
        report = run_scenario(cfg)
        assert report.payload["S"] == pytest.approx(1.0157, abs=0.003)
        assert report.payload["convergence"]["delta"] < 1e-4
        assert report.payload["violates_ch"] is True


class TestCli:
    def write(self, tmp_path, text):
        path = tmp_path / "config.yaml"
        path.write_text(text)
        return str(path)

    def test_simulate_writes_report_and_csv(self, tmp_path, capsys):
        cfg = self.write(tmp_path, MINIMAL_SIMULATE + "protocol:\n  rounds: 1200\n")
        out = tmp_path / "report.json"
        csv_path = tmp_path / "rounds.csv"
        code = main(
            ["simulate", "--config", cfg, "--out", str(out), "--csv", str(csv_path)]
        )
        assert code == 0
        parsed = json.loads(out.read_text())
        assert parsed["payload"]["alarm"] is False
        lines = csv_path.read_text().strip().split("\n")
        assert lines[0] == "round,bob_basis,bob_fluct,alice_fluct,z"
        assert len(lines) == 1201
        stdout = capsys.readouterr().out
        assert json.loads(stdout)["scenario"] == "simulate"

    def test_alarm_exit_code(self, tmp_path):
        cfg = self.write(tmp_path, SIMULATE_WITH_EVE)
        assert main(["simulate", "--config", cfg]) == 2

    def test_cli_overrides(self, tmp_path):
        cfg = self.write(tmp_path, MINIMAL_SIMULATE)
        out = tmp_path / "r.json"
        code = main(
            ["simulate", "--config", cfg, "--rounds", "800", "--seed", "77", "--out", str(out)]
        )
        assert code == 0
        parsed = json.loads(out.read_text())
        assert parsed["payload"]["rounds"] == 800
        assert parsed["config"]["protocol"]["seed"] == 77

    def test_error_exit_code_and_stderr_object(self, tmp_path, capsys):
        cfg = self.write(tmp_path, "scenario: simulate\nprotocol:\n  channel_eta: 2.0\n")
        assert main(["simulate", "--config", cfg]) == 1
        err = json.loads(capsys.readouterr().err)
        assert err["error"]["type"] == "ConfigError"
        assert "channel_eta" in err["error"]["message"]

    def test_scenario_command_mismatch(self, tmp_path):
        cfg = self.write(tmp_path, MINIMAL_SIMULATE)
        assert main(["epr-check", "--config", cfg]) == 1

    def test_attack_sweep_csv(self, tmp_path):
        cfg = self.write(
            tmp_path,
            "scenario: attack-sweep\nseed: 2\nprotocol:\n  eve:\n    model: tap\n"
            "sweep:\n  param: eta_tap\n  start: 0.6\n  stop: 0.8\n  step: 0.1\n"
            "  repeats: 2\n  rounds: 400\n",
        )
        out = tmp_path / "sweep.csv"
        assert main(["attack-sweep", "--config", cfg, "--out", str(out)]) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "model,param,eta,var_x_new,var_p_new,product,eve_ber,alarm_rate"
        assert len(lines) == 4
        for line in lines[1:]:
            assert len(line.split(",")) == 8

    def test_attack_sweep_grid_flag(self, tmp_path):
        cfg = self.write(
            tmp_path,
            "scenario: attack-sweep\nseed: 2\nprotocol:\n  eve:\n    model: tap\n"
            "sweep:\n  param: eta_tap\n  start: 0.6\n  stop: 0.8\n  step: 0.1\n"
            "  repeats: 2\n  rounds: 400\n",
        )
        out = tmp_path / "sweep.csv"
        code = main(
            ["attack-sweep", "--config", cfg, "--param", "eta_tap",
             "--grid", "0.5:0.9:0.2", "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert len(lines) == 4  # 0.5, 0.7, 0.9

    def test_bell_from_flags(self, tmp_path, capsys):
        out = tmp_path / "bell.json"
        code = main(
            ["bell", "--state", "pair-coherent", "--r0", "1.1",
             "--truncation", "30", "--out", str(out)]
        )
        assert code == 0
        parsed = json.loads(out.read_text())
        assert parsed["payload"]["S"] == pytest.approx(1.0157, abs=0.003)

    def test_bell_cat_from_flags(self, capsys):
        code = main(
            ["bell", "--state", "cat", "--alpha0", "0.9", "--beta0", "0.9",
             "--kt", "0.6", "--truncation", "30"]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)["payload"]
        assert payload["S"] == pytest.approx(1.008, abs=0.003)
