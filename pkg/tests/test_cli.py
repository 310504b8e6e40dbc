import json
import math

import numpy as np
import pytest

import blfstep
from blfstep.cli import (
    ConfigError,
    config_to_dict,
    csv_header,
    emit_csv,
    emit_report,
    main,
    parse_config,
    verdict_code,
)


def sec6_text():
    with open(blfstep.paper_sec6_path(), "r", encoding="utf-8") as fh:
        return fh.read()


class TestParse:
    def test_bundled_sec6_values(self):
        cfg = parse_config(sec6_text())
        assert cfg.plant.n == 2
        assert cfg.gains.k == (5.0, 5.0)
        assert cfg.observer_gains == (7.0, 7.0)
        assert cfg.gains.eta == 4.0 and cfg.gains.lam == 14.0
        assert cfg.constraints.virtual_bounds == (1.0, 2.0)
        assert cfg.rbf.l == 12
        assert cfg.horizon == 20.0 and cfg.step == 1e-3 and cfg.decimation == 10
        assert cfg.plant.beta == 1.0
        assert cfg.reference.value(math.pi / 2) == pytest.approx(1.0)

    def test_empty_document_names_missing_fields(self):
        with pytest.raises(ConfigError) as err:
            parse_config("{}")
        assert any(path == "plant" for path, _ in err.value.problems)
        assert all(msg == "missing required field" for _, msg in err.value.problems)

    def test_zero_beta_rejected_with_key(self):
        doc = json.loads(sec6_text())
        doc["plant"]["beta"] = 0.0
        with pytest.raises(ConfigError, match="beta"):
            parse_config(json.dumps(doc))

    def test_unknown_key_rejected(self):
        doc = json.loads(sec6_text())
        doc["extra_knob"] = 1
        with pytest.raises(ConfigError, match="extra_knob"):
            parse_config(json.dumps(doc))

    def test_nested_unknown_key_rejected(self):
        doc = json.loads(sec6_text())
        doc["gains"]["kp"] = 1.0
        with pytest.raises(ConfigError, match="gains.kp"):
            parse_config(json.dumps(doc))

    def test_malformed_json_rejected(self):
        with pytest.raises(ConfigError, match="malformed"):
            parse_config("{not json")

    def test_dimension_cross_checks(self):
        doc = json.loads(sec6_text())
        doc["observer_gains"] = [7.0]
        with pytest.raises(ConfigError, match="observer_gains"):
            parse_config(json.dumps(doc))

    def test_round_trip(self):
        cfg = parse_config(sec6_text())
        again = parse_config(json.dumps(config_to_dict(cfg)))
        assert again.plant == cfg.plant
        assert again.reference == cfg.reference
        assert again.gains == cfg.gains
        assert again.observer_gains == cfg.observer_gains
        assert again.constraints.state_bounds == cfg.constraints.state_bounds
        assert again.constraints.virtual_bounds == cfg.constraints.virtual_bounds
        assert np.array_equal(again.rbf.centers, cfg.rbf.centers)
        assert np.array_equal(again.rbf.widths, cfg.rbf.widths)
        assert (again.horizon, again.step, again.decimation) == (
            cfg.horizon, cfg.step, cfg.decimation)
        assert again.initial_x == cfg.initial_x


class TestCsv:
    def test_header_column_count(self):
        # t, x*2, Psi*2, psi*2, z*2, v*1, u, eps_hat*2, zeta*2, theta_norm, y_d
        assert len(csv_header(2)) == 17

    def test_sec6_first_row(self, sec6_result, tmp_path):
        path = tmp_path / "run.csv"
        emit_csv(sec6_result, str(path))
        lines = path.read_text().splitlines()
        header = lines[0].split(",")
        assert header == csv_header(2)
        row = dict(zip(header, (float(v) for v in lines[1].split(","))))
        assert row["t"] == 0.0
        assert row["x1"] == 0.0 and row["x2"] == 0.0
        assert row["Psi1"] == pytest.approx(2.1, abs=1e-12)
        assert row["Psi2"] == pytest.approx(2.1, abs=1e-12)
        assert row["psi1"] == pytest.approx(1.1, abs=1e-12)
        assert row["psi2"] == pytest.approx(0.1, abs=1e-12)
        assert row["y_d"] == 0.0
        assert len(lines) == 1 + len(sec6_result.records)

    def test_rows_round_trip_exactly(self, sec6_result, tmp_path):
        path = tmp_path / "run.csv"
        emit_csv(sec6_result, str(path))
        lines = path.read_text().splitlines()
        header = lines[0].split(",")
        n = 2
        for k in (1, 137, len(lines) - 1):
            vals = [float(v) for v in lines[k].split(",")]
            row = dict(zip(header, vals))
            i = k - 1
            t = float(sec6_result.times[i])
            state = sec6_result.trajectory[i]
            rec = sec6_result.records[i]
            assert row["t"] == t
            assert row["x1"] == state[0] and row["x2"] == state[1]
            assert row["z1"] == rec.z[0] and row["z2"] == rec.z[1]
            assert row["v1"] == rec.v[0] and row["u"] == rec.u
            assert row["eps_hat1"] == rec.eps_hat[0]
            assert row["zeta1"] == state[2 * n] and row["zeta2"] == state[2 * n + 1]
            assert row["theta_norm"] == float(np.linalg.norm(state[3 * n:]))

    def test_zero_horizon_gives_header_and_initial_row(self, tmp_path):
        cfg = blfstep.load_config_file(blfstep.paper_sec6_path())
        cfg.horizon = 0.0
        res = blfstep.run(cfg)
        path = tmp_path / "initial.csv"
        emit_csv(res, str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(csv_header(2))
        assert len(lines) == 2

    def test_empty_result_gives_header_only(self, sec6_result, tmp_path):
        from dataclasses import replace

        empty = replace(sec6_result, times=np.empty(0),
                        trajectory=np.empty((0, 18)), records=[])
        path = tmp_path / "empty.csv"
        emit_csv(empty, str(path))
        assert path.read_text() == ",".join(csv_header(2)) + "\n"


class TestReport:
    def test_sec6_report_content(self, sec6_result):
        text = emit_report(sec6_result)
        # the second state exceeds its bound on this config, so FAIL
        assert "constraints: FAIL" in text
        assert "warning: mu[2] = 0" in text
        assert "tracking transient decay: PASS" in text
        assert "max |v1|" in text

    def test_report_pass_for_short_run(self):
        cfg = blfstep.load_config_file(blfstep.paper_sec6_path())
        cfg.horizon = 0.5
        res = blfstep.run(cfg)
        # before the gain-search transient the flagship stays within both bounds
        text = emit_report(res)
        assert "constraints: PASS" in text
        assert verdict_code(res) == 0

    def test_violation_report_and_code(self):
        exc = blfstep.BarrierViolation(0.2, 0.1, level=1, t=3.25)
        text = emit_report(exc)
        assert "constraints: FAIL at level 1, t=3.25" in text
        assert verdict_code(exc) == 2

    def test_infeasible_report_and_code(self):
        exc = blfstep.InfeasibleInitialCondition(2, 0.2, 0.1)
        text = emit_report(exc)
        assert "FAIL at level 2" in text
        assert verdict_code(exc) == 1


class TestMain:
    def test_simulate_short_horizon(self, tmp_path, capsys):
        out = tmp_path / "short.csv"
        report = tmp_path / "short.txt"
        code = main(["simulate", blfstep.paper_sec6_path(),
                     "--horizon", "0.5", "--out", str(out), "--report", str(report)])
        captured = capsys.readouterr()
        assert code == 0
        assert "constraints: PASS" in captured.out
        assert out.exists() and report.exists()
        assert report.read_text() == captured.out

    def test_flag_overrides_beat_file_values(self, tmp_path, capsys):
        code = main(["simulate", blfstep.paper_sec6_path(),
                     "--horizon", "0.5", "--step", "0.002"])
        captured = capsys.readouterr()
        assert code == 0
        assert "horizon: 0.5 s" in captured.out and "step: 0.002 s" in captured.out

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        assert main(["simulate", str(bad)]) == 1
        assert "missing required field" in capsys.readouterr().err

    def test_missing_file_exit_code(self, capsys):
        assert main(["simulate", "no_such_file.json"]) == 1
        assert "no such configuration" in capsys.readouterr().err

    def test_bundled_name_fallback(self, capsys):
        code = main(["simulate", "paper_sec6.json", "--horizon", "0.5"])
        captured = capsys.readouterr()
        assert code == 0
        assert "using bundled configuration" in captured.err

    def test_infeasible_initial_exit_code(self, tmp_path, capsys):
        doc = json.loads(sec6_text())
        doc["initial_x"] = [0.0, 0.2]
        path = tmp_path / "infeasible.json"
        path.write_text(json.dumps(doc))
        assert main(["simulate", str(path)]) == 1
        assert "FAIL at level 2" in capsys.readouterr().out


class TestParseEdges:
    def test_delta_defaults_when_absent(self):
        doc = json.loads(sec6_text())
        del doc["gains"]["delta"]
        cfg = parse_config(json.dumps(doc))
        assert cfg.gains.delta == 1e-4

    def test_centers_without_widths_rejected(self):
        doc = json.loads(sec6_text())
        doc["rbf"]["centers"] = [[0.0, 0.0]] * 12
        with pytest.raises(ConfigError, match="together"):
            parse_config(json.dumps(doc))

    def test_center_count_must_match_l(self):
        doc = json.loads(sec6_text())
        doc["rbf"]["centers"] = [[0.0, 0.0]] * 3
        doc["rbf"]["widths"] = [2.0] * 3
        with pytest.raises(ConfigError, match="centers"):
            parse_config(json.dumps(doc))

    def test_negative_step_flag_rejected(self, capsys):
        assert main(["simulate", blfstep.paper_sec6_path(), "--step", "-0.001"]) == 1
        assert "--step" in capsys.readouterr().err

    def test_reference_bound_line_in_report(self, sec6_result):
        text = emit_report(sec6_result)
        assert "reference bound: max |y_d|" in text
        assert "A[0] = 1 : OK" in text
