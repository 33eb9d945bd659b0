import json
import math

import numpy as np
import pytest

from svfree.cli import (
    ENERGY_COLUMNS,
    RunSummary,
    config_from_dict,
    emit_report,
    load_config,
    main,
    parse_sweep_range,
    run_simulation,
    run_verification_suite,
)
from svfree.errors import ConfigurationError
from svfree.picard import ContractionReport
from svfree.profile import build_grid

SMALL = {
    "profile": {"kind": "parabolic", "amplitude": 1.0},
    "u0": {"kind": "zero"},
    "n_nodes": 101,
    "n_modes": 8,
    "dt": 5e-4,
    "t_final": 5e-3,
    "emit": {"energy": True, "contraction": True, "snapshots": 2, "boundary": False},
}


def _write_config(tmp_path, data, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


class TestLoadConfig:
    def test_empty_object_gives_defaults(self, tmp_path):
        cfg = load_config(_write_config(tmp_path, {}))
        assert cfg.n_modes == 32
        assert cfg.dt == 1e-4
        assert cfg.t_final == 0.05
        assert cfg.picard_tol == 1e-10
        assert cfg.max_iter == 50
        assert cfg.scheme == "implicit-euler"
        assert cfg.profile["kind"] == "parabolic"

    def test_zero_dt_names_field(self, tmp_path):
        with pytest.raises(ConfigurationError, match="'dt'"):
            load_config(_write_config(tmp_path, {"dt": 0}))

    def test_canonical_step_count(self, tmp_path):
        cfg = load_config(_write_config(tmp_path, {"t_final": 0.05, "dt": 1e-4}))
        assert cfg.n_steps() == 500

    def test_nonuniform_step_split_rejected(self):
        with pytest.raises(ConfigurationError, match="t_final"):
            config_from_dict({"t_final": 0.05, "dt": 3e-4})

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigurationError, match="unknown"):
            config_from_dict({"dt": 1e-4, "length": 2.0})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError, match="not found"):
            load_config(tmp_path / "nope.json")

    def test_malformed_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(ConfigurationError, match="JSON"):
            load_config(p)

    def test_bad_scheme(self):
        with pytest.raises(ConfigurationError, match="scheme"):
            config_from_dict({"scheme": "rk4"})


class TestEmitReport:
    def test_energy_header(self, tmp_path):
        path = emit_report("energy", [], tmp_path / "energy.csv")
        header = path.read_text().splitlines()[0]
        assert header == ",".join(ENERGY_COLUMNS)
        assert header.startswith("t,")
        assert header.endswith("E_total,lowE_total,within_apriori")

    def test_empty_contraction_header_only(self, tmp_path):
        path = emit_report("contraction", [], tmp_path / "c.csv")
        assert path.read_text() == "iteration,sup_diff,grad_diff,ratio\n"

    def test_contraction_rows(self, tmp_path):
        reps = [ContractionReport(1, 1e-3, 2e-3, float("nan"))]
        path = emit_report("contraction", reps, tmp_path / "c.csv")
        lines = path.read_text().splitlines()
        assert lines[1].startswith("1,0.001")

    def test_summary_round_trip(self, tmp_path):
        s = RunSummary(True, 3, 0.5, 0.9, 1.1, 2.0, 0.1)
        path = emit_report("summary", s, tmp_path / "s.json")
        data = json.loads(path.read_text())
        assert data["converged"] is True
        assert data["iterations"] == 3
        assert data["eta_x_min"] == 0.9
        assert data["schema_version"] == 1

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(ConfigurationError):
            emit_report("plot", [], tmp_path / "x")


class TestRunSimulation:
    def test_small_run_emits_files(self, tmp_path, monkeypatch):
        monkeypatch.delenv("SVFREE_OUT", raising=False)
        cfg = config_from_dict({**SMALL, "out_dir": str(tmp_path / "out")})
        summary = run_simulation(cfg)
        assert summary.converged
        assert summary.eta_x_min >= 0.5
        out = tmp_path / "out"
        for name in ("energy.csv", "contraction.csv", "summary.json",
                     "snapshot_000.csv", "snapshot_000.json", "trajectory.csv"):
            assert (out / name).exists(), name

    def test_csv_outputs_byte_identical(self, tmp_path, monkeypatch):
        monkeypatch.delenv("SVFREE_OUT", raising=False)
        outs = []
        for sub in ("a", "b"):
            cfg = config_from_dict({**SMALL, "out_dir": str(tmp_path / sub)})
            run_simulation(cfg)
            outs.append(tmp_path / sub)
        for name in ("energy.csv", "contraction.csv", "snapshot_001.csv", "trajectory.csv"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

    def test_env_var_overrides_out_dir(self, tmp_path, monkeypatch):
        target = tmp_path / "redirected"
        monkeypatch.setenv("SVFREE_OUT", str(target))
        cfg = config_from_dict({**SMALL, "out_dir": str(tmp_path / "ignored")})
        run_simulation(cfg)
        assert (target / "summary.json").exists()
        assert not (tmp_path / "ignored").exists()

    def test_both_solvers_emit_diff(self, tmp_path, monkeypatch):
        monkeypatch.delenv("SVFREE_OUT", raising=False)
        cfg = config_from_dict(
            {**SMALL, "solver": "both", "out_dir": str(tmp_path / "out")}
        )
        run_simulation(cfg)
        out = tmp_path / "out"
        assert (out / "trajectory_galerkin.csv").exists()
        assert (out / "trajectory_fd.csv").exists()
        diff = json.loads((out / "diff.json").read_text())
        assert diff["final_weighted_l2_diff"] < 1e-3


class TestVerificationSuite:
    def test_default_config_all_pass(self, tmp_path):
        cfg = config_from_dict({**SMALL, "n_nodes": 201, "n_modes": 16})
        checks = run_verification_suite(cfg)
        failed = [c.name for c in checks if not c.passed]
        assert failed == []

    def test_corrupted_profile_fails_by_name(self):
        from svfree.profile import sample_height_profile

        cfg = config_from_dict({**SMALL, "n_nodes": 201, "n_modes": 16})
        grid = build_grid(201)
        corrupted = sample_height_profile("parabolic", {"amplitude": 1.0}, grid)
        corrupted.values[0] = 0.05  # boundary vacuum broken
        checks = run_verification_suite(cfg, profile_override=corrupted)
        failed = {c.name for c in checks if not c.passed}
        assert "physical-vacuum" in failed


class TestSweep:
    def test_parse_range(self):
        vals = parse_sweep_range("T=0.01:0.03:3")
        assert np.allclose(vals, [0.01, 0.02, 0.03])

    def test_bad_specs(self):
        for spec in ("x=1:2:3", "T=1:2", "T=2:1:3", "T=0:1:2"):
            with pytest.raises(ConfigurationError):
                parse_sweep_range(spec)


class TestMainExitCodes:
    def test_config_error_is_3(self, tmp_path, capsys):
        bad = _write_config(tmp_path, {"dt": -1})
        assert main(["simulate", "--config", str(bad)]) == 3

    def test_simulate_ok_is_0(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SVFREE_OUT", str(tmp_path / "out"))
        cfg = _write_config(tmp_path, SMALL)
        assert main(["simulate", "--config", str(cfg)]) == 0

    def test_breakdown_is_2(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SVFREE_OUT", str(tmp_path / "out"))
        cfg = _write_config(
            tmp_path,
            {**SMALL, "t_final": 10.0, "dt": 0.01, "max_iter": 6},
        )
        assert main(["simulate", "--config", str(cfg)]) == 2
        # partial summary still written
        data = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert data["converged"] is False

    def test_sweep_needs_spec(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SVFREE_OUT", str(tmp_path / "out"))
        cfg = _write_config(tmp_path, SMALL)
        assert main(["sweep", "--config", str(cfg)]) == 3

    def test_sweep_runs(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SVFREE_OUT", str(tmp_path / "out"))
        cfg = _write_config(tmp_path, SMALL)
        assert main(["sweep", "T=0.002:0.004:2", "--config", str(cfg)]) == 0
        assert (tmp_path / "out" / "sweep.csv").exists()


class TestFdOracleSolverPath:
    def test_fd_only_run(self, tmp_path, monkeypatch):
        monkeypatch.delenv("SVFREE_OUT", raising=False)
        cfg = config_from_dict(
            {**SMALL, "solver": "fd-oracle",
             "emit": {"energy": False, "contraction": False, "snapshots": 2, "boundary": True},
             "out_dir": str(tmp_path / "out")}
        )
        summary = run_simulation(cfg)
        assert summary.converged
        out = tmp_path / "out"
        assert (out / "trajectory.csv").exists()
        assert (out / "boundary.csv").exists()
        assert (out / "snapshot_001.csv").exists()


def test_unknown_emit_flag_rejected():
    with pytest.raises(ConfigurationError, match="emit"):
        config_from_dict({"emit": {"energy": True, "plots": True}})


def test_windowed_restart_through_config(tmp_path, monkeypatch):
    monkeypatch.setenv("SVFREE_OUT", str(tmp_path / "out"))
    cfg = config_from_dict({**SMALL, "windows": 2, "initial_guess": "identity"})
    summary = run_simulation(cfg)
    assert summary.converged
    assert summary.iterations >= 2  # at least one update per window
