import json

import numpy as np
import pytest

from knudsenkit import acceptance, cli
from knudsenkit.config import RunConfig, config_from_mapping, load_config
from knudsenkit.errors import ConfigurationError
from knudsenkit.harness import (
    classify_regime,
    emit_outputs,
    observed_orders,
    parallel_map,
    rows_to_csv,
    run_convergence,
    scaling_slope,
    worker_count,
)


class TestRunConfig:
    def test_defaults_are_valid(self):
        cfg = RunConfig()
        assert cfg.epsilons == [0.1, 0.05, 0.025]
        assert cfg.collision_model().kind == "bgk-constant-nu"

    @pytest.mark.parametrize("changes", [
        {"schema_version": 2},
        {"experiment": "nope"},
        {"epsilons": [0.05, 0.1]},
        {"epsilons": [0.1, 0.1]},
        {"epsilons": []},
        {"beta": 0.0},
        {"chi": 5.0, "epsilons": [0.5, 0.25], "beta": 0.1},
        {"weight_k": 3.0},
        {"fluid_cells": 100},
        {"law": "sticky"},
        {"theta_left": 0.0},
        {"lattice_counts": [24, 24]},
    ])
    def test_invalid_values_are_rejected(self, changes):
        with pytest.raises(ConfigurationError):
            RunConfig(**changes)

    def test_mapping_needs_schema_version_and_known_keys(self):
        with pytest.raises(ConfigurationError, match="schema_version"):
            config_from_mapping({"experiment": "converge"})
        with pytest.raises(ConfigurationError, match="unknown"):
            config_from_mapping({"schema_version": 1, "epsilon": 0.1})
        with pytest.raises(ConfigurationError):
            config_from_mapping(["not", "a", "mapping"])

    def test_load_yaml(self, tmp_path):
        path = tmp_path / "run.yaml"
        path.write_text("schema_version: 1\nexperiment: slip-verify\nepsilons: [0.04, 0.02]\nbetas: [0.5]\n")
        cfg = load_config(path)
        assert cfg.experiment == "slip-verify" and cfg.epsilons == [0.04, 0.02]
        path.write_text("schema_version: [1\n")
        with pytest.raises(ConfigurationError, match="YAML"):
            load_config(path)
        with pytest.raises(ConfigurationError):
            load_config(tmp_path / "missing.yaml")

    def test_replace_revalidates(self):
        with pytest.raises(ConfigurationError):
            RunConfig().replace(epsilons=[0.1, 0.2])


class TestOrders:
    def test_exact_power_law(self):
        eps = [0.1, 0.05, 0.025]
        out = observed_orders(eps, [3 * e**2 for e in eps])
        np.testing.assert_allclose(out["pairwise"], [2.0, 2.0])
        assert out["median"] == pytest.approx(2.0)

    @pytest.mark.parametrize("eps", [[0.1], [0.1, 0.05]])
    def test_too_few_points(self, eps):
        with pytest.raises(ConfigurationError, match="insufficient points"):
            observed_orders(eps, [1.0] * len(eps))

    def test_convergence_study_needs_three_epsilons(self):
        with pytest.raises(ConfigurationError, match="insufficient points"):
            run_convergence(RunConfig(epsilons=[0.1], law="specular"))


class TestRegimeClassifier:
    eps = [0.04, 0.02]

    def test_sub_linear(self):
        lengths = [e**0.5 for e in self.eps]
        assert classify_regime(self.eps, lengths)[0] == "navier-slip-sub-linear"

    def test_critical(self):
        assert classify_regime(self.eps, [2.5, 2.49])[0] == "navier-slip-critical"

    def test_complete_slip(self):
        assert classify_regime(self.eps, [1 / e for e in self.eps])[0] == "complete-slip"
        assert classify_regime(self.eps, [1.0, 1.0], plug=True)[0] == "complete-slip"
        assert classify_regime(self.eps, [1.0, np.inf])[0] == "complete-slip"

    def test_scaling_slope_of_exact_law(self):
        rows = [{"status": "ok", "beta": b, "epsilon": 0.02, "measured_slip_length": 2.5 * 0.02 ** (1 - b)}
                for b in (0.25, 0.5, 0.75)]
        assert scaling_slope(rows) == pytest.approx(1.0)


def test_parallel_map_preserves_order(monkeypatch):
    monkeypatch.setenv("KNUDSENKIT_WORKERS", "2")
    assert worker_count() == 2
    assert parallel_map(abs, [-3, 1, -2]) == [3, 1, 2]
    monkeypatch.setenv("KNUDSENKIT_WORKERS", "many")
    with pytest.raises(ConfigurationError):
        worker_count()


class TestOutputs:
    def test_identical_inputs_give_identical_bytes(self, tmp_path):
        rows = [{"b": 0.1 + 0.2, "a": 1, "flag": True}, {"a": 2, "b": np.float64(1e-20), "flag": False}]
        first = emit_outputs({"table": rows}, RunConfig(), tmp_path / "one", {"x": np.float64(0.5)})
        second = emit_outputs({"table": rows}, RunConfig(), tmp_path / "two", {"x": np.float64(0.5)})
        for key in first:
            assert first[key].read_bytes() == second[key].read_bytes()
        text = first["table"].read_text().splitlines()
        assert text[0] == "a,b,flag"
        assert text[1] == "1,0.3,true"

    def test_empty_results_still_write_a_summary(self, tmp_path):
        paths = emit_outputs({}, None, tmp_path / "empty", exit_code=2)
        assert set(paths) == {"summary"}
        doc = json.loads(paths["summary"].read_text())
        assert doc["tables"] == {} and doc["exit_code"] == 2
        assert "timestamp" not in json.dumps(doc)

    def test_csv_of_no_rows_has_only_a_header(self):
        assert rows_to_csv([], ["a", "b"]) == "a,b\n"


class TestCli:
    def test_slip_coeffs(self, tmp_path, capsys):
        assert cli.main(["slip-coeffs", "--out", str(tmp_path)]) == 0
        assert "bI_u=-2.50662827463" in capsys.readouterr().out
        assert (tmp_path / "slip_coefficients.csv").exists()

    def test_bad_config_exits_with_one(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text("schema_version: 1\nexperiment: converge\nepsilons: [0.1]\n")
        assert cli.main(["converge", "--config", str(path), "--out", str(tmp_path)]) == 1
        assert "insufficient points" in capsys.readouterr().err
        assert cli.main(["converge", "--config", str(tmp_path / "absent.yaml")]) == 1

    def test_unknown_criterion_exits_with_one(self):
        assert cli.main(["acceptance", "11"]) == 1

    def test_acceptance_pass_and_fail_codes(self, monkeypatch, capsys):
        assert cli.main(["acceptance", "3"]) == 0
        assert "criterion  3 [PASS]" in capsys.readouterr().out
        failing = lambda: acceptance.CriterionResult(3, "forced failure", False)
        monkeypatch.setitem(acceptance.CRITERIA, 3, failing)
        assert cli.main(["acceptance", "3"]) == 2
        assert "[FAIL]" in capsys.readouterr().out

    def test_cns_run_writes_profile(self, tmp_path):
        path = tmp_path / "cns.yaml"
        path.write_text("schema_version: 1\nexperiment: cns-run\nepsilons: [0.05]\ncells: 16\nfluid_cells: 16\n"
                        "control_cells: 16\nsteady: false\nt_end: 0.05\nsnapshots: 2\n")
        assert cli.main(["cns-run", "--config", str(path), "--out", str(tmp_path / "out")]) == 0
        names = sorted(p.name for p in (tmp_path / "out").iterdir())
        assert names == ["diagnostics.csv", "profile_001.csv", "profile_002.csv", "summary.json"]

    def test_kinetic_time_march_writes_ledger(self, tmp_path):
        path = tmp_path / "kin.yaml"
        path.write_text("schema_version: 1\nexperiment: kinetic-run\nepsilons: [0.05]\ncells: 16\nfluid_cells: 16\n"
                        "control_cells: 16\nlattice_counts: [12, 12, 12]\nsteady: false\nt_end: 0.02\nsnapshots: 1\n")
        assert cli.main(["kinetic-run", "--config", str(path), "--out", str(tmp_path / "out")]) == 0
        ledger = (tmp_path / "out" / "ledger.csv").read_text().splitlines()
        header = ledger[0].split(",")
        drift = float(ledger[1].split(",")[header.index("mass_drift")])
        assert drift < 1e-12
