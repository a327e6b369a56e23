"""Command-line interface: outputs, file emission, exit-code contract."""

import json
import math

import numpy as np
import pytest

from nma import Geometric, ddm_tandem, DdmParams, exact_outcome
from nma.cli import main
from nma.serialize import (
    kernel_to_dict,
    load_spec,
    outcome_to_dict,
    save_json,
    tandem_to_dict,
)

from conftest import DEADLINE_LIMIT, LN2, LN4, MENU, PI_421


@pytest.fixture
def kernel_file(tmp_path, u421_kernel):
    path = tmp_path / "kernel.json"
    save_json(kernel_to_dict(u421_kernel), path)
    return str(path)


@pytest.fixture
def tandem_file(tmp_path, sym_ddm_tandem):
    path = tmp_path / "tandem.json"
    save_json(tandem_to_dict(sym_ddm_tandem), path)
    return str(path)


@pytest.fixture
def cyclic_file(tmp_path, cyclic_kernel):
    path = tmp_path / "cycle.json"
    save_json(kernel_to_dict(cyclic_kernel), path)
    return str(path)


def q_dict():
    return {
        "order": 3,
        "columns": [[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]],
    }


@pytest.fixture
def spec_file(tmp_path):
    # symmetric-barrier diffusion over utilities (ln4, ln2, 0): the workhorse
    obj = {
        "menu": list(MENU),
        "mu": [1 / 3, 1 / 3, 1 / 3],
        "Q": q_dict(),
        "model": {"kind": "ddm", "nu": {"a": LN4, "b": LN2, "c": 0.0},
                  "lambda": 1.0, "beta": 1.0},
        "stopping": {"kind": "geometric", "zeta": 0.9},
    }
    path = tmp_path / "spec.json"
    save_json(obj, path)
    return str(path)


@pytest.fixture
def exp_spec_file(tmp_path, sym_ddm_tandem):
    # same system, but sampling exponential durations (deadline-capable)
    obj = {
        "menu": list(MENU),
        "mu": [1 / 3, 1 / 3, 1 / 3],
        "Q": q_dict(),
        "model": {"kind": "tandem", **tandem_to_dict(sym_ddm_tandem),
                  "durations": "exponential"},
    }
    path = tmp_path / "spec_exp.json"
    save_json(obj, path)
    return str(path)


@pytest.fixture
def logit_spec_file(tmp_path):
    obj = {
        "menu": list(MENU),
        "mu": [1 / 3, 1 / 3, 1 / 3],
        "Q": q_dict(),
        "model": {"kind": "logit", "v": [LN4, LN2, 0.0]},
    }
    path = tmp_path / "spec_logit.json"
    save_json(obj, path)
    return str(path)


class TestValidate:
    def test_passing_kernel(self, kernel_file, capsys):
        assert main(["validate", "--input", kernel_file]) == 0
        out = capsys.readouterr().out
        assert "axioms: ok" in out
        assert "transitive: true" in out
        assert "-> pass" in out

    def test_cycle_fails_with_worst_triple(self, cyclic_file, capsys):
        assert main(["validate", "--input", cyclic_file]) == 2
        out = capsys.readouterr().out
        assert "transitive: false" in out
        assert "worst triple: ('a', 'b', 'c')" in out
        assert "-> FAIL" in out

    def test_tandem_gets_timing_properties(self, tandem_file, capsys):
        code = main(["validate", "--input", tandem_file,
                     "--require", "chronometric", "--require", "psychometric"])
        assert code == 0
        out = capsys.readouterr().out
        assert "chronometric: true" in out
        assert "psychometric: true" in out
        assert "threshold l: 0" in out

    def test_timing_property_needs_tandem(self, kernel_file, capsys):
        code = main(["validate", "--input", kernel_file,
                     "--require", "chronometric"])
        assert code == 2
        assert "TandemRequired" in capsys.readouterr().err

    def test_malformed_json(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{"menu": [')
        assert main(["validate", "--input", str(path)]) == 1

    def test_missing_file(self, tmp_path):
        assert main(["validate", "--input", str(tmp_path / "nope.json")]) == 1

    def test_axiom_warnings_reported_not_crashed(self, tmp_path, capsys):
        obj = {"menu": ["a", "b"], "rho": [[0.5, 1.0], [0.4, 0.5]]}
        path = tmp_path / "warn.json"
        save_json(obj, path)
        assert main(["validate", "--input", str(path)]) == 2
        out = capsys.readouterr().out
        assert "axioms: FAIL" in out
        assert "warning:" in out

    def test_json_report_written(self, kernel_file, tmp_path, capsys):
        out_path = tmp_path / "report.json"
        main(["validate", "--input", kernel_file, "--output", str(out_path)])
        report = json.loads(out_path.read_text())
        assert report["passed"] is True
        assert report["flags"]["positive"] is True
        assert report["transitive"]["holds"] is True

    def test_csv_report_written(self, kernel_file, tmp_path):
        out_path = tmp_path / "report.csv"
        main(["validate", "--input", kernel_file, "--format", "csv",
              "--output", str(out_path)])
        lines = out_path.read_text().strip().splitlines()
        assert lines[0] == "quantity,label,value"
        assert "passed,,1" in lines


class TestAnalyze:
    def test_kernel_values(self, kernel_file, capsys):
        assert main(["analyze", "--input", kernel_file]) == 0
        out = capsys.readouterr().out
        assert "levels (ascending): {a, b, c}" in out
        assert "a: w=1" in out

    def test_tandem_adds_timing(self, tandem_file, capsys):
        assert main(["analyze", "--input", tandem_file]) == 0
        out = capsys.readouterr().out
        assert "threshold l: 0" in out
        assert "even phi: true" in out

    def test_intransitive_is_domain_error(self, cyclic_file, capsys):
        assert main(["analyze", "--input", cyclic_file]) == 2
        assert "NotTransitiveError" in capsys.readouterr().err

    def test_csv_has_phi_rows(self, tandem_file, tmp_path):
        out_path = tmp_path / "rep.csv"
        main(["analyze", "--input", tandem_file, "--format", "csv",
              "--output", str(out_path)])
        rows = out_path.read_text().strip().splitlines()
        assert sum(1 for r in rows if r.startswith("phi,")) == 4


class TestExact:
    def test_stdout_numbers(self, spec_file, capsys):
        assert main(["exact", "--input", spec_file]) == 0
        out = capsys.readouterr().out
        assert "method: closed_form" in out
        assert "p[a] = 0.536405005688" in out
        assert "tau = 4.17606051725" in out

    def test_output_matches_library_bytes(self, spec_file, tmp_path):
        spec, stopping = load_spec(spec_file)
        expected = tmp_path / "expected.json"
        save_json(outcome_to_dict(exact_outcome(spec, stopping), spec.menu),
                  expected)
        got = tmp_path / "got.json"
        main(["exact", "--input", spec_file, "--output", str(got)])
        assert got.read_bytes() == expected.read_bytes()

    def test_stopping_flag_overrides_spec(self, spec_file, capsys):
        assert main(["exact", "--input", spec_file, "--stopping", "fixed:0"]) == 0
        out = capsys.readouterr().out
        assert "p[a] = 0.333333333333" in out  # N = 0 keeps the prior mu
        assert "tau = 0" in out

    def test_missing_stopping_is_parse_error(self, logit_spec_file, tmp_path,
                                             capsys):
        # logit spec has no inline stopping and none is passed
        assert main(["exact", "--input", logit_spec_file]) == 1
        assert "no stopping rule" in capsys.readouterr().err

    def test_deadline_is_domain_error(self, spec_file, capsys):
        code = main(["exact", "--input", spec_file, "--stopping", "deadline:5"])
        assert code == 2
        assert "DeadlineNotExact" in capsys.readouterr().err

    def test_kernel_only_spec_is_domain_error(self, logit_spec_file, capsys):
        code = main(["exact", "--input", logit_spec_file,
                     "--stopping", "geometric:0.5"])
        assert code == 2
        assert "TandemRequired" in capsys.readouterr().err

    def test_bad_strategy_is_usage_error(self, spec_file, capsys):
        assert main(["exact", "--input", spec_file, "--strategy", "magic"]) == 1

    def test_strategies_agree_on_stdout(self, spec_file, capsys):
        outputs = []
        for strategy in ("closed_form", "spectral", "series"):
            assert main(["exact", "--input", spec_file,
                         "--strategy", strategy]) == 0
            lines = capsys.readouterr().out.splitlines()
            outputs.append([l for l in lines if l.startswith("p[")])
        assert outputs[0] == outputs[1] == outputs[2]


class TestSimulate:
    def test_same_seed_same_bytes(self, spec_file, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            code = main(["simulate", "--input", spec_file, "--runs", "200",
                         "--seed", "42", "--output", str(path)])
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_seed_required(self, spec_file, capsys):
        assert main(["simulate", "--input", spec_file]) == 1

    def test_zero_runs_is_domain_error(self, spec_file, capsys):
        code = main(["simulate", "--input", spec_file, "--runs", "0",
                     "--seed", "1"])
        assert code == 2
        assert "ValueError" in capsys.readouterr().err

    def test_deadline_needs_sampler(self, spec_file, capsys):
        code = main(["simulate", "--input", spec_file, "--seed", "1",
                     "--stopping", "deadline:50"])
        assert code == 2
        assert "SamplerRequired" in capsys.readouterr().err

    def test_deadline_with_exponential_durations(self, exp_spec_file, capsys):
        code = main(["simulate", "--input", exp_spec_file, "--seed", "3",
                     "--runs", "2000", "--stopping", "deadline:100"])
        assert code == 0
        out = capsys.readouterr().out
        p = {a: float(l.split("= ")[1])
             for a, l in zip(MENU, out.splitlines()[1:4])}
        assert abs(p["a"] - DEADLINE_LIMIT[0]) < 0.05

    def test_se_lines_printed(self, spec_file, capsys):
        main(["simulate", "--input", spec_file, "--runs", "100", "--seed", "0"])
        out = capsys.readouterr().out
        assert "se_p[a] = " in out
        assert "se_tau = " in out


class TestIdentify:
    def test_recovers_parameters(self, tmp_path, capsys):
        t = ddm_tandem(DdmParams({"a": 1.0, "b": 0.4, "c": 0.0}, 1.2, 0.7))
        path = tmp_path / "t.json"
        save_json(tandem_to_dict(t), path)
        out_path = tmp_path / "params.json"
        code = main(["identify", "--input", str(path),
                     "--output", str(out_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "lambda = 1.2" in out
        assert "beta = 0.7" in out
        params = json.loads(out_path.read_text())
        assert params["lambda"] == pytest.approx(1.2, abs=1e-10)
        assert params["nu"]["b"] == pytest.approx(-0.6, abs=1e-10)

    def test_reference_flag(self, tmp_path, capsys):
        t = ddm_tandem(DdmParams({"a": 1.0, "b": 0.4, "c": 0.0}, 1.2, 0.7))
        path = tmp_path / "t.json"
        save_json(tandem_to_dict(t), path)
        assert main(["identify", "--input", str(path), "--reference", "c"]) == 0
        assert "nu[c] = 0" in capsys.readouterr().out

    def test_kernel_only_rejected(self, kernel_file, capsys):
        assert main(["identify", "--input", kernel_file]) == 2
        assert "TandemRequired" in capsys.readouterr().err

    def test_inconsistent_tandem_rejected(self, tmp_path, u421_kernel, capsys):
        from nma import Tandem

        tau = np.where(np.eye(3, dtype=bool), 0.0, 1.0)
        path = tmp_path / "flat.json"
        save_json(tandem_to_dict(Tandem(u421_kernel, tau)), path)
        assert main(["identify", "--input", str(path)]) == 2
        assert "InconsistentTandem" in capsys.readouterr().err


class TestLimit:
    def test_simple_limit(self, spec_file, tmp_path):
        out_path = tmp_path / "pi.json"
        assert main(["limit", "--input", spec_file,
                     "--output", str(out_path)]) == 0
        payload = json.loads(out_path.read_text())
        assert payload["kind"] == "simple"
        assert payload["pi"]["a"] == pytest.approx(PI_421[0], abs=1e-12)

    def test_deadline_limit(self, spec_file, tmp_path):
        out_path = tmp_path / "pi.json"
        assert main(["limit", "--input", spec_file, "--deadline",
                     "--output", str(out_path)]) == 0
        payload = json.loads(out_path.read_text())
        assert payload["kind"] == "deadline"
        assert payload["pi"]["a"] == pytest.approx(DEADLINE_LIMIT[0], abs=1e-12)

    def test_intransitive_spec_rejected(self, tmp_path, cyclic_kernel, capsys):
        obj = {
            "menu": list(MENU),
            "mu": [1 / 3, 1 / 3, 1 / 3],
            "Q": q_dict(),
            "model": {"kind": "tandem", **kernel_to_dict(cyclic_kernel),
                      "tau": np.zeros((3, 3)).tolist()},
        }
        path = tmp_path / "cycle_spec.json"
        save_json(obj, path)
        assert main(["limit", "--input", str(path)]) == 2
        assert "NotTransitiveError" in capsys.readouterr().err


class TestConvergence:
    def test_csv_output(self, spec_file, tmp_path):
        out_path = tmp_path / "conv.csv"
        code = main(["convergence", "--input", spec_file, "--format", "csv",
                     "--output", str(out_path), "0", "1", "2", "50"])
        assert code == 0
        lines = out_path.read_text().strip().splitlines()
        assert lines[0] == "x,series,value"
        assert len(lines) == 5
        last = float(lines[-1].split(",")[2])
        assert last < 1e-10

    def test_default_horizons_on_stdout(self, spec_file, capsys):
        assert main(["convergence", "--input", spec_file]) == 0
        out = capsys.readouterr().out
        assert "n=0: " in out and "n=100: " in out

    def test_negative_horizon_is_domain_error(self, spec_file, capsys):
        assert main(["convergence", "--input", spec_file, "--", "-3"]) == 2
        assert "ValueError" in capsys.readouterr().err


class TestUsage:
    def test_unknown_command(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_missing_input_flag(self, capsys):
        assert main(["validate"]) == 1
