import json
import math

import numpy as np
import pytest

import chainbounds as cb
from chainbounds import cli
from chainbounds.examples import FLIP_ROWS, SKEW_ROWS, ZERO_ABSOLUTE_GAP_ROWS

GOLDEN_IP_GAP = math.sqrt((3.0 - math.sqrt(5.0)) / 2.0)


def _chain_file(tmp_path, obj, name="chain.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def _four_state_file(tmp_path, **extra):
    doc = {"labels": ["a", "b", "c", "d"], "P": ZERO_ABSOLUTE_GAP_ROWS,
           "f": [1, 0, 0, -1]}
    doc.update(extra)
    return _chain_file(tmp_path, doc)


class TestGaps:
    def test_four_state_values(self, tmp_path, capsys):
        rc = cli.main(["gaps", _four_state_file(tmp_path)])
        out = capsys.readouterr().out
        assert rc == 0
        report = cb.GapReport.from_dict(json.loads(out))
        assert abs(report.eta_a) <= 1e-10
        assert report.eta_s == pytest.approx(0.5, abs=1e-10)
        assert report.eta_p == pytest.approx(GOLDEN_IP_GAP, abs=1e-10)
        assert report.eta is None
        assert report.pseudo.k_max == 20

    def test_identity_chain_not_irreducible(self, tmp_path, capsys):
        path = _chain_file(tmp_path, {"labels": ["a", "b"], "P": [[1, 0], [0, 1]]})
        rc = cli.main(["gaps", path])
        err = capsys.readouterr().err
        assert rc == 2
        assert json.loads(err)["error"] == "NotIrreducible"

    def test_flip_chain_values(self, tmp_path, capsys):
        path = _chain_file(tmp_path, {"labels": ["a", "b"], "P": FLIP_ROWS})
        rc = cli.main(["gaps", path])
        report = cb.GapReport.from_dict(json.loads(capsys.readouterr().out))
        assert rc == 0
        assert report.eta_p == pytest.approx(2.0, abs=1e-10)
        assert report.eta_s == pytest.approx(2.0, abs=1e-10)
        assert abs(report.eta_a) <= 1e-10

    def test_generator_chain(self, tmp_path, capsys):
        path = _chain_file(tmp_path, {"labels": ["x", "y"], "Q": [[-1, 1], [2, -2]]})
        rc = cli.main(["gaps", path])
        doc = json.loads(capsys.readouterr().out)
        assert rc == 0
        assert doc["eta_p"] == pytest.approx(3.0, abs=1e-10)
        assert doc["eta_s"] is None

    def test_schema_error_exit_two(self, tmp_path, capsys):
        path = _chain_file(tmp_path, {"labels": ["a"], "P": [[1.0]], "bogus": 1})
        rc = cli.main(["gaps", path])
        assert rc == 2
        assert json.loads(capsys.readouterr().err)["error"] == "SchemaError"

    def test_human_format(self, tmp_path, capsys):
        rc = cli.main(["gaps", _four_state_file(tmp_path), "--output-format", "human"])
        out = capsys.readouterr().out
        assert rc == 0 and "eta_p" in out

    def test_file_mu_must_be_invariant(self, tmp_path, capsys):
        path = _chain_file(
            tmp_path,
            {"labels": ["a", "b"], "P": [[0.9, 0.1], [0.5, 0.5]], "mu": [0.5, 0.5]},
        )
        rc = cli.main(["gaps", path])
        assert rc == 2
        assert json.loads(capsys.readouterr().err)["error"] == "NotInvariant"


class TestBound:
    ARGS = [
        "bound", "--mode", "discrete", "--n", "1000", "--delta", "0.1",
        "--M", "1", "--sigma2", "0.1", "--eta-p", "1", "--p", "inf",
        "--nu-norm", "1",
    ]

    def test_hand_value(self, capsys):
        rc = cli.main(self.ARGS)
        doc = json.loads(capsys.readouterr().out)
        assert rc == 0
        assert doc["probability_bound"] == pytest.approx(
            2 * math.exp(-10 / (4 * math.sqrt(6.41))), rel=1e-12
        )
        assert cb.BoundResult.from_dict(doc) is not None

    def test_delta_zero_vacuous_still_exit_zero(self, capsys):
        args = list(self.ARGS)
        args[args.index("--delta") + 1] = "0"
        rc = cli.main(args)
        doc = json.loads(capsys.readouterr().out)
        assert rc == 0
        assert doc["vacuous"] is True
        assert doc["probability_bound"] == pytest.approx(2.0)

    def test_p_one_rejected(self, capsys):
        args = list(self.ARGS)
        args[args.index("--p") + 1] = "1"
        rc = cli.main(args)
        err = json.loads(capsys.readouterr().err)
        assert rc == 2
        assert "vacuous" in err["message"]

    def test_missing_flag_is_exit_two(self, capsys):
        rc = cli.main(["bound", "--mode", "discrete", "--n", "10"])
        assert rc == 2
        assert json.loads(capsys.readouterr().err)["error"] == "ArgumentError"


class TestMgf:
    def test_theta_zero(self, tmp_path, capsys):
        rc = cli.main(["mgf", _four_state_file(tmp_path), "--theta", "0", "--n", "5"])
        doc = json.loads(capsys.readouterr().out)
        assert rc == 0
        assert doc["exact"] == pytest.approx(1.0, rel=1e-12)
        assert doc["bound"] == pytest.approx(1.0, rel=1e-12)
        assert doc["within_bound"] is True

    def test_out_of_range_theta_reports_null_bound(self, tmp_path, capsys):
        rc = cli.main(["mgf", _four_state_file(tmp_path), "--theta", "5", "--n", "5"])
        doc = json.loads(capsys.readouterr().out)
        assert rc == 0
        assert doc["theta_in_range"] is False
        assert doc["bound"] is None
        assert doc["exact"] > 1.0

    def test_with_empirical(self, tmp_path, capsys):
        rc = cli.main([
            "mgf", _four_state_file(tmp_path), "--theta", "0.2", "--n", "10",
            "--replicas", "2000", "--seed", "4",
        ])
        doc = json.loads(capsys.readouterr().out)
        assert rc == 0
        emp = cb.SimReport.from_dict(doc["empirical"])
        assert emp.ci_low <= doc["exact"] <= emp.ci_high
        assert doc["exact"] <= doc["bound"] * (1 + 1e-9)

    def test_continuous_chain(self, tmp_path, capsys):
        path = _chain_file(
            tmp_path,
            {"labels": ["x", "y"], "Q": [[-1, 1], [2, -2]], "f": [1, -1]},
        )
        rc = cli.main(["mgf", path, "--theta", "0.3", "--t", "2.0"])
        doc = json.loads(capsys.readouterr().out)
        assert rc == 0
        assert doc["mode"] == "continuous"
        assert doc["exact"] <= doc["bound"] * (1 + 1e-9)


class TestVerify:
    def test_flip_chain_trivial(self, tmp_path, capsys):
        path = _chain_file(
            tmp_path, {"labels": ["a", "b"], "P": FLIP_ROWS, "f": [1, -1]}
        )
        rc = cli.main([
            "verify", path, "--n", "50", "--delta-grid", "0.5",
            "--replicas", "200", "--seed", "0",
        ])
        captured = capsys.readouterr()
        assert rc == 0
        lines = captured.out.strip().split("\n")
        assert lines[0] == cli.VERIFY_CSV_HEADER
        fields = lines[1].split(",")
        assert float(fields[1]) == 0.0  # even horizon: sums cancel exactly
        assert fields[5] == "true"
        assert "auto-centered f" in captured.err

    def test_reproducible_output(self, tmp_path, capsys):
        path = _four_state_file(tmp_path)
        args = [
            "verify", path, "--n", "100", "--delta-grid", "0.1,0.2",
            "--replicas", "400", "--seed", "21",
        ]
        assert cli.main(args) == 0
        first = capsys.readouterr().out
        assert cli.main(args) == 0
        second = capsys.readouterr().out
        assert first == second

    def test_continuous_verify(self, tmp_path, capsys):
        path = _chain_file(
            tmp_path,
            {"labels": ["x", "y"], "Q": [[-1, 1], [2, -2]], "f": [1, -1]},
        )
        rc = cli.main([
            "verify", path, "--t", "30", "--delta-grid", "0.5",
            "--replicas", "500", "--seed", "2",
        ])
        out = capsys.readouterr().out
        assert rc == 0
        assert out.splitlines()[1].split(",")[5] == "true"

    def test_point_mass_nu(self, tmp_path, capsys):
        path = _four_state_file(tmp_path, nu=[1, 0, 0, 0])
        rc = cli.main([
            "verify", path, "--n", "80", "--delta-grid", "0.2",
            "--replicas", "300", "--seed", "5", "--p", "inf",
        ])
        assert rc == 0

    def test_violation_exits_one(self, tmp_path, capsys, monkeypatch):
        # force an inconsistent report to exercise the exit-1 contract
        def fake_tail(config, op, f, bound=None):
            return cb.SimReport(
                kind="tail", estimate=0.9, ci_low=0.8, ci_high=0.95,
                replicas_used=config.replicas, seed=config.seed,
                bound_compared=bound, consistent=False,
            )

        monkeypatch.setattr(cli, "empirical_tail", fake_tail)
        rc = cli.main([
            "verify", _four_state_file(tmp_path), "--n", "10",
            "--delta-grid", "0.9", "--replicas", "10", "--seed", "0",
        ])
        assert rc == 1
        out = capsys.readouterr().out
        assert out.splitlines()[1].split(",")[5] == "false"

    def test_missing_f_is_schema_error(self, tmp_path, capsys):
        path = _chain_file(tmp_path, {"labels": ["a", "b"], "P": FLIP_ROWS})
        rc = cli.main(["verify", path, "--n", "10", "--delta-grid", "0.1"])
        assert rc == 2
        assert json.loads(capsys.readouterr().err)["error"] == "SchemaError"

    def test_flag_overrides_file_f_with_warning(self, tmp_path, capsys):
        path = _four_state_file(tmp_path)
        rc = cli.main([
            "verify", path, "--n", "20", "--delta-grid", "0.3",
            "--replicas", "100", "--seed", "0", "--f", "0.5,0,0,-0.5",
        ])
        captured = capsys.readouterr()
        assert rc == 0
        assert "overrides" in captured.err


class TestSweep:
    def test_exponent_doubles(self, capsys):
        rc = cli.main([
            "sweep", "--mode", "discrete", "--axis", "n", "--values", "1000,2000",
            "--delta", "0.1", "--M", "1", "--sigma2", "0.1", "--eta-p", "1",
        ])
        out = capsys.readouterr().out
        assert rc == 0
        lines = out.strip().split("\n")
        assert lines[0] == "axis,value,exponent,bound,theta,c_theta,vacuous"
        e1 = float(lines[1].split(",")[2])
        e2 = float(lines[2].split(",")[2])
        assert e2 == pytest.approx(2 * e1, rel=1e-12)

    def test_json_format(self, capsys):
        rc = cli.main([
            "sweep", "--mode", "discrete", "--axis", "delta", "--values", "0.0,0.1",
            "--n", "10000", "--M", "1", "--sigma2", "0.1", "--eta-p", "1",
            "--output-format", "json",
        ])
        doc = json.loads(capsys.readouterr().out)
        assert rc == 0
        assert doc[0]["vacuous"] is True and doc[1]["vacuous"] is False

    def test_invalid_value_exit_two(self, capsys):
        rc = cli.main([
            "sweep", "--mode", "discrete", "--axis", "delta", "--values", "0.1,-1",
            "--n", "100", "--M", "1", "--sigma2", "0.1", "--eta-p", "1",
        ])
        assert rc == 2


class TestRadius:
    def test_skew_file(self, tmp_path, capsys):
        path = tmp_path / "m.json"
        path.write_text(json.dumps(SKEW_ROWS))
        rc = cli.main(["radius", str(path)])
        doc = json.loads(capsys.readouterr().out)
        assert rc == 0
        assert doc["real"] == 0.0
        assert doc["complex"] == pytest.approx(1.0, abs=1e-9)

    def test_wrapped_matrix_key(self, tmp_path, capsys):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"B": [[0, 1], [0, 0]]}))
        rc = cli.main(["radius", str(path), "--grid-points", "1440"])
        doc = json.loads(capsys.readouterr().out)
        assert rc == 0
        assert doc["complex"] == pytest.approx(0.5, abs=1e-9)

    def test_bad_document(self, tmp_path, capsys):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"A": [[0]]}))
        assert cli.main(["radius", str(path)]) == 2


class TestExamples:
    @pytest.mark.parametrize("name", ["appendix-a", "skew-radius", "flip-chain"])
    def test_builtins_pass(self, name, capsys):
        rc = cli.main(["examples", name])
        out = capsys.readouterr().out
        assert rc == 0
        assert "FAIL" not in out and "PASS" in out

    def test_unknown_name_lists_known(self, capsys):
        rc = cli.main(["examples", "nope"])
        err = json.loads(capsys.readouterr().err)
        assert rc == 2
        assert "appendix-a" in err["known"]


class TestParsing:
    def test_no_subcommand_exit_two(self, capsys):
        assert cli.main([]) == 2

    def test_missing_file_exit_two(self, capsys):
        rc = cli.main(["gaps", "/nonexistent/chain.json"])
        assert rc == 2

    def test_malformed_value_list_exit_two(self, tmp_path, capsys):
        path = _four_state_file(tmp_path)
        rc = cli.main([
            "verify", path, "--n", "10", "--delta-grid", "0.1,oops",
            "--replicas", "10",
        ])
        assert rc == 2
        last_err_line = capsys.readouterr().err.strip().splitlines()[-1]
        assert json.loads(last_err_line)["error"] == "ValueError"
