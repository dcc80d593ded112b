import json
import subprocess
import sys

import pytest

from pulab.cli import EXIT_CHECK_FAILED, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from pulab.concept_core import ConceptClass


@pytest.fixture
def co_singletons(tmp_path):
    path = tmp_path / "co_singletons_6.json"
    path.write_text(json.dumps(ConceptClass.co_singletons(6).to_json()))
    return str(path)


@pytest.fixture
def agno_json(tmp_path):
    path = tmp_path / "inst.json"
    rc = main(["gen", "--family", "agno", "--k", "3", "--rho", "0.2", "--o1", "1",
               "--o2", "1,2", "--out", str(path)])
    assert rc == EXIT_OK
    return str(path)


class TestCombinatorics:
    def test_claw(self, co_singletons, capsys):
        assert main(["claw", "--class", co_singletons, "--max-level", "6"]) == EXIT_OK
        assert capsys.readouterr().out == "1 (certified to M=6)\n"

    def test_vcdim(self, co_singletons, capsys):
        assert main(["vcdim", "--class", co_singletons]) == EXIT_OK
        assert capsys.readouterr().out == "1\n"

    def test_claw_level_too_large(self, co_singletons, capsys):
        assert main(["claw", "--class", co_singletons, "--max-level", "9"]) == EXIT_USAGE
        assert "error" in capsys.readouterr().err


class TestGenLearn:
    def test_agno_alpha(self, agno_json):
        with open(agno_json) as fh:
            obj = json.load(fh)
        assert set(obj) == {"family", "params", "D", "P", "class", "closed_forms"}
        alpha = sum(a["p"] for a in obj["D"]["atoms"] if a["y"] == 1)
        assert alpha == pytest.approx(0.5, abs=1e-12)

    def test_missing_family_parameter(self, capsys):
        assert main(["gen", "--family", "agno", "--k", "3"]) == EXIT_USAGE
        assert "--rho" in capsys.readouterr().err

    def test_bad_parameter_value(self, capsys):
        assert main(["gen", "--family", "scar_pos", "--d", "3", "--rho", "2"]) == EXIT_USAGE
        assert "rho" in capsys.readouterr().err

    def test_learn_round_trip_is_byte_identical(self, agno_json, capsys):
        argv = ["learn", "--instance", agno_json, "--learner", "lagrangian", "--gamma", "1",
                "--b", "200", "--a", "200", "--seed", "5"]
        assert main(argv) == EXIT_OK
        first = capsys.readouterr().out
        assert main(argv) == EXIT_OK
        assert capsys.readouterr().out == first
        out = json.loads(first)
        assert out["hypothesis"]["kind"] == "concept"
        assert 0 <= out["trial"]["err"] <= 1

    def test_learn_geometric(self, tmp_path, capsys):
        path = tmp_path / "geo.json"
        assert main(["gen", "--family", "geo_filter", "--out", str(path)]) == EXIT_OK
        assert main(["learn", "--instance", str(path), "--learner", "algorithm1:0.25",
                     "--b", "300", "--a", "300"]) == EXIT_OK
        out = json.loads(capsys.readouterr().out)
        assert out["trial"]["diagnostics"]["filtered_count"] >= 1

    def test_malformed_json(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"family": "x",\n  oops}')
        assert main(["learn", "--instance", str(bad), "--b", "1", "--a", "1"]) == EXIT_IO
        err = capsys.readouterr().err
        assert "line 2" in err and "column" in err

    def test_missing_file(self, capsys):
        assert main(["vcdim", "--class", "/nonexistent/c.json"]) == EXIT_IO


class TestExperiment:
    ARGS = ["experiment", "--family", "scar_pos", "--d", "6", "--rho", "0.3", "--o", "0,1",
            "--b-grid", "10,20", "--paired", "--trials", "30", "--eps", "0.05,0.1"]

    def test_csv_and_jobs(self, capsys):
        assert main(self.ARGS + ["--jobs", "1"]) == EXIT_OK
        one = capsys.readouterr().out
        assert main(self.ARGS + ["--jobs", "2"]) == EXIT_OK
        assert capsys.readouterr().out == one
        lines = one.splitlines()
        assert lines[0].startswith("family,learner,b,a")
        assert len(lines) == 1 + 2 * 2

    def test_seed_env(self, capsys, monkeypatch):
        monkeypatch.setenv("PU_LAB_SEED", "42")
        assert main(self.ARGS) == EXIT_OK
        assert capsys.readouterr().out.splitlines()[1].endswith(",42")

    def test_bad_seed_env(self, capsys, monkeypatch):
        monkeypatch.setenv("PU_LAB_SEED", "abc")
        assert main(self.ARGS) == EXIT_USAGE

    def test_needs_instance(self, capsys):
        assert main(["experiment", "--b-grid", "10", "--paired"]) == EXIT_USAGE


class TestCheck:
    def test_no_alpha(self, capsys):
        assert main(["check", "--bound", "no_alpha_impossibility", "--eta", "0.3"]) == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["pass"] and report["lhs"] >= 0.7
        assert set(report) == {"bound_id", "lhs", "rhs", "pass", "details"}

    def test_failing_check_exits_one(self, capsys):
        # Far too few trials to reject at the 5% level.
        rc = main(["check", "--bound", "lagrangian_known_alpha", "--trials", "5", "--b", "50"])
        assert rc == EXIT_CHECK_FAILED

    def test_unknown_bound(self, capsys):
        assert main(["check", "--bound", "nope"]) == EXIT_USAGE

    def test_no_subcommand(self, capsys):
        assert main([]) == EXIT_USAGE


def test_module_entry_point(co_singletons):
    out = subprocess.run([sys.executable, "-m", "pulab", "claw", "--class", co_singletons],
                         capture_output=True, text=True, check=True)
    assert out.stdout == "1 (certified to M=6)\n"
