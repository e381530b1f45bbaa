import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from levyhunt.cli import RunManifest, build_parser, cmd_simulate, main, manifest_from_args
from levyhunt.specfile import load_spec


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


class TestCheck:
    @pytest.mark.parametrize("name, code", [
        ("gaussian-1d", 0),
        ("gaussian-drift-1d", 0),
        ("holds-compensated-2d", 0),
        ("compound-poisson", 0),
        ("compound-poisson-2d", 0),
        ("subordinator-poisson", 0),
        ("fails-case-2d", 10),
        ("drift-only", 10),
        ("subordinator-drift", 10),
        ("radial-offrange-2d", 20),
    ])
    def test_exit_codes(self, fixture_file, name, code):
        assert run_cli("check", "-i", fixture_file(name))[0] == code

    def test_human_report(self, fixture_file):
        code, out, _ = run_cli("check", "-i", fixture_file("fails-case-2d"))
        assert code == 10
        assert "(H) FAILS" in out and "b' = (0, 1)" in out

    def test_structured_report(self, fixture_file):
        code, out, _ = run_cli("check", "-i", fixture_file("fails-case-2d"), "--format", "structured")
        doc = json.loads(out)
        assert doc["command"] == "check" and doc["verdict"] == "FAILS"
        assert doc["condition_S"]["solvable"] is False
        assert doc["bprime"] == [0.0, 1.0]
        assert doc["rule"] == "finite_off_range"

    def test_infinite_mass_serializes(self, fixture_file):
        doc = json.loads(run_cli("check", "-i", fixture_file("radial-offrange-2d"), "--format", "structured")[1])
        assert doc["mu1_mass"] == "inf" and doc["verdict"] == "INCONCLUSIVE"

    def test_subordinator_rule_reported(self, fixture_file):
        doc = json.loads(run_cli("check", "-i", fixture_file("subordinator-drift"), "--format", "structured")[1])
        assert doc["subordinator_rule"]["verdict"] == "FAILS"

    def test_exponent_only_is_input_error(self, fixture_file):
        code, _, err = run_cli("check", "-i", fixture_file("cauchy"))
        assert code == 1 and "exponent-only" in err

    def test_output_file(self, fixture_file, tmp_path):
        dest = tmp_path / "report.txt"
        code, out, _ = run_cli("check", "-i", fixture_file("gaussian-1d"), "-o", str(dest))
        assert code == 0 and out == ""
        assert "(H) HOLDS" in dest.read_text()


class TestKestenAndExponent:
    def test_gaussian(self, fixture_file):
        code, out, _ = run_cli("kesten", "-i", fixture_file("gaussian-1d"))
        assert code == 0
        assert "classification: CONVERGES" in out
        limit = float(out.split("limit: ")[1].split()[0])
        assert limit == pytest.approx(math.pi / math.sqrt(2), abs=1e-4)

    def test_cauchy(self, fixture_file):
        doc = json.loads(run_cli("kesten", "-i", fixture_file("cauchy"), "--format", "structured")[1])
        assert doc["classification"] == "DIVERGES" and doc["limit_estimate"] is None

    def test_two_dimensions_rejected(self, fixture_file):
        assert run_cli("kesten", "-i", fixture_file("fails-case-2d"))[0] == 1

    def test_exponent_lines(self, fixture_file, tmp_path):
        grid = tmp_path / "z.txt"
        grid.write_text("# frequencies\n1\n-2\n\n0.5\n")
        code, out, _ = run_cli("exponent", "-i", fixture_file("drift-only"), "--zgrid", str(grid))
        rows = [list(map(float, line.split())) for line in out.splitlines()]
        assert code == 0 and len(rows) == 3
        # drift-only: psi(z) = i a z with a = 1
        np.testing.assert_array_equal(np.array(rows), [[1, 0, 1], [-2, 0, -2], [0.5, 0, 0.5]])

    def test_exponent_bad_grid(self, fixture_file, tmp_path):
        grid = tmp_path / "z.txt"
        grid.write_text("1 2\n")
        code, _, err = run_cli("exponent", "-i", fixture_file("drift-only"), "--zgrid", str(grid))
        assert code == 1 and "line 1" in err


class TestSimulate:
    def _structured(self, fixture_file, *extra):
        code, out, _ = run_cli("simulate", "-i", fixture_file("fails-case-2d"), "--format", "structured",
                               "--paths", "500", "--seed", "17", *extra)
        assert code == 0
        return out

    def test_byte_identical_across_runs_and_workers(self, fixture_file):
        one = self._structured(fixture_file)
        assert self._structured(fixture_file) == one
        assert self._structured(fixture_file, "--workers", "2") == one

    def test_seed_changes_output(self, fixture_file):
        assert self._structured(fixture_file) != self._structured(fixture_file, "--seed", "18")

    def test_seed_env_fallback(self, fixture_file, monkeypatch):
        explicit = self._structured(fixture_file)
        monkeypatch.setenv("LEVYHUNT_SEED", "17")
        code, out, _ = run_cli("simulate", "-i", fixture_file("fails-case-2d"), "--format", "structured",
                               "--paths", "500")
        assert out == explicit
        monkeypatch.setenv("LEVYHUNT_SEED", "seventeen")
        assert run_cli("simulate", "-i", fixture_file("fails-case-2d"))[0] == 1

    def test_summary_fields(self, fixture_file):
        doc = json.loads(self._structured(fixture_file))
        assert doc["drift_applied"] == [0.0, 1.0]
        assert doc["jumps_by_origin"]["off-range"] == doc["jump_count"]
        assert "workers" not in doc["config"]

    def test_dumps(self, fixture_file, tmp_path):
        paths, jumps = tmp_path / "p.csv", tmp_path / "j.csv"
        code, out, _ = run_cli("simulate", "-i", fixture_file("fails-case-2d"), "--paths", "3", "--dt", "0.5",
                               "--dump-paths", str(paths), "--dump-jumps", str(jumps))
        assert code == 0 and "3 paths" in out
        assert len(paths.read_text().splitlines()) == 1 + 3 * 3
        assert jumps.read_text().startswith("path_id,t,origin,dx_1,dx_2\n")

    def test_manifest_direct(self, fixture_file):
        args = build_parser().parse_args(["simulate", "-i", fixture_file("gaussian-1d"), "--paths", "10",
                                          "--seed", "1", "--format", "structured"])
        m = manifest_from_args(args)
        assert isinstance(m, RunManifest)
        a = cmd_simulate(m, load_spec(m.input_path))
        b = cmd_simulate(m, load_spec(m.input_path))
        assert a == b


class TestHit:
    def test_exact_landing_frequency(self, fixture_file):
        code, out, _ = run_cli("hit", "-i", fixture_file("fails-case-2d"), "--from-construction", "1",
                               "--paths", "100000", "--dt", "0.05", "--seed", "2024", "--format", "structured")
        doc = json.loads(out)
        assert code == 0
        assert doc["start"] == [0.0, -1.0]
        assert abs(doc["p_hat"] - math.exp(-1)) <= 0.01
        assert doc["evidence"].startswith("empirical corroboration")

    def test_thinness(self, fixture_file):
        code, out, _ = run_cli("hit", "-i", fixture_file("fails-case-2d"), "--thinness", "--paths", "2000",
                               "--format", "structured")
        doc = json.loads(out)
        assert code == 0 and doc["paths_with_revisits"] == 0

    def test_thinness_rejects_holds_case(self, fixture_file):
        code, _, err = run_cli("hit", "-i", fixture_file("holds-compensated-2d"), "--thinness", "--paths", "10")
        assert code == 1 and "b' lies in range" in err

    def test_point_target(self, fixture_file):
        code, out, _ = run_cli("hit", "-i", fixture_file("gaussian-1d"), "--target-point", "0.5",
                               "--tube-delta", "0.05", "--paths", "200")
        assert code == 0 and "p_hat" in out

    def test_full_rank_needs_point(self, fixture_file):
        assert run_cli("hit", "-i", fixture_file("gaussian-1d"), "--paths", "10")[0] == 1


class TestErrors:
    @pytest.mark.parametrize("argv", [
        ["bogus"],
        [],
        ["check"],
        ["check", "-i", "/nonexistent.json"],
        ["simulate", "-i", "{fixture}", "--paths", "0"],
        ["simulate", "-i", "{fixture}", "--dt", "2"],
        ["simulate", "-i", "{fixture}", "--eps", "2"],
        ["simulate", "-i", "{fixture}", "--start", "1,x"],
        ["check", "-i", "{fixture}", "--grid-decades", "40"],
    ])
    def test_usage_errors(self, fixture_file, argv):
        argv = [a.replace("{fixture}", fixture_file("fails-case-2d")) for a in argv]
        code, _, err = run_cli(*argv)
        assert code == 1 and err.startswith("error:")

    def test_malformed_spec(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{\n  "n": 1,\n  "a": [0],\n  "A": [[-1]]\n}\n')
        code, _, err = run_cli("check", "-i", str(bad))
        assert code == 1 and "line 4" in err

    def test_module_entry_point(self, fixture_file):
        proc = subprocess.run([sys.executable, "-m", "levyhunt", "check", "-i", fixture_file("fails-case-2d")],
                              capture_output=True, text=True)
        assert proc.returncode == 10 and "FAILS" in proc.stdout
