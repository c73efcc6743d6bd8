import json
import os
from fractions import Fraction

import pytest

from mixhom.cli import ParseError, main, parse_job, run_job

Q = Fraction

EXT_JOB = """
[algebra]
kind exterior
n 2

[window]
p_max 3
w_max 3

[tasks]
hh
check
"""

POLY_POISSON_JOB = """
[algebra]
kind polynomial
n 2
cutoff 4

[poisson]
c 1 2 1 2 1

[window]
p_max 2
w_max 3

[tasks]
poisson
"""


class TestParse:
    def test_minimal_exterior_job(self):
        spec = parse_job(EXT_JOB)
        assert spec.kind == "exterior" and spec.n == 2
        assert spec.tasks == ["hh", "check"]

    def test_rational_coefficient(self):
        spec = parse_job(
            "[algebra]\nkind polynomial\nn 2\n[poisson]\nc 1 2 1 2 1/3\n"
        )
        assert spec.poisson_coeffs == {(1, 2, 1, 2): Q(1, 3)}

    def test_index_out_of_range_reports(self):
        with pytest.raises(ParseError) as exc:
            parse_job("[algebra]\nkind polynomial\nn 2\n[poisson]\nc 1 5 1 2 1\n")
        assert "5" in str(exc.value)

    def test_syntax_error_carries_line_number(self):
        with pytest.raises(ParseError) as exc:
            parse_job("[algebra]\nkind exterior\nn 2\n[window]\np_max zero\n")
        assert exc.value.line_no == 5

    def test_unknown_task_rejected(self):
        with pytest.raises(ParseError):
            parse_job("[algebra]\nkind exterior\nn 1\n[tasks]\nfly\n")


class TestRun:
    def test_exterior_check_passes(self, tmp_path):
        spec = parse_job(EXT_JOB)
        code = run_job(spec, str(tmp_path))
        assert code == 0
        data = json.loads((tmp_path / "check.json").read_text())
        assert data["schema"].startswith("mixhom-result@")
        assert data["result"]["passed"] is True

    def test_poisson_task_reports_verdicts(self, tmp_path):
        spec = parse_job(POLY_POISSON_JOB)
        code = run_job(spec, str(tmp_path))
        assert code == 0
        data = json.loads((tmp_path / "poisson.json").read_text())
        res = data["result"]
        assert res["unimodular"] is False
        assert res["equivalence_holds"] is True

    def test_outputs_have_no_floats(self, tmp_path):
        spec = parse_job(POLY_POISSON_JOB)
        run_job(spec, str(tmp_path))
        blob = (tmp_path / "poisson.json").read_text()
        decoded = json.loads(blob)

        def walk(x):
            assert not isinstance(x, float)
            if isinstance(x, dict):
                for v in x.values():
                    walk(v)
            elif isinstance(x, list):
                for v in x:
                    walk(v)

        walk(decoded)

    def test_byte_determinism(self, tmp_path):
        spec = parse_job(EXT_JOB)
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        run_job(spec, str(out1))
        run_job(spec, str(out2))
        for name in sorted(os.listdir(out1)):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_main_exit_codes(self, tmp_path):
        job = tmp_path / "job.txt"
        job.write_text(EXT_JOB)
        assert main(["hh", "--input", str(job), "--out", str(tmp_path / "o")]) == 0
        bad = tmp_path / "bad.txt"
        bad.write_text("[algebra]\nkind exterior\n")
        assert main(["hh", "--input", str(bad), "--out", str(tmp_path / "o2")]) == 4
        assert main(["hh", "--input", str(tmp_path / "missing"), "--out", str(tmp_path / "o3")]) == 4
