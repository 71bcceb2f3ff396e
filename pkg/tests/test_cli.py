from __future__ import annotations

import io
import json
import subprocess
import sys

import numpy as np
import pytest

from kyfanlab.cli import run

PI = np.pi

AR1 = '{"type": "covariance", "family": "ar1", "rho": 0.5}'
PI_ATOM = '{"type": "spectral", "atoms": [{"theta": 3.141592653589793, "weight": 1.0}]}'
PI2_ATOM = '{"type": "spectral", "atoms": [{"theta": 1.5707963267948966, "weight": 1.0}]}'
HALF_HALF = (
    '{"type": "spectral", "atoms": [{"theta": 0.0, "weight": 0.5},'
    ' {"theta": 3.141592653589793, "weight": 0.5}]}'
)
ORBIT = (
    '{"type": "orbit", "T": [[1.0, 0.0], [0.0, [0.0, 1.0]]],'
    ' "x0": [0.7071067811865476, 0.7071067811865476], "class": "unitary"}'
)


def capture(argv):
    buf = io.StringIO()
    code = run(argv, stdout=buf)
    return code, buf.getvalue()


def capture_json(argv):
    code, text = capture(argv)
    return code, json.loads(text)


class TestCheckCommand:
    def test_identity_hand_value(self, tmp_path):
        path = tmp_path / "ar1.json"
        path.write_text(AR1)
        code, doc = capture_json(
            ["check", "kyfan.identity", "--model", str(path), "--n", "1", "--m", "2"]
        )
        assert code == 0
        result = doc["results"][0]
        assert result["lhs"] == pytest.approx(2 / 3, abs=1e-12)
        assert result["rhs"] == pytest.approx(2 / 3, abs=1e-12)
        assert doc["summary"]["failures"] == 0

    def test_inline_model(self):
        code, doc = capture_json(
            ["check", "kyfan.superadd", "--model", AR1, "--n", "1", "--m", "2"]
        )
        assert code == 0
        assert doc["results"][0]["verdict"] == "inequality-pass"

    def test_lemma1_with_delta(self):
        code, doc = capture_json(
            [
                "check", "kyfan.lemma1",
                "--model", '{"type": "covariance", "family": "orthonormal"}',
                "--n", "1", "--m", "1", "--delta", "0.5",
            ]
        )
        assert code == 0
        assert doc["results"][0]["lhs"] == pytest.approx(2 * np.sqrt(2) - 2, abs=1e-12)

    def test_forced_failure_exit_2(self):
        # zero tolerance turns any nonzero rounding residual into a failure
        code, doc = capture_json(
            [
                "check", "kyfan.identity", "--model", AR1,
                "--n", "1", "--m", "2", "--tol-abs", "0", "--tol-rel", "0",
            ]
        )
        assert code == 2
        assert doc["results"][0]["verdict"] == "fail"


class TestScanCommand:
    def test_superadd_scan(self):
        code, doc = capture_json(
            ["scan", "kyfan.superadd", "--model", PI2_ATOM,
             "--n-max", "64", "--m-max", "64"]
        )
        assert code == 0
        assert doc["results"][0]["cells"] == 4096
        assert doc["summary"]["failures"] == 0

    def test_determinism_byte_identical(self):
        argv = [
            "scan", "kyfan.identity", "--model", AR1,
            "--n-max", "32", "--m-max", "32",
            "--sampling", "random", "--count", "200", "--seed", "7",
        ]
        code1, text1 = capture(argv)
        code2, text2 = capture(argv)
        assert code1 == code2 == 0
        assert text1 == text2

    def test_worker_count_changes_only_params(self):
        base = [
            "scan", "kyfan.inequality", "--model", PI_ATOM,
            "--n-max", "16", "--m-max", "16",
        ]
        _, doc1 = capture_json(base + ["--workers", "1"])
        _, doc4 = capture_json(base + ["--workers", "4"])
        for doc in (doc1, doc4):
            doc["params"].pop("workers")
            doc["results"][0]["params"].pop("workers")
        assert doc1 == doc4


class TestValidateCommand:
    def test_pass(self):
        code, doc = capture_json(["validate", "--model", AR1])
        assert code == 0
        assert doc["results"][0]["passed"]

    def test_fail_exit_2(self):
        bad = '{"type": "covariance", "table": {"0": 1.0, "1": 0.9, "2": 0.9}, "horizon": 8}'
        code, doc = capture_json(["validate", "--model", bad, "--psd-window", "8"])
        assert code == 2
        assert not doc["results"][0]["passed"]


class TestSeriesOutput:
    def test_fekete_csv_last_row(self):
        code, text = capture(
            ["asymp.fekete", "--model", HALF_HALF, "--N", "10", "--format", "csv"]
        )
        assert code == 0
        lines = text.strip().splitlines()
        assert lines[0] == "index,value,bound"
        # value at n = 10 is exactly 1/2 (even index kills the odd-atom term)
        assert lines[-1] == "10,0.5,0.5"

    def test_chain_csv(self):
        code, text = capture(
            ["diag.chain", "--model", PI2_ATOM, "--base", "2", "--depth", "20",
             "--format", "csv"]
        )
        assert code == 0
        last = text.strip().splitlines()[-1].split(",")
        assert int(last[0]) == 20
        assert float(last[1]) == pytest.approx(0.5, abs=1e-6)

    def test_decay_csv_empty_transform(self):
        code, text = capture(
            ["frac.decay", "--model", '{"type": "spectral", "atoms": '
             '[{"theta": 0.0, "weight": 1.0}]}',
             "--alpha", "0.5", "--N", "64", "--format", "csv"]
        )
        assert code == 0
        rows = text.strip().splitlines()[1:]
        assert all(r.split(",")[1] == "0" for r in rows)

    def test_csv_on_non_series_rejected(self):
        code, _ = capture(
            ["check", "kyfan.identity", "--model", AR1, "--n", "1", "--m", "1",
             "--format", "csv"]
        )
        assert code == 1


class TestOtherCommands:
    def test_cesaro(self):
        code, doc = capture_json(["asymp.cesaro", "--model", HALF_HALF, "--N", "1024"])
        assert code == 0
        body = doc["results"][0]
        assert body["lim_estimate_sq"] == pytest.approx(0.5, abs=1e-9)
        assert body["trend_nonincreasing"]

    def test_project(self):
        code, doc = capture_json(["asymp.project", "--model", ORBIT, "--N", "1024"])
        assert code == 0
        body = doc["results"][0]
        assert body["chi_norm"] == pytest.approx(np.sqrt(0.5), abs=1e-10)
        assert body["riesz_angle"] <= 1e-9

    def test_dlim(self):
        code, doc = capture_json(
            ["asymp.dlim", "--model", PI_ATOM, "--a", "1", "--N", "2000",
             "--epsilon", "0.1"]
        )
        # unit-gap ratios hover near the total mass: not density-null
        assert code == 2
        assert doc["results"][0]["verdict"] == "not-consistent"

    def test_diag_ratio(self):
        code, doc = capture_json(
            ["diag.ratio", "--model", PI2_ATOM, "--n", "2", "--m", "4"]
        )
        assert code == 0
        assert doc["results"][0]["ratio"] == pytest.approx(2.0, abs=1e-12)

    def test_diag_sum(self):
        code, doc = capture_json(
            ["diag.sum", "--model", PI_ATOM, "--seq", "squares", "--N", "200",
             "--normalization", "by_count"]
        )
        assert code == 0
        assert doc["results"][0]["value"] == pytest.approx(0.0182458, abs=1e-6)

    def test_diag_arith(self):
        code, doc = capture_json(
            ["diag.arith", "--model", '{"type": "covariance", "family": "orthonormal"}',
             "--a", "3", "--N", "5"]
        )
        assert code == 0
        assert doc["results"][0]["lhs"] == pytest.approx(4 / 15, abs=1e-12)

    def test_frac_apply(self):
        code, doc = capture_json(["frac.apply", "--model", PI_ATOM, "--alpha", "0.5"])
        assert code == 0
        atoms = doc["results"][0]["transformed"]["atoms"]
        assert atoms[0]["weight"] == pytest.approx(2.0, abs=1e-12)

    def test_frac_series(self):
        code, doc = capture_json(["frac.series", "--model", PI_ATOM, "--N", "16384"])
        assert code == 0
        body = doc["results"][0]
        assert body["verdict"] == "converging"
        assert body["limit_estimate"] == pytest.approx(PI ** 2 / 8, abs=1e-3)

    def test_fsup_iratio(self):
        code, doc = capture_json(
            ["fsup.iratio", "--model", '{"type": "covariance", "family": "constant"}',
             "--x", "1", "--y", "3"]
        )
        assert code == 0
        assert doc["results"][0]["i_value"] == pytest.approx(np.sqrt(0.75), abs=1e-12)

    def test_fsup_subadd(self):
        code, doc = capture_json(
            ["fsup.subadd", "--model", PI2_ATOM, "--n-max", "128"]
        )
        assert code == 0
        assert doc["results"][0]["failures"] == 0


class TestErrorHandling:
    def test_unknown_model_type(self):
        code, _ = capture(["validate", "--model", '{"type": "bogus"}'])
        assert code == 1

    def test_unknown_model_field(self):
        code, _ = capture(
            ["validate", "--model", '{"type": "covariance", "family": "ar1", '
             '"rho": 0.5, "wat": 1}']
        )
        assert code == 1

    def test_missing_file(self):
        code, _ = capture(["validate", "--model", "/does/not/exist.json"])
        assert code == 1

    def test_unknown_flag(self):
        code, _ = capture(["validate", "--model", AR1, "--frobnicate", "2"])
        assert code == 1

    def test_malformed_rho(self):
        code, _ = capture(
            ["validate", "--model", '{"type": "covariance", "family": "ar1", "rho": 1.0}']
        )
        assert code == 1

    def test_out_file(self, tmp_path):
        out = tmp_path / "report.json"
        code, text = capture(
            ["check", "kyfan.identity", "--model", AR1, "--n", "1", "--m", "2",
             "--out", str(out)]
        )
        assert code == 0
        assert text == ""
        doc = json.loads(out.read_text())
        assert doc["summary"]["failures"] == 0


def test_subprocess_entrypoint():
    proc = subprocess.run(
        [sys.executable, "-m", "kyfanlab", "check", "kyfan.identity",
         "--model", AR1, "--n", "1", "--m", "2"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    doc = json.loads(proc.stdout)
    assert doc["results"][0]["verdict"] == "identity-pass"
