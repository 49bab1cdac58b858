"""Acceptance criteria 1-9 at seed 42; each test prints one PASS/FAIL line."""

import subprocess
import sys
from pathlib import Path

import pytest

from orbitlab.acceptance import CRITERIA

SEED = 42


@pytest.fixture(scope="module")
def report(request):
    def emit(text):
        with request.config.pluginmanager.get_plugin("capturemanager").global_and_fixture_disabled():
            print("\n" + text, flush=True)
    return emit


C5_SLIP = pytest.mark.xfail(
    strict=True,
    reason="the stated per-index constant q'/(q'-1) drops the second tail; "
           "the bound that the argument supports is (q'+1)/(q'-1)")


@pytest.mark.parametrize("number", [1, 2, 3, 4, pytest.param(5, marks=C5_SLIP), 6, 7, 8])
def test_criterion(number, report):
    result = CRITERIA[number - 1](SEED)
    report(result.line())
    assert result.numeric_pass, result.details
    assert result.runtime <= result.limit


def test_criterion_5_two_tail_bound():
    result = CRITERIA[4](SEED)
    assert result.details["two_tail_bound_failures"] == []
    assert result.details["max_ee_violation"] <= 1e-12
    assert result.runtime <= result.limit


def _verify_all(out: Path) -> int:
    proc = subprocess.run([sys.executable, "-m", "orbitlab", "verify-all", "--seed", str(SEED),
                           "--out", str(out)], capture_output=True, text=True)
    return proc.returncode


def test_criterion_9_determinism(tmp_path, report):
    codes = [_verify_all(tmp_path / name) for name in ("a", "b")]
    assert codes[0] == codes[1] and codes[0] in (0, 3)
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    same = files == sorted(p.name for p in (tmp_path / "b").iterdir()) and all(
        (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in files)
    report(f"C9 {'PASS' if same else 'FAIL'}  determinism: artifacts={files} byte-identical={same}")
    assert files == ["acceptance.json", "harness.jsonl"]
    assert same
