"""Acceptance criteria 1-9, each at its stated tolerance.

Every criterion prints one ``criterion N [PASS|FAIL] ...`` line (plus detail
lines) straight to the terminal, so the log shows the outcome even when pytest
captures output.
"""

import os

import pytest

from egkcap.acceptance import CRITERIA, DEFAULT_TOLERANCES, run_criterion

WORKERS = max(1, min(4, os.cpu_count() or 1))


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    res = run_criterion(number, workers=WORKERS)
    with capsys.disabled():
        print()
        print(res.line())
        for d in res.details:
            print(f"    {d}")
    assert res.passed, "\n".join([res.line()] + res.details)


def test_stated_tolerances():
    assert DEFAULT_TOLERANCES["aux_rel"] == 1e-6
    assert DEFAULT_TOLERANCES["baseline_rel"] == 1e-6
    assert DEFAULT_TOLERANCES["rayleigh_rel"] == 0.02
    assert DEFAULT_TOLERANCES["mc_sigma"] == 3
    assert DEFAULT_TOLERANCES["surrogate_rel"] == 0.02
    assert DEFAULT_TOLERANCES["derivative_rel"] == 1e-5
    assert DEFAULT_TOLERANCES["pdf_norm"] == 1e-6
    assert DEFAULT_TOLERANCES["ks_alpha"] == 0.01
    assert DEFAULT_TOLERANCES["mean_sigma"] == 3


def test_tampered_tolerance_is_detected():
    res = run_criterion(1, {"aux_rel": 1e-18})
    assert not res.passed
    assert res.line().startswith("criterion 1 [FAIL]")
