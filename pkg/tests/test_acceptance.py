"""Acceptance criteria 1-11 at their stated sizes and tolerances.

Each criterion prints one ``[PASS]``/``[FAIL]`` line with its key numbers
and runtime.  ``SVITO_ACCEPT_SCALE=quick`` runs the reduced sizes instead
(for smoke testing only; the tolerances were set for the full sizes).
"""

import os

import pytest

from svito.acceptance import run_criterion

SCALE = os.environ.get("SVITO_ACCEPT_SCALE", "full")
SEED = 7


@pytest.fixture(scope="module")
def out_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.mark.acceptance
@pytest.mark.parametrize("number", range(1, 12), ids=lambda n: f"criterion-{n:02d}")
def test_criterion(number, out_dir, capsys):
    res = run_criterion(number, SEED, SCALE, out_dir)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.verdict == "PASS", res.line()
    assert res.within_time, f"runtime {res.runtime:.1f}s exceeds {res.limit}s"
