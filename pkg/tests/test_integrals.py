import numpy as np
import pytest

from svito.convex import Interval, hausdorff_distance
from svito.integrals import (
    integral_equality_diagnostic,
    set_integral,
    setvalued_isometry_check,
    verify_additivity,
    verify_splitting,
    write_reports,
)
from svito.selections import SetValuedProcess
from svito.stochastic import TimeGrid, generate_brownian


def const(lo, hi):
    return SetValuedProcess.constant(Interval(lo, hi))


@pytest.fixture(scope="module")
def bundle():
    return generate_brownian(TimeGrid(1.0, 50), 2000, seed=2)


class TestSetIntegral:
    def test_dt_of_nonnegative_interval(self, bundle):
        r = set_integral(const(0.5, 2.0), bundle)
        np.testing.assert_allclose(r.set.lo, 0.5, atol=1e-12)
        np.testing.assert_allclose(r.set.hi, 2.0, atol=1e-12)

    @pytest.mark.parametrize("kind", ["dt", "dW"])
    def test_zero_process(self, bundle, kind):
        r = set_integral(const(0, 0), bundle, (0.2, 0.6), kind)
        assert np.all(r.set.lo == 0) and np.all(r.set.hi == 0)

    def test_dw_of_unit_interval_is_zero_to_wt(self, bundle):
        r = set_integral(const(0, 1), bundle, kind="dW", size=2, recipe="extreme")
        WT = bundle.W(0)[:, -1]
        np.testing.assert_allclose(r.set.lo, np.minimum(WT, 0), atol=1e-12)
        np.testing.assert_allclose(r.set.hi, np.maximum(WT, 0), atol=1e-12)

    def test_window_must_sit_on_grid(self, bundle):
        with pytest.raises(ValueError):
            set_integral(const(0, 1), bundle, (0.0, 0.333))

    def test_unknown_kind(self, bundle):
        with pytest.raises(ValueError):
            set_integral(const(0, 1), bundle, kind="dZ")


@pytest.mark.parametrize("kind", ["dt", "dW"])
def test_splitting(bundle, kind):
    proc = SetValuedProcess.deterministic(lambda t: Interval(-t, 1 + t))
    split, diff = verify_splitting(proc, bundle, 0.4, kind, size=8, mode="stepwise")
    assert split.passed and diff.passed


def test_splitting_members_mode_dt(bundle):
    split, diff = verify_splitting(const(1, 3), bundle, 0.6)
    assert split.passed and diff.passed


def test_additivity_endpoint_oracle(bundle):
    rep = verify_additivity(const(0, 1), const(1, 2), bundle)
    assert rep.passed
    np.testing.assert_allclose(rep.sum_clause.lhs[:, -1].lo, 1.0, atol=1e-10)
    np.testing.assert_allclose(rep.sum_clause.lhs[:, -1].hi, 3.0, atol=1e-10)


def test_additivity_with_zero_and_difference(bundle):
    assert verify_additivity(const(0, 1), const(0, 0), bundle).passed
    rep = verify_additivity(const(0, 3), const(1, 2), bundle, with_difference=True)
    assert rep.passed and rep.diff_clause.passed


def test_reports_csv(tmp_path, bundle):
    split, diff = verify_splitting(const(0, 1), bundle.subset(slice(0, 3)), 0.5)
    write_reports(tmp_path / "r.csv", [split, diff])
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "check,node,path,lhs_lo,lhs_hi,rhs_lo,rhs_hi,hausdorff"
    assert len(lines) > 1


@pytest.fixture(scope="module")
def big():
    return generate_brownian(TimeGrid(1.0, 64), 20_000, seed=4)


class TestIsometry:
    def test_unit_interval(self, big):
        rep = setvalued_isometry_check(const(0, 1), big, 16)
        assert rep.passed()
        assert float(rep.rhs.lo) == pytest.approx(0.0, abs=1e-12)
        assert float(rep.rhs.hi) == pytest.approx(1.0, abs=1e-12)

    def test_singleton_reduces_to_classical(self, big):
        rep = setvalued_isometry_check(const(0.7, 0.7), big, 4)
        assert float(rep.rhs.lo) == float(rep.rhs.hi) == pytest.approx(0.49)
        assert rep.passed()

    def test_one_two_interval(self, big):
        rep = setvalued_isometry_check(const(1, 2), big, 16)
        assert float(rep.rhs.lo) == pytest.approx(1.0) and float(rep.rhs.hi) == pytest.approx(4.0)
        assert rep.passed(floor=0.02)


class TestEquality:
    def test_identical_processes(self, bundle):
        v = integral_equality_diagnostic(const(0, 1), const(0, 1), bundle)
        assert v.verdict == "pass" and v.integral_distance == 0 and v.process_distance == 0

    def test_shift_is_distinguishable(self, bundle):
        v = integral_equality_diagnostic(const(0, 1), const(0.1, 1.1), bundle)
        assert v.verdict == "distinguishable"
        assert v.process_distance == pytest.approx(0.1)

    def test_seed_robust(self, bundle):
        v = integral_equality_diagnostic(const(0, 1), const(0, 1), bundle, size=8, recipe="mix", seeds=(0, 5))
        assert v.verdict == "pass"


def test_hull_distance_zero_for_same_family(bundle):
    a = set_integral(const(-1, 1), bundle, kind="dW", size=6, seed=3).set
    b = set_integral(const(-1, 1), bundle, kind="dW", size=6, seed=3).set
    assert float(np.max(hausdorff_distance(a, b))) == 0.0
