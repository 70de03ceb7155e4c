import csv

import numpy as np
import pytest

from svito.convex import Box, Interval
from svito.selections import SetValuedProcess, build_selections, selection_integrals
from svito.stochastic import TimeGrid, generate_brownian


@pytest.fixture(scope="module")
def bundle():
    return generate_brownian(TimeGrid(1.0, 32), 400, seed=1)


def test_endpoints_of_constant_interval(bundle):
    fam = build_selections(SetValuedProcess.constant(Interval(0, 1)), bundle, 2, "extreme")
    vals = fam.values()
    assert np.all(vals[0] == 0) and np.all(vals[1] == 1)


def test_singleton_members_coincide(bundle):
    fam = build_selections(SetValuedProcess.constant(Interval(0.3, 0.3)), bundle, 7)
    assert np.all(fam.values() == 0.3)
    assert fam.distinct_size() == 1


def test_mixtures_stay_in_time_dependent_set(bundle):
    proc = SetValuedProcess.deterministic(lambda t: Interval(np.zeros_like(t), t))
    fam = build_selections(proc, bundle, 5)
    assert fam.membership() == 1.0
    v = fam.values()
    assert v.min() >= 0 and np.all(v <= bundle.grid.nodes[None, None, :] + 1e-15)


def test_box_mixtures_are_members(bundle):
    fam = build_selections(SetValuedProcess.constant(Box([0, -1], [1, 2])), bundle, 9)
    assert fam.minimum_size == 4
    assert fam.membership() == 1.0


def test_members_are_adapted(bundle):
    """Perturbing a later increment leaves earlier selection values untouched."""
    proc = SetValuedProcess.state(lambda t, W: Interval(W - 1, W + 1))
    k = 20
    bumped = bundle.with_increment(5, k, 3.0)
    a = build_selections(proc, bundle, 8, seed=4).values()
    b = build_selections(proc, bumped, 8, seed=4).values()
    assert np.array_equal(a[:, :, : k + 1], b[:, :, : k + 1])
    assert not np.array_equal(a[:, 5, k + 1:], b[:, 5, k + 1:])


def test_larger_family_extends_smaller(bundle):
    proc = SetValuedProcess.constant(Interval(-1, 2))
    small = build_selections(proc, bundle, 6, seed=9).values()
    large = build_selections(proc, bundle, 12, seed=9).values()
    assert np.array_equal(small, large[:6])


def test_endpoint_integrals(bundle):
    fam = build_selections(SetValuedProcess.constant(Interval(0, 1)), bundle, 2, "extreme")
    dt = selection_integrals(fam, "dt")
    np.testing.assert_allclose(dt[0], 0.0)
    np.testing.assert_allclose(dt[1], 1.0, atol=1e-12)
    dw = selection_integrals(fam, "dW")
    np.testing.assert_allclose(dw[1], bundle.W(0)[:, -1], atol=1e-12)


def test_mixture_dt_integrals_within_bounds(bundle):
    fam = build_selections(SetValuedProcess.constant(Interval(0.5, 2.0)), bundle, 16)
    v = selection_integrals(fam, "dt")
    assert v.min() >= 0.5 - 1e-12 and v.max() <= 2.0 + 1e-12


def test_too_small_family_is_rejected(bundle):
    with pytest.raises(ValueError):
        build_selections(SetValuedProcess.constant(Box([0, 0, 0], [1, 1, 1])), bundle, 4)


def test_audit_csv(tmp_path, bundle):
    small = generate_brownian(TimeGrid(1.0, 4), 3, seed=0)
    fam = build_selections(SetValuedProcess.constant(Interval(0, 1)), small, 3)
    fam.write_audit(tmp_path / "audit.csv")
    rows = list(csv.reader(open(tmp_path / "audit.csv")))
    assert rows[0] == ["selection", "step", "path", "value", "member?"]
    assert len(rows) == 1 + 3 * 5 * 3
    assert all(r[4] == "1" for r in rows[1:])
