import numpy as np
import pytest

from svito.convex import Interval, hausdorff_distance
from svito.ito import (
    IDENTITY,
    SQUARE,
    TIME_LINEAR,
    SetItoProcess,
    TransformSpec,
    get_transform,
    ito_lhs,
    ito_rhs,
    simulate_set_ito,
    translation,
    verify_ito_formula,
    verify_square_inclusion,
)
from svito.selections import SetValuedProcess
from svito.stochastic import TimeGrid, generate_brownian


def const(lo, hi):
    return SetValuedProcess.constant(Interval(lo, hi))


@pytest.fixture(scope="module")
def bundle():
    return generate_brownian(TimeGrid(1.0, 64), 1500, seed=6)


class TestSimulation:
    def test_zero_coefficients_stay_at_start(self, bundle):
        X = simulate_set_ito(SetItoProcess(0.7, const(0, 0), const(0, 0)), bundle, 4)
        assert np.all(X.hull.lo == 0.7) and np.all(X.hull.hi == 0.7)

    def test_drift_only_endpoint_hull(self, bundle):
        X = simulate_set_ito(SetItoProcess(0.0, const(0, 0), const(0, 1)), bundle, 6)
        np.testing.assert_allclose(X.hull.lo[:, -1], 0.0, atol=1e-12)
        np.testing.assert_allclose(X.hull.hi[:, -1], 1.0, atol=1e-12)

    def test_unit_singleton_tracks_brownian_motion(self, bundle):
        X = simulate_set_ito(SetItoProcess(0.0, const(1, 1), const(0, 0)), bundle, 8)
        np.testing.assert_allclose(X.hull.lo, bundle.W(0), atol=1e-12)
        np.testing.assert_allclose(X.hull.hi, bundle.W(0), atol=1e-12)
        assert len(X.pairs) == 1


class TestTransforms:
    @pytest.mark.parametrize("phi", [IDENTITY, SQUARE, TIME_LINEAR, translation(0.3)])
    def test_declared_partials(self, phi):
        assert phi.check_partials() < 1e-5

    def test_lookup(self):
        assert get_transform("square") is SQUARE
        assert get_transform("shift-1.5").phi(0.0, np.array(1.0)) == pytest.approx(-0.5)
        with pytest.raises(ValueError):
            get_transform("cube")

    def test_identity_image(self, bundle):
        X = simulate_set_ito(SetItoProcess(0.2, const(-1, 1), const(0, 0.5)), bundle, 6)
        L = ito_lhs(IDENTITY, X, bundle).hull
        assert np.array_equal(L.lo, X.hull.lo) and np.array_equal(L.hi, X.hull.hi)

    def test_translation_image(self, bundle):
        X = simulate_set_ito(SetItoProcess(0.2, const(-1, 1), const(0, 0.5)), bundle, 6)
        L = ito_lhs(translation(2.0), X, bundle).hull
        np.testing.assert_allclose(L.lo, X.hull.lo + 2.0)
        np.testing.assert_allclose(L.hi, X.hull.hi + 2.0)

    def test_square_image_of_member_hull_includes_zero_crossing(self):
        b = generate_brownian(TimeGrid(1.0, 1), 1, seed=0)
        # drift-only X_1 = [-1, 2] via g = [-1, 2]
        X = simulate_set_ito(SetItoProcess(0.0, const(0, 0), const(-1, 2)), b, 64)
        img = ito_lhs(SQUARE, X, b).hull
        assert float(img.hi[0, -1]) == pytest.approx(4.0)
        assert float(img.lo[0, -1]) < 1e-2


class TestRhs:
    def test_identity_rhs_is_simulation(self, bundle):
        proc = SetItoProcess(0.1, const(0.5, 1.0), const(-0.2, 0.3))
        X = simulate_set_ito(proc, bundle, 6)
        R = ito_rhs(IDENTITY, proc, bundle, 6).hull
        np.testing.assert_allclose(R.lo, X.hull.lo, atol=1e-12)
        np.testing.assert_allclose(R.hi, X.hull.hi, atol=1e-12)

    def test_square_singleton_matches_classical_ito(self, bundle):
        sigma, x0 = 0.8, 0.5
        R = ito_rhs(SQUARE, SetItoProcess(x0, const(sigma, sigma), const(0, 0)), bundle, 4).hull
        W = bundle.W(0)
        x = x0 + sigma * W
        stoch = np.concatenate([np.zeros((bundle.paths, 1)),
                                np.cumsum(2 * sigma * x[:, :-1] * bundle.increments(0), axis=1)], axis=1)
        oracle = x0**2 + stoch + sigma**2 * bundle.grid.nodes[None, :]
        np.testing.assert_allclose(R.lo, oracle, atol=1e-12)
        np.testing.assert_allclose(R.hi, oracle, atol=1e-12)

    def test_time_linear_drift_hull(self, bundle):
        proc = SetItoProcess(0.0, const(0, 0), const(0, 1))
        L = ito_lhs(TIME_LINEAR, simulate_set_ito(proc, bundle, 6), bundle).hull
        R = ito_rhs(TIME_LINEAR, proc, bundle, 6).hull
        t = bundle.grid.nodes
        np.testing.assert_allclose(L.hi[0], t * t, atol=1e-12)
        assert float(np.max(hausdorff_distance(L, R))) <= 2 * bundle.grid.dt


class TestVerification:
    def test_identity_distance_vanishes(self, bundle):
        rep = verify_ito_formula(IDENTITY, SetItoProcess(0.0, const(0.5, 1), const(0, 0.2)), bundle, 6)
        assert rep.max_distance <= 1e-12 and rep.passed

    def test_interval_diffusion_passes(self, bundle):
        rep = verify_ito_formula(SQUARE, SetItoProcess(0.0, const(0.5, 1), const(0, 0)), bundle, 8)
        assert rep.passed
        assert rep.calibrated

    def test_distance_shrinks_with_refinement(self):
        proc = SetItoProcess(0.0, const(0.5, 1), const(0, 0))
        d = [verify_ito_formula(SQUARE, proc, generate_brownian(TimeGrid(1.0, n), 500, seed=1), 4).distance
             for n in (16, 64, 256)]
        assert d[0] > d[1] > d[2]

    def test_uncalibrated_transform_is_reported(self, bundle):
        cube = TransformSpec("cube", lambda t, x: x**3, lambda t, x: 0 * x, lambda t, x: 3 * x * x,
                             lambda t, x: 6 * x)
        rep = verify_ito_formula(cube, SetItoProcess(0.0, const(0.2, 0.4), const(0, 0)), bundle, 4)
        assert not rep.calibrated

    def test_report_csv(self, tmp_path, bundle):
        rep = verify_ito_formula(SQUARE, SetItoProcess(0.0, const(0.5, 1), const(0, 0)), bundle, 4)
        rep.write_csv(tmp_path / "ito.csv")
        lines = (tmp_path / "ito.csv").read_text().splitlines()
        assert lines[0] == "node,max_hausdorff,rms_hausdorff,threshold,pass"
        assert len(lines) == bundle.grid.steps + 2


@pytest.fixture(scope="module")
def b():
    return generate_brownian(TimeGrid(1.0, 64), 2000, seed=8)


class TestInclusion:
    def test_zero_z_is_equality(self, b):
        rep = verify_square_inclusion(const(0, 1), const(0, 0), b)
        assert rep.passed(0.999)
        assert float(rep.gap.max()) <= 1e-12

    def test_singleton_classical_identity(self, b):
        rep = verify_square_inclusion(const(0.7, 0.7), const(0.5, 0.5), b)
        assert rep.structural_ok and rep.passed(0.999)

    def test_unit_z(self, b):
        rep = verify_square_inclusion(const(0, 1), const(1, 1), b)
        assert rep.passed(0.999)
