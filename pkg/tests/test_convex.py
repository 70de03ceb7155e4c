import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from svito.convex import (
    Box,
    DirectionGrid,
    Interval,
    StructureError,
    SupportSet,
    UnsupportedOperation,
    format_set,
    hausdorff_distance,
    hukuhara_diff,
    is_translation,
    minkowski_sum,
    parse_set,
    scalar_mul,
    set_norm,
    square_image,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
width = st.floats(0.0, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def intervals(draw):
    lo = draw(finite)
    return Interval(lo, lo + draw(width))


@st.composite
def boxes(draw, dim=None):
    n = dim or draw(st.integers(1, 4))
    lo = np.array(draw(st.lists(finite, min_size=n, max_size=n)))
    w = np.array(draw(st.lists(width, min_size=n, max_size=n)))
    return Box(lo, lo + w)


def _vertex_hausdorff(a: Box, b: Box) -> float:
    """Exact oracle: ``d(., B)`` is convex, so its max over ``A`` sits at a vertex."""
    def far(x: Box, y: Box) -> float:
        v = x.vertices()
        return float(np.linalg.norm(v - np.clip(v, y.lo, y.hi), axis=1).max())

    return max(far(a, b), far(b, a))


class TestMinkowski:
    def test_interval_sum(self):
        s = minkowski_sum(Interval(0, 1), Interval(2, 3))
        assert (s.lo, s.hi) == (2, 4)

    def test_box_sum_matches_hull_of_pairwise_sums(self):
        a, b = Box([0, -1], [1, 0]), Box([1, 0], [2, 2])
        g = np.linspace(0, 1, 21)
        pa = np.stack(np.meshgrid(0 + g, -1 + g), -1).reshape(-1, 2)
        pb = np.stack(np.meshgrid(1 + g, 0 + 2 * g), -1).reshape(-1, 2)
        sums = (pa[:, None, :] + pb[None, :, :]).reshape(-1, 2)
        s = minkowski_sum(a, b)
        np.testing.assert_allclose(s.lo, sums.min(0))
        np.testing.assert_allclose(s.hi, sums.max(0))
        np.testing.assert_allclose(s.lo, [1, -1])
        np.testing.assert_allclose(s.hi, [3, 2])

    @given(intervals())
    def test_zero_is_neutral(self, a):
        z = minkowski_sum(a, Interval.zero())
        assert (z.lo, z.hi) == (a.lo, a.hi)

    def test_mixing_carriers_is_structural_error(self):
        with pytest.raises(StructureError):
            minkowski_sum(Interval(0, 1), Box([0], [1]))
        with pytest.raises(StructureError):
            minkowski_sum(Box([0, 0], [1, 1]), Box([0], [1]))

    def test_mixing_direction_grids_is_structural_error(self):
        a = SupportSet.zero(DirectionGrid.circle(8))
        b = SupportSet.zero(DirectionGrid.circle(6))
        with pytest.raises(StructureError):
            minkowski_sum(a, b)


class TestScalar:
    @pytest.mark.parametrize("alpha,a,expected", [(2, (-1, 3), (-2, 6)), (-1, (0, 1), (-1, 0)), (0, (-4, 5), (0, 0))])
    def test_interval_cases(self, alpha, a, expected):
        r = scalar_mul(alpha, Interval(*a))
        assert (float(r.lo), float(r.hi)) == expected

    def test_negative_scaling_needs_symmetric_grid(self):
        s = SupportSet.from_points(DirectionGrid.circle(5), [[0, 0], [1, 1]])
        with pytest.raises(UnsupportedOperation):
            scalar_mul(-1.0, s)

    def test_negative_scaling_on_symmetric_grid_reflects(self):
        g = DirectionGrid.circle(8)
        pts = np.array([[0.0, 0.0], [2.0, 1.0]])
        np.testing.assert_allclose(scalar_mul(-1.0, SupportSet.from_points(g, pts)).h,
                                   SupportSet.from_points(g, -pts).h, atol=1e-12)


class TestHukuhara:
    def test_endpoint_formula(self):
        r = hukuhara_diff(Interval(0, 3), Interval(1, 2))
        assert r.exists and (r.set.lo, r.set.hi) == (-1, 1)
        back = minkowski_sum(Interval(1, 2), r.set)
        assert (back.lo, back.hi) == (0, 3)

    def test_self_difference_is_zero(self):
        r = hukuhara_diff(Interval(-2.5, 7), Interval(-2.5, 7))
        assert r.exists and (r.set.lo, r.set.hi) == (0, 0)

    def test_too_wide_subtrahend_fails_with_diagnostics(self):
        r = hukuhara_diff(Interval(0, 1), Interval(0, 2))
        assert not r.exists
        assert r.deficit == pytest.approx(1.0)
        assert r.witness is not None
        with pytest.raises(ValueError):
            r.value()

    def test_box_difference_exists_componentwise(self):
        a, b = Box([0, 0], [3, 1]), Box([1, 0], [2, 1])
        r = hukuhara_diff(a, b)
        assert r.exists
        np.testing.assert_allclose(r.set.lo, [-1, 0])
        np.testing.assert_allclose(r.set.hi, [1, 0])
        assert not hukuhara_diff(b, a).exists

    def test_support_set_difference_recovers_summand(self):
        g = DirectionGrid.circle(12)
        hexagon = SupportSet.from_points(g, [[np.cos(t), np.sin(t)] for t in np.linspace(0, 2 * np.pi, 7)[:-1]])
        seg = SupportSet.from_points(g, [[0, 0], [0.5, 0.2]])
        a = minkowski_sum(hexagon, seg)
        r = hukuhara_diff(a, hexagon, 1e-7)
        assert r.exists
        np.testing.assert_allclose(r.set.h, seg.h, atol=1e-7)

    def test_support_set_difference_fails_for_rotated_square(self):
        g = DirectionGrid.circle(8)
        square = SupportSet.from_points(g, [[1, 1], [1, -1], [-1, 1], [-1, -1]])
        diamond = SupportSet.from_points(g, [[1.2, 0], [-1.2, 0], [0, 1.2], [0, -1.2]])
        r = hukuhara_diff(square, diamond, 1e-7)
        assert not r.exists and r.witness is not None

    @given(intervals(), intervals())
    def test_difference_of_constructed_sum_exists(self, b, c):
        a = minkowski_sum(b, c)
        r = hukuhara_diff(a, b, 1e-6)
        assert r.exists
        assert float(hausdorff_distance(r.set, c)) <= 1e-6

    @given(intervals(), intervals())
    def test_norm_of_difference_equals_hausdorff(self, b, c):
        a = minkowski_sum(b, c)
        r = hukuhara_diff(a, b, 1e-6)
        assert float(set_norm(r.set)) == pytest.approx(float(hausdorff_distance(a, b)), abs=1e-9)

    @given(intervals(), intervals())
    def test_existence_matches_width_order(self, a, b):
        assume(abs(float(a.width) - float(b.width)) > 1e-6)
        assert bool(hukuhara_diff(a, b, 1e-9)) == bool(a.width > b.width)


class TestHausdorff:
    def test_interval_cases(self):
        assert float(hausdorff_distance(Interval(0, 1), Interval(0, 2))) == 1
        assert float(hausdorff_distance(Interval(3, 4), Interval(3, 4))) == 0

    @settings(max_examples=60)
    @given(st.integers(1, 4).flatmap(lambda n: st.tuples(boxes(n), boxes(n))))
    def test_box_distance_matches_vertex_oracle(self, pair):
        a, b = pair
        assert float(hausdorff_distance(a, b)) == pytest.approx(_vertex_hausdorff(a, b), rel=1e-12, abs=1e-9)

    @given(boxes(), st.floats(-5, 5, allow_nan=False))
    def test_norm_homogeneous(self, a, lam):
        assert float(set_norm(scalar_mul(lam, a))) == pytest.approx(abs(lam) * float(set_norm(a)), rel=1e-12, abs=1e-9)


class TestNorm:
    def test_cases(self):
        assert float(set_norm(Interval(-2, 1))) == 2
        assert float(set_norm(Interval.zero())) == 0
        s = minkowski_sum(Interval(1, 2), Interval(3, 4))
        assert float(set_norm(s)) == 6 == float(set_norm(Interval(1, 2))) + float(set_norm(Interval(3, 4)))


class TestTranslation:
    def test_cases(self):
        assert float(is_translation(Interval(1, 2), Interval(0, 1))) == 1
        assert is_translation(Interval(0, 2), Interval(0, 1)) is None
        assert bool(hukuhara_diff(Interval(0, 2), Interval(0, 1)))
        assert float(is_translation(Interval(0.3, 0.9), Interval(0.3, 0.9))) == 0


def test_square_image_handles_sign_change():
    s = square_image(Interval(-1, 2))
    assert (float(s.lo), float(s.hi)) == (0, 4)
    s = square_image(Interval(-3, -2))
    assert (float(s.lo), float(s.hi)) == (4, 9)


@given(st.one_of(intervals(), st.integers(2, 4).flatmap(boxes)))
def test_literal_round_trip(a):
    b = parse_set(format_set(a))
    assert type(b) is type(a)
    np.testing.assert_array_equal(np.asarray(b.lo), np.asarray(a.lo))
    np.testing.assert_array_equal(np.asarray(b.hi), np.asarray(a.hi))


@pytest.mark.parametrize("text", ["[1,0]", "[0,1", "0,1", "[a,b]", "[0,1]x"])
def test_malformed_literals(text):
    with pytest.raises(ValueError):
        parse_set(text)
