import numpy as np
import pytest

from svito.stochastic import TimeGrid, generate_brownian, ito_integral, lebesgue_integral, mc_band


def test_same_seed_is_bit_identical():
    g = TimeGrid(1.0, 16)
    a, b = generate_brownian(g, 3000, seed=42), generate_brownian(g, 3000, seed=42)
    assert np.array_equal(a.dW, b.dW)
    assert not np.array_equal(a.dW, generate_brownian(g, 3000, seed=43).dW)


def test_paths_do_not_depend_on_bundle_size():
    g = TimeGrid(1.0, 8)
    small, large = generate_brownian(g, 700, seed=5), generate_brownian(g, 2500, seed=5)
    assert np.array_equal(small.dW, large.dW[:700])


def test_terminal_moments():
    M = 100_000
    W = generate_brownian(TimeGrid(1.0, 4), M, seed=11).W(0)[:, -1]
    assert abs(W.mean()) <= 4 * np.sqrt(1.0 / M)
    assert W.var() == pytest.approx(1.0, rel=0.05)


def test_grid_alignment():
    g = TimeGrid(2.0, 8)
    assert g.index(0.5) == 2
    assert g.nodes[-1] == 2.0
    with pytest.raises(ValueError):
        g.index(0.3)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0)


class TestIto:
    def setup_method(self):
        self.b = generate_brownian(TimeGrid(1.0, 200), 20_000, seed=3)

    def test_unit_integrand_is_terminal_value(self):
        I = ito_integral(np.ones((self.b.paths, 200)), self.b.increments(0))
        np.testing.assert_allclose(I, self.b.W(0)[:, -1], atol=1e-12)
        assert abs(I.mean()) <= 5 * mc_band(I)
        assert abs((I * I).mean() - 1.0) <= 5 * mc_band(I * I)

    def test_zero_integrand(self):
        assert np.all(ito_integral(np.zeros((self.b.paths, 200)), self.b.increments(0)) == 0)

    def test_isometry_for_time_integrand(self):
        t = self.b.grid.nodes[None, :-1]
        I = ito_integral(np.broadcast_to(t, (self.b.paths, 200)), self.b.increments(0))
        expected = (t**2).sum() * self.b.grid.dt  # left-point Riemann sum of t^2
        assert abs((I * I).mean() - expected) <= 5 * mc_band(I * I)
        assert expected == pytest.approx(1 / 3, abs=1e-2)

    def test_cumulative_starts_at_zero(self):
        c = ito_integral(np.ones((self.b.paths, 200)), self.b.increments(0), cumulative=True)
        assert c.shape == (self.b.paths, 201)
        assert np.all(c[:, 0] == 0)
        np.testing.assert_allclose(c, self.b.W(0), atol=1e-12)


class TestLebesgue:
    def test_constant(self):
        g = TimeGrid(2.0, 10)
        assert float(lebesgue_integral(np.full((1, 11), 3.0), g)[0]) == pytest.approx(6.0, abs=1e-12)

    def test_linear_within_riemann_error(self):
        g = TimeGrid(1.0, 1000)
        assert abs(float(lebesgue_integral(g.nodes[None, :], g)[0]) - 0.5) <= 1 / 1000

    def test_zero(self):
        g = TimeGrid(1.0, 5)
        assert float(lebesgue_integral(np.zeros((1, 6)), g)[0]) == 0.0
