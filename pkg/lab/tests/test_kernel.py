import math

import numpy as np
import pytest

from lab.exceptions import PreconditionError
from lab.kernel import (
    d_hat,
    grid_frequencies,
    infrared_margin,
    make_kernel,
    nearest_neighbour_field,
    tilted_mass_sum,
)


def brute_force_d_hat(kernel, k):
    return sum(math.cos(float(np.dot(k, x))) for x in kernel.support) / kernel.omega


class TestMakeKernel:
    def test_degree_counts_the_box_minus_the_origin(self):
        assert make_kernel(2, 1).omega == 8
        assert make_kernel(3, 2).omega == 124

    def test_variance_of_small_kernels(self):
        assert make_kernel(1, 1).sigma2 == pytest.approx(1.0)
        assert make_kernel(1, 2).sigma2 == pytest.approx(2.5)

    def test_variance_matches_direct_sum(self):
        kernel = make_kernel(3, 2)
        direct = sum(sum(c * c for c in x) for x in kernel.support) / kernel.omega
        assert kernel.sigma2 == pytest.approx(direct, rel=1e-14)

    def test_weights_are_normalised_and_symmetric(self):
        kernel = make_kernel(2, 2)
        field = kernel.as_field()
        assert field.total() == pytest.approx(1.0, abs=1e-15)
        assert field.is_symmetric()
        assert kernel.weight((0, 0)) == 0.0
        assert kernel.weight((2, -1)) == pytest.approx(1 / 24)
        assert kernel.weight((3, 0)) == 0.0

    @pytest.mark.parametrize("d,L", [(0, 1), (1, 0), (-1, 2)])
    def test_rejects_degenerate_lattices(self, d, L):
        with pytest.raises(PreconditionError):
            make_kernel(d, L)


class TestFourierTransform:
    def test_normalised_at_the_origin(self):
        for d, L in [(1, 1), (2, 3), (4, 1)]:
            assert d_hat(make_kernel(d, L), np.zeros(d)) == pytest.approx(1.0, abs=1e-15)

    def test_one_dimensional_nearest_neighbour_at_pi(self):
        assert d_hat(make_kernel(1, 1), [math.pi]) == pytest.approx(-1.0, abs=1e-14)

    def test_matches_brute_force_sum(self):
        kernel = make_kernel(2, 1)
        rng = np.random.default_rng(7)
        for k in rng.uniform(-math.pi, math.pi, size=(20, 2)):
            assert d_hat(kernel, k) == pytest.approx(brute_force_d_hat(kernel, k), abs=1e-12)

    def test_bounded_and_even_on_a_grid(self):
        kernel = make_kernel(2, 2)
        axis = grid_frequencies(16)
        k = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1)
        values = d_hat(kernel, k)
        assert np.all(np.abs(values) <= 1 + 1e-12)
        assert np.allclose(values, d_hat(kernel, -k), atol=1e-14)

    def test_zero_coordinates_use_the_limit_value(self):
        kernel = make_kernel(2, 2)
        k = np.array([0.0, 1.3])
        assert d_hat(kernel, k) == pytest.approx(brute_force_d_hat(kernel, k), abs=1e-12)


class TestTiltedMassSum:
    def test_equals_one_without_tilt(self):
        assert tilted_mass_sum(make_kernel(3, 2), 0.0) == pytest.approx(1.0)

    def test_one_dimensional_nearest_neighbour_is_cosh(self):
        kernel = make_kernel(1, 1)
        for m in (0.1, 0.7, 2.0):
            assert tilted_mass_sum(kernel, m) == pytest.approx(math.cosh(m), rel=1e-13)

    def test_matches_brute_force_sum(self):
        kernel = make_kernel(2, 1)
        direct = sum(math.exp(0.3 * x[0]) for x in kernel.support) / kernel.omega
        assert tilted_mass_sum(kernel, 0.3) == pytest.approx(direct, abs=1e-12)

    def test_increasing_and_convex(self):
        kernel = make_kernel(2, 2)
        values = [tilted_mass_sum(kernel, m) for m in np.linspace(0, 2, 21)]
        assert all(b > a for a, b in zip(values, values[1:], strict=False))
        second = np.diff(values, 2)
        assert np.all(second > 0)

    def test_rejects_negative_tilt(self):
        with pytest.raises(PreconditionError):
            tilted_mass_sum(make_kernel(1, 1), -0.1)


class TestInfraredMargin:
    def test_one_dimensional_margin_sits_just_below_one_half(self):
        margin = infrared_margin(make_kernel(1, 1), 64)
        assert 0.4 < margin <= 0.5

    @pytest.mark.parametrize("d,L,grid", [(2, 1, 32), (3, 3, 16), (2, 4, 24)])
    def test_margin_is_positive(self, d, L, grid):
        assert infrared_margin(make_kernel(d, L), grid) > 0

    def test_rejects_tiny_grids(self):
        with pytest.raises(PreconditionError):
            infrared_margin(make_kernel(1, 1), 2)


def test_nearest_neighbour_field_is_a_distribution():
    field = nearest_neighbour_field(3)
    assert field.total() == pytest.approx(1.0)
    assert field.value_at((0, 1, 0)) == pytest.approx(1 / 6)
    assert field.value_at((1, 1, 0)) == 0.0
