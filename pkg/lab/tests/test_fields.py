import math

import numpy as np
import pytest

from lab.choices import ConvolutionMethod
from lab.exceptions import PreconditionError
from lab.fields import (
    Box,
    LatticeField,
    Torus,
    axis_decay_fit,
    box_field,
    box_from_torus,
    delta,
    torus_convolve,
    weighted_sum,
    wrap_sum,
    zd_convolve,
)


def indicator_of_unit_sphere(x):
    return 1.0 if x in ((-1,), (1,)) else 0.0


def brute_force_zd(f, g):
    radius = f.geometry.radius + g.geometry.radius
    values = {}
    for x, fx in np.ndenumerate(f.values):
        for y, gy in np.ndenumerate(g.values):
            point = tuple(
                a - f.geometry.radius + b - g.geometry.radius for a, b in zip(x, y, strict=True)
            )
            values[point] = values.get(point, 0.0) + fx * gy
    return box_field(radius, f.d, lambda point: values.get(point, 0.0))


def random_box(rng, radius, d, density=0.4):
    values = rng.normal(size=(2 * radius + 1,) * d)
    values[rng.random(values.shape) > density] = 0.0
    return LatticeField(geometry=Box(radius=radius, d=d), values=values)


class TestLatticeField:
    def test_rejects_values_of_the_wrong_shape(self):
        with pytest.raises(PreconditionError):
            LatticeField(geometry=Box(radius=1, d=2), values=np.zeros((3, 4)))

    def test_values_are_read_only(self):
        field = delta(Box(radius=2, d=1))
        with pytest.raises(ValueError):
            field.values[0] = 1.0

    def test_value_at_outside_the_box_is_zero(self):
        field = box_field(2, 2, lambda x: 1.0)
        assert field.value_at((3, 0)) == 0.0
        assert field.value_at((-2, 2)) == 1.0

    def test_torus_values_are_periodic(self):
        field = LatticeField(geometry=Torus(period=5, d=1), values=np.arange(5.0))
        assert field.value_at((7,)) == 2.0
        assert field.value_at((-1,)) == 4.0

    def test_symmetry_on_box_and_torus(self):
        assert box_field(3, 2, lambda x: math.exp(-abs(x[0]) - abs(x[1]))).is_symmetric()
        assert not box_field(3, 1, lambda x: float(x[0] > 0)).is_symmetric()
        torus = LatticeField(geometry=Torus(period=6, d=1), values=[5.0, 1.0, 2.0, 3.0, 2.0, 1.0])
        assert torus.is_symmetric()

    def test_payload_keeps_geometry_and_values(self):
        field = box_field(2, 2, lambda x: x[0] - 0.5 * x[1])
        restored = LatticeField.from_payload(field.to_payload())
        assert restored.geometry == field.geometry
        assert np.array_equal(restored.values, field.values)

    def test_axis_csv_has_a_header_row(self):
        lines = box_field(2, 1, lambda x: 2.0 ** -abs(x[0])).axis_csv().splitlines()
        assert lines[0] == "n,value"
        assert lines[1:] == ["0,1.0", "1,0.5", "2,0.25"]


class TestZdConvolve:
    def test_delta_is_the_identity(self):
        rng = np.random.default_rng(1)
        g = random_box(rng, 3, 2)
        result = zd_convolve(delta(Box(radius=1, d=2)), g, radius=3)
        assert np.allclose(result.values, g.values, atol=1e-14)

    def test_one_dimensional_step_distribution(self):
        step = box_field(1, 1, lambda x: indicator_of_unit_sphere(x) / 2)
        result = zd_convolve(step, step, radius=2)
        assert result.value_at((0,)) == pytest.approx(0.5)
        assert result.value_at((2,)) == pytest.approx(0.25)
        assert result.value_at((-2,)) == pytest.approx(0.25)
        assert result.value_at((1,)) == pytest.approx(0.0, abs=1e-15)

    def test_default_radius_is_the_larger_input(self):
        f = box_field(1, 1, lambda x: 1.0)
        g = box_field(3, 1, lambda x: 1.0)
        assert zd_convolve(f, g).geometry.radius == 3

    def test_matches_double_loop(self):
        rng = np.random.default_rng(2)
        f, g = random_box(rng, 2, 2), random_box(rng, 3, 2)
        result = zd_convolve(f, g, radius=5)
        assert np.allclose(result.values, brute_force_zd(f, g).values, atol=1e-12)

    def test_commutative_and_associative(self):
        rng = np.random.default_rng(3)
        f, g, h = (random_box(rng, 2, 2) for _ in range(3))
        assert np.allclose(
            zd_convolve(f, g, radius=4).values, zd_convolve(g, f, radius=4).values, atol=1e-10
        )
        left = zd_convolve(zd_convolve(f, g, radius=4), h, radius=6)
        right = zd_convolve(f, zd_convolve(g, h, radius=4), radius=6)
        assert np.allclose(left.values, right.values, atol=1e-10)

    def test_rejects_dimension_mismatch(self):
        with pytest.raises(PreconditionError):
            zd_convolve(delta(Box(radius=1, d=1)), delta(Box(radius=1, d=2)))


class TestTorusConvolve:
    def test_delta_is_the_identity(self):
        rng = np.random.default_rng(4)
        g = LatticeField(geometry=Torus(period=5, d=2), values=rng.normal(size=(5, 5)))
        result = torus_convolve(delta(g.geometry), g)
        assert np.allclose(result.values, g.values, atol=1e-15)

    def test_constant_fields(self):
        geometry = Torus(period=4, d=3)
        f = LatticeField(geometry=geometry, values=np.full(geometry.shape, 2.0))
        g = LatticeField(geometry=geometry, values=np.full(geometry.shape, 0.5))
        assert np.allclose(torus_convolve(f, g).values, 2.0 * 0.5 * 4**3)

    def test_direct_and_fourier_paths_agree(self):
        rng = np.random.default_rng(5)
        geometry = Torus(period=5, d=2)
        f = LatticeField(geometry=geometry, values=rng.normal(size=(5, 5)))
        g = LatticeField(geometry=geometry, values=rng.normal(size=(5, 5)))
        direct = torus_convolve(f, g, method=ConvolutionMethod.DIRECT)
        fourier = torus_convolve(f, g, method=ConvolutionMethod.FOURIER)
        assert np.allclose(direct.values, fourier.values, atol=1e-10)

    def test_direct_path_matches_cyclic_double_loop(self):
        rng = np.random.default_rng(6)
        geometry = Torus(period=4, d=1)
        f = LatticeField(geometry=geometry, values=rng.normal(size=4))
        g = LatticeField(geometry=geometry, values=rng.normal(size=4))
        expected = [sum(f.values[y] * g.values[(x - y) % 4] for y in range(4)) for x in range(4)]
        result = torus_convolve(f, g, method=ConvolutionMethod.DIRECT)
        assert np.allclose(result.values, expected, atol=1e-12)

    def test_rejects_period_mismatch(self):
        with pytest.raises(PreconditionError):
            torus_convolve(delta(Torus(period=4, d=1)), delta(Torus(period=5, d=1)))


class TestWrapSum:
    def test_field_inside_one_period_is_unchanged(self):
        f = box_field(2, 1, lambda x: 1.0 + x[0] ** 2)
        wrapped = wrap_sum(f, 5)
        for x in range(-2, 3):
            assert wrapped.value_at((x,)) == f.value_at((x,))

    def test_geometric_decay(self):
        f = box_field(12, 1, lambda x: 2.0 ** -abs(x[0]))
        expected = 1 + 2 * (2**-4 + 2**-8 + 2**-12)
        assert wrap_sum(f, 4).value_at((0,)) == pytest.approx(expected, abs=1e-15)

    def test_commutes_with_convolution(self):
        rng = np.random.default_rng(8)
        f, g = random_box(rng, 3, 2), random_box(rng, 2, 2)
        left = torus_convolve(wrap_sum(f, 4), wrap_sum(g, 4))
        right = wrap_sum(zd_convolve(f, g, radius=5), 4)
        assert np.allclose(left.values, right.values, atol=1e-10)

    def test_rejects_box_smaller_than_a_period(self):
        with pytest.raises(PreconditionError):
            wrap_sum(box_field(1, 1, lambda x: 1.0), 4)

    def test_box_from_torus_restricts(self):
        torus = wrap_sum(box_field(3, 1, lambda x: float(x[0])), 7)
        box = box_from_torus(torus, 3)
        values = [box.value_at((x,)) for x in range(-3, 4)]
        assert values == [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]


class TestWeightedSum:
    def test_delta_moments(self):
        point = delta(Box(radius=2, d=2))
        assert weighted_sum(point, a=1.5) == 0.0
        assert weighted_sum(point) == 1.0

    def test_second_moment_of_unit_sphere(self):
        f = box_field(1, 1, indicator_of_unit_sphere)
        assert weighted_sum(f, a=2) == pytest.approx(2.0)

    def test_tilt(self):
        f = box_field(1, 1, indicator_of_unit_sphere)
        assert weighted_sum(f, m=math.log(2)) == pytest.approx(2.5)

    def test_plain_sum_without_weights(self):
        rng = np.random.default_rng(9)
        f = random_box(rng, 3, 3)
        assert weighted_sum(f) == pytest.approx(f.total())


class TestAxisDecayFit:
    def test_exact_exponential(self):
        f = box_field(30, 1, lambda x: math.exp(-0.7 * abs(x[0])))
        assert axis_decay_fit(f, (5, 25)) == pytest.approx(0.7, abs=1e-10)

    def test_power_law_prefactor_biases_the_raw_slope(self):
        f = box_field(40, 1, lambda x: math.exp(-0.3 * abs(x[0])) / max(abs(x[0]), 1))
        assert 0.27 <= axis_decay_fit(f, (20, 40)) <= 0.34

    def test_known_prefactor_is_removed(self):
        f = box_field(40, 1, lambda x: math.exp(-0.3 * abs(x[0])) / max(abs(x[0]), 1))
        assert axis_decay_fit(f, (20, 40), prefactor_power=1.0) == pytest.approx(0.3, abs=1e-10)

    def test_constant_field(self):
        constant = box_field(10, 2, lambda x: 3.0)
        assert axis_decay_fit(constant, (1, 8)) == pytest.approx(0.0, abs=1e-12)

    def test_rejects_nonpositive_values(self):
        f = box_field(10, 1, lambda x: 1.0 if abs(x[0]) < 5 else 0.0)
        with pytest.raises(PreconditionError):
            axis_decay_fit(f, (2, 8))
