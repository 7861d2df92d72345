import math

import numpy as np
import pytest

from lab.choices import Reduction
from lab.diagrams import (
    DiagramSpec,
    Factor,
    L_scaling_probe,
    catalogue,
    eval_diagram,
    square_max,
    tilted,
    walk_box_field,
)
from lab.exceptions import PreconditionError
from lab.fields import Box, LatticeField, box_field, delta, zd_convolve
from lab.greens import so_mass
from lab.kernel import make_kernel


def decaying_field(radius=5, d=1, rate=0.8):
    return box_field(radius, d, lambda x: math.exp(-rate * sum(abs(c) for c in x)))


class TestDiagramSpec:
    def test_needs_a_factor(self):
        with pytest.raises(PreconditionError):
            DiagramSpec("empty", ())

    def test_only_one_weighted_factor(self):
        with pytest.raises(PreconditionError):
            DiagramSpec("twice", (Factor("G", weight=1.0), Factor("G", weight=2.0)))

    @pytest.mark.parametrize("tilt", [-0.5, math.inf, math.nan])
    def test_rejects_bad_tilts(self, tilt):
        with pytest.raises(PreconditionError):
            DiagramSpec("tilted", (Factor("G", tilt=tilt),))

    def test_rejects_unknown_reduction(self):
        with pytest.raises(PreconditionError):
            DiagramSpec("mean", (Factor("G"),), reduction="mean")

    def test_payload_defaults(self):
        spec = DiagramSpec.from_payload({"factors": [{"name": "G", "tilt": 0.25}, {"name": "D"}]})
        assert spec.name == "custom"
        assert spec.factors == (Factor("G", tilt=0.25), Factor("D"))
        assert spec.reduction == Reduction.SUP
        assert DiagramSpec.from_payload(spec.to_payload()) == spec

    def test_reversed(self):
        spec = catalogue(a=1.0, m=0.2)["triangle1"]
        assert spec.reversed().factors == tuple(reversed(spec.factors))


class TestCatalogue:
    def test_names(self):
        assert set(catalogue()) == {
            "square1",
            "square2",
            "triangle1",
            "triangle2",
            "triangle3",
            "animal_triangle",
            "bubble",
        }

    def test_tilts_and_weights_are_threaded_through(self):
        specs = catalogue(a=2.0, m=0.3)
        assert specs["bubble"].factors == (Factor("G", weight=2.0), Factor("G", tilt=0.3))
        assert sum(factor.tilt > 0 for factor in specs["square1"].factors) == 2
        assert specs["triangle2"].factors[1].weight == 2.0


class TestEvalDiagram:
    def test_bubble_of_delta(self):
        fields = {"G": delta(Box(radius=2, d=2))}
        assert eval_diagram(catalogue()["bubble"], fields).value == pytest.approx(1.0)
        assert eval_diagram(catalogue(a=1.0)["bubble"], fields).value == pytest.approx(0.0)

    def test_origin_and_sup_agree_for_symmetric_bubbles(self):
        fields = {"G": decaying_field()}
        spec = DiagramSpec("plain", (Factor("G"), Factor("G")))
        origin = DiagramSpec("plain", spec.factors, reduction=Reduction.ORIGIN)
        expected = float(np.sum(fields["G"].values ** 2))
        assert eval_diagram(spec, fields).value == pytest.approx(expected)
        assert eval_diagram(origin, fields).value == pytest.approx(expected)

    def test_origin_reduction_is_the_full_convolution_at_zero(self):
        rng = np.random.default_rng(12)
        fields = {
            name: LatticeField(geometry=Box(radius=3, d=2), values=rng.random((7, 7)))
            for name in ("A", "B", "C")
        }
        spec = DiagramSpec(
            "chain", (Factor("A"), Factor("B"), Factor("C")), reduction=Reduction.ORIGIN
        )
        full = zd_convolve(zd_convolve(fields["A"], fields["B"], radius=6), fields["C"], radius=9)
        assert eval_diagram(spec, fields).value == pytest.approx(full.value_at((0, 0)))

    def test_commutes_with_reversal(self):
        kernel = make_kernel(1, 2)
        fields = {"G": walk_box_field(kernel, 0.6, 8)}
        for spec in catalogue(a=1.0, m=0.2).values():
            forward = eval_diagram(spec, fields, p=0.6, kernel=kernel).value
            backward = eval_diagram(spec.reversed(), fields, p=0.6, kernel=kernel).value
            assert forward == pytest.approx(backward, rel=1e-10)

    def test_kernel_factor_is_scaled_by_p(self):
        kernel = make_kernel(1, 1)
        spec = DiagramSpec("step", (Factor("D"),), reduction=Reduction.ORIGIN)
        value = eval_diagram(spec, {}, p=0.5, kernel=kernel)
        assert value.value == pytest.approx(0.0)
        spec = DiagramSpec("step", (Factor("D"),))
        assert eval_diagram(spec, {}, p=0.5, kernel=kernel).value == pytest.approx(0.25)

    def test_one_point_subtraction(self):
        spec = DiagramSpec(
            "minus", (Factor("G"), Factor("G")), Reduction.ORIGIN, subtract_one_point=True
        )
        fields = {"G": delta(Box(radius=1, d=1))}
        assert eval_diagram(spec, fields, one_point=1.0).value == pytest.approx(0.0)
        with pytest.raises(PreconditionError):
            eval_diagram(spec, fields)

    def test_one_point_power_counts_only_field_lines(self):
        spec = DiagramSpec(
            "kernel-and-two",
            (Factor("D"), Factor("G"), Factor("G")),
            Reduction.ORIGIN,
            subtract_one_point=True,
        )
        fields = {"G": delta(Box(radius=1, d=1))}
        value = eval_diagram(spec, fields, p=1.0, kernel=make_kernel(1, 1), one_point=0.5)
        assert value.value == pytest.approx(-0.25)

    def test_sup_exceeds_origin_for_an_offset_field(self):
        values = np.zeros(5)
        values[3] = 1.0
        fields = {"G": LatticeField(geometry=Box(radius=2, d=1), values=values)}
        sup = eval_diagram(DiagramSpec("offset", (Factor("G"), Factor("G"))), fields).value
        origin = eval_diagram(
            DiagramSpec("offset", (Factor("G"), Factor("G")), reduction=Reduction.ORIGIN), fields
        ).value
        assert sup == pytest.approx(1.0)
        assert origin == pytest.approx(0.0)
        assert sup > origin

    def test_missing_inputs(self):
        with pytest.raises(PreconditionError):
            eval_diagram(DiagramSpec("k", (Factor("D"),)), {})
        with pytest.raises(PreconditionError):
            eval_diagram(DiagramSpec("h", (Factor("H"),)), {"G": decaying_field()})

    def test_fields_must_share_a_box(self):
        fields = {"G": decaying_field(radius=3), "H": decaying_field(radius=4)}
        with pytest.raises(PreconditionError):
            eval_diagram(DiagramSpec("gh", (Factor("G"), Factor("H"))), fields)


class TestSquare:
    def test_delta_square_vanishes(self):
        field = delta(Box(radius=2, d=2))
        assert square_max(field, field, 1.0) == pytest.approx(0.0)

    def test_tilt_raises_the_square(self):
        field = decaying_field(radius=6, d=2)
        g = field.value_at((0, 0))
        plain = square_max(field, field, g)
        assert square_max(field, tilted(field, 0.3), g) > plain > 0

    def test_geometry_mismatch(self):
        with pytest.raises(PreconditionError):
            square_max(decaying_field(radius=3), decaying_field(radius=4), 1.0)

    def test_tilt_of_a_symmetric_field_is_cosh(self):
        field = decaying_field(radius=3)
        shifted = tilted(field, 0.5)
        assert shifted.value_at((2,)) == pytest.approx(math.exp(-1.6) * math.cosh(1.0))
        assert shifted.is_symmetric()


class TestScalingProbe:
    def test_rows_and_tilt(self):
        probe = L_scaling_probe(1, 0.5, [2, 1])
        assert [row.L for row in probe.rows] == [1, 2]
        expected_tilt = 0.5 * min(so_mass(make_kernel(1, L), 0.5).m for L in (1, 2))
        assert probe.tilt == pytest.approx(expected_tilt)
        assert all(row.square > 0 for row in probe.rows)
        assert all(row.tilt_ratio >= 1 for row in probe.rows)
        assert math.isfinite(probe.fitted_power)

    @pytest.mark.slow
    def test_square_falls_with_the_range_in_three_dimensions(self):
        probe = L_scaling_probe(3, 0.5, [1, 2, 3, 4])
        squares = [row.square for row in probe.rows]
        assert [row.L for row in probe.rows] == [1, 2, 3, 4]
        assert all(b < a for a, b in zip(squares, squares[1:], strict=False))
        assert probe.fitted_power < 0

    def test_needs_two_ranges(self):
        with pytest.raises(PreconditionError):
            L_scaling_probe(1, 0.5, [1])
