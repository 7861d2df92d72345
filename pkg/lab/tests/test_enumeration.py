import math
from fractions import Fraction

import pytest

from lab.choices import PolymerModel
from lab.enumeration import (
    Polymer,
    check_exponential_decay,
    CensusCollector,
    ZdCells,
    check_subadditivity,
    enumerate_census,
    enumerate_counts,
    iter_polymers,
    pc_estimate,
    run_search,
    second_moment_series,
    simon_lieb_check,
    susceptibility_series,
    tilted_susceptibility_series,
    two_point_series,
    xi2_series_eval,
)
from lab.constants import BUDGET_CHECK_INTERVAL
from lab.exceptions import BudgetExceededError, PreconditionError, TruncationError


class TestPolymer:
    def test_path_is_a_tree(self):
        path = Polymer.from_edges([((0,), (1,)), ((1,), (2,))], model=PolymerModel.TREE)
        assert path.bond_count == 2
        assert path.is_tree()
        assert path.contains((2,))
        path.validate(1)

    def test_triangle_is_an_animal_but_not_a_tree(self):
        triangle = Polymer.from_edges([((0, 0), (1, 0)), ((1, 0), (0, 1)), ((0, 1), (0, 0))])
        assert triangle.is_connected()
        assert not triangle.is_tree()
        triangle.validate(1)
        with pytest.raises(PreconditionError):
            Polymer.from_edges(triangle.edges, model=PolymerModel.TREE).validate(1)

    def test_validate_rejects_long_edges(self):
        with pytest.raises(PreconditionError):
            Polymer.from_edges([((0,), (2,))]).validate(1)

    def test_canonical_key_ignores_translation(self):
        path = Polymer.from_edges([((0, 0), (1, 1)), ((1, 1), (2, 1))])
        assert path.translated((5, -3)).canonical_key() == path.canonical_key()

    def test_single_vertex(self):
        point = Polymer.single_vertex((0, 0))
        assert point.bond_count == 0
        assert point.is_tree()


class TestOneDimensionalClosedForms:
    @pytest.mark.parametrize("model", PolymerModel.values)
    def test_counts(self, model):
        census = enumerate_counts(1, 1, 6, model)
        assert census.t_n == [1] * 7
        assert census.rooted_n == [n + 1 for n in range(7)]
        assert census.square_n == [(n + 1) ** 2 for n in range(7)]
        assert census.omega == 2

    def test_two_point_series(self):
        for x in range(-3, 4):
            series = two_point_series(1, 1, 6, PolymerModel.TREE, (x,))
            assert list(series.coeffs) == [max(n + 1 - abs(x), 0) for n in range(7)]

    def test_susceptibility_series(self):
        series = susceptibility_series(1, 1, 5, PolymerModel.TREE)
        assert list(series.coeffs) == [1, 4, 9, 16, 25, 36]

    def test_second_moment_series(self):
        series = second_moment_series(1, 1, 5, PolymerModel.TREE)
        expected = [n * (n + 1) ** 2 * (n + 2) // 6 for n in range(6)]
        assert list(series.coeffs) == expected

    def test_untilted_susceptibility_matches_chi(self):
        tilted = tilted_susceptibility_series(1, 1, 4, PolymerModel.TREE, 0.0)
        assert list(tilted.coeffs) == pytest.approx([1, 4, 9, 16, 25])

    def test_tilt_weights_the_first_coordinate(self):
        tilted = tilted_susceptibility_series(1, 1, 1, PolymerModel.TREE, 0.5)
        assert tilted[1] == pytest.approx(2 + 2 * math.cosh(0.5))

    def test_evaluation_is_exact_for_rationals(self):
        series = two_point_series(1, 1, 3, PolymerModel.TREE, (0,))
        expected = 1 + Fraction(2, 4) + Fraction(3, 16) + Fraction(4, 64)
        assert series.evaluate(Fraction(1, 2)) == expected

    def test_xi2(self):
        p = Fraction(1, 2)
        chi = susceptibility_series(1, 1, 8, PolymerModel.TREE).evaluate(float(p))
        moment = second_moment_series(1, 1, 8, PolymerModel.TREE).evaluate(float(p))
        xi2 = xi2_series_eval(1, 1, 8, PolymerModel.TREE, p)
        assert xi2 == pytest.approx((moment / chi) ** 0.5)

    def test_xi2_refuses_unsettled_series(self):
        with pytest.raises(TruncationError):
            xi2_series_eval(1, 1, 4, PolymerModel.TREE, 2)

    def test_pc_estimate(self):
        estimate = pc_estimate(enumerate_counts(1, 1, 5, PolymerModel.TREE))
        assert estimate.estimate == pytest.approx(2.0)
        assert estimate.ratios == (1.0, 1.0, 1.0)

    def test_pc_estimate_needs_four_bonds(self):
        with pytest.raises(PreconditionError):
            pc_estimate(enumerate_counts(1, 1, 3, PolymerModel.TREE))


class TestTwoDimensionalCounts:
    def test_single_bond_classes(self):
        census = enumerate_counts(2, 1, 1, PolymerModel.TREE)
        assert census.omega == 8
        assert census.t_n == [1, 4]
        assert census.rooted_n == [1, 8]

    @pytest.mark.parametrize("model", PolymerModel.values)
    def test_two_bond_classes_are_paths(self, model):
        census = enumerate_counts(2, 1, 2, model)
        assert census.t_n[2] == 28

    def test_animals_gain_triangles_at_three_bonds(self):
        trees = enumerate_counts(2, 1, 3, PolymerModel.TREE)
        animals = enumerate_counts(2, 1, 3, PolymerModel.ANIMAL)
        assert animals.t_n[3] > trees.t_n[3]

    def test_tree_identities(self):
        census = enumerate_counts(2, 1, 4, PolymerModel.TREE)
        for n in range(5):
            assert census.rooted_n[n] == (n + 1) * census.t_n[n]
            assert census.square_n[n] == (n + 1) ** 2 * census.t_n[n]

    def test_animal_susceptibility_bound(self):
        census = enumerate_counts(2, 1, 5, PolymerModel.ANIMAL)
        assert census.t_n == [1, 4, 28, 244, 2354, 24088]
        for n in range(6):
            assert census.square_n[n] <= (n + 1) ** 2 * census.t_n[n]
        assert census.square_n[3] < 16 * census.t_n[3]

    def test_two_point_is_symmetric(self):
        census = enumerate_census(2, 1, 3, PolymerModel.ANIMAL, pairs=True)
        for x in [(1, 0), (2, 1), (1, 2)]:
            reference = census.two_point(x).coeffs
            for image in [(-x[0], x[1]), (x[1], x[0]), (-x[1], -x[0])]:
                assert census.two_point(image).coeffs == reference

    def test_pair_counts_add_up_to_chi(self):
        census = enumerate_census(2, 2, 2, PolymerModel.TREE, pairs=True)
        for n in range(3):
            assert sum(census.pair_counts[n].values()) == census.square_n[n]

    def test_result_does_not_depend_on_workers(self):
        single = enumerate_counts(2, 1, 3, PolymerModel.ANIMAL, workers=1)
        pooled = enumerate_counts(2, 1, 3, PolymerModel.ANIMAL, workers=2)
        assert single.t_n == pooled.t_n
        assert single.square_n == pooled.square_n

    def test_subadditivity(self):
        for model in PolymerModel.values:
            report = check_subadditivity(enumerate_counts(2, 1, 4, model))
            assert report.holds
            assert report.checked > 0

    @pytest.mark.slow
    def test_full_tree_census(self):
        census = enumerate_counts(2, 1, 8, PolymerModel.TREE)
        assert census.t_n[:3] == [1, 4, 28]
        assert check_subadditivity(census).holds

    @pytest.mark.slow
    def test_full_animal_census(self):
        census = enumerate_counts(2, 1, 7, PolymerModel.ANIMAL)
        assert census.t_n[:3] == [1, 4, 28]
        assert check_subadditivity(census).holds


class TestIterPolymers:
    def test_translation_classes(self):
        polymers = list(iter_polymers(1, 1, 2, PolymerModel.TREE))
        assert sorted(p.bond_count for p in polymers) == [0, 1, 2]
        assert all(min(p.vertices) == (0,) for p in polymers)

    def test_rooted_translates(self):
        polymers = list(iter_polymers(1, 1, 2, PolymerModel.TREE, rooted=True))
        assert len(polymers) == 1 + 2 + 3
        assert all(p.contains((0,)) for p in polymers)
        assert len({p.edges for p in polymers if p.bond_count}) == 5

    def test_generated_polymers_are_valid(self):
        for polymer in iter_polymers(2, 1, 3, PolymerModel.ANIMAL):
            polymer.validate(1)


class TestInequalities:
    def test_simon_lieb_in_one_dimension(self):
        report = simon_lieb_check(1, 1, 6, Fraction(1, 2), [(0,)], (2,))
        assert report.holds
        assert isinstance(report.lhs, Fraction)

    def test_simon_lieb_in_two_dimensions(self):
        box = [(a, b) for a in range(-1, 2) for b in range(-1, 2)]
        report = simon_lieb_check(2, 1, 3, Fraction(1, 4), box, (2, 0))
        assert report.holds
        assert report.rhs > 0

    def test_simon_lieb_at_a_single_site(self):
        report = simon_lieb_check(1, 1, 10, Fraction(1, 4), [(0,)], (2,))
        assert report.holds
        assert float(report.lhs) == pytest.approx(0.0204, abs=5e-4)
        assert float(report.rhs) == pytest.approx(0.0271, abs=5e-4)

    @pytest.mark.slow
    def test_simon_lieb_on_the_unit_box_in_two_dimensions(self):
        box = [(a, b) for a in range(-1, 2) for b in range(-1, 2)]
        report = simon_lieb_check(2, 1, 7, Fraction(1, 16), box, (3, 0))
        assert report.holds
        assert float(report.lhs) == pytest.approx(4.3623e-6, rel=1e-3)
        assert float(report.rhs) == pytest.approx(4.4447e-6, rel=1e-3)

    def test_simon_lieb_rejects_float_activity(self):
        with pytest.raises(PreconditionError):
            simon_lieb_check(1, 1, 3, 0.5, [(0,)], (2,))

    @pytest.mark.parametrize(
        "region,x",
        [([(1,)], (3,)), ([(0,), (1,)], (1,)), ([], (2,))],
    )
    def test_simon_lieb_rejects_bad_regions(self, region, x):
        with pytest.raises(PreconditionError):
            simon_lieb_check(1, 1, 3, Fraction(1, 2), region, x)

    def test_exponential_decay(self):
        census = enumerate_census(1, 1, 8, PolymerModel.TREE, pairs=True)
        report = check_exponential_decay(census, 0.5, 0.3)
        assert report.holds
        assert report.worst_point is not None


class TestPreconditions:
    def test_budget(self):
        with pytest.raises(BudgetExceededError) as raised:
            enumerate_counts(2, 1, 4, PolymerModel.TREE, budget=10)
        assert raised.value.budget == 10
        assert raised.value.generated > 10

    def test_budget_stops_the_search_early(self):
        recorded = []

        class RecordingCollector(CensusCollector):
            def record(self, bond_count, vertices, edges):
                recorded.append(bond_count)
                super().record(bond_count, vertices, edges)

        with pytest.raises(BudgetExceededError) as raised:
            run_search(
                ZdCells(2, 1, 6),
                PolymerModel.TREE,
                6,
                lambda: RecordingCollector(6),
                workers=1,
                budget=1000,
            )
        assert raised.value.generated == 1001
        assert len(recorded) <= 1000

    def test_pooled_budget_is_shared_across_shards(self):
        with pytest.raises(BudgetExceededError) as raised:
            enumerate_counts(2, 1, 6, PolymerModel.TREE, workers=2, budget=5000)
        assert raised.value.budget == 5000
        assert 5000 < raised.value.generated <= 5000 + 8 * BUDGET_CHECK_INTERVAL

    @pytest.mark.parametrize("d,L,n_max", [(0, 1, 2), (1, 0, 2), (1, 1, -1)])
    def test_degenerate_lattices(self, d, L, n_max):
        with pytest.raises(PreconditionError):
            enumerate_counts(d, L, n_max, PolymerModel.TREE)

    def test_unknown_model(self):
        with pytest.raises(PreconditionError):
            enumerate_counts(1, 1, 2, "polygon")

    def test_two_point_needs_pair_statistics(self):
        with pytest.raises(PreconditionError):
            enumerate_counts(1, 1, 2, PolymerModel.TREE).two_point((1,))

    def test_negative_tilt(self):
        with pytest.raises(PreconditionError):
            tilted_susceptibility_series(1, 1, 2, PolymerModel.TREE, -1.0)
