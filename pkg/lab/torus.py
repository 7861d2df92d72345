"""
Polymers on the discrete torus (Z/rZ)^d, their lifts to Z^d, and exact checks of
the torus/Z^d comparison built on those lifts.

A torus point is a residue tuple in [0, r)^d. Torus order compares the
representatives in [-r/2, r/2)^d lexicographically; steps are ordered
lexicographically as vectors.
"""

import math
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial

import numpy as np

from lab.choices import PolymerModel, WalkKind
from lab.enumeration import (
    Polymer,
    PolymerCollector,
    PolymerSeries,
    TorusCells,
    ZdCells,
    add_points,
    check_model,
    iter_polymers,
    run_search,
    subtract_points,
    sup_norm,
)
from lab.exceptions import PreconditionError
from lab.fields import LatticeField, Torus, box_from_torus, torus_convolve, wrap_sum, zd_convolve
from lab.greens import default_grid_size, green_field, so_mass, walk_symbol
from lab.kernel import StepKernel
from polylab.utils import get_polylab_logger

logger = get_polylab_logger(__name__)

MAX_FOLD = 4


def representative(x, period: int) -> tuple[int, ...]:
    """The point of [-r/2, r/2)^d congruent to x."""
    half = period // 2
    return tuple((int(c) + half) % period - half for c in x)


def residue(x, period: int) -> tuple[int, ...]:
    return tuple(int(c) % period for c in x)


def torus_order(x, period: int) -> tuple[int, ...]:
    return representative(x, period)


def _check_period(L: int, period: int):
    if period < 2 * L + 1:
        raise PreconditionError(f"period {period} must be >= 2L + 1 = {2 * L + 1}")


@dataclass(frozen=True)
class TorusPolymer:
    period: int
    d: int
    edges: frozenset
    model: str = PolymerModel.ANIMAL
    extra_vertices: frozenset = field(default=frozenset())

    @classmethod
    def from_edges(cls, period, d, edges, model=PolymerModel.ANIMAL, vertices=()) -> "TorusPolymer":
        normalised = frozenset(
            tuple(sorted((residue(a, period), residue(b, period)))) for a, b in edges
        )
        endpoints = {v for edge in normalised for v in edge}
        return cls(
            period=period,
            d=d,
            edges=normalised,
            model=model,
            extra_vertices=frozenset(residue(v, period) for v in vertices) - endpoints,
        )

    @property
    def vertices(self) -> frozenset:
        return frozenset(v for edge in self.edges for v in edge) | self.extra_vertices

    @property
    def bond_count(self) -> int:
        return len(self.edges)

    def contains(self, x) -> bool:
        return residue(x, self.period) in self.vertices

    def step(self, u, v) -> tuple[int, ...]:
        return representative(subtract_points(v, u), self.period)

    def adjacency(self) -> dict:
        """vertex -> [(step, neighbour)] in step order."""
        table = {v: [] for v in self.vertices}
        for a, b in self.edges:
            table[a].append((self.step(a, b), b))
            table[b].append((self.step(b, a), a))
        for entries in table.values():
            entries.sort()
        return table

    def is_connected(self) -> bool:
        adjacency = self.adjacency()
        if not adjacency:
            return False
        start = next(iter(adjacency))
        seen = {start}
        queue = deque([start])
        while queue:
            for _step, neighbour in adjacency[queue.popleft()]:
                if neighbour not in seen:
                    seen.add(neighbour)
                    queue.append(neighbour)
        return len(seen) == len(adjacency)

    def is_tree(self) -> bool:
        return self.is_connected() and len(self.edges) == len(self.vertices) - 1


@dataclass(frozen=True)
class LiftResult:
    zd_polymer: Polymer
    base: TorusPolymer
    faithful: bool


def project(zd_polymer: Polymer, period: int, L: int | None = None) -> TorusPolymer:
    """Reduce vertices and edges mod r; parallel edges collapse."""
    longest = max((sup_norm(subtract_points(b, a)) for a, b in zd_polymer.edges), default=0)
    _check_period(L if L is not None else longest, period)
    d = len(next(iter(zd_polymer.vertices)))
    return TorusPolymer.from_edges(
        period,
        d,
        zd_polymer.edges,
        model=zd_polymer.model,
        vertices=zd_polymer.vertices,
    )


def lift_walk(walk, period: int, L: int) -> list[tuple[int, ...]]:
    """Lift a torus walk from 0: increments are copied through their representatives."""
    _check_period(L, period)
    points = [residue(x, period) for x in walk]
    if not points:
        raise PreconditionError("walk is empty")
    if any(points[0]):
        raise PreconditionError("walk must start at 0")
    lifted = [(0,) * len(points[0])]
    for previous, current in zip(points, points[1:], strict=False):
        increment = representative(subtract_points(current, previous), period)
        if not 0 < sup_norm(increment) <= L:
            raise PreconditionError(f"invalid step {previous} -> {current}")
        lifted.append(add_points(lifted[-1], increment))
    return lifted


def _faithful(vertices, period: int) -> bool:
    residues = [residue(v, period) for v in vertices]
    return len(set(residues)) == len(residues)


def _require_origin(polymer: TorusPolymer):
    if (0,) * polymer.d not in polymer.vertices:
        raise PreconditionError("torus polymer must contain 0")


def _lift_spanning_tree(polymer: TorusPolymer, tree_edges) -> dict:
    """Breadth-first lift of a spanning tree from 0; returns torus vertex -> Z^d point."""
    adjacency = {v: [] for v in polymer.vertices}
    for a, b in tree_edges:
        adjacency[a].append(b)
        adjacency[b].append(a)
    origin = (0,) * polymer.d
    lifted = {origin: origin}
    queue = deque([origin])
    while queue:
        u = queue.popleft()
        for v in sorted(adjacency[u], key=lambda point: torus_order(point, polymer.period)):
            if v not in lifted:
                lifted[v] = add_points(lifted[u], polymer.step(u, v))
                queue.append(v)
    return lifted


def lift_tree(tree: TorusPolymer) -> LiftResult:
    _require_origin(tree)
    if not tree.is_tree():
        raise PreconditionError("input is not a torus tree")
    lifted = _lift_spanning_tree(tree, tree.edges)
    zd_polymer = Polymer.from_edges(
        ((lifted[a], lifted[b]) for a, b in tree.edges),
        model=PolymerModel.TREE,
        vertices=lifted.values(),
    )
    return LiftResult(zd_polymer=zd_polymer, base=tree, faithful=True)


def canonical_spanning_tree(animal: TorusPolymer) -> list:
    """
    Grow a spanning tree from 0: take the first tree vertex (torus order) that has
    an edge to a vertex outside the tree, and add its first such edge (step order).
    """
    adjacency = animal.adjacency()
    origin = (0,) * animal.d
    in_tree = {origin}
    tree_edges = []
    while len(in_tree) < len(adjacency):
        for u in sorted(in_tree, key=lambda point: torus_order(point, animal.period)):
            outside = [v for _step, v in adjacency[u] if v not in in_tree]
            if outside:
                v = outside[0]
                in_tree.add(v)
                tree_edges.append(tuple(sorted((u, v))))
                break
        else:
            raise PreconditionError("torus animal is not connected")
    return tree_edges


def lift_animal(animal: TorusPolymer) -> LiftResult:
    _require_origin(animal)
    if not animal.is_connected():
        raise PreconditionError("input is not a torus animal")
    tree_edges = canonical_spanning_tree(animal)
    lifted = _lift_spanning_tree(animal, tree_edges)

    edges = [(lifted[a], lifted[b]) for a, b in tree_edges]
    for a, b in animal.edges - set(tree_edges):
        u, v = sorted((a, b), key=lambda point: torus_order(point, animal.period))
        start = lifted[u]
        edges.append((start, add_points(start, animal.step(u, v))))

    zd_polymer = Polymer.from_edges(edges, model=PolymerModel.ANIMAL, vertices=lifted.values())
    return LiftResult(
        zd_polymer=zd_polymer,
        base=animal,
        faithful=_faithful(zd_polymer.vertices, animal.period),
    )


def lift(polymer: TorusPolymer) -> LiftResult:
    if polymer.model == PolymerModel.TREE:
        return lift_tree(polymer)
    return lift_animal(polymer)


def enumerate_torus_polymers(d, L, period, n_max, model, workers=None, budget=None) -> list:
    """Every torus polymer with at most n_max bonds that contains 0."""
    check_model(model)
    cells = TorusCells(d, L, period)
    collector, _generated = run_search(
        cells,
        model,
        n_max,
        partial(PolymerCollector, n_max=n_max),
        workers=workers,
        budget=budget,
    )
    return [
        TorusPolymer.from_edges(
            period,
            d,
            ((cells.decode(a), cells.decode(b)) for a, b in edge_codes),
            model=model,
            vertices=(cells.decode(v) for v in vertex_codes),
        )
        for edge_codes, vertex_codes in collector.polymers
    ]


class TorusCensusCollector:
    def __init__(self, n_max: int):
        self.count_n = [0] * (n_max + 1)
        self.rooted_n = [0] * (n_max + 1)
        self.vertex_n = [Counter() for _ in range(n_max + 1)]

    def record(self, bond_count: int, vertices, edges):
        self.count_n[bond_count] += 1
        self.rooted_n[bond_count] += len(vertices)
        self.vertex_n[bond_count].update(vertices)

    def merge(self, other: "TorusCensusCollector"):
        for n, count in enumerate(other.count_n):
            self.count_n[n] += count
            self.rooted_n[n] += other.rooted_n[n]
            self.vertex_n[n].update(other.vertex_n[n])


def _torus_census(d, L, period, n_max, model, workers, budget):
    check_model(model)
    cells = TorusCells(d, L, period)
    collector, _generated = run_search(
        cells,
        model,
        n_max,
        partial(TorusCensusCollector, n_max=n_max),
        workers=workers,
        budget=budget,
    )
    return cells, collector


def _omega(d: int, L: int) -> int:
    return (2 * L + 1) ** d - 1


def torus_two_point_series(
    d, L, period, n_max, model, x, workers=None, budget=None
) -> PolymerSeries:
    """Coefficients count n-bond torus polymers containing 0 and x."""
    cells, collector = _torus_census(d, L, period, n_max, model, workers, budget)
    code = cells.encode(x)
    return PolymerSeries(
        coeffs=tuple(table[code] for table in collector.vertex_n),
        omega=_omega(d, L),
    )


def torus_susceptibility_series(
    d, L, period, n_max, model, workers=None, budget=None
) -> PolymerSeries:
    _cells, collector = _torus_census(d, L, period, n_max, model, workers, budget)
    return PolymerSeries(coeffs=tuple(collector.rooted_n), omega=_omega(d, L))


class ExclusionCollector:
    """
    Per bond count, over Z^d polymers containing 0:
      exact_n  = #(A, x) with x in A (the two-point coefficient at x)
      psi_n    = #(A, x') with x' = x mod r, x' != x
      bigE_n   = sum_A #{x' in A: x' = x mod r} * #{(y, y') in A^2: y = y' mod r, y != y'}
    """

    def __init__(self, n_max: int, cells: ZdCells, period: int, x):
        self.cells = cells
        self.period = period
        self.x = tuple(x)
        self.shift = residue(x, period)
        self.exact_n = [0] * (n_max + 1)
        self.psi_n = [0] * (n_max + 1)
        self.bigE_n = [0] * (n_max + 1)

    def record(self, bond_count: int, vertices, edges):
        points = [self.cells.decode(v) for v in vertices]
        present = set(points)
        residues = Counter(residue(point, self.period) for point in points)

        equivalent_pairs = sum(k * (k - 1) for k in residues.values())
        congruent = sum(
            k * residues.get(residue(add_points(rho, self.shift), self.period), 0)
            for rho, k in residues.items()
        )
        exact = sum(1 for point in points if add_points(point, self.x) in present)

        self.exact_n[bond_count] += exact
        self.psi_n[bond_count] += congruent - exact
        self.bigE_n[bond_count] += equivalent_pairs * congruent

    def merge(self, other: "ExclusionCollector"):
        for n in range(len(self.exact_n)):
            self.exact_n[n] += other.exact_n[n]
            self.psi_n[n] += other.psi_n[n]
            self.bigE_n[n] += other.bigE_n[n]


@dataclass(frozen=True)
class ExclusionSeries:
    two_point: PolymerSeries
    psi: PolymerSeries
    bigE: PolymerSeries

    @property
    def trivial(self) -> bool:
        return not any(self.psi.coeffs) and not any(self.bigE.coeffs)


def exclusion_series(
    d, L, period, n_max, x, model=PolymerModel.TREE, workers=None, budget=None
) -> ExclusionSeries:
    """G_n(x), psi_n(x) and E_n(x) from one pass over the Z^d translation classes."""
    _check_period(L, period)
    check_model(model)
    x = representative(x, period)
    if len(x) != d:
        raise PreconditionError(f"point {x} is not {d}-dimensional")
    cells = ZdCells(d, L, n_max)
    collector, _generated = run_search(
        cells,
        model,
        n_max,
        partial(ExclusionCollector, n_max=n_max, cells=cells, period=period, x=x),
        workers=workers,
        budget=budget,
    )
    omega = _omega(d, L)
    result = ExclusionSeries(
        two_point=PolymerSeries(coeffs=tuple(collector.exact_n), omega=omega),
        psi=PolymerSeries(coeffs=tuple(collector.psi_n), omega=omega, weight_spec="psi"),
        bigE=PolymerSeries(coeffs=tuple(collector.bigE_n), omega=omega, weight_spec="E"),
    )
    if result.trivial:
        logger.info("[Exclusion] No wrapping reachable at this order", period=period, n_max=n_max)
    return result


def psi_series(
    d, L, period, n_max, x, model=PolymerModel.TREE, workers=None, budget=None
) -> PolymerSeries:
    return exclusion_series(d, L, period, n_max, x, model, workers, budget).psi


def bigE_series(
    d, L, period, n_max, x, model=PolymerModel.TREE, workers=None, budget=None
) -> PolymerSeries:
    return exclusion_series(d, L, period, n_max, x, model, workers, budget).bigE


@dataclass(frozen=True)
class SandwichRow:
    n: int
    zd: int
    torus: int
    psi: int
    bigE: int
    upper_holds: bool
    lower_holds: bool


@dataclass(frozen=True)
class SandwichReport:
    rows: tuple[SandwichRow, ...]
    zd_value: Fraction
    torus_value: Fraction
    psi_value: Fraction
    bigE_value: Fraction
    upper_holds: bool
    lower_holds: bool
    trivial: bool
    note: str = (
        "Upper bound checked per coefficient: lifting preserves bond count. "
        "Lower bound checked per coefficient from the exclusion counts."
    )

    @property
    def holds(self) -> bool:
        return self.upper_holds and self.lower_holds and all(
            row.upper_holds and row.lower_holds for row in self.rows
        )


def sandwich_check(d, L, period, n_max, model, x, p, workers=None, budget=None) -> SandwichReport:
    """psi - E <= G^T - G <= psi, per coefficient and at the exact activity p."""
    if isinstance(p, float):
        raise PreconditionError("activity must be an exact rational for this check")
    p = Fraction(p)
    exclusion = exclusion_series(d, L, period, n_max, x, model, workers, budget)
    torus = torus_two_point_series(d, L, period, n_max, model, x, workers, budget)

    rows = []
    for n in range(n_max + 1):
        zd, wrapped = exclusion.two_point[n], torus[n]
        psi, bigE = exclusion.psi[n], exclusion.bigE[n]
        rows.append(
            SandwichRow(
                n=n,
                zd=zd,
                torus=wrapped,
                psi=psi,
                bigE=bigE,
                upper_holds=wrapped - zd <= psi,
                lower_holds=psi - bigE <= wrapped - zd,
            )
        )

    zd_value = exclusion.two_point.evaluate(p)
    torus_value = torus.evaluate(p)
    psi_value = exclusion.psi.evaluate(p)
    bigE_value = exclusion.bigE.evaluate(p)
    report = SandwichReport(
        rows=tuple(rows),
        zd_value=zd_value,
        torus_value=torus_value,
        psi_value=psi_value,
        bigE_value=bigE_value,
        upper_holds=torus_value - zd_value <= psi_value,
        lower_holds=psi_value - bigE_value <= torus_value - zd_value,
        trivial=exclusion.trivial,
    )
    logger.info(
        "[Sandwich] Checked torus comparison",
        d=d,
        L=L,
        period=period,
        n_max=n_max,
        model=model,
        holds=report.holds,
        trivial=report.trivial,
    )
    return report


@dataclass(frozen=True)
class WrapIdentityReport:
    period: int
    fold: int
    box_radius: int
    max_discrepancy: float
    fourier_discrepancy: float


def wrap_identity_check(
    kernel: StepKernel,
    z: float,
    period: int,
    fold: int,
    box_radius: int | None = None,
) -> WrapIdentityReport:
    """
    Compare Gamma^{*k} (torus convolution of Gamma = wrap_sum(S_z, r)) with
    sum_u S_z^{*k}(x + r u) formed by Z^d convolution, and both with the period-r
    Fourier sum of 1 / (1 - z D^)^k.
    """
    if not 1 <= fold <= MAX_FOLD:
        raise PreconditionError(f"fold must lie in [1, {MAX_FOLD}], got {fold}")
    _check_period(kernel.L, period)
    mass = so_mass(kernel, z).m
    if box_radius is None:
        box_radius = max(math.ceil(30 / mass), period)
    if 2 * box_radius + 1 < period:
        raise PreconditionError(f"box radius {box_radius} does not cover one period {period}")

    grid_size = default_grid_size(mass)
    while grid_size < 2 * box_radius + 2:
        grid_size *= 2
    walk = box_from_torus(green_field(kernel, z, grid_size), box_radius)

    gamma = wrap_sum(walk, period)
    folded = gamma
    for _ in range(fold - 1):
        folded = torus_convolve(folded, gamma)

    convolved = walk
    for _ in range(fold - 1):
        convolved = zd_convolve(
            convolved, walk, radius=convolved.geometry.radius + box_radius
        )
    wrapped = wrap_sum(convolved, period)

    symbol = walk_symbol(kernel, WalkKind.SPREAD_OUT, period)
    exact = LatticeField(
        geometry=Torus(period=period, d=kernel.d),
        values=np.fft.ifftn(1.0 / (1.0 - z * symbol) ** fold).real,
    )

    report = WrapIdentityReport(
        period=period,
        fold=fold,
        box_radius=box_radius,
        max_discrepancy=float(np.max(np.abs(folded.values - wrapped.values))),
        fourier_discrepancy=float(np.max(np.abs(folded.values - exact.values))),
    )
    logger.info(
        "[Wrap Identity] Compared torus and Z^d folds",
        period=period,
        fold=fold,
        box_radius=box_radius,
        max_discrepancy=report.max_discrepancy,
        fourier_discrepancy=report.fourier_discrepancy,
    )
    return report


@dataclass(frozen=True)
class LiftAuditReport:
    torus_polymers: int
    round_trip_failures: int
    lift_collisions: int
    pool_size: int
    pool_failures: int

    @property
    def passed(self) -> bool:
        return not (self.round_trip_failures or self.lift_collisions or self.pool_failures)


def lift_audit(d, L, period, n_max, model, workers=None, budget=None) -> LiftAuditReport:
    """
    project(lift(T)) == T over every torus polymer containing 0, lifts pairwise
    distinct, and lift(project(A)) == A for every Z^d polymer A containing 0 with
    no two vertices congruent mod r.
    """
    _check_period(L, period)
    torus_polymers = enumerate_torus_polymers(d, L, period, n_max, model, workers, budget)

    round_trip_failures = 0
    seen = set()
    for polymer in torus_polymers:
        lifted = lift(polymer).zd_polymer
        if project(lifted, period, L) != polymer:
            round_trip_failures += 1
        seen.add((lifted.edges, lifted.vertices))
    lift_collisions = len(torus_polymers) - len(seen)

    pool_size = 0
    pool_failures = 0
    for polymer in iter_polymers(d, L, n_max, model, rooted=True, workers=workers, budget=budget):
        if not _faithful(polymer.vertices, period):
            continue
        pool_size += 1
        relifted = lift(project(polymer, period, L)).zd_polymer
        if relifted.edges != polymer.edges or relifted.vertices != polymer.vertices:
            pool_failures += 1

    report = LiftAuditReport(
        torus_polymers=len(torus_polymers),
        round_trip_failures=round_trip_failures,
        lift_collisions=lift_collisions,
        pool_size=pool_size,
        pool_failures=pool_failures,
    )
    logger.info(
        "[Lift Audit] Finished audit",
        d=d,
        L=L,
        period=period,
        n_max=n_max,
        model=model,
        passed=report.passed,
    )
    return report
