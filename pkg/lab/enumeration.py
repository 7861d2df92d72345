"""
Exact enumeration of spread-out lattice trees and lattice animals.

Polymers are grown edge by edge with a Redelmeier search: a virtual root cell is
adjacent to every edge at the origin, an edge is adjacent to every edge sharing an
endpoint, and each connected edge set containing the root is produced exactly
once. Translation classes are enumerated by allowing only vertices that are
lexicographically >= 0, so each class appears with its smallest vertex at 0.

One pass produces a PolymerCensus from which every series is derived.
"""

import itertools
import math
import multiprocessing
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial

from django.conf import settings

from lab.choices import PolymerModel
from lab.constants import BUDGET_CHECK_INTERVAL
from lab.exceptions import BudgetExceededError, PreconditionError, TruncationError
from lab.kernel import make_kernel
from polylab.utils import get_polylab_logger

logger = get_polylab_logger(__name__)

Point = tuple[int, ...]
Edge = tuple[Point, Point]


def check_model(model: str) -> str:
    if model not in PolymerModel.values:
        raise PreconditionError(f"invalid model {model!r}; choose one of {PolymerModel.values}")
    return model


def sup_norm(x) -> int:
    return max((abs(int(c)) for c in x), default=0)


def add_points(x, y) -> Point:
    return tuple(a + b for a, b in zip(x, y, strict=True))


def subtract_points(x, y) -> Point:
    return tuple(a - b for a, b in zip(x, y, strict=True))


@dataclass(frozen=True)
class Polymer:
    edges: frozenset
    model: str = PolymerModel.ANIMAL
    extra_vertices: frozenset = field(default=frozenset())

    @classmethod
    def from_edges(cls, edges, model=PolymerModel.ANIMAL, vertices=()) -> "Polymer":
        normalised = frozenset(tuple(sorted((tuple(a), tuple(b)))) for a, b in edges)
        endpoints = {v for edge in normalised for v in edge}
        return cls(
            edges=normalised,
            model=model,
            extra_vertices=frozenset(tuple(v) for v in vertices) - endpoints,
        )

    @classmethod
    def single_vertex(cls, x, model=PolymerModel.ANIMAL) -> "Polymer":
        return cls(edges=frozenset(), model=model, extra_vertices=frozenset({tuple(x)}))

    @property
    def vertices(self) -> frozenset:
        return frozenset(v for edge in self.edges for v in edge) | self.extra_vertices

    @property
    def bond_count(self) -> int:
        return len(self.edges)

    def contains(self, x) -> bool:
        return tuple(x) in self.vertices

    def translated(self, shift) -> "Polymer":
        return Polymer.from_edges(
            ((add_points(a, shift), add_points(b, shift)) for a, b in self.edges),
            model=self.model,
            vertices=(add_points(v, shift) for v in self.extra_vertices),
        )

    def canonical_key(self) -> tuple:
        """Sorted edge list after moving the smallest vertex to 0."""
        shift = tuple(-c for c in min(self.vertices))
        moved = self.translated(shift)
        return tuple(sorted(moved.edges)) or tuple(sorted(moved.vertices))

    def is_connected(self) -> bool:
        vertices = self.vertices
        if not vertices:
            return False
        adjacency = {v: set() for v in vertices}
        for a, b in self.edges:
            adjacency[a].add(b)
            adjacency[b].add(a)
        start = next(iter(vertices))
        seen = {start}
        stack = [start]
        while stack:
            for neighbour in adjacency[stack.pop()]:
                if neighbour not in seen:
                    seen.add(neighbour)
                    stack.append(neighbour)
        return len(seen) == len(vertices)

    def is_tree(self) -> bool:
        return self.is_connected() and len(self.edges) == len(self.vertices) - 1

    def validate(self, L: int):
        for a, b in self.edges:
            if not 0 < sup_norm(subtract_points(b, a)) <= L:
                raise PreconditionError(f"edge {(a, b)} is not a spread-out edge of range {L}")
        if not self.is_connected():
            raise PreconditionError("polymer is not connected")
        if self.model == PolymerModel.TREE and not self.is_tree():
            raise PreconditionError("tree polymer contains a cycle")


@dataclass(frozen=True)
class PolymerSeries:
    """sum_n coeffs[n] (p / omega)^n, truncated at n_max = len(coeffs) - 1."""

    coeffs: tuple
    omega: int
    weight_spec: str = "none"

    @property
    def n_max(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, n: int):
        return self.coeffs[n]

    def activity(self, p):
        if isinstance(p, int | Fraction):
            return Fraction(p) / self.omega
        return p / self.omega

    def evaluate(self, p):
        activity = self.activity(p)
        total = 0
        for coefficient in reversed(self.coeffs):
            total = total * activity + coefficient
        return total

    def check_convergence(self, p):
        """Ratio test on the last two coefficients: (p/omega) b_N / b_{N-1} < 1."""
        if p == 0:
            return
        if self.n_max < 1 or self.coeffs[-2] == 0:
            raise TruncationError("series is too short to judge its convergence")
        ratio = self.activity(p) * self.coeffs[-1] / self.coeffs[-2]
        if ratio >= 1:
            raise TruncationError(
                f"ratio test fails at p={p}: (p/omega) b_N / b_(N-1) = {float(ratio):.4f}"
            )

    def to_payload(self) -> dict:
        return {
            "omega": self.omega,
            "weight_spec": self.weight_spec,
            "n_max": self.n_max,
            "coeffs": [_json_number(c) for c in self.coeffs],
        }


def _json_number(value):
    if isinstance(value, Fraction):
        return str(value)
    return value


class ZdCells:
    """
    Spread-out edges of Z^d with vertices packed into integers.

    A point x with |x_i| <= (n_max + 1) L is stored as sum_i (x_i + offset) base^(d-1-i),
    so integer order is lexicographic order and translation is integer addition.
    """

    def __init__(self, d: int, L: int, n_max: int, half_space: bool = True):
        self.d = d
        self.L = L
        self.n_max = n_max
        self.half_space = half_space
        self.offset = (n_max + 1) * L
        self.base = 2 * self.offset + 1
        self.origin = self.encode((0,) * d)
        self.step_codes = [self.encode_difference(step) for step in make_kernel(d, L).support]

    def encode(self, x) -> int:
        code = 0
        for coordinate in x:
            code = code * self.base + coordinate + self.offset
        return code

    def encode_difference(self, step) -> int:
        code = 0
        for coordinate in step:
            code = code * self.base + coordinate
        return code

    def decode(self, code: int) -> Point:
        digits = []
        for _ in range(self.d):
            code, digit = divmod(code, self.base)
            digits.append(digit - self.offset)
        return tuple(reversed(digits))

    def decode_difference(self, delta: int) -> Point:
        digits = []
        for _ in range(self.d):
            delta, digit = divmod(delta, self.base)
            if digit > self.base // 2:
                digit -= self.base
                delta += 1
            digits.append(digit)
        return tuple(reversed(digits))

    def root_edges(self) -> list:
        edges = []
        for step in self.step_codes:
            other = self.origin + step
            if self.half_space and other < self.origin:
                continue
            edges.append((min(self.origin, other), max(self.origin, other)))
        return edges

    def incident(self, vertex: int):
        for step in self.step_codes:
            other = vertex + step
            yield (min(vertex, other), max(vertex, other)), other

    def allowed(self, edge) -> bool:
        return not self.half_space or edge[0] >= self.origin


class TorusCells:
    """Projected spread-out edges of the torus (Z/rZ)^d; vertex codes are residues in lex order."""

    def __init__(self, d: int, L: int, period: int):
        if period < 2 * L + 1:
            raise PreconditionError(f"period {period} must be >= 2L + 1 = {2 * L + 1}")
        self.d = d
        self.L = L
        self.period = period
        self.points = list(itertools.product(range(period), repeat=d))
        self.index = {point: code for code, point in enumerate(self.points)}
        steps = make_kernel(d, L).support
        self.neighbours = [
            [
                self.index[tuple((c + s) % period for c, s in zip(point, step, strict=True))]
                for step in steps
            ]
            for point in self.points
        ]
        self.origin = 0

    def encode(self, x) -> int:
        return self.index[tuple(int(c) % self.period for c in x)]

    def decode(self, code: int) -> Point:
        return self.points[code]

    def root_edges(self) -> list:
        return sorted({(min(0, other), max(0, other)) for other in self.neighbours[0]})

    def incident(self, vertex: int):
        for other in self.neighbours[vertex]:
            yield (min(vertex, other), max(vertex, other)), other

    def allowed(self, edge) -> bool:
        return True


class CensusCollector:
    def __init__(self, n_max: int, pairs: bool = False):
        self.t_n = [0] * (n_max + 1)
        self.rooted_n = [0] * (n_max + 1)
        self.square_n = [0] * (n_max + 1)
        self.pair_counts = [Counter() for _ in range(n_max + 1)] if pairs else None

    def record(self, bond_count: int, vertices, edges):
        size = len(vertices)
        self.t_n[bond_count] += 1
        self.rooted_n[bond_count] += size
        self.square_n[bond_count] += size * size
        if self.pair_counts is not None:
            self.pair_counts[bond_count].update(w - v for v in vertices for w in vertices)

    def merge(self, other: "CensusCollector"):
        for n, count in enumerate(other.t_n):
            self.t_n[n] += count
            self.rooted_n[n] += other.rooted_n[n]
            self.square_n[n] += other.square_n[n]
            if self.pair_counts is not None:
                self.pair_counts[n].update(other.pair_counts[n])


class PolymerCollector:
    """Keeps every generated edge set; only for small pools."""

    def __init__(self, n_max: int):
        self.polymers = []

    def record(self, bond_count: int, vertices, edges):
        self.polymers.append((tuple(edges), tuple(vertices)))

    def merge(self, other: "PolymerCollector"):
        self.polymers.extend(other.polymers)


def _search_shard(  # noqa: C901
    cells, model: str, n_max: int, shard: int, collector, meter: "BudgetMeter"
) -> int:
    """Grow every polymer whose first root cell is root_edges()[shard]; returns the count."""
    roots = cells.root_edges()
    vertices = {cells.origin}
    chosen = []
    marked = set(roots)
    trees_only = model == PolymerModel.TREE
    generated = 0

    def place(index: int, untried: list):  # noqa: C901
        nonlocal generated
        edge = untried[index]
        low, high = edge
        low_in, high_in = low in vertices, high in vertices
        if low_in and high_in and trees_only:
            return
        new_vertex = None if low_in and high_in else (high if low_in else low)

        chosen.append(edge)
        if new_vertex is not None:
            vertices.add(new_vertex)
        generated += 1
        if generated % meter.interval == 0:
            meter.charge(meter.interval)
        collector.record(len(chosen), vertices, chosen)

        if len(chosen) < n_max:
            fresh = []
            kept = []
            for endpoint in edge:
                for neighbour, other in cells.incident(endpoint):
                    if neighbour in marked or not cells.allowed(neighbour):
                        continue
                    marked.add(neighbour)
                    fresh.append(neighbour)
                    if not (trees_only and other in vertices):
                        kept.append(neighbour)
            extend(untried[index + 1 :] + kept)
            marked.difference_update(fresh)

        chosen.pop()
        if new_vertex is not None:
            vertices.discard(new_vertex)

    def extend(untried: list):
        for index in range(len(untried)):
            place(index, untried)

    place(shard, roots)
    meter.charge(generated % meter.interval)
    return generated


class BudgetMeter:
    """
    Running count of generated polymers for one search, checked against the budget.

    In a worker pool the count lives in a shared counter that shards charge in
    blocks of BUDGET_CHECK_INTERVAL; in-process searches charge every polymer.
    """

    def __init__(self, budget: int, counter=None):
        self.budget = budget
        self.counter = counter
        self.interval = 1 if counter is None else BUDGET_CHECK_INTERVAL
        self.spent = 0

    def charge(self, count: int) -> int:
        if self.counter is None:
            self.spent += count
            total = self.spent
        else:
            with self.counter.get_lock():
                self.counter.value += count
                total = self.counter.value
        if total > self.budget:
            raise BudgetExceededError(budget=self.budget, generated=total)
        return total


_shared_counter = None


def _attach_counter(counter):
    global _shared_counter
    _shared_counter = counter


def _run_shard(job, meter: BudgetMeter | None = None):
    cells, model, n_max, shard, collector_factory, budget = job
    if meter is None:
        meter = BudgetMeter(budget, _shared_counter)
    collector = collector_factory()
    generated = _search_shard(cells, model, n_max, shard, collector, meter)
    return collector, generated


def _run_pool(jobs: list, workers: int, budget: int) -> list:
    """Run shards in worker processes; the first shard over budget cancels the rest."""
    counter = multiprocessing.Value("q", 1)
    with ProcessPoolExecutor(
        max_workers=workers, initializer=_attach_counter, initargs=(counter,)
    ) as executor:
        futures = [executor.submit(_run_shard, job) for job in jobs]
        try:
            return [future.result() for future in futures]
        except BudgetExceededError:
            executor.shutdown(wait=True, cancel_futures=True)
            raise


def resolve_workers(workers: int | None) -> int:
    return max(1, workers if workers is not None else settings.POLYLAB_WORKERS)


def resolve_budget(budget: int | None) -> int:
    return budget if budget is not None else settings.POLYLAB_BUDGET


def run_search(
    cells,
    model: str,
    n_max: int,
    collector_factory,
    workers: int | None = None,
    budget: int | None = None,
):
    """
    Run the sharded search and merge the shard collectors in shard order.

    Shards are the top-level branches of the root cell, so the merged result does
    not depend on the worker count.
    """
    check_model(model)
    if n_max < 0:
        raise PreconditionError(f"n_max must be >= 0, got {n_max}")
    workers = resolve_workers(workers)
    budget = resolve_budget(budget)

    collector = collector_factory()
    collector.record(0, {cells.origin}, [])

    jobs = []
    if n_max >= 1:
        jobs = [
            (cells, model, n_max, shard, collector_factory, budget)
            for shard in range(len(cells.root_edges()))
        ]

    try:
        if workers == 1 or len(jobs) <= 1:
            meter = BudgetMeter(budget)
            meter.charge(1)
            results = [_run_shard(job, meter) for job in jobs]
        else:
            results = _run_pool(jobs, workers, budget)
    except BudgetExceededError as error:
        logger.warning(
            "[Enumerate] Budget exceeded",
            model=model,
            n_max=n_max,
            budget=budget,
            generated=error.generated,
        )
        raise

    generated = 1
    for shard_collector, shard_generated in results:
        collector.merge(shard_collector)
        generated += shard_generated

    logger.info(
        "[Enumerate] Finished search",
        model=model,
        n_max=n_max,
        shards=len(jobs),
        workers=workers,
        generated=generated,
    )
    return collector, generated


@dataclass
class PolymerCensus:
    d: int
    L: int
    n_max: int
    model: str
    t_n: list[int]
    rooted_n: list[int]
    square_n: list[int]
    pair_counts: list[dict] | None = None
    generated: int = 0

    @property
    def omega(self) -> int:
        return (2 * self.L + 1) ** self.d - 1

    def _series(self, coeffs, weight_spec="none") -> PolymerSeries:
        return PolymerSeries(coeffs=tuple(coeffs), omega=self.omega, weight_spec=weight_spec)

    def _require_pairs(self):
        if self.pair_counts is None:
            raise PreconditionError("census was taken without pair statistics")
        return self.pair_counts

    def two_point(self, x) -> PolymerSeries:
        """c_n(x) = number of n-bond polymers containing 0 and x."""
        x = tuple(int(c) for c in x)
        if len(x) != self.d:
            raise PreconditionError(f"point {x} is not {self.d}-dimensional")
        return self._series(table.get(x, 0) for table in self._require_pairs())

    def one_point(self) -> PolymerSeries:
        return self._series(self.rooted_n)

    def susceptibility(self) -> PolymerSeries:
        return self._series(self.square_n)

    def tilted_susceptibility(self, m: float) -> PolymerSeries:
        if m < 0:
            raise PreconditionError(f"tilt must be >= 0, got {m}")
        return self._series(
            (
                math.fsum(count * math.exp(m * x[0]) for x, count in table.items())
                for table in self._require_pairs()
            ),
            weight_spec=f"exp(m x1), m={m}",
        )

    def second_moment(self) -> PolymerSeries:
        """sum_x |x|^2 c_n(x)."""
        return self._series(
            (
                sum(sum(c * c for c in x) * count for x, count in table.items())
                for table in self._require_pairs()
            ),
            weight_spec="|x|^2",
        )

    def support(self) -> list[Point]:
        points = set()
        for table in self._require_pairs():
            points.update(table)
        return sorted(points)

    def to_payload(self) -> dict:
        return {
            "model": self.model,
            "d": self.d,
            "L": self.L,
            "n_max": self.n_max,
            "t_n": list(self.t_n),
            "rooted_n": list(self.rooted_n),
            "chi_n": list(self.square_n),
            "generated": self.generated,
        }


def _check_lattice(d: int, L: int, n_max: int):
    if d < 1 or L < 1:
        raise PreconditionError(f"need d >= 1 and L >= 1, got d={d}, L={L}")
    if n_max < 0:
        raise PreconditionError(f"n_max must be >= 0, got {n_max}")


def enumerate_census(
    d: int,
    L: int,
    n_max: int,
    model: str,
    pairs: bool = False,
    workers: int | None = None,
    budget: int | None = None,
) -> PolymerCensus:
    _check_lattice(d, L, n_max)
    check_model(model)
    cells = ZdCells(d, L, n_max)
    collector, generated = run_search(
        cells,
        model,
        n_max,
        partial(CensusCollector, n_max=n_max, pairs=pairs),
        workers=workers,
        budget=budget,
    )
    pair_counts = None
    if collector.pair_counts is not None:
        pair_counts = [
            {cells.decode_difference(delta): count for delta, count in table.items()}
            for table in collector.pair_counts
        ]
    return PolymerCensus(
        d=d,
        L=L,
        n_max=n_max,
        model=model,
        t_n=collector.t_n,
        rooted_n=collector.rooted_n,
        square_n=collector.square_n,
        pair_counts=pair_counts,
        generated=generated,
    )


def enumerate_counts(d, L, n_max, model, workers=None, budget=None) -> PolymerCensus:
    """t_n (classes modulo translation) and rooted_n (polymers containing 0)."""
    return enumerate_census(d, L, n_max, model, workers=workers, budget=budget)


def iter_polymers(d, L, n_max, model, rooted=False, workers=None, budget=None):
    """
    Yield each polymer with at most n_max bonds as a Polymer.

    With rooted=False one representative per translation class (smallest vertex
    at 0); with rooted=True every translate containing 0.
    """
    _check_lattice(d, L, n_max)
    cells = ZdCells(d, L, n_max)
    collector, _generated = run_search(
        cells,
        model,
        n_max,
        partial(PolymerCollector, n_max=n_max),
        workers=workers,
        budget=budget,
    )
    for edge_codes, vertex_codes in collector.polymers:
        polymer = Polymer.from_edges(
            ((cells.decode(a), cells.decode(b)) for a, b in edge_codes),
            model=model,
            vertices=(cells.decode(v) for v in vertex_codes),
        )
        if not rooted:
            yield polymer
            continue
        for vertex in sorted(polymer.vertices):
            yield polymer.translated(tuple(-c for c in vertex))


def two_point_series(d, L, n_max, model, x, workers=None, budget=None) -> PolymerSeries:
    census = enumerate_census(d, L, n_max, model, pairs=True, workers=workers, budget=budget)
    return census.two_point(x)


def susceptibility_series(d, L, n_max, model, workers=None, budget=None) -> PolymerSeries:
    """chi_n = sum_x c_n(x) = sum over classes of |V|^2."""
    return enumerate_census(d, L, n_max, model, workers=workers, budget=budget).susceptibility()


def tilted_susceptibility_series(d, L, n_max, model, m, workers=None, budget=None) -> PolymerSeries:
    if m < 0:
        raise PreconditionError(f"tilt must be >= 0, got {m}")
    census = enumerate_census(d, L, n_max, model, pairs=True, workers=workers, budget=budget)
    return census.tilted_susceptibility(m)


def second_moment_series(d, L, n_max, model, workers=None, budget=None) -> PolymerSeries:
    census = enumerate_census(d, L, n_max, model, pairs=True, workers=workers, budget=budget)
    return census.second_moment()


def xi2_from_census(census: PolymerCensus, p) -> float:
    chi = census.susceptibility()
    moment = census.second_moment()
    chi.check_convergence(p)
    moment.check_convergence(p)
    return math.sqrt(float(moment.evaluate(p)) / float(chi.evaluate(p)))


def xi2_series_eval(d, L, n_max, model, p, workers=None, budget=None) -> float:
    """xi_2(p) = sqrt(sum_x |x|^2 G_p(x) / chi(p)) from the truncated series."""
    if p < 0:
        raise PreconditionError(f"activity must be >= 0, got {p}")
    census = enumerate_census(d, L, n_max, model, pairs=True, workers=workers, budget=budget)
    return xi2_from_census(census, p)


@dataclass(frozen=True)
class PcEstimate:
    estimate: float
    ratios: tuple[float, ...]


def pc_estimate(census: PolymerCensus) -> PcEstimate:
    """
    Ratio estimator omega / (t_N / t_(N-1)) for p_c, with the last three ratios.

    This is an advisory estimate: no finite-n quantity bounds p_c.
    """
    if census.n_max < 4:
        raise PreconditionError(f"need n_max >= 4 for a ratio estimate, got {census.n_max}")
    if any(count == 0 for count in census.t_n):
        raise PreconditionError("zero counts in the census")
    ratios = tuple(
        census.t_n[n] / census.t_n[n - 1] for n in range(census.n_max - 2, census.n_max + 1)
    )
    return PcEstimate(estimate=census.omega / ratios[-1], ratios=ratios)


@dataclass(frozen=True)
class SubadditivityReport:
    holds: bool
    violations: tuple[tuple[int, int], ...]
    checked: int


def check_subadditivity(census: PolymerCensus) -> SubadditivityReport:
    """t_n t_m <= t_(n+m+1) for every n + m + 1 <= n_max."""
    t = census.t_n
    violations = []
    checked = 0
    for n in range(census.n_max + 1):
        for m in range(n, census.n_max - n):
            checked += 1
            if t[n] * t[m] > t[n + m + 1]:
                violations.append((n, m))
    return SubadditivityReport(holds=not violations, violations=tuple(violations), checked=checked)


@dataclass(frozen=True)
class InequalityReport:
    lhs: Fraction | float
    rhs: Fraction | float
    holds: bool


def _exact_activity(p) -> Fraction:
    if isinstance(p, float):
        raise PreconditionError("activity must be an exact rational for this check")
    return Fraction(p)


def simon_lieb_check(
    d,
    L,
    n_max,
    p,
    Lambda,
    x,
    model=PolymerModel.TREE,
    census: PolymerCensus | None = None,
    workers=None,
    budget=None,
) -> InequalityReport:
    """
    G_p(x) <= sum_{y in Lambda, z not in Lambda} G_p(y) p D(z - y) G_p(x - z),
    every factor truncated at n_max and evaluated in exact arithmetic.
    """
    p = _exact_activity(p)
    region = {tuple(int(c) for c in y) for y in Lambda}
    x = tuple(int(c) for c in x)
    if not region or any(len(y) != d for y in region) or len(x) != d:
        raise PreconditionError("Lambda must be a nonempty set of d-dimensional points")
    if (0,) * d not in region:
        raise PreconditionError("Lambda must contain the origin")
    if x in region:
        raise PreconditionError(f"x={x} must lie outside Lambda")

    if census is None:
        census = enumerate_census(d, L, n_max, model, pairs=True, workers=workers, budget=budget)

    cache = {}

    def G(point):
        if point not in cache:
            cache[point] = census.two_point(point).evaluate(p)
        return cache[point]

    steps = make_kernel(d, L).support
    rhs = Fraction(0)
    for y in sorted(region):
        exits = (add_points(y, s) for s in steps)
        inner = sum((G(subtract_points(x, z)) for z in exits if z not in region), Fraction(0))
        rhs += G(y) * p / census.omega * inner
    lhs = G(x)

    logger.info(
        "[Simon-Lieb] Evaluated inequality",
        d=d,
        L=L,
        n_max=n_max,
        x=x,
        lambda_size=len(region),
        holds=lhs <= rhs,
    )
    return InequalityReport(lhs=lhs, rhs=rhs, holds=lhs <= rhs)


@dataclass(frozen=True)
class DecayCheckReport:
    holds: bool
    worst_ratio: float
    worst_point: Point | None


def check_exponential_decay(census: PolymerCensus, p, m: float) -> DecayCheckReport:
    """G_p(x) <= chi^(m)(p) e^{-m |x|_inf} over every x reached by the census."""
    chi_tilted = float(census.tilted_susceptibility(m).evaluate(float(p)))
    worst_ratio = 0.0
    worst_point = None
    for x in census.support():
        value = float(census.two_point(x).evaluate(float(p)))
        bound = chi_tilted * math.exp(-m * sup_norm(x))
        ratio = value / bound
        if ratio > worst_ratio:
            worst_ratio, worst_point = ratio, x
    return DecayCheckReport(
        holds=worst_ratio <= 1 + 1e-12,
        worst_ratio=worst_ratio,
        worst_point=worst_point,
    )
