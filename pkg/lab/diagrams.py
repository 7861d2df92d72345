"""
Tilted and weighted diagram functionals (bubbles, triangles, squares) evaluated
as iterated Z^d convolutions of box fields.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from lab.choices import Reduction
from lab.exceptions import PreconditionError
from lab.fields import Box, LatticeField, box_from_torus, zd_convolve
from lab.greens import green_field, so_mass
from lab.kernel import StepKernel, make_kernel
from polylab.utils import get_polylab_logger

logger = get_polylab_logger(__name__)

KERNEL_FACTOR = "D"


@dataclass(frozen=True)
class Factor:
    """One line of a diagram: the kernel D (times p) or a named field, maybe tilted or weighted."""

    name: str
    tilt: float = 0.0
    weight: float | None = None

    def to_payload(self) -> dict:
        return {"name": self.name, "tilt": self.tilt, "weight": self.weight}


@dataclass(frozen=True)
class DiagramSpec:
    name: str
    factors: tuple[Factor, ...]
    reduction: str = Reduction.SUP
    subtract_one_point: bool = False

    def __post_init__(self):
        if not self.factors:
            raise PreconditionError("a diagram needs at least one factor")
        weighted = [factor for factor in self.factors if factor.weight is not None]
        if len(weighted) > 1:
            raise PreconditionError("at most one factor may carry the |x|^a weight")
        if any(not math.isfinite(factor.tilt) or factor.tilt < 0 for factor in self.factors):
            raise PreconditionError("tilts must be finite and nonnegative")
        if self.reduction not in Reduction.values:
            raise PreconditionError(f"unknown reduction {self.reduction!r}")

    def reversed(self) -> "DiagramSpec":
        return DiagramSpec(
            name=f"{self.name}-reversed",
            factors=tuple(reversed(self.factors)),
            reduction=self.reduction,
            subtract_one_point=self.subtract_one_point,
        )

    def to_payload(self) -> dict:
        return {
            "name": self.name,
            "factors": [factor.to_payload() for factor in self.factors],
            "reduction": self.reduction,
            "subtract_one_point": self.subtract_one_point,
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "DiagramSpec":
        return cls(
            name=payload.get("name", "custom"),
            factors=tuple(
                Factor(
                    name=entry["name"],
                    tilt=float(entry.get("tilt", 0.0)),
                    weight=None if entry.get("weight") is None else float(entry["weight"]),
                )
                for entry in payload["factors"]
            ),
            reduction=payload.get("reduction", Reduction.SUP),
            subtract_one_point=bool(payload.get("subtract_one_point", False)),
        )


@dataclass(frozen=True)
class DiagramValue:
    name: str
    value: float
    box_radius: int
    runtime_seconds: float


def catalogue(a: float = 0.0, m: float = 0.0) -> dict[str, DiagramSpec]:
    """The tree squares and triangles plus the animal triangle and bubble, on a field named G."""
    D, G = KERNEL_FACTOR, "G"
    specs = [
        DiagramSpec(
            "square1", (Factor(D, tilt=m), Factor(G, tilt=m), Factor(G), Factor(G), Factor(G))
        ),
        DiagramSpec(
            "square2", (Factor(D), Factor(G), Factor(G), Factor(G, tilt=m), Factor(G, tilt=m))
        ),
        DiagramSpec(
            "triangle1", (Factor(D, weight=a), Factor(G), Factor(G, tilt=m), Factor(G, tilt=m))
        ),
        DiagramSpec(
            "triangle2", (Factor(D), Factor(G, weight=a), Factor(G, tilt=m), Factor(G, tilt=m))
        ),
        DiagramSpec(
            "triangle3", (Factor(D, tilt=m), Factor(G, tilt=m), Factor(G), Factor(G, weight=a))
        ),
        DiagramSpec("animal_triangle", (Factor(G, tilt=m), Factor(G), Factor(G))),
        DiagramSpec("bubble", (Factor(G, weight=a), Factor(G, tilt=m))),
    ]
    return {spec.name: spec for spec in specs}


def _prepared_factor(factor: Factor, fields: dict, kernel: StepKernel | None, p) -> LatticeField:
    if factor.name == KERNEL_FACTOR:
        if kernel is None:
            raise PreconditionError("the D factor needs a kernel")
        base = kernel.as_field()
        values = float(p) * base.values
    else:
        if factor.name not in fields:
            raise PreconditionError(f"no field bound to {factor.name!r}")
        base = fields[factor.name]
        values = base.values

    if factor.tilt:
        first = base.coordinates()[0]
        if base.is_symmetric():
            values = values * np.cosh(factor.tilt * first)
        else:
            values = values * np.exp(factor.tilt * first)
    if factor.weight is not None:
        values = values * np.sqrt(base.norm_squared()) ** factor.weight
    return LatticeField(geometry=base.geometry, values=values)


def _convolve_all(factors: list[LatticeField]) -> LatticeField:
    result = factors[0]
    for factor in factors[1:]:
        result = zd_convolve(result, factor, radius=result.geometry.radius + factor.geometry.radius)
    return result


def eval_diagram(  # noqa: C901
    spec: DiagramSpec,
    fields: dict,
    p=1.0,
    kernel: StepKernel | None = None,
    one_point: float | None = None,
) -> DiagramValue:
    """
    Convolve the prepared factors in order and reduce by sup norm or by the value
    at 0. Tilts and weights act pointwise before convolving; the D factor is p D.
    """
    started = time.perf_counter()
    geometries = {field.geometry for field in fields.values()}
    if len(geometries) > 1:
        raise PreconditionError("all bound fields must live on one common box")
    if any(not isinstance(geometry, Box) for geometry in geometries):
        raise PreconditionError("diagram fields must be box fields")

    prepared = [_prepared_factor(factor, fields, kernel, p) for factor in spec.factors]

    if spec.reduction == Reduction.SUP:
        full = _convolve_all(prepared)
        value = float(np.max(np.abs(full.values)))
        radius = full.geometry.radius
    else:
        # (f1 * ... * fk)(0) = sum_x left(x) right(-x) with the factors split in two halves.
        middle = (len(prepared) + 1) // 2
        left = _convolve_all(prepared[:middle])
        if middle == len(prepared):
            value = left.value_at((0,) * left.d)
            radius = left.geometry.radius
        else:
            right = _convolve_all(prepared[middle:])
            common = max(left.geometry.radius, right.geometry.radius)
            left_values = np.pad(left.values, common - left.geometry.radius)
            right_values = np.pad(right.values, common - right.geometry.radius)
            value = float(np.sum(left_values * np.flip(right_values)))
            radius = left.geometry.radius + right.geometry.radius

    if spec.subtract_one_point:
        if one_point is None:
            raise PreconditionError(f"{spec.name} subtracts a one-point power and needs the value")
        two_point_lines = sum(factor.name != KERNEL_FACTOR for factor in spec.factors)
        value -= one_point**two_point_lines

    return DiagramValue(
        name=spec.name,
        value=value,
        box_radius=radius,
        runtime_seconds=time.perf_counter() - started,
    )


def square_max(G_field: LatticeField, G_tilted_field: LatticeField, g_p: float) -> float:
    """max{(G^m * G^m * G * G)(0), (G^m * G * G * G)(0)} - g_p^4."""
    if G_field.geometry != G_tilted_field.geometry:
        raise PreconditionError("G and its tilt must share one box")
    fields = {"G": G_field, "Gm": G_tilted_field}
    double = DiagramSpec(
        "square-double-tilt",
        (Factor("Gm"), Factor("Gm"), Factor("G"), Factor("G")),
        reduction=Reduction.ORIGIN,
    )
    single = DiagramSpec(
        "square-single-tilt",
        (Factor("Gm"), Factor("G"), Factor("G"), Factor("G")),
        reduction=Reduction.ORIGIN,
    )
    return max(eval_diagram(double, fields).value, eval_diagram(single, fields).value) - g_p**4


def walk_box_field(kernel: StepKernel, z: float, radius: int) -> LatticeField:
    """S_z on [-radius, radius]^d, cut from a torus big enough that wrapping stays below the cut."""
    grid_size = 32
    while grid_size < 2 * radius + 2:
        grid_size *= 2
    return box_from_torus(green_field(kernel, z, grid_size), radius)


def tilted(field: LatticeField, m: float) -> LatticeField:
    """Pointwise f(x) cosh(m x1) for symmetric f, f(x) e^{m x1} otherwise."""
    first = field.coordinates()[0]
    weight = np.cosh(m * first) if field.is_symmetric() else np.exp(m * first)
    return LatticeField(geometry=field.geometry, values=field.values * weight)


@dataclass(frozen=True)
class ScalingRow:
    L: int
    square: float
    tilted_square: float
    tilt_ratio: float
    tilde_square: float
    bound: float
    bound_holds: bool


@dataclass(frozen=True)
class ScalingProbe:
    d: int
    z: float
    tilt: float
    box_radius: int
    rows: tuple[ScalingRow, ...]
    fitted_power: float


def L_scaling_probe(  # noqa: C901
    d: int,
    z: float,
    L_values,
    tilt_fraction: float = 0.5,
    box_radius: int | None = None,
) -> ScalingProbe:
    """
    The square (minus its delta part) on the walk surrogate S_z for each L, its
    log-log slope in L, and the tilted square against 4 e^{mL} max(square1, square2).

    The tilt is tilt_fraction times the smallest m_S(z) over the L values.
    """
    L_values = sorted(int(L) for L in L_values)
    if len(L_values) < 2:
        raise PreconditionError("need at least two ranges for a scaling fit")
    kernels = [make_kernel(d, L) for L in L_values]
    masses = [so_mass(kernel, z).m for kernel in kernels]
    tilt = tilt_fraction * min(masses)
    if box_radius is None:
        box_radius = max(12, math.ceil(6 / min(masses)))

    rows = []
    for kernel in kernels:
        walk = walk_box_field(kernel, z, box_radius)
        g = walk.value_at((0,) * d)
        square = square_max(walk, walk, g)
        tilted_square = square_max(walk, tilted(walk, tilt), g)
        tilde_square = max(
            eval_diagram(spec, {"G": walk}, p=z, kernel=kernel).value
            for name, spec in catalogue(m=tilt).items()
            if name in ("square1", "square2")
        )
        bound = 4 * math.exp(tilt * kernel.L) * tilde_square
        rows.append(
            ScalingRow(
                L=kernel.L,
                square=square,
                tilted_square=tilted_square,
                tilt_ratio=tilted_square / square if square else math.inf,
                tilde_square=tilde_square,
                bound=bound,
                bound_holds=tilted_square <= bound,
            )
        )

    slope, _intercept = np.polyfit(
        np.log([row.L for row in rows]), np.log([row.square for row in rows]), 1
    )
    logger.info(
        "[Diagrams] Finished range scaling probe",
        d=d,
        z=z,
        L_values=L_values,
        fitted_power=float(slope),
    )
    return ScalingProbe(
        d=d,
        z=z,
        tilt=tilt,
        box_radius=box_radius,
        rows=tuple(rows),
        fitted_power=float(slope),
    )
