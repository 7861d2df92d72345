"""
Real-valued fields on a centred box of Z^d or on a discrete torus, and the
convolution engine that acts on them.

Box fields index [-R, R]^d and stand for functions on Z^d that are negligible
outside the box. Torus fields index (Z/RZ)^d with array index i holding the
site whose representative in [-R/2, R/2)^d is congruent to i.
"""

import csv
import io
import itertools
from dataclasses import dataclass

import numpy as np
from scipy import signal

from lab.choices import ConvolutionMethod
from lab.constants import TORUS_TRANSFORM_THRESHOLD
from lab.exceptions import PreconditionError


@dataclass(frozen=True)
class Box:
    radius: int
    d: int

    @property
    def shape(self) -> tuple[int, ...]:
        return (2 * self.radius + 1,) * self.d

    def axis_coordinates(self) -> np.ndarray:
        return np.arange(-self.radius, self.radius + 1)


@dataclass(frozen=True)
class Torus:
    period: int
    d: int

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.period,) * self.d

    def axis_coordinates(self) -> np.ndarray:
        half = self.period // 2
        return (np.arange(self.period) + half) % self.period - half


Geometry = Box | Torus


@dataclass(frozen=True, eq=False)
class LatticeField:
    geometry: Geometry
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.geometry.shape:
            raise PreconditionError(
                f"values of shape {values.shape} do not fit geometry {self.geometry}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def d(self) -> int:
        return self.geometry.d

    @property
    def is_torus(self) -> bool:
        return isinstance(self.geometry, Torus)

    def coordinates(self) -> list[np.ndarray]:
        axis = self.geometry.axis_coordinates()
        return np.meshgrid(*([axis] * self.d), indexing="ij")

    def norm_squared(self) -> np.ndarray:
        return sum(coordinate.astype(float) ** 2 for coordinate in self.coordinates())

    def value_at(self, x) -> float:
        x = tuple(int(coordinate) for coordinate in x)
        if len(x) != self.d:
            raise PreconditionError(f"point {x} is not {self.d}-dimensional")
        if self.is_torus:
            return float(self.values[tuple(c % self.geometry.period for c in x)])
        radius = self.geometry.radius
        if any(abs(c) > radius for c in x):
            return 0.0
        return float(self.values[tuple(c + radius for c in x)])

    def axis_values(self, steps) -> np.ndarray:
        return np.array([self.value_at((n,) + (0,) * (self.d - 1)) for n in steps])

    def reflected(self) -> np.ndarray:
        """Values of x -> f(-x) on the same geometry."""
        flipped = np.flip(self.values)
        if self.is_torus:
            flipped = np.roll(flipped, 1, axis=tuple(range(self.d)))
        return flipped

    def is_symmetric(self, tolerance: float = 1e-12) -> bool:
        scale = max(float(np.max(np.abs(self.values))), 1.0)
        return bool(np.max(np.abs(self.values - self.reflected())) <= tolerance * scale)

    def total(self) -> float:
        return float(self.values.sum())

    def to_payload(self) -> dict:
        if self.is_torus:
            geometry = {"kind": "torus", "period": self.geometry.period, "d": self.d}
        else:
            geometry = {"kind": "box", "radius": self.geometry.radius, "d": self.d}
        return {"geometry": geometry, "values": self.values.ravel(order="C").tolist()}

    @classmethod
    def from_payload(cls, payload: dict) -> "LatticeField":
        header = payload["geometry"]
        if header["kind"] == "torus":
            geometry = Torus(period=header["period"], d=header["d"])
        elif header["kind"] == "box":
            geometry = Box(radius=header["radius"], d=header["d"])
        else:
            raise PreconditionError(f"unknown geometry kind {header['kind']!r}")
        values = np.asarray(payload["values"], dtype=float).reshape(geometry.shape)
        return cls(geometry=geometry, values=values)

    def axis_csv(self) -> str:
        """CSV slice of the field along the positive e1 axis."""
        if self.is_torus:
            steps = range(0, self.geometry.period // 2 + 1)
        else:
            steps = range(0, self.geometry.radius + 1)
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(["n", "value"])
        for step, value in zip(steps, self.axis_values(steps), strict=True):
            writer.writerow([step, repr(float(value))])
        return buffer.getvalue()


def delta(geometry: Geometry) -> LatticeField:
    values = np.zeros(geometry.shape)
    if isinstance(geometry, Torus):
        values[(0,) * geometry.d] = 1.0
    else:
        values[(geometry.radius,) * geometry.d] = 1.0
    return LatticeField(geometry=geometry, values=values)


def box_field(radius: int, d: int, function) -> LatticeField:
    """Tabulate `function(x)` for x in [-radius, radius]^d."""
    geometry = Box(radius=radius, d=d)
    values = np.zeros(geometry.shape)
    for index in itertools.product(range(2 * radius + 1), repeat=d):
        values[index] = function(tuple(i - radius for i in index))
    return LatticeField(geometry=geometry, values=values)


def _recentre(values: np.ndarray, from_radius: int, to_radius: int) -> np.ndarray:
    if to_radius <= from_radius:
        offset = from_radius - to_radius
        window = slice(offset, offset + 2 * to_radius + 1)
        return values[(window,) * values.ndim]
    pad = to_radius - from_radius
    return np.pad(values, pad)


def zd_convolve(f: LatticeField, g: LatticeField, radius: int | None = None) -> LatticeField:
    """
    Z^d convolution (f*g)(x) = sum_y f(y) g(x-y) over the stored supports.

    The full result lives on radius R_f + R_g; unless `radius` is given it is
    truncated to max(R_f, R_g).
    """
    if f.is_torus or g.is_torus:
        raise PreconditionError("zd_convolve takes box fields; use torus_convolve on tori")
    if f.d != g.d:
        raise PreconditionError(f"dimension mismatch: {f.d} != {g.d}")

    full_radius = f.geometry.radius + g.geometry.radius
    values = signal.convolve(f.values, g.values, mode="full", method="auto")
    if radius is None:
        radius = max(f.geometry.radius, g.geometry.radius)
    return LatticeField(
        geometry=Box(radius=radius, d=f.d),
        values=_recentre(values, full_radius, radius),
    )


def torus_convolve(
    f: LatticeField,
    g: LatticeField,
    method: str = ConvolutionMethod.AUTO,
) -> LatticeField:
    """Cyclic convolution (f*g)(x) = sum_{y in T_R^d} f(y) g(x-y)."""
    if not (f.is_torus and g.is_torus):
        raise PreconditionError("torus_convolve takes torus fields")
    if f.geometry != g.geometry:
        raise PreconditionError(f"period mismatch: {f.geometry} != {g.geometry}")

    if method == ConvolutionMethod.AUTO:
        sites = f.geometry.period**f.d
        method = (
            ConvolutionMethod.FOURIER
            if sites > TORUS_TRANSFORM_THRESHOLD
            else ConvolutionMethod.DIRECT
        )

    if method == ConvolutionMethod.FOURIER:
        values = np.fft.ifftn(np.fft.fftn(f.values) * np.fft.fftn(g.values)).real
    elif method == ConvolutionMethod.DIRECT:
        values = np.zeros(f.geometry.shape)
        axes = tuple(range(f.d))
        for shift in np.ndindex(*f.geometry.shape):
            weight = f.values[shift]
            if weight != 0.0:
                values += weight * np.roll(g.values, shift, axis=axes)
    else:
        raise PreconditionError(f"unknown convolution method {method!r}")

    return LatticeField(geometry=f.geometry, values=values)


def wrap_sum(f: LatticeField, period: int) -> LatticeField:
    """Fold a box field onto the torus: x -> sum_u f(x + period*u)."""
    if f.is_torus:
        raise PreconditionError("wrap_sum folds box fields")
    radius = f.geometry.radius
    if 2 * radius + 1 < period:
        raise PreconditionError(
            f"box of radius {radius} is smaller than one period {period}"
        )
    residues = np.arange(-radius, radius + 1) % period
    values = np.zeros((period,) * f.d)
    np.add.at(values, np.ix_(*([residues] * f.d)), f.values)
    return LatticeField(geometry=Torus(period=period, d=f.d), values=values)


def box_from_torus(f: LatticeField, radius: int) -> LatticeField:
    """Restrict a torus field to the centred box [-radius, radius]^d."""
    if not f.is_torus:
        raise PreconditionError("box_from_torus restricts torus fields")
    period = f.geometry.period
    if 2 * radius + 1 > period:
        raise PreconditionError(f"radius {radius} does not fit in period {period}")
    indices = np.arange(-radius, radius + 1) % period
    return LatticeField(
        geometry=Box(radius=radius, d=f.d),
        values=f.values[np.ix_(*([indices] * f.d))],
    )


def weighted_sum(f: LatticeField, a: float = 0.0, m: float = 0.0) -> float:
    """sum_x |x|^a e^{m x_1} f(x), with |0|^0 = 1."""
    if a < 0 or m < 0:
        raise PreconditionError("moment order and tilt must be nonnegative")
    weights = np.ones(f.geometry.shape)
    if a != 0:
        weights = weights * np.sqrt(f.norm_squared()) ** a
    if m != 0:
        weights = weights * np.exp(m * f.coordinates()[0])
    return float(np.sum(weights * f.values))


def axis_decay_fit(
    f: LatticeField,
    window: tuple[int, int],
    prefactor_power: float = 0.0,
) -> float:
    """
    Least-squares slope of -log f(n e1) against n over the window.

    `prefactor_power` removes a known n^{-power} prefactor before the fit;
    it is not itself fitted.
    """
    n_lo, n_hi = window
    if n_hi <= n_lo:
        raise PreconditionError(f"empty fit window {window}")
    if prefactor_power and n_lo < 1:
        raise PreconditionError("a prefactor correction needs n >= 1")
    steps = np.arange(n_lo, n_hi + 1)
    values = f.axis_values(steps)
    if np.any(values <= 0):
        raise PreconditionError("axis values must be positive on the fit window")
    response = -np.log(values)
    if prefactor_power:
        response = response - prefactor_power * np.log(steps)
    slope, _intercept = np.polyfit(steps.astype(float), response, 1)
    return float(slope)
