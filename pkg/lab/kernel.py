"""
The spread-out step distribution D(x) = 1{0 < |x|_inf <= L} / Omega and its
closed-form Fourier-side quantities.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from lab.constants import DIRICHLET_ZERO_TOLERANCE
from lab.exceptions import PreconditionError
from lab.fields import LatticeField, box_field


@dataclass(frozen=True)
class StepKernel:
    d: int
    L: int
    omega: int
    sigma2: float
    support: tuple[tuple[int, ...], ...] = field(repr=False)

    def weight(self, x) -> float:
        norm = max((abs(int(c)) for c in x), default=0)
        return 1.0 / self.omega if 0 < norm <= self.L else 0.0

    def as_field(self, radius: int | None = None) -> LatticeField:
        return box_field(radius or self.L, self.d, self.weight)


def make_kernel(d: int, L: int) -> StepKernel:
    if d < 1:
        raise PreconditionError(f"dimension must be >= 1, got {d}")
    if L < 1:
        raise PreconditionError(f"range must be >= 1, got {L}")

    side = 2 * L + 1
    omega = side**d - 1
    # sum_{x in [-L,L]^d} |x|^2 = d * side^(d-1) * sum_{j=-L}^{L} j^2
    sigma2 = d * side ** (d - 1) * (L * (L + 1) * side / 3) / omega
    support = tuple(
        x for x in itertools.product(range(-L, L + 1), repeat=d) if any(x)
    )
    return StepKernel(d=d, L=L, omega=omega, sigma2=sigma2, support=support)


def nearest_neighbour_weight(x) -> float:
    """P(x) = 1{|x| = 1} / 2d."""
    d = len(x)
    return 1.0 / (2 * d) if sum(abs(int(c)) for c in x) == 1 else 0.0


def nearest_neighbour_field(d: int, radius: int = 1) -> LatticeField:
    return box_field(radius, d, nearest_neighbour_weight)


def dirichlet_factor(L: int, k) -> np.ndarray:
    """sin((2L+1)k/2) / sin(k/2), equal to 2L+1 at k = 0."""
    k = np.asarray(k, dtype=float)
    denominator = np.sin(k / 2)
    near_zero = np.abs(k) < DIRICHLET_ZERO_TOLERANCE
    safe_denominator = np.where(near_zero, 1.0, denominator)
    ratio = np.sin((2 * L + 1) * k / 2) / safe_denominator
    return np.where(near_zero, 2 * L + 1, ratio)


def d_hat(kernel: StepKernel, k) -> np.ndarray | float:
    """
    D^(k) = sum_x D(x) e^{ik.x} for k in (-pi, pi]^d.

    `k` may be a single point of length d or an array whose last axis has length d.
    """
    k = np.asarray(k, dtype=float)
    if k.shape[-1] != kernel.d:
        raise PreconditionError(f"k must have last axis of length {kernel.d}")
    product = np.prod(dirichlet_factor(kernel.L, k), axis=-1)
    result = (product - 1.0) / kernel.omega
    return float(result) if np.ndim(result) == 0 else result


def sinh_ratio(L: int, m: float) -> float:
    """sinh(m(L+1/2)) / sinh(m/2), equal to 2L+1 at m = 0."""
    if abs(m) < DIRICHLET_ZERO_TOLERANCE:
        return float(2 * L + 1)
    return float(np.sinh(m * (L + 0.5)) / np.sinh(m / 2))


def tilted_mass_sum(kernel: StepKernel, m: float) -> float:
    """D^(m)(0) = sum_x D(x) e^{m x_1}."""
    if m < 0:
        raise PreconditionError(f"tilt must be >= 0, got {m}")
    side = 2 * kernel.L + 1
    return (side ** (kernel.d - 1) * sinh_ratio(kernel.L, m) - 1.0) / kernel.omega


def torus_frequencies(N: int) -> np.ndarray:
    """The N Fourier modes 2*pi*j/N of the period-N torus, in FFT order."""
    return 2 * np.pi * np.fft.fftfreq(N)


def grid_frequencies(grid_size: int) -> np.ndarray:
    """Uniform grid of (-pi, pi] with `grid_size` points."""
    half = grid_size // 2
    start = -half if grid_size % 2 else -half + 1
    return 2 * np.pi * np.arange(start, half + 1) / grid_size


def infrared_margin(kernel: StepKernel, grid_size: int) -> float:
    """
    Minimum over a uniform grid of (-pi, pi]^d minus the origin of
    (1 - D^(k)) / (L^2 |k|^2 ^ 1).
    """
    if grid_size < 4:
        raise PreconditionError(f"grid_size must be >= 4, got {grid_size}")

    axis = grid_frequencies(grid_size)
    dirichlet = dirichlet_factor(kernel.L, axis)
    product = np.ones((grid_size,) * kernel.d)
    norm_squared = np.zeros((grid_size,) * kernel.d)
    for j in range(kernel.d):
        shape = [1] * kernel.d
        shape[j] = grid_size
        product = product * dirichlet.reshape(shape)
        norm_squared = norm_squared + (axis**2).reshape(shape)

    symbol = 1.0 - (product - 1.0) / kernel.omega
    scale = np.minimum(kernel.L**2 * norm_squared, 1.0)
    away_from_origin = norm_squared > 0
    return float(np.min(symbol[away_from_origin] / scale[away_from_origin]))
