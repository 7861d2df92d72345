"""
Random-walk two-point functions, their masses, and the decomposition of the
spread-out walk Green function around the nearest-neighbour one.

S_z solves (delta - zD) * S_z = delta and C_mu solves (delta - mu P) * C_mu = delta,
with P the nearest-neighbour step distribution.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from lab.choices import MassMethod, WalkKind
from lab.constants import (
    DEFAULT_MIN_GREEN_GRID,
    GREEN_GRID_DECAY_LENGTHS,
    MIN_GREEN_GRID,
    ROOT_BRACKET_LOWER,
)
from lab.exceptions import PreconditionError
from lab.fields import Box, LatticeField, Torus, axis_decay_fit, delta, weighted_sum
from lab.kernel import (
    StepKernel,
    dirichlet_factor,
    nearest_neighbour_field,
    tilted_mass_sum,
    torus_frequencies,
)
from polylab.utils import get_polylab_logger

logger = get_polylab_logger(__name__)


@dataclass(frozen=True)
class MassResult:
    m: float
    method: str
    residual: float

    @property
    def xi(self) -> float:
        return math.inf if self.m == 0 else 1.0 / self.m


@dataclass(frozen=True)
class DecompositionParams:
    lambda_z: float
    mu_z: float
    E_z: LatticeField
    moment0: float
    moment2: float


@dataclass(frozen=True)
class MassChiRow:
    z: float
    mass: float
    chi: float
    ratio: float


@dataclass(frozen=True)
class DecayFitReport:
    z: float
    mass: float
    slope: float
    ratio: float
    window: tuple[int, int]
    grid_size: int
    prefactor_power: float


def nn_mass(mu: float, d: int) -> MassResult:
    """Mass of C_mu: cosh m_0 = 1 + d(1 - mu)/mu."""
    if not 0 < mu <= 1:
        raise PreconditionError(f"activity mu must lie in (0, 1], got {mu}")
    if d < 1:
        raise PreconditionError(f"dimension must be >= 1, got {d}")
    return MassResult(
        m=math.acosh(1 + d * (1 - mu) / mu),
        method=MassMethod.CLOSED_FORM,
        residual=0.0,
    )


def so_mass(kernel: StepKernel, z: float) -> MassResult:
    """Mass of S_z: the unique m > 0 with z * D^(m)(0) = 1."""
    if not 0 < z < 1:
        raise PreconditionError(f"activity z must lie in (0, 1), got {z}")

    def mass_equation(m: float) -> float:
        return z * tilted_mass_sum(kernel, m) - 1.0

    upper = 1.0
    while mass_equation(upper) <= 0:
        upper *= 2
    m = optimize.brentq(
        mass_equation,
        ROOT_BRACKET_LOWER,
        upper,
        xtol=1e-15,
        rtol=4 * np.finfo(float).eps,
        maxiter=200,
    )
    return MassResult(m=m, method=MassMethod.ROOT_FIND, residual=abs(mass_equation(m)))


def default_grid_size(mass: float) -> int:
    """Smallest power of two >= max(64, 40/m); keeps the wrap error below ~1e-8."""
    target = max(DEFAULT_MIN_GREEN_GRID, math.ceil(GREEN_GRID_DECAY_LENGTHS / mass))
    return 1 << (target - 1).bit_length()


def _check_walk_arguments(z: float, grid_size: int):
    if not 0 <= z < 1:
        raise PreconditionError(f"activity must lie in [0, 1), got {z}")
    if grid_size % 2 or grid_size < MIN_GREEN_GRID:
        raise PreconditionError(f"grid size must be even and >= {MIN_GREEN_GRID}, got {grid_size}")


def walk_symbol(kernel: StepKernel, kind: str, grid_size: int) -> np.ndarray:
    """Fourier symbol of D (spread-out) or P (nearest-neighbour) on the period-N grid."""
    frequencies = torus_frequencies(grid_size)
    shape_of = [
        tuple(grid_size if axis == j else 1 for axis in range(kernel.d))
        for j in range(kernel.d)
    ]
    if kind == WalkKind.SPREAD_OUT:
        dirichlet = dirichlet_factor(kernel.L, frequencies)
        product = np.ones((grid_size,) * kernel.d)
        for shape in shape_of:
            product = product * dirichlet.reshape(shape)
        return (product - 1.0) / kernel.omega
    if kind == WalkKind.NEAREST_NEIGHBOUR:
        cosines = np.cos(frequencies)
        total = np.zeros((grid_size,) * kernel.d)
        for shape in shape_of:
            total = total + cosines.reshape(shape)
        return total / kernel.d
    raise PreconditionError(f"unknown walk kind {kind!r}")


def green_field(
    kernel: StepKernel,
    z: float,
    grid_size: int,
    kind: str = WalkKind.SPREAD_OUT,
) -> LatticeField:
    """
    Period-N torus field (1/N^d) sum_k e^{-ik.x} / (1 - z W^(k)), W = D or P.

    This is exactly sum_u S_z(x + Nu), so on the fundamental domain it matches the
    Z^d function up to a relative wrap error of order e^{-m N/2}. For the
    nearest-neighbour kind only kernel.d is used.
    """
    _check_walk_arguments(z, grid_size)
    denominator = 1.0 - z * walk_symbol(kernel, kind, grid_size)
    if np.any(denominator <= 0):
        raise PreconditionError(f"1 - z W^(k) vanishes on the grid at z={z}")
    values = np.fft.ifftn(1.0 / denominator).real
    return LatticeField(geometry=Torus(period=grid_size, d=kernel.d), values=values)


def green_axis(
    kernel: StepKernel,
    z: float,
    grid_size: int,
    kind: str = WalkKind.SPREAD_OUT,
) -> LatticeField:
    """
    The same torus Green function restricted to the e1 axis, as a 1-d torus field.

    Averages over the transverse modes one k1 slice at a time, so memory stays at
    N^(d-1) while the result equals the e1 slice of green_field.
    """
    _check_walk_arguments(z, grid_size)
    frequencies = torus_frequencies(grid_size)
    transverse_shape = (grid_size,) * (kernel.d - 1)

    if kind == WalkKind.SPREAD_OUT:
        dirichlet = dirichlet_factor(kernel.L, frequencies)
        transverse = np.ones(transverse_shape)
        for j in range(kernel.d - 1):
            shape = tuple(grid_size if axis == j else 1 for axis in range(kernel.d - 1))
            transverse = transverse * dirichlet.reshape(shape)
        transverse = transverse.ravel()

        def slice_symbol(index: int) -> np.ndarray:
            return (dirichlet[index] * transverse - 1.0) / kernel.omega

    elif kind == WalkKind.NEAREST_NEIGHBOUR:
        cosines = np.cos(frequencies)
        transverse = np.zeros(transverse_shape)
        for j in range(kernel.d - 1):
            shape = tuple(grid_size if axis == j else 1 for axis in range(kernel.d - 1))
            transverse = transverse + cosines.reshape(shape)
        transverse = transverse.ravel()

        def slice_symbol(index: int) -> np.ndarray:
            return (cosines[index] + transverse) / kernel.d

    else:
        raise PreconditionError(f"unknown walk kind {kind!r}")

    slice_means = np.empty(grid_size)
    for index in range(grid_size):
        denominator = 1.0 - z * slice_symbol(index)
        if np.any(denominator <= 0):
            raise PreconditionError(f"1 - z W^(k) vanishes on the grid at z={z}")
        slice_means[index] = np.mean(1.0 / denominator)

    values = np.fft.ifft(slice_means).real
    return LatticeField(geometry=Torus(period=grid_size, d=1), values=values)


def _decomposition_constants(kernel: StepKernel, z: float) -> tuple[float, float]:
    denominator = (1 - z) + z * kernel.sigma2
    return 1.0 / denominator, z * kernel.sigma2 / denominator


def decomposition_params(kernel: StepKernel, z: float) -> DecompositionParams:
    """
    lambda_z, mu_z and E_z = (delta - mu_z P) - lambda_z (delta - zD), chosen so
    that E_z has vanishing zeroth and second moments.
    """
    if not 0 <= z <= 1:
        raise PreconditionError(f"activity z must lie in [0, 1], got {z}")

    lambda_z, mu_z = _decomposition_constants(kernel, z)
    geometry = Box(radius=kernel.L, d=kernel.d)
    identity = delta(geometry).values
    nearest = nearest_neighbour_field(kernel.d, radius=kernel.L).values
    spread = kernel.as_field().values

    E_z = LatticeField(
        geometry=geometry,
        values=(identity - mu_z * nearest) - lambda_z * (identity - z * spread),
    )
    return DecompositionParams(
        lambda_z=lambda_z,
        mu_z=mu_z,
        E_z=E_z,
        moment0=weighted_sum(E_z),
        moment2=weighted_sum(E_z, a=2),
    )


def phi_remainder(kernel: StepKernel, z: float, grid_size: int) -> tuple[LatticeField, float]:
    """
    phi_z = S_z - delta - z lambda_z C_{mu_z}, and sup over |x| <= N/4 of
    max(|x|, 1)^(d-2) |phi_z(x)|.
    """
    lambda_z, mu_z = _decomposition_constants(kernel, z)
    walk = green_field(kernel, z, grid_size)
    comparison = green_field(kernel, mu_z, grid_size, kind=WalkKind.NEAREST_NEIGHBOUR)
    values = walk.values - delta(walk.geometry).values - z * lambda_z * comparison.values
    phi = LatticeField(geometry=walk.geometry, values=values)

    norm = np.sqrt(phi.norm_squared())
    inside = norm <= grid_size / 4
    weights = np.maximum(norm, 1.0) ** (kernel.d - 2)
    sup_stat = float(np.max(weights[inside] * np.abs(values[inside])))

    logger.info(
        "[Phi Remainder] Computed remainder",
        d=kernel.d,
        L=kernel.L,
        z=z,
        grid_size=grid_size,
        sup_stat=sup_stat,
    )
    return phi, sup_stat


def verify_mass_chi_product(kernel: StepKernel, z_values) -> list[MassChiRow]:
    """Rows (z, m_S, chi_S, m_S^2 chi_S sigma^2 / 2d); the ratio tends to 1 as z -> 1."""
    rows = []
    for z in z_values:
        mass = so_mass(kernel, z).m
        chi = 1.0 / (1.0 - z)
        rows.append(
            MassChiRow(
                z=z,
                mass=mass,
                chi=chi,
                ratio=mass**2 * chi * kernel.sigma2 / (2 * kernel.d),
            )
        )
    return rows


def verify_decay_bound(
    kernel: StepKernel,
    z: float,
    grid_size: int | None = None,
    kind: str = WalkKind.SPREAD_OUT,
) -> DecayFitReport:
    """
    Fit the decay rate of S_z (or C_z for the nearest-neighbour kind) along e1 and
    compare it with its mass.

    The window ends where S_z has dropped by about e^-20 and starts at half that
    distance; the known Ornstein-Zernike prefactor n^{-(d-1)/2} is removed before
    the straight-line fit.
    """
    if kind == WalkKind.NEAREST_NEIGHBOUR:
        mass = nn_mass(z, kernel.d).m
    else:
        mass = so_mass(kernel, z).m
    decay_length = 1.0 / mass
    n_hi = max(4, math.floor(20 * decay_length))
    guard = math.ceil(15 * decay_length)

    if grid_size is None:
        target = max(default_grid_size(mass), 2 * (n_hi + guard))
        grid_size = 1 << (target - 1).bit_length()
    else:
        n_hi = min(n_hi, grid_size // 2 - guard)
    n_lo = max(1, n_hi // 2)
    if n_hi - n_lo < 2:
        raise PreconditionError(
            f"grid size {grid_size} is too small to fit a decay rate at z={z}"
        )

    prefactor_power = (kernel.d - 1) / 2
    axis = green_axis(kernel, z, grid_size, kind=kind)
    slope = axis_decay_fit(axis, (n_lo, n_hi), prefactor_power=prefactor_power)

    logger.info(
        "[Decay Fit] Fitted axis decay",
        d=kernel.d,
        L=kernel.L,
        z=z,
        kind=kind,
        grid_size=grid_size,
        window=(n_lo, n_hi),
        slope=slope,
        mass=mass,
    )
    return DecayFitReport(
        z=z,
        mass=mass,
        slope=slope,
        ratio=slope / mass,
        window=(n_lo, n_hi),
        grid_size=grid_size,
        prefactor_power=prefactor_power,
    )
