"""
Faxen-type profile integrals and finite-size-scaling window arithmetic.

I0(s) = int_0^inf exp(-t^4/4 + s t^2/2) dt and
Fi(alpha, beta; y) = int_0^inf exp(-t + y t^alpha) t^(beta-1) dt,
related by I0(s) = 2^(-3/2) Fi(1/2, 1/4; s).
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate, special

from lab.choices import ProfileMethod
from lab.constants import ASYMPTOTIC_AUDIT_BAND, ASYMPTOTIC_SWITCH, PROFILE_TAIL_LOG, SADDLE_SWITCH
from lab.exceptions import PreconditionError

QUAD_OPTIONS = {"epsabs": 1e-13, "epsrel": 1e-12, "limit": 500}

# Largest log value whose exponential is a finite double.
LOG_FLOAT_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class ProfileValue:
    s: float
    I0: float | None
    log_I0: float
    method: str
    est_error: float
    asymptotic_I0: float | None = None


def _from_log(log_value: float) -> float | None:
    return math.exp(log_value) if log_value < LOG_FLOAT_MAX else None


def I0_at_zero() -> float:
    """Gamma(1/4) / 4^(3/4), from u = t^4/4."""
    return float(special.gamma(0.25) / 4**0.75)


def asymptotic_log_I0(s: float) -> float:
    """
    Leading behaviour with its first correction:
    sqrt(pi/2) |s|^(-1/2) (1 - 3/(4s^2)) as s -> -inf and
    sqrt(pi) s^(-1/2) e^(s^2/4) (1 + 3/(4s^2)) as s -> +inf.
    """
    if s == 0:
        raise PreconditionError("the asymptotic forms need s != 0")
    if s < 0:
        return 0.5 * math.log(math.pi / 2) - 0.5 * math.log(-s) + math.log1p(-3 / (4 * s * s))
    return 0.5 * math.log(math.pi) - 0.5 * math.log(s) + s * s / 4 + math.log1p(3 / (4 * s * s))


def leading_log_I0(s: float) -> float:
    if s < 0:
        return 0.5 * math.log(math.pi / 2) - 0.5 * math.log(-s)
    return 0.5 * math.log(math.pi) - 0.5 * math.log(s) + s * s / 4


def asymptotic_ratio(s: float) -> float:
    """I0(s) divided by its leading asymptotic form."""
    return math.exp(faxen_I0(s).log_I0 - leading_log_I0(s))


def _direct_quadrature(s: float) -> tuple[float, float]:
    # Beyond t^2 = s + sqrt(s^2 + 4K) the integrand is below e^-K.
    upper = math.sqrt(s + math.sqrt(s * s + 4 * PROFILE_TAIL_LOG))

    def integrand(t):
        return math.exp(-(t**4) / 4 + s * t * t / 2)

    if s > 0:
        peak = math.sqrt(s)
        first, first_error = integrate.quad(integrand, 0, peak, **QUAD_OPTIONS)
        second, second_error = integrate.quad(integrand, peak, upper, **QUAD_OPTIONS)
        return first + second, first_error + second_error
    return integrate.quad(integrand, 0, upper, **QUAD_OPTIONS)


def _saddle_quadrature(s: float) -> tuple[float, float]:
    """log of sqrt(s) e^(s^2/4) int_0^inf exp(-s^2 (u^2-1)^2 / 4) du, with its relative error."""
    upper = math.sqrt(1 + 2 * math.sqrt(PROFILE_TAIL_LOG) / s)

    def integrand(u):
        return math.exp(-s * s * (u * u - 1) ** 2 / 4)

    first, first_error = integrate.quad(integrand, 0, 1, **QUAD_OPTIONS)
    second, second_error = integrate.quad(integrand, 1, upper, **QUAD_OPTIONS)
    scaled = first + second
    log_value = 0.5 * math.log(s) + s * s / 4 + math.log(scaled)
    return log_value, (first_error + second_error) / scaled


def faxen_I0(s: float) -> ProfileValue:
    """
    I0(s) by adaptive quadrature for |s| <= 50 (saddle-point scaling above s = 6)
    and by its asymptotic form beyond. Within 5 of the switch both are reported.
    """
    s = float(s)
    if not math.isfinite(s):
        raise PreconditionError(f"s must be finite, got {s}")

    if abs(s) > ASYMPTOTIC_SWITCH:
        log_value = asymptotic_log_I0(s)
        correction = 4 / s**4
        return ProfileValue(
            s=s,
            I0=_from_log(log_value),
            log_I0=log_value,
            method=ProfileMethod.ASYMPTOTIC,
            est_error=correction * (_from_log(log_value) or math.inf),
        )

    if s > SADDLE_SWITCH:
        log_value, relative_error = _saddle_quadrature(s)
        value = _from_log(log_value)
        method = ProfileMethod.SADDLE
        error = relative_error * value
    else:
        value, error = _direct_quadrature(s)
        log_value = math.log(value)
        method = ProfileMethod.QUADRATURE

    asymptotic = None
    if abs(s) >= ASYMPTOTIC_SWITCH - ASYMPTOTIC_AUDIT_BAND:
        asymptotic = _from_log(asymptotic_log_I0(s))
    return ProfileValue(
        s=s,
        I0=value,
        log_I0=log_value,
        method=method,
        est_error=error,
        asymptotic_I0=asymptotic,
    )


def profile_table(lo: float, hi: float, step: float) -> list[ProfileValue]:
    if step <= 0 or hi < lo:
        raise PreconditionError(f"invalid range {lo}:{hi}:{step}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [faxen_I0(lo + index * step) for index in range(count)]


def log_convexity_defect(table: list[ProfileValue]) -> float:
    """Smallest second difference of log I0 over an evenly spaced table."""
    logs = np.array([value.log_I0 for value in table])
    if len(logs) < 3:
        return 0.0
    return float(np.min(logs[2:] - 2 * logs[1:-1] + logs[:-2]))


def faxen_general(alpha: float, beta: float, y: float) -> float:
    """Fi(alpha, beta; y); an algebraic quadrature weight takes the t^(beta-1) singularity."""
    if not 0 <= alpha < 1:
        raise PreconditionError(f"alpha must lie in [0, 1), got {alpha}")
    if beta <= 0:
        raise PreconditionError(f"beta must be > 0, got {beta}")

    def exponential(t):
        return math.exp(-t + y * t**alpha)

    def integrand(t):
        return exponential(t) * t ** (beta - 1)

    head, _error = integrate.quad(
        exponential, 0, 1, weight="alg", wvar=(beta - 1, 0), **QUAD_OPTIONS
    )

    split = 1.0
    if y > 0 and alpha > 0:
        split = max(split, (alpha * y) ** (1 / (1 - alpha)))
    middle = 0.0
    if split > 1:
        middle, _error = integrate.quad(integrand, 1, split, **QUAD_OPTIONS)
    tail, _error = integrate.quad(integrand, split, np.inf, **QUAD_OPTIONS)
    return head + middle + tail


@dataclass(frozen=True)
class WindowPrediction:
    d: int
    period: int
    volume: int
    window_exponent: Fraction
    chi_exponent: Fraction
    plateau_exponent: Fraction
    window: float
    chi_scale: float
    plateau_scale: float
    matches_specialised: bool | None


SPECIALISED_EXPONENTS = {
    (Fraction(1, 2), Fraction(8)): (Fraction(-1, 2), Fraction(1, 4), Fraction(-3, 4)),
}


def window_prediction(
    d: int, period: int, gamma=Fraction(1, 2), dc=Fraction(8)
) -> WindowPrediction:
    """
    Window width V^(-2/(gamma dc)), susceptibility scale V^(2/dc) and plateau
    V^(2/dc - 1) for the torus of volume V = r^d above the critical dimension.
    """
    gamma, dc = Fraction(gamma), Fraction(dc)
    if gamma <= 0 or dc <= 0:
        raise PreconditionError("gamma and dc must be positive")
    if d <= dc:
        raise PreconditionError(f"d={d} must exceed the critical dimension {dc}")
    if period < 2:
        raise PreconditionError(f"period must be >= 2, got {period}")

    volume = period**d
    window_exponent = -2 / (gamma * dc)
    chi_exponent = 2 / dc
    plateau_exponent = 2 / dc - 1
    try:
        scale = float(volume)
        window = scale ** float(window_exponent)
        chi_scale = scale ** float(chi_exponent)
        plateau_scale = scale ** float(plateau_exponent)
    except OverflowError as error:
        raise PreconditionError(f"volume {period}^{d} does not fit in a float") from error

    specialised = SPECIALISED_EXPONENTS.get((gamma, dc))
    return WindowPrediction(
        d=d,
        period=period,
        volume=volume,
        window_exponent=window_exponent,
        chi_exponent=chi_exponent,
        plateau_exponent=plateau_exponent,
        window=window,
        chi_scale=chi_scale,
        plateau_scale=plateau_scale,
        matches_specialised=(
            None
            if specialised is None
            else specialised == (window_exponent, chi_exponent, plateau_exponent)
        ),
    )
