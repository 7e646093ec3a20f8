"""Limiting spectral density of the ensemble and the oracles that cross-check it.

Three independent evaluators of the Student(3) density are provided:

* ``closed_form_density`` -- the radical expression obtained by solving the
  quartic for the Stieltjes transform with Ferrari's method. It is evaluated
  in mpmath because the intermediates are O(1/x) while the density is
  O(x^-2.5), so double precision cancels away every digit at large x.
* ``quartic_root_oracle`` -- companion-matrix roots of the same quartic,
  filtered against the un-squared equation.
* ``stieltjes_inversion_density`` -- the fixed-point equation solved at
  z = x + i*eps for a decreasing eps schedule, extrapolated to eps -> 0.
  This one works for any volatility law.

``mp_density`` is the Marchenko-Pastur control curve.
"""

import logging
import math
from dataclasses import dataclass
from enum import StrEnum
from typing import Callable

import mpmath
import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate

from .distributions import (
    Constant,
    StudentRenormalised,
    VolatilityModel,
    second_moment,
    volatility_square_pdf,
)
from .errors import DomainError, NumericalFailure

logger = logging.getLogger(__name__)

EPS_SCHEDULE = (1e-2, 1e-3, 1e-4)
DAMPING = 0.5
MAX_ITERATIONS = 10_000
STEP_TOL = 1e-12
NEWTON_SWITCH = 1e-4
RESIDUAL_TOL = 1e-10
QUAD_EPSREL = 1e-10
ORACLE_RESIDUAL_TOL = 1e-6
RESOLVENT_TOL = 1e-9
CLAMP_TOL = 1e-9


class Method(StrEnum):
    CLOSED_FORM = "closed"
    QUARTIC_ORACLE = "quartic"
    STIELTJES_INVERSION = "stieltjes"
    MARCHENKO_PASTUR = "mp"


def _check_y(y: float) -> float:
    if not y > 0 or not math.isfinite(y):
        raise DomainError(f"aspect ratio y must be a positive finite number, got {y}")
    return float(y)


@dataclass(frozen=True)
class QuarticIntermediates:
    """Ferrari intermediates at (x, y); ``q`` is the resolvent's Cardano discriminant."""

    q: float
    w_star: float
    A: float
    B: float
    C: float
    R_plus: float
    R_minus: float


@dataclass(frozen=True)
class StieltjesPoint:
    z: complex
    s: complex
    residual: float = 0.0
    iterations: int = 0


@dataclass(frozen=True)
class DensityCurve:
    y: float
    xs: np.ndarray
    rhos: np.ndarray
    method: Method

    def __post_init__(self) -> None:
        if self.xs.shape != self.rhos.shape:
            raise DomainError("xs and rhos must have the same length")
        if np.any(self.rhos < 0):
            raise DomainError("density values must be nonnegative")


# ----------------------------------------------------------------------
# support
# ----------------------------------------------------------------------


def support_cubic(x: float, y: float) -> float:
    """G(x; y); positive strictly inside the support, zero at the edge."""
    return y**3 * (x - 1) ** 3 + 3 * y**2 * (x * x + 7 * x + 1) + 3 * y * (x - 1) + 1


def spectral_edge(y: float) -> float:
    """Left edge (cbrt(y) - 1)^3 / y of the support; positive for y > 1."""
    y = _check_y(y)
    return float((np.cbrt(y) - 1.0) ** 3 / y)


def tail_asymptote(y: float) -> float:
    """Constant c(y) with rho(x) ~ c(y) x^-2.5 as x -> infinity."""
    y = _check_y(y)
    return 2.0 / (math.pi * math.sqrt(y))


# ----------------------------------------------------------------------
# closed form
# ----------------------------------------------------------------------


def _real_cbrt(v):
    return mpmath.sign(v) * mpmath.cbrt(abs(v))


def _working_digits(x: float) -> int:
    return 30 + 6 * max(0, math.ceil(math.log10(x))) if x > 1 else 30


def _depressed_coefficients(x, y):
    """A, B, C of the depressed monic quartic t^4 + A t^2 + B t + C (mpmath)."""
    z = mpmath.mpf(x)
    y = mpmath.mpf(y)
    # -(y/z)^2 Q(s) = s^4 + b s^3 + c s^2 + d s + e
    p = (1 + y * z - y) / z
    r = y / z
    b = 2 * p - 4 * y
    c = p * p - 6 * r
    d = 2 * p * r - 4 * y / (z * z)
    e = r * r
    A = c - 3 * b**2 / 8
    B = d - b * c / 2 + b**3 / 8
    C = e - b * d / 4 + b**2 * c / 16 - 3 * b**4 / 256
    return A, B, C


def _resolvent(w, A, B, C):
    return 2 * w**3 - A * w**2 - 2 * C * w + A * C - B * B / 4


def _resolvent_root(A, B, C, x: float, y: float):
    # (2w - A)(w^2 - C) - B^2/4, halved and depressed with w = u + A/6
    p = -C - A * A / 12
    r = -(A**3) / 108 + A * C / 3 - B * B / 8
    q = (r / 2) ** 2 + (p / 3) ** 3
    scale = (r / 2) ** 2 + abs(p / 3) ** 3
    if q < 0:
        if -q > RESOLVENT_TOL * scale:
            raise NumericalFailure(
                "resolvent cubic has three real roots inside the support", x=x, y=y, q=float(q)
            )
        q = mpmath.mpf(0)
    root = mpmath.sqrt(q)
    w = _real_cbrt(-r / 2 + root) + _real_cbrt(-r / 2 - root) + A / 6
    for _ in range(2):
        slope = 6 * w * w - 2 * A * w - 2 * C
        if slope == 0:
            break
        w -= _resolvent(w, A, B, C) / slope
    terms = abs(2 * w**3) + abs(A * w * w) + abs(2 * C * w) + abs(A * C) + abs(B * B / 4)
    residual = abs(_resolvent(w, A, B, C)) / terms
    if residual > RESOLVENT_TOL:
        raise NumericalFailure(
            "resolvent root does not satisfy the cubic", x=x, y=y, residual=float(residual)
        )
    return q, w


def quartic_intermediates(x: float, y: float) -> QuarticIntermediates:
    """Intermediates of the closed form at (x, y); meaningful inside the support."""
    y = _check_y(y)
    if not x > 0:
        raise DomainError(f"x must be > 0, got {x}")
    with mpmath.workdps(_working_digits(x)):
        A, B, C = _depressed_coefficients(x, y)
        q, w = _resolvent_root(A, B, C, x, y)
        return QuarticIntermediates(
            q=float(q),
            w_star=float(w),
            A=float(A),
            B=float(B),
            C=float(C),
            R_plus=float(2 * w - A),
            R_minus=float(-2 * w - A),
        )


def closed_form_density(x: float, y: float) -> float:
    """Closed-form Student(3) density at x for y > 1; zero outside the support."""
    y = _check_y(y)
    if y <= 1:
        raise DomainError(f"the closed form needs y > 1, got {y}")
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    if support_cubic(x, y) <= 0:
        return 0.0
    with mpmath.workdps(_working_digits(x)):
        A, B, C = _depressed_coefficients(x, y)
        _, w = _resolvent_root(A, B, C, x, y)
        r_plus = 2 * w - A
        r_minus = -2 * w - A
        if r_plus <= 0:
            raise NumericalFailure("R+ is not positive inside the support", x=x, y=y, R_plus=float(r_plus))
        arg = -r_minus - 2 * B / mpmath.sqrt(r_plus)
        if arg < 0:
            if arg < -CLAMP_TOL:
                raise NumericalFailure("negative density radicand", x=x, y=y, radicand=float(arg))
            logger.warning("clamping density radicand %.3e to 0 at x=%r (near the edge)", float(arg), x)
            return 0.0
        return float(mpmath.sqrt(arg) / (2 * mpmath.pi))


# ----------------------------------------------------------------------
# quartic oracle
# ----------------------------------------------------------------------


def quartic_coefficients(x: float, y: float) -> np.ndarray:
    """Coefficients of Q(s) = 4s(sz+1)^2/y - (s - (s/y+1)(sz+1))^2 at z = x, highest power first."""
    s = Polynomial([0.0, 1.0])
    a = x * s + 1.0
    q = 4.0 * s * a * a / y - (s - (s / y + 1.0) * a) ** 2
    coef = np.zeros(5)
    coef[: len(q.coef)] = q.coef
    return coef[::-1]


def stieltjes_residual(s: complex, z: complex, y: float) -> float:
    """Un-squared residual |1/s + z - 1/(1+sqrt(s/y))^2| relative to max(1, |z|)."""
    value = 1.0 / s + z - 1.0 / (1.0 + np.sqrt(complex(s) / y)) ** 2
    return float(abs(value) / max(1.0, abs(z)))


def quartic_root_oracle(x: float, y: float) -> float:
    """Im(s)/pi of the unique qualifying root of Q in the upper half plane."""
    y = _check_y(y)
    if not x > 0:
        raise DomainError(f"x must be > 0, got {x}")
    coef = quartic_coefficients(x, y)
    deriv = np.polyder(coef)
    candidates = []
    for root in np.roots(coef):
        s = complex(root)
        for _ in range(3):
            slope = np.polyval(deriv, s)
            if slope == 0:
                break
            s -= np.polyval(coef, s) / slope
        if s.imag <= 1e-10 * max(1.0, abs(s)):
            continue
        if stieltjes_residual(s, x, y) <= ORACLE_RESIDUAL_TOL:
            candidates.append(s)
    if len(candidates) > 1:
        raise NumericalFailure(
            "more than one upper-half-plane root solves the Stieltjes equation",
            x=x,
            y=y,
            roots=[complex(c) for c in candidates],
        )
    if not candidates:
        return 0.0
    return candidates[0].imag / math.pi


# ----------------------------------------------------------------------
# Stieltjes inversion
# ----------------------------------------------------------------------


def mp_stieltjes(z: complex, y: float) -> complex:
    """Constant-volatility Stieltjes value: root of (z/y)s^2 + (1/y + z - 1)s + 1 with Im > 0."""
    y = _check_y(y)
    roots = np.roots([z / y, 1.0 / y + z - 1.0, 1.0])
    return complex(max(roots, key=lambda s: s.imag))


def _student3_kernel(y: float) -> tuple[Callable[[complex], complex], Callable[[complex], complex]]:
    def integral(s: complex) -> complex:
        return 1.0 / (1.0 + np.sqrt(s / y)) ** 2

    def derivative(s: complex) -> complex:
        u = np.sqrt(s / y)
        return -1.0 / (y * u * (1.0 + u) ** 3)

    return integral, derivative


def _constant_kernel(sigma0: float, y: float):
    v = sigma0 * sigma0

    def integral(s: complex) -> complex:
        return v / (1.0 + v * s / y)

    def derivative(s: complex) -> complex:
        return -v * v / (y * (1.0 + v * s / y) ** 2)

    return integral, derivative


def _complex_quad(f: Callable[[float], complex]) -> complex:
    """Integral over u in (0, 1) of a complex integrand, real and imaginary parts separately."""
    re, _ = integrate.quad(lambda u: f(u).real, 0.0, 1.0, epsrel=QUAD_EPSREL, epsabs=0.0, limit=200)
    im, _ = integrate.quad(lambda u: f(u).imag, 0.0, 1.0, epsrel=QUAD_EPSREL, epsabs=0.0, limit=200)
    return complex(re, im)


def _quadrature_kernel(model: VolatilityModel, y: float):
    # tau = u^2/(1-u) tames the tau^-1/2 singularity at 0 and the power tail
    def weight(u: float) -> tuple[float, float]:
        tau = u * u / (1.0 - u)
        jac = u * (2.0 - u) / (1.0 - u) ** 2
        if not (tau > 0 and math.isfinite(jac)):
            return tau, 0.0
        return tau, tau * float(volatility_square_pdf(model, tau)) * jac

    def integral(s: complex) -> complex:
        def f(u: float) -> complex:
            tau, w = weight(u)
            return 0.0 if w == 0.0 else w / (1.0 + tau * s / y)

        return _complex_quad(f)

    def derivative(s: complex) -> complex:
        def f(u: float) -> complex:
            tau, w = weight(u)
            return 0.0 if w == 0.0 else w * tau / (1.0 + tau * s / y) ** 2

        return -_complex_quad(f) / y

    return integral, derivative


def _kernel(model: VolatilityModel, y: float):
    match model:
        case StudentRenormalised(nu=3):
            return _student3_kernel(y)
        case Constant(sigma0=sigma0):
            return _constant_kernel(sigma0, y)
    return _quadrature_kernel(model, y)


def stieltjes_transform(
    z: complex,
    y: float,
    volatility: VolatilityModel = StudentRenormalised(3),
    *,
    start: complex | None = None,
) -> StieltjesPoint:
    """Solve 1/s + z = E[tau/(1 + tau s/y)] for s in the upper half plane.

    Damped fixed-point iteration from ``start`` (default: the constant
    volatility value), switching to Newton once steps drop below 1e-4.
    """
    y = _check_y(y)
    z = complex(z)
    if not z.imag > 0:
        raise DomainError(f"z must lie in the upper half plane, got {z}")
    integral, derivative = _kernel(volatility, y)
    s = mp_stieltjes(z, y) if start is None else complex(start)
    step = math.inf
    newton = False
    for iteration in range(1, MAX_ITERATIONS + 1):
        nxt = None
        if newton:
            g = 1.0 / s + z - integral(s)
            slope = -1.0 / (s * s) - derivative(s)
            if slope != 0:
                nxt = s - g / slope
            if nxt is None or not nxt.imag > 0:
                newton = False
                nxt = None
        if nxt is None:
            nxt = (1.0 - DAMPING) * s + DAMPING / (integral(s) - z)
        step = abs(nxt - s)
        s = nxt
        if step <= STEP_TOL * max(1.0, abs(s)):
            break
        if step < NEWTON_SWITCH:
            newton = True
    else:
        residual = abs(1.0 / s + z - integral(s)) / max(1.0, abs(z))
        raise NumericalFailure(
            "Stieltjes iteration did not converge", z=z, iterations=MAX_ITERATIONS, residual=residual, step=step
        )
    residual = abs(1.0 / s + z - integral(s)) / max(1.0, abs(z))
    if residual > RESIDUAL_TOL or not s.imag > 0:
        raise NumericalFailure("Stieltjes solution fails the residual check", z=z, s=s, residual=residual)
    logger.debug("stieltjes z=%r converged in %d iterations, residual %.2e", z, iteration, residual)
    return StieltjesPoint(z=z, s=s, residual=residual, iterations=iteration)


def stieltjes_inversion_density(
    x: float, y: float, volatility: VolatilityModel = StudentRenormalised(3)
) -> float:
    """Density from Im s(x + i eps)/pi over the eps schedule, extrapolated linearly to eps = 0."""
    y = _check_y(y)
    if not x > 0:
        raise DomainError(f"x must be > 0, got {x}")
    if abs(second_moment(volatility) - 1.0) > 1e-12:
        raise DomainError("Stieltjes inversion expects a volatility law with unit second moment")
    start = None
    values = []
    for eps in EPS_SCHEDULE:
        point = stieltjes_transform(complex(x, eps), y, volatility, start=start)
        start = point.s
        values.append(point.s.imag / math.pi)
    (e1, r1), (e2, r2) = zip(EPS_SCHEDULE[-2:], values[-2:])
    rho = (e1 * r2 - e2 * r1) / (e1 - e2)
    logger.debug("x=%r eps-extrapolation moved rho by %.2e", x, rho - r2)
    return max(rho, 0.0)


# ----------------------------------------------------------------------
# Marchenko-Pastur control
# ----------------------------------------------------------------------


def mp_density(x: float, ratio: float) -> float:
    """Absolutely continuous part of the Marchenko-Pastur law with unit variance."""
    if not ratio > 0:
        raise DomainError(f"ratio must be > 0, got {ratio}")
    lo = (1.0 - math.sqrt(ratio)) ** 2
    hi = (1.0 + math.sqrt(ratio)) ** 2
    if x <= 0 or x <= lo or x >= hi:
        return 0.0
    return math.sqrt((hi - x) * (x - lo)) / (2.0 * math.pi * ratio * x)


def mp_atom(ratio: float) -> float:
    """Point mass at zero of the Marchenko-Pastur law."""
    if not ratio > 0:
        raise DomainError(f"ratio must be > 0, got {ratio}")
    return max(0.0, 1.0 - 1.0 / ratio)


# ----------------------------------------------------------------------
# curves
# ----------------------------------------------------------------------


def _evaluator(method: Method, y: float, volatility: VolatilityModel) -> Callable[[float], float]:
    match method:
        case Method.CLOSED_FORM:
            if y <= 1:
                raise DomainError(f"the closed form needs y > 1, got {y}")
            return lambda x: closed_form_density(x, y)
        case Method.QUARTIC_ORACLE:
            return lambda x: quartic_root_oracle(x, y)
        case Method.STIELTJES_INVERSION:
            return lambda x: stieltjes_inversion_density(x, y, volatility)
        case Method.MARCHENKO_PASTUR:
            return lambda x: mp_density(x, 1.0 / y)
    raise DomainError(f"unknown method {method!r}")


def density_curve(
    y: float,
    grid,
    method: Method | str,
    volatility: VolatilityModel = StudentRenormalised(3),
) -> DensityCurve:
    """Evaluate ``method`` over ``grid``; the origin carries no continuous mass and maps to 0."""
    y = _check_y(y)
    method = Method(method)
    xs = np.asarray(grid, dtype=float).ravel()
    if xs.size == 0:
        raise DomainError("density grid must not be empty")
    if np.any(xs < 0) or np.any(np.diff(xs) <= 0):
        raise DomainError("density grid must be nonnegative and strictly increasing")
    evaluate = _evaluator(method, y, volatility)
    rhos = np.empty_like(xs)
    for i, x in enumerate(xs):
        if x == 0:
            rhos[i] = 0.0
            continue
        try:
            rhos[i] = evaluate(float(x))
        except NumericalFailure as exc:
            raise exc.with_detail(x=float(x)) from exc
    return DensityCurve(y=y, xs=xs, rhos=rhos, method=method)
