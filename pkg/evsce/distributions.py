"""Probability laws: renormalised Student volatility, its square, noise laws and Fréchet.

Densities and CDFs accept scalars or numpy arrays and return the same shape
(plain ``float`` for scalar input).
"""

import math
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import ArrayLike
from scipy import special, stats

from .errors import DomainError
from .rng import stream

FloatOrArray = float | np.ndarray


@dataclass(frozen=True)
class StudentRenormalised:
    """Student(ν) divided by sqrt(ν/(ν-2)), so that the variance is one."""

    nu: float

    def __post_init__(self) -> None:
        if not self.nu > 2:
            raise DomainError(f"Student volatility needs nu > 2, got {self.nu}")


@dataclass(frozen=True)
class Constant:
    sigma0: float

    def __post_init__(self) -> None:
        if not self.sigma0 >= 0:
            raise DomainError(f"constant volatility must be >= 0, got {self.sigma0}")


@dataclass(frozen=True)
class StandardNormal:
    pass


VolatilityModel = StudentRenormalised | Constant | StandardNormal


class NoiseModel(StrEnum):
    """Mean 0, variance 1 noise laws with all moments finite."""

    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    UNIFORM = "uniform"


def _out(values: np.ndarray) -> FloatOrArray:
    return values.item() if values.ndim == 0 else values


def _positive(values: ArrayLike, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"{name} must be > 0")
    return arr


def _student_constant(nu: float) -> float:
    if not nu > 2:
        raise DomainError(f"renormalised Student needs nu > 2, got {nu}")
    log_c = special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2)
    return math.exp(log_c) / math.sqrt((nu - 2) * math.pi)


def student_renorm_pdf(nu: float, t: ArrayLike) -> FloatOrArray:
    """Density of the renormalised Student(ν) law."""
    c = _student_constant(nu)
    t = np.asarray(t, dtype=float)
    return _out(c * (1.0 + t * t / (nu - 2)) ** (-(nu + 1) / 2))


def h_nu_pdf(nu: float, tau: ArrayLike) -> FloatOrArray:
    """Density of σ² for σ ~ renormalised Student(ν)."""
    c = _student_constant(nu)
    tau = _positive(tau, "tau")
    return _out(c * (1.0 + tau / (nu - 2)) ** (-(nu + 1) / 2) / np.sqrt(tau))


_TAIL_K = np.arange(1, 12)
_TAIL_COEFFS = (-1.0) ** (_TAIL_K + 1) * 2 * _TAIL_K / (2 * _TAIL_K + 1)


def h3_tail(tau: ArrayLike) -> FloatOrArray:
    """P(σ² > τ) for renormalised Student(3): (2/π)(arctan(1/√τ) − √τ/(1+τ))."""
    tau = _positive(tau, "tau")
    u = 1.0 / np.sqrt(tau)
    direct = np.arctan(u) - u / (1.0 + u * u)
    # the two terms agree to O(u^3) for large tau; sum the alternating series there
    small = np.minimum(u, 0.1)[..., None]
    series = np.sum(_TAIL_COEFFS * small ** (2 * _TAIL_K + 1), axis=-1)
    return _out(2.0 / math.pi * np.where(u < 0.1, series, direct))


def volatility_square_pdf(model: VolatilityModel, tau: ArrayLike) -> FloatOrArray:
    """Density of σ² under ``model``; Constant has no density."""
    match model:
        case StudentRenormalised(nu=nu):
            return h_nu_pdf(nu, tau)
        case StandardNormal():
            return _out(stats.chi2.pdf(_positive(tau, "tau"), df=1))
        case Constant():
            raise DomainError("constant volatility has a point mass, not a density")
    raise DomainError(f"unknown volatility model {model!r}")


def second_moment(model: VolatilityModel) -> float:
    if isinstance(model, Constant):
        return model.sigma0**2
    return 1.0


def draw(model: VolatilityModel | NoiseModel, size: int | tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    """Draw from ``model`` with an explicit generator."""
    match model:
        case StudentRenormalised(nu=nu):
            # numpy's standard_t is the normal / sqrt(chi2(nu)/nu) ratio
            return rng.standard_t(nu, size=size) * math.sqrt((nu - 2) / nu)
        case Constant(sigma0=sigma0):
            return np.full(size, float(sigma0))
        case StandardNormal():
            return rng.standard_normal(size)
        case NoiseModel.GAUSSIAN:
            return rng.standard_normal(size)
        case NoiseModel.RADEMACHER:
            return rng.integers(0, 2, size=size).astype(float) * 2.0 - 1.0
        case NoiseModel.UNIFORM:
            bound = math.sqrt(3.0)
            return rng.uniform(-bound, bound, size=size)
    raise DomainError(f"unknown model {model!r}")


def sample(model: VolatilityModel | NoiseModel, count: int, seed: int, *indices: int) -> np.ndarray:
    """``count`` draws from ``model`` on the substream ``(seed, *indices)``."""
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    return draw(model, count, stream(seed, *indices))


@dataclass(frozen=True)
class FrechetLaw:
    """Fréchet law with CDF exp(-x^(-shape)) on x > 0."""

    shape: float

    def __post_init__(self) -> None:
        if not self.shape > 0:
            raise DomainError(f"Fréchet shape must be > 0, got {self.shape}")

    @property
    def _dist(self):
        return stats.invweibull(self.shape)

    def cdf(self, x: ArrayLike) -> FloatOrArray:
        return _out(np.asarray(self._dist.cdf(np.asarray(x, dtype=float))))

    def pdf(self, x: ArrayLike) -> FloatOrArray:
        return _out(np.asarray(self._dist.pdf(np.asarray(x, dtype=float))))

    def sample(self, count: int, seed: int, *indices: int) -> np.ndarray:
        if count < 1:
            raise DomainError(f"count must be >= 1, got {count}")
        return self._dist.rvs(size=count, random_state=stream(seed, *indices))


def frechet_cdf(law: FrechetLaw, x: ArrayLike) -> FloatOrArray:
    return law.cdf(x)


def parse_volatility(text: str) -> VolatilityModel:
    """``student3``, ``student:<nu>``, ``constant:<sigma0>`` or ``normal``."""
    name, _, arg = text.strip().lower().partition(":")
    try:
        match name:
            case "student3" if not arg:
                return StudentRenormalised(3)
            case "student" if arg:
                return StudentRenormalised(float(arg))
            case "constant" if arg:
                return Constant(float(arg))
            case "normal" if not arg:
                return StandardNormal()
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"bad volatility parameter in {text!r}") from exc
    raise DomainError(f"unknown volatility {text!r}; use student3, student:<nu>, constant:<sigma0> or normal")


def parse_noise(text: str) -> NoiseModel:
    try:
        return NoiseModel(text.strip().lower())
    except ValueError as exc:
        choices = ", ".join(m.value for m in NoiseModel)
        raise DomainError(f"unknown noise {text!r}; use one of {choices}") from exc


def describe(model: VolatilityModel) -> str:
    """Inverse of ``parse_volatility``."""
    match model:
        case StudentRenormalised(nu=nu):
            return "student3" if nu == 3 else f"student:{nu:g}"
        case Constant(sigma0=sigma0):
            return f"constant:{sigma0:g}"
    return "normal"
