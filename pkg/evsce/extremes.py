"""Largest-eigenvalue statistics: a_T scaling, diagonal proxy, off-diagonal error, Fréchet band.

Normalisation bridge: the simulator's spectra are those of A = X^T X / T,
while the extreme-value limit rescales lambda_max(X^T X) by S * a_T.  Since
lambda_max(X^T X) = T * lambda_max(A), ``rescale_max_eig`` multiplies by the
spectrum's recorded normalisation before dividing by S * a_T.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable

import numpy as np
from scipy import optimize, stats

from .distributions import FrechetLaw, StudentRenormalised, draw, h3_tail
from .errors import DomainError, NumericalFailure
from .rng import stream
from .simulator import EVMConfig, EVMSample, Spectrum, gram_spectrum, run_replicas, symmetric_eigenvalues

logger = logging.getLogger(__name__)

OFFDIAG_CAP = 4096
MIN_BAND_SAMPLES = 50
KS_COEFFICIENT = 1.36
ROOT_RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class MaxEigSample:
    lambda_max: float
    rescaled: float
    diag_proxy: float
    offdiag_norm: float | None
    dims: tuple[int, int]


@dataclass(frozen=True)
class OffDiagonal:
    norm: float
    heuristic: float


@dataclass(frozen=True)
class FrechetBand:
    lower_shift: float = 0.64
    upper_shift: float = 0.16
    shape: float = 1.5

    def __post_init__(self) -> None:
        if not self.lower_shift > self.upper_shift >= 0:
            raise DomainError("band needs lower_shift > upper_shift >= 0")

    @property
    def law(self) -> FrechetLaw:
        return FrechetLaw(self.shape)


@dataclass(frozen=True)
class DecileCheck:
    x: float
    ecdf: float
    lower: float
    upper: float
    passed: bool


@dataclass(frozen=True)
class BandReport:
    n: int
    deciles: list[DecileCheck] = field(default_factory=list)
    ks_lower: float = 0.0
    ks_upper: float = 0.0
    tolerance: float = 0.0

    @property
    def passed(self) -> bool:
        return all(d.passed for d in self.deciles)

    def to_dict(self) -> dict[str, Any]:
        deciles = []
        for d in self.deciles:
            entry = asdict(d)
            entry["pass"] = entry.pop("passed")
            deciles.append(entry)
        return {"n": self.n, "deciles": deciles, "ks_lower": self.ks_lower, "ks_upper": self.ks_upper}


def solve_a_T(T: float, tail: Callable[[float], float] = h3_tail, order: float = 2.0 / 3.0) -> float:
    """Root of tail(a) = 1/T for a decreasing survival function ``tail`` of sigma^2.

    ``order`` is the expected growth exponent of a_T and only centres the
    initial bracket [T^order / 10, 10 T^order].
    """
    if not T >= 2:
        raise DomainError(f"T must be >= 2, got {T}")
    target = 1.0 / T

    def f(a: float) -> float:
        return float(tail(a)) - target

    guess = T**order
    lo, hi = guess / 10.0, guess * 10.0
    while f(lo) < 0:
        lo /= 10.0
    while f(hi) > 0:
        hi *= 10.0
    root = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(f(root)) > ROOT_RESIDUAL_TOL:
        raise NumericalFailure("a_T root fails the residual check", T=T, residual=abs(f(root)))
    return root


def rescale_max_eig(spectrum: Spectrum, a_T: float) -> float:
    """lambda_max(X^T X) / (S a_T) from a spectrum of X^T X / T."""
    if spectrum.eigenvalues.size == 0:
        raise DomainError("spectrum is empty")
    _, S = spectrum.dims
    return spectrum.lambda_max * spectrum.normalization / (S * a_T)


def diag_proxy(sample: EVMSample, a_T: float) -> float:
    """max_t sigma_t^2 ||z_t||^2 / (S a_T); row t of X already is sigma_t z_t."""
    _, S = sample.dims
    return float(np.max(np.sum(sample.X * sample.X, axis=1)) / (S * a_T))


def offdiag_heuristic(T: int, S: int, a_T: float) -> float:
    """Typical size (T/4) / (sqrt(S) a_T) of the off-diagonal error."""
    return (T / 4.0) / (math.sqrt(S) * a_T)


def offdiag_error(sample: EVMSample, a_T: float, cap: int = OFFDIAG_CAP) -> OffDiagonal:
    """Spectral norm of X X^T with its diagonal removed, divided by S a_T.

    Materialises the dense T x T matrix, so T above ``cap`` is refused.
    """
    T, S = sample.dims
    if T > cap:
        raise DomainError(f"off-diagonal diagnostic refuses T={T} > cap {cap}")
    H = sample.X @ sample.X.T
    H = 0.5 * (H + H.T)
    np.fill_diagonal(H, 0.0)
    values = symmetric_eigenvalues(H)
    norm = float(max(abs(values[0]), abs(values[-1])))
    return OffDiagonal(norm=norm / (S * a_T), heuristic=offdiag_heuristic(T, S, a_T))


def infinity_norm_bound_check(M) -> tuple[float, float]:
    """(max |eigenvalue|, max absolute row sum); the first never exceeds the second."""
    values = symmetric_eigenvalues(M)
    M = np.asarray(M, dtype=float)
    spectral = float(np.max(np.abs(values)))
    inf_norm = float(np.max(np.sum(np.abs(M), axis=1)))
    return spectral, inf_norm


def max_eig_sample(sample: EVMSample, a_T: float, cap: int = OFFDIAG_CAP) -> MaxEigSample:
    spectrum = gram_spectrum(sample)
    T, S = sample.dims
    offdiag = offdiag_error(sample, a_T, cap).norm if T <= cap else None
    return MaxEigSample(
        lambda_max=spectrum.lambda_max,
        rescaled=rescale_max_eig(spectrum, a_T),
        diag_proxy=diag_proxy(sample, a_T),
        offdiag_norm=offdiag,
        dims=(T, S),
    )


def batch_max_eig(
    config: EVMConfig, reps: int, a_T: float | None = None, cap: int = OFFDIAG_CAP
) -> list[MaxEigSample]:
    """One MaxEigSample per replica, in replica order."""
    if a_T is None:
        a_T = solve_a_T(config.T)
    if config.T > cap:
        logger.warning("skipping the off-diagonal diagnostic: T=%d exceeds the cap %d", config.T, cap)
    return run_replicas(config, reps, lambda _, sample: max_eig_sample(sample, a_T, cap))


def frechet_band_test(rescaled_maxima, band: FrechetBand = FrechetBand()) -> BandReport:
    """Check the empirical CDF at its own deciles against the shifted Fréchet band.

    ``tolerance`` is the 95% Kolmogorov-Smirnov half-width 1.36 / sqrt(n).
    """
    values = np.sort(np.asarray(rescaled_maxima, dtype=float).ravel())
    n = values.size
    if n < MIN_BAND_SAMPLES:
        raise DomainError(f"band test needs at least {MIN_BAND_SAMPLES} samples, got {n}")
    law = band.law
    tol = KS_COEFFICIENT / math.sqrt(n)
    checks = []
    for x in np.quantile(values, np.linspace(0.1, 0.9, 9)):
        ecdf = np.searchsorted(values, x, side="right") / n
        lower = float(law.cdf(x - band.lower_shift))
        upper = float(law.cdf(x - band.upper_shift))
        checks.append(
            DecileCheck(
                x=float(x),
                ecdf=float(ecdf),
                lower=lower,
                upper=upper,
                passed=bool(lower - tol <= ecdf <= upper + tol),
            )
        )
    ks_lower = stats.kstest(values, lambda x: law.cdf(np.asarray(x) - band.lower_shift)).statistic
    ks_upper = stats.kstest(values, lambda x: law.cdf(np.asarray(x) - band.upper_shift)).statistic
    return BandReport(n=n, deciles=checks, ks_lower=float(ks_lower), ks_upper=float(ks_upper), tolerance=tol)


def volatility_maxima(T: int, reps: int, seed: int) -> np.ndarray:
    """max_t sigma_t^2 / a_T for Student(3) volatility, one value per replica."""
    if reps < 1:
        raise DomainError(f"reps must be >= 1, got {reps}")
    a_T = solve_a_T(T)
    law = StudentRenormalised(3)
    maxima = np.empty(reps)
    for r in range(reps):
        sigma = draw(law, T, stream(seed, r, 0))
        maxima[r] = np.max(sigma * sigma) / a_T
    return maxima
