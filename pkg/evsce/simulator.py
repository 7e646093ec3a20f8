"""EVM generation, Gram spectra and reproducible replica batches."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence, TypeVar

import numpy as np
import pandas as pd
import scipy.integrate
import scipy.linalg

from .distributions import NoiseModel, VolatilityModel, draw
from .errors import DomainError, NumericalFailure
from .rng import stream
from .settings import DEFAULT_SEED, worker_count

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-12
CLAMP_TOL = 1e-9

R = TypeVar("R")


@dataclass(frozen=True)
class EVMConfig:
    """Everything that determines one draw of X = diag(sigma) Z."""

    T: int
    S: int
    volatility: VolatilityModel
    noise: NoiseModel = NoiseModel.GAUSSIAN
    seed: int = DEFAULT_SEED
    substream: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.T < 1 or self.S < 1:
            raise DomainError(f"dimensions must be >= 1, got T={self.T}, S={self.S}")

    @property
    def y_hat(self) -> float:
        return self.T / self.S

    def for_replica(self, index: int) -> "EVMConfig":
        return replace(self, substream=self.substream + (index,))


@dataclass(frozen=True)
class EVMSample:
    X: np.ndarray
    sigma: np.ndarray | None
    noise: np.ndarray | None = field(default=None, repr=False)

    @property
    def dims(self) -> tuple[int, int]:
        return self.X.shape


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues of X^T X / T."""

    eigenvalues: np.ndarray
    dims: tuple[int, int]
    normalization: float

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1]) if self.eigenvalues.size else 0.0


@dataclass(frozen=True)
class BatchSpectra:
    pooled: Spectrum
    maxima: np.ndarray


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    heights: np.ndarray
    counts: np.ndarray
    total: int
    below: int = 0
    above: int = 0

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def l1_distance(self, density: Callable[[float], float], breakpoints: Sequence[float] = ()) -> float:
        """Sum over bins of |height * width - mass of density in the bin|.

        ``breakpoints`` (support edges, kinks) are passed to ``quad`` for the bins containing them.
        """
        total = 0.0
        for lo, hi, height in zip(self.edges[:-1], self.edges[1:], self.heights):
            inner = [float(b) for b in breakpoints if lo < b < hi]
            mass, _ = scipy.integrate.quad(density, lo, hi, points=inner or None, limit=200)
            total += abs(height * (hi - lo) - mass)
        return total

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "bin_lo": self.edges[:-1],
                "bin_hi": self.edges[1:],
                "count": self.counts,
                "density": self.heights,
            }
        )


def generate_evm(config: EVMConfig) -> EVMSample:
    """Draw sigma from substream 0 and the noise matrix from substream 1."""
    sigma = draw(config.volatility, config.T, stream(config.seed, *config.substream, 0))
    noise = draw(config.noise, (config.T, config.S), stream(config.seed, *config.substream, 1))
    return EVMSample(X=sigma[:, None] * noise, sigma=sigma, noise=noise)


def symmetric_eigenvalues(M) -> np.ndarray:
    """All eigenvalues of a real symmetric matrix, ascending (LAPACK syevr)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {M.shape}")
    scale = max(float(np.max(np.abs(M))) if M.size else 0.0, np.finfo(float).tiny)
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym > SYMMETRY_TOL * scale:
        raise DomainError(f"matrix is not symmetric (max |M - M^T| = {asym:.3e})")
    try:
        return scipy.linalg.eigvalsh(M, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure("symmetric eigensolver failed", reason=str(exc)) from exc


def gram_eigenvalues(X) -> np.ndarray:
    """Eigenvalues of X^T X / T via the smaller Gram matrix, padded with zeros to length S."""
    X = np.asarray(X, dtype=float)
    T, S = X.shape
    small = X.T @ X if S <= T else X @ X.T
    small = 0.5 * (small + small.T) / T
    values = symmetric_eigenvalues(small)
    top = values[-1] if values.size else 0.0
    low = values[0] if values.size else 0.0
    if low < 0:
        if low < -CLAMP_TOL * max(top, 0.0):
            raise NumericalFailure("Gram matrix has a significantly negative eigenvalue", min=low, max=top)
        values = np.clip(values, 0.0, None)
    if S > T:
        values = np.concatenate([np.zeros(S - T), values])
    return values


def gram_spectrum(sample: EVMSample) -> Spectrum:
    T, S = sample.dims
    return Spectrum(eigenvalues=gram_eigenvalues(sample.X), dims=(T, S), normalization=float(T))


def run_replicas(config: EVMConfig, reps: int, work: Callable[[EVMConfig, EVMSample], R]) -> list[R]:
    """Apply ``work(replica_config, sample)`` to ``reps`` independent draws.

    Results come back in replica order whatever the thread schedule.
    """
    if reps < 1:
        raise DomainError(f"reps must be >= 1, got {reps}")

    def one(index: int) -> R:
        try:
            replica = config.for_replica(index)
            return work(replica, generate_evm(replica))
        except NumericalFailure as exc:
            raise exc.with_detail(replica=index) from exc

    workers = min(worker_count(), reps)
    logger.debug("running %d replicas of %dx%d on %d threads", reps, config.T, config.S, workers)
    if workers == 1:
        return [one(i) for i in range(reps)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(reps)))


def batch_spectra(config: EVMConfig, reps: int, *, shuffle: bool = False) -> BatchSpectra:
    """Pooled spectrum (sorted) plus the largest eigenvalue of each replica.

    With ``shuffle`` every replica is passed through ``shuffle_entries`` first.
    """

    def work(replica: EVMConfig, sample: EVMSample) -> Spectrum:
        if shuffle:
            sample = shuffle_entries(sample, replica.seed, *replica.substream)
        return gram_spectrum(sample)

    spectra = run_replicas(config, reps, work)
    pooled = np.sort(np.concatenate([s.eigenvalues for s in spectra]))
    return BatchSpectra(
        pooled=Spectrum(eigenvalues=pooled, dims=(config.T, config.S), normalization=float(config.T)),
        maxima=np.array([s.lambda_max for s in spectra]),
    )


def shuffle_entries(sample: EVMSample, seed: int, *indices: int) -> EVMSample:
    """Permute all T*S entries jointly; the volatility and noise are no longer meaningful.

    The permutation is drawn from substream 2 under ``indices``.
    """
    permuted = stream(seed, *indices, 2).permutation(sample.X.ravel())
    return EVMSample(X=permuted.reshape(sample.X.shape), sigma=None, noise=None)


def histogram(values, bins: int, value_range: tuple[float, float]) -> Histogram:
    """Density-scaled histogram: sum(height * width) is the fraction of values inside the window."""
    lo, hi = value_range
    if not lo < hi:
        raise DomainError(f"histogram range must satisfy lo < hi, got ({lo}, {hi})")
    if bins < 1:
        raise DomainError(f"bins must be >= 1, got {bins}")
    values = np.asarray(values, dtype=float).ravel()
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    total = int(values.size)
    heights = counts / (total * np.diff(edges)) if total else np.zeros(bins)
    return Histogram(
        edges=edges,
        heights=heights,
        counts=counts,
        total=total,
        below=int(np.sum(values < lo)),
        above=int(np.sum(values > hi)),
    )


def _noise_rows(sample: EVMSample) -> np.ndarray:
    if sample.noise is None:
        raise DomainError("sample carries no noise matrix (shuffled samples lose it)")
    return sample.noise


def noise_row_concentration(sample: EVMSample) -> float:
    """max_t | ||z_t||^2 / S - 1 |."""
    Z = _noise_rows(sample)
    return float(np.max(np.abs(np.sum(Z * Z, axis=1) / Z.shape[1] - 1.0)))


def cross_product_statistic(sample: EVMSample, eps: float) -> float:
    """max over t != u of |<z_t, z_u>| / S^(1/2 + eps)."""
    Z = _noise_rows(sample)
    if Z.shape[0] < 2:
        return 0.0
    G = Z @ Z.T
    np.fill_diagonal(G, 0.0)
    return float(np.max(np.abs(G)) / Z.shape[1] ** (0.5 + eps))
