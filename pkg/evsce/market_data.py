"""Returns panels: ingestion, renormalisation, market-mode clearing, blocks, tails and spillover."""

import logging
import math
from dataclasses import dataclass, replace
from enum import StrEnum
from pathlib import Path

import numpy as np
import pandas as pd
import scipy.linalg
from scipy import stats

from .distributions import StudentRenormalised, draw
from .errors import DomainError, NumericalFailure, PriceError, ZeroVarianceColumn
from .rng import stream

logger = logging.getLogger(__name__)

POWER_TOL = 1e-12
POWER_MAX_STEPS = 100_000
GAP_TOL = 1e-10
MIN_TAIL_SAMPLES = 100
LOGLOG_FRACTION = 0.05


class Stage(StrEnum):
    RAW = "raw"
    RENORMALISED = "renormalised"
    CLEARED = "cleared"


class TailMethod(StrEnum):
    HILL = "hill"
    LOGLOG = "loglog"


class SpilloverKind(StrEnum):
    ELLIPTIC = "elliptic"
    INDEPENDENT = "independent"
    CORRELATED = "correlated"


@dataclass(frozen=True)
class ReturnsPanel:
    """T x S log-returns with ticker and timestamp labels."""

    values: np.ndarray
    tickers: list[str]
    timestamps: list[str]
    stage: Stage = Stage.RAW

    def __post_init__(self) -> None:
        T, S = self.values.shape
        if len(self.tickers) != S or len(self.timestamps) != T:
            raise DomainError(f"labels do not match the {T}x{S} panel")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("panel contains NaN or infinite values")

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=self.tickers, index=self.timestamps)
        frame.index.name = "timestamp"
        return frame

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, stage: Stage = Stage.RAW) -> "ReturnsPanel":
        return cls(
            values=frame.to_numpy(dtype=float),
            tickers=[str(c) for c in frame.columns],
            timestamps=[str(i) for i in frame.index],
            stage=stage,
        )


@dataclass(frozen=True)
class TailFit:
    exponent: float
    method: TailMethod
    k_used: int
    stderr: float

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "method": str(self.method), "k_used": self.k_used, "stderr": self.stderr}


# ----------------------------------------------------------------------
# ingestion
# ----------------------------------------------------------------------


def log_returns(open_, close, tickers=None, timestamps=None) -> ReturnsPanel:
    """ln(close/open) per cell; a missing (NaN) price on either side gives 0."""
    open_ = np.asarray(open_, dtype=float)
    close = np.asarray(close, dtype=float)
    if open_.shape != close.shape or open_.ndim != 2:
        raise DomainError(f"open and close must be matching matrices, got {open_.shape} and {close.shape}")
    present = ~(np.isnan(open_) | np.isnan(close))
    bad = present & ((open_ <= 0) | (close <= 0))
    if np.any(bad):
        raise PriceError([(int(r), int(c)) for r, c in zip(*np.nonzero(bad))])
    values = np.zeros_like(open_)
    values[present] = np.log(close[present] / open_[present])
    T, S = values.shape
    return ReturnsPanel(
        values=values,
        tickers=list(tickers) if tickers is not None else [f"s{j}" for j in range(S)],
        timestamps=list(timestamps) if timestamps is not None else [str(t) for t in range(T)],
    )


def _read_table(path: Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, na_values=[""])
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DomainError(f"cannot read {path}: {exc}") from exc


def _as_floats(frame: pd.DataFrame, path: Path) -> pd.DataFrame:
    try:
        return frame.astype(float)
    except ValueError as exc:
        raise DomainError(f"non-numeric value in {path}: {exc}") from exc


def read_wide_csv(path: Path, stage: Stage = Stage.RAW) -> ReturnsPanel:
    """Header ``timestamp,<ticker>...``; an empty cell is a missing interval and becomes 0."""
    table = _read_table(path)
    if table.shape[1] < 2:
        raise DomainError(f"{path} needs a timestamp column and at least one ticker")
    values = _as_floats(table.iloc[:, 1:], path).fillna(0.0)
    values.index = table.iloc[:, 0].astype(str)
    return ReturnsPanel.from_frame(values, stage)


def read_ohlc_csv(path: Path) -> ReturnsPanel:
    """Long ``timestamp,ticker,open,close`` rows pivoted to a wide panel of log-returns."""
    table = _read_table(path)
    missing = {"timestamp", "ticker", "open", "close"} - set(table.columns)
    if missing:
        raise DomainError(f"{path} is missing column(s): {', '.join(sorted(missing))}")
    table[["open", "close"]] = _as_floats(table[["open", "close"]], path)
    if table.duplicated(["timestamp", "ticker"]).any():
        raise DomainError(f"{path} has duplicate (timestamp, ticker) rows")
    wide = table.pivot(index="timestamp", columns="ticker", values=["open", "close"])
    return log_returns(
        wide["open"].to_numpy(dtype=float),
        wide["close"].to_numpy(dtype=float),
        tickers=[str(t) for t in wide["open"].columns],
        timestamps=[str(t) for t in wide.index],
    )


def write_panel_csv(panel: ReturnsPanel, path: Path) -> Path:
    panel.to_frame().to_csv(path, float_format="%.17g")
    return path


# ----------------------------------------------------------------------
# renormalisation and clearing
# ----------------------------------------------------------------------


def _constant_columns(values: np.ndarray) -> np.ndarray:
    return np.ptp(values, axis=0) == 0


def drop_constant_columns(panel: ReturnsPanel) -> ReturnsPanel:
    """Remove zero-variance tickers (e.g. a stock whose returns were all zero-filled)."""
    constant = _constant_columns(panel.values)
    if not np.any(constant):
        return panel
    dropped = [t for t, c in zip(panel.tickers, constant) if c]
    logger.warning("dropping %d zero-variance ticker(s): %s", len(dropped), ", ".join(dropped))
    return replace(
        panel,
        values=panel.values[:, ~constant],
        tickers=[t for t, c in zip(panel.tickers, constant) if not c],
    )


def _standardise(values: np.ndarray, tickers: list[str]) -> np.ndarray:
    if values.shape[0] < 2:
        raise DomainError("renormalising needs at least two rows")
    constant = _constant_columns(values)
    if np.any(constant):
        raise ZeroVarianceColumn([t for t, c in zip(tickers, constant) if c])
    centred = values - values.mean(axis=0)
    return centred / centred.std(axis=0, ddof=1)


def renormalise(panel: ReturnsPanel) -> ReturnsPanel:
    """Column-wise (x - mean) / std with the T-1 divisor."""
    return replace(panel, values=_standardise(panel.values, panel.tickers), stage=Stage.RENORMALISED)


def market_mode(panel: ReturnsPanel) -> tuple[np.ndarray, float]:
    """Unit top eigenvector of V^T V / T by power iteration, and its eigenvalue.

    The start vector is the normalised column sum of the Gram matrix; the sign
    is fixed so the entries sum to a nonnegative number.
    """
    V = panel.values
    T, S = V.shape
    G = V.T @ V / T
    if S == 1:
        return np.ones(1), float(G[0, 0])
    top2 = scipy.linalg.eigvalsh(G, subset_by_index=[S - 2, S - 1])
    if top2[1] <= 0 or (top2[1] - top2[0]) < GAP_TOL * top2[1]:
        raise NumericalFailure("top eigenvalue is degenerate, market mode is ambiguous", top=top2.tolist())
    v = G.sum(axis=0)
    norm = np.linalg.norm(v)
    v = v / norm if norm > 0 else np.ones(S) / math.sqrt(S)
    for step in range(1, POWER_MAX_STEPS + 1):
        w = G @ v
        w /= np.linalg.norm(w)
        moved = np.linalg.norm(w - v)
        v = w
        if moved < POWER_TOL:
            break
    else:
        raise NumericalFailure("power iteration did not converge", steps=POWER_MAX_STEPS, moved=float(moved))
    logger.debug("market mode converged after %d power steps", step)
    if v.sum() < 0:
        v = -v
    return v, float(v @ G @ v)


def project_market_mode(panel: ReturnsPanel) -> tuple[np.ndarray, np.ndarray]:
    """Rows with their component along the market mode removed, and the mode itself."""
    v, _ = market_mode(panel)
    V = panel.values
    return V - np.outer(V @ v, v), v


def clear_market_mode(panel: ReturnsPanel) -> ReturnsPanel:
    """Project out the market mode, then renormalise again."""
    if panel.stage is not Stage.RENORMALISED:
        raise DomainError(f"clearing needs a renormalised panel, got stage {panel.stage}")
    projected, _ = project_market_mode(panel)
    return replace(panel, values=_standardise(projected, panel.tickers), stage=Stage.CLEARED)


def split_blocks(panel: ReturnsPanel, k: int) -> list[ReturnsPanel]:
    """k contiguous blocks of floor(T/k) rows; the remainder at the end is dropped."""
    T, _ = panel.shape
    if not 1 <= k <= T:
        raise DomainError(f"block count must be in [1, {T}], got {k}")
    size = T // k
    return [
        replace(
            panel,
            values=panel.values[i * size : (i + 1) * size],
            timestamps=panel.timestamps[i * size : (i + 1) * size],
        )
        for i in range(k)
    ]


def row_volatility(panel: ReturnsPanel) -> np.ndarray:
    if panel.shape[1] < 2:
        raise DomainError("row volatility needs at least two tickers")
    return panel.values.std(axis=1, ddof=1)


# ----------------------------------------------------------------------
# tails and spillover
# ----------------------------------------------------------------------


def tail_exponent(values, method: TailMethod | str = TailMethod.HILL, k: int | None = None) -> TailFit:
    """Power-law tail exponent of positive data.

    Hill uses the top k order statistics (default ceil(sqrt(n))) with
    stderr alpha/sqrt(k).  LogLog regresses ln(survival) on ln(x) over the
    top 5% (or top k) points, with Hazen plotting positions (n - i + 0.5)/n.
    """
    method = TailMethod(method)
    x = np.sort(np.asarray(values, dtype=float).ravel())
    if x.size < MIN_TAIL_SAMPLES:
        raise DomainError(f"tail fit needs at least {MIN_TAIL_SAMPLES} values, got {x.size}")
    x = x[x > 0]
    n = x.size
    if k is None:
        k = math.ceil(math.sqrt(n)) if method is TailMethod.HILL else max(3, math.ceil(LOGLOG_FRACTION * n))
    if k < 2 or k >= n:
        raise DomainError(f"need 2 <= k < {n} positive values, got k={k}")
    if method is TailMethod.HILL:
        threshold = x[n - k - 1]
        alpha = k / float(np.sum(np.log(x[n - k :] / threshold)))
        return TailFit(exponent=alpha, method=method, k_used=k, stderr=alpha / math.sqrt(k))
    ranks = np.arange(n - k + 1, n + 1)
    survival = (n - ranks + 0.5) / n
    fit = stats.linregress(np.log(x[n - k :]), np.log(survival))
    return TailFit(exponent=-fit.slope, method=method, k_used=k, stderr=float(fit.stderr))


def spillover_pairs(panel: ReturnsPanel, ticker_a: str, ticker_b: str) -> np.ndarray:
    """The T paired returns of two tickers as a (T, 2) array."""
    index = {t: j for j, t in enumerate(panel.tickers)}
    for ticker in (ticker_a, ticker_b):
        if ticker not in index:
            raise DomainError(f"unknown ticker {ticker!r}")
    return np.column_stack([panel.values[:, index[ticker_a]], panel.values[:, index[ticker_b]]])


def joint_extreme_fraction(pairs, level: float = 3.0) -> float:
    """Fraction of pairs with both |coordinates| above ``level``."""
    pairs = np.asarray(pairs, dtype=float)
    if pairs.size == 0:
        return 0.0
    return float(np.mean(np.all(np.abs(pairs) > level, axis=1)))


def synthetic_spillover(kind: SpilloverKind | str, n: int, seed: int) -> np.ndarray:
    """Reference scatter clouds with Student(3) marginals.

    elliptic: a shared volatility times two independent Gaussians.
    independent: two independent Student(3) draws.
    correlated: (a1, (a1 + a2)/sqrt(2)) for independent Student(3) a1, a2.
    """
    kind = SpilloverKind(kind)
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    student = StudentRenormalised(3)
    a = draw(student, n, stream(seed, 0))
    match kind:
        case SpilloverKind.ELLIPTIC:
            xi = stream(seed, 1).standard_normal((n, 2))
            return a[:, None] * xi
        case SpilloverKind.INDEPENDENT:
            return np.column_stack([a, draw(student, n, stream(seed, 1))])
        case SpilloverKind.CORRELATED:
            b = draw(student, n, stream(seed, 1))
            return np.column_stack([a, (a + b) / math.sqrt(2.0)])


def log_abs_quantiles(panel: ReturnsPanel, probs=(0.0, 0.25, 0.5, 0.75, 1.0)) -> pd.DataFrame:
    """Per-ticker quantiles of ln|return| over the nonzero entries."""
    rows = {}
    for j, ticker in enumerate(panel.tickers):
        col = np.abs(panel.values[:, j])
        col = col[col > 0]
        rows[ticker] = np.quantile(np.log(col), probs) if col.size else np.full(len(probs), np.nan)
    frame = pd.DataFrame.from_dict(rows, orient="index", columns=[f"q{p:g}" for p in probs])
    frame.index.name = "ticker"
    return frame


def survival_curve(values) -> pd.DataFrame:
    """Empirical survival (n - i + 0.5)/n of the sorted values, for log-log tail plots."""
    x = np.sort(np.asarray(values, dtype=float).ravel())
    n = x.size
    return pd.DataFrame({"x": x, "survival": (n - np.arange(1, n + 1) + 0.5) / n})
