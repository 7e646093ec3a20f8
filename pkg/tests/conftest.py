"""Shared pytest fixtures."""

from pathlib import Path

import numpy as np
import pytest

from evsce.distributions import StudentRenormalised
from evsce.simulator import EVMConfig


def pareto_grid(alpha: float, n: int) -> np.ndarray:
    """Exact Pareto(alpha) quantiles at p_i = (i - 0.5)/n."""
    p = (np.arange(1, n + 1) - 0.5) / n
    return (1.0 - p) ** (-1.0 / alpha)


@pytest.fixture
def single_thread(monkeypatch):
    monkeypatch.setenv("EVM_THREADS", "1")


@pytest.fixture
def small_config() -> EVMConfig:
    return EVMConfig(T=12, S=8, volatility=StudentRenormalised(3), seed=7)


@pytest.fixture
def market_values() -> np.ndarray:
    """200 x 20 returns with a strong common factor."""
    rng = np.random.default_rng(11)
    factor = rng.standard_normal(200)
    beta = 1.0 + 0.2 * rng.standard_normal(20)
    return np.outer(factor, beta) + 0.5 * rng.standard_normal((200, 20))


@pytest.fixture
def wide_csv(tmp_path: Path) -> Path:
    """Wide returns file with one missing cell and one constant ticker."""
    rng = np.random.default_rng(3)
    values = rng.standard_normal((40, 3))
    lines = ["timestamp,AAA,BBB,FLAT"]
    for t, row in enumerate(values):
        a = "" if t == 5 else f"{row[0]:.17g}"
        lines.append(f"2024-01-{t + 1:02d}T09:30,{a},{row[1]:.17g},0")
    path = tmp_path / "returns.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def ohlc_csv(tmp_path: Path) -> Path:
    path = tmp_path / "ohlc.csv"
    path.write_text(
        "timestamp,ticker,open,close\n"
        "t1,AAA,10,11\n"
        "t1,BBB,20,20\n"
        "t2,AAA,11,10\n"
        "t2,BBB,20,22\n"
        "t3,AAA,10,10.5\n"
    )
    return path


@pytest.fixture
def pareto_csv(tmp_path: Path) -> Path:
    path = tmp_path / "pareto.csv"
    values = pareto_grid(3.0, 10_000)
    path.write_text("value\n" + "\n".join(f"{v:.17g}" for v in values) + "\n")
    return path
