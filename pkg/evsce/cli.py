"""CLI interface for evsce."""

from pathlib import Path
from typing import Annotated, Literal, Optional

import cyclopts
from cyclopts import Parameter
from cyclopts.exceptions import CycloptsError

from .commands import density as density_cmd
from .commands import ingest as ingest_cmd
from .commands import maxeig as maxeig_cmd
from .commands import simulate as simulate_cmd
from .commands import tail as tail_cmd
from .errors import DomainError, NumericalFailure
from .settings import DEFAULT_SEED, configure_logging, console, err_console

app = cyclopts.App(
    name="evsce",
    help="Elliptic Volatility Sample Covariance Ensemble: limiting densities, simulation, "
    "largest-eigenvalue statistics and returns-panel preparation.",
)

Verbose = Annotated[bool, Parameter(name=["--verbose", "-v"], help="Log solver progress to standard error.")]


@app.command
def density(
    *,
    y: float,
    xmin: float = 0.0,
    xmax: float = 10.0,
    points: int = 200,
    method: Literal["closed", "quartic", "stieltjes", "mp"] = "closed",
    nu: float = 3.0,
    out: Path = Path("density.csv"),
    verbose: Verbose = False,
) -> None:
    """Evaluate the limiting spectral density on an even grid and write x,rho,method,y CSV.

    closed and quartic need Student(3) volatility (closed also needs y > 1);
    stieltjes works for any --nu > 2 and is the only method that takes --nu;
    mp is the Marchenko-Pastur control.
    """
    configure_logging(verbose)
    console.print(density_cmd.run_density(y, xmin, xmax, points, method, nu, out))


@app.command
def simulate(
    *,
    rows: int,
    cols: int,
    vol: str = "student3",
    noise: Literal["gaussian", "rademacher", "uniform"] = "gaussian",
    reps: int = 1,
    seed: int = DEFAULT_SEED,
    bins: int = 100,
    value_range: Annotated[tuple[float, float], Parameter(name="--range")] = (0.0, 10.0),
    out_prefix: str = "sim_",
    shuffle: bool = False,
    dump_matrix: bool = False,
    verbose: Verbose = False,
) -> None:
    """Simulate replicas of X = diag(sigma) Z and histogram the pooled spectrum of X^T X / T.

    --vol is one of student3, student:<nu>, constant:<sigma0>, normal.
    --shuffle permutes all entries of each matrix (the Marchenko-Pastur control).
    """
    configure_logging(verbose)
    console.print(
        simulate_cmd.run_simulate(
            rows,
            cols,
            vol,
            noise,
            reps,
            seed,
            bins,
            value_range,
            out_prefix,
            shuffle=shuffle,
            dump_matrix=dump_matrix,
        )
    )


@app.command
def maxeig(
    *,
    rows: int,
    cols: int,
    reps: int = 300,
    seed: int = DEFAULT_SEED,
    out: Path = Path("maxeig.json"),
    vol: str = "student3",
    noise: Literal["gaussian", "rademacher", "uniform"] = "gaussian",
    verbose: Verbose = False,
) -> None:
    """Rescale per-replica largest eigenvalues by S*a_T and test them against the Fréchet band."""
    configure_logging(verbose)
    console.print(maxeig_cmd.run_maxeig(rows, cols, reps, seed, out, vol=vol, noise=noise))


@app.command
def ingest(
    *,
    input: Path,
    format: Literal["wide", "ohlc"] = "wide",
    clear: bool = False,
    blocks: int = 1,
    out_prefix: str = "panel_",
    verbose: Verbose = False,
) -> None:
    """Read returns, drop constant tickers, renormalise (and clear the market mode) per block."""
    configure_logging(verbose)
    console.print(ingest_cmd.run_ingest(input, format, clear, blocks, out_prefix))


@app.command
def tail(
    *,
    input: Path,
    method: Literal["hill", "loglog"] = "hill",
    k: Optional[int] = None,
    column: Optional[str] = None,
    out: Path = Path("tail.json"),
    survival_out: Optional[Path] = None,
    verbose: Verbose = False,
) -> None:
    """Fit the power-law tail exponent of |values| in a column CSV and write TailFit JSON."""
    configure_logging(verbose)
    console.print(tail_cmd.run_tail(input, method, k, out, column=column, survival_out=survival_out))


@app.command
def spillover(
    *,
    input: Optional[Path] = None,
    a: Optional[str] = None,
    b: Optional[str] = None,
    out: Path = Path("spillover.csv"),
    synthetic: Optional[Literal["elliptic", "independent", "correlated"]] = None,
    n: int = 100_000,
    seed: int = DEFAULT_SEED,
    level: float = 3.0,
    verbose: Verbose = False,
) -> None:
    """Export the x,y scatter of two tickers' returns, or of a synthetic reference cloud."""
    configure_logging(verbose)
    console.print(
        tail_cmd.run_spillover(input, a, b, out, synthetic=synthetic, n=n, seed=seed, level=level)
    )


def main() -> None:
    configure_logging()
    try:
        app(exit_on_error=False)
    except CycloptsError:
        raise SystemExit(2)
    except DomainError as exc:
        err_console.print(f"Error: {exc}", markup=False, highlight=False)
        raise SystemExit(2)
    except NumericalFailure as exc:
        err_console.print(f"Numerical failure: {exc}", markup=False, highlight=False)
        raise SystemExit(3)
