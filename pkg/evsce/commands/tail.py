"""Tail-exponent fits and spillover scatter exports."""

from pathlib import Path

import numpy as np
import pandas as pd

from ..artifacts import RunManifest, manifest_path, write_frame, write_json, write_pairs_csv
from ..errors import DomainError
from ..market_data import (
    TailMethod,
    joint_extreme_fraction,
    read_wide_csv,
    spillover_pairs,
    survival_curve,
    synthetic_spillover,
    tail_exponent,
)


def _read_column(path: Path, column: str | None) -> np.ndarray:
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DomainError(f"cannot read {path}: {exc}") from exc
    if column is None:
        numeric = frame.select_dtypes("number")
        if numeric.shape[1] == 0:
            raise DomainError(f"{path} has no numeric column")
        column = numeric.columns[-1]
    elif column not in frame.columns:
        raise DomainError(f"{path} has no column {column!r}")
    return frame[column].dropna().to_numpy(dtype=float)


def run_tail(
    input_path: Path,
    method: str,
    k: int | None,
    out: Path,
    *,
    column: str | None = None,
    survival_out: Path | None = None,
) -> str:
    method = TailMethod(method)
    manifest = RunManifest(
        command="tail",
        parameters={"input": str(input_path), "method": str(method), "k": k, "column": column},
    )
    values = np.abs(_read_column(input_path, column))
    fit = tail_exponent(values, method, k)
    manifest.add(write_json(fit.to_dict(), out))
    if survival_out is not None:
        manifest.add(write_frame(survival_curve(values[values > 0]), survival_out))
    manifest.write(manifest_path(out))
    return f"{method} tail exponent {fit.exponent:.4g} ± {fit.stderr:.2g} (k={fit.k_used}); wrote {out}"


def run_spillover(
    input_path: Path | None,
    a: str | None,
    b: str | None,
    out: Path,
    *,
    synthetic: str | None = None,
    n: int = 100_000,
    seed: int = 0,
    level: float = 3.0,
) -> str:
    if (input_path is None) == (synthetic is None):
        raise DomainError("give exactly one of --input or --synthetic")
    manifest = RunManifest(
        command="spillover",
        parameters={
            "input": None if input_path is None else str(input_path),
            "a": a,
            "b": b,
            "synthetic": synthetic,
            "n": n,
            "level": level,
        },
        seed=seed if synthetic else None,
    )
    if synthetic is not None:
        pairs = synthetic_spillover(synthetic, n, seed)
        source = f"synthetic {synthetic} cloud"
    else:
        if a is None or b is None:
            raise DomainError("--a and --b name the two tickers to pair")
        pairs = spillover_pairs(read_wide_csv(input_path), a, b)
        source = f"{a} vs {b}"
    manifest.add(write_pairs_csv(pairs, out))
    manifest.write(manifest_path(out))
    fraction = joint_extreme_fraction(pairs, level)
    return f"Wrote {len(pairs)} pairs ({source}) to {out}; joint |x|,|y| > {level:g}: {fraction:.4%}"
