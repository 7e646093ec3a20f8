"""Simulate EVSCE batches and write the pooled-spectrum histogram."""

from pathlib import Path

import pandas as pd

from ..artifacts import RunManifest, prefixed, write_column_csv, write_frame, write_matrix_csv
from ..distributions import describe, parse_noise, parse_volatility
from ..simulator import EVMConfig, batch_spectra, generate_evm, histogram, shuffle_entries


def run_simulate(
    rows: int,
    cols: int,
    vol: str,
    noise: str,
    reps: int,
    seed: int,
    bins: int,
    value_range: tuple[float, float],
    out_prefix: str,
    *,
    shuffle: bool = False,
    dump_matrix: bool = False,
) -> str:
    config = EVMConfig(T=rows, S=cols, volatility=parse_volatility(vol), noise=parse_noise(noise), seed=seed)
    manifest = RunManifest(
        command="simulate",
        parameters={
            "rows": rows,
            "cols": cols,
            "vol": describe(config.volatility),
            "noise": str(config.noise),
            "reps": reps,
            "bins": bins,
            "range": list(value_range),
            "shuffle": shuffle,
            "dump_matrix": dump_matrix,
        },
        seed=seed,
    )
    batch = batch_spectra(config, reps, shuffle=shuffle)
    hist = histogram(batch.pooled.eigenvalues, bins, value_range)

    manifest.add(write_frame(hist.to_frame(), prefixed(out_prefix, "histogram.csv")))
    manifest.add(write_column_csv(batch.pooled.eigenvalues, "eigenvalue", prefixed(out_prefix, "spectrum.csv")))
    maxima = pd.DataFrame({"replica": range(reps), "lambda_max": batch.maxima})
    manifest.add(write_frame(maxima, prefixed(out_prefix, "maxima.csv")))
    if dump_matrix:
        first = config.for_replica(0)
        sample = generate_evm(first)
        if shuffle:
            sample = shuffle_entries(sample, first.seed, *first.substream)
        manifest.add(write_matrix_csv(sample.X, prefixed(out_prefix, "matrix.csv")))
    manifest.write(prefixed(out_prefix, "manifest.json"))

    outside = hist.below + hist.above
    return (
        f"Simulated {reps} x ({rows}x{cols}) matrices: {batch.pooled.eigenvalues.size} eigenvalues, "
        f"{outside} outside [{value_range[0]:g}, {value_range[1]:g}], "
        f"largest {batch.maxima.max():.6g}; outputs under {out_prefix}"
    )
