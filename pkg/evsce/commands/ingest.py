"""Returns-panel preparation: read, renormalise, optionally clear, split into blocks."""

import logging
from pathlib import Path

import pandas as pd

from ..artifacts import RunManifest, prefixed, write_column_csv, write_frame
from ..errors import DomainError
from ..market_data import (
    clear_market_mode,
    drop_constant_columns,
    log_abs_quantiles,
    read_ohlc_csv,
    read_wide_csv,
    renormalise,
    row_volatility,
    split_blocks,
    write_panel_csv,
)
from ..simulator import gram_eigenvalues

logger = logging.getLogger(__name__)

READERS = {"wide": read_wide_csv, "ohlc": read_ohlc_csv}


def run_ingest(input_path: Path, fmt: str, clear: bool, blocks: int, out_prefix: str) -> str:
    if fmt not in READERS:
        raise DomainError(f"unknown input format {fmt!r}; use wide or ohlc")
    manifest = RunManifest(
        command="ingest",
        parameters={"input": str(input_path), "format": fmt, "clear": clear, "blocks": blocks},
    )
    raw = drop_constant_columns(READERS[fmt](input_path))
    manifest.add(write_frame(log_abs_quantiles(raw), prefixed(out_prefix, "quantiles.csv"), index=True))

    parts = split_blocks(raw, blocks)
    for i, part in enumerate(parts):
        stem = "" if blocks == 1 else f"block{i:03d}_"
        panel = renormalise(drop_constant_columns(part))
        if clear:
            panel = clear_market_mode(panel)
        manifest.add(write_panel_csv(panel, prefixed(out_prefix, f"{stem}panel.csv")))
        spectrum = gram_eigenvalues(panel.values)
        manifest.add(write_column_csv(spectrum, "eigenvalue", prefixed(out_prefix, f"{stem}spectrum.csv")))
        if panel.shape[1] >= 2:
            vol = pd.DataFrame({"timestamp": panel.timestamps, "sigma": row_volatility(panel)})
            manifest.add(write_frame(vol, prefixed(out_prefix, f"{stem}volatility.csv")))
        else:
            logger.warning("block %d has a single ticker, skipping row volatility", i)
        logger.debug("block %d: %dx%d, top eigenvalue %.6g", i, *panel.shape, spectrum[-1])
    manifest.write(prefixed(out_prefix, "manifest.json"))

    T, S = raw.shape
    stage = "cleared" if clear else "renormalised"
    return f"Ingested {T}x{S} panel from {input_path}; wrote {len(parts)} {stage} block(s) under {out_prefix}"
