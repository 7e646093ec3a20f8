"""CSV/JSON writers and the per-run manifest."""

import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from . import __version__
from .spectral_density import DensityCurve

FLOAT_FORMAT = "%.17g"


@dataclass
class RunManifest:
    """Everything needed to reproduce a run; written once, beside its outputs."""

    command: str
    parameters: dict[str, Any]
    seed: int | None = None
    version: str = __version__
    outputs: list[str] = field(default_factory=list)
    wall_time: float = 0.0
    _started: float = field(default_factory=time.perf_counter, repr=False)

    def add(self, path: Path) -> Path:
        self.outputs.append(str(path))
        return path

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data.pop("_started")
        return data

    def write(self, path: Path) -> Path:
        self.wall_time = round(time.perf_counter() - self._started, 6)
        write_json(self.to_dict(), path)
        return path


def manifest_path(out: Path) -> Path:
    """``density.csv`` -> ``density.manifest.json``."""
    return out.with_suffix(".manifest.json")


def prefixed(prefix: str, name: str) -> Path:
    """``runs/sim_`` + ``hist.csv`` -> ``runs/sim_hist.csv``."""
    return Path(f"{prefix}{name}")


def _prepare(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def write_json(data: Any, path: Path) -> Path:
    path = _prepare(path)
    path.write_text(json.dumps(_jsonable(data), indent=2) + "\n")
    return path


def write_frame(frame: pd.DataFrame, path: Path, *, index: bool = False) -> Path:
    path = _prepare(path)
    frame.to_csv(path, index=index, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def density_frame(curve: DensityCurve) -> pd.DataFrame:
    n = curve.xs.size
    return pd.DataFrame(
        {"x": curve.xs, "rho": curve.rhos, "method": [str(curve.method)] * n, "y": np.full(n, curve.y)}
    )


def write_density_csv(curve: DensityCurve, path: Path) -> Path:
    return write_frame(density_frame(curve), path)


def write_column_csv(values, name: str, path: Path) -> Path:
    return write_frame(pd.DataFrame({name: np.asarray(values, dtype=float)}), path)


def write_pairs_csv(pairs, path: Path) -> Path:
    pairs = np.asarray(pairs, dtype=float)
    return write_frame(pd.DataFrame({"x": pairs[:, 0], "y": pairs[:, 1]}), path)


def write_matrix_csv(X, path: Path) -> Path:
    """Row-major dump without a header."""
    path = _prepare(path)
    np.savetxt(path, np.asarray(X, dtype=float), delimiter=",", fmt=FLOAT_FORMAT)
    return path
