"""Evaluate a limiting density on a grid and write it as CSV."""

from pathlib import Path

import numpy as np

from ..artifacts import RunManifest, manifest_path, write_density_csv
from ..distributions import StudentRenormalised
from ..errors import DomainError
from ..spectral_density import Method, density_curve

CLOSED_FORM_NU = 3.0


def run_density(
    y: float,
    xmin: float,
    xmax: float,
    points: int,
    method: str,
    nu: float,
    out: Path,
) -> str:
    if not xmin < xmax:
        raise DomainError(f"--xmin must be below --xmax, got {xmin} and {xmax}")
    if points < 2:
        raise DomainError(f"--points must be >= 2, got {points}")
    method = Method(method)
    parameters = {"y": y, "xmin": xmin, "xmax": xmax, "points": points, "method": str(method)}
    if method is Method.STIELTJES_INVERSION:
        parameters["nu"] = nu
    elif nu != CLOSED_FORM_NU:
        raise DomainError(f"--nu only applies to --method stieltjes, got --nu {nu:g} with --method {method}")
    manifest = RunManifest(command="density", parameters=parameters)
    curve = density_curve(y, np.linspace(xmin, xmax, points), method, StudentRenormalised(nu))
    manifest.add(write_density_csv(curve, out))
    manifest.write(manifest_path(out))
    return f"Wrote {points} {method} density points for y={y:g} to {out} (max rho {curve.rhos.max():.6g})"
