"""Forward geodesic X-ray transforms of k-differentials.

For a coefficient function f on the disc, the transform of the twisted
integrand f e^{ik theta} over the ray entering at (beta, alpha) is

    I_k f (beta, alpha) = int_0^tau f(gamma(t)) e^{ik theta(t)} dt,

and the transverse-derivative transform I_{k,perp} applies the perpendicular
derivative field to f e^{ik theta} before integrating; its quadrature uses
centered transverse offsets x -/+ dt * theta_hat_perp of the sample points
plus the fiber correction ik theta_hat . grad lam.

Rays that never exit (possible for strong lenses) carry a NaN missing-data
mark in the sinogram.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .geodesics import (InfluxGrid, default_max_steps, influx_launch_states,
                        make_influx_grid, trace_from_influx)
from .grids import ScalarGrid
from .metrics import MetricModel

MISSING = complex(np.nan, np.nan)


@dataclass
class Sinogram:
    """Transform values on the influx grid: values[i, j] at (beta_i, alpha_j)."""

    grid: InfluxGrid
    values: np.ndarray
    k: int
    metric: str
    dt: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        n = self.grid.n
        if self.values.shape != (2 * n, n):
            raise ValueError(f"sinogram shape {self.values.shape} "
                             f"!= ({2 * n}, {n})")

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values.real)


def _forward(m: MetricModel, f: ScalarGrid, k: int, dt: float | None,
             max_steps: int | None, mode: int) -> Sinogram:
    grid = make_influx_grid(f.n)
    if dt is None:
        dt = 1.0 / f.n
    if max_steps is None:
        max_steps = default_max_steps(dt)
    x0, y0, c0, s0 = influx_launch_states(grid)
    dummy = np.zeros((1, 1), dtype=np.complex128)
    vals, trapped = _kernels.ray_quadrature_batch(
        m.code, m.params, x0, y0, c0, s0, dt, max_steps,
        f.values, dummy, dummy, f.n, f.h, k, mode)
    vals[trapped.astype(bool)] = MISSING
    return Sinogram(grid=grid, values=vals.reshape(2 * grid.n, grid.n),
                    k=k, metric=str(m), dt=dt)


def forward_Ik(m: MetricModel, f: ScalarGrid, k: int, dt: float | None = None,
               max_steps: int | None = None) -> Sinogram:
    """Geodesic X-ray transform of f e^{ik theta} on the influx grid."""
    return _forward(m, f, k, dt, max_steps, _kernels.QUAD_PLAIN)


def forward_Ikperp(m: MetricModel, f: ScalarGrid, k: int,
                   dt: float | None = None,
                   max_steps: int | None = None) -> Sinogram:
    """Transform of the transverse derivative of f e^{ik theta}."""
    return _forward(m, f, k, dt, max_steps, _kernels.QUAD_PERP)


def ray_integral_general(m: MetricModel, sampler, beta: float, alpha: float,
                         dt: float, max_steps: int | None = None) -> complex:
    """Left-endpoint quadrature of an arbitrary fiberwise integrand.

    ``sampler(x, y, theta)`` must accept equal-length arrays of sample
    positions and direction angles and return complex values.  This is the
    reference route the production transforms are checked against.
    """
    path = trace_from_influx(m, beta, alpha, dt, max_steps)
    if len(path) == 0:
        return 0.0 + 0.0j
    return complex(dt * np.sum(sampler(path.xs, path.ys, path.thetas)))


# ---------------------------------------------------------------------------
# serialization: a pair of CSVs (real and imaginary parts)
# ---------------------------------------------------------------------------

def _write_csv(path: Path, header: str, array: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in array:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _read_csv(path: Path) -> tuple[dict, np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing header row")
        fields = {}
        for item in header[1:].strip().split():
            key, _, val = item.partition("=")
            fields[key] = val
        rows = [[float(v) for v in line.strip().split(",")]
                for line in fh if line.strip()]
    return fields, np.array(rows)


def write_sinogram(s: Sinogram, stem: str | Path) -> tuple[Path, Path]:
    """Write <stem>_real.csv and <stem>_imag.csv; rows = beta, cols = alpha."""
    stem = Path(stem)
    header = f"# n={s.grid.n} k={s.k} metric={s.metric} dt={s.dt!r}"
    p_re = stem.with_name(stem.name + "_real.csv")
    p_im = stem.with_name(stem.name + "_imag.csv")
    _write_csv(p_re, header, s.values.real)
    _write_csv(p_im, header, s.values.imag)
    return p_re, p_im


def read_sinogram(stem: str | Path) -> Sinogram:
    stem = Path(stem)
    fields, re = _read_csv(stem.with_name(stem.name + "_real.csv"))
    _, im = _read_csv(stem.with_name(stem.name + "_imag.csv"))
    grid = make_influx_grid(int(fields["n"]))
    return Sinogram(grid=grid, values=re + 1j * im, k=int(fields["k"]),
                    metric=fields["metric"], dt=float(fields["dt"]))
