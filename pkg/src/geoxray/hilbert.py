"""Fiberwise parity extension and the shifted Hilbert transform.

Boundary data lives on the influx fan alpha in (-pi/2, pi/2); extending by
the fiberwise parity of the integrand (value at alpha + pi equals +/- value
at alpha) recovers a full 2 pi fiber on which the shifted transform acts as
the Fourier multiplier

    H_(k) : e^{il alpha}  ->  -i sgn(l - k) e^{il alpha},    sgn(0) = 0.

The shift recenters the ordinary fiberwise Hilbert transform on mode k,
which is what the filtered-transport inversion formulas require.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .geodesics import InfluxGrid
from .transforms import Sinogram

log = logging.getLogger(__name__)


def sigma_parity(k: int) -> int:
    """sigma_k = +1 for even k, -1 for odd k (fiber parity of e^{ik theta}
    under theta -> theta + pi)."""
    return 1 if k % 2 == 0 else -1


@dataclass
class ExtendedFiberData:
    """Data on the full fiber: values[i, j] at (beta_i, alpha_j) with
    alpha_j = -pi/2 + (j + 1/2) pi / n for j = 0 .. 2n-1."""

    grid: InfluxGrid
    values: np.ndarray
    parity: int
    missing_fraction: np.ndarray | None = None

    @property
    def alphas(self) -> np.ndarray:
        n = self.grid.n
        return -0.5 * np.pi + (np.arange(2 * n) + 0.5) * np.pi / n


def parity_extend(s: Sinogram, parity: int) -> ExtendedFiberData:
    """Extend influx data to the full fiber by the given parity (+1 or -1).

    Missing-data marks are zero-filled before extension; the per-slice
    missing fraction is kept for diagnostics.
    """
    if parity not in (-1, 1):
        raise ValueError(f"parity must be +1 or -1, got {parity}")
    vals = np.array(s.values, dtype=np.complex128)
    missing = np.isnan(vals.real)
    frac = missing.mean(axis=1)
    if missing.any():
        vals[missing] = 0.0
        log.debug("zero-filled %d missing rays before fiber extension",
                  int(missing.sum()))
    full = np.concatenate([vals, parity * vals], axis=1)
    return ExtendedFiberData(grid=s.grid, values=full, parity=parity,
                             missing_fraction=frac)


def fiber_modes(n: int) -> np.ndarray:
    """Integer fiber frequencies of the length-2n transform, fft order."""
    return np.fft.fftfreq(2 * n, d=1.0 / (2 * n)).astype(int)


def shifted_hilbert(e: ExtendedFiberData, k: int) -> ExtendedFiberData:
    """Apply the k-shifted fiberwise Hilbert transform slice by slice."""
    n = e.grid.n
    modes = fiber_modes(n)
    mult = -1j * np.sign(modes - k)
    spec = np.fft.fft(e.values, axis=1)
    out = np.fft.ifft(spec * mult[np.newaxis, :], axis=1)
    return ExtendedFiberData(grid=e.grid, values=out, parity=e.parity,
                             missing_fraction=e.missing_fraction)


def restrict_to_influx(e: ExtendedFiberData) -> np.ndarray:
    """Drop the extended half, returning values on the influx fan."""
    return np.array(e.values[:, : e.grid.n])
