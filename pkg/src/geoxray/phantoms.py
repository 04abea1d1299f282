"""Gaussian-bump phantoms with effectively compact support in the disc.

A phantom is a sum of isotropic Gaussian bumps, hard-masked to zero outside
the grid's support disc.  Bump centers must sit inside radius 1 - 3 width so
the truncated tail at the rim is small.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import ScalarGrid, cartesian_grid


@dataclass(frozen=True)
class GaussianBump:
    cx: float
    cy: float
    amp: float
    width: float


@dataclass(frozen=True)
class PhantomSpec:
    """Bump list plus grid parameters for sampling."""

    bumps: tuple[GaussianBump, ...]
    n: int
    eps_mask: float | None = None

    def __post_init__(self):
        for b in self.bumps:
            if b.width <= 0.0:
                raise ValueError(f"bump width must be positive, got {b.width}")
            if np.hypot(b.cx, b.cy) >= 1.0 - 3.0 * b.width:
                raise ValueError(
                    f"bump at ({b.cx}, {b.cy}) too close to the boundary "
                    f"for width {b.width}")


def default_bumps() -> tuple[GaussianBump, ...]:
    """The stock three-bump phantom used by the experiment suites."""
    return (GaussianBump(-0.3, 0.25, 1.0, 0.10),
            GaussianBump(0.25, 0.3, 0.8, 0.10),
            GaussianBump(0.1, -0.35, 0.9, 0.10))


def bumps_value(bumps, x, y):
    """Evaluate the (unmasked) bump sum at arbitrary points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros(np.broadcast(x, y).shape)
    for b in bumps:
        out = out + b.amp * np.exp(-((x - b.cx) ** 2 + (y - b.cy) ** 2)
                                   / (2.0 * b.width ** 2))
    return out


def bumps_gradient(bumps, x, y):
    """Closed-form gradient of the bump sum."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    gx = np.zeros(np.broadcast(x, y).shape)
    gy = np.zeros_like(gx)
    for b in bumps:
        v = b.amp * np.exp(-((x - b.cx) ** 2 + (y - b.cy) ** 2)
                           / (2.0 * b.width ** 2))
        gx = gx - v * (x - b.cx) / b.width ** 2
        gy = gy - v * (y - b.cy) / b.width ** 2
    return gx, gy


def make_phantom(spec: PhantomSpec) -> ScalarGrid:
    """Sample the bump sum on the grid and zero it outside the mask."""
    g = cartesian_grid(spec.n, spec.eps_mask)
    xx, yy = g.meshgrid()
    vals = bumps_value(spec.bumps, xx, yy).astype(np.complex128)
    vals[~g.mask] = 0.0
    return g.copy_with(vals)


def default_phantom(n: int, eps_mask: float | None = None) -> ScalarGrid:
    return make_phantom(PhantomSpec(bumps=default_bumps(), n=n,
                                    eps_mask=eps_mask))
