"""Cell-centered Cartesian grids on [-1, 1]^2 with a disc support mask.

Grid values are complex throughout: the objects being reconstructed are the
fiber-coefficient functions of k-differentials, which are complex even when
the underlying tensor is real.  Arrays are indexed [ix, iy] so that
``values[i, j]`` sits at (xs[i], ys[j]).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroReference


def default_eps_mask(n: int) -> float:
    """Rim margin of two cells: values within 2h of the boundary are dropped."""
    return 4.0 / n


@dataclass
class ScalarGrid:
    """An n x n complex field sampled at cell centers of [-1, 1]^2.

    The mask keeps cell centers with |x| <= 1 - eps_mask; everything the
    package computes is understood modulo values outside the mask.
    """

    n: int
    values: np.ndarray
    eps_mask: float

    h: float = field(init=False)

    def __post_init__(self):
        self.h = 2.0 / self.n
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.n, self.n):
            raise ValueError(f"values shape {self.values.shape} "
                             f"!= ({self.n}, {self.n})")

    @property
    def xs(self) -> np.ndarray:
        return -1.0 + (np.arange(self.n) + 0.5) * self.h

    @property
    def ys(self) -> np.ndarray:
        return self.xs

    def meshgrid(self):
        return np.meshgrid(self.xs, self.ys, indexing="ij")

    @property
    def mask(self) -> np.ndarray:
        xx, yy = self.meshgrid()
        return xx * xx + yy * yy <= (1.0 - self.eps_mask) ** 2

    def copy_with(self, values: np.ndarray) -> "ScalarGrid":
        return ScalarGrid(n=self.n, values=np.array(values, dtype=np.complex128),
                          eps_mask=self.eps_mask)


def cartesian_grid(n: int, eps_mask: float | None = None) -> ScalarGrid:
    """A zero grid; eps_mask defaults to two cell widths (4/n)."""
    if n < 2:
        raise ValueError(f"grid needs n >= 2, got {n}")
    if eps_mask is None:
        eps_mask = default_eps_mask(n)
    return ScalarGrid(n=n, values=np.zeros((n, n), dtype=np.complex128),
                      eps_mask=float(eps_mask))


def relative_L2_error(approx: ScalarGrid, reference: ScalarGrid,
                      mask: np.ndarray | None = None) -> float:
    """||approx - reference||_2 / ||reference||_2 over the masked cells."""
    if mask is None:
        mask = approx.mask & reference.mask
    diff = (approx.values - reference.values)[mask]
    ref = reference.values[mask]
    denom = np.sqrt(np.sum(np.abs(ref) ** 2))
    if denom == 0.0:
        raise ZeroReference("reference field vanishes on the mask")
    return float(np.sqrt(np.sum(np.abs(diff) ** 2)) / denom)
