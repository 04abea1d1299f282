"""Isothermal metrics on the unit disc.

Every metric handled here is of the form ds^2 = e^{2*lam(x,y)} (dx^2 + dy^2)
on the closed unit disc, described by the conformal exponent ``lam`` and its
closed-form derivatives.  Four families are supported:

* ``euclidean``      -- lam = 0.
* ``cpc:R``          -- constant positive curvature +1/R^2, R > 1,
                        e^{2 lam} = 4 R^4 / (x^2 + y^2 + R^2)^2.
* ``cnc:R``          -- constant negative curvature -1/R^2, R > 1,
                        e^{2 lam} = 4 R^4 / (x^2 + y^2 - R^2)^2.
* ``lens:ell``       -- Gaussian lens e^{2 lam} = exp(ell * G(x,y)) with
                        G a unit bump of width sigma at (cx, cy); slows rays
                        near the bump and transitions from simple to
                        non-simple as ell grows.

All evaluation functions accept scalars or numpy arrays and broadcast.
Gaussian curvature is kappa = -e^{-2 lam} * laplacian(lam).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LENS_SIGMA_DEFAULT = 0.25
LENS_CENTER_DEFAULT = (0.2, 0.0)

# Integer family codes shared with the compiled kernels.
CODE_EUCLID = 0
CODE_CPC = 1
CODE_CNC = 2
CODE_LENS = 3


@dataclass(frozen=True)
class MetricModel:
    """An isothermal metric on the disc, identified by family and parameters.

    ``code`` and ``params`` give the flat encoding used by the numba kernels:
    ``params`` is (R^2, 1/R^2, 0, 0) for the constant-curvature families and
    (ell/2, 1/(2 sigma^2), cx, cy) for the lens.
    """

    kind: str
    R: float = 0.0
    ell: float = 0.0
    sigma: float = LENS_SIGMA_DEFAULT
    cx: float = LENS_CENTER_DEFAULT[0]
    cy: float = LENS_CENTER_DEFAULT[1]

    @property
    def code(self) -> int:
        return {"euclidean": CODE_EUCLID, "cpc": CODE_CPC,
                "cnc": CODE_CNC, "lens": CODE_LENS}[self.kind]

    @property
    def params(self) -> np.ndarray:
        if self.kind in ("cpc", "cnc"):
            return np.array([self.R * self.R, 1.0 / self.R**2, 0.0, 0.0])
        if self.kind == "lens":
            return np.array([0.5 * self.ell, 0.5 / self.sigma**2,
                             self.cx, self.cy])
        return np.zeros(4)

    def __str__(self) -> str:
        if self.kind in ("cpc", "cnc"):
            return f"{self.kind}:{self.R:g}"
        if self.kind == "lens":
            return f"lens:{self.ell:g}"
        return "euclidean"


def euclidean() -> MetricModel:
    return MetricModel("euclidean")


def const_curv_pos(R: float) -> MetricModel:
    """Constant curvature +1/R^2 (round-sphere patch); requires R > 1."""
    if R <= 1.0:
        raise ValueError(f"cpc requires R > 1, got {R}")
    return MetricModel("cpc", R=float(R))


def const_curv_neg(R: float) -> MetricModel:
    """Constant curvature -1/R^2 (hyperbolic patch); requires R > 1."""
    if R <= 1.0:
        raise ValueError(f"cnc requires R > 1, got {R}")
    return MetricModel("cnc", R=float(R))


def lens(ell: float, sigma: float = LENS_SIGMA_DEFAULT,
         cx: float = LENS_CENTER_DEFAULT[0],
         cy: float = LENS_CENTER_DEFAULT[1]) -> MetricModel:
    """Gaussian lens of strength ell >= 0."""
    if ell < 0.0:
        raise ValueError(f"lens strength must be >= 0, got {ell}")
    if sigma <= 0.0:
        raise ValueError(f"lens sigma must be > 0, got {sigma}")
    return MetricModel("lens", ell=float(ell), sigma=float(sigma),
                       cx=float(cx), cy=float(cy))


def parse_metric(spec: str, *, lens_sigma: float = LENS_SIGMA_DEFAULT,
                 lens_cx: float = LENS_CENTER_DEFAULT[0],
                 lens_cy: float = LENS_CENTER_DEFAULT[1]) -> MetricModel:
    """Parse a metric string: ``euclidean``, ``cpc:R``, ``cnc:R``, ``lens:ell``."""
    s = spec.strip()
    if s == "euclidean":
        return euclidean()
    if ":" in s:
        head, _, tail = s.partition(":")
        try:
            value = float(tail)
        except ValueError:
            raise ValueError(f"bad metric parameter in {spec!r}") from None
        if head == "cpc":
            return const_curv_pos(value)
        if head == "cnc":
            return const_curv_neg(value)
        if head == "lens":
            return lens(value, sigma=lens_sigma, cx=lens_cx, cy=lens_cy)
    raise ValueError(f"unknown metric spec {spec!r}")


def lambda_at(m: MetricModel, x, y):
    """Conformal exponent lam(x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r2 = x * x + y * y
    if m.kind == "euclidean":
        return np.zeros(np.broadcast(x, y).shape)
    if m.kind == "cpc":
        return np.log(2.0 * m.R**2) - np.log(r2 + m.R**2)
    if m.kind == "cnc":
        return np.log(2.0 * m.R**2) - np.log(m.R**2 - r2)
    rho = (x - m.cx) ** 2 + (y - m.cy) ** 2
    return 0.5 * m.ell * np.exp(-rho / (2.0 * m.sigma**2))


def grad_lambda_at(m: MetricModel, x, y):
    """Gradient (d lam/dx, d lam/dy)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if m.kind == "euclidean":
        z = np.zeros(np.broadcast(x, y).shape)
        return z, z.copy()
    if m.kind == "cpc":
        d = x * x + y * y + m.R**2
        return -2.0 * x / d, -2.0 * y / d
    if m.kind == "cnc":
        d = m.R**2 - x * x - y * y
        return 2.0 * x / d, 2.0 * y / d
    lam = lambda_at(m, x, y)
    inv_s2 = 1.0 / m.sigma**2
    return -lam * (x - m.cx) * inv_s2, -lam * (y - m.cy) * inv_s2


def curvature_at(m: MetricModel, x, y):
    """Gaussian curvature kappa(x, y) = -e^{-2 lam} laplacian(lam)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    shape = np.broadcast(x, y).shape
    if m.kind == "euclidean":
        return np.zeros(shape)
    if m.kind == "cpc":
        return np.full(shape, 1.0 / m.R**2)
    if m.kind == "cnc":
        return np.full(shape, -1.0 / m.R**2)
    lam = lambda_at(m, x, y)
    rho = (x - m.cx) ** 2 + (y - m.cy) ** 2
    inv_s2 = 1.0 / m.sigma**2
    # laplacian(lam) = lam * (rho / sigma^4 - 2 / sigma^2)
    return np.exp(-2.0 * lam) * lam * (2.0 * inv_s2 - rho * inv_s2**2)


def conformal_factor(m: MetricModel, x, y):
    """Area-density factor e^{2 lam}; dM = e^{2 lam} dx dy."""
    return np.exp(2.0 * lambda_at(m, x, y))
