"""Jacobi fields, the error-operator kernel, and transport-based W_k routes.

Along a unit-speed geodesic, the two normalized Jacobi fields solve
a'' + kappa a = 0 with (a, a')(0) = (1, 0) and b'' + kappa b = 0 with
(b, b')(0) = (0, 1); their Wronskian a b' - b a' is identically 1, and
simplicity of the metric is equivalent to b > 0 for t > 0.

The error operator W_k acting on a coefficient function f admits two
independent discretizations kept here deliberately as mutual oracles:

* a kernel route, integrating q_k / b against f in geodesic polar
  coordinates, with q_k = (-d_theta(a/b) + ik (a-1)/b) e^{ik(alpha-theta)};
* a transport route, solving u(x, theta) = int f(gamma) e^{ik theta(t)} dt
  by tracing, applying the transverse derivative field on the sphere bundle
  grid, and projecting onto fiber mode k.

The adjoint route integrates the transverse derivative of h along rays and
projects, giving the L2(M)-adjoint pair used by the norm diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import SingularB, TrappedRay
from .geodesics import GeodesicPath, default_max_steps
from .grids import ScalarGrid, cartesian_grid
from .metrics import MetricModel, grad_lambda_at, lambda_at
from .reconstruction import interior_cell_centers

B_SINGULAR_TOL = 1e-12


@dataclass
class JacobiPair:
    """Both normalized Jacobi fields sampled along one geodesic."""

    ts: np.ndarray
    a: np.ndarray
    adot: np.ndarray
    b: np.ndarray
    bdot: np.ndarray
    tau: float
    trapped: bool

    @property
    def wronskian(self) -> np.ndarray:
        return self.a * self.bdot - self.b * self.adot


def _trace_jacobi_raw(m: MetricModel, x0, y0, theta0, dt, max_steps):
    buf = [np.empty(max_steps + 1) for _ in range(8)]
    npts, tau, trapped = _kernels.trace_jacobi(
        m.code, m.params, x0, y0, math.cos(theta0), math.sin(theta0),
        dt, max_steps, *buf)
    xs, ys, cs, ss, a, ad, b, bd = (arr[:npts].copy() for arr in buf)
    return xs, ys, cs, ss, a, ad, b, bd, tau, bool(trapped)


def jacobi_fields(m: MetricModel, path: GeodesicPath) -> JacobiPair:
    """Integrate both Jacobi fields along the given path's geodesic.

    Re-traces the joint system from the path's initial state with the same
    one-step scheme and dt, evaluating curvature at the integrator's stage
    positions; samples line up with the path's.
    """
    if len(path) == 0:
        z = np.empty(0)
        return JacobiPair(ts=z, a=z, adot=z, b=z, bdot=z, tau=0.0,
                          trapped=False)
    max_steps = max(len(path) + 1, 2)
    *_rest, a, ad, b, bd, tau, trapped = _trace_jacobi_raw(
        m, path.xs[0], path.ys[0], path.thetas[0], path.dt, max_steps)
    n = min(len(path), a.shape[0])
    return JacobiPair(ts=path.dt * np.arange(n), a=a[:n], adot=ad[:n],
                      b=b[:n], bdot=bd[:n], tau=tau, trapped=trapped)


def const_curvature_ab(kappa: float, t):
    """Closed-form Jacobi fields of a constant-curvature metric.

    With p = sqrt(|kappa|): (cos pt, sin(pt)/p) for kappa > 0,
    (cosh pt, sinh(pt)/p) for kappa < 0, (1, t) for kappa = 0 -- the unique
    pair with a(0) = 1, a'(0) = 0, b(0) = 0, b'(0) = 1.
    """
    t = np.asarray(t, dtype=float)
    if kappa > 0.0:
        p = math.sqrt(kappa)
        return np.cos(p * t), np.sin(p * t) / p
    if kappa < 0.0:
        p = math.sqrt(-kappa)
        return np.cosh(p * t), np.sinh(p * t) / p
    return np.ones_like(t), t.copy()


def _qk_along(m: MetricModel, x0, y0, theta0, k, dt, dtheta, max_steps):
    """Kernel samples q_k/b, b and positions along one geodesic.

    The theta-derivative of a/b is taken by central differences over two
    auxiliary launches rotated by +/- dtheta; samples start at t = dt since
    b(0) = 0.  Returns (ts, q_over_b, b, xs, ys, trapped).
    """
    xs, ys, cs, ss, a, _ad, b, _bd, _tau, trapped = _trace_jacobi_raw(
        m, x0, y0, theta0, dt, max_steps)
    _, _, _, _, ap, _, bp, _, _, trp = _trace_jacobi_raw(
        m, x0, y0, theta0 + dtheta, dt, max_steps)
    _, _, _, _, am, _, bm, _, _, trm = _trace_jacobi_raw(
        m, x0, y0, theta0 - dtheta, dt, max_steps)
    n = min(a.shape[0], ap.shape[0], am.shape[0])
    if n < 2:
        z = np.empty(0)
        return z, z.astype(complex), z, z, z, trapped
    sl = slice(1, n)
    # b(0) = 0 and bdot(0) = 1, so b > 0 until the first conjugate point; a
    # signed check catches zero crossings that fall between time samples.
    for arr in (b[sl], bp[sl], bm[sl]):
        if np.min(arr) < B_SINGULAR_TOL:
            raise SingularB("Jacobi field b vanished away from t = 0 "
                            "(conjugate point on the geodesic)")
    dab = (ap[sl] / bp[sl] - am[sl] / bm[sl]) / (2.0 * dtheta)
    thetas = np.arctan2(ss, cs)
    # alpha(t) - theta = total direction turn along the central geodesic
    turn = np.unwrap(np.concatenate(([theta0], thetas[sl])))[1:] - theta0
    phase = np.exp(1j * k * turn)
    q_over_b = (-dab + 1j * k * (a[sl] - 1.0) / b[sl]) * phase / b[sl]
    ts = dt * np.arange(1, n)
    return ts, q_over_b, b[sl], xs[sl], ys[sl], bool(trapped or trp or trm)


def kernel_qk(m: MetricModel, beta: float, alpha: float, k: int, dt: float,
              dtheta: float, max_steps: int | None = None):
    """Assemble q_k/b along the ray entering at (beta, alpha).

    Returns (ts, q_over_b) for t = dt, 2 dt, ...; raises SingularB at a
    conjugate point and TrappedRay if the ray never exits.
    """
    if max_steps is None:
        max_steps = default_max_steps(dt)
    x0, y0 = math.cos(beta), math.sin(beta)
    theta0 = beta + math.pi + alpha
    ts, qob, _b, _xs, _ys, trapped = _qk_along(m, x0, y0, theta0, k, dt,
                                               dtheta, max_steps)
    if trapped:
        raise TrappedRay("kernel assembly needs an escaping geodesic")
    return ts, qob


def apply_Wk_kernel(m: MetricModel, f: ScalarGrid, k: int, x: float, y: float,
                    n_theta: int | None = None, dt: float | None = None,
                    dtheta: float = 1e-4,
                    max_steps: int | None = None) -> complex:
    """Kernel-route evaluation of (W_k f)(x): geodesic polar quadrature of
    q_k f over all directions from x.

    The raw q_k samples follow the orientation convention in which the two
    transverse variation fields are referred to opposite unit normals; the
    direct transverse derivative of the transport solution resolves both
    against the same normal, which costs exactly one global sign here.
    """
    if n_theta is None:
        n_theta = 2 * f.n
    if dt is None:
        dt = 1.0 / f.n
    if max_steps is None:
        max_steps = default_max_steps(dt)
    total = 0.0 + 0.0j
    for th in 2.0 * np.pi * np.arange(n_theta) / n_theta:
        ts, qob, b, xs, ys, trapped = _qk_along(m, x, y, th, k, dt, dtheta,
                                                max_steps)
        if ts.size == 0:
            continue
        fvals = _kernels.interp_many(f.values, f.n, f.h, xs, ys)
        integrand = np.concatenate(([0.0 + 0.0j], qob * b * fvals))
        total += np.trapezoid(integrand, dx=dt)
    return complex(-total / n_theta)


def polar_area_integral(m: MetricModel, func, x: float, y: float,
                        n_theta: int = 256, dt: float = 1e-3,
                        max_steps: int | None = None) -> float:
    """Area integral of func over the disc by geodesic polar quadrature.

    Evaluates the change-of-variables identity around the base point (x, y):
    int_M func dM = int_0^{2pi} int_0^tau func(gamma(t)) b dt dtheta, with b
    the spreading Jacobi field; func is a vectorized callable of (xs, ys).
    The Cartesian value with area weight e^{2 lam} is the natural oracle.
    """
    if max_steps is None:
        max_steps = default_max_steps(dt)
    total = 0.0
    for th in 2.0 * np.pi * np.arange(n_theta) / n_theta:
        xs, ys, _c, _s, _a, _ad, b, _bd, _tau, trapped = _trace_jacobi_raw(
            m, x, y, th, dt, max_steps)
        if trapped:
            raise TrappedRay("polar quadrature needs escaping geodesics")
        total += float(np.trapezoid(func(xs, ys) * b, dx=dt))
    return total * 2.0 * np.pi / n_theta


def dump_kernel_csv(m: MetricModel, beta: float, alpha: float, k: int,
                    dt: float, dtheta: float, path) -> None:
    """Diagnostic dump along one geodesic: t, a, b, Wronskian, q_k/b."""
    max_steps = default_max_steps(dt)
    x0, y0 = math.cos(beta), math.sin(beta)
    theta0 = beta + math.pi + alpha
    _xs, _ys, _c, _s, a, ad, b, bd, _tau, trapped = _trace_jacobi_raw(
        m, x0, y0, theta0, dt, max_steps)
    if trapped:
        raise TrappedRay("diagnostic dump needs an escaping geodesic")
    ts, qob, *_rest = _qk_along(m, x0, y0, theta0, k, dt, dtheta, max_steps)
    wron = a * bd - b * ad
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,a,b,wronskian,qk_over_b_re,qk_over_b_im\n")
        for i, t in enumerate(ts):
            j = i + 1
            fh.write(f"{float(t)!r},{float(a[j])!r},{float(b[j])!r},"
                     f"{float(wron[j])!r},{float(qob[i].real)!r},"
                     f"{float(qob[i].imag)!r}\n")


# ---------------------------------------------------------------------------
# transport routes for W_k and its adjoint
# ---------------------------------------------------------------------------

def _sphere_bundle_metric(m: MetricModel, n: int):
    h = 2.0 / n
    xs = -1.0 + (np.arange(n) + 0.5) * h
    xx, yy = np.meshgrid(xs, xs, indexing="ij")
    inside = xx * xx + yy * yy < 1.0
    lam = np.zeros((n, n))
    lamx = np.zeros((n, n))
    lamy = np.zeros((n, n))
    emlam = np.zeros((n, n))
    lam[inside] = lambda_at(m, xx[inside], yy[inside])
    gx, gy = grad_lambda_at(m, xx[inside], yy[inside])
    lamx[inside] = gx
    lamy[inside] = gy
    emlam[inside] = np.exp(-lam[inside])
    return emlam, lamx, lamy


def _u_field(m: MetricModel, f: ScalarGrid, k: int, thetas, dt, max_steps,
             mode, gx=None, gy=None):
    """Transport solution u(x, theta_j) on the masked grid, as a cube."""
    n = f.n
    ix, iy, px, py = interior_cell_centers(n)
    U = np.zeros((n, n, thetas.size), dtype=np.complex128)
    dummy = np.zeros((1, 1), dtype=np.complex128)
    gx = dummy if gx is None else gx
    gy = dummy if gy is None else gy
    for j, th in enumerate(thetas):
        c = np.full(px.size, math.cos(th))
        s = np.full(px.size, math.sin(th))
        vals, trapped = _kernels.ray_quadrature_batch(
            m.code, m.params, px, py, c, s, dt, max_steps,
            f.values, gx, gy, n, f.h, k, mode)
        vals[trapped.astype(bool)] = 0.0
        U[ix, iy, j] = vals
    return U


def apply_Wk_transport(m: MetricModel, f: ScalarGrid, k: int,
                       n_theta: int | None = None, dt: float | None = None,
                       max_steps: int | None = None) -> ScalarGrid:
    """Transport-route W_k f: trace, transverse-differentiate, project."""
    n = f.n
    if n_theta is None:
        n_theta = 2 * n
    if dt is None:
        dt = 1.0 / n
    if max_steps is None:
        max_steps = default_max_steps(dt)
    thetas = 2.0 * np.pi * np.arange(n_theta) / n_theta
    U = _u_field(m, f, k, thetas, dt, max_steps, _kernels.QUAD_PLAIN)

    h = f.h
    Ux = np.gradient(U, h, axis=0)
    Uy = np.gradient(U, h, axis=1)
    modes = np.fft.fftfreq(n_theta, d=1.0 / n_theta).astype(int)
    Uth = np.fft.ifft(np.fft.fft(U, axis=2) * (1j * modes), axis=2)

    emlam, lamx, lamy = _sphere_bundle_metric(m, n)
    cth = np.cos(thetas)[np.newaxis, np.newaxis, :]
    sth = np.sin(thetas)[np.newaxis, np.newaxis, :]
    e3 = emlam[:, :, np.newaxis]
    lx3 = lamx[:, :, np.newaxis]
    ly3 = lamy[:, :, np.newaxis]
    XpU = -e3 * (-sth * Ux + cth * Uy - (cth * lx3 + sth * ly3) * Uth)

    ck = XpU @ np.exp(-1j * k * thetas) / n_theta
    g = cartesian_grid(n, f.eps_mask)
    ck[~g.mask] = 0.0
    return g.copy_with(ck)


def apply_Wk_adjoint_transport(m: MetricModel, h_grid: ScalarGrid, k: int,
                               n_theta: int | None = None,
                               dt: float | None = None,
                               max_steps: int | None = None) -> ScalarGrid:
    """Transport-route adjoint: project the transport solution of the
    transverse derivative of h onto fiber mode k."""
    n = h_grid.n
    if n_theta is None:
        n_theta = 2 * n
    if dt is None:
        dt = 1.0 / n
    if max_steps is None:
        max_steps = default_max_steps(dt)
    thetas = 2.0 * np.pi * np.arange(n_theta) / n_theta
    gx = np.gradient(h_grid.values, h_grid.h, axis=0)
    gy = np.gradient(h_grid.values, h_grid.h, axis=1)
    U = _u_field(m, h_grid, k, thetas, dt, max_steps, _kernels.QUAD_TWISTED,
                 gx=np.ascontiguousarray(gx), gy=np.ascontiguousarray(gy))
    ck = U @ np.exp(-1j * k * thetas) / n_theta
    g = cartesian_grid(n, h_grid.eps_mask)
    ck[~g.mask] = 0.0
    return g.copy_with(ck)


def l2m_inner(m: MetricModel, a: ScalarGrid, b: ScalarGrid) -> complex:
    """L2 inner product with the metric area weight e^{2 lam} dx dy."""
    mask = a.mask & b.mask
    xx, yy = a.meshgrid()
    w = np.zeros_like(xx)
    w[mask] = np.exp(2.0 * lambda_at(m, xx[mask], yy[mask]))
    return complex(np.sum(a.values * np.conj(b.values) * w) * a.h * a.h)


def l2m_norm(m: MetricModel, a: ScalarGrid) -> float:
    return math.sqrt(max(l2m_inner(m, a, a).real, 0.0))


def wk_norm_estimate(m: MetricModel, k: int, n: int = 64,
                     n_theta: int | None = None, dt: float | None = None,
                     iters: int = 6, seed: int = 0) -> float:
    """Power-iteration estimate of ||W_k|| via the composition W_k* W_k."""
    rng = np.random.default_rng(seed)
    g = cartesian_grid(n)
    vals = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    vals[~g.mask] = 0.0
    v = g.copy_with(vals)
    v = v.copy_with(v.values / l2m_norm(m, v))
    lam_est = 0.0
    for _ in range(iters):
        z = apply_Wk_transport(m, v, k, n_theta, dt)
        y = apply_Wk_adjoint_transport(m, z, k, n_theta, dt)
        lam_est = l2m_inner(m, y, v).real
        nrm = l2m_norm(m, y)
        if nrm == 0.0:
            return 0.0
        v = y.copy_with(y.values / nrm)
    return math.sqrt(max(lam_est, 0.0))
