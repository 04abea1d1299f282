"""Compiled kernels for geodesic tracing and along-ray quadrature.

All hot loops live here as scalar numba code iterated over ray batches; the
public modules wrap them in typed containers.  The geodesic state is carried
as (x, y, c, s) with (c, s) = (cos theta, sin theta), which makes the
right-hand side purely arithmetic (no per-stage trig); the unit direction is
renormalized after every step.  Fiber factors e^{ik theta} are integer powers
of (c + i s).

Metric families are addressed by an integer code and a flat parameter vector
(see `metrics.MetricModel.code` / `.params`).
"""

import math

import numpy as np
from numba import njit


# ---------------------------------------------------------------------------
# metric terms
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _metric_flow(code, p0, p1, p2, p3, x, y):
    """Return (e^{-lam}, e^{-lam} d lam/dx, e^{-lam} d lam/dy) at (x, y).

    The products are what the flow equations consume, and for the
    constant-curvature families they are division-free polynomials.
    """
    if code == 1:       # constant positive curvature, p0 = R^2, p1 = R^{-2}
        emlam = 0.5 * (x * x + y * y + p0) * p1
        return emlam, -x * p1, -y * p1
    elif code == 2:     # constant negative curvature, p0 = R^2, p1 = R^{-2}
        emlam = 0.5 * (p0 - x * x - y * y) * p1
        return emlam, x * p1, y * p1
    elif code == 3:     # lens: p0 = ell/2, p1 = 1/(2 sigma^2), (p2, p3) = center
        dx = x - p2
        dy = y - p3
        lam = p0 * math.exp(-(dx * dx + dy * dy) * p1)
        emlam = math.exp(-lam)
        w = emlam * lam * 2.0 * p1
        return emlam, -w * dx, -w * dy
    return 1.0, 0.0, 0.0


@njit(cache=True, inline="always")
def _kappa_scalar(code, p0, p1, p2, p3, x, y):
    """Gaussian curvature at (x, y)."""
    if code == 1:
        return p1
    elif code == 2:
        return -p1
    elif code == 3:
        dx = x - p2
        dy = y - p3
        rho = dx * dx + dy * dy
        lam = p0 * math.exp(-rho * p1)
        inv_s2 = 2.0 * p1
        return math.exp(-2.0 * lam) * lam * (2.0 * inv_s2 - rho * inv_s2 * inv_s2)
    return 0.0


# ---------------------------------------------------------------------------
# geodesic stepping
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _rhs(code, p0, p1, p2, p3, x, y, c, s):
    # xdot = e^{-lam} theta_hat, thetadot = e^{-lam} theta_hat_perp . grad lam
    emlam, glx, gly = _metric_flow(code, p0, p1, p2, p3, x, y)
    w = c * gly - s * glx
    return emlam * c, emlam * s, -w * s, w * c


@njit(cache=True, inline="always")
def _rk4_step(code, p0, p1, p2, p3, x, y, c, s, dt):
    ax1, ay1, ac1, as1 = _rhs(code, p0, p1, p2, p3, x, y, c, s)
    hh = 0.5 * dt
    ax2, ay2, ac2, as2 = _rhs(code, p0, p1, p2, p3,
                              x + hh * ax1, y + hh * ay1,
                              c + hh * ac1, s + hh * as1)
    ax3, ay3, ac3, as3 = _rhs(code, p0, p1, p2, p3,
                              x + hh * ax2, y + hh * ay2,
                              c + hh * ac2, s + hh * as2)
    ax4, ay4, ac4, as4 = _rhs(code, p0, p1, p2, p3,
                              x + dt * ax3, y + dt * ay3,
                              c + dt * ac3, s + dt * as3)
    w = dt / 6.0
    xn = x + w * (ax1 + 2.0 * (ax2 + ax3) + ax4)
    yn = y + w * (ay1 + 2.0 * (ay2 + ay3) + ay4)
    cn = c + w * (ac1 + 2.0 * (ac2 + ac3) + ac4)
    sn = s + w * (as1 + 2.0 * (as2 + as3) + as4)
    # one Newton step of 1/sqrt is exact to roundoff for |v| this close to 1
    r = 1.5 - 0.5 * (cn * cn + sn * sn)
    return xn, yn, cn * r, sn * r


@njit(cache=True, inline="always")
def _refine_exit(x0, y0, x1, y1):
    """Fraction sigma of the last segment at which |x| = 1 (linear model)."""
    dx = x1 - x0
    dy = y1 - y0
    A = dx * dx + dy * dy
    B = 2.0 * (x0 * dx + y0 * dy)
    C = x0 * x0 + y0 * y0 - 1.0
    disc = B * B - 4.0 * A * C
    if disc < 0.0:
        disc = 0.0
    sigma = (-B + math.sqrt(disc)) / (2.0 * A)
    if sigma < 0.0:
        sigma = 0.0
    elif sigma > 1.0:
        sigma = 1.0
    return sigma


# ---------------------------------------------------------------------------
# batch tracing
# ---------------------------------------------------------------------------

@njit(cache=True)
def trace_exit_batch(code, params, x0, y0, c0, s0, dt, max_steps):
    """Trace each ray to the boundary; return exit angles and times.

    Returns (beta_e, theta_e, tau, trapped) where beta_e is the polar angle
    of the refined crossing point, theta_e the direction angle there, and
    trapped marks rays that did not leave within max_steps (their angles are
    NaN).
    """
    p0, p1, p2, p3 = params[0], params[1], params[2], params[3]
    nrays = x0.shape[0]
    beta_e = np.empty(nrays)
    theta_e = np.empty(nrays)
    tau = np.empty(nrays)
    trapped = np.zeros(nrays, dtype=np.uint8)
    for i in range(nrays):
        x = x0[i]
        y = y0[i]
        c = c0[i]
        s = s0[i]
        done = False
        for p in range(max_steps):
            xp, yp, cp, sp = x, y, c, s
            x, y, c, s = _rk4_step(code, p0, p1, p2, p3, x, y, c, s, dt)
            if x * x + y * y >= 1.0:
                sg = _refine_exit(xp, yp, x, y)
                xe = xp + sg * (x - xp)
                ye = yp + sg * (y - yp)
                ce = cp + sg * (c - cp)
                se = sp + sg * (s - sp)
                beta_e[i] = math.atan2(ye, xe)
                theta_e[i] = math.atan2(se, ce)
                tau[i] = (p + sg) * dt
                done = True
                break
        if not done:
            trapped[i] = 1
            beta_e[i] = np.nan
            theta_e[i] = np.nan
            tau[i] = max_steps * dt
    return beta_e, theta_e, tau, trapped


@njit(cache=True)
def trace_path(code, params, x0, y0, c0, s0, dt, max_steps, xs, ys, cs, ss):
    """Trace one ray storing samples at t = 0, dt, 2 dt, ... while inside.

    The caller preallocates xs/ys/cs/ss of length max_steps + 1.  Returns
    (npts, tau, trapped, xe, ye, ce, se); the exit state is linearly refined.
    """
    p0, p1, p2, p3 = params[0], params[1], params[2], params[3]
    x, y, c, s = x0, y0, c0, s0
    npts = 0
    for p in range(max_steps):
        xs[npts] = x
        ys[npts] = y
        cs[npts] = c
        ss[npts] = s
        npts += 1
        xp, yp, cp, sp = x, y, c, s
        x, y, c, s = _rk4_step(code, p0, p1, p2, p3, x, y, c, s, dt)
        if x * x + y * y >= 1.0:
            sg = _refine_exit(xp, yp, x, y)
            xe = xp + sg * (x - xp)
            ye = yp + sg * (y - yp)
            ce = cp + sg * (c - cp)
            se = sp + sg * (s - sp)
            nrm = 1.0 / math.sqrt(ce * ce + se * se)
            return npts, (p + sg) * dt, 0, xe, ye, ce * nrm, se * nrm
    return npts, max_steps * dt, 1, x, y, c, s


# ---------------------------------------------------------------------------
# along-ray quadrature
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _interp(g, n, h, x, y):
    """Bilinear interpolation on the cell-centered [-1, 1]^2 grid; 0 outside."""
    fx = (x + 1.0) / h - 0.5
    fy = (y + 1.0) / h - 0.5
    ix = int(math.floor(fx))
    iy = int(math.floor(fy))
    tx = fx - ix
    ty = fy - iy
    acc = 0.0 + 0.0j
    if 0 <= ix < n:
        if 0 <= iy < n:
            acc += (1.0 - tx) * (1.0 - ty) * g[ix, iy]
        if 0 <= iy + 1 < n:
            acc += (1.0 - tx) * ty * g[ix, iy + 1]
    if 0 <= ix + 1 < n:
        if 0 <= iy < n:
            acc += tx * (1.0 - ty) * g[ix + 1, iy]
        if 0 <= iy + 1 < n:
            acc += tx * ty * g[ix + 1, iy + 1]
    return acc


@njit(cache=True, inline="always")
def _zpow(c, s, k):
    """(c + i s)^k for (small) integer k of either sign."""
    z = complex(c, s)
    if k < 0:
        z = z.conjugate()
        kk = -k
    else:
        kk = k
    out = 1.0 + 0.0j
    for _ in range(kk):
        out *= z
    return out


QUAD_PLAIN = 0      # f(gamma) e^{ik theta}
QUAD_PERP = 1       # transverse-offset stencil integrand
QUAD_TWISTED = 2    # e^{-lam} e^{ik theta} (-theta_perp.grad h + ik theta.grad lam h)


@njit(cache=True)
def ray_quadrature_batch(code, params, x0, y0, c0, s0, dt, max_steps,
                         f, gx, gy, n, h, k, mode):
    """Left-endpoint quadrature of a fiberwise integrand along each ray.

    mode QUAD_PLAIN     : sum_p f(x_p) e^{ik theta_p} dt
    mode QUAD_PERP      : transverse central differences of f plus the
                          fiber correction ik theta_hat.grad lam f, weighted
                          by e^{-lam} e^{ik theta}
    mode QUAD_TWISTED   : like QUAD_PERP but with the derivative taken from
                          precomputed gradient grids (gx, gy) of f

    Rays that fail to exit are flagged trapped; their value is whatever was
    accumulated (callers replace it with a missing-data mark).
    """
    p0, p1, p2, p3 = params[0], params[1], params[2], params[3]
    nrays = x0.shape[0]
    vals = np.zeros(nrays, dtype=np.complex128)
    trapped = np.zeros(nrays, dtype=np.uint8)
    inv2dt = 0.5 / dt
    for i in range(nrays):
        x = x0[i]
        y = y0[i]
        c = c0[i]
        s = s0[i]
        acc = 0.0 + 0.0j
        done = False
        for p in range(max_steps):
            zk = _zpow(c, s, k)
            if mode == QUAD_PLAIN:
                acc += _interp(f, n, h, x, y) * zk
            elif mode == QUAD_PERP:
                emlam, glx, gly = _metric_flow(code, p0, p1, p2, p3, x, y)
                fp = _interp(f, n, h, x + dt * s, y - dt * c)
                fm = _interp(f, n, h, x - dt * s, y + dt * c)
                fv = _interp(f, n, h, x, y)
                acc += zk * (emlam * (fp - fm) * inv2dt
                             + 1j * k * (c * glx + s * gly) * fv)
            else:
                emlam, glx, gly = _metric_flow(code, p0, p1, p2, p3, x, y)
                hv = _interp(f, n, h, x, y)
                dx = _interp(gx, n, h, x, y)
                dy = _interp(gy, n, h, x, y)
                acc += zk * (emlam * (s * dx - c * dy)
                             + 1j * k * (c * glx + s * gly) * hv)
            x, y, c, s = _rk4_step(code, p0, p1, p2, p3, x, y, c, s, dt)
            if x * x + y * y >= 1.0:
                done = True
                break
        vals[i] = acc * dt
        if not done:
            trapped[i] = 1
    return vals, trapped


# ---------------------------------------------------------------------------
# Jacobi fields along a geodesic
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _rhs8(code, p0, p1, p2, p3, x, y, c, s, ad, a, bd, b):
    emlam, glx, gly = _metric_flow(code, p0, p1, p2, p3, x, y)
    w = c * gly - s * glx
    kap = _kappa_scalar(code, p0, p1, p2, p3, x, y)
    return emlam * c, emlam * s, -w * s, w * c, -kap * a, ad, -kap * b, bd


@njit(cache=True)
def trace_jacobi(code, params, x0, y0, c0, s0, dt, max_steps,
                 xs, ys, cs, ss, a_out, ad_out, b_out, bd_out):
    """Trace a geodesic together with both Jacobi fields.

    a solves a'' + kappa a = 0 with a(0) = 1, a'(0) = 0; b likewise with
    b(0) = 0, b'(0) = 1.  Samples stored at t = 0, dt, ... while inside;
    returns (npts, tau, trapped).
    """
    p0, p1, p2, p3 = params[0], params[1], params[2], params[3]
    x, y, c, s = x0, y0, c0, s0
    a, ad = 1.0, 0.0
    b, bd = 0.0, 1.0
    npts = 0
    for p in range(max_steps):
        xs[npts] = x
        ys[npts] = y
        cs[npts] = c
        ss[npts] = s
        a_out[npts] = a
        ad_out[npts] = ad
        b_out[npts] = b
        bd_out[npts] = bd
        npts += 1
        xp = x
        yp = y
        # classical RK4 on the joint 8-state system
        k1 = _rhs8(code, p0, p1, p2, p3, x, y, c, s, ad, a, bd, b)
        hh = 0.5 * dt
        k2 = _rhs8(code, p0, p1, p2, p3,
                   x + hh * k1[0], y + hh * k1[1], c + hh * k1[2],
                   s + hh * k1[3], ad + hh * k1[4], a + hh * k1[5],
                   bd + hh * k1[6], b + hh * k1[7])
        k3 = _rhs8(code, p0, p1, p2, p3,
                   x + hh * k2[0], y + hh * k2[1], c + hh * k2[2],
                   s + hh * k2[3], ad + hh * k2[4], a + hh * k2[5],
                   bd + hh * k2[6], b + hh * k2[7])
        k4 = _rhs8(code, p0, p1, p2, p3,
                   x + dt * k3[0], y + dt * k3[1], c + dt * k3[2],
                   s + dt * k3[3], ad + dt * k3[4], a + dt * k3[5],
                   bd + dt * k3[6], b + dt * k3[7])
        w = dt / 6.0
        x = x + w * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0])
        y = y + w * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1])
        c = c + w * (k1[2] + 2.0 * (k2[2] + k3[2]) + k4[2])
        s = s + w * (k1[3] + 2.0 * (k2[3] + k3[3]) + k4[3])
        ad = ad + w * (k1[4] + 2.0 * (k2[4] + k3[4]) + k4[4])
        a = a + w * (k1[5] + 2.0 * (k2[5] + k3[5]) + k4[5])
        bd = bd + w * (k1[6] + 2.0 * (k2[6] + k3[6]) + k4[6])
        b = b + w * (k1[7] + 2.0 * (k2[7] + k3[7]) + k4[7])
        nrm = 1.5 - 0.5 * (c * c + s * s)
        c *= nrm
        s *= nrm
        if x * x + y * y >= 1.0:
            return npts, (p + _refine_exit(xp, yp, x, y)) * dt, 0
    return npts, max_steps * dt, 1


# ---------------------------------------------------------------------------
# vectorized grid interpolation (used by the backprojection sweeps)
# ---------------------------------------------------------------------------

@njit(cache=True)
def interp_many(g, n, h, xs, ys):
    """Bilinear interpolation of a complex grid at many points."""
    out = np.empty(xs.shape[0], dtype=np.complex128)
    for i in range(xs.shape[0]):
        out[i] = _interp(g, n, h, xs[i], ys[i])
    return out
