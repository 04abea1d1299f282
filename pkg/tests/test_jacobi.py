"""Tests for the variational machinery: Jacobi fields along traced geodesics,
constant-curvature closed forms, the Wronskian normalization, the error-kernel
samples q_k/b, geodesic polar quadrature, and the two independent routes to
the error operator W_k."""

import csv
import math

import numpy as np
import pytest

from geoxray import (
    SingularB,
    const_curv_neg,
    const_curv_pos,
    default_phantom,
    euclidean,
    lens,
    trace_from_influx,
    wk_norm_estimate,
)
from geoxray.jacobi import (
    _trace_jacobi_raw,
    apply_Wk_kernel,
    apply_Wk_transport,
    const_curvature_ab,
    dump_kernel_csv,
    jacobi_fields,
    kernel_qk,
    polar_area_integral,
)
from geoxray.metrics import grad_lambda_at, lambda_at
from geoxray.phantoms import bumps_value, default_bumps

DT = 1e-3


def traced_turn(m, beta, alpha, n_samples):
    """Direction turn alpha(t) - theta(0) along the entering ray, sampled at
    t = DT, ..., n_samples * DT (mirrors the kernel's phase bookkeeping)."""
    path = trace_from_influx(m, beta, alpha, DT)
    theta0 = beta + math.pi + alpha
    tt = path.thetas[1:n_samples + 1]
    return np.unwrap(np.concatenate(([theta0], tt)))[1:] - theta0


class TestFlatDiscFields:
    def test_fields_are_one_and_t(self):
        m = euclidean()
        path = trace_from_influx(m, 0.7, 0.3, DT)
        pair = jacobi_fields(m, path)
        assert np.abs(pair.a - 1.0).max() < 1e-12
        assert np.abs(pair.b - pair.ts).max() < 1e-12
        assert np.abs(pair.adot).max() < 1e-12
        assert np.abs(pair.bdot - 1.0).max() < 1e-12

    def test_kernel_vanishes_identically(self):
        ts, qob = kernel_qk(euclidean(), 0.7, 0.3, 3, DT, 1e-4)
        assert np.abs(qob).max() < 1e-6


class TestConstantCurvatureClosedForms:
    def test_reference_values(self):
        a, b = const_curvature_ab(0.0, 1.3)
        assert (a, b) == (1.0, 1.3)
        a, b = const_curvature_ab(1.0, np.pi / 2)
        assert abs(a) < 1e-15 and abs(b - 1.0) < 1e-15
        a, b = const_curvature_ab(4.0, np.pi / 4)
        assert abs(a) < 1e-15 and abs(b - 0.5) < 1e-15
        a, b = const_curvature_ab(-1.0, 1.0)
        assert abs(a - np.cosh(1.0)) < 1e-15
        assert abs(b - np.sinh(1.0)) < 1e-15

    @pytest.mark.parametrize("m,kappa", [
        (const_curv_pos(2.0), 0.25),
        (const_curv_neg(1.6), -1.0 / 2.56),
    ])
    def test_traced_fields_match_closed_forms(self, m, kappa):
        """Integrated (a, b) follow cos/sin resp. cosh/sinh profiles."""
        path = trace_from_influx(m, 1.1, -0.5, DT)
        pair = jacobi_fields(m, path)
        a_ref, b_ref = const_curvature_ab(kappa, pair.ts)
        assert np.abs(pair.a - a_ref).max() < 1e-6
        assert np.abs(pair.b - b_ref).max() < 1e-6

    def test_wronskian_stays_unit(self):
        rng = np.random.default_rng(21)
        for m in (euclidean(), const_curv_pos(2.0), const_curv_neg(1.6),
                  lens(0.6)):
            for _ in range(5):
                beta = rng.uniform(0.0, 2 * np.pi)
                alpha = rng.uniform(-1.3, 1.3)
                pair = jacobi_fields(m, trace_from_influx(m, beta, alpha, DT))
                assert np.abs(pair.wronskian - 1.0).max() < 1e-6


class TestKernelClosedForms:
    """On constant-curvature discs the kernel collapses to a closed form:
    the angular derivative of a/b drops by symmetry and (a-1)/b^2 telescopes
    to -kappa/(1 + cos(pt)) resp. |kappa|/(1 + cosh(pt))."""

    def test_positive_curvature(self):
        m = const_curv_pos(2.0)
        kappa, p, k = 0.25, 0.5, 3
        ts, qob = kernel_qk(m, 0.4, 0.2, k, DT, 1e-4)
        turn = traced_turn(m, 0.4, 0.2, len(ts))
        nn = min(len(ts), len(turn))
        ref = (-1j * k * kappa / (1.0 + np.cos(p * ts[:nn]))
               * np.exp(1j * k * turn[:nn]))
        assert np.abs(qob[:nn] - ref).max() < 1e-3

    def test_negative_curvature(self):
        m = const_curv_neg(1.6)
        kappa = 1.0 / 2.56
        p, k = 1.0 / 1.6, 1
        ts, qob = kernel_qk(m, 2.0, -0.6, k, DT, 1e-4)
        turn = traced_turn(m, 2.0, -0.6, len(ts))
        nn = min(len(ts), len(turn))
        ref = (1j * k * kappa / (1.0 + np.cosh(p * ts[:nn]))
               * np.exp(1j * k * turn[:nn]))
        assert np.abs(qob[:nn] - ref).max() < 1e-3


class TestKernelRegularity:
    def test_no_blowup_at_ray_start(self):
        """q_k/b stays bounded as t -> 0 even though 1/b diverges."""
        ts, qob = kernel_qk(lens(0.8), 0.3, -0.4, 3, DT, 1e-4)
        assert np.all(np.isfinite(qob))
        early = np.abs(qob[:20]).max()
        mid = np.abs(qob[len(ts) // 3: 2 * len(ts) // 3]).max()
        assert early <= 10.0 * max(mid, 1e-12)

    def test_conjugate_point_detected(self):
        """A strong lens focuses the fan inside the disc; the signed check
        on b must refuse to assemble a kernel across the caustic."""
        with pytest.raises(SingularB):
            kernel_qk(lens(3.0), 0.0, 0.05, 3, DT, 1e-4)


class TestDirectionFieldRoutes:
    """Derivatives of the direction field alpha(t) of the geodesic flow can
    be read off the Jacobi pair.  The transverse route resolves the shift
    against the opposite unit normal from the one the pair is referred to,
    which costs a single overall sign; the fiberwise route carries none."""

    def setup_method(self):
        self.m = lens(0.8)
        self.x0, self.y0, self.th0 = 0.2, -0.3, 1.1
        self.n = 1200

    def _trace(self, x0, y0, th0):
        out = _trace_jacobi_raw(self.m, x0, y0, th0, DT, 5000)
        xs, ys, cs, ss, a, ad, b, bd, _tau, _tr = out
        th = np.unwrap(np.arctan2(ss, cs))
        th += 2 * np.pi * np.round((th0 - th[0]) / (2 * np.pi))
        return xs, ys, th, a, ad, b, bd

    def _dt_lambda(self, xs, ys, th):
        lam = lambda_at(self.m, xs, ys)
        lx, ly = grad_lambda_at(self.m, xs, ys)
        return np.exp(-lam) * (np.cos(th) * lx + np.sin(th) * ly)

    def test_transverse_route(self):
        n = self.n
        xs, ys, th, a, ad, b, bd = self._trace(self.x0, self.y0, self.th0)
        ref = ad[:n] - a[:n] * self._dt_lambda(xs[:n], ys[:n], th[:n])

        eps = 1e-6
        lam0 = float(lambda_at(self.m, self.x0, self.y0))
        lx0, ly0 = (float(v) for v in
                    grad_lambda_at(self.m, self.x0, self.y0))
        em0 = math.exp(-lam0)
        c0, s0 = math.cos(self.th0), math.sin(self.th0)
        sx, sy = em0 * s0, -em0 * c0
        sth = em0 * (c0 * lx0 + s0 * ly0)
        _, _, thp, *_r = self._trace(self.x0 + eps * sx, self.y0 + eps * sy,
                                     self.th0 + eps * sth)
        _, _, thm, *_r = self._trace(self.x0 - eps * sx, self.y0 - eps * sy,
                                     self.th0 - eps * sth)
        nn = min(n, len(thp), len(thm))
        fd = (thp[:nn] - thm[:nn]) / (2 * eps)
        assert np.abs(fd + ref[:nn]).max() < 1e-6

    def test_fiber_route(self):
        n = self.n
        xs, ys, th, a, ad, b, bd = self._trace(self.x0, self.y0, self.th0)
        ref = bd[:n] - b[:n] * self._dt_lambda(xs[:n], ys[:n], th[:n])

        eps = 1e-6
        _, _, thp, *_r = self._trace(self.x0, self.y0, self.th0 + eps)
        _, _, thm, *_r = self._trace(self.x0, self.y0, self.th0 - eps)
        nn = min(n, len(thp), len(thm))
        fd = (thp[:nn] - thm[:nn]) / (2 * eps)
        assert np.abs(fd - ref[:nn]).max() < 1e-6


class TestPolarAreaQuadrature:
    def test_flat_disc_gaussian_mass(self):
        """Geodesic polar quadrature recovers the plain area integral."""
        bumps = default_bumps()
        got = polar_area_integral(euclidean(),
                                  lambda xs, ys: bumps_value(bumps, xs, ys),
                                  0.0, 0.0)
        want = sum(bp.amp * 2 * np.pi * bp.width ** 2 for bp in bumps)
        assert abs(got - want) / want < 1e-3

    def test_curved_disc_matches_weighted_grid_sum(self):
        m = const_curv_pos(2.0)
        bumps = default_bumps()
        got = polar_area_integral(m,
                                  lambda xs, ys: bumps_value(bumps, xs, ys),
                                  0.15, -0.1)
        n = 400
        h = 2.0 / n
        xs = -1.0 + (np.arange(n) + 0.5) * h
        xx, yy = np.meshgrid(xs, xs, indexing="ij")
        inside = xx * xx + yy * yy < 1.0
        weight = np.exp(2.0 * lambda_at(m, xx, yy))
        want = float((bumps_value(bumps, xx, yy) * weight)[inside].sum()) * h * h
        assert abs(got - want) / abs(want) < 1e-2


class TestKernelDump:
    def test_csv_layout_and_wronskian_column(self, tmp_path):
        out = tmp_path / "kernel.csv"
        dump_kernel_csv(const_curv_pos(2.0), 0.2, 0.1, 2, 1e-2, 1e-3, out)
        with open(out, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "a", "b", "wronskian",
                           "qk_over_b_re", "qk_over_b_im"]
        body = np.array([[float(v) for v in row] for row in rows[1:]])
        assert body.shape[1] == 6
        assert abs(body[0, 0] - 1e-2) < 1e-15
        assert np.abs(np.diff(body[:, 0]) - 1e-2).max() < 1e-12
        assert np.abs(body[:, 3] - 1.0).max() < 1e-9


class TestTwoRoutesToWk:
    def test_kernel_and_transport_evaluations_agree(self):
        """Polar kernel quadrature and trace-differentiate-project agree on
        a smooth phantom to within the fan discretization."""
        m = const_curv_pos(2.0)
        f = make_phantom(PhantomSpec(
            bumps=(GaussianBump(-0.3, 0.25, 1.0, 0.15),
                   GaussianBump(0.25, 0.3, 0.8, 0.15)), n=64))
        k = 2
        wt = apply_Wk_transport(m, f, k)
        for x, y in [(0.2, 0.1), (-0.3, 0.25)]:
            ix = int(np.argmin(np.abs(f.xs - x)))
            iy = int(np.argmin(np.abs(f.xs - y)))
            via_transport = wt.values[ix, iy]
            via_kernel = apply_Wk_kernel(m, f, k,
                                         float(f.xs[ix]), float(f.xs[iy]))
            denom = max(abs(via_transport), abs(via_kernel))
            assert abs(via_kernel - via_transport) / denom < 0.05

    def test_flat_norm_far_below_curved_norm(self):
        flat = wk_norm_estimate(euclidean(), k=3, n=32, iters=2, seed=0)
        curved = wk_norm_estimate(const_curv_pos(1.2), k=3, n=32, iters=2,
                                  seed=0)
        assert flat < 0.5 * curved
