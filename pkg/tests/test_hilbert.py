"""Tests for parity extension and the shifted fiberwise Hilbert transform."""

import numpy as np
import pytest

from geoxray.geodesics import make_influx_grid
from geoxray.hilbert import (ExtendedFiberData, fiber_modes, parity_extend,
                             restrict_to_influx, shifted_hilbert, sigma_parity)
from geoxray.metrics import euclidean
from geoxray.phantoms import default_phantom
from geoxray.transforms import MISSING, forward_Ik


def synthetic_mode(n, l, beta_weight=None):
    """Full-fiber data e^{il alpha} (optionally modulated across beta)."""
    grid = make_influx_grid(n)
    e = ExtendedFiberData(grid=grid, values=np.zeros((2 * n, 2 * n),
                                                     dtype=complex), parity=1)
    w = np.ones(2 * n) if beta_weight is None else beta_weight
    e.values[:] = w[:, None] * np.exp(1j * l * e.alphas)[None, :]
    return e


class TestParity:
    def test_sigma_parity_values(self):
        assert sigma_parity(0) == 1
        assert sigma_parity(2) == 1
        assert sigma_parity(3) == -1
        assert sigma_parity(-5) == -1

    def test_extension_layout(self):
        """Second half of the fiber carries parity * first half."""
        f = default_phantom(16)
        s = forward_Ik(euclidean(), f, 1)
        for parity in (1, -1):
            e = parity_extend(s, parity)
            assert e.values.shape == (32, 32)
            assert np.array_equal(e.values[:, 16:], parity * e.values[:, :16])

    def test_extension_rejects_bad_parity(self):
        s = forward_Ik(euclidean(), default_phantom(16), 0)
        with pytest.raises(ValueError):
            parity_extend(s, 2)

    def test_missing_rays_zero_filled(self):
        s = forward_Ik(euclidean(), default_phantom(16), 0)
        s.values[3, 4] = MISSING
        e = parity_extend(s, 1)
        assert e.values[3, 4] == 0.0
        assert e.values[3, 16 + 4] == 0.0
        assert abs(e.missing_fraction[3] - 1.0 / 16) < 1e-15
        assert e.missing_fraction[0] == 0.0

    def test_restrict_round_trip(self):
        s = forward_Ik(euclidean(), default_phantom(16), 2)
        e = parity_extend(s, 1)
        assert np.array_equal(restrict_to_influx(e), s.values)


class TestShiftedHilbert:
    """Multiplier action -i sgn(l - k) on pure fiber modes."""

    def test_mode_below_shift(self):
        e = synthetic_mode(16, l=1)
        out = shifted_hilbert(e, k=3)
        assert np.max(np.abs(out.values - 1j * e.values)) < 1e-12

    def test_mode_above_shift(self):
        e = synthetic_mode(16, l=5)
        out = shifted_hilbert(e, k=3)
        assert np.max(np.abs(out.values + 1j * e.values)) < 1e-12

    def test_mode_at_shift_annihilated(self):
        e = synthetic_mode(16, l=3)
        out = shifted_hilbert(e, k=3)
        assert np.max(np.abs(out.values)) < 1e-12

    def test_classical_transform_on_constant(self):
        """H_(0) kills constants (the sgn(0) = 0 convention)."""
        e = synthetic_mode(16, l=0)
        out = shifted_hilbert(e, k=0)
        assert np.max(np.abs(out.values)) < 1e-13

    def test_negative_modes(self):
        e = synthetic_mode(16, l=-4)
        out = shifted_hilbert(e, k=0)
        assert np.max(np.abs(out.values - 1j * e.values)) < 1e-12

    def test_beta_slices_independent(self):
        """The transform acts only along the fiber axis."""
        rng = np.random.default_rng(5)
        w = rng.standard_normal(32)
        e = synthetic_mode(16, l=2, beta_weight=w)
        out = shifted_hilbert(e, k=0)
        expected = -1j * e.values
        assert np.max(np.abs(out.values - expected)) < 1e-12

    def test_squares_to_minus_identity_off_mode_k(self):
        """H_(k)^2 = -(Id - P_k) on band-limited fiber data."""
        n = 16
        rng = np.random.default_rng(9)
        grid = make_influx_grid(n)
        vals = np.zeros((2 * n, 2 * n), dtype=complex)
        modes = {l: rng.normal() + 1j * rng.normal() for l in (-3, -1, 0, 2, 4)}
        e = ExtendedFiberData(grid=grid, values=vals, parity=1)
        for l, c in modes.items():
            vals += c * np.exp(1j * l * e.alphas)[None, :]
        k = 2
        twice = shifted_hilbert(shifted_hilbert(e, k), k)
        projected = modes[k] * np.exp(1j * k * e.alphas)[None, :]
        expected = -(e.values - projected)
        assert np.max(np.abs(twice.values - expected)) < 1e-12

    def test_shift_is_modulation_conjugate(self):
        """H_(k) u = e^{ik a} H_(0)(e^{-ik a} u) on random data."""
        n = 16
        rng = np.random.default_rng(17)
        grid = make_influx_grid(n)
        base = ExtendedFiberData(grid=grid, values=np.zeros((2 * n, 2 * n),
                                                            dtype=complex),
                                 parity=1)
        for l in range(-5, 6):
            c = rng.normal() + 1j * rng.normal()
            base.values += c * np.exp(1j * l * base.alphas)[None, :]
        k = 3
        direct = shifted_hilbert(base, k)
        mod = np.exp(-1j * k * base.alphas)[None, :]
        demodulated = ExtendedFiberData(grid=grid, values=base.values * mod,
                                        parity=1)
        routed = np.exp(1j * k * base.alphas)[None, :] * \
            shifted_hilbert(demodulated, 0).values
        assert np.max(np.abs(direct.values - routed)) < 1e-12

    def test_fiber_modes_are_integers(self):
        modes = fiber_modes(8)
        assert modes.dtype.kind == "i"
        assert set(modes) == set(range(-8, 8))
