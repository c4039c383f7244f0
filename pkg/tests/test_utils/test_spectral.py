"""Tests for the FFT plumbing."""
import numpy as np
import pytest

from magnls.utils import spectral


class TestSpectral:
    """Test cases for transforms, wavenumbers and sums."""

    def test_workers(self):
        """Test the worker count is clamped to at least one."""
        previous = spectral.get_workers()
        try:
            spectral.set_workers(0)
            assert spectral.get_workers() == 1
            spectral.set_workers(3)
            assert spectral.get_workers() == 3
        finally:
            spectral.set_workers(previous)

    def test_round_trip(self):
        """Test ifftn inverts fftn."""
        values = np.random.default_rng(1).normal(size=(8, 8, 8)) + 0j
        np.testing.assert_allclose(spectral.ifftn(spectral.fftn(values)), values, atol=1e-14)

    def test_wavenumbers(self):
        """Test pi m / L ordering with the Nyquist entry negative."""
        k = spectral.wavenumbers(8, 2.0)
        np.testing.assert_allclose(k, np.pi / 2.0 * np.array([0, 1, 2, 3, -4, -3, -2, -1]))

    def test_total_keeps_dtype(self):
        """Test complex sums stay complex."""
        result = spectral.total(np.array([1 + 1j, 2 - 1j]))
        assert result == pytest.approx(3 + 0j)
