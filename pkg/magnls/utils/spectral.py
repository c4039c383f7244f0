"""FFT plumbing shared by the field operators and the stepper."""
import logging
import os

import numpy as np
import scipy.fft as sfft

logger = logging.getLogger(__name__)

_workers = max(1, int(os.environ.get('MAGNLS_THREADS', '1') or 1))


def set_workers(count):
    """Set the number of threads scipy.fft may use for each transform."""
    global _workers
    _workers = max(1, int(count))
    logger.debug(f"FFT workers set to {_workers}")


def get_workers():
    return _workers


def fftn(values):
    return sfft.fftn(values, workers=_workers)


def ifftn(values):
    return sfft.ifftn(values, workers=_workers)


def fft_axis(values, axis):
    return sfft.fft(values, axis=axis, workers=_workers)


def ifft_axis(values, axis):
    return sfft.ifft(values, axis=axis, workers=_workers)


def wavenumbers(n, half_width):
    """Angular wavenumbers pi*m/L in standard DFT ordering."""
    spacing = 2.0 * half_width / n
    return 2.0 * np.pi * sfft.fftfreq(n, d=spacing)


def total(values):
    """Deterministic pairwise sum of a real or complex array."""
    return np.sum(values, dtype=values.dtype)
