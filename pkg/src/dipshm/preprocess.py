"""Record pre-processing: low-pass denoising, standardization, ZCA whitening.

The denoising filter is a 12th-order Chebyshev type-I low-pass applied
forward-backward (zero net phase). Each channel is then standardized to zero
mean and unit sample deviation, and finally the channels are decorrelated by
a ZCA whitening transform fitted on the training pool.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import DegenerateSignalError, NumericError, ShapeError


@dataclass(frozen=True)
class FilterSpec:
    order: int = 12
    passband_ripple_db: float = 1.0
    cutoff_hz: float | None = None    # None: 40% of Nyquist at design time

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("filter order must be positive")
        if self.passband_ripple_db <= 0:
            raise ValueError("passband ripple must be positive")


def default_cutoff_hz(sampling_rate_hz: float) -> float:
    return 0.4 * (sampling_rate_hz / 2.0)


def design_lowpass(spec: FilterSpec, sampling_rate_hz: float) -> np.ndarray:
    """Chebyshev type-I low-pass as second-order sections.

    Designed from the analog prototype through the bilinear transform with
    frequency prewarping; the cascaded biquad form keeps a 12th-order filter
    numerically well behaved.
    """
    cutoff = spec.cutoff_hz if spec.cutoff_hz is not None else default_cutoff_hz(sampling_rate_hz)
    if not 0.0 < cutoff < sampling_rate_hz / 2.0:
        raise ShapeError(f"cutoff {cutoff} Hz must lie in (0, Nyquist)")
    return signal.cheby1(spec.order, spec.passband_ripple_db, cutoff,
                         btype="low", output="sos", fs=sampling_rate_hz)


def sos_frequency_response(sos: np.ndarray, freqs_hz, sampling_rate_hz: float) -> np.ndarray:
    """Complex response of an SOS cascade, by direct polynomial evaluation
    of each biquad on the unit circle (independent of scipy's freqz)."""
    w = 2.0 * np.pi * np.asarray(freqs_hz, dtype=float) / sampling_rate_hz
    z_inv = np.exp(-1j * w)
    h = np.ones_like(z_inv, dtype=complex)
    for b0, b1, b2, a0, a1, a2 in np.atleast_2d(sos):
        h *= (b0 + b1 * z_inv + b2 * z_inv**2) / (a0 + a1 * z_inv + a2 * z_inv**2)
    return h


def apply_zero_phase(sos: np.ndarray, x: np.ndarray, order: int = 12) -> np.ndarray:
    """Forward-backward filtering with reflective edge padding of 3x order.

    The two passes cancel the phase response; the amplitude response is
    applied twice. Output length equals input length.
    """
    x = np.asarray(x, dtype=float)
    pad = 3 * order
    if x.shape[-1] <= pad:
        raise ShapeError(f"signal must be longer than {pad} samples for zero-phase filtering")
    return signal.sosfiltfilt(sos, x, axis=-1, padtype="even", padlen=pad)


def standardize(x: np.ndarray) -> np.ndarray:
    """(x - mean) / std with the N-1 sample deviation."""
    x = np.asarray(x, dtype=float)
    sd = x.std(ddof=1, axis=-1, keepdims=True)
    if np.any(sd == 0):
        raise DegenerateSignalError("constant signal cannot be standardized")
    return (x - x.mean(axis=-1, keepdims=True)) / sd


@dataclass(frozen=True)
class WhiteningTransform:
    """Symmetric channel-decorrelation matrix (the ZCA square root inverse)."""

    matrix: np.ndarray
    epsilon: float

    @property
    def channels(self) -> int:
        return self.matrix.shape[0]


def fit_zca(records, epsilon: float = 1e-8) -> WhiteningTransform:
    """Fit W = E diag((lambda + eps)^(-1/2)) E^T on the pooled channel covariance.

    ``records`` is an iterable of (channels x samples) arrays; all samples are
    pooled along time. ZCA is the unique whitening with a symmetric matrix,
    which keeps the whitened channels as close as possible to the originals.
    """
    pool = np.hstack([np.asarray(r, dtype=float) for r in records])
    n_ch, n_samp = pool.shape
    if n_ch < 2:
        raise ShapeError("whitening needs at least two channels")
    if n_samp <= n_ch:
        raise ShapeError("need more pooled samples than channels")
    cov = np.cov(pool)
    if not np.all(np.isfinite(cov)):
        raise NumericError("channel covariance is not finite")
    lam, vec = np.linalg.eigh(cov)
    w = vec @ np.diag(1.0 / np.sqrt(lam + epsilon)) @ vec.T
    w = 0.5 * (w + w.T)
    return WhiteningTransform(matrix=w, epsilon=epsilon)


def apply_whitening(transform: WhiteningTransform, record: np.ndarray) -> np.ndarray:
    """Mix channels by the whitening matrix; time samples stay independent."""
    record = np.asarray(record, dtype=float)
    if record.shape[0] != transform.channels:
        raise ShapeError(
            f"record has {record.shape[0]} channels, transform expects {transform.channels}"
        )
    return transform.matrix @ record
