"""Discrete Stockwell transform and spectrogram assembly.

The transform combines a Fourier magnitude scale with a Gaussian window
whose width scales inversely with frequency: wide at low rows (fine
frequency resolution) and narrow at high rows (fine time resolution). For a
length-N record the matrix holds rows n = 0..N/2 over N time columns; row n
corresponds to n*fs/N Hz. Row 0 carries the signal mean, the standard
completion of the voice that the continuous definition leaves singular.

Computed with one forward FFT plus one inverse FFT per row:

    S[tau, n] = sum_m X[(m + n) mod N] * exp(-2 pi^2 m^2 / n^2) * exp(+2j pi m tau / N)

with X the 1/N-normalized DFT of the record. The 1/N convention makes the
column average of every row equal the DFT coefficient at that row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class StMatrix:
    """Complex Stockwell matrix: (N/2 + 1) frequency rows x N time columns."""

    values: np.ndarray
    sampling_rate_hz: float

    @property
    def n_samples(self) -> int:
        return self.values.shape[1]

    @property
    def row_frequencies(self) -> np.ndarray:
        n = self.n_samples
        return np.arange(n // 2 + 1) * self.sampling_rate_hz / n


def stockwell(x: np.ndarray, sampling_rate_hz: float) -> StMatrix:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError("stockwell expects a one-dimensional signal")
    n = x.shape[0]
    if n < 8 or n % 2 != 0:
        raise ShapeError(f"signal length must be even and >= 8, got {n}")

    spectrum = np.fft.fft(x)
    m = np.arange(n)
    out = np.empty((n // 2 + 1, n), dtype=complex)
    out[0, :] = x.mean()
    for row in range(1, n // 2 + 1):
        gauss = np.exp(-2.0 * np.pi**2 * m**2 / row**2)
        out[row, :] = np.fft.ifft(np.roll(spectrum, -row) * gauss)
    return StMatrix(values=out, sampling_rate_hz=float(sampling_rate_hz))


def crop_magnitude(st: StMatrix) -> np.ndarray:
    """Magnitudes of rows 1..N/4: drops the zero row and the upper half band.

    The retained band is (0, fs/4]: 80 Hz at fs = 320 and 50 Hz at fs = 200,
    and exactly 256 rows for 1024-sample records.
    """
    n = st.n_samples
    if st.values.shape[0] != n // 2 + 1:
        raise ShapeError(f"expected {n // 2 + 1} rows, got {st.values.shape[0]}")
    return np.abs(st.values[1:n // 4 + 1, :])


def cropped_band_hz(st: StMatrix) -> tuple[float, float]:
    """(exclusive lower, inclusive upper) frequency edges of the cropped band."""
    return 0.0, st.sampling_rate_hz / 4.0


def block_downsample(mag: np.ndarray, freq_factor: int = 1, time_factor: int = 1) -> np.ndarray:
    """Block-mean reduction of a (freq x time) magnitude matrix."""
    if freq_factor < 1 or time_factor < 1:
        raise ShapeError("downsample factors must be >= 1")
    h, w = mag.shape
    if h % freq_factor or w % time_factor:
        raise ShapeError(f"shape {mag.shape} not divisible by ({freq_factor}, {time_factor})")
    return mag.reshape(h // freq_factor, freq_factor, w // time_factor, time_factor).mean(axis=(1, 3))


@dataclass(frozen=True)
class ChannelScaling:
    """Per-channel min/max fitted on training spectrograms."""

    mins: np.ndarray
    maxs: np.ndarray


def fit_channel_scaling(spectrograms) -> ChannelScaling:
    """Channel-wise extrema over an iterable of (freq x time x channels) stacks."""
    mins = None
    maxs = None
    for spec in spectrograms:
        lo = spec.min(axis=(0, 1))
        hi = spec.max(axis=(0, 1))
        mins = lo if mins is None else np.minimum(mins, lo)
        maxs = hi if maxs is None else np.maximum(maxs, hi)
    if mins is None:
        raise ShapeError("cannot fit scaling on an empty set")
    return ChannelScaling(mins=mins, maxs=maxs)


def apply_channel_scaling(spec: np.ndarray, scaling: ChannelScaling) -> np.ndarray:
    """Map each channel by the fitted min-max to [0, 1], clamping outliers."""
    span = np.where(scaling.maxs > scaling.mins, scaling.maxs - scaling.mins, 1.0)
    return np.clip((spec - scaling.mins) / span, 0.0, 1.0)


def assemble_spectrogram(per_channel, scaling: ChannelScaling | None = None) -> np.ndarray:
    """Stack per-channel magnitude matrices into freq x time x channels.

    With ``scaling`` given, each channel is mapped by the training-set
    min-max to [0, 1]; values outside the training range clamp to the edges.
    """
    mats = [np.asarray(m) for m in per_channel]
    if any(m.shape != mats[0].shape for m in mats):
        raise ShapeError("per-channel matrices must share one shape")
    spec = np.stack(mats, axis=-1)
    if scaling is not None:
        spec = apply_channel_scaling(spec, scaling)
    return spec
