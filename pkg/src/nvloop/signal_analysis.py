"""Discrete Fourier analysis of uniformly sampled real signals.

Provides one-sided magnitude spectra (mean removed, amplitude
normalized) and peak readout with parabolic frequency interpolation
and linearly interpolated full width at half maximum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, PreconditionError

WINDOWS = ("rectangular", "hann")


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled real signal."""

    samples: np.ndarray
    sample_period: float
    t0: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size < 2:
            raise PreconditionError("TimeSeries needs at least 2 samples")
        if not self.sample_period > 0:
            raise PreconditionError("sample_period must be > 0")
        object.__setattr__(self, "samples", samples)

    @property
    def duration(self) -> float:
        return self.samples.size * self.sample_period

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) * self.sample_period


@dataclass(frozen=True)
class Spectrum:
    """One-sided amplitude spectrum.

    ``bin_width`` is the intrinsic resolution 1/duration of the input;
    the frequency grid may be finer than that when the transform was
    zero padded (padding is cosmetic and does not sharpen real lines).
    """

    freqs: np.ndarray
    magnitudes: np.ndarray
    bin_width: float


@dataclass(frozen=True)
class SpectralPeak:
    frequency: float
    amplitude: float
    fwhm: float


def spectrum(ts: TimeSeries, window: str = "rectangular", pad_factor: int = 4) -> Spectrum:
    """One-sided magnitude spectrum of ``ts`` after mean removal.

    Magnitudes are normalized so a full-scale sinusoid of amplitude A
    at a bin center reads A.  ``pad_factor`` zero pads the transform
    for smoother interpolation of peak shapes.
    """
    if window not in WINDOWS:
        raise PreconditionError(f"window must be one of {WINDOWS}, got {window!r}")
    if pad_factor < 1:
        raise PreconditionError("pad_factor must be >= 1")
    x = ts.samples - ts.samples.mean()
    n = x.size
    if window == "hann":
        w = np.hanning(n)
        x = x * w
        gain = w.sum()
    else:
        gain = float(n)
    nfft = pad_factor * n
    raw = np.abs(np.fft.rfft(x, nfft))
    mags = 2.0 * raw / gain
    mags[0] *= 0.5
    if nfft % 2 == 0:
        mags[-1] *= 0.5
    freqs = np.fft.rfftfreq(nfft, ts.sample_period)
    return Spectrum(freqs=freqs, magnitudes=mags, bin_width=1.0 / (n * ts.sample_period))


def _interp_crossing(f0, m0, f1, m1, level):
    # linear interpolation of the frequency where the magnitude crosses level
    return f0 + (f1 - f0) * (m0 - level) / (m0 - m1)


def peak(spec: Spectrum, search_band: tuple[float, float]) -> SpectralPeak:
    """Strongest spectral line within ``search_band`` (f_lo, f_hi).

    The peak frequency is refined with a three-point parabola; the
    FWHM comes from linear interpolation at half maximum, walking
    outward from the peak (beyond the band edges if needed).
    """
    lo, hi = search_band
    if not lo < hi:
        raise PreconditionError("search_band must satisfy f_lo < f_hi")
    if lo < spec.freqs[0] - 1e-12 or hi > spec.freqs[-1] + 1e-12:
        raise PreconditionError("search_band lies outside the spectrum range")
    mask = (spec.freqs >= lo) & (spec.freqs <= hi)
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        raise PreconditionError("search_band contains no spectrum bins")
    k = idx[np.argmax(spec.magnitudes[idx])]
    mags = spec.magnitudes
    if k == 0 or k == mags.size - 1 or mags[k] < mags[k - 1] or mags[k] < mags[k + 1]:
        raise NumericalError("no local maximum inside the search band")

    df = spec.freqs[1] - spec.freqs[0]
    denom = mags[k - 1] - 2.0 * mags[k] + mags[k + 1]
    if denom < 0:
        shift = 0.5 * (mags[k - 1] - mags[k + 1]) / denom
        f_peak = spec.freqs[k] + shift * df
        amplitude = mags[k] - 0.25 * (mags[k - 1] - mags[k + 1]) * shift
    else:
        f_peak = float(spec.freqs[k])
        amplitude = float(mags[k])

    half = amplitude / 2.0
    i = k
    while i + 1 < mags.size and mags[i + 1] >= half:
        i += 1
    if i + 1 >= mags.size:
        raise NumericalError("half-maximum crossing not found above the peak")
    f_hi = _interp_crossing(spec.freqs[i], mags[i], spec.freqs[i + 1], mags[i + 1], half)
    i = k
    while i - 1 >= 0 and mags[i - 1] >= half:
        i -= 1
    if i - 1 < 0:
        raise NumericalError("half-maximum crossing not found below the peak")
    f_lo = _interp_crossing(spec.freqs[i], mags[i], spec.freqs[i - 1], mags[i - 1], half)
    return SpectralPeak(frequency=float(f_peak), amplitude=float(amplitude), fwhm=float(f_hi - f_lo))
