"""Oscillation analysis: predicted beat periods, spectral peaks, extremes.

Field-free entanglement dynamics beats at the differences of vibrational
level spacings across channel pairs.  ``predict_periods`` enumerates those
frequencies with their amplitude weights from a coefficient snapshot;
``spectral_peaks`` extracts what a measured time series actually shows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .states import VibronicCoefficients


class NonuniformSamplingError(ValueError):
    """Spectral analysis requires a uniformly sampled series."""


@dataclass(frozen=True)
class PredictedPeriod:
    period: float
    weight: float


@dataclass(frozen=True)
class SpectralPeak:
    period: float
    amplitude: float


@dataclass(frozen=True)
class OscillationReport:
    """Predicted versus observed oscillation content of one series."""

    predicted: tuple
    background_weight: float
    peaks: tuple
    minimum: float
    maximum: float
    t_minimum: float
    t_maximum: float

    def as_dict(self) -> dict:
        return {
            "predicted_periods": [{"period": p.period, "weight": p.weight}
                                  for p in self.predicted],
            "background_weight": self.background_weight,
            "observed_peaks": [{"period": p.period, "amplitude": p.amplitude}
                               for p in self.peaks],
            "extremes": {"min": self.minimum, "max": self.maximum,
                         "t_min": self.t_minimum, "t_max": self.t_maximum},
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=2)


def predict_periods(coeffs: VibronicCoefficients, amplitude_threshold: float = 1e-4,
                    max_levels: int = 32) -> tuple[list[PredictedPeriod], float]:
    """Beat periods of the cross-channel overlap from a coefficient snapshot.

    For every channel pair, level quadruples (v, v', w, w') with all four
    magnitudes above ``amplitude_threshold`` contribute the frequency
    |(E_v - E_v') - (E_w - E_w')| with weight |c_v c_v' c_w c_w'| times the
    two vibrational overlaps.  Only the ``max_levels`` strongest levels per
    channel enter (weights beyond are negligible and quadruples grow fast).
    Degenerate zero-frequency terms are pooled into the returned background
    weight.  Periods come back sorted by weight, strongest first.
    """
    if coeffs.n_channels < 2:
        raise ValueError("period prediction needs at least two channels")
    selected = []
    for a in range(coeffs.n_channels):
        c = coeffs.coefficients[a]
        mags = np.abs(c)
        idx = np.nonzero(mags > amplitude_threshold)[0]
        if len(idx) > max_levels:
            idx = idx[np.argsort(mags[idx])[::-1][:max_levels]]
            idx.sort()
        selected.append(idx)

    accumulator: dict[float, float] = {}
    background = 0.0
    for a in range(coeffs.n_channels):
        for b in range(a + 1, coeffs.n_channels):
            ia, ib = selected[a], selected[b]
            if len(ia) == 0 or len(ib) == 0:
                continue
            ca = np.abs(coeffs.coefficients[a][ia])
            cb = np.abs(coeffs.coefficients[b][ib])
            ea = coeffs.basis_set.bases[a].energies[ia]
            eb = coeffs.basis_set.bases[b].energies[ib]
            s = np.abs(coeffs.basis_set.overlap(a, b)[np.ix_(ia, ib)])
            # delta[i, i', j, j'] = (E_i - E_i') - (E_j - E_j')
            da = np.subtract.outer(ea, ea)
            db = np.subtract.outer(eb, eb)
            delta = np.abs(da[:, :, None, None] - db[None, None, :, :])
            weight = (
                ca[:, None, None, None] * ca[None, :, None, None]
                * cb[None, None, :, None] * cb[None, None, None, :]
                * s[:, None, :, None] * s[None, :, None, :]
            )
            flat_d = delta.ravel()
            flat_w = weight.ravel()
            zero = flat_d < 1e-13
            background += float(flat_w[zero].sum())
            for d, w in zip(flat_d[~zero], flat_w[~zero]):
                key = round(float(d), 15)
                accumulator[key] = accumulator.get(key, 0.0) + float(w)

    predicted = [PredictedPeriod(period=2.0 * np.pi / d, weight=w)
                 for d, w in accumulator.items()]
    predicted.sort(key=lambda p: p.weight, reverse=True)
    return predicted, background


def spectral_peaks(times: np.ndarray, values: np.ndarray,
                   threshold_factor: float = 5.0) -> list[SpectralPeak]:
    """Dominant periods of a uniformly sampled series.

    The series is mean-subtracted, Hann-windowed to suppress leakage from
    slow envelopes, and Fourier transformed; local maxima of the magnitude
    spectrum above ``threshold_factor`` times the median are refined to
    sub-bin accuracy with a parabolic fit.  Returns peaks sorted by
    amplitude, strongest first.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 64:
        raise ValueError("need at least 64 samples for spectral analysis")
    steps = np.diff(times)
    dt = steps[0]
    if np.abs(steps - dt).max() > 1e-9 * abs(dt):
        raise NonuniformSamplingError("series is not uniformly sampled")

    window = np.hanning(len(values))
    x = (values - values.mean()) * window
    mag = np.abs(np.fft.rfft(x))
    # Amplitude of a unit cosine after Hann windowing.
    mag *= 2.0 / window.sum()
    floor = threshold_factor * float(np.median(mag[1:]))

    peaks = []
    for k in range(1, len(mag) - 1):
        if mag[k] > mag[k - 1] and mag[k] > mag[k + 1] and mag[k] > floor:
            denom = mag[k - 1] - 2.0 * mag[k] + mag[k + 1]
            shift = 0.0 if denom == 0 else 0.5 * (mag[k - 1] - mag[k + 1]) / denom
            freq = (k + shift) / (len(values) * dt)
            peaks.append(SpectralPeak(period=1.0 / freq, amplitude=float(mag[k])))
    peaks.sort(key=lambda p: p.amplitude, reverse=True)
    return peaks


def extremes(times: np.ndarray, values: np.ndarray) -> tuple[float, float, float, float]:
    """(min, max, t at min, t at max) of the sampled series."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        raise ValueError("empty series")
    i_min = int(np.argmin(values))
    i_max = int(np.argmax(values))
    return (float(values[i_min]), float(values[i_max]),
            float(times[i_min]), float(times[i_max]))


def build_report(coeffs: VibronicCoefficients | None, times: np.ndarray,
                 series: np.ndarray) -> OscillationReport:
    """Assemble the full oscillation report for one measure series."""
    if coeffs is not None and coeffs.n_channels >= 2:
        predicted, background = predict_periods(coeffs)
    else:
        predicted, background = [], 0.0
    try:
        peaks = spectral_peaks(times, series)
    except ValueError:
        peaks = []
    lo, hi, t_lo, t_hi = extremes(times, series)
    return OscillationReport(
        predicted=tuple(predicted),
        background_weight=background,
        peaks=tuple(peaks),
        minimum=lo, maximum=hi, t_minimum=t_lo, t_maximum=t_hi,
    )
