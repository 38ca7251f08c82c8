"""Uniformly sampled traces and the small set of filters shared by the chain."""

from __future__ import annotations

from dataclasses import dataclass
from math import exp, pi, tan

import numpy as np
from scipy import signal as sps


@dataclass(frozen=True)
class SignalTrace:
    """Real waveform sampled at ``sample_rate`` starting at ``start_time``."""

    sample_rate: float
    values: np.ndarray
    start_time: float = 0.0

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def __len__(self):
        return self.values.size

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.values.size) / self.sample_rate

    @property
    def duration(self) -> float:
        return self.values.size / self.sample_rate

    def with_values(self, values) -> "SignalTrace":
        return SignalTrace(self.sample_rate, values, self.start_time)


@dataclass(frozen=True)
class IQTrace:
    """Complex baseband trace, ``i + 1j*q`` per sample."""

    sample_rate: float
    samples: np.ndarray
    start_time: float = 0.0

    def __post_init__(self):
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))

    def __len__(self):
        return self.samples.size

    @property
    def i(self) -> np.ndarray:
        return self.samples.real

    @property
    def q(self) -> np.ndarray:
        return self.samples.imag

    @property
    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.samples.size) / self.sample_rate

    def with_samples(self, samples) -> "IQTrace":
        return IQTrace(self.sample_rate, samples, self.start_time)


def biquad_lowpass(f_cutoff: float, q_factor: float, sample_rate: float):
    """(b, a) of ``w0^2 / (s^2 + w0/Q s + w0^2)`` via bilinear transform prewarped at ``f_cutoff``."""
    w = tan(pi * f_cutoff / sample_rate)
    w2 = w * w
    norm = 1.0 + w / q_factor + w2
    b0 = w2 / norm
    b = np.array([b0, 2.0 * b0, b0])
    a = np.array([1.0, 2.0 * (w2 - 1.0) / norm, (1.0 - w / q_factor + w2) / norm])
    return b, a


def onepole_lowpass(f_cutoff: float, sample_rate: float):
    """(b, a) of ``w0 / (s + w0)`` by exact exponential (step-invariant) update.

    Unlike the bilinear map this keeps the continuous-time noise bandwidth
    (pi/2 f_cutoff) when driven by sampled white noise.
    """
    a1 = exp(-2.0 * pi * f_cutoff / sample_rate)
    return np.array([1.0 - a1]), np.array([1.0, -a1])


def lfilter(b, a, x):
    # zero initial conditions
    return sps.lfilter(b, a, np.asarray(x))


def nrmse(estimate, reference) -> float:
    """RMS error normalized by the reference's peak-to-peak range."""
    estimate = np.asarray(estimate, dtype=float)
    reference = np.asarray(reference, dtype=float)
    span = float(np.ptp(reference))
    if span == 0.0:
        return float("inf") if np.any(estimate != reference) else 0.0
    return float(np.sqrt(np.mean((estimate - reference) ** 2)) / span)
