"""Pitch-catch measurements on a plate with an optional point scatterer."""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import ceil

import numpy as np

from .dispersion import DispersionCurve, Mode
from .excitation import ExcitationSpec, reference_waveform
from .signals import SignalTrace

FOOT = 0.3048
D_REF = 0.01


@dataclass(frozen=True)
class PlateScenario:
    """Plate rectangle [0, width] x [0, height] with transducers and damage.

    ``velocity`` is either a constant group velocity (m/s) or a
    :class:`DispersionCurve` of the selected mode.
    """

    transducers: np.ndarray
    excitation: ExcitationSpec
    velocity: float | DispersionCurve
    width: float = FOOT
    height: float = FOOT
    damage: tuple | None = None
    scatter_coeff: complex = 0.3
    mode: Mode = Mode.A0
    spreading_exponent: float = 0.5
    edge_reflections: bool = False
    sample_rate: float | None = None

    def __post_init__(self):
        tr = np.atleast_2d(np.asarray(self.transducers, dtype=float))
        object.__setattr__(self, "transducers", tr)
        object.__setattr__(self, "mode", Mode(self.mode))
        if tr.shape[1] != 2 or tr.shape[0] < 2:
            raise ValueError("transducers: need at least 2 (x, y) positions")
        if not (self.width > 0 and self.height > 0):
            raise ValueError("plate width and height must be positive")
        for i, p in enumerate(tr):
            if not self._inside(p):
                raise ValueError(f"transducer.{i}: position outside the plate")
        if self.damage is not None:
            object.__setattr__(self, "damage", tuple(float(v) for v in self.damage))
            if not self._inside(self.damage):
                raise ValueError("damage: position outside the plate")
        if abs(self.scatter_coeff) > 1:
            raise ValueError("damage.coeff: |scatter_coeff| must be <= 1")
        if isinstance(self.velocity, DispersionCurve):
            if self.velocity.mode is not self.mode:
                raise ValueError("velocity curve mode does not match scenario mode")
        elif not float(self.velocity) > 0:
            raise ValueError("vg_mps must be positive")

    def _inside(self, p) -> bool:
        return 0 <= p[0] <= self.width and 0 <= p[1] <= self.height

    @property
    def dispersive(self) -> bool:
        return isinstance(self.velocity, DispersionCurve)

    @property
    def group_velocity(self) -> float:
        """Narrowband group velocity at the excitation center frequency."""
        if self.dispersive:
            return self.velocity.interp_group_velocity(self.excitation.f_center)
        return float(self.velocity)

    def pairs(self):
        n = len(self.transducers)
        return [(i, j) for i in range(n) for j in range(n) if i != j]

    def without_damage(self) -> "PlateScenario":
        return replace(self, damage=None)


def distance(a, b) -> float:
    return float(np.hypot(a[0] - b[0], a[1] - b[1]))


def path_delay(scenario: PlateScenario, start, end) -> float:
    return distance(start, end) / scenario.group_velocity


def spreading(d: float, exponent: float = 0.5) -> float:
    return max(d, D_REF) ** -exponent


def _wavenumber(scenario: PlateScenario, freqs: np.ndarray) -> np.ndarray:
    omega = 2 * np.pi * freqs
    if not scenario.dispersive:
        return omega / float(scenario.velocity)
    curve = scenario.velocity
    # np.interp holds the edge values outside the sampled range
    cp = np.interp(freqs, curve.frequency, curve.phase_velocity)
    return omega / cp


def _slowest_velocity(scenario: PlateScenario) -> float:
    if scenario.dispersive:
        c = scenario.velocity
        return float(min(np.min(c.group_velocity), np.min(c.phase_velocity)))
    return float(scenario.velocity)


def propagate(trace: SignalTrace, dist: float, scenario: PlateScenario, n_out: int | None = None, coeff=1.0) -> SignalTrace:
    """Y(w) = X(w) A(d) exp(-j k(w) d) on a zero-padded FFT grid.

    ``coeff`` multiplies the spectrum of positive frequencies (a complex
    value shifts the phase of every component by arg(coeff)).
    """
    fs = trace.sample_rate
    if fs < 20 * scenario.excitation.f_center:
        raise ValueError("sample_rate must be at least 20 * f_center")
    if n_out is None:
        n_out = len(trace) + int(ceil(1.2 * dist / _slowest_velocity(scenario) * fs)) + 16
    n_fft = 1 << int(ceil(np.log2(2 * max(n_out, len(trace)))))
    spec = np.fft.rfft(trace.values, n_fft)
    freqs = np.fft.rfftfreq(n_fft, 1 / fs)
    k = _wavenumber(scenario, freqs)
    amp = spreading(dist, scenario.spreading_exponent)
    out = np.fft.irfft(coeff * amp * spec * np.exp(-1j * k * dist), n_fft)[:n_out]
    return SignalTrace(fs, out, trace.start_time)


@dataclass
class MeasurementSet:
    pairs: list
    baseline: dict
    damaged: dict
    sample_rate: float
    truth: tuple | None = None

    def __post_init__(self):
        for p in self.pairs:
            b, d = self.baseline[p], self.damaged[p]
            if b.sample_rate != d.sample_rate or len(b) != len(d):
                raise ValueError(f"pair {p}: baseline and damaged traces differ in rate or length")


def _mirrors(p, width, height):
    x, y = p
    return [(-x, y), (2 * width - x, y), (x, -y), (x, 2 * height - y)]


def excitation_trace(scenario: PlateScenario, sample_rate: float) -> SignalTrace:
    return reference_waveform(scenario.excitation, sample_rate)


def synthesize_measurements(scenario: PlateScenario, sample_rate: float | None = None) -> MeasurementSet:
    """Baseline and damaged traces for every ordered (tx, rx) pair."""
    fs = sample_rate or scenario.sample_rate
    if fs is None:
        raise ValueError("sample_rate not given")
    x = excitation_trace(scenario, fs)
    tr = scenario.transducers
    paths = []
    for i, j in scenario.pairs():
        direct = [distance(tr[i], tr[j])]
        if scenario.edge_reflections:
            direct += [distance(m, tr[j]) for m in _mirrors(tr[i], scenario.width, scenario.height)]
        scatter = None
        if scenario.damage is not None:
            scatter = distance(tr[i], scenario.damage) + distance(scenario.damage, tr[j])
        paths.append(((i, j), direct, scatter))
    longest = max(max(d) if s is None else max(max(d), s) for _, d, s in paths)
    n_out = len(x) + int(ceil(1.2 * longest / _slowest_velocity(scenario) * fs)) + 16

    baseline, damaged = {}, {}
    for pair, direct, scatter in paths:
        b = sum(propagate(x, d, scenario, n_out).values for d in direct)
        baseline[pair] = SignalTrace(fs, b)
        if scatter is not None and scenario.scatter_coeff != 0:
            r = propagate(x, scatter, scenario, n_out, coeff=scenario.scatter_coeff).values
            damaged[pair] = SignalTrace(fs, b + r)
        else:
            damaged[pair] = SignalTrace(fs, b.copy())
    return MeasurementSet(scenario.pairs(), baseline, damaged, fs, scenario.damage)


def circular_array(n: int, center, radius: float, phase: float = 0.0) -> np.ndarray:
    ang = phase + 2 * np.pi * np.arange(n) / n
    return np.column_stack([center[0] + radius * np.cos(ang), center[1] + radius * np.sin(ang)])
