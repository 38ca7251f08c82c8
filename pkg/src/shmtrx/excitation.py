"""Excitation burst design: windowed reference tone, 4-bit differential PWM,
the off-chip LC low-pass and the least-squares pulse-width search."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from math import pi, sqrt

import numpy as np

from .signals import SignalTrace, biquad_lowpass, lfilter, nrmse

MAX_WIDTH = 15
BASELINE_UP_WIDTHS = (1, 5, 7, 3)
BASELINE_DOWN_WIDTHS = (3, 7, 5, 1)


class Window(str, enum.Enum):
    HAMMING = "hamming"
    HANN = "hann"
    RECT = "rect"


class FrameError(ValueError):
    """Frame model cannot hold the requested pulses."""


@dataclass(frozen=True)
class ExcitationSpec:
    f_center: float
    n_cycles: int = 5
    amplitude_pp: float = 10.0
    window: Window = Window.HAMMING

    def __post_init__(self):
        if not self.f_center > 0:
            raise ValueError("f_center must be positive")
        if self.n_cycles < 1:
            raise ValueError("n_cycles must be >= 1")
        if not self.amplitude_pp >= 0:
            raise ValueError("amplitude_pp must be non-negative")
        object.__setattr__(self, "window", Window(self.window))

    @property
    def duration(self) -> float:
        return self.n_cycles / self.f_center


@dataclass(frozen=True)
class LcFilterSpec:
    f_cutoff: float
    q_factor: float = 1.0 / sqrt(2.0)

    def __post_init__(self):
        if not (self.f_cutoff > 0 and self.q_factor > 0):
            raise ValueError("f_cutoff and q_factor must be positive")

    @classmethod
    def default_for(cls, f_center: float) -> "LcFilterSpec":
        return cls(1.5 * f_center, 1.0 / sqrt(2.0))

    def peak_gain(self) -> float:
        """max |H(jw)| of the second-order low-pass."""
        q = self.q_factor
        if q <= 1.0 / sqrt(2.0):
            return 1.0
        return q / sqrt(1.0 - 1.0 / (4.0 * q * q))

    def response(self, f) -> np.ndarray:
        r = np.asarray(f, dtype=float) / self.f_cutoff
        return 1.0 / (1.0 - r * r + 1j * r / self.q_factor)


@dataclass(frozen=True)
class PwmProgram:
    """Pulse schedule in synthesizer periods; (start, width) pairs per side."""

    t_syn: float
    pulses_up: tuple = ()
    pulses_down: tuple = ()
    rail: float = 5.0

    def __post_init__(self):
        if not self.t_syn > 0:
            raise ValueError("t_syn must be positive")
        up = tuple((int(s), int(w)) for s, w in self.pulses_up)
        down = tuple((int(s), int(w)) for s, w in self.pulses_down)
        object.__setattr__(self, "pulses_up", up)
        object.__setattr__(self, "pulses_down", down)
        for side in (up, down):
            for s, w in side:
                if not 0 <= w <= MAX_WIDTH:
                    raise ValueError(f"width {w} does not fit in 4 bits")
                if s < 0:
                    raise ValueError("pulse start must be non-negative")
            spans = [(s, s + w) for s, w in side if w > 0]
            if [s for s, _ in spans] != sorted(s for s, _ in spans):
                raise ValueError("pulses must be start-sorted")
            for (_, e0), (s1, _) in zip(spans, spans[1:]):
                if s1 < e0:
                    raise ValueError("pulses on one side overlap")
        for (su, wu), (sd, wd) in itertools.product(up, down):
            if wu and wd and su < sd + wd and sd < su + wu:
                raise ValueError("up and down pulses overlap in time")

    @property
    def end(self) -> int:
        ends = [s + w for s, w in self.pulses_up + self.pulses_down]
        return max(ends, default=0)

    @property
    def widths_up(self):
        return tuple(w for _, w in self.pulses_up)

    @property
    def widths_down(self):
        return tuple(w for _, w in self.pulses_down)

    def to_text(self) -> str:
        lines = [f"t_syn_s {self.t_syn:.9g}", f"rail_v {self.rail:.9g}"]
        lines += [f"up {s} {w}" for s, w in self.pulses_up]
        lines += [f"down {s} {w}" for s, w in self.pulses_down]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PwmProgram":
        t_syn, rail, up, down = None, 5.0, [], []
        for line in text.splitlines():
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            key = parts[0]
            if key == "t_syn_s":
                t_syn = float(parts[1])
            elif key == "rail_v":
                rail = float(parts[1])
            elif key in ("up", "down"):
                (up if key == "up" else down).append((int(parts[1]), int(parts[2])))
            else:
                raise ValueError(f"unknown program line: {line!r}")
        if t_syn is None:
            raise ValueError("program text lacks t_syn_s")
        return cls(t_syn, tuple(up), tuple(down), rail)


def window_values(kind: Window, x):
    """Window over the normalized burst coordinate x in [0, 1]."""
    kind = Window(kind)
    if kind is Window.HAMMING:
        return 0.54 - 0.46 * np.cos(2 * pi * x)
    if kind is Window.HANN:
        return 0.5 - 0.5 * np.cos(2 * pi * x)
    return np.ones_like(x)


def reference_waveform(spec: ExcitationSpec, sample_rate: float, duration: float | None = None) -> SignalTrace:
    """Windowed tone burst starting at t = 0; zero after the burst.

    ``duration`` pads the trace beyond the burst (default: burst only,
    including the sample at the closing zero crossing).
    """
    if sample_rate < 20 * spec.f_center:
        raise ValueError("sample_rate must be at least 20 * f_center")
    burst = spec.duration
    n = int(round(burst * sample_rate)) + 1
    if duration is not None:
        n = max(n, int(round(duration * sample_rate)))
    t = np.arange(n) / sample_rate
    inside = t <= burst * (1 + 1e-12)
    x = np.clip(t / burst, 0.0, 1.0)
    s = 0.5 * spec.amplitude_pp * window_values(spec.window, x) * np.sin(2 * pi * spec.f_center * t)
    return SignalTrace(sample_rate, np.where(inside, s, 0.0))


def pwm_waveform(program: PwmProgram, sample_rate: float, n_samples: int | None = None) -> SignalTrace:
    """Three-level differential output rail * (up - down).

    Transition times are rounded to the nearest sample; sample i holds the
    level at t = i / sample_rate.
    """
    if sample_rate < 8.0 / program.t_syn:
        raise ValueError("sample_rate must be at least 8 / t_syn")
    n = int(round(program.end * program.t_syn * sample_rate))
    if n_samples is not None:
        n = max(n, n_samples)
    n = max(n, 1)
    levels = np.zeros(n)
    for sign, side in ((1.0, program.pulses_up), (-1.0, program.pulses_down)):
        for s, w in side:
            a = int(round(s * program.t_syn * sample_rate))
            b = int(round((s + w) * program.t_syn * sample_rate))
            levels[a:b] += sign
    return SignalTrace(sample_rate, program.rail * levels)


def apply_lc_filter(trace: SignalTrace, lc: LcFilterSpec) -> SignalTrace:
    """Second-order LC low-pass (bilinear, prewarped at the cutoff)."""
    if trace.sample_rate < 10 * lc.f_cutoff:
        raise ValueError("sample_rate must be at least 10 * f_cutoff")
    b, a = biquad_lowpass(lc.f_cutoff, lc.q_factor, trace.sample_rate)
    return trace.with_values(lfilter(b, a, trace.values))


def fourier_component(trace: SignalTrace, f0: float) -> complex:
    """Complex amplitude of f0 over the longest whole number of periods."""
    n_periods = int(np.floor(trace.duration * f0 + 1e-9))
    if n_periods < 3:
        raise ValueError("trace must span at least 3 periods of f0")
    m = int(round(n_periods / f0 * trace.sample_rate))
    m = min(m, len(trace))
    t = trace.times[:m]
    return complex(2.0 / m * np.sum(trace.values[:m] * np.exp(-2j * pi * f0 * t)))


def fundamental_amplitude(trace: SignalTrace, f0: float) -> float:
    """Zero-to-peak amplitude of the f0 Fourier component."""
    return abs(fourier_component(trace, f0))


# -- least-squares pulse-width search ---------------------------------------


@dataclass(frozen=True)
class FrameModel:
    """Where the PWM pulses sit relative to the carrier.

    Pulse i on the up side is centered in the i-th positive carrier
    half-cycle counted from ``start_cycle``; down pulses sit in the negative
    half-cycles.  Times are in synthesizer periods.
    """

    pulses_per_side: int = 4
    carrier_ticks: int = 16
    start_cycle: int = 0

    def __post_init__(self):
        if self.pulses_per_side < 0 or self.start_cycle < 0:
            raise FrameError("pulse count and start cycle must be non-negative")
        if self.carrier_ticks < 2 or self.carrier_ticks % 2:
            raise FrameError("carrier_ticks must be an even number >= 2")

    @property
    def slot_ticks(self) -> int:
        return self.carrier_ticks // 2

    @property
    def max_width(self) -> int:
        return min(MAX_WIDTH, self.slot_ticks)

    def slot_start(self, side: str, i: int) -> int:
        half = 2 * (self.start_cycle + i) + (0 if side == "up" else 1)
        return half * self.slot_ticks

    def program(self, widths_up, widths_down, t_syn: float, rail: float = 5.0) -> PwmProgram:
        if len(widths_up) != self.pulses_per_side or len(widths_down) != self.pulses_per_side:
            raise FrameError("width vectors must match pulses_per_side")
        pulses = {}
        for side, widths in (("up", widths_up), ("down", widths_down)):
            out = []
            for i, w in enumerate(widths):
                w = int(w)
                if w > self.slot_ticks:
                    raise FrameError(
                        f"{side} pulse {i} width {w} exceeds its {self.slot_ticks}-tick slot"
                    )
                if not 0 <= w <= MAX_WIDTH:
                    raise FrameError(f"{side} pulse {i} width {w} outside 0..{MAX_WIDTH}")
                out.append((self.slot_start(side, i) + (self.slot_ticks - w) // 2, w))
            pulses[side] = tuple(out)
        return PwmProgram(t_syn, pulses["up"], pulses["down"], rail)


@dataclass
class PwmDesign:
    program: PwmProgram
    error: float
    widths: tuple
    sweep_errors: list = field(default_factory=list)


class PwmObjective:
    """Mean-squared error between the filtered PWM and the reference burst.

    Both waveforms are scaled to unit fundamental amplitude at f_center.
    The reference is delayed by the LC filter's phase delay at f_center so
    the comparison measures shape, not the filter's latency.  The error is
    taken over the burst plus one carrier period of ring-down on a grid of
    64 samples per carrier period.
    """

    GRID_PER_CYCLE = 64

    def __init__(self, spec: ExcitationSpec, frame: FrameModel, lc: LcFilterSpec, t_syn: float | None = None):
        self.spec, self.frame, self.lc = spec, frame, lc
        self.t_syn = t_syn if t_syn is not None else 1.0 / (spec.f_center * frame.carrier_ticks)
        fc = spec.f_center
        # simulate at an integer number of samples per tick, >= 8
        self.ticks_fs = max(8, int(np.ceil(self.GRID_PER_CYCLE * 2 / frame.carrier_ticks)))
        self.fs = self.ticks_fs / self.t_syn
        self.horizon = (spec.n_cycles + 1) / fc
        self.n_sim = int(round(self.horizon * self.fs))
        self.b, self.a = biquad_lowpass(lc.f_cutoff, lc.q_factor, self.fs)

        grid = np.arange(int(round(self.horizon * fc * self.GRID_PER_CYCLE))) / (fc * self.GRID_PER_CYCLE)
        self.grid = grid
        self.delay = -np.angle(lc.response(fc)) / (2 * pi * fc)
        unit = ExcitationSpec(fc, spec.n_cycles, 2.0, spec.window)
        ref = _burst_at(unit, grid - self.delay)
        self.ref_unit = ref / _fundamental_on_grid(ref, grid, fc)
        self.zero_reference = spec.amplitude_pp == 0

    def filtered(self, widths_up, widths_down) -> np.ndarray:
        prog = self.frame.program(widths_up, widths_down, self.t_syn)
        x = pwm_waveform(prog, self.fs, self.n_sim).values[: self.n_sim]
        y = lfilter(self.b, self.a, x)
        t_sim = np.arange(self.n_sim) / self.fs
        return np.interp(self.grid, t_sim, y)

    def normalized(self, widths_up, widths_down) -> np.ndarray:
        y = self.filtered(widths_up, widths_down)
        amp = _fundamental_on_grid(y, self.grid, self.spec.f_center)
        return y / amp if amp > 0 else y

    def __call__(self, widths) -> float:
        if self.zero_reference:
            return float(np.mean(self.normalized(*self.split(widths)) ** 2)) if any(widths) else 0.0
        n = self.frame.pulses_per_side
        y = self.normalized(widths[:n], widths[n:])
        return float(np.mean((y - self.ref_unit) ** 2))

    def split(self, widths):
        n = self.frame.pulses_per_side
        return tuple(widths[:n]), tuple(widths[n:])

    def nrmse(self, widths) -> float:
        return nrmse(self.normalized(*self.split(widths)), self.ref_unit)


def _burst_at(spec: ExcitationSpec, t):
    x = t / spec.duration
    inside = (x >= 0) & (x <= 1)
    w = window_values(spec.window, np.clip(x, 0, 1))
    return np.where(inside, 0.5 * spec.amplitude_pp * w * np.sin(2 * pi * spec.f_center * t), 0.0)


def _fundamental_on_grid(y, grid, f0) -> float:
    m = int(round(np.floor((grid[-1] + grid[1] - grid[0]) * f0 + 1e-9) / f0 / (grid[1] - grid[0])))
    return float(abs(2.0 / m * np.sum(y[:m] * np.exp(-2j * pi * f0 * grid[:m]))))


def optimize_pulse_widths(
    spec: ExcitationSpec,
    frame: FrameModel | None = None,
    lc: LcFilterSpec | None = None,
    t_syn: float | None = None,
    restarts: int = 8,
    seed: int = 0,
) -> PwmDesign:
    """Integer width search: coordinate descent over each pulse's full width
    range, iterated to a fixed point, from ``restarts`` random starts.

    Ties between equal errors go to the lexicographically smallest vector.
    """
    frame = frame or FrameModel()
    lc = lc or LcFilterSpec.default_for(spec.f_center)
    n = 2 * frame.pulses_per_side
    if frame.pulses_per_side and frame.max_width < 1:
        raise FrameError("slots too short for any pulse")
    objective = PwmObjective(spec, frame, lc, t_syn)
    if spec.amplitude_pp == 0 or n == 0:
        widths = (0,) * n
        prog = frame.program(widths[: n // 2], widths[n // 2:], objective.t_syn)
        return PwmDesign(prog, 0.0, widths, [0.0])

    cache = {}

    def cost(w):
        if w not in cache:
            cache[w] = objective(w)
        return cache[w]

    rng = np.random.default_rng(seed)
    best = None
    all_sweeps = []
    for _ in range(restarts):
        w = tuple(int(v) for v in rng.integers(0, frame.max_width + 1, size=n))
        err = cost(w)
        sweeps = [err]
        while True:
            changed = False
            for i in range(n):
                cands = [w[:i] + (v,) + w[i + 1:] for v in range(frame.max_width + 1)]
                c_best = min(cands, key=lambda c: (cost(c), c))
                if cost(c_best) < err:
                    w, err, changed = c_best, cost(c_best), True
            sweeps.append(err)
            if not changed:
                break
        all_sweeps.append(sweeps)
        if best is None or (err, w) < best:
            best = (err, w)
    err, w = best
    prog = frame.program(w[: n // 2], w[n // 2:], objective.t_syn, rail=spec.amplitude_pp / 2)
    return PwmDesign(prog, err, w, all_sweeps)


def baseline_widths_error(spec: ExcitationSpec, frame: FrameModel | None = None, lc: LcFilterSpec | None = None, t_syn=None) -> float:
    """Objective value of the fixed 1,5,7,3 baseline widths under the same model."""
    frame = frame or FrameModel()
    lc = lc or LcFilterSpec.default_for(spec.f_center)
    return PwmObjective(spec, frame, lc, t_syn)(BASELINE_UP_WIDTHS + BASELINE_DOWN_WIDTHS)
