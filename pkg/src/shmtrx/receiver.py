"""Behavioral model of the fully-differential receive chain.

LNA (gain, single-pole bandwidth, thermal noise, soft saturation) ->
passive quadrature mixer -> second-order low-pass per channel -> PGA.
Differential pairs are folded into one signed value per channel.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from math import pi, sqrt

import numpy as np
from scipy.optimize import brentq

from .signals import IQTrace, SignalTrace, biquad_lowpass, lfilter, onepole_lowpass

STAGE_LNA = 1
PGA_CODES = np.arange(1, 32)
# linear region of the saturator as a fraction of the THD-defined linear range
KNEE_FRACTION = 0.5
THD_LIMIT = 0.05


@dataclass(frozen=True)
class ReceiverConfig:
    f_lo: float = 200e3
    lpf_cutoff: float = 80e3
    lna_gain_db: float = 21.6
    lna_bw: float = 4.3e6
    lna_noise_psd: float = 21e-9
    lna_linear_range: float = 0.06
    mixer_loss_db: float = -4.0
    pga_ibias1: float = 1.0
    pga_ibias2: float = 1.0
    v_cm: float = 1.3
    offset_in: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.lna_bw > 0:
            raise ValueError("lna_bw must be positive")
        if not self.pga_ibias2 > 0:
            raise ValueError("pga_ibias2 must be positive")
        if self.mixer_loss_db > 0:
            raise ValueError("mixer_loss_db must be <= 0")
        if not (self.f_lo > 0 and self.lpf_cutoff > 0 and self.lna_linear_range > 0):
            raise ValueError("f_lo, lpf_cutoff and lna_linear_range must be positive")

    @property
    def lna_gain(self) -> float:
        return 10 ** (self.lna_gain_db / 20)

    @property
    def mixer_gain(self) -> float:
        return 10 ** (self.mixer_loss_db / 20)


def for_carrier(f_center: float, **kw) -> ReceiverConfig:
    """Zero-IF config at ``f_center`` with the baseband cutoff at 0.4 f_center."""
    kw.setdefault("lpf_cutoff", 0.4 * f_center)
    return ReceiverConfig(f_lo=f_center, **kw)


def noiseless_unity(f_lo: float, lpf_cutoff: float) -> ReceiverConfig:
    """Receiver with unit gains and no noise, used as an envelope detector."""
    return ReceiverConfig(
        f_lo=f_lo, lpf_cutoff=lpf_cutoff, lna_gain_db=0.0, mixer_loss_db=0.0,
        lna_linear_range=1e9, lna_noise_psd=0.0,
    )


# -- soft saturation ---------------------------------------------------------


def _saturate_unit(x, knee, top):
    """Identity for |x| <= knee, cubic roll-off to a flat top at |x| = top.

    Slope falls as 1 - ((|x| - knee) / (top - knee))^2, so the curve and its
    first derivative are continuous; the output ceiling is
    knee + 2/3 (top - knee).
    """
    a = np.abs(x)
    span = top - knee
    u = np.clip((a - knee) / span, 0.0, 1.0)
    y = np.where(a <= knee, a, knee + span * (u - u ** 3 / 3.0))
    return np.sign(x) * y


def thd(y_period) -> float:
    """THD of one period of samples (harmonics 2..N/2 over fundamental)."""
    spec = np.abs(np.fft.rfft(y_period))
    return float(np.sqrt(np.sum(spec[2:] ** 2)) / spec[1])


def _thd_of_amplitude(amp, knee, top, n=4096):
    x = amp * np.sin(2 * pi * np.arange(n) / n)
    return thd(_saturate_unit(x, knee, top))


@lru_cache(maxsize=None)
def _top_for_unit_range() -> float:
    # scale-free: linear range 1, knee KNEE_FRACTION; solve THD(1) = 5 %
    return brentq(lambda top: _thd_of_amplitude(1.0, KNEE_FRACTION, top) - THD_LIMIT,
                  KNEE_FRACTION + 1e-6, 50.0, xtol=1e-14)


def saturate(x, linear_range: float):
    """Input-referred soft clip whose THD is exactly 5 % at ``linear_range``."""
    return linear_range * _saturate_unit(
        np.asarray(x, dtype=float) / linear_range, KNEE_FRACTION, _top_for_unit_range()
    )


# -- stages ------------------------------------------------------------------


def _rng(seed: int, stage: int, stream: int = 0):
    return np.random.default_rng([int(seed), int(stage), int(stream)])


def white_noise(n: int, psd: float, sample_rate: float, rng) -> np.ndarray:
    """Gaussian samples with one-sided density ``psd`` V/rtHz (variance psd^2 fs / 2)."""
    return rng.standard_normal(n) * psd * sqrt(sample_rate / 2.0)


def lna_stage(trace: SignalTrace, config: ReceiverConfig, noise_on: bool = False, stream: int = 0) -> SignalTrace:
    """gain * LP(sat(x + n)) with a single pole at ``lna_bw``."""
    fs = trace.sample_rate
    if fs < 4 * config.lna_bw:
        raise ValueError("sample_rate must be at least 4 * lna_bw")
    x = trace.values
    if noise_on and config.lna_noise_psd > 0:
        x = x + white_noise(x.size, config.lna_noise_psd, fs, _rng(config.seed, STAGE_LNA, stream))
    x = saturate(x, config.lna_linear_range)
    b, a = onepole_lowpass(config.lna_bw, fs)
    return trace.with_values(config.lna_gain * lfilter(b, a, x))


def quadrature_demod(trace: SignalTrace, config: ReceiverConfig) -> IQTrace:
    """Mix with cos / -sin of the LO and low-pass both channels."""
    fs = trace.sample_rate
    if fs < 4 * config.f_lo:
        raise ValueError("sample_rate must be at least 4 * f_lo")
    t = trace.times
    phase = 2 * pi * config.f_lo * t
    g = config.mixer_gain
    i = g * trace.values * np.cos(phase)
    q = -g * trace.values * np.sin(phase)
    b, a = biquad_lowpass(config.lpf_cutoff, 1 / sqrt(2), fs)
    return IQTrace(fs, lfilter(b, a, i) + 1j * lfilter(b, a, q), trace.start_time)


def pga_codes(gain: float):
    """(code1, code2) of two 5-bit DACs whose ratio is nearest ``gain``.

    Ties resolve toward the smaller achieved gain, then smaller codes.
    """
    if not (1 / 31 <= gain <= 31):
        raise ValueError(f"PGA gain {gain:.9g} outside [1/31, 31]")
    best = None
    for n2 in PGA_CODES:
        for n1 in PGA_CODES:
            ratio = n1 / n2
            key = (abs(ratio - gain), ratio, n2)
            if best is None or key < best[0]:
                best = (key, (int(n1), int(n2)))
    return best[1]


def pga_gain(config: ReceiverConfig) -> float:
    n1, n2 = pga_codes(config.pga_ibias1 / config.pga_ibias2)
    return n1 / n2


def pga_stage(iq: IQTrace, config: ReceiverConfig) -> IQTrace:
    """Quantized gain; the static baseband offset enters at the PGA input."""
    g = pga_gain(config)
    off = config.offset_in * (1 + 1j)
    return iq.with_samples(g * (iq.samples + off))


def magnitude_phase(iq: IQTrace):
    """Per-sample |i + jq| and unwrapped atan2(q, i) as two traces."""
    mag = SignalTrace(iq.sample_rate, np.abs(iq.samples), iq.start_time)
    ph = SignalTrace(iq.sample_rate, np.unwrap(np.angle(iq.samples)), iq.start_time)
    return mag, ph


def run_chain(trace: SignalTrace, config: ReceiverConfig, noise_on: bool = False, stream: int = 0) -> IQTrace:
    """LNA -> mixer -> LPF -> PGA for one measurement phase."""
    return pga_stage(quadrature_demod(lna_stage(trace, config, noise_on, stream), config), config)


def auto_zero(oper: IQTrace, rst: IQTrace, lpf_cutoff: float) -> IQTrace:
    """Subtract the mean of the reset-phase output from the operate-phase output."""
    if rst.samples.size / rst.sample_rate < 10.0 / lpf_cutoff * (1 - 1e-9):
        raise ValueError("reset segment shorter than 10 / lpf_cutoff")
    return oper.with_samples(oper.samples - np.mean(rst.samples))


def receive(
    trace: SignalTrace,
    config: ReceiverConfig,
    noise_on: bool = False,
    rst_duration: float | None = None,
    stream: int = 0,
) -> IQTrace:
    """Reset phase (input forced to zero) then operate phase, auto-zeroed."""
    if rst_duration is None:
        rst_duration = 10.0 / config.lpf_cutoff
    n_rst = int(np.ceil(rst_duration * trace.sample_rate - 1e-9))
    rst_in = SignalTrace(trace.sample_rate, np.zeros(n_rst), trace.start_time)
    # reset-phase noise is an independent draw
    rst = run_chain(rst_in, config, noise_on, stream=2 * stream + 1)
    oper = run_chain(trace, config, noise_on, stream=2 * stream)
    return auto_zero(oper, rst, config.lpf_cutoff)


def with_pga_gain(config: ReceiverConfig, gain: float) -> ReceiverConfig:
    return replace(config, pga_ibias1=gain * config.pga_ibias2)
