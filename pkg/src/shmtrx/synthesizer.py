"""Integer-N synthesizer: loop-filter design and a behavioral lock simulation.

Loop filter topology (charge pump drives node A, V_LOOP is node B)::

    A --+-------+---- R4 ----+-- B
        |       |            |
       C1      R2           C4
        |       |            |
       gnd     C2           gnd
                |
               gnd

Its transimpedance is (1 + s R2 C2) / (s Ctot (1 + s tau1)(1 + s tau2)):
a pole at the origin, the stabilizing zero and two real high-frequency
poles.  Together with the oscillator integrator the loop is fourth order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from math import atan, degrees, pi, sqrt

import numpy as np
from scipy.optimize import brentq

F_REF_DEFAULT = 32768.0
CCO_F_MIN = 0.8e6
CCO_F_MAX = 22e6
V_LOW, V_HIGH = 0.9, 2.4
V_DERATE = 0.3
V_CENTER = 0.5 * (V_LOW + V_HIGH)
POLE_SPLIT = 2.0
LOADING_RATIO = 0.05


class LoopDesignError(ValueError):
    """Requested bandwidth / phase margin cannot be realized."""


@dataclass(frozen=True)
class LoopFilter:
    c1: float
    r2: float
    c2: float
    r4: float
    c4: float

    def __post_init__(self):
        if min(self.c1, self.r2, self.c2, self.r4, self.c4) <= 0:
            raise ValueError("loop-filter components must be positive")

    def transimpedance(self, s):
        """V_LOOP / I_cp for complex frequency s."""
        s = np.asarray(s, dtype=complex)
        y_a = s * self.c1 + s * self.c2 / (1 + s * self.r2 * self.c2)
        return 1.0 / ((1 + s * self.r4 * self.c4) * y_a + s * self.c4)

    @property
    def zero_hz(self) -> float:
        return 1.0 / (2 * pi * self.r2 * self.c2)

    def pole_frequencies(self) -> np.ndarray:
        """The two nonzero pole frequencies (Hz), ascending."""
        c1, r2, c2, r4, c4 = self.c1, self.r2, self.c2, self.r4, self.c4
        ctot = c1 + c2 + c4
        a2 = r2 * r4 * c1 * c2 * c4
        a1 = r4 * c4 * (c1 + c2) + r2 * c2 * (c1 + c4)
        roots = np.roots([a2, a1, ctot])
        return np.sort(np.abs(roots)) / (2 * pi)

    def state_space(self):
        """dx/dt = A x + B i for capacitor voltages x = (v_C1, v_C2, v_C4)."""
        c1, r2, c2, r4, c4 = self.c1, self.r2, self.c2, self.r4, self.c4
        a = np.array([
            [-(1 / r2 + 1 / r4) / c1, 1 / (r2 * c1), 1 / (r4 * c1)],
            [1 / (r2 * c2), -1 / (r2 * c2), 0.0],
            [1 / (r4 * c4), 0.0, -1 / (r4 * c4)],
        ])
        b = np.array([1 / c1, 0.0, 0.0])
        return a, b


@dataclass(frozen=True)
class SynthConfig:
    n_div: int
    i_cp: float
    k_cco: float
    loop_filter: LoopFilter
    f_ref: float = F_REF_DEFAULT
    f_min: float = CCO_F_MIN
    f_max: float = CCO_F_MAX
    v_low: float = V_LOW
    v_high: float = V_HIGH

    def __post_init__(self):
        if self.n_div < 1 or self.f_ref <= 0 or self.i_cp <= 0 or self.k_cco <= 0:
            raise ValueError("n_div >= 1 and positive f_ref, i_cp, k_cco required")

    @property
    def f_target(self) -> float:
        return self.n_div * self.f_ref

    def cco_frequency(self, v):
        """k_cco * v inside the transconductor range; the incremental gain
        derates linearly to zero over V_DERATE outside it; then clamped."""
        return np.clip(self.cco_frequency_unclamped(v), self.f_min, self.f_max)

    def cco_frequency_unclamped(self, v):
        v = np.asarray(v, dtype=float)
        lo, hi, d = self.v_low, self.v_high, V_DERATE
        u = np.clip(v, lo - d, hi + d)
        below = np.minimum(u - lo, 0.0)
        above = np.maximum(u - hi, 0.0)
        eff = np.clip(u, lo, hi) + below + below ** 2 / (2 * d) + above - above ** 2 / (2 * d)
        return self.k_cco * eff

    def v_for_frequency(self, f: float) -> float:
        return f / self.k_cco


@dataclass(frozen=True)
class LoopReport:
    f_unity: float
    phase_margin: float
    f_3db_closed: float

    def to_text(self) -> str:
        return (
            f"f_unity_hz {self.f_unity:.9g}\n"
            f"phase_margin_deg {self.phase_margin:.9g}\n"
            f"f_3db_closed_hz {self.f_3db_closed:.9g}\n"
        )


def open_loop_gain(config: SynthConfig, f):
    """L(j 2 pi f) = (i_cp / 2pi) Z(j 2 pi f) (2 pi k_cco / j 2 pi f) / N."""
    f = np.asarray(f, dtype=float)
    s = 2j * pi * f
    z = config.loop_filter.transimpedance(s)
    return config.i_cp / (2 * pi) * z * (2 * pi * config.k_cco / s) / config.n_div


def loop_report(config: SynthConfig) -> LoopReport:
    def mag_db(f):
        return 20 * np.log10(abs(open_loop_gain(config, f)))

    grid = np.logspace(-3, 9, 1201)
    m = 20 * np.log10(np.abs(open_loop_gain(config, grid)))
    idx = np.flatnonzero((m[:-1] > 0) & (m[1:] <= 0))
    if not idx.size:
        raise LoopDesignError("open-loop gain has no unity crossover")
    i = idx[0]
    f_u = brentq(mag_db, grid[i], grid[i + 1], xtol=1e-9, rtol=1e-14)
    pm = 180.0 + degrees(np.angle(open_loop_gain(config, f_u)))

    def closed_db(f):
        lg = open_loop_gain(config, f)
        return 20 * np.log10(abs(lg / (1 + lg))) + 10 * np.log10(2)

    c = np.array([closed_db(f) for f in grid])
    idx = np.flatnonzero((c[:-1] > 0) & (c[1:] <= 0))
    f3 = brentq(closed_db, grid[idx[0]], grid[idx[0] + 1], xtol=1e-9) if idx.size else float("nan")
    return LoopReport(float(f_u), float(pm), float(f3))


def _margin(b: float) -> float:
    return degrees(atan(b) - atan(1 / b) - atan(1 / (POLE_SPLIT * b)))


def _synthesize_filter(tau_z, tau1, tau2, ctot, rho=LOADING_RATIO) -> LoopFilter:
    """Exact component values for the target zero/pole time constants.

    With c4 = rho * c1 the pole constraints reduce to a quadratic in c1.
    """
    s, p = tau1 + tau2, tau1 * tau2
    qa = tau_z * (1 + rho)
    qb = -(s + rho * p / tau_z)
    qc = p / tau_z
    disc = qb * qb - 4 * qa * qc
    if disc < 0:
        raise LoopDesignError("pole placement not realizable with a passive RC filter")
    # smaller root keeps the shunt caps small next to C2
    x1 = (-qb - sqrt(disc)) / (2 * qa)
    x4 = rho * x1
    x2 = 1.0 - x1 - x4
    if not (x1 > 0 and x2 > 0):
        raise LoopDesignError("pole placement not realizable with a passive RC filter")
    c1, c2, c4 = x1 * ctot, x2 * ctot, x4 * ctot
    r2 = tau_z / c2
    r4 = (p / (tau_z * x1)) / c4
    return LoopFilter(c1, r2, c2, r4, c4)


def design_loop(
    f_ref: float = F_REF_DEFAULT,
    n_div: int = 25,
    target_bw: float = 3.5e3,
    target_pm: float = 50.0,
    i_cp: float = 10e-6,
):
    """Size the loop so crossover = target_bw and phase margin = target_pm.

    The zero sits a factor b below the crossover and the first
    high-frequency pole a factor b above it; the second pole is one octave
    above the first.  b is solved from the margin budget, then the total
    capacitance from |L| = 1 at the crossover.  The oscillator gain is
    chosen so the target frequency sits at mid-range of the transconductor.
    """
    if not 0 < target_pm < 90:
        raise LoopDesignError("phase margin must be in (0, 90) degrees")
    if not 0 < target_bw < f_ref / 3:
        raise LoopDesignError("bandwidth must be below f_ref / 3")
    if n_div < 1:
        raise LoopDesignError("n_div must be >= 1")
    # margin(b) increases monotonically from -90 to 90 deg
    lim = _margin(1e6)
    if target_pm >= lim:
        raise LoopDesignError(f"phase margin {target_pm} deg not achievable (max {lim:.3f})")
    b = brentq(lambda x: _margin(x) - target_pm, 1e-6, 1e6, xtol=1e-15, rtol=1e-15)
    wc = 2 * pi * target_bw
    tau_z = b / wc
    tau1 = 1 / (b * wc)
    tau2 = tau1 / POLE_SPLIT
    k_cco = n_div * f_ref / V_CENTER
    # |L(wc)| = i_cp k_cco |1 + j wc tz| / (N ctot wc^2 |1 + j wc t1||1 + j wc t2|)
    shape = abs(1 + 1j * wc * tau_z) / (abs(1 + 1j * wc * tau1) * abs(1 + 1j * wc * tau2))
    ctot = i_cp * k_cco * shape / (n_div * wc ** 2)
    lf = _synthesize_filter(tau_z, tau1, tau2, ctot)
    config = SynthConfig(n_div=n_div, i_cp=i_cp, k_cco=k_cco, loop_filter=lf, f_ref=f_ref)
    return config, loop_report(config)


# -- behavioral lock simulation ---------------------------------------------


@dataclass
class LockTrajectory:
    time: np.ndarray
    v_loop: np.ndarray
    f_out: np.ndarray
    phase_error: np.ndarray = field(default_factory=lambda: np.zeros(0))
    phase_error_time: np.ndarray = field(default_factory=lambda: np.zeros(0))
    clamped: bool = False

    @property
    def locked(self) -> bool:
        return not self.clamped

    def to_csv_text(self) -> str:
        rows = ["time_s,vloop_v,fout_hz"]
        rows += [f"{t:.9g},{v:.9g},{f:.9g}" for t, v, f in zip(self.time, self.v_loop, self.f_out)]
        return "\n".join(rows) + "\n"


class _ExactRC:
    """Exact zero-order-hold update of the loop filter over any interval."""

    def __init__(self, lf: LoopFilter):
        a, b = lf.state_space()
        lam, vec = np.linalg.eig(a)
        self.lam = lam.real
        self.vec = vec.real
        self.inv = np.linalg.inv(self.vec)
        self.bt = self.inv @ b

    def step(self, x, current, h):
        z = self.inv @ x
        e = np.exp(self.lam * h)
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = np.where(np.abs(self.lam * h) > 1e-12, np.expm1(self.lam * h) / self.lam, h)
        return self.vec @ (e * z + phi * self.bt * current)


def simulate_lock(
    config: SynthConfig,
    f_target: float | None = None,
    duration: float = 0.02,
    dt: float | None = None,
    f_start: float | None = None,
    record_every: int = 1,
) -> LockTrajectory:
    """Event-driven PFD / tri-state charge pump / RC filter / CCO model.

    The reference edges fall at k / f_ref.  The divider edge fires when the
    oscillator phase has advanced n_div cycles.  The sequential PFD raises
    UP on a reference edge and DN on a divider edge and clears both once
    both are set.  Between events the filter state is advanced exactly;
    the oscillator phase uses the trapezoidal average of its frequency.
    """
    f_ref = config.f_ref
    if f_target is None:
        f_target = config.f_target
    if abs(f_target - config.n_div * f_ref) > 1e-9 * f_target:
        raise ValueError("f_target must equal n_div * f_ref")
    if dt is None:
        dt = 1.0 / (64 * f_ref)
    if dt > 1.0 / (20 * f_ref) * (1 + 1e-12):
        raise ValueError("dt must be <= 1 / (20 f_ref)")
    if f_start is None:
        f_start = f_target
    lf = config.loop_filter
    rc = _ExactRC(lf)
    v0 = min(max(config.v_for_frequency(f_start), 0.0), 5.0)
    x = np.full(3, v0)

    n = config.n_div
    t = 0.0
    cycles = 0.0
    next_ref = 1.0 / f_ref
    up = dn = False
    last_ref_edge = 0.0
    last_div_edge = 0.0
    ref_count = 0
    errors, err_times = [], []

    times, vs, fs = [0.0], [v0], [float(config.cco_frequency(v0))]
    step_i = 0
    grid_t = dt
    while t < duration - 1e-15:
        t_end = min(grid_t, next_ref, duration)
        h = t_end - t
        current = config.i_cp * ((1.0 if up else 0.0) - (1.0 if dn else 0.0))
        f0 = float(config.cco_frequency(x[2]))
        x1 = rc.step(x, current, h)
        f1 = float(config.cco_frequency(x1[2]))
        dcyc = 0.5 * (f0 + f1) * h
        div_event = False
        if cycles + dcyc >= n:
            # linear interpolation of phase; then redo the filter exactly
            frac = (n - cycles) / dcyc
            h = max(frac * h, 0.0)
            t_end = t + h
            x1 = rc.step(x, current, h)
            cycles = 0.0
            div_event = True
        else:
            cycles += dcyc
        x = x1
        t = t_end
        if t >= next_ref * (1 - 1e-13):
            ref_count += 1
            next_ref = (ref_count + 1) / f_ref
            last_ref_edge = t
            up = True
        if div_event:
            last_div_edge = t
            dn = True
        if up and dn:
            up = dn = False
            # phase error per reference cycle: divider edge minus reference edge
            errors.append(last_div_edge - last_ref_edge)
            err_times.append(t)
        if t >= grid_t - 1e-15:
            grid_t += dt
            step_i += 1
            if step_i % record_every == 0:
                times.append(t)
                vs.append(x[2])
                fs.append(float(config.cco_frequency(x[2])))
    v_final = x[2]
    f_free = float(config.cco_frequency_unclamped(v_final))
    clamped = not (config.f_min < f_free < config.f_max) or not (
        config.v_low - V_DERATE < v_final < config.v_high + V_DERATE
    )
    if clamped:
        warnings.warn("oscillator clamp active at end of simulation: no lock", RuntimeWarning, stacklevel=2)
    return LockTrajectory(
        np.array(times), np.array(vs), np.array(fs),
        np.array(errors), np.array(err_times), clamped,
    )


def scale_for_division(config: SynthConfig, n_div: int) -> SynthConfig:
    """Same loop dynamics at another N: charge-pump current scales with N."""
    return replace(config, n_div=n_div, i_cp=config.i_cp * n_div / config.n_div)
