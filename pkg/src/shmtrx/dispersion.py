"""Rayleigh-Lamb dispersion of the fundamental S0 and A0 plate modes.

The characteristic equations are evaluated in a product form that is an
entire, real-valued function of phase velocity.  Wavenumbers that turn
imaginary (cp below a bulk velocity) switch to hyperbolic functions, and the
hyperbolic factors are rescaled by their exponential growth so that thick
plates / high frequencies do not overflow.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class Mode(str, enum.Enum):
    S0 = "S0"
    A0 = "A0"


class RootNotFoundError(RuntimeError):
    """No sign change of the residual was found in the scan range."""

    def __init__(self, mode, frequency):
        self.mode = Mode(mode)
        self.frequency = frequency
        super().__init__(f"no {self.mode.value} root found at {frequency:.9g} Hz")


@dataclass(frozen=True)
class MaterialPlate:
    cL: float
    cT: float
    thickness: float
    name: str = ""

    def __post_init__(self):
        if not (self.cL > self.cT > 0):
            raise ValueError("need cL > cT > 0")
        if not self.thickness > 0:
            raise ValueError("thickness must be positive")

    @property
    def plate_velocity(self) -> float:
        """Low-frequency S0 limit 2 cT sqrt(1 - cT^2/cL^2)."""
        return 2.0 * self.cT * np.sqrt(1.0 - (self.cT / self.cL) ** 2)


ALUMINUM_1P5MM = MaterialPlate(cL=6320.0, cT=3130.0, thickness=1.5e-3, name="aluminum")


def aluminum(thickness: float = 1.5e-3) -> MaterialPlate:
    return MaterialPlate(cL=6320.0, cT=3130.0, thickness=thickness, name="aluminum")


@dataclass(frozen=True)
class DispersionCurve:
    mode: Mode
    frequency: np.ndarray
    phase_velocity: np.ndarray
    group_velocity: np.ndarray

    @property
    def wavenumber(self) -> np.ndarray:
        return 2.0 * np.pi * self.frequency / self.phase_velocity

    def __len__(self):
        return self.frequency.size

    def interp_group_velocity(self, f: float) -> float:
        if not self.frequency[0] <= f <= self.frequency[-1]:
            raise ValueError(
                f"{f:.9g} Hz outside curve range "
                f"[{self.frequency[0]:.9g}, {self.frequency[-1]:.9g}] Hz"
            )
        return float(np.interp(f, self.frequency, self.group_velocity))

    def to_csv(self, path) -> None:
        Path(path).write_text(self.csv_text(), newline="\n")

    def csv_text(self) -> str:
        rows = ["frequency_hz,phase_velocity_mps,group_velocity_mps,wavenumber_radpm"]
        for f, cp, vg, k in zip(
            self.frequency, self.phase_velocity, self.group_velocity, self.wavenumber
        ):
            rows.append(f"{f:.9g},{cp:.9g},{vg:.9g},{k:.9g}")
        return "\n".join(rows) + "\n"

    @classmethod
    def from_csv(cls, path, mode=Mode.A0) -> "DispersionCurve":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(Mode(mode), data[:, 0], data[:, 1], data[:, 2])


def _scaled_trig(x2, h):
    """cos(xh), sin(xh)/x and the exponent e factored out, for real x^2.

    For x^2 < 0 (x = i a): cosh(ah) e^-ah, sinh(ah)/a e^-ah, e = ah.
    """
    x2 = np.asarray(x2, dtype=float)
    pos = x2 >= 0
    x = np.sqrt(np.abs(x2))
    xh = x * h
    c = np.where(pos, np.cos(xh), 0.5 * (1.0 + np.exp(-2.0 * xh)))
    # h * sinc and -expm1/(2a) both tend to h as x -> 0
    with np.errstate(invalid="ignore", divide="ignore"):
        s_hyp = np.where(xh > 0, -np.expm1(-2.0 * xh) / (2.0 * np.where(x > 0, x, 1.0)), h)
    s = np.where(pos, h * np.sinc(xh / np.pi), s_hyp)
    e = np.where(pos, 0.0, xh)
    return c, s, e


def rayleigh_lamb_residual(mode, frequency, phase_velocity, plate: MaterialPlate):
    """Normalized Rayleigh-Lamb residual in [-1, 1]; zero on the mode's branch.

    Symmetric:      (q^2-k^2)^2 sin(qh)/q cos(ph) + 4k^2 p^2 sin(ph)/p cos(qh)
    Antisymmetric:  (q^2-k^2)^2 cos(qh) sin(ph)/p + 4k^2 q^2 sin(qh)/q cos(ph)

    divided by the sum of the two terms' magnitudes.  Works elementwise on
    arrays of phase velocity.
    """
    mode = Mode(mode)
    f = np.asarray(frequency, dtype=float)
    cp = np.asarray(phase_velocity, dtype=float)
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(cp))):
        raise ValueError("non-finite frequency or phase velocity")
    if np.any(f <= 0) or np.any(cp <= 0):
        raise ValueError("frequency and phase velocity must be positive")

    w = 2.0 * np.pi * f
    k = w / cp
    k2 = k * k
    p2 = (w / plate.cL) ** 2 - k2
    q2 = (w / plate.cT) ** 2 - k2
    h = plate.thickness / 2.0
    cos_p, sin_p, _ = _scaled_trig(p2, h)
    cos_q, sin_q, _ = _scaled_trig(q2, h)
    # both terms carry one p-function and one q-function, so the common
    # exponential scale cancels in the ratio
    shear = (q2 - k2) ** 2
    if mode is Mode.S0:
        t1 = shear * sin_q * cos_p
        t2 = 4.0 * k2 * p2 * sin_p * cos_q
    else:
        t1 = shear * cos_q * sin_p
        t2 = 4.0 * k2 * q2 * sin_q * cos_p
    den = np.abs(t1) + np.abs(t2)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(den > 0, (t1 + t2) / np.where(den > 0, den, 1.0), 0.0)
    return r if r.ndim else float(r)


SCAN_STEPS = 2000
CP_MIN = 1.0


def _bisect(fun, a, b, fa, rtol=1e-12):
    while True:
        m = 0.5 * (a + b)
        if m <= a or m >= b or (b - a) <= rtol * m:
            return m
        fm = fun(m)
        if fm == 0.0:
            return m
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m


def solve_phase_velocity(mode, frequency: float, plate: MaterialPlate, cp_previous=None) -> float:
    """Phase velocity of the fundamental branch at ``frequency``.

    Scans cp over (1, 1.2 cL] for sign changes and bisects the bracket.  The
    lowest root is the fundamental for both S0 and A0; when ``cp_previous``
    is given, the bracket nearest to it is chosen instead (branch tracking).
    """
    mode = Mode(mode)
    if not frequency > 0:
        raise ValueError("frequency must be positive")
    grid = np.linspace(CP_MIN, 1.2 * plate.cL, SCAN_STEPS + 1)
    r = rayleigh_lamb_residual(mode, frequency, grid, plate)
    s = np.sign(r)
    brackets = np.flatnonzero(s[:-1] * s[1:] <= 0)
    # exact zeros show up twice (i and i-1); keep genuine sign changes or hits
    brackets = [i for i in brackets if s[i] != 0 or i == 0 or s[i - 1] != 0]
    if not brackets:
        raise RootNotFoundError(mode, frequency)
    if cp_previous is None:
        i = brackets[0]
    else:
        mids = [0.5 * (grid[j] + grid[j + 1]) for j in brackets]
        i = brackets[int(np.argmin(np.abs(np.array(mids) - cp_previous)))]
    if r[i] == 0.0:
        return float(grid[i])
    if r[i + 1] == 0.0:
        return float(grid[i + 1])

    def fun(c):
        return rayleigh_lamb_residual(mode, frequency, c, plate)

    return float(_bisect(fun, grid[i], grid[i + 1], r[i]))


def build_curve(mode, f_min: float, f_max: float, n_points: int, plate: MaterialPlate) -> DispersionCurve:
    """Sample one mode on a linear frequency grid; vg = dw/dk by finite differences."""
    mode = Mode(mode)
    if not 0 < f_min < f_max:
        raise ValueError("need 0 < f_min < f_max")
    if n_points < 3:
        raise ValueError("n_points must be >= 3")
    freqs = np.linspace(f_min, f_max, int(n_points))
    cps = np.empty_like(freqs)
    prev = None
    for j, f in enumerate(freqs):
        prev = solve_phase_velocity(mode, f, plate, cp_previous=prev)
        cps[j] = prev
    omega = 2.0 * np.pi * freqs
    k = omega / cps
    vg = np.gradient(omega, k)
    return DispersionCurve(mode, freqs, cps, vg)
