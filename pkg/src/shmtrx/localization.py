"""Baseline subtraction, envelope detection and delay-and-sum imaging."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.signal import hilbert

from . import receiver
from .signals import SignalTrace


@dataclass(frozen=True)
class GridSpec:
    origin: tuple
    spacing: float
    nx: int
    ny: int

    def __post_init__(self):
        if not self.spacing > 0 or self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs spacing > 0 and nx, ny >= 1")

    @classmethod
    def covering(cls, width: float, height: float, spacing: float) -> "GridSpec":
        """Pixels of size ``spacing`` tiling [0, width] x [0, height]."""
        nx = int(np.ceil(width / spacing - 1e-9))
        ny = int(np.ceil(height / spacing - 1e-9))
        return cls((0.0, 0.0), spacing, nx, ny)

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.nx) + 0.5) * self.spacing

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.ny) + 0.5) * self.spacing


@dataclass(frozen=True)
class DamageMap:
    grid: GridSpec
    intensity: np.ndarray  # shape (nx, ny)

    @property
    def origin(self):
        return self.grid.origin

    @property
    def spacing(self):
        return self.grid.spacing

    def csv_text(self) -> str:
        rows = ["x_m,y_m,intensity"]
        for ix, x in enumerate(self.grid.x):
            for iy, y in enumerate(self.grid.y):
                rows.append(f"{x:.9g},{y:.9g},{self.intensity[ix, iy]:.9g}")
        return "\n".join(rows) + "\n"

    def pgm_bytes(self) -> bytes:
        """Binary P5 image, north-up (row 0 is the largest y)."""
        top = self.intensity.max()
        scaled = np.zeros_like(self.intensity) if top <= 0 else self.intensity / top
        img = np.rint(np.clip(scaled, 0, 1) * 255).astype(np.uint8).T[::-1]
        header = f"P5\n{self.grid.nx} {self.grid.ny}\n255\n".encode("ascii")
        return header + img.tobytes()


class Location(NamedTuple):
    x: float
    y: float
    peak: float


def baseline_subtract(measurements) -> dict:
    """damaged - baseline for every pair."""
    out = {}
    for p in measurements.pairs:
        b, d = measurements.baseline[p], measurements.damaged[p]
        if b.sample_rate != d.sample_rate or len(b) != len(d):
            raise ValueError(f"pair {p}: length or sample-rate mismatch")
        out[p] = d.with_values(d.values - b.values)
    return out


def envelope(trace: SignalTrace, method: str = "analytic", f_center: float | None = None) -> SignalTrace:
    """Non-negative envelope, same length as the input.

    ``analytic``: |x + j H{x}|.  ``iq_demod``: magnitude of the noiseless
    unit-gain receiver at ``f_center`` (scaled by 2 to undo the mixer's 1/2).
    """
    if method == "analytic":
        if not np.any(trace.values):
            return trace.with_values(np.zeros(len(trace)))
        return trace.with_values(np.abs(hilbert(trace.values)))
    if method == "iq_demod":
        if f_center is None:
            raise ValueError("iq_demod envelope needs f_center")
        cfg = receiver.noiseless_unity(f_center, 0.4 * f_center)
        fs = trace.sample_rate
        # the LNA model needs fs >= 4 * lna_bw; keep its pole far above the band
        cfg = replace(cfg, lna_bw=min(cfg.lna_bw, fs / 4))
        iq = receiver.run_chain(trace, cfg)
        return trace.with_values(2.0 * np.abs(iq.samples))
    raise ValueError(f"unknown envelope method {method!r}")


def envelope_peak_time(trace: SignalTrace) -> float:
    return float(trace.times[int(np.argmax(trace.values))])


def das_map(
    transducers,
    envelopes: dict,
    vg: float,
    grid: GridSpec,
    t0: float = 0.0,
    compensate_spreading: bool = False,
) -> DamageMap:
    """Unweighted delay-and-sum of pair envelopes over the pixel grid.

    Pixel time for pair (i, j) is (|tx_i - p| + |p - rx_j|) / vg + t0, read
    from the envelope by linear interpolation (zero outside the trace).
    """
    if not envelopes:
        raise ValueError("no pairs to image")
    if not vg > 0:
        raise ValueError("vg must be positive")
    tr = np.asarray(transducers, dtype=float)
    gx, gy = np.meshgrid(grid.x, grid.y, indexing="ij")
    dist = np.hypot(gx[..., None] - tr[:, 0], gy[..., None] - tr[:, 1])
    acc = np.zeros((grid.nx, grid.ny))
    for (i, j) in sorted(envelopes):
        env = envelopes[(i, j)]
        path = dist[..., i] + dist[..., j]
        t = path / vg + t0
        v = np.interp(t.ravel(), env.times, env.values, left=0.0, right=0.0).reshape(t.shape)
        if compensate_spreading:
            v = v * np.sqrt(np.maximum(path, 0.01))
        acc += v
    top = acc.max()
    if top > 0:
        acc = acc / top
    return DamageMap(grid, acc)


def locate(damage_map: DamageMap) -> Location | None:
    """Center of the brightest pixel, or None when the map is all zero."""
    inten = damage_map.intensity
    if inten.size == 0:
        raise ValueError("empty map")
    if not np.any(inten > 0):
        return None
    k = int(np.argmax(inten))
    ix, iy = np.unravel_index(k, inten.shape)
    return Location(float(damage_map.grid.x[ix]), float(damage_map.grid.y[iy]), float(inten[ix, iy]))
