"""Text formats: scenario files, trace CSVs, atomic writes, run manifests."""

from __future__ import annotations

import json
import os
import re
import tempfile
from pathlib import Path

import numpy as np

from .dispersion import DispersionCurve, Mode
from .excitation import ExcitationSpec
from .plate import FOOT, PlateScenario
from .signals import IQTrace, SignalTrace


class ScenarioError(ValueError):
    """Invalid scenario file; ``field`` names the offending key path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


def fmt(x: float) -> str:
    return f"{x:.9g}"


def atomic_write(path, data) -> Path:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, (bytes, bytearray)) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"newline": "\n"})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def trace_csv(trace: SignalTrace) -> str:
    rows = ["time_s,value_v"]
    rows += [f"{fmt(t)},{fmt(v)}" for t, v in zip(trace.times, trace.values)]
    return "\n".join(rows) + "\n"


def iq_csv(iq: IQTrace) -> str:
    rows = ["time_s,i_v,q_v"]
    rows += [f"{fmt(t)},{fmt(z.real)},{fmt(z.imag)}" for t, z in zip(iq.times, iq.samples)]
    return "\n".join(rows) + "\n"


def magphase_csv(mag: SignalTrace, phase: SignalTrace) -> str:
    rows = ["time_s,mag_v,phase_rad"]
    rows += [f"{fmt(t)},{fmt(m)},{fmt(p)}" for t, m, p in zip(mag.times, mag.values, phase.values)]
    return "\n".join(rows) + "\n"


def read_trace_csv(path) -> SignalTrace:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    fs = 1.0 / (t[1] - t[0]) if t.size > 1 else 1.0
    return SignalTrace(fs, data[:, 1], float(t[0]))


# -- scenario files ------------------------------------------------------------


def parse_keyvalue(text: str) -> dict:
    """``key = value`` per line; ``#`` starts a comment."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {n}", "expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ScenarioError(f"line {n}", "empty key")
        out[key] = value
    return out


def _float(kv, key, default=None):
    if key not in kv:
        if default is None:
            raise ScenarioError(key, "missing")
        return default
    try:
        return float(kv[key])
    except ValueError:
        raise ScenarioError(key, f"not a number: {kv[key]!r}") from None


def load_scenario(path) -> PlateScenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ScenarioError("scenario", str(e)) from None
    return scenario_from_dict(parse_keyvalue(text), base_dir=path.parent)


def scenario_from_dict(kv: dict, base_dir=Path(".")) -> PlateScenario:
    known = re.compile(
        r"^(plate\.(width_m|height_m|edge_reflections)|transducer\.\d+\.(x_m|y_m)|"
        r"damage\.(x_m|y_m|coeff)|mode|vg_mps|dispersion_csv|"
        r"excitation\.(fc_hz|cycles|amplitude_vpp)|sample_rate_hz)$"
    )
    for key in kv:
        if not known.match(key):
            raise ScenarioError(key, "unknown key")
    width = _float(kv, "plate.width_m", FOOT)
    height = _float(kv, "plate.height_m", FOOT)
    idx = sorted({int(k.split(".")[1]) for k in kv if k.startswith("transducer.")})
    if idx != list(range(len(idx))):
        raise ScenarioError("transducer", "indices must be 0..n-1 without gaps")
    tr = [(_float(kv, f"transducer.{i}.x_m"), _float(kv, f"transducer.{i}.y_m")) for i in idx]
    if len(tr) < 2:
        raise ScenarioError("transducer", "at least 2 transducers required")
    damage = None
    if "damage.x_m" in kv or "damage.y_m" in kv:
        damage = (_float(kv, "damage.x_m"), _float(kv, "damage.y_m"))
    coeff = _float(kv, "damage.coeff", 0.3)
    try:
        mode = Mode(kv.get("mode", "A0"))
    except ValueError:
        raise ScenarioError("mode", f"expected S0 or A0, got {kv['mode']!r}") from None
    if ("vg_mps" in kv) == ("dispersion_csv" in kv):
        raise ScenarioError("vg_mps", "give exactly one of vg_mps or dispersion_csv")
    if "vg_mps" in kv:
        velocity = _float(kv, "vg_mps")
        if velocity <= 0:
            raise ScenarioError("vg_mps", "must be positive")
    else:
        try:
            velocity = DispersionCurve.from_csv(Path(base_dir) / kv["dispersion_csv"], mode)
        except (OSError, ValueError) as e:
            raise ScenarioError("dispersion_csv", str(e)) from None
    try:
        cycles = int(kv.get("excitation.cycles", "5"))
    except ValueError:
        raise ScenarioError("excitation.cycles", "not an integer") from None
    try:
        exc = ExcitationSpec(
            _float(kv, "excitation.fc_hz"), cycles, _float(kv, "excitation.amplitude_vpp", 10.0)
        )
    except ValueError as e:
        raise ScenarioError("excitation", str(e)) from None
    fs = _float(kv, "sample_rate_hz", 50 * exc.f_center)
    edges = kv.get("plate.edge_reflections", "false").lower() in ("1", "true", "yes")
    try:
        return PlateScenario(
            transducers=np.array(tr), excitation=exc, velocity=velocity, width=width,
            height=height, damage=damage, scatter_coeff=coeff, mode=mode,
            edge_reflections=edges, sample_rate=fs,
        )
    except ValueError as e:
        msg = str(e)
        field = msg.split(":", 1)[0] if ":" in msg else "scenario"
        raise ScenarioError(field, msg.split(":", 1)[-1].strip()) from None


def scenario_text(sc: PlateScenario) -> str:
    """Serialize a constant-velocity scenario back to key-value text."""
    lines = [f"plate.width_m = {fmt(sc.width)}", f"plate.height_m = {fmt(sc.height)}"]
    for i, (x, y) in enumerate(sc.transducers):
        lines += [f"transducer.{i}.x_m = {fmt(x)}", f"transducer.{i}.y_m = {fmt(y)}"]
    if sc.damage is not None:
        lines += [f"damage.x_m = {fmt(sc.damage[0])}", f"damage.y_m = {fmt(sc.damage[1])}",
                  f"damage.coeff = {fmt(sc.scatter_coeff)}"]
    lines.append(f"mode = {sc.mode.value}")
    if sc.dispersive:
        raise ValueError("dispersive scenarios reference their curve file; write it by hand")
    lines.append(f"vg_mps = {fmt(sc.velocity)}")
    e = sc.excitation
    lines += [f"excitation.fc_hz = {fmt(e.f_center)}", f"excitation.cycles = {e.n_cycles}",
              f"excitation.amplitude_vpp = {fmt(e.amplitude_pp)}"]
    if sc.sample_rate:
        lines.append(f"sample_rate_hz = {fmt(sc.sample_rate)}")
    return "\n".join(lines) + "\n"


def write_manifest(out_dir, command: str, inputs: list, outputs: list, config: dict, seed, version: str) -> Path:
    """Written last; lists every output of the run."""
    manifest = {
        "command": command,
        "inputs": [str(p) for p in inputs],
        "output_dir": str(out_dir),
        "outputs": sorted(str(Path(p).name) for p in outputs),
        "config": config,
        "seed": seed,
        "version": version,
    }
    return atomic_write(Path(out_dir) / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
