"""Localize a point scatterer on a 1 ft plate with an 8-transducer ring."""

import numpy as np

from shmtrx.excitation import ExcitationSpec, reference_waveform
from shmtrx.localization import GridSpec, baseline_subtract, das_map, envelope, envelope_peak_time, locate
from shmtrx.plate import FOOT, PlateScenario, circular_array, synthesize_measurements

FS = 10e6
truth = (0.2013, 0.0987)
sc = PlateScenario(circular_array(8, (FOOT / 2, FOOT / 2), 0.12), ExcitationSpec(200e3), 3000.0, damage=truth)

residuals = baseline_subtract(synthesize_measurements(sc, FS))
envs = {p: envelope(r, "analytic") for p, r in residuals.items()}
t0 = envelope_peak_time(envelope(reference_waveform(sc.excitation, FS), "analytic"))
m = das_map(sc.transducers, envs, 3000.0, GridSpec.covering(FOOT, FOOT, 5e-3), t0)
loc = locate(m)

print(f"{len(envs)} pairs imaged on a {m.intensity.shape[0]}x{m.intensity.shape[1]} grid")
print(f"estimate ({loc.x:.4f}, {loc.y:.4f}) m, truth {truth}, "
      f"error {1e3 * np.hypot(loc.x - truth[0], loc.y - truth[1]):.2f} mm")

# coarse text rendering, north up
rows = m.intensity[::4, ::-4].T
for row in rows:
    print("".join(" .:-=+*#%@"[min(int(v * 10), 9)] for v in row))
