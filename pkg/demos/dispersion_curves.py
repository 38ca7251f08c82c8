"""Fundamental Lamb-mode dispersion in a 1.5 mm aluminum plate.

Prints phase and group velocity of S0 and A0 at a handful of frequencies.
"""

import numpy as np

from shmtrx.dispersion import Mode, aluminum, build_curve

plate = aluminum(1.5e-3)
print(f"plate velocity {plate.plate_velocity:.1f} m/s")
for mode in (Mode.S0, Mode.A0):
    curve = build_curve(mode, 10e3, 1e6, 100, plate)
    print(f"\n{mode.value}: f [kHz]  cp [m/s]  cg [m/s]")
    for f in (50e3, 100e3, 200e3, 500e3, 1e6):
        k = int(np.argmin(np.abs(curve.frequency - f)))
        print(f"  {curve.frequency[k] / 1e3:7.1f}  {curve.phase_velocity[k]:8.1f}  {curve.group_velocity[k]:8.1f}")
