"""Pass a 10 mV windowed burst through the receiver and report its envelope."""

import numpy as np

from shmtrx.excitation import ExcitationSpec, reference_waveform
from shmtrx.receiver import ReceiverConfig, magnitude_phase, receive

cfg = ReceiverConfig()
spec = ExcitationSpec(cfg.f_lo, amplitude_pp=20e-3)
x = reference_waveform(spec, 20e6, duration=spec.duration + 60e-6)

for noise in (False, True):
    mag, phase = magnitude_phase(receive(x, cfg, noise_on=noise))
    k = int(np.argmax(mag.values))
    print(f"noise={noise!s:5}  peak {1e3 * mag.values[k]:.3f} mV at {1e6 * mag.times[k]:.1f} us, "
          f"phase {np.degrees(phase.values[k]):+.1f} deg")
