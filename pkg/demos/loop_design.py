"""Design the synthesizer loop filter and watch it pull in from a 2% offset."""

import numpy as np

from shmtrx.synthesizer import design_loop, simulate_lock

cfg, rep = design_loop(32768.0, 25, 3.5e3, 50.0)
print(rep.to_text(), end="")
print("loop filter poles [Hz]", np.round(cfg.loop_filter.pole_frequencies(), 1))

traj = simulate_lock(cfg, duration=50 / 3.5e3, f_start=1.02 * cfg.f_target)
err = np.abs(traj.f_out / cfg.f_target - 1)
for t_ms in (0.1, 0.2, 0.5, 1.0, 5.0, 14.0):
    k = min(int(np.searchsorted(traj.time, t_ms * 1e-3)), len(err) - 1)
    print(f"t = {t_ms:5.1f} ms  |f/f_target - 1| = {err[k]:.2e}")
print("locked" if traj.locked else "did not lock")
