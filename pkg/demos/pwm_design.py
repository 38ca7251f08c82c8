"""Search PWM pulse widths for a windowed 200 kHz burst.

Compares the optimized widths with the hand-picked 1/5/7/3 pattern after
the LC reconstruction filter.
"""

from shmtrx.excitation import (
    BASELINE_DOWN_WIDTHS,
    BASELINE_UP_WIDTHS,
    ExcitationSpec,
    FrameModel,
    LcFilterSpec,
    PwmObjective,
    optimize_pulse_widths,
    baseline_widths_error,
)

spec = ExcitationSpec(200e3)
design = optimize_pulse_widths(spec, restarts=4)
obj = PwmObjective(spec, FrameModel(), LcFilterSpec.default_for(spec.f_center))

print("optimized widths", design.widths)
print(f"  LSQ error {design.error:.4f}, NRMSE {100 * obj.nrmse(design.widths):.2f}%")
print("fixed widths    ", BASELINE_UP_WIDTHS + BASELINE_DOWN_WIDTHS)
print(f"  LSQ error {baseline_widths_error(spec):.4f}")
print("\nprogram listing:")
print(design.program.to_text())
