"""Command-line front end.

Exit codes: 0 success, 2 usage / validation, 3 infeasible design,
4 no detection, 1 solver failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import io as tio
from .dispersion import MaterialPlate, Mode, RootNotFoundError, build_curve
from .excitation import (
    BASELINE_DOWN_WIDTHS,
    BASELINE_UP_WIDTHS,
    ExcitationSpec,
    FrameError,
    FrameModel,
    LcFilterSpec,
    PwmObjective,
    optimize_pulse_widths,
)
from .localization import GridSpec, baseline_subtract, das_map, envelope, envelope_peak_time, locate
from .plate import excitation_trace, synthesize_measurements
from .receiver import for_carrier, magnitude_phase, receive, with_pga_gain
from .synthesizer import LoopDesignError, design_loop, simulate_lock

log = logging.getLogger("shmtrx")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NO_DETECTION = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _seed(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _common(p, scenario=False):
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--seed", type=_seed, default=0)
    if scenario:
        p.add_argument("--scenario", required=True, type=Path)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="shmtrx", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("dispersion", help="S0/A0 dispersion curves as CSV")
    _common(p)
    p.add_argument("--cl", type=float, default=6320.0, help="longitudinal velocity, m/s")
    p.add_argument("--ct", type=float, default=3130.0, help="shear velocity, m/s")
    p.add_argument("--thickness", type=float, default=1.5e-3, help="plate thickness, m")
    p.add_argument("--f-min", type=float, default=10e3)
    p.add_argument("--f-max", type=float, default=2e6)
    p.add_argument("--n-points", type=int, default=200)

    p = sub.add_parser("design-pwm", help="least-squares PWM widths")
    _common(p)
    p.add_argument("--fc", type=float, default=200e3, help="burst center frequency, Hz")
    p.add_argument("--cycles", type=int, default=5)
    p.add_argument("--amplitude", type=float, default=10.0, help="reference amplitude, V_pp")
    p.add_argument("--pulses", type=int, default=4, help="pulses per side")
    p.add_argument("--carrier-ticks", type=int, default=16, help="synthesizer periods per carrier period")
    p.add_argument("--start-cycle", type=int, default=0)
    p.add_argument("--filter-fc", type=float, default=None, help="LC cutoff, Hz (default 1.5 fc)")
    p.add_argument("--filter-q", type=float, default=2 ** -0.5)
    p.add_argument("--restarts", type=int, default=8)

    p = sub.add_parser("design-loop", help="synthesizer loop design and lock transient")
    _common(p)
    p.add_argument("--f-ref", type=float, default=32768.0)
    p.add_argument("--n-div", type=int, default=25)
    p.add_argument("--bw", type=float, default=3.5e3, help="target loop bandwidth, Hz")
    p.add_argument("--pm", type=float, default=50.0, help="target phase margin, deg")
    p.add_argument("--i-cp", type=float, default=10e-6)
    p.add_argument("--duration", type=float, default=50 / 3.5e3)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--step", type=float, default=-0.02, help="initial relative frequency offset")
    p.add_argument("--record-every", type=int, default=16)

    p = sub.add_parser("simulate", help="synthesize pitch-catch data and receiver outputs")
    _common(p, scenario=True)
    _receiver_args(p)

    p = sub.add_parser("localize", help="delay-and-sum damage map")
    _common(p, scenario=True)
    p.add_argument("--spacing", type=float, default=5e-3, help="pixel size, m")
    p.add_argument("--envelope", choices=["analytic", "iq_demod"], default="analytic")
    p.add_argument("--allow-no-damage", action="store_true")
    return ap


def _receiver_args(p):
    p.add_argument("--noise", action="store_true", help="enable LNA thermal noise")
    p.add_argument("--input-scale", type=float, default=1e-3,
                   help="transducer-to-receiver voltage scale applied before the LNA")
    p.add_argument("--pga-gain", type=float, default=1.0)
    p.add_argument("--lpf-cutoff", type=float, default=None, help="Hz (default 0.4 fc)")


def _write(outputs, path, data):
    outputs.append(tio.atomic_write(path, data))


def cmd_dispersion(args) -> int:
    if not 0 < args.f_min < args.f_max:
        raise UsageError("need 0 < --f-min < --f-max")
    if args.n_points < 3:
        raise UsageError("--n-points must be >= 3")
    try:
        plate = MaterialPlate(args.cl, args.ct, args.thickness)
    except ValueError as e:
        raise UsageError(str(e)) from None
    outputs = []
    try:
        for mode in (Mode.S0, Mode.A0):
            curve = build_curve(mode, args.f_min, args.f_max, args.n_points, plate)
            _write(outputs, args.out / f"{mode.value.lower()}.csv", curve.csv_text())
    except RootNotFoundError as e:
        log.error("root not found: mode %s at %s Hz", e.mode.value, tio.fmt(e.frequency))
        return EXIT_FAIL
    config = {"cl": args.cl, "ct": args.ct, "thickness": args.thickness,
              "f_min": args.f_min, "f_max": args.f_max, "n_points": args.n_points}
    tio.write_manifest(args.out, "dispersion", [], outputs, config, args.seed, __version__)
    return EXIT_OK


def cmd_design_pwm(args) -> int:
    if not 0.1e6 <= args.fc <= 2.75e6:
        log.warning("fc %s Hz outside the 0.1-2.75 MHz output range", tio.fmt(args.fc))
    try:
        spec = ExcitationSpec(args.fc, args.cycles, args.amplitude)
        lc = LcFilterSpec(args.filter_fc or 1.5 * args.fc, args.filter_q)
    except ValueError as e:
        raise UsageError(str(e)) from None
    try:
        frame = FrameModel(args.pulses, args.carrier_ticks, args.start_cycle)
        design = optimize_pulse_widths(spec, frame, lc, restarts=args.restarts, seed=args.seed)
        objective = PwmObjective(spec, frame, lc)
        try:
            baseline = objective(BASELINE_UP_WIDTHS + BASELINE_DOWN_WIDTHS) if args.pulses == 4 else None
        except FrameError:
            baseline = None
    except FrameError as e:
        log.error("infeasible frame: %s", e)
        return EXIT_INFEASIBLE
    outputs = []
    _write(outputs, args.out / "program.txt", design.program.to_text())
    report = [
        f"fc_hz {tio.fmt(args.fc)}",
        f"t_syn_s {tio.fmt(objective.t_syn)}",
        "widths_up " + " ".join(map(str, design.program.widths_up)),
        "widths_down " + " ".join(map(str, design.program.widths_down)),
        f"lsq_error_optimum {tio.fmt(design.error)}",
        f"lsq_error_baseline {tio.fmt(baseline) if baseline is not None else 'n/a'}",
        f"nrmse_optimum {tio.fmt(objective.nrmse(design.widths)) if spec.amplitude_pp else '0'}",
    ]
    _write(outputs, args.out / "report.txt", "\n".join(report) + "\n")
    config = {k: v for k, v in vars(args).items() if k not in ("out", "func", "command")}
    tio.write_manifest(args.out, "design-pwm", [], outputs, config, args.seed, __version__)
    return EXIT_OK


def cmd_design_loop(args) -> int:
    try:
        config, report = design_loop(args.f_ref, args.n_div, args.bw, args.pm, args.i_cp)
    except LoopDesignError as e:
        log.error("infeasible loop design: %s", e)
        return EXIT_INFEASIBLE
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        traj = simulate_lock(config, duration=args.duration, dt=args.dt,
                             f_start=config.f_target * (1 + args.step),
                             record_every=args.record_every)
    outputs = []
    _write(outputs, args.out / "loop_report.txt", report.to_text() + f"locked {int(traj.locked)}\n")
    _write(outputs, args.out / "trajectory.csv", traj.to_csv_text())
    lf = config.loop_filter
    cfg = {k: v for k, v in vars(args).items() if k not in ("out", "func", "command")}
    cfg.update({"k_cco": config.k_cco, "c1": lf.c1, "r2": lf.r2, "c2": lf.c2, "r4": lf.r4, "c4": lf.c4})
    tio.write_manifest(args.out, "design-loop", [], outputs, cfg, args.seed, __version__)
    if not traj.locked:
        log.warning("oscillator clamp active at end of simulation: no lock")
    return EXIT_OK


def _scenario(args):
    try:
        return tio.load_scenario(args.scenario)
    except tio.ScenarioError as e:
        raise UsageError(f"scenario invalid: {e}") from None


def cmd_simulate(args) -> int:
    sc = _scenario(args)
    fs = sc.sample_rate
    ms = synthesize_measurements(sc, fs)
    residuals = baseline_subtract(ms)
    fc = sc.excitation.f_center
    rx = for_carrier(fc, seed=args.seed, lna_bw=min(4.3e6, fs / 4))
    if args.lpf_cutoff:
        rx = for_carrier(fc, seed=args.seed, lna_bw=rx.lna_bw, lpf_cutoff=args.lpf_cutoff)
    rx = with_pga_gain(rx, args.pga_gain)
    outputs = []
    for n, (i, j) in enumerate(ms.pairs):
        stem = args.out / f"pair_{i}_{j}"
        _write(outputs, f"{stem}_baseline.csv", tio.trace_csv(ms.baseline[(i, j)]))
        _write(outputs, f"{stem}_damaged.csv", tio.trace_csv(ms.damaged[(i, j)]))
        _write(outputs, f"{stem}_residual.csv", tio.trace_csv(residuals[(i, j)]))
        _write(outputs, f"{stem}_envelope.csv", tio.trace_csv(envelope(residuals[(i, j)])))
        scaled = ms.damaged[(i, j)].with_values(args.input_scale * ms.damaged[(i, j)].values)
        iq = receive(scaled, rx, noise_on=args.noise, stream=n)
        _write(outputs, f"{stem}_iq.csv", tio.iq_csv(iq))
        _write(outputs, f"{stem}_magphase.csv", tio.magphase_csv(*magnitude_phase(iq)))
    cfg = {"noise": args.noise, "input_scale": args.input_scale, "pga_gain": args.pga_gain,
           "lpf_cutoff": rx.lpf_cutoff, "sample_rate_hz": fs, "scenario": tio.scenario_text(sc)
           if not sc.dispersive else str(args.scenario)}
    tio.write_manifest(args.out, "simulate", [args.scenario], outputs, cfg, args.seed, __version__)
    return EXIT_OK


def cmd_localize(args) -> int:
    sc = _scenario(args)
    if sc.damage is None and not args.allow_no_damage:
        raise UsageError("scenario has no damage; pass --allow-no-damage for a control run")
    fs = sc.sample_rate
    fc = sc.excitation.f_center
    ms = synthesize_measurements(sc, fs)
    envs = {p: envelope(r, args.envelope, fc) for p, r in baseline_subtract(ms).items()}
    t0 = envelope_peak_time(envelope(excitation_trace(sc, fs), args.envelope, fc))
    grid = GridSpec.covering(sc.width, sc.height, args.spacing)
    dmap = das_map(sc.transducers, envs, sc.group_velocity, grid, t0)
    loc = locate(dmap)
    outputs = []
    _write(outputs, args.out / "map.pgm", dmap.pgm_bytes())
    _write(outputs, args.out / "map.csv", dmap.csv_text())
    if loc is None:
        report = "no_detection\n"
    else:
        err = np.hypot(loc.x - sc.damage[0], loc.y - sc.damage[1]) if sc.damage else float("nan")
        report = f"{tio.fmt(loc.x)} {tio.fmt(loc.y)} {tio.fmt(err)}\n"
    _write(outputs, args.out / "report.txt", report)
    cfg = {"spacing": args.spacing, "envelope": args.envelope, "vg_mps": sc.group_velocity,
           "t0_s": t0, "sample_rate_hz": fs}
    tio.write_manifest(args.out, "localize", [args.scenario], outputs, cfg, args.seed, __version__)
    if loc is None:
        log.error("no detection: damage map is all zero")
        return EXIT_NO_DETECTION
    return EXIT_OK


COMMANDS = {
    "dispersion": cmd_dispersion,
    "design-pwm": cmd_design_pwm,
    "design-loop": cmd_design_loop,
    "simulate": cmd_simulate,
    "localize": cmd_localize,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(name)s: %(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"shmtrx: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
