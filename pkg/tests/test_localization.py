import numpy as np
import pytest

from shmtrx.excitation import ExcitationSpec, reference_waveform, window_values
from shmtrx.localization import (
    DamageMap,
    GridSpec,
    baseline_subtract,
    das_map,
    envelope,
    envelope_peak_time,
    locate,
)
from shmtrx.plate import FOOT, MeasurementSet, PlateScenario, circular_array, distance, synthesize_measurements
from shmtrx.signals import SignalTrace, nrmse

FC = 200e3
FS = 10e6
VG = 3000.0
TRUTH = (0.2013, 0.0987)


def image(scenario, method="analytic", spacing=5e-3, pairs=None):
    ms = synthesize_measurements(scenario, FS)
    res = baseline_subtract(ms)
    if pairs is not None:
        res = {p: res[p] for p in pairs}
    envs = {p: envelope(r, method, FC) for p, r in res.items()}
    t0 = envelope_peak_time(envelope(reference_waveform(scenario.excitation, FS), method, FC))
    grid = GridSpec.covering(FOOT, FOOT, spacing)
    return das_map(scenario.transducers, envs, VG, grid, t0), envs, t0


def error(loc, truth=TRUTH):
    return float(np.hypot(loc.x - truth[0], loc.y - truth[1]))


@pytest.fixture(scope="module")
def eight_pair_run():
    sc = PlateScenario(circular_array(8, (FOOT / 2, FOOT / 2), 0.12), ExcitationSpec(FC), VG, damage=TRUTH)
    return sc, image(sc)


# baseline subtraction ----------------------------------------------------------


def test_baseline_subtract_cases(make_scenario):
    ms = synthesize_measurements(make_scenario(damage=None), FS)
    assert all(not np.any(r.values) for r in baseline_subtract(ms).values())

    ms = synthesize_measurements(make_scenario(), FS)
    shifted = MeasurementSet(
        ms.pairs,
        {p: t.with_values(t.values + 0.7) for p, t in ms.baseline.items()},
        {p: t.with_values(t.values + 0.7) for p, t in ms.damaged.items()},
        ms.sample_rate,
    )
    a, b = baseline_subtract(ms), baseline_subtract(shifted)
    for p in ms.pairs:
        np.testing.assert_allclose(b[p].values, a[p].values, atol=1e-12)


def test_baseline_subtract_mismatch():
    class Loose:
        pairs = [(0, 1)]
        baseline = {(0, 1): SignalTrace(FS, np.zeros(10))}
        damaged = {(0, 1): SignalTrace(FS, np.zeros(11))}

    with pytest.raises(ValueError):
        baseline_subtract(Loose())


# envelope ------------------------------------------------------------------------


@pytest.mark.parametrize("method", ["analytic", "iq_demod"])
def test_envelope_of_windowed_tone(method):
    spec = ExcitationSpec(FC, amplitude_pp=4.0)
    x = reference_waveform(spec, FS, duration=60e-6)
    env = envelope(x, method, FC)
    w = np.where(x.times <= spec.duration, window_values("hamming", np.clip(x.times / spec.duration, 0, 1)), 0)
    ref = 2.0 * w
    if method == "iq_demod":
        # the baseband filter delays the envelope by its DC group delay
        ref = np.interp(x.times - np.sqrt(2) / (2 * np.pi * 0.4 * FC), x.times, ref, left=0)
    assert nrmse(env.values, ref) < 0.03
    assert len(env) == len(x)


@pytest.mark.parametrize("method", ["analytic", "iq_demod"])
def test_envelope_zero_and_sign(method):
    z = envelope(SignalTrace(FS, np.zeros(300)), method, FC)
    assert not np.any(z.values)
    x = reference_waveform(ExcitationSpec(FC), FS, duration=40e-6)
    a = envelope(x, method, FC).values
    b = envelope(x.with_values(-x.values), method, FC).values
    np.testing.assert_allclose(a, b, atol=1e-12)
    assert np.all(a >= 0)


def test_envelope_needs_center_for_iq():
    with pytest.raises(ValueError):
        envelope(SignalTrace(FS, np.zeros(10)), "iq_demod")
    with pytest.raises(ValueError):
        envelope(SignalTrace(FS, np.zeros(10)), "matched")


# delay and sum -------------------------------------------------------------------


def test_all_zero_envelopes_give_zero_map():
    grid = GridSpec.covering(FOOT, FOOT, 0.01)
    envs = {(0, 1): SignalTrace(FS, np.zeros(100))}
    m = das_map([(0.1, 0.1), (0.2, 0.2)], envs, VG, grid)
    assert not np.any(m.intensity)
    assert locate(m) is None


def test_das_rejects_empty_and_bad_velocity():
    grid = GridSpec.covering(FOOT, FOOT, 0.01)
    with pytest.raises(ValueError):
        das_map([(0, 0), (1, 1)], {}, VG, grid)
    with pytest.raises(ValueError):
        das_map([(0, 0), (1, 1)], {(0, 1): SignalTrace(FS, np.ones(3))}, 0.0, grid)


def test_single_pair_ellipse(make_scenario):
    tr = [(0.06, 0.15), (0.24, 0.15)]
    damage = (0.1525, 0.2275)  # a pixel center at 5 mm spacing
    sc = make_scenario(transducers=tr, damage=damage)
    m, _, _ = image(sc, pairs=[(0, 1)])
    ix = int(np.argmin(np.abs(m.grid.x - damage[0])))
    iy = int(np.argmin(np.abs(m.grid.y - damage[1])))
    assert m.intensity[ix, iy] >= 0.99 * m.intensity.max()
    # envelopes are non-negative, so the map is too
    assert np.all(m.intensity >= 0)


def test_eight_transducer_localization(eight_pair_run):
    _, (m, _, _) = eight_pair_run
    loc = locate(m)
    assert error(loc) <= 5e-3
    assert m.intensity.max() == pytest.approx(1.0)
    assert m.intensity.shape == (61, 61)


def test_iq_envelope_localization(make_scenario):
    m, _, _ = image(make_scenario(), method="iq_demod")
    assert error(locate(m)) <= 5e-3


def test_scaling_invariance(eight_pair_run):
    sc, (m, envs, t0) = eight_pair_run
    scaled = {p: e.with_values(3.7 * e.values) for p, e in envs.items()}
    m2 = das_map(sc.transducers, scaled, VG, m.grid, t0)
    assert locate(m2)[:2] == locate(m)[:2]


def test_all_pairs_beat_two_pair_subsets(eight_pair_run):
    sc, (m, envs, t0) = eight_pair_run
    full = error(locate(m))
    rng = np.random.default_rng(11)
    pairs = sorted(envs)
    for _ in range(5):
        pick = [pairs[k] for k in rng.choice(len(pairs), 2, replace=False)]
        sub = das_map(sc.transducers, {p: envs[p] for p in pick}, VG, m.grid, t0)
        assert full <= error(locate(sub))


def test_pixel_time_hits_envelope_peak(eight_pair_run):
    sc, (_, envs, t0) = eight_pair_run
    for (i, j), env in envs.items():
        path = distance(sc.transducers[i], TRUTH) + distance(TRUTH, sc.transducers[j])
        v = np.interp(path / VG + t0, env.times, env.values)
        assert v >= 0.98 * env.values.max()


def test_compensated_map_still_localizes(eight_pair_run):
    sc, (m, envs, t0) = eight_pair_run
    m2 = das_map(sc.transducers, envs, VG, m.grid, t0, compensate_spreading=True)
    assert error(locate(m2)) <= 5e-3


# locate / export --------------------------------------------------------------


def test_locate_single_pixel_and_uniform():
    grid = GridSpec((0.0, 0.0), 0.01, 4, 3)
    inten = np.zeros((4, 3))
    inten[2, 1] = 0.4
    loc = locate(DamageMap(grid, inten))
    assert (loc.x, loc.y, loc.peak) == pytest.approx((0.025, 0.015, 0.4))
    loc = locate(DamageMap(grid, np.ones((4, 3))))
    assert (loc.x, loc.y) == pytest.approx((0.005, 0.005))


def test_grid_covers_plate():
    g = GridSpec.covering(FOOT, FOOT, 5e-3)
    assert g.nx * g.spacing >= FOOT and (g.nx - 1) * g.spacing < FOOT
    with pytest.raises(ValueError):
        GridSpec((0, 0), 0.0, 3, 3)


def test_pgm_layout():
    grid = GridSpec((0.0, 0.0), 0.01, 3, 2)
    inten = np.zeros((3, 2))
    inten[0, 1] = 1.0  # top-left when north is up
    inten[2, 0] = 0.5  # bottom-right
    data = DamageMap(grid, inten).pgm_bytes()
    header = b"P5\n3 2\n255\n"
    assert data.startswith(header)
    px = np.frombuffer(data[len(header):], np.uint8).reshape(2, 3)
    assert px[0, 0] == 255
    assert px[1, 2] == 128
    assert px.sum() == 255 + 128


def test_map_csv():
    grid = GridSpec((0.0, 0.0), 0.01, 2, 2)
    text = DamageMap(grid, np.arange(4.0).reshape(2, 2) / 3).csv_text()
    lines = text.splitlines()
    assert lines[0] == "x_m,y_m,intensity"
    assert len(lines) == 5
    assert lines[2] == "0.005,0.015,0.333333333"
