import numpy as np
import pytest
from scipy.signal import hilbert

from shmtrx.dispersion import build_curve
from shmtrx.excitation import ExcitationSpec, reference_waveform
from shmtrx.plate import (
    distance,
    path_delay,
    propagate,
    synthesize_measurements,
)
from shmtrx.signals import SignalTrace

FC = 200e3
FS = 10e6


def xcorr_lag(y, x):
    c = np.correlate(y, x, mode="full")
    return int(np.argmax(c)) - (len(x) - 1)


def width_6db(v, fs):
    env = np.abs(hilbert(v))
    above = np.flatnonzero(env >= 0.5 * env.max())
    return (above[-1] - above[0]) / fs


def test_path_delay(make_scenario):
    sc = make_scenario(velocity=5000.0)
    assert path_delay(sc, (0.1, 0.1), (0.1, 0.1)) == 0
    assert path_delay(sc, (0.0, 0.0), (0.15, 0.2)) == pytest.approx(50e-6, rel=1e-12)


def test_path_delay_from_curve_matches_constant(make_scenario, al15):
    curve = build_curve("A0", 50e3, 500e3, 40, al15)
    disp = make_scenario(velocity=curve)
    const = make_scenario(velocity=curve.interp_group_velocity(FC))
    a, b = (0.02, 0.03), (0.25, 0.2)
    assert path_delay(disp, a, b) == path_delay(const, a, b)


def test_path_delay_outside_curve(make_scenario, al15):
    curve = build_curve("A0", 300e3, 500e3, 10, al15)
    sc = make_scenario(velocity=curve)
    with pytest.raises(ValueError):
        path_delay(sc, (0, 0), (0.1, 0.1))


def test_zero_distance_preserves_shape(make_scenario):
    sc = make_scenario()
    x = reference_waveform(sc.excitation, FS)
    y = propagate(x, 0.0, sc)
    assert xcorr_lag(y.values, x.values) == 0
    np.testing.assert_allclose(y.values[: len(x)] * np.sqrt(0.01), x.values, atol=1e-9)


@pytest.mark.parametrize("d", [0.05, 0.137, 0.3])
def test_constant_velocity_is_pure_delay(make_scenario, d):
    sc = make_scenario()
    x = reference_waveform(sc.excitation, FS)
    y = propagate(x, d, sc)
    assert abs(xcorr_lag(y.values, x.values) - d / 3000 * FS) <= 1
    assert np.max(np.abs(y.values)) == pytest.approx(np.max(np.abs(x.values)) / np.sqrt(d), rel=0.01)


def test_a0_dispersion_widens_packet(make_scenario, al15):
    curve = build_curve("A0", 20e3, 1e6, 200, al15)
    sc = make_scenario(velocity=curve)
    x = reference_waveform(sc.excitation, FS)
    y = propagate(x, 0.5, sc)
    assert width_6db(y.values, FS) > width_6db(np.pad(x.values, (0, 2000)), FS)


def test_propagate_undersampled(make_scenario):
    sc = make_scenario()
    with pytest.raises(ValueError):
        propagate(SignalTrace(19 * FC, np.zeros(100)), 0.1, sc)


def test_no_damage_and_zero_coefficient(make_scenario):
    for sc in (make_scenario(damage=None), make_scenario(scatter_coeff=0.0)):
        ms = synthesize_measurements(sc, FS)
        for p in ms.pairs:
            np.testing.assert_array_equal(ms.damaged[p].values, ms.baseline[p].values)


def test_residual_delay_matches_scatter_path(make_scenario):
    sc = make_scenario(transducers=[(0.05, 0.05), (0.25, 0.08)], damage=(0.18, 0.22))
    ms = synthesize_measurements(sc, FS)
    x = reference_waveform(sc.excitation, FS).values
    for (i, j) in ms.pairs:
        r = ms.damaged[(i, j)].values - ms.baseline[(i, j)].values
        path = distance(sc.transducers[i], sc.damage) + distance(sc.damage, sc.transducers[j])
        assert abs(xcorr_lag(r, x) - path / 3000 * FS) <= 1


def test_reciprocity(make_scenario):
    ms = synthesize_measurements(make_scenario(), FS)
    for i, j in ms.pairs:
        np.testing.assert_array_equal(ms.baseline[(i, j)].values, ms.baseline[(j, i)].values)


@pytest.mark.parametrize("coeff", [0.3, -0.8, 0.5j])
def test_superposition(make_scenario, coeff):
    sc = make_scenario(scatter_coeff=coeff)
    ms = synthesize_measurements(sc, FS)
    x = reference_waveform(sc.excitation, FS)
    n = len(ms.baseline[(0, 1)])
    for i, j in [(0, 1), (3, 6)]:
        path = distance(sc.transducers[i], sc.damage) + distance(sc.damage, sc.transducers[j])
        expect = propagate(x, path, sc, n, coeff=coeff).values
        r = ms.damaged[(i, j)].values - ms.baseline[(i, j)].values
        np.testing.assert_allclose(r, expect, rtol=0, atol=1e-12)


def test_complex_coefficient_rotates_phase(make_scenario):
    sc = make_scenario()
    x = reference_waveform(sc.excitation, FS)
    a = propagate(x, 0.2, sc, 2000, coeff=1.0).values
    b = propagate(x, 0.2, sc, 2000, coeff=1j).values
    # a 90 degree shift of every component is the negated Hilbert transform
    np.testing.assert_allclose(b, -np.imag(hilbert(a)), atol=2e-3 * np.abs(a).max())


def test_residual_energy_falls_with_distance(make_scenario):
    tr = [(0.1, 0.15), (0.2, 0.15)]
    rms = []
    for y in (0.17, 0.22, 0.28):
        sc = make_scenario(transducers=tr, damage=(0.15, y))
        ms = synthesize_measurements(sc, FS)
        r = ms.damaged[(0, 1)].values - ms.baseline[(0, 1)].values
        rms.append(np.sqrt(np.mean(r**2)))
    assert rms[0] > rms[1] > rms[2]


def test_common_time_grid(make_scenario):
    ms = synthesize_measurements(make_scenario(), FS)
    lengths = {len(ms.baseline[p]) for p in ms.pairs} | {len(ms.damaged[p]) for p in ms.pairs}
    assert len(lengths) == 1
    assert all(ms.baseline[p].start_time == 0 for p in ms.pairs)
    assert len(ms.pairs) == 56


def test_edge_reflections_add_echoes(make_scenario):
    plain = synthesize_measurements(make_scenario(damage=None), FS)
    echo = synthesize_measurements(make_scenario(damage=None, edge_reflections=True), FS)
    p = (0, 4)
    assert np.sum(echo.baseline[p].values ** 2) > np.sum(plain.baseline[p].values ** 2)


@pytest.mark.parametrize(
    "kw, field",
    [
        ({"transducers": [(0.1, 0.1), (0.4, 0.1)]}, "transducer.1"),
        ({"damage": (0.1, -0.01)}, "damage"),
        ({"scatter_coeff": 1.5}, "damage.coeff"),
        ({"velocity": -1.0}, "vg_mps"),
        ({"transducers": [(0.1, 0.1)]}, "transducers"),
    ],
)
def test_scenario_validation(make_scenario, kw, field):
    with pytest.raises(ValueError, match=field):
        make_scenario(**kw)


def test_excitation_spec_shared(make_scenario):
    sc = make_scenario(excitation=ExcitationSpec(300e3, n_cycles=3))
    ms = synthesize_measurements(sc, 20e6)
    assert ms.sample_rate == 20e6
