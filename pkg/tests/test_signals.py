from math import pi

import numpy as np
import pytest
from scipy import signal as sps

from shmtrx.signals import IQTrace, SignalTrace, biquad_lowpass, nrmse, onepole_lowpass


def test_trace_basics():
    tr = SignalTrace(1e3, np.arange(5.0), start_time=0.5)
    np.testing.assert_allclose(tr.times, 0.5 + np.arange(5) / 1e3)
    assert tr.dt == 1e-3 and len(tr) == 5
    with pytest.raises(ValueError):
        SignalTrace(0.0, np.zeros(3))
    iq = IQTrace(1e3, np.array([1 + 2j]))
    assert iq.i[0] == 1 and iq.q[0] == 2


def test_biquad_matches_scipy_bilinear():
    fc, q, fs = 120e3, 0.9, 5e6
    b, a = biquad_lowpass(fc, q, fs)
    w0 = 2 * pi * fc
    # prewarping at fc is scipy's bilinear map with a rescaled sample rate
    fs_warp = pi * fc / np.tan(pi * fc / fs)
    bz, az = sps.bilinear([w0**2], [1, w0 / q, w0**2], fs=fs_warp)
    np.testing.assert_allclose(b, bz, rtol=1e-10)
    np.testing.assert_allclose(a, az, rtol=1e-10)


def test_onepole_step_invariant():
    fc, fs = 1e6, 20e6
    b, a = onepole_lowpass(fc, fs)
    y = sps.lfilter(b, a, np.ones(50))
    t = np.arange(1, 51) / fs
    np.testing.assert_allclose(y, 1 - np.exp(-2 * pi * fc * t), rtol=1e-12)


def test_nrmse():
    ref = np.array([0.0, 1.0, 0.0, -1.0])
    assert nrmse(ref, ref) == 0
    assert nrmse(ref + 0.2, ref) == pytest.approx(0.1)
    assert nrmse(np.zeros(3), np.zeros(3)) == 0
