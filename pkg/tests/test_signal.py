import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from nilmvis.errors import BadLength, NoFundamental, TooShort, ZeroSpectrum
from nilmvis.signal import (
    CurrentCycle,
    WaveletConfig,
    dwt_level1,
    extract_cycle,
    extract_features,
    harmonic_content,
    harmonic_spectrum,
    read_waveform_csv,
    write_waveform_csv,
)

N = 80
finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
cycles = arrays(np.float64, N, elements=finite)


def naive_dft(c):
    """Direct O(N^2) sum over n = 1..N with 1/N scaling, bins 0..N/2."""
    n_len = len(c)
    out = np.zeros(n_len // 2 + 1, dtype=complex)
    for k in range(n_len // 2 + 1):
        acc = 0j
        for n in range(1, n_len + 1):
            acc += c[n % n_len] * complex(math.cos(2 * math.pi * k * n / n_len), -math.sin(2 * math.pi * k * n / n_len))
        out[k] = acc / n_len
    return out


def cyc(x):
    return CurrentCycle(np.asarray(x, dtype=float))


# --- CurrentCycle ---------------------------------------------------------


def test_cycle_rejects_odd_and_short():
    with pytest.raises(BadLength):
        cyc(np.zeros(7))
    with pytest.raises(BadLength):
        cyc(np.zeros(2))


def test_cycle_rejects_non_finite():
    x = np.zeros(N)
    x[3] = np.nan
    with pytest.raises(ValueError):
        cyc(x)


def test_cycle_sample_rate():
    c = CurrentCycle(np.zeros(N), mains_freq=60.0)
    assert c.n == 80 and c.sample_rate == 4800.0


# --- wavelet --------------------------------------------------------------


@pytest.mark.parametrize("family", ["haar", "db4"])
def test_filter_banks_orthonormal(family):
    cfg = WaveletConfig(family)
    assert abs(cfg.low_pass @ cfg.low_pass - 1) < 1e-14
    assert abs(cfg.high_pass @ cfg.high_pass - 1) < 1e-14


def test_non_orthonormal_bank_rejected():
    with pytest.raises(ValueError):
        WaveletConfig(low_pass=np.array([1.0, 1.0]), high_pass=np.array([1.0, -1.0]))


def test_haar_constant():
    a = 3.7
    s_a, s_d = dwt_level1(cyc(np.full(N, a)))
    assert s_a.shape == s_d.shape == (40,)
    np.testing.assert_allclose(s_a, a * math.sqrt(2), rtol=0, atol=1e-14)
    np.testing.assert_allclose(s_d, 0.0, atol=1e-14)


def test_haar_alternating():
    s_a, s_d = dwt_level1(cyc(np.tile([1.0, -1.0], N // 2)))
    np.testing.assert_allclose(s_a, 0.0, atol=1e-15)
    np.testing.assert_allclose(s_d, math.sqrt(2), atol=1e-15)


def test_dwt_periodic_extension_wraps():
    # db4 taps reach past the end; the last coefficient must mix c[78], c[79], c[0], c[1]
    x = np.zeros(N)
    x[0] = 1.0
    s_a, _ = dwt_level1(cyc(x), WaveletConfig("db4"))
    lo = WaveletConfig("db4").low_pass
    assert s_a[39] == pytest.approx(lo[2])
    assert s_a[0] == pytest.approx(lo[0])


@settings(max_examples=200, deadline=None)
@given(cycles, st.sampled_from(["haar", "db4"]))
def test_dwt_energy_conservation(x, family):
    s_a, s_d = dwt_level1(cyc(x), WaveletConfig(family))
    e = float(x @ x)
    got = float(s_a @ s_a + s_d @ s_d)
    assert abs(got - e) <= 1e-9 * max(e, 1e-300)


# --- spectrum -------------------------------------------------------------


def test_cosine_spectrum():
    n = np.arange(N)
    r = harmonic_spectrum(cyc(np.cos(2 * np.pi * n / N))).magnitudes
    assert r[1] == pytest.approx(0.5, abs=1e-12)
    assert np.all(np.delete(r, 1) < 1e-12)


def test_two_tone_spectrum():
    n = np.arange(N)
    r = harmonic_spectrum(cyc(np.cos(2 * np.pi * n / N) + 0.5 * np.cos(2 * np.pi * 3 * n / N))).magnitudes
    assert r[1] == pytest.approx(0.5, abs=1e-12)
    assert r[3] == pytest.approx(0.25, abs=1e-12)


def test_zero_spectrum_is_zero():
    assert np.all(harmonic_spectrum(cyc(np.zeros(N))).r == 0)


def test_dc_bin_is_real():
    rng = np.random.default_rng(5)
    r = harmonic_spectrum(cyc(rng.normal(size=N))).r
    assert r[0].imag == 0.0 and r.shape == (41,)


@settings(max_examples=50, deadline=None)
@given(cycles)
def test_spectrum_matches_naive_dft(x):
    got = harmonic_spectrum(cyc(x)).r
    want = naive_dft(x)
    assert np.max(np.abs(got - want)) <= 1e-12 * max(1.0, np.abs(x).max())


@settings(max_examples=100, deadline=None)
@given(cycles, cycles, st.floats(-3, 3), st.floats(-3, 3))
def test_spectrum_linearity(x, y, a, b):
    lhs = harmonic_spectrum(cyc(a * x + b * y)).r
    rhs = a * harmonic_spectrum(cyc(x)).r + b * harmonic_spectrum(cyc(y)).r
    scale = max(1.0, np.abs(x).max() * abs(a) + np.abs(y).max() * abs(b))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


# --- harmonic content -----------------------------------------------------


def test_pure_fundamental_content():
    s_h = harmonic_content(harmonic_spectrum(cyc(np.sin(2 * np.pi * np.arange(N) / N))))
    assert s_h.shape == (40,)
    assert s_h[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all(s_h[1:] < 1e-12)


def test_zero_cycle_has_no_content():
    with pytest.raises(ZeroSpectrum):
        harmonic_content(harmonic_spectrum(cyc(np.zeros(N))))
    with pytest.raises(ZeroSpectrum):
        extract_features(cyc(np.zeros(N)))


def test_dc_only_cycle_has_no_content():
    with pytest.raises(ZeroSpectrum):
        harmonic_content(harmonic_spectrum(cyc(np.full(N, 2.0))))


@settings(max_examples=200, deadline=None)
@given(cycles.filter(lambda x: np.ptp(x) > 1e-6))
def test_content_normalised_and_nonnegative(x):
    s_h = harmonic_content(harmonic_spectrum(cyc(x)))
    assert np.all(s_h >= 0)
    assert abs(s_h.sum() - 1.0) <= 1e-9


@settings(max_examples=200, deadline=None)
@given(cycles.filter(lambda x: np.ptp(x) > 1e-3), st.floats(1e-3, 1e3))
def test_content_amplitude_invariant(x, alpha):
    a = harmonic_content(harmonic_spectrum(cyc(x)))
    b = harmonic_content(harmonic_spectrum(cyc(alpha * x)))
    assert np.max(np.abs(a - b)) <= 1e-12


# --- extract_features -----------------------------------------------------


def test_features_of_pure_sine():
    f = extract_features(cyc(np.sin(2 * np.pi * np.arange(N) / N)))
    assert f.s_a.shape == f.s_d.shape == f.s_h.shape == (40,)
    # Haar detail of a slow sine is a scaled derivative: small next to the approximation
    assert np.abs(f.s_d).max() < 0.06 * np.abs(f.s_a).max()
    np.testing.assert_allclose(f.s_h, np.eye(40)[0], atol=1e-12)


def test_features_deterministic():
    x = np.random.default_rng(1).normal(size=N)
    f1, f2 = extract_features(cyc(x)), extract_features(cyc(x.copy()))
    for a, b in zip((f1.s_a, f1.s_d, f1.s_h), (f2.s_a, f2.s_d, f2.s_h)):
        assert np.array_equal(a, b)


# --- extract_cycle --------------------------------------------------------


@pytest.mark.parametrize("rate", [8000.0, 10000.0, 12345.0, 30000.0])
@pytest.mark.parametrize("phase", [0.0, 1.0, 2.5, 4.0])
def test_extract_cycle_aligns_rising_zero(rate, phase):
    f0 = 50.0
    t = np.arange(int(rate * 0.1)) / rate
    c = extract_cycle(np.sin(2 * np.pi * f0 * t + phase), rate, f0)
    assert c.n == 80 and c.mains_freq == f0
    assert abs(c.samples[0]) < 0.02  # starts near zero
    assert c.samples[1] > c.samples[0]  # rising
    # one full period: the resampled cycle is the sine itself
    np.testing.assert_allclose(c.samples, np.sin(2 * np.pi * np.arange(80) / 80), atol=0.02)


def test_extract_cycle_plaid_rate_preserves_fundamental():
    rate, f0 = 30000.0, 60.0
    rng = np.random.default_rng(3)
    t = np.arange(2000) / rate
    raw = 2.0 * np.sin(2 * np.pi * f0 * t + 0.7) + 0.5 * np.sin(2 * np.pi * 3 * f0 * t + 0.2)
    raw += rng.normal(0, 0.01, raw.size)
    c = extract_cycle(raw, rate, f0)
    # fundamental magnitude of the last raw period via the independent DFT oracle
    last = raw[-500:]
    want = np.abs(naive_dft(last[::1])[1])
    got = np.abs(naive_dft(c.samples)[1])
    assert got == pytest.approx(want, rel=0.01)


def test_extract_cycle_uses_last_cycle():
    rate, f0 = 8000.0, 50.0
    t = np.arange(800) / rate
    amp = np.where(t < 0.05, 1.0, 3.0)  # load steps up halfway
    c = extract_cycle(amp * np.sin(2 * np.pi * f0 * t), rate, f0)
    assert np.abs(c.samples).max() == pytest.approx(3.0, rel=0.01)


def test_extract_cycle_errors():
    with pytest.raises(NoFundamental):
        extract_cycle(np.zeros(1000), 8000.0, 50.0)
    with pytest.raises(TooShort):
        extract_cycle(np.sin(np.arange(200)), 8000.0, 50.0)  # 1.25 cycles
    with pytest.raises(ValueError):
        extract_cycle(np.sin(np.arange(1000)), 1000.0, 50.0)  # below 80 samples per cycle
    bad = np.sin(2 * np.pi * np.arange(1000) / 160)
    bad[10] = np.inf
    with pytest.raises(TooShort):
        extract_cycle(bad, 8000.0, 50.0)


# --- CSV ------------------------------------------------------------------


def test_waveform_csv_roundtrip(tmp_path):
    x = np.random.default_rng(2).normal(size=123)
    p = tmp_path / "w.csv"
    write_waveform_csv(p, x)
    assert p.read_text().startswith("current\n")
    assert np.array_equal(read_waveform_csv(p), x)


def test_waveform_csv_without_header(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("1.5\n-2\n3e-1\n")
    np.testing.assert_array_equal(read_waveform_csv(p), [1.5, -2.0, 0.3])


def test_waveform_csv_garbage(tmp_path):
    p = tmp_path / "w.csv"
    p.write_text("current\n1.0\nabc\n")
    with pytest.raises(TooShort):
        read_waveform_csv(p)
