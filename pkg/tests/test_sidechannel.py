import math
import wave

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from scadasim.rng import SimRandom
from scadasim.sidechannel import (CLAMP_DB, SAMPLE_RATE, AudioModel, TemperatureModel, Timeline,
                                  baseline_temperature, compute_spectrum, read_sidechannel_csv, read_wav,
                                  synth_audio, write_sidechannel_csv, write_wav)


def direct_dft_amplitude(x, k):
    """Hann-windowed amplitude at bin k from the DFT definition."""
    n = len(x)
    m = np.arange(n)
    w = 0.5 - 0.5 * np.cos(2 * np.pi * m / n)
    X = np.sum(x * w * np.exp(-2j * np.pi * k * m / n))
    return 2 * abs(X) / w.sum()


def test_sine_reads_minus_ten_dbfs():
    n = 8192
    x = 0.3162 * np.sin(2 * np.pi * 1000.0 * np.arange(n) / SAMPLE_RATE)
    spec = compute_spectrum(x, n)
    k = int(round(1000.0 * n / SAMPLE_RATE))
    assert k == 1024 and int(np.argmax(spec.magnitude_db)) == k
    assert spec.magnitude_db[k] == pytest.approx(-10.0, abs=0.5)
    assert spec.amplitude[k] == pytest.approx(direct_dft_amplitude(x, k), rel=1e-9)


def test_zeros_clamp():
    spec = compute_spectrum(np.zeros(1024), 1024)
    assert np.all(spec.magnitude_db == CLAMP_DB)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([64, 256, 1024]))
def test_parseval_rectangular(seed, n):
    x = np.random.default_rng(seed).standard_normal(n)
    spec = compute_spectrum(x, n, window="rect")
    assert spec.mean_power() == pytest.approx(np.mean(x ** 2), rel=1e-9)


@pytest.mark.parametrize("n", [0, 1000])
def test_bad_sizes(n):
    with pytest.raises(ValueError):
        compute_spectrum(np.zeros(2048), n)


def timeline(pump, valve, seconds=10.0, flow=3.0):
    t = np.round(np.arange(int(seconds * 10)) * 0.1, 1)
    p = np.full(len(t), pump)
    return Timeline(0.1, t, p, np.full(len(t), valve), np.where(p, flow, 0.0), baseline_temperature(t))


def test_idle_audio_is_noise_only():
    x = synth_audio(timeline(False, False), SimRandom(0))
    assert compute_spectrum(x, 8192).magnitude_db.max() < -50
    assert np.std(x) == pytest.approx(0.001, rel=0.05)


def test_running_and_dry_tones():
    run = compute_spectrum(synth_audio(timeline(True, False), SimRandom(0)), 8192)
    assert run.peak_db(540, 560) == pytest.approx(-20, abs=0.5)
    assert run.peak_db(990, 1010) == pytest.approx(-20, abs=0.5)
    assert run.peak_db(290, 310) < -50
    dry = compute_spectrum(synth_audio(timeline(True, False, flow=0.0), SimRandom(0)), 8192)
    assert dry.peak_db(290, 310) == pytest.approx(-10, abs=0.5)


def test_leak_band_rises_six_db():
    idle = synth_audio(timeline(False, False, 30.0), SimRandom(1))
    leak = synth_audio(timeline(False, True, 30.0), SimRandom(1))

    def band(x, lo, hi):
        s = compute_spectrum(x, 4096)
        sel = (s.freqs >= lo) & (s.freqs <= hi)
        return 10 * np.log10(np.mean(s.amplitude[sel] ** 2))

    assert band(leak, 200, 1900) - band(idle, 200, 1900) == pytest.approx(6.0, abs=0.5)
    assert band(leak, 2500, 3900) - band(idle, 2500, 3900) == pytest.approx(0.0, abs=0.5)


def test_audio_model_validation():
    with pytest.raises(ValueError):
        AudioModel(normal=((5000.0, 0.1, 0.0),))
    with pytest.raises(ValueError):
        AudioModel(leak_band=(3000.0, 100.0))


def test_max_sixty_second_baseline_swing_matches_analytic():
    t = np.arange(0, 1200, 0.1)
    temp = baseline_temperature(t)
    w = 600
    swing = max(np.ptp(temp[i:i + w + 1]) for i in range(0, len(t) - w, 5))
    assert swing == pytest.approx(0.4 * math.sin(math.pi * 60 / 600), abs=1e-3)


def test_jitter_range_and_pinning():
    model = TemperatureModel.draw([(100.0, 160.0)], SimRandom(2))
    t = np.arange(0, 300, 0.1)
    jitter = model(t) - baseline_temperature(t)
    assert np.all(np.abs(jitter) <= 0.25 + 1e-12)
    assert np.all(jitter[(t < 100) | (t >= 160)] == 0)
    assert np.ptp(model(t)) < 1.0
    assert model.at(100.0) == pytest.approx(baseline_temperature(100.0))


def test_wav_format(tmp_path):
    x = synth_audio(timeline(True, False, 1.0), SimRandom(0))
    path = tmp_path / "a.wav"
    write_wav(path, x)
    with wave.open(str(path)) as wf:
        assert (wf.getnchannels(), wf.getsampwidth(), wf.getframerate()) == (1, 2, 8000)
        assert wf.getnframes() == 8000
    back, rate = read_wav(path)
    assert rate == 8000 and np.max(np.abs(back - x)) <= 1 / 32767


def test_bad_wav(tmp_path):
    path = tmp_path / "bad.wav"
    path.write_bytes(b"RIFF0000WAVE")
    with pytest.raises(ValueError):
        read_wav(path)


def test_sidechannel_csv_round_trip(tmp_path):
    tl = timeline(True, False, 2.0)
    path = tmp_path / "s.csv"
    write_sidechannel_csv(path, tl)
    t, flow, temp = read_sidechannel_csv(path)
    np.testing.assert_array_equal(flow, tl.true_flow)
    np.testing.assert_allclose(t, tl.t)
    np.testing.assert_allclose(temp, tl.temp_c, atol=1e-6)
    assert open(path).readline().strip() == "t_s,true_flow_lpm,true_temp_c"
