"""Pump acoustics, physical flow/temperature channel, and spectrum analysis."""
from dataclasses import dataclass, field
import csv
import wave

import numpy as np

SAMPLE_RATE = 8000
NOISE_FLOOR_DBFS = -60.0
NORMAL_TONES = ((550.0, 0.1), (1000.0, 0.1))  # about -20 dBFS each
DRY_TONE = (300.0, 0.3162)  # about -10 dBFS
DRY_FLOOR_GAIN_DB = 6.0
LEAK_BAND = (100.0, 2000.0)
LEAK_GAIN_DB = 6.0
CROSSFADE_S = 0.05
CLAMP_DB = -120.0

TEMP_BASE_C = 20.0
TEMP_SWING_C = 0.2
TEMP_PERIOD_S = 600.0
JITTER_KNOT_S = 1.0
JITTER_HALF_RANGE_C = 0.25
CSV_FIELDS = ("t_s", "true_flow_lpm", "true_temp_c")


def db_to_amplitude(db):
    return 10.0 ** (db / 20.0)


@dataclass(frozen=True)
class AudioModel:
    sample_rate: int = SAMPLE_RATE
    # (frequency Hz, linear amplitude, bandwidth Hz); bandwidth 0 is a pure tone
    normal: tuple = tuple((f, a, 0.0) for f, a in NORMAL_TONES)
    dry: tuple = ((DRY_TONE[0], DRY_TONE[1], 0.0),)
    noise_floor_dbfs: float = NOISE_FLOOR_DBFS
    dry_floor_gain_db: float = DRY_FLOOR_GAIN_DB
    leak_band: tuple = LEAK_BAND
    leak_gain_db: float = LEAK_GAIN_DB
    crossfade_s: float = CROSSFADE_S

    def __post_init__(self):
        for f, a, _ in self.normal + self.dry:
            if not 0 < f < self.sample_rate / 2:
                raise ValueError(f"component at {f} Hz is not below Nyquist")
            if not 0 < a <= 1:
                raise ValueError(f"component amplitude {a} not in (0, 1]")
        lo, hi = self.leak_band
        if not 0 <= lo < hi <= self.sample_rate / 2:
            raise ValueError(f"bad leak band {self.leak_band}")


@dataclass
class Timeline:
    """Per-step physical truth in capture time, one entry per dt."""

    dt: float
    t: np.ndarray
    pump_on: np.ndarray
    valve_open: np.ndarray
    true_flow: np.ndarray
    temp_c: np.ndarray

    def __post_init__(self):
        n = len(self.t)
        for name in ("pump_on", "valve_open", "true_flow", "temp_c"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"timeline field {name} has the wrong length")

    @property
    def dry(self):
        return self.pump_on & (self.true_flow == 0.0)


def _envelope(flags, samples_per_step, n, smooth):
    env = np.repeat(flags.astype(np.float64), samples_per_step)[:n]
    if len(env) < n:
        env = np.concatenate([env, np.full(n - len(env), env[-1] if len(env) else 0.0)])
    if smooth > 1:
        pad = np.concatenate([np.full(smooth // 2, env[0]), env, np.full(smooth - 1 - smooth // 2, env[-1])])
        kernel = np.ones(smooth) / smooth
        env = np.convolve(pad, kernel, mode="valid")
    return env


def synth_audio(timeline, rng, model=AudioModel()):
    """Float samples in [-1, 1] for the whole timeline.

    Draws from ``rng`` in a fixed order: floor noise, then leak-band noise.
    """
    fs = model.sample_rate
    spp = int(round(timeline.dt * fs))
    n = len(timeline.t) * spp
    t = timeline.t[0] + np.arange(n) / fs
    smooth = max(1, int(round(model.crossfade_s * fs)))
    running = _envelope(timeline.pump_on, spp, n, smooth)
    dry = _envelope(timeline.dry, spp, n, smooth)
    leak = _envelope(timeline.valve_open & ~timeline.pump_on, spp, n, smooth)

    sigma = db_to_amplitude(model.noise_floor_dbfs)
    floor_gain = 1.0 + (db_to_amplitude(model.dry_floor_gain_db) - 1.0) * dry
    out = sigma * floor_gain * rng.normal(n)
    # extra in-band noise so the band PSD rises by leak_gain_db over the floor
    extra = np.sqrt(10.0 ** (model.leak_gain_db / 10.0) - 1.0) * sigma
    spectrum = np.fft.rfft(rng.normal(n, extra))
    freqs = np.fft.rfftfreq(n, 1.0 / fs)
    lo, hi = model.leak_band
    spectrum[(freqs < lo) | (freqs > hi)] = 0.0
    band = np.fft.irfft(spectrum, n)
    out += leak * band
    for f, a, _ in model.normal:
        out += running * a * np.sin(2.0 * np.pi * f * t)
    for f, a, _ in model.dry:
        out += dry * a * np.sin(2.0 * np.pi * f * t)
    return np.clip(out, -1.0, 1.0)


def to_pcm16(samples):
    return np.round(np.clip(samples, -1.0, 1.0) * 32767.0).astype("<i2")


def write_wav(path, samples, sample_rate=SAMPLE_RATE):
    try:
        with wave.open(str(path), "wb") as wf:
            wf.setnchannels(1)
            wf.setsampwidth(2)
            wf.setframerate(sample_rate)
            wf.writeframes(to_pcm16(samples).tobytes())
    except OSError as exc:
        raise OSError(f"cannot write wav {path}: {exc}") from exc


def read_wav(path):
    """(samples scaled to [-1, 1], sample_rate) from a 16-bit mono PCM WAV."""
    try:
        with wave.open(str(path), "rb") as wf:
            if wf.getnchannels() != 1 or wf.getsampwidth() != 2 or wf.getcomptype() != "NONE":
                raise ValueError(f"{path}: expected 16-bit mono PCM")
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError) as exc:
        raise ValueError(f"{path}: malformed WAV ({exc})") from exc
    return np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32767.0, rate


@dataclass
class SpectrumEstimate:
    bin_hz: float
    # per-bin sine amplitude (DC and Nyquist as plain amplitudes)
    amplitude: np.ndarray
    window: str
    n: int
    segments: int
    magnitude_db: np.ndarray = field(init=False)

    def __post_init__(self):
        with np.errstate(divide="ignore"):
            db = 20.0 * np.log10(self.amplitude)
        self.magnitude_db = np.maximum(db, CLAMP_DB)

    @property
    def freqs(self):
        return np.arange(len(self.amplitude)) * self.bin_hz

    def peak_db(self, lo, hi):
        f = self.freqs
        sel = (f >= lo) & (f <= hi)
        return float(self.magnitude_db[sel].max())

    def mean_power(self):
        """Signal mean square implied by the amplitudes (exact for one rectangular segment)."""
        a = self.amplitude
        return float(a[0] ** 2 + a[-1] ** 2 + 0.5 * np.sum(a[1:-1] ** 2))


def compute_spectrum(samples, n, sample_rate=SAMPLE_RATE, window="hann"):
    """Averaged n-point magnitude spectrum over 50%-overlapped segments.

    Segment power spectra are averaged, then scaled by the window's coherent
    gain so a full-scale sine reads 0 dBFS.
    """
    if n <= 0 or n & (n - 1):
        raise ValueError(f"n must be a power of two, got {n}")
    x = np.asarray(samples, dtype=np.float64)
    if len(x) < n:
        raise ValueError(f"need at least {n} samples, got {len(x)}")
    if window == "hann":
        w = np.hanning(n + 1)[:n]  # periodic Hann
    elif window in ("rect", "none"):
        w = np.ones(n)
    else:
        raise ValueError(f"unknown window {window!r}")
    hop = n // 2
    starts = range(0, len(x) - n + 1, hop)
    power = np.zeros(n // 2 + 1)
    for s in starts:
        power += np.abs(np.fft.rfft(x[s:s + n] * w)) ** 2
    power /= len(starts)
    amp = np.sqrt(power) * (2.0 / w.sum())
    amp[0] *= 0.5
    amp[-1] *= 0.5
    return SpectrumEstimate(sample_rate / n, amp, window, n, len(starts))


def band_power(samples, sample_rate, lo, hi):
    """Hann-windowed power summed over bins in [lo, hi] Hz."""
    w = np.hanning(len(samples) + 1)[:len(samples)]
    spec = np.abs(np.fft.rfft(samples * w)) ** 2
    f = np.fft.rfftfreq(len(samples), 1.0 / sample_rate)
    return float(spec[(f >= lo) & (f <= hi)].sum())


def baseline_temperature(t):
    return TEMP_BASE_C + TEMP_SWING_C * np.sin(2.0 * np.pi * np.asarray(t, dtype=np.float64) / TEMP_PERIOD_S)


@dataclass(frozen=True)
class TemperatureModel:
    """Baseline drift plus piecewise-linear jitter inside attack windows."""

    windows: tuple = ()  # ((t0, t1, knot values), ...)

    @classmethod
    def draw(cls, windows, rng):
        """Knots every second over each window, endpoints pinned to zero."""
        out = []
        for t0, t1 in windows:
            count = int(np.floor((t1 - t0) / JITTER_KNOT_S)) + 1
            knots = rng.uniform(count, -JITTER_HALF_RANGE_C, JITTER_HALF_RANGE_C)
            knots[0] = 0.0
            knots[-1] = 0.0
            out.append((float(t0), float(t1), tuple(float(k) for k in knots)))
        return cls(tuple(out))

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        temp = baseline_temperature(t)
        for t0, t1, knots in self.windows:
            xs = t0 + JITTER_KNOT_S * np.arange(len(knots))
            inside = (t >= t0) & (t < t1)
            temp = np.where(inside, temp + np.interp(t, xs, knots), temp)
        return temp

    def at(self, t):
        return float(self(np.array([t]))[0])


def write_sidechannel_csv(path, timeline):
    """Physical truth at the step rate (10 Hz for dt = 0.1 s)."""
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_FIELDS)
            for t, flow, temp in zip(timeline.t, timeline.true_flow, timeline.temp_c):
                writer.writerow([f"{t:.1f}", repr(float(flow)), f"{temp:.6f}"])
    except OSError as exc:
        raise OSError(f"cannot write side-channel csv {path}: {exc}") from exc


def read_sidechannel_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_FIELDS:
            raise ValueError(f"{path}: unexpected side-channel header {header}")
        rows = np.array([[float(v) for v in row] for row in reader], dtype=np.float64)
    if rows.size == 0:
        rows = rows.reshape(0, 3)
    return rows[:, 0], rows[:, 1], rows[:, 2]
