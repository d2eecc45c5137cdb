"""Per-cycle current features: wavelet approximation/detail and harmonic content."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import BadLength, NoFundamental, TooShort, ZeroSpectrum

CYCLE_LEN = 80
N_HARMONICS = CYCLE_LEN // 2

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class CurrentCycle:
    """One steady-state mains period of current samples."""

    samples: np.ndarray
    mains_freq: float = 50.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim != 1:
            raise BadLength(f"cycle must be 1-D, got shape {s.shape}")
        if s.size < 4 or s.size % 2:
            raise BadLength(f"cycle length must be even and >= 4, got {s.size}")
        if not np.all(np.isfinite(s)):
            raise ValueError("cycle contains non-finite samples")
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def sample_rate(self) -> float:
        return self.n * self.mains_freq


def _daubechies4():
    r3 = math.sqrt(3.0)
    h = np.array([1 + r3, 3 + r3, 3 - r3, 1 - r3]) / (4 * _SQRT2)
    g = np.array([h[3], -h[2], h[1], -h[0]])
    return h, g


@dataclass(frozen=True)
class WaveletConfig:
    family: str = "haar"
    level: int = 1
    low_pass: np.ndarray = field(default=None, repr=False)
    high_pass: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.level != 1:
            raise ValueError("only single-level decomposition is supported")
        if self.low_pass is None or self.high_pass is None:
            fam = self.family.lower()
            if fam == "haar":
                lo = np.array([1.0, 1.0]) / _SQRT2
                hi = np.array([1.0, -1.0]) / _SQRT2
            elif fam in ("db4", "daubechies4"):
                lo, hi = _daubechies4()
            else:
                raise ValueError(f"unknown wavelet family {self.family!r}")
            object.__setattr__(self, "low_pass", lo)
            object.__setattr__(self, "high_pass", hi)
        if not is_orthonormal(self.low_pass, self.high_pass):
            raise ValueError("filter bank is not orthonormal")


def is_orthonormal(lo, hi, tol=1e-12) -> bool:
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    if lo.shape != hi.shape or lo.size % 2:
        return False
    if abs(lo @ lo - 1) > tol or abs(hi @ hi - 1) > tol:
        return False
    for s in range(0, lo.size, 2):
        if abs(lo[s:] @ hi[: lo.size - s]) > tol or abs(hi[s:] @ lo[: lo.size - s]) > tol:
            return False
        if s and (abs(lo[s:] @ lo[: lo.size - s]) > tol or abs(hi[s:] @ hi[: lo.size - s]) > tol):
            return False
    return True


@dataclass(frozen=True)
class FeatureTriple:
    s_a: np.ndarray
    s_d: np.ndarray
    s_h: np.ndarray


@dataclass(frozen=True)
class HarmonicSpectrum:
    """DFT bins r(0..N/2) of one period, scaled by 1/N."""

    r: np.ndarray

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.r)


def read_waveform_csv(path) -> np.ndarray:
    """Read one current sample per line; a single ``current`` header is allowed."""
    lines = Path(path).read_text().split()
    if lines and lines[0].strip().lower() == "current":
        lines = lines[1:]
    try:
        values = np.array([float(v) for v in lines], dtype=np.float64)
    except ValueError as exc:
        raise TooShort(f"{path}: unparseable sample ({exc})") from None
    return values


def write_waveform_csv(path, samples) -> None:
    body = "\n".join(repr(float(v)) for v in samples)
    Path(path).write_text("current\n" + body + "\n")


def extract_cycle(raw, raw_rate: float, mains_freq: float = 50.0, n: int = CYCLE_LEN) -> CurrentCycle:
    """Cut the last complete period out of ``raw`` and resample it to ``n`` points.

    Sample 0 of the result lies on the rising zero crossing of the fundamental,
    whose phase comes from a single-bin DFT at ``mains_freq``.
    """
    x = np.asarray(raw, dtype=np.float64)
    if raw_rate < n * mains_freq:
        raise ValueError(f"sample rate {raw_rate} Hz is below {n} samples per cycle")
    period = raw_rate / mains_freq  # samples per cycle, possibly fractional
    if x.size < 2 * period:
        raise TooShort(f"{x.size} samples is fewer than 2 cycles of {period:g}")
    if not np.all(np.isfinite(x)):
        raise TooShort("record contains non-finite samples")

    n_cycles = int(x.size // period)
    span = int(round(n_cycles * period))
    start = x.size - span
    idx = np.arange(start, x.size, dtype=np.float64)
    omega = 2 * math.pi / period
    phasor = 2.0 / span * np.sum(x[start:] * np.exp(-1j * omega * idx))
    if abs(phasor) < 1e-12:
        raise NoFundamental("fundamental magnitude is effectively zero")

    # fundamental ~ |X| cos(omega t + theta); rising zero crossing at omega t + theta = -pi/2
    theta = math.atan2(phasor.imag, phasor.real)
    t0 = ((-math.pi / 2 - theta) / omega) % period
    last = x.size - 1
    span_needed = period * (n - 1) / n
    m = math.floor((last - span_needed - t0) / period + 1e-9)
    if m < 0:
        raise TooShort("no complete cycle after the first zero crossing")
    t_start = t0 + m * period
    t = t_start + np.arange(n) * (period / n)
    t = np.minimum(t, last)
    return CurrentCycle(np.interp(t, np.arange(x.size), x), mains_freq)


def dwt_level1(cycle: CurrentCycle, cfg: WaveletConfig | None = None):
    """Single-level periodic DWT; returns (approximation, detail), each n/2 long."""
    cfg = cfg or WaveletConfig()
    c = cycle.samples
    if c.size % 2:
        raise BadLength(f"cycle length {c.size} is odd")
    taps = cfg.low_pass.size
    # rows: c(2m + t mod n) for t in 0..taps-1
    idx = (2 * np.arange(c.size // 2)[:, None] + np.arange(taps)[None, :]) % c.size
    frames = c[idx]
    return frames @ cfg.low_pass, frames @ cfg.high_pass


def harmonic_spectrum(cycle: CurrentCycle) -> HarmonicSpectrum:
    # one-period window: sum over n=1..N equals n=0..N-1 since c(N) = c(0)
    c = cycle.samples
    return HarmonicSpectrum(np.fft.rfft(c) / c.size)


def harmonic_content(spec: HarmonicSpectrum) -> np.ndarray:
    mags = spec.magnitudes[1:]
    total = mags.sum()
    if not total > 0:
        raise ZeroSpectrum("all harmonic magnitudes are zero")
    return mags / total


def extract_features(cycle: CurrentCycle, cfg: WaveletConfig | None = None) -> FeatureTriple:
    s_a, s_d = dwt_level1(cycle, cfg)
    s_h = harmonic_content(harmonic_spectrum(cycle))
    return FeatureTriple(s_a, s_d, s_h)
