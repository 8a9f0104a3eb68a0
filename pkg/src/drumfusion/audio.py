"""Percussion synthesis and log-magnitude spectrogram features.

Each hit is a decaying excitation: an amplitude envelope A * exp(-t / tau)
over a template waveform that repeats with period samples_per_frame.  The
template is a sine table for tonal drums, a seeded uniform noise burst for
snare-like drums, and the first difference of that noise (scaled by 0.5 so
its peak stays near 1) for hi-hat-like drums.

The frame-periodic template is a deliberate constraint: every analysis frame
of a hit's tail is then an exact scalar multiple exp(-spf / (rate * tau)) of
the previous frame, so per-bin spectrogram magnitudes decay strictly
monotonically and spectral flux is identically zero between onsets.  Tonal
templates are exact sinusoids whenever freq_hz is a multiple of
frame_rate (e.g. 100 Hz at 25 fps); other frequencies restart their phase at
each template period.  Hit support ends at the first frame boundary at or
after 6 tau, never mid-frame, so decay tails vanish without a partial-window
leakage step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

N_FFT = 512
N_BINS = 128


@dataclass(frozen=True)
class TimbreSpec:
    kind: str  # tone | noise | hipass_noise
    decay_tau_s: float
    amplitude: float
    freq_hz: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("tone", "noise", "hipass_noise"):
            raise ValueError(f"unknown timbre kind {self.kind!r}")
        if self.decay_tau_s <= 0:
            raise ValueError("decay_tau_s must be positive")
        if not 0.0 < self.amplitude <= 1.0:
            raise ValueError("amplitude must be in (0, 1]")


@dataclass(frozen=True)
class AudioClock:
    sample_rate: int = 8000
    frame_rate: int = 25

    def __post_init__(self) -> None:
        if self.sample_rate % self.frame_rate != 0:
            raise ValueError(
                f"sample_rate {self.sample_rate} not divisible by frame_rate {self.frame_rate}"
            )

    @property
    def samples_per_frame(self) -> int:
        return self.sample_rate // self.frame_rate


def hit_template(timbre: TimbreSpec, hit_seed: int, clock: AudioClock = AudioClock()) -> np.ndarray:
    """One period (samples_per_frame values) of the hit's excitation."""
    spf = clock.samples_per_frame
    if timbre.kind == "tone":
        i = np.arange(spf)
        return np.sin(2.0 * np.pi * timbre.freq_hz * i / clock.sample_rate)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(hit_seed)])))
    noise = rng.uniform(-1.0, 1.0, spf)
    if timbre.kind == "noise":
        return noise
    # hipass_noise: periodic first difference, range (-2, 2) halved to stay in (-1, 1)
    return 0.5 * (noise - np.roll(noise, 1))


def support_end(timbre: TimbreSpec, onset_sample: int, clock: AudioClock = AudioClock()) -> int:
    """Absolute sample index (exclusive) where the hit's support ends: the
    first frame boundary at or after onset + 6 tau."""
    spf = clock.samples_per_frame
    raw = onset_sample + 6.0 * timbre.decay_tau_s * clock.sample_rate
    return spf * math.ceil(raw / spf)


def synth_hit(
    timbre: TimbreSpec,
    t: float,
    hit_seed: int,
    clock: AudioClock = AudioClock(),
    onset_sample: int = 0,
) -> float:
    """Sample of one hit at time t seconds after its onset.

    t is quantized to the nearest sample.  onset_sample is the absolute
    index the hit was placed at; it only moves the truncation point, which
    is frame-aligned in absolute time.
    """
    i = round(t * clock.sample_rate)
    if i < 0 or onset_sample + i >= support_end(timbre, onset_sample, clock):
        return 0.0
    template = hit_template(timbre, hit_seed, clock)
    env = timbre.amplitude * math.exp(-i / (clock.sample_rate * timbre.decay_tau_s))
    return float(template[i % clock.samples_per_frame] * env)


def hit_samples(
    timbre: TimbreSpec,
    hit_seed: int,
    onset_sample: int,
    n_samples: int,
    clock: AudioClock = AudioClock(),
) -> tuple[int, np.ndarray]:
    """Vectorized synth_hit over the hit's whole support, clipped to the
    record length.  Returns (start_index, samples)."""
    start = max(onset_sample, 0)
    end = min(support_end(timbre, onset_sample, clock), n_samples)
    if end <= start:
        return start, np.zeros(0)
    rel = np.arange(start - onset_sample, end - onset_sample)
    template = hit_template(timbre, hit_seed, clock)
    env = timbre.amplitude * np.exp(-rel / (clock.sample_rate * timbre.decay_tau_s))
    return start, template[rel % clock.samples_per_frame] * env


def hit_seed_for(record_seed: int, contact_index: int) -> int:
    """Stable per-hit seed derived from the record seed and contact index."""
    ss = np.random.SeedSequence([int(record_seed), 17, int(contact_index)])
    return int(ss.generate_state(1)[0])


def render_audio(
    contacts,
    kit,
    duration: float,
    clock: AudioClock = AudioClock(),
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> np.ndarray:
    """Mix all contacts' hits plus Gaussian background noise into a waveform
    of round(duration * sample_rate) samples, hard-clipped to [-1, 1]."""
    n = round(duration * clock.sample_rate)
    out = np.zeros(n)
    for index, contact in enumerate(contacts):
        pad = kit.pad(contact.drum_id)
        onset = round(contact.time_s * clock.sample_rate)
        start, samples = hit_samples(pad.timbre, hit_seed_for(seed, index), onset, n, clock)
        out[start : start + len(samples)] += samples
    if noise_sigma > 0:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 23])))
        out += rng.normal(0.0, noise_sigma, n)
    return np.clip(out, -1.0, 1.0)


def spectrogram_frame(window: np.ndarray, frame_len: int = 320) -> np.ndarray:
    """128 log-magnitude bins of one frame's audio.

    Hann window, zero-pad to 512, magnitude of the non-negative-frequency
    DFT bins 0..127, log1p (so exact silence maps to exact zeros).
    """
    window = np.asarray(window, dtype=float)
    if window.shape != (frame_len,):
        raise ValueError(f"expected window of {frame_len} samples, got shape {window.shape}")
    x = window * np.hanning(frame_len)
    mag = np.abs(np.fft.rfft(x, N_FFT)[:N_BINS])
    return np.log1p(mag)


def spectrogram_sequence(waveform: np.ndarray, clock: AudioClock = AudioClock()) -> np.ndarray:
    """Per-frame features over the whole waveform (tail zero-padded to a
    whole frame).  Shape (n_frames, 128)."""
    spf = clock.samples_per_frame
    waveform = np.asarray(waveform, dtype=float)
    n_frames = max(1, math.ceil(len(waveform) / spf))
    padded = np.zeros(n_frames * spf)
    padded[: len(waveform)] = waveform
    return np.stack(
        [spectrogram_frame(padded[k * spf : (k + 1) * spf], spf) for k in range(n_frames)]
    )
