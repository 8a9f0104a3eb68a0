import math

import numpy as np
import pytest

from drumfusion import (
    AudioClock,
    ContactEvent,
    DrumKit,
    DrumPad,
    TimbreSpec,
    hit_samples,
    hit_seed_for,
    hit_template,
    render_audio,
    spectrogram_frame,
    spectrogram_sequence,
    support_end,
    synth_hit,
)

CLOCK = AudioClock(8000, 25)
SPF = CLOCK.samples_per_frame

TONE = TimbreSpec("tone", 0.25, 0.9, freq_hz=100.0)
NOISE = TimbreSpec("noise", 0.08, 0.8)
HIPASS = TimbreSpec("hipass_noise", 0.03, 0.6)


def _kit():
    return DrumKit((
        DrumPad("HH", -0.45, 0.35, 0.12, HIPASS),
        DrumPad("SN", 0.0, 0.35, 0.12, NOISE),
        DrumPad("TM", 0.45, 0.35, 0.12, TONE),
    ))


def test_clock_divisibility():
    assert CLOCK.samples_per_frame == 320
    with pytest.raises(ValueError):
        AudioClock(8000, 30)


def test_timbre_validation():
    with pytest.raises(ValueError):
        TimbreSpec("bell", 0.1, 0.5)
    with pytest.raises(ValueError):
        TimbreSpec("tone", -0.1, 0.5)
    with pytest.raises(ValueError):
        TimbreSpec("tone", 0.1, 0.0)
    with pytest.raises(ValueError):
        TimbreSpec("tone", 0.1, 1.5)


def test_templates_shapes_and_ranges():
    for timbre in (TONE, NOISE, HIPASS):
        t = hit_template(timbre, 123, CLOCK)
        assert t.shape == (SPF,)
        assert np.all(np.abs(t) <= 1.0)


def test_tone_template_is_exact_sine():
    t = hit_template(TONE, 0, CLOCK)
    i = np.arange(SPF)
    assert t == pytest.approx(np.sin(2 * np.pi * 100.0 * i / 8000), abs=1e-15)
    # 100 Hz divides the frame rate grid: the table closes on itself
    assert t[0] == 0.0


def test_hipass_template_is_scaled_first_difference():
    noise = hit_template(NOISE, 5, CLOCK)
    hp = hit_template(TimbreSpec("hipass_noise", 0.03, 0.6), 5, CLOCK)
    assert hp == pytest.approx(0.5 * (noise - np.roll(noise, 1)), abs=1e-15)


def test_noise_template_seed_determinism():
    a = hit_template(NOISE, 7, CLOCK)
    b = hit_template(NOISE, 7, CLOCK)
    c = hit_template(NOISE, 8, CLOCK)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_synth_hit_matches_vectorized_samples():
    for timbre in (TONE, NOISE, HIPASS):
        start, samples = hit_samples(timbre, 99, 0, 4000, CLOCK)
        assert start == 0
        for i in (0, 1, 17, 319, 320, 1000, len(samples) - 1):
            if i < len(samples):
                assert synth_hit(timbre, i / 8000, 99, CLOCK) == pytest.approx(samples[i], abs=1e-15)


def test_envelope_decay_rate():
    _, samples = hit_samples(NOISE, 3, 0, 4000, CLOCK)
    ratio = math.exp(-SPF / (8000 * NOISE.decay_tau_s))
    nz = np.abs(samples[:SPF]) > 1e-12
    assert np.allclose(samples[SPF : 2 * SPF][nz], samples[:SPF][nz] * ratio, rtol=1e-12)


def test_support_ends_on_frame_boundary_past_six_tau():
    for timbre in (TONE, NOISE, HIPASS):
        for onset in (0, 1, 319, 4000, 4001):
            end = support_end(timbre, onset, CLOCK)
            assert end % SPF == 0
            assert end >= onset + 6 * timbre.decay_tau_s * 8000
            assert end - SPF < onset + 6 * timbre.decay_tau_s * 8000


def test_hit_placed_at_rounded_onset_sample():
    kit = _kit()
    t_hit = 0.7431
    wave = render_audio([ContactEvent(t_hit, "SN", 0)], kit, 2.0, CLOCK)
    first = int(np.argmax(wave != 0.0))
    assert first == round(t_hit * 8000)


def test_render_audio_superposition():
    kit = _kit()
    a = [ContactEvent(0.30, "SN", 0)]
    b = [ContactEvent(0.95, "TM", 1)]
    wa = render_audio(a, kit, 2.0, CLOCK, seed=5)
    # hit seeds follow contact order, so render b alone at index 1
    wb_alone = render_audio([ContactEvent(0.0, "HH", 0)] + b, kit, 2.0, CLOCK, seed=5)
    wb_alone[: support_end(HIPASS, 0, CLOCK)] = 0.0
    both = render_audio(a + b, kit, 2.0, CLOCK, seed=5)
    assert np.allclose(both, wa + wb_alone, atol=1e-12)


def test_render_audio_clips_to_unit_range():
    kit = DrumKit((DrumPad("SN", 0.0, 0.35, 0.12, TimbreSpec("noise", 0.08, 1.0)),))
    contacts = [ContactEvent(0.5, "SN", 0)] * 4  # same onset stacks four bursts
    wave = render_audio(contacts, kit, 1.0, CLOCK)
    assert np.max(np.abs(wave)) <= 1.0


def test_render_audio_noise_determinism():
    kit = _kit()
    contacts = [ContactEvent(0.5, "SN", 0)]
    a = render_audio(contacts, kit, 1.0, CLOCK, noise_sigma=0.05, seed=11)
    b = render_audio(contacts, kit, 1.0, CLOCK, noise_sigma=0.05, seed=11)
    c = render_audio(contacts, kit, 1.0, CLOCK, noise_sigma=0.05, seed=12)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    clean = render_audio(contacts, kit, 1.0, CLOCK, noise_sigma=0.0, seed=11)
    assert np.count_nonzero(clean) < np.count_nonzero(a)


def test_hit_seed_for_is_stable_and_distinct():
    assert hit_seed_for(3, 0) == hit_seed_for(3, 0)
    seeds = {hit_seed_for(3, i) for i in range(50)} | {hit_seed_for(4, i) for i in range(50)}
    assert len(seeds) == 100


def test_spectrogram_frame_shape_and_silence():
    out = spectrogram_frame(np.zeros(SPF), SPF)
    assert out.shape == (128,)
    assert np.all(out == 0.0)
    with pytest.raises(ValueError):
        spectrogram_frame(np.zeros(100), SPF)


def test_spectrogram_sine_peaks_at_its_bin():
    # 250 Hz at 8 kHz with a 512-point transform: bin 250/8000*512 = 16 exactly
    i = np.arange(SPF)
    frame = np.sin(2 * np.pi * 250.0 * i / 8000.0)
    out = spectrogram_frame(frame, SPF)
    assert int(np.argmax(out)) == 16


def test_spectrogram_matches_plain_dft():
    rng = np.random.default_rng(2)
    x = rng.uniform(-1, 1, SPF)
    out = spectrogram_frame(x, SPF)
    windowed = np.zeros(512)
    windowed[:SPF] = x * np.hanning(SPF)
    n = np.arange(512)
    for k in (0, 1, 16, 63, 127):
        naive = abs(np.sum(windowed * np.exp(-2j * np.pi * k * n / 512)))
        assert out[k] == pytest.approx(math.log1p(naive), abs=1e-9)


def test_windowed_transform_preserves_energy():
    rng = np.random.default_rng(4)
    x = rng.uniform(-1, 1, SPF)
    windowed = np.zeros(512)
    windowed[:SPF] = x * np.hanning(SPF)
    X = np.fft.fft(windowed)
    lhs = np.sum(np.abs(X) ** 2)
    rhs = 512.0 * np.sum(windowed**2)
    assert abs(lhs - rhs) <= 1e-9 * rhs


def test_tail_frames_decay_bin_by_bin():
    kit = _kit()
    for drum, timbre in (("SN", NOISE), ("TM", TONE), ("HH", HIPASS)):
        wave = render_audio([ContactEvent(0.0, drum, 0)], kit, 2.0, CLOCK, seed=1)
        spec = np.stack([
            spectrogram_frame(wave[k * SPF : (k + 1) * SPF], SPF) for k in range(50)
        ])
        mag = np.expm1(spec)
        rho = math.exp(-SPF / (8000 * timbre.decay_tau_s))
        last = support_end(timbre, 0, CLOCK) // SPF
        for k in range(1, last):
            assert mag[k] == pytest.approx(mag[k - 1] * rho, abs=1e-9)
        # log1p compresses but keeps the ordering: tail flux is never positive
        diffs = np.diff(spec[1:last], axis=0)
        assert np.all(diffs <= 1e-12)
        # past the support the record is exactly silent
        assert np.all(spec[last:] == 0.0)


def test_spectrogram_sequence_pads_tail():
    wave = np.ones(3 * SPF + 10)
    out = spectrogram_sequence(wave, CLOCK)
    assert out.shape == (4, 128)
    padded = np.zeros(SPF)
    padded[:10] = 1.0
    assert out[3] == pytest.approx(spectrogram_frame(padded, SPF))
