"""Synthesize each drum in isolation and look at its spectral fingerprint.

Hits are decaying excitations: tonal drums repeat a sine table, snare-like
drums a seeded noise burst, hi-hat-like drums the first difference of that
noise (which tilts the spectrum toward high frequencies).  The demo writes
one WAV per drum and prints where each drum's energy sits on the 128-bin
log-magnitude spectrogram.
"""

import wave
from pathlib import Path

import numpy as np

from drumfusion import ContactEvent, default_scene, render_audio, spectrogram_sequence

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

scene = default_scene()
clock = scene.clock

for drum_id in scene.kit.drum_ids:
    contacts = [ContactEvent(0.2, drum_id, 0)]
    wave_f = render_audio(contacts, scene.kit, 1.0, clock, noise_sigma=0.0, seed=0)

    path = OUT / f"hit_{drum_id}.wav"
    pcm = np.clip(wave_f, -1.0, 1.0)
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(clock.sample_rate)
        w.writeframes((pcm * 32767.0).astype("<i2").tobytes())

    specs = spectrogram_sequence(wave_f, clock)
    onset_frame = int(np.argmax(specs.sum(axis=1)))
    profile = specs[onset_frame]
    top = np.argsort(profile)[::-1][:3]
    hz = [f"{b * clock.sample_rate / 512:.0f}" for b in top]
    print(
        f"{drum_id}: peak frame {onset_frame}, strongest bins {list(map(int, top))}"
        f" (~{', '.join(hz)} Hz)  -> {path.name}"
    )

print(f"\nWAVs written to {OUT}/")
