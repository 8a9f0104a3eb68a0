"""End-to-end record generation: tab text to multimodal record."""

from __future__ import annotations

import numpy as np

from .audio import render_audio, spectrogram_frame
from .kit import DrumKit
from .planner import schedule
from .record import MMFrame, MultimodalRecord, RecordMeta
from .scene import SceneConfig
from .tab import DrumTab, parse_tab, serialize_tab, validate_tab
from .vision import IMAGE_SIZE, render_frame
from .world import ContactEvent, simulate


def generate_record(
    tab: str | DrumTab,
    scene: SceneConfig,
    seed: int = 0,
    noise_sigma: float = 0.0,
    total_duration: float | None = None,
) -> tuple[MultimodalRecord, list[ContactEvent]]:
    """Plan, simulate, render and synthesize one record.

    total_duration extends the trajectory's final hold so records can share
    a fixed frame count regardless of tab length.
    """
    tab_text = tab if isinstance(tab, str) else serialize_tab(tab)
    parsed = parse_tab(tab_text) if isinstance(tab, str) else tab
    valid = validate_tab(parsed, scene.kit)
    traj = schedule(
        valid, scene.kit, scene.arms,
        stroke_dur=scene.stroke_dur, hover_height=scene.hover_height,
        min_transit=scene.min_transit, tail_s=scene.tail_s,
        strike_depth=scene.strike_depth, total_duration=total_duration,
    )
    frames, contacts = simulate(
        traj, scene.kit, scene.arms, scene.frame_rate, scene.substeps, scene.rearm_eps
    )

    clock = scene.clock
    spf = clock.samples_per_frame
    n_frames = len(frames)
    waveform = render_audio(
        contacts, scene.kit, n_frames / scene.frame_rate, clock, noise_sigma, seed
    )
    audio_f32 = waveform.astype("<f4")

    mm_frames = []
    for k, wf in enumerate(frames):
        q = np.concatenate([st.q for st in wf.states]).astype("<f4")
        qd = np.concatenate([st.qd for st in wf.states]).astype("<f4")
        img = render_frame(scene.kit, [st.q for st in wf.states], scene.arms, scene.viewport)
        img_u8 = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
        frame_audio = audio_f32[k * spf : (k + 1) * spf]
        spec = spectrogram_frame(frame_audio.astype(float), spf).astype("<f4")
        mask = sum(1 << i for i, flag in enumerate(wf.contact_flags) if flag)
        mm_frames.append(MMFrame(q, qd, img_u8, frame_audio, spec, mask))

    meta = RecordMeta(
        frame_rate=scene.frame_rate, sample_rate=scene.sample_rate,
        image_w=IMAGE_SIZE, image_h=IMAGE_SIZE, joint_count=6,
        drum_ids=scene.kit.drum_ids, tab_text=tab_text,
        seed=int(seed), noise_sigma=float(noise_sigma),
    )
    return MultimodalRecord(meta, tuple(mm_frames)), contacts
