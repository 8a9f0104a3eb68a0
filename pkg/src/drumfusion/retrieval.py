"""Cross-modal retrieval scoring for trained fusion models.

Given a trained model and a set of held-out records, this module answers
three questions:

* how well does each modality get reconstructed when some inputs are
  withheld (per-mask mean squared error),
* can the drum sequence be read back out of a reconstruction: from
  reconstructed audio via onset detection plus template classification,
  and from reconstructed motion via nearest contact-pose matching,
* does audio reconstruction suppress background noise (silent-frame
  spectral energy in vs. out).

Classification templates are rendered from the scene's own drum kit, so
the scorer never peeks at the records beyond their embedded tablature
(the ground truth) and their stored frames (the model inputs).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .audio import AudioClock, render_audio, spectrogram_sequence, support_end
from .kit import DrumKit
from .net import DropoutMask, FusionModel, forward_batch, model_digest
from .planner import build_primitive
from .record import MultimodalRecord
from .scene import SceneConfig, default_scene
from .tab import parse_tab
from .world import ContactEvent

# Spectral flux below this is numerical dust from the FFT of silence and
# must not count toward the detection statistics.
FLUX_FLOOR = 1e-9

# On a mostly-silent clean trace both median and MAD of the flux are zero
# and the robust threshold collapses, letting microscopic decay-tail
# wiggles (about 1e-4 of a real hit's flux) fire the detector.  Flooring
# the threshold at this fraction of the peak flux restores the scale; on
# noisy traces the median/MAD term dominates and the floor is inert.
PEAK_FRACTION = 0.01

# A detected or expected onset frame matches a beat frame when they are
# at most this many frames apart.
ONSET_TOLERANCE_FRAMES = 2

MODALITIES = ("image", "audio", "motion")


def mask_set() -> tuple[tuple[str, DropoutMask], ...]:
    """The six standard evaluation masks, named by what they DROP."""
    combos = (
        ("image",),
        ("audio",),
        ("motion",),
        ("image", "audio"),
        ("image", "motion"),
        ("audio", "motion"),
    )
    out = []
    for dropped in combos:
        mask = DropoutMask(
            keep_image="image" not in dropped,
            keep_audio="audio" not in dropped,
            keep_motion="motion" not in dropped,
        )
        out.append(("+".join(dropped), mask))
    return tuple(out)


def onset_detect(specs: np.ndarray, threshold_k: float = 3.0) -> list[int]:
    """Frame indices of note onsets in a spectrogram sequence.

    Positive spectral flux (summed bin-wise increases between consecutive
    frames, zero for the first frame), thresholded at median + k * MAD of
    the flux sequence, floored at PEAK_FRACTION of the largest flux.
    Onsets are strict local flux maxima above the threshold; after
    accepting one, the next two frames are skipped so a single hit cannot
    fire twice.
    """
    specs = np.asarray(specs, dtype=float)
    if specs.ndim != 2 or specs.shape[0] == 0:
        raise ValueError(f"expected (frames, bins) spectrogram, got shape {specs.shape}")
    flux = np.zeros(specs.shape[0])
    if specs.shape[0] > 1:
        flux[1:] = np.maximum(np.diff(specs, axis=0), 0.0).sum(axis=1)
    flux[flux < FLUX_FLOOR] = 0.0
    med = float(np.median(flux))
    mad = float(np.median(np.abs(flux - med)))
    threshold = max(med + float(threshold_k) * mad, PEAK_FRACTION * float(flux.max()))
    onsets: list[int] = []
    k = 1
    while k < len(flux):
        left = flux[k - 1]
        right = flux[k + 1] if k + 1 < len(flux) else -np.inf
        if flux[k] > threshold and flux[k] > 0.0 and flux[k] > left and flux[k] >= right:
            onsets.append(k)
            k += 3
        else:
            k += 1
    return onsets


def _similarities(spec: np.ndarray, templates: Mapping[str, np.ndarray]) -> tuple[list[str], np.ndarray]:
    if len(templates) == 0:
        raise ValueError("empty template set")
    ids = list(templates)
    mat = np.stack([np.asarray(templates[d], dtype=float) for d in ids])
    v = np.asarray(spec, dtype=float)
    if v.shape != mat.shape[1:]:
        raise ValueError(f"spectrum shape {v.shape} does not match templates {mat.shape[1:]}")
    v_norm = float(np.linalg.norm(v))
    t_norm = np.linalg.norm(mat, axis=1)
    sims = np.full(len(ids), -np.inf)
    if v_norm == 0.0:
        # Degenerate query: nothing to match against, fall back to the
        # first drum so the caller always gets a stable answer.
        sims[0] = 1.0
        return ids, sims
    ok = t_norm > 0.0
    sims[ok] = (mat[ok] @ v) / (t_norm[ok] * v_norm)
    return ids, sims


def classify_drum(spec: np.ndarray, templates: Mapping[str, np.ndarray]) -> str:
    """Template id with the highest cosine similarity to spec.

    Ties resolve to the earliest template in iteration order; an
    all-zero spectrum maps to the first template.
    """
    ids, sims = _similarities(spec, templates)
    return ids[int(np.argmax(sims))]


def classify_drum_ranked(
    spec: np.ndarray, templates: Mapping[str, np.ndarray], top: int
) -> list[str]:
    """Top template ids by cosine similarity, best first, ties by order."""
    ids, sims = _similarities(spec, templates)
    order = np.argsort(-sims, kind="stable")
    return [ids[int(i)] for i in order[: max(int(top), 0)]]


def build_templates(
    kit: DrumKit, clock: AudioClock = AudioClock(), seed: int = 0, hits_per_drum: int = 4
) -> dict[str, np.ndarray]:
    """Per-drum reference spectra from clean, isolated, frame-aligned hits.

    Each drum is struck hits_per_drum times in an otherwise silent
    waveform, with hits spaced so their supports cannot overlap.  The
    template is the mean spectrum over the onset frame and the frame
    after it, across all hits.
    """
    if hits_per_drum < 1:
        raise ValueError("hits_per_drum must be positive")
    spf = clock.samples_per_frame
    out: dict[str, np.ndarray] = {}
    for drum_index, pad in enumerate(kit.pads):
        gap = math.ceil(6.0 * pad.timbre.decay_tau_s * clock.sample_rate / spf) + 2
        onset_frames = [1 + h * gap for h in range(hits_per_drum)]
        contacts = [
            ContactEvent(time_s=k / clock.frame_rate, drum_id=pad.drum_id, arm_id=0)
            for k in onset_frames
        ]
        duration = (onset_frames[-1] + gap + 1) / clock.frame_rate
        wave = render_audio(contacts, kit, duration, clock, noise_sigma=0.0, seed=seed + drum_index)
        specs = spectrogram_sequence(wave, clock)
        frames = [specs[k] for k in onset_frames] + [specs[k + 1] for k in onset_frames]
        out[pad.drum_id] = np.mean(frames, axis=0)
    return out


@dataclass(frozen=True)
class RetrievalReport:
    """Evaluation summary over a record set.

    mask_mse maps each mask name ("image", "audio+motion", ...) to the
    per-modality reconstruction MSE of the modalities that mask dropped,
    in network units (images in [0, 1], spectra in log-magnitude, motion
    normalized by pi).  motion_from_audio_mse is in squared radians.
    Accuracies and recall count individual tablature events.
    """

    model_id: str
    dataset_size: int
    n_events: int
    mask_mse: dict[str, dict[str, float]]
    audio_class_accuracy: float
    motion_match_accuracy: float
    motion_from_audio_mse: float
    onset_recall: float
    noise_floor_ratio: float
    silent_energy_input: float
    silent_energy_recon: float

    def to_json(self) -> str:
        payload = {
            "model_id": self.model_id,
            "dataset_size": self.dataset_size,
            "n_events": self.n_events,
            "mask_mse": self.mask_mse,
            "audio_class_accuracy": self.audio_class_accuracy,
            "motion_match_accuracy": self.motion_match_accuracy,
            "motion_from_audio_mse": self.motion_from_audio_mse,
            "onset_recall": self.onset_recall,
            "noise_floor_ratio": self.noise_floor_ratio,
            "silent_energy_input": self.silent_energy_input,
            "silent_energy_recon": self.silent_energy_recon,
        }
        return json.dumps(payload, sort_keys=True, indent=2)


def _record_inputs(rec: MultimodalRecord) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    images = np.stack([f.image for f in rec.frames]).astype(float) / 255.0
    specs = np.stack([f.spec for f in rec.frames]).astype(float)
    q = np.stack([f.q for f in rec.frames]).astype(float)
    return images, specs, q


def _beat_groups(rec: MultimodalRecord) -> list[tuple[float, list[str]]]:
    """Tablature events grouped by beat time, time-ascending."""
    groups: dict[float, list[str]] = {}
    for ev in parse_tab(rec.meta.tab_text).events:
        groups.setdefault(ev.time_s, []).append(ev.drum_id)
    return sorted(groups.items())


def _contact_poses(scene: SceneConfig) -> dict[tuple[int, str], np.ndarray]:
    """Joint pose each arm holds at the moment it strikes each drum it
    can reach, keyed by (arm index, drum id)."""
    poses: dict[tuple[int, str], np.ndarray] = {}
    for drum_id, arm_indices in scene.candidates().items():
        pad = scene.kit.pad(drum_id)
        for arm_idx in arm_indices:
            prim = build_primitive(
                pad,
                scene.arms[arm_idx],
                scene.hover_height,
                scene.stroke_dur,
                scene.strike_depth,
                arm_id=arm_idx,
            )
            poses[(arm_idx, drum_id)] = np.asarray(prim.q_contact, dtype=float)
    return poses


def _silent_frames(rec: MultimodalRecord, scene: SceneConfig) -> np.ndarray:
    """Boolean mask of frames that no hit's support can touch.

    One extra frame of margin on each side of every active span absorbs
    the sub-frame lead between stick contact and the notated beat.
    """
    clock = scene.clock
    spf = clock.samples_per_frame
    n_frames = len(rec.frames)
    active = np.zeros(n_frames, dtype=bool)
    for ev in parse_tab(rec.meta.tab_text).events:
        timbre = scene.kit.pad(ev.drum_id).timbre
        onset = round(ev.time_s * clock.sample_rate)
        end = support_end(timbre, onset, clock)
        first = max(onset // spf - 1, 0)
        last = min(math.ceil(end / spf) + 1, n_frames)
        active[first:last] = True
    return ~active


def _score_motion(
    q_hat: np.ndarray,
    beats: Sequence[tuple[float, list[str]]],
    poses: Mapping[tuple[int, str], np.ndarray],
    frame_rate: int,
) -> tuple[int, int]:
    """(hits, events) for nearest-contact-pose drum retrieval.

    Around each beat time, q_hat (radians, (frames, 6), arm 0 in columns
    0:3 and arm 1 in 3:6) is compared against every reachable contact
    pose.  A lone event is retrieved when the globally nearest pose
    belongs to its drum; simultaneous events are scored against the
    per-arm nearest drums as a set.
    """
    n_frames = q_hat.shape[0]
    hits = 0
    total = 0
    for time_s, drums in beats:
        total += len(drums)
        beat = math.floor(time_s * frame_rate + 0.5)
        lo = max(beat - ONSET_TOLERANCE_FRAMES, 0)
        hi = min(beat + ONSET_TOLERANCE_FRAMES + 1, n_frames)
        if lo >= hi:
            continue
        best_by_arm: dict[int, tuple[float, str]] = {}
        for (arm_idx, drum_id), pose in poses.items():
            seg = q_hat[lo:hi, 3 * arm_idx : 3 * arm_idx + 3]
            dist = float(np.min(np.linalg.norm(seg - pose, axis=1)))
            cur = best_by_arm.get(arm_idx)
            if cur is None or dist < cur[0]:
                best_by_arm[arm_idx] = (dist, drum_id)
        if not best_by_arm:
            continue
        if len(drums) == 1:
            _, predicted = min(best_by_arm.values())
            hits += predicted == drums[0]
        else:
            predicted_set = {drum_id for _, drum_id in best_by_arm.values()}
            hits += sum(d in predicted_set for d in drums)
    return hits, total


def _score_audio(
    specs: np.ndarray,
    beats: Sequence[tuple[float, list[str]]],
    templates: Mapping[str, np.ndarray],
    frame_rate: int,
    threshold_k: float,
) -> tuple[int, int, int]:
    """(classification hits, recalled events, events) for one record.

    An event is recalled when a detected onset lands within the beat
    tolerance window.  Classification reads the spectrum at the nearest
    such onset, falling back to the beat frame itself when detection
    found nothing there (a flat reconstruction still classifies, at
    chance), and asks for as many template labels as the beat has
    simultaneous events, scoring them as a set.
    """
    onsets = onset_detect(specs, threshold_k)
    n_frames = specs.shape[0]
    class_hits = 0
    recalled = 0
    total = 0
    for time_s, drums in beats:
        total += len(drums)
        beat = math.floor(time_s * frame_rate + 0.5)
        near = [k for k in onsets if abs(k - beat) <= ONSET_TOLERANCE_FRAMES]
        if near:
            recalled += len(drums)
            site = min(near, key=lambda k: (abs(k - beat), k))
        elif 0 <= beat < n_frames:
            site = beat
        else:
            continue
        labels = classify_drum_ranked(specs[site], templates, len(drums))
        class_hits += sum(d in labels for d in drums)
    return class_hits, recalled, total


def evaluate(
    model: FusionModel,
    records: Sequence[MultimodalRecord],
    masks: Sequence[tuple[str, DropoutMask]] | None = None,
    scene: SceneConfig | None = None,
    threshold_k: float = 3.0,
) -> RetrievalReport:
    """Score a trained model on held-out records under every mask.

    Per mask, only the dropped modalities contribute to mask_mse (the
    kept ones were inputs, reconstructing them is not retrieval).  Drum
    retrieval from motion runs on the audio-only mask ("image+motion"),
    retrieval from audio on the audio-dropped mask ("audio"), and the
    noise-floor comparison on the audio-only mask where the model heard
    the (possibly noisy) audio it must clean up.
    """
    if len(records) == 0:
        raise ValueError("no records to evaluate")
    if masks is None:
        masks = mask_set()
    if scene is None:
        scene = default_scene()
    templates = build_templates(scene.kit, scene.clock)
    poses = _contact_poses(scene)
    frame_rate = scene.clock.frame_rate

    sq_err: dict[str, dict[str, float]] = {name: {} for name, _ in masks}
    counts: dict[str, dict[str, int]] = {name: {} for name, _ in masks}
    n_events = 0
    class_hits = audio_events = recalled = 0
    motion_hits = motion_events = 0
    motion_sq = 0.0
    motion_n = 0
    energy_in = 0.0
    energy_out = 0.0

    for rec in records:
        images, specs, q = _record_inputs(rec)
        q_norm = q / math.pi
        beats = _beat_groups(rec)
        n_events += sum(len(drums) for _, drums in beats)
        silent = _silent_frames(rec, scene)
        for name, mask in masks:
            out, _ = forward_batch(
                model, images[None], specs[None], q_norm[None], [mask]
            )
            dropped_err = {
                "image": (not mask.keep_image, out.images[0] - images),
                "audio": (not mask.keep_audio, out.specs[0] - specs),
                "motion": (not mask.keep_motion, out.motion[0] - q_norm),
            }
            for modality, (dropped, err) in dropped_err.items():
                if not dropped:
                    continue
                sq_err[name][modality] = sq_err[name].get(modality, 0.0) + float(
                    (err**2).sum()
                )
                counts[name][modality] = counts[name].get(modality, 0) + err.size
            if name == "audio":
                c, _, t = _score_audio(
                    out.specs[0], beats, templates, frame_rate, threshold_k
                )
                class_hits += c
                audio_events += t
            elif name == "image+motion":
                q_hat = out.motion[0] * math.pi
                h, t = _score_motion(q_hat, beats, poses, frame_rate)
                motion_hits += h
                motion_events += t
                motion_sq += float(((q_hat - q) ** 2).sum())
                motion_n += q.size
                _, r, _ = _score_audio(
                    out.specs[0], beats, templates, frame_rate, threshold_k
                )
                recalled += r
                energy_in += float((specs[silent] ** 2).sum())
                energy_out += float((out.specs[0][silent] ** 2).sum())

    mask_mse = {
        name: {mod: sq_err[name][mod] / counts[name][mod] for mod in sq_err[name]}
        for name, _ in masks
    }
    return RetrievalReport(
        model_id=model_digest(model),
        dataset_size=len(records),
        n_events=n_events,
        mask_mse=mask_mse,
        audio_class_accuracy=class_hits / audio_events if audio_events else 0.0,
        motion_match_accuracy=motion_hits / motion_events if motion_events else 0.0,
        motion_from_audio_mse=motion_sq / motion_n if motion_n else 0.0,
        onset_recall=recalled / motion_events if motion_events else 0.0,
        noise_floor_ratio=energy_out / energy_in if energy_in > 0.0 else 0.0,
        silent_energy_input=energy_in,
        silent_energy_recon=energy_out,
    )
