"""drumfusion: a deterministic two-arm drumming simulator that renders
synchronized vision, audio and proprioception streams, plus a multimodal
sequence autoencoder trained on them.

The library is layered bottom-up:

    tab        drum tablature parsing / generation
    arm        planar 3-link kinematics
    planner    min-jerk stroke scheduling for two arms
    world      fixed-rate simulation and contact detection
    audio      percussion synthesis and spectrogram features
    vision     64x64 intensity rendering
    record     the .mmr multimodal record container
    pipeline   tab -> record, end to end
    net        the modality-dropout sequence autoencoder
    retrieval  onset detection, drum classification, cross-modal eval
"""

from .arm import (
    ArmConfig,
    JointState,
    forward_kinematics,
    inverse_kinematics,
    jacobian,
    joint_positions,
    make_arm,
)
from .audio import (
    AudioClock,
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
from .errors import DrumFusionError, FormatError, PlanError, ReachError, TabError
from .kit import DrumKit, DrumPad
from .pipeline import generate_record
from .planner import (
    MotionPrimitive,
    Segment,
    Trajectory,
    assign_arms,
    build_primitive,
    min_jerk,
    reachable_arms,
    sample_trajectory,
    schedule,
)
from .record import (
    MMFrame,
    MultimodalRecord,
    RecordMeta,
    dataset_index,
    load_record,
    read_record,
    save_record,
    write_record,
)
from .retrieval import (
    RetrievalReport,
    build_templates,
    classify_drum,
    classify_drum_ranked,
    evaluate,
    mask_set,
    onset_detect,
)
from .scene import SceneConfig, Viewport, default_scene, scene_from_json, scene_to_json, validate_scene
from .tab import BeatEvent, DrumTab, gen_random_tab, parse_tab, serialize_tab, validate_tab
from .vision import render_frame, world_to_pixel
from .world import ContactEvent, WorldFrame, detect_contact, frame_count, simulate

__version__ = "0.1.0"

__all__ = [
    "ArmConfig",
    "AudioClock",
    "BeatEvent",
    "ContactEvent",
    "DrumFusionError",
    "DrumKit",
    "DrumPad",
    "DrumTab",
    "FormatError",
    "JointState",
    "MMFrame",
    "MotionPrimitive",
    "MultimodalRecord",
    "PlanError",
    "ReachError",
    "RecordMeta",
    "RetrievalReport",
    "SceneConfig",
    "Segment",
    "TabError",
    "TimbreSpec",
    "Trajectory",
    "Viewport",
    "WorldFrame",
    "assign_arms",
    "build_primitive",
    "build_templates",
    "classify_drum",
    "classify_drum_ranked",
    "dataset_index",
    "default_scene",
    "detect_contact",
    "evaluate",
    "forward_kinematics",
    "frame_count",
    "gen_random_tab",
    "generate_record",
    "hit_samples",
    "hit_seed_for",
    "hit_template",
    "inverse_kinematics",
    "jacobian",
    "joint_positions",
    "load_record",
    "make_arm",
    "mask_set",
    "min_jerk",
    "onset_detect",
    "parse_tab",
    "reachable_arms",
    "read_record",
    "render_audio",
    "render_frame",
    "sample_trajectory",
    "save_record",
    "scene_from_json",
    "scene_to_json",
    "schedule",
    "serialize_tab",
    "simulate",
    "spectrogram_frame",
    "spectrogram_sequence",
    "support_end",
    "synth_hit",
    "validate_scene",
    "validate_tab",
    "world_to_pixel",
    "write_record",
]
