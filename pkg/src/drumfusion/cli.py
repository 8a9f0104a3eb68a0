"""Command-line front end.

Subcommands cover the whole pipeline: generate one record from a tab,
build a random dataset, inspect and export records, train the fusion
network, reconstruct a record under a modality mask, score retrieval,
and run the finite-difference gradient check.

Exit codes: 0 success, 2 parse/validation/usage error, 3 infeasible tab,
4 I/O or checksum failure.  JSON results go to stdout, error messages to
stderr, and every command is deterministic for a given seed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import wave
from pathlib import Path

import numpy as np

from .errors import FormatError, PlanError, ReachError, TabError
from .net import Hyper, init_params, load_model, save_model, train
from .net.arch import ArchSpec
from .net.gradcheck import TOLERANCE, gradcheck
from .net.model import DropoutMask, forward_batch
from .pipeline import generate_record
from .record import dataset_index, load_record, save_record
from .retrieval import evaluate
from .scene import SceneConfig, default_scene, scene_from_json, validate_scene
from .tab import gen_random_tab

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4

# Tab grid used by dataset generation; matches the default scene's tempo
# conventions and leaves 0.5 s of lead time before the first beat.
DATASET_TEMPO = 120.0
DATASET_DIV = 2
DATASET_OFFSET = 0.5
DATASET_RETRIES = 5

MODALITY_NAMES = ("image", "audio", "motion")


class CliError(Exception):
    """Carries an exit code alongside the message."""

    def __init__(self, message: str, code: int = EXIT_USAGE) -> None:
        super().__init__(message)
        self.code = code


def _load_scene(path: str | None) -> SceneConfig:
    if path is None:
        return default_scene()
    scene = scene_from_json(Path(path).read_text())
    validate_scene(scene)
    return scene


def _load_dataset(directory: str):
    entries, skipped = dataset_index(directory)
    for path, reason in skipped:
        print(f"skipping {path}: {reason}", file=sys.stderr)
    if not entries:
        raise CliError(f"no readable records in {directory}")
    return [load_record(path) for path, _, _ in entries]


def _parse_mask(text: str) -> DropoutMask:
    dropped = [part.strip() for part in text.split(",") if part.strip()]
    unknown = [d for d in dropped if d not in MODALITY_NAMES]
    if unknown:
        raise CliError(f"unknown modalities {unknown}; choose from {MODALITY_NAMES}")
    if len(set(dropped)) == len(MODALITY_NAMES):
        raise CliError("cannot drop all three modalities; at least one input must remain")
    return DropoutMask(
        keep_image="image" not in dropped,
        keep_audio="audio" not in dropped,
        keep_motion="motion" not in dropped,
    )


def _write_pgm(path: Path, image: np.ndarray) -> None:
    h, w = image.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(np.ascontiguousarray(image, dtype=np.uint8).tobytes())


def _write_wav(path: Path, samples: np.ndarray, sample_rate: int) -> None:
    pcm = np.round(np.clip(samples, -1.0, 1.0) * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as f:
        f.setnchannels(1)
        f.setsampwidth(2)
        f.setframerate(sample_rate)
        f.writeframes(pcm.tobytes())


def _write_motion_csv(path: Path, q: np.ndarray, frame_rate: int) -> None:
    joints = q.shape[1]
    lines = ["t," + ",".join(f"q{j + 1}" for j in range(joints))]
    for k, row in enumerate(q):
        lines.append(f"{k / frame_rate:.6f}," + ",".join(f"{v:.9g}" for v in row))
    path.write_text("\n".join(lines) + "\n")


def _write_spec_csv(path: Path, specs: np.ndarray, frame_rate: int) -> None:
    bins = specs.shape[1]
    lines = ["t," + ",".join(f"b{j}" for j in range(bins))]
    for k, row in enumerate(specs):
        lines.append(f"{k / frame_rate:.6f}," + ",".join(f"{v:.9g}" for v in row))
    path.write_text("\n".join(lines) + "\n")


def cmd_gen(args: argparse.Namespace) -> int:
    scene = _load_scene(args.scene)
    tab_text = Path(args.tab).read_text()
    record, contacts = generate_record(
        tab_text, scene, seed=args.seed, noise_sigma=args.noise_sigma
    )
    save_record(record, args.out)
    summary = {
        "frames": len(record.frames),
        "contacts": len(contacts),
        "duration": len(record.frames) / record.meta.frame_rate,
        "out": str(args.out),
    }
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_dataset(args: argparse.Namespace) -> int:
    if args.count < 0:
        raise CliError("count must be non-negative")
    scene = _load_scene(args.scene)
    # --duration is the record length.  The tab grid must end early enough
    # that the lead-in, the final down-stroke and the decay tail all fit,
    # otherwise the trajectory outruns the requested length and records
    # stop sharing a fixed frame count.
    cell_s = 60.0 / (DATASET_TEMPO * DATASET_DIV)
    grid_s = args.duration - DATASET_OFFSET - scene.stroke_dur - scene.tail_s
    if grid_s < cell_s:
        raise CliError(
            f"duration {args.duration} too short: no room for a tab grid after "
            f"{DATASET_OFFSET} s lead-in, {scene.stroke_dur} s stroke and {scene.tail_s} s tail"
        )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    width = max(5, len(str(max(args.count - 1, 0))))
    written = 0
    for i in range(args.count):
        for attempt in range(DATASET_RETRIES):
            tab_seed = args.seed + i + attempt * 1_000_003
            tab = gen_random_tab(
                tab_seed,
                grid_s,
                DATASET_TEMPO,
                DATASET_DIV,
                args.density,
                scene.kit,
                candidates=scene.candidates(),
                stroke_dur=scene.stroke_dur,
                min_transit=scene.min_transit,
                offset_s=DATASET_OFFSET,
            )
            try:
                record, _ = generate_record(
                    tab,
                    scene,
                    seed=args.seed + i,
                    noise_sigma=args.noise_sigma,
                    total_duration=args.duration,
                )
            except (PlanError, ReachError) as exc:
                print(f"record {i} draw {attempt} infeasible: {exc}", file=sys.stderr)
                continue
            save_record(record, out_dir / f"record_{i:0{width}d}.mmr")
            written += 1
            break
        else:
            print(f"record {i}: no feasible draw, skipped", file=sys.stderr)
    print(json.dumps({"requested": args.count, "written": written, "out": str(out_dir)}, sort_keys=True))
    return EXIT_OK


def cmd_inspect(args: argparse.Namespace) -> int:
    record = load_record(args.record)
    meta = record.meta
    if args.frame is not None and not 0 <= args.frame < len(record.frames):
        raise CliError(f"frame {args.frame} out of range (record has {len(record.frames)} frames)")
    if args.dump_image is not None:
        if args.frame is None:
            raise CliError("--dump-image requires --frame")
        _write_pgm(Path(args.dump_image), record.frames[args.frame].image)
    if args.dump_audio is not None:
        waveform = np.concatenate([f.audio for f in record.frames])
        _write_wav(Path(args.dump_audio), waveform, meta.sample_rate)
    if args.dump_motion is not None:
        q = np.stack([f.q for f in record.frames])
        _write_motion_csv(Path(args.dump_motion), q, meta.frame_rate)
    info = {
        "frames": len(record.frames),
        "frame_rate": meta.frame_rate,
        "sample_rate": meta.sample_rate,
        "image_w": meta.image_w,
        "image_h": meta.image_h,
        "joint_count": meta.joint_count,
        "drum_ids": list(meta.drum_ids),
        "seed": meta.seed,
        "noise_sigma": meta.noise_sigma,
        "tab_text": meta.tab_text,
    }
    print(json.dumps(info, sort_keys=True))
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    records = _load_dataset(args.data)
    hyper = Hyper(
        learning_rate=args.lr,
        contractive_weight=args.contractive_weight,
        dropout_p=args.drop,
        epochs=args.epochs,
        seed=args.seed,
    )
    model = init_params(ArchSpec(), seed=args.seed)
    model, history = train(model, records, hyper)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(model, out)
    loss_path = out.with_suffix(out.suffix + ".loss.csv")
    loss_path.write_text("".join(f"{i},{v:.17g}\n" for i, v in enumerate(history)))
    print(
        json.dumps(
            {
                "epochs": len(history),
                "initial_loss": history[0],
                "final_loss": history[-1],
                "model": str(out),
                "loss_csv": str(loss_path),
                "records": len(records),
            },
            sort_keys=True,
        )
    )
    return EXIT_OK


def cmd_reconstruct(args: argparse.Namespace) -> int:
    mask = _parse_mask(args.mask)
    dropped = [name for name, keep in zip(MODALITY_NAMES, mask.as_array()) if not keep]
    model = load_model(args.model)
    record = load_record(args.record)
    images = np.stack([f.image for f in record.frames]).astype(float) / 255.0
    specs = np.stack([f.spec for f in record.frames]).astype(float)
    q_norm = np.stack([f.q for f in record.frames]).astype(float) / math.pi
    out_batch, _ = forward_batch(model, images[None], specs[None], q_norm[None], [mask])
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    recon_images = np.clip(out_batch.images[0], 0.0, 1.0)
    for k, frame in enumerate(recon_images):
        _write_pgm(out_dir / f"frame_{k:05d}.pgm", np.round(frame * 255.0).astype(np.uint8))
    _write_spec_csv(out_dir / "spec.csv", out_batch.specs[0], record.meta.frame_rate)
    _write_motion_csv(out_dir / "motion.csv", out_batch.motion[0] * math.pi, record.meta.frame_rate)
    print(
        json.dumps(
            {"frames": len(record.frames), "dropped": dropped, "out": str(out_dir)},
            sort_keys=True,
        )
    )
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    records = _load_dataset(args.data)
    report = evaluate(model, records)
    text = report.to_json()
    Path(args.report).write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_gradcheck(args: argparse.Namespace) -> int:
    report = gradcheck(seed=args.seed)
    print(
        json.dumps(
            {
                "max_rel_err": report.max_rel_err,
                "worst_tensor": report.worst_tensor,
                "tolerance": TOLERANCE,
                "elapsed_s": round(report.elapsed_s, 3),
                "passed": report.passed,
            },
            sort_keys=True,
        )
    )
    return EXIT_OK if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drumfusion", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate one record from a tab file")
    p.add_argument("--tab", required=True, help="tablature text file")
    p.add_argument("--scene", default=None, help="scene JSON (default: built-in scene)")
    p.add_argument("--out", required=True, help="output .mmr path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("dataset", help="generate a directory of random records")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--duration", type=float, default=2.0, help="record duration in seconds")
    p.add_argument("--density", type=float, default=0.25, help="per-cell strike probability")
    p.add_argument("--scene", default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("inspect", help="print record metadata, optionally export frames")
    p.add_argument("--record", required=True)
    p.add_argument("--frame", type=int, default=None)
    p.add_argument("--dump-image", default=None, help="write the chosen frame as PGM")
    p.add_argument("--dump-audio", default=None, help="write the record audio as WAV")
    p.add_argument("--dump-motion", default=None, help="write joint angles as CSV")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("train", help="train the fusion network on a record directory")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--epochs", type=int, default=Hyper.epochs)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--drop", type=float, default=Hyper.dropout_p, help="modality dropout probability")
    p.add_argument(
        "--lambda",
        dest="contractive_weight",
        type=float,
        default=Hyper.contractive_weight,
        help="contractive penalty weight",
    )
    p.add_argument("--lr", type=float, default=Hyper.learning_rate)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("reconstruct", help="reconstruct a record with dropped modalities")
    p.add_argument("--model", required=True)
    p.add_argument("--record", required=True)
    p.add_argument("--mask", required=True, help="comma-separated modalities to DROP")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("eval", help="score retrieval on a record directory")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True, help="report JSON path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of the training gradient")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except TabError as exc:
        print(f"tab error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PlanError, ReachError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
