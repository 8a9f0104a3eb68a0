"""Self-describing binary container for time-synchronized multimodal trials.

Layout, all little-endian::

    magic   4 bytes  "MMR1"
    version u16      1
    meta    u32 length + that many bytes of canonical JSON (sorted keys,
                     compact separators)
    count   u32      frame count
    frames  per frame:
              q        6 x f32   joint angles, left arm then right
              qd       6 x f32   joint velocities
              image    w*h x u8  row-major intensity * 255
              audio    spf x f32 this frame's waveform slice
              spec     128 x f32 this frame's log-magnitude spectrogram
              contacts u8        bitmask, bit i = kit drum i struck
    crc     u32      CRC32 (zlib) of every preceding byte

The stored spectrogram is redundant with the audio; readers may verify it
with read_record(strict=True), which recomputes features from the stored
f32 audio and allows 1e-6 absolute slack for the f32 quantization of the
feature values themselves.
"""

from __future__ import annotations

import io
import json
import struct
import zlib
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .audio import spectrogram_frame
from .errors import FormatError

MAGIC = b"MMR1"
VERSION = 1
N_SPEC = 128
N_JOINTS = 6


@dataclass(frozen=True)
class RecordMeta:
    frame_rate: int
    sample_rate: int
    image_w: int
    image_h: int
    joint_count: int
    drum_ids: tuple[str, ...]
    tab_text: str
    seed: int
    noise_sigma: float

    @property
    def samples_per_frame(self) -> int:
        return self.sample_rate // self.frame_rate


@dataclass(frozen=True)
class MMFrame:
    q: np.ndarray  # (6,) f32
    qd: np.ndarray  # (6,) f32
    image: np.ndarray  # (h, w) u8
    audio: np.ndarray  # (spf,) f32
    spec: np.ndarray  # (128,) f32
    contact_mask: int

    def __eq__(self, other) -> bool:
        if not isinstance(other, MMFrame):
            return NotImplemented
        return (
            np.array_equal(self.q, other.q)
            and np.array_equal(self.qd, other.qd)
            and np.array_equal(self.image, other.image)
            and np.array_equal(self.audio, other.audio)
            and np.array_equal(self.spec, other.spec)
            and self.contact_mask == other.contact_mask
        )


@dataclass(frozen=True)
class MultimodalRecord:
    meta: RecordMeta
    frames: tuple[MMFrame, ...]

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultimodalRecord):
            return NotImplemented
        return self.meta == other.meta and self.frames == other.frames


def frame_byte_size(meta: RecordMeta) -> int:
    return 4 * N_JOINTS * 2 + meta.image_w * meta.image_h + 4 * meta.samples_per_frame + 4 * N_SPEC + 1


def record_byte_size(meta: RecordMeta, n_frames: int) -> int:
    """Exact size of the serialized record in bytes."""
    meta_json = _meta_json(meta)
    return 4 + 2 + (4 + len(meta_json)) + 4 + n_frames * frame_byte_size(meta) + 4


def _meta_json(meta: RecordMeta) -> bytes:
    doc = asdict(meta)
    doc["drum_ids"] = list(meta.drum_ids)
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")


def write_record(rec: MultimodalRecord, sink) -> int:
    """Serialize to a binary file-like sink; returns bytes written."""
    meta = rec.meta
    spf = meta.samples_per_frame
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", VERSION))
    mj = _meta_json(meta)
    buf.write(struct.pack("<I", len(mj)))
    buf.write(mj)
    buf.write(struct.pack("<I", len(rec.frames)))
    for fr in rec.frames:
        if fr.image.shape != (meta.image_h, meta.image_w):
            raise FormatError("shape-mismatch", f"image shape {fr.image.shape} != meta")
        if len(fr.audio) != spf or len(fr.spec) != N_SPEC or len(fr.q) != N_JOINTS:
            raise FormatError("shape-mismatch", "frame field length does not match meta")
        buf.write(np.asarray(fr.q, dtype="<f4").tobytes())
        buf.write(np.asarray(fr.qd, dtype="<f4").tobytes())
        buf.write(np.asarray(fr.image, dtype=np.uint8).tobytes())
        buf.write(np.asarray(fr.audio, dtype="<f4").tobytes())
        buf.write(np.asarray(fr.spec, dtype="<f4").tobytes())
        buf.write(struct.pack("B", fr.contact_mask & 0xFF))
    payload = buf.getvalue()
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    data = payload + struct.pack("<I", crc)
    sink.write(data)
    return len(data)


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("truncated", f"stream ends inside {what}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out


def read_record(source, strict: bool = False) -> MultimodalRecord:
    """Parse a record; source is a binary file-like or bytes.

    Raises FormatError kinds bad-magic, bad-version, bad-header, truncated,
    shape-mismatch, crc-mismatch.
    """
    data = source if isinstance(source, bytes) else source.read()
    cur = _Cursor(data)
    if cur.take(4, "magic") != MAGIC:
        raise FormatError("bad-magic", "not a multimodal record (bad magic)")
    (version,) = struct.unpack("<H", cur.take(2, "version"))
    if version != VERSION:
        raise FormatError("bad-version", f"unsupported version {version}")
    (meta_len,) = struct.unpack("<I", cur.take(4, "meta length"))
    if meta_len > len(data):
        raise FormatError("truncated", "meta length exceeds stream")
    try:
        doc = json.loads(cur.take(meta_len, "meta").decode("utf-8"))
        meta = RecordMeta(
            int(doc["frame_rate"]), int(doc["sample_rate"]),
            int(doc["image_w"]), int(doc["image_h"]), int(doc["joint_count"]),
            tuple(str(d) for d in doc["drum_ids"]), str(doc["tab_text"]),
            int(doc["seed"]), float(doc["noise_sigma"]),
        )
    except (ValueError, KeyError, TypeError, UnicodeDecodeError) as e:
        raise FormatError("bad-header", f"meta block is not valid: {e}") from None
    if meta.sample_rate <= 0 or meta.frame_rate <= 0 or meta.sample_rate % meta.frame_rate:
        raise FormatError("bad-header", "meta rates invalid")
    if meta.image_w <= 0 or meta.image_h <= 0 or meta.joint_count != N_JOINTS:
        raise FormatError("bad-header", "meta shapes invalid")

    (n_frames,) = struct.unpack("<I", cur.take(4, "frame count"))
    expected = record_byte_size(meta, n_frames)
    if len(data) != expected:
        kind = "truncated" if len(data) < expected else "shape-mismatch"
        raise FormatError(kind, f"stream is {len(data)} bytes, layout implies {expected}")

    spf = meta.samples_per_frame
    frames = []
    for _ in range(n_frames):
        q = np.frombuffer(cur.take(24, "q"), dtype="<f4").copy()
        qd = np.frombuffer(cur.take(24, "qd"), dtype="<f4").copy()
        img = np.frombuffer(cur.take(meta.image_w * meta.image_h, "image"), dtype=np.uint8)
        img = img.reshape(meta.image_h, meta.image_w).copy()
        audio = np.frombuffer(cur.take(4 * spf, "audio"), dtype="<f4").copy()
        spec = np.frombuffer(cur.take(4 * N_SPEC, "spec"), dtype="<f4").copy()
        (mask,) = struct.unpack("B", cur.take(1, "contact mask"))
        frames.append(MMFrame(q, qd, img, audio, spec, mask))
    (crc_stored,) = struct.unpack("<I", cur.take(4, "crc"))
    crc = zlib.crc32(data[: len(data) - 4]) & 0xFFFFFFFF
    if crc != crc_stored:
        raise FormatError("crc-mismatch", f"crc {crc:#010x} != stored {crc_stored:#010x}")

    if strict:
        for i, fr in enumerate(frames):
            recomputed = spectrogram_frame(fr.audio.astype(float), spf).astype("<f4")
            if not np.allclose(recomputed, fr.spec, atol=1e-6, rtol=0):
                raise FormatError("shape-mismatch", f"frame {i} spec does not match its audio")
    return MultimodalRecord(meta, tuple(frames))


def load_record(path) -> MultimodalRecord:
    with open(path, "rb") as f:
        return read_record(f)


def save_record(rec: MultimodalRecord, path) -> int:
    with open(path, "wb") as f:
        return write_record(rec, f)


def dataset_index(directory) -> tuple[list[tuple[str, RecordMeta, int]], list[tuple[str, str]]]:
    """Scan a directory of .mmr files, reading headers only.

    Returns (entries, skipped): entries are (path, meta, frame_count)
    sorted by path; skipped are (path, reason) for unreadable files.
    """
    entries = []
    skipped = []
    for path in sorted(Path(directory).glob("*.mmr")):
        try:
            with open(path, "rb") as f:
                head = f.read(10)
            if head[:4] != MAGIC:
                raise FormatError("bad-magic", "bad magic")
            (version,) = struct.unpack("<H", head[4:6])
            if version != VERSION:
                raise FormatError("bad-version", f"unsupported version {version}")
            (meta_len,) = struct.unpack("<I", head[6:10])
            with open(path, "rb") as f:
                f.seek(10)
                meta_raw = f.read(meta_len)
                if len(meta_raw) < meta_len:
                    raise FormatError("truncated", "stream ends inside meta")
                doc = json.loads(meta_raw.decode("utf-8"))
                meta = RecordMeta(
                    int(doc["frame_rate"]), int(doc["sample_rate"]),
                    int(doc["image_w"]), int(doc["image_h"]), int(doc["joint_count"]),
                    tuple(str(d) for d in doc["drum_ids"]), str(doc["tab_text"]),
                    int(doc["seed"]), float(doc["noise_sigma"]),
                )
                count_raw = f.read(4)
                if len(count_raw) < 4:
                    raise FormatError("truncated", "stream ends at frame count")
                (n_frames,) = struct.unpack("<I", count_raw)
            entries.append((str(path), meta, n_frames))
        except (OSError, FormatError, ValueError, KeyError, UnicodeDecodeError) as e:
            skipped.append((str(path), str(e)))
    return entries, skipped
