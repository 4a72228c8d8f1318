"""On-disk representation format (MIAF) and NDJSON manifest handling.

A MIAF file stores one utterance's frame-level representation matrix
together with its identity metadata, little-endian throughout:

    magic   "MIAF"                      4 bytes
    version u32 = 1
    m       u32   frame count
    q       u32   representation dimensionality
    utterance_id    u32 length + UTF-8 bytes
    speaker_id      u32 length + UTF-8 bytes
    payload m*q float32 values, row-major (frame-major)

Values are stored as float32; all scoring arithmetic happens in float64
after load. A manifest is NDJSON with one entry per line:
``{"utterance_id", "speaker_id", "path", "membership"}`` where ``path`` is
relative to the manifest file, ``membership`` defaults to ``"unknown"`` and
unknown extra fields are ignored. A line of the form ``{"metadata": {...}}``
carries free-form dataset metadata and is not an entry.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .errors import FormatError, StorageError, ValidationError

MAGIC = b"MIAF"
VERSION = 1
MEMBERSHIPS = ("seen", "unseen", "unknown")

_HEADER = struct.Struct("<4sIII")


@dataclass
class FeatureSequence:
    """One utterance's m x q frame-level representation matrix."""

    utterance_id: str
    speaker_id: str
    frames: np.ndarray

    def __post_init__(self):
        frames = np.ascontiguousarray(self.frames, dtype=np.float32)
        if frames.ndim != 2:
            raise ValidationError(
                f"frames must be 2-dimensional, got shape {frames.shape}"
            )
        if frames.shape[1] < 1:
            raise ValidationError("representation dimensionality q must be >= 1")
        if not np.all(np.isfinite(frames)):
            raise ValidationError(
                f"non-finite value in frames of utterance {self.utterance_id!r}"
            )
        frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FeatureSequence):
            return NotImplemented
        return (
            self.utterance_id == other.utterance_id
            and self.speaker_id == other.speaker_id
            and self.frames.shape == other.frames.shape
            and np.array_equal(self.frames, other.frames)
        )


@dataclass(frozen=True)
class ManifestEntry:
    utterance_id: str
    speaker_id: str
    path: str
    membership: str = "unknown"


@dataclass
class Manifest:
    """Index of feature files, in file order, with membership ground truth."""

    entries: list[ManifestEntry]
    base_dir: Path
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def resolve(self, entry: ManifestEntry) -> Path:
        return self.base_dir / entry.path


@dataclass
class SpeakerGroup:
    """All sequences of one speaker; n = len(sequences)."""

    speaker_id: str
    sequences: list[FeatureSequence]

    @property
    def num_utterances(self) -> int:
        return len(self.sequences)


def _encode_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def write_feature_file(seq: FeatureSequence, path: str | Path) -> None:
    """Write ``seq`` to ``path`` in the MIAF layout (see module docstring)."""
    if not np.all(np.isfinite(seq.frames)):
        raise ValidationError(
            f"non-finite value in frames of utterance {seq.utterance_id!r}"
        )
    m, q = seq.frames.shape
    blob = (
        _HEADER.pack(MAGIC, VERSION, m, q)
        + _encode_str(seq.utterance_id)
        + _encode_str(seq.speaker_id)
        + seq.frames.astype("<f4", copy=False).tobytes(order="C")
    )
    try:
        Path(path).write_bytes(blob)
    except OSError as exc:
        raise StorageError(f"cannot write feature file {path}: {exc}") from exc


class _Cursor:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"truncated feature file {self.path}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def take_str(self) -> str:
        (n,) = struct.unpack("<I", self.take(4))
        return self.take(n).decode("utf-8")


def _read_prefix(path: str | Path) -> tuple[_Cursor, int, int]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise StorageError(f"cannot read feature file {path}: {exc}") from exc
    cur = _Cursor(data, path)
    magic, version, m, q = _HEADER.unpack(cur.take(_HEADER.size))
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r} in {path}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(
            f"unsupported feature file version {version} in {path} "
            f"(this reader supports version {VERSION})"
        )
    return cur, m, q


def read_feature_header(path: str | Path) -> tuple[str, str, int, int]:
    """Return (utterance_id, speaker_id, m, q) without loading the payload."""
    cur, m, q = _read_prefix(path)
    return cur.take_str(), cur.take_str(), m, q


def read_feature_file(path: str | Path) -> FeatureSequence:
    """Read a MIAF file, validating magic, version, and payload length."""
    cur, m, q = _read_prefix(path)
    utterance_id = cur.take_str()
    speaker_id = cur.take_str()
    payload = cur.take(4 * m * q)
    if cur.pos != len(cur.data):
        raise FormatError(f"trailing bytes after payload in {path}")
    frames = np.frombuffer(payload, dtype="<f4").reshape(m, q)
    return FeatureSequence(utterance_id, speaker_id, frames)


def write_manifest(
    entries: Iterable[ManifestEntry], path: str | Path, metadata: dict | None = None
) -> None:
    lines = []
    if metadata:
        lines.append(json.dumps({"metadata": metadata}, sort_keys=True))
    for e in entries:
        lines.append(
            json.dumps(
                {
                    "utterance_id": e.utterance_id,
                    "speaker_id": e.speaker_id,
                    "path": e.path,
                    "membership": e.membership,
                },
                sort_keys=True,
            )
        )
    try:
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
    except OSError as exc:
        raise StorageError(f"cannot write manifest {path}: {exc}") from exc


def load_manifest(path: str | Path, verify_files: bool = True) -> Manifest:
    """Load and validate an NDJSON manifest.

    Checks utterance_id uniqueness and membership tokens; with
    ``verify_files`` also checks that every path resolves to a readable MIAF
    file and that all files share one q.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise StorageError(f"cannot read manifest {path}: {exc}") from exc

    entries: list[ManifestEntry] = []
    metadata: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise FormatError(f"{path}:{lineno}: manifest line is not an object")
        if "utterance_id" not in obj and "metadata" in obj:
            metadata.update(obj["metadata"])
            continue
        missing = [k for k in ("utterance_id", "speaker_id", "path") if k not in obj]
        if missing:
            raise ValidationError(
                f"{path}:{lineno}: missing manifest fields {missing}"
            )
        membership = obj.get("membership", "unknown")
        if membership not in MEMBERSHIPS:
            raise ValidationError(
                f"{path}:{lineno}: unknown membership token {membership!r} "
                f"(expected one of {MEMBERSHIPS})"
            )
        entries.append(
            ManifestEntry(
                utterance_id=str(obj["utterance_id"]),
                speaker_id=str(obj["speaker_id"]),
                path=str(obj["path"]),
                membership=membership,
            )
        )

    seen_ids: dict[str, int] = {}
    duplicates = []
    for e in entries:
        seen_ids[e.utterance_id] = seen_ids.get(e.utterance_id, 0) + 1
    duplicates = sorted(u for u, c in seen_ids.items() if c > 1)
    if duplicates:
        raise ValidationError(f"duplicate utterance_id in manifest: {duplicates}")

    manifest = Manifest(entries=entries, base_dir=path.parent, metadata=metadata)
    if verify_files:
        declared_q: int | None = None
        for e in entries:
            fpath = manifest.resolve(e)
            if not fpath.is_file():
                raise ValidationError(
                    f"manifest entry {e.utterance_id!r} points to missing file {fpath}"
                )
            _, _, _, q = read_feature_header(fpath)
            if declared_q is None:
                declared_q = q
            elif q != declared_q:
                raise ValidationError(
                    f"inconsistent dimensionality: {fpath} has q={q}, "
                    f"manifest declares q={declared_q}"
                )
    return manifest


def load_sequence(manifest: Manifest, entry: ManifestEntry) -> FeatureSequence:
    """Load one entry's sequence, checking file ids against the manifest."""
    seq = read_feature_file(manifest.resolve(entry))
    if seq.utterance_id != entry.utterance_id or seq.speaker_id != entry.speaker_id:
        raise ValidationError(
            f"id mismatch for {manifest.resolve(entry)}: file says "
            f"({seq.utterance_id!r}, {seq.speaker_id!r}), manifest says "
            f"({entry.utterance_id!r}, {entry.speaker_id!r})"
        )
    return seq


def group_by_speaker(manifest: Manifest) -> list[SpeakerGroup]:
    """Partition the manifest's sequences by speaker, order-stable by first
    appearance; within a group, sequences keep manifest order."""
    order: list[str] = []
    buckets: dict[str, list[FeatureSequence]] = {}
    for entry in manifest.entries:
        if entry.speaker_id not in buckets:
            buckets[entry.speaker_id] = []
            order.append(entry.speaker_id)
        buckets[entry.speaker_id].append(load_sequence(manifest, entry))
    return [SpeakerGroup(spk, buckets[spk]) for spk in order]
