"""Per-utterance, per-layer embedding archives (EMB1 format) and pooling.

EMB1 is a little-endian binary layout:

    magic ``EMB1`` (4 bytes) | u8 kind (0 = latent, 1 = hidden)
    | u32 layer index | u32 n_frames | u32 dim
    | n_frames x dim float32, row-major

Archives store float32 (the exporter's native precision); everything
downstream is widened to float64. An index CSV with columns
``utterance_id, layer_kind, layer_index, path`` binds archives to
utterances; relative paths resolve against the index file's directory.
"""

from __future__ import annotations

import csv
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .features import FeatureVector

MAGIC = b"EMB1"
_KIND_CODES = {"latent": 0, "hidden": 1}
_KIND_NAMES = {code: name for name, code in _KIND_CODES.items()}


@dataclass(frozen=True)
class LayerId:
    kind: str
    index: int

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise DataError(f"unknown layer kind {self.kind!r}")
        if self.kind == "hidden" and not 1 <= self.index <= 12:
            raise DataError(f"hidden layer index {self.index} outside 1..12")
        if self.kind == "latent" and self.index < 1:
            raise DataError(f"latent layer index {self.index} must be >= 1")

    @property
    def feature_set_id(self) -> str:
        if self.kind == "hidden":
            return f"w2v2-layer-{self.index}"
        return f"w2v2-latent-{self.index}"

    def __str__(self) -> str:
        return f"{self.kind}:{self.index}"


@dataclass(frozen=True)
class EmbeddingArchive:
    utterance_id: str
    layer: LayerId
    frames: np.ndarray  # (n_frames, dim) float64

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[0] < 1 or frames.shape[1] < 1:
            raise DataError(
                f"{self.utterance_id!r}: archive must hold at least one frame"
            )
        if not np.all(np.isfinite(frames)):
            raise DataError(f"{self.utterance_id!r}: non-finite embedding payload")
        object.__setattr__(self, "frames", frames)

    @property
    def dim(self) -> int:
        return self.frames.shape[1]


def write_embedding_file(path, layer: LayerId, frames) -> None:
    """Write an EMB1 archive (payload stored as float32)."""
    frames = np.ascontiguousarray(frames, dtype=np.float32)
    if frames.ndim != 2 or frames.shape[0] < 1 or frames.shape[1] < 1:
        raise DataError("EMB1 payload must be a non-empty 2-D matrix")
    n_frames, dim = frames.shape
    header = MAGIC + struct.pack(
        "<BIII", _KIND_CODES[layer.kind], layer.index, n_frames, dim
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(frames.tobytes())


def read_embedding_file(path, utterance_id: str | None = None) -> EmbeddingArchive:
    """Read an EMB1 archive, validating magic, header, and payload size."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise DataError(f"unreadable embedding file {path}: {exc}") from exc

    if len(blob) < 4 or blob[:4] != MAGIC:
        raise DataError(f"{path}: bad magic (not an EMB1 file)")
    if len(blob) < 17:
        raise DataError(f"{path}: truncated header")
    kind_code, index, n_frames, dim = struct.unpack_from("<BIII", blob, 4)
    if kind_code not in _KIND_NAMES:
        raise DataError(f"{path}: unknown layer kind code {kind_code}")
    if n_frames == 0 or dim == 0:
        raise DataError(f"{path}: empty archive (n_frames={n_frames}, dim={dim})")
    expected = 17 + 4 * n_frames * dim
    if len(blob) < expected:
        raise DataError(
            f"{path}: truncated payload (header declares {n_frames}x{dim}, "
            f"{len(blob) - 17} payload bytes present)"
        )
    if len(blob) > expected:
        raise DataError(f"{path}: {len(blob) - expected} trailing bytes after payload")
    frames = np.frombuffer(blob, dtype="<f4", count=n_frames * dim, offset=17)
    frames = frames.reshape(n_frames, dim).astype(np.float64)
    if not np.all(np.isfinite(frames)):
        raise DataError(f"{path}: NaN or Inf in embedding payload")
    if utterance_id is None:
        utterance_id = os.path.splitext(os.path.basename(path))[0]
    return EmbeddingArchive(utterance_id, LayerId(_KIND_NAMES[kind_code], index), frames)


def pool_embedding(archive: EmbeddingArchive) -> FeatureVector:
    """Mean over frames, tagged with the archive's layer."""
    return FeatureVector(
        values=archive.frames.mean(axis=0),
        feature_set_id=archive.layer.feature_set_id,
        utterance_id=archive.utterance_id,
    )


@dataclass(frozen=True)
class IndexEntry:
    utterance_id: str
    layer: LayerId
    path: str


def read_embedding_index(path) -> list[IndexEntry]:
    """Parse an embedding index CSV; relative paths stay relative."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"unreadable embedding index {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        required = {"utterance_id", "layer_kind", "layer_index", "path"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataError(f"{path}: index header must contain {sorted(required)}")
        entries = []
        for row in reader:
            try:
                layer = LayerId(row["layer_kind"], int(row["layer_index"]))
            except ValueError as exc:
                raise DataError(f"{path}: bad layer index {row['layer_index']!r}") from exc
            entries.append(IndexEntry(row["utterance_id"], layer, row["path"]))
    return entries


def write_embedding_index(path, entries: list[IndexEntry]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["utterance_id", "layer_kind", "layer_index", "path"])
        for e in entries:
            writer.writerow([e.utterance_id, e.layer.kind, e.layer.index, e.path])


def load_pooled_layer(index_path, layer: LayerId) -> dict[str, FeatureVector]:
    """Load and pool every archive the index lists for one layer.

    All-or-nothing: any unreadable or inconsistent archive fails the whole
    load so a cohort can never be silently partial.
    """
    entries = [e for e in read_embedding_index(index_path) if e.layer == layer]
    if not entries:
        raise DataError(f"{index_path}: no archives indexed for layer {layer}")
    base = os.path.dirname(os.path.abspath(index_path))
    pooled: dict[str, FeatureVector] = {}
    for entry in entries:
        if entry.utterance_id in pooled:
            raise DataError(
                f"{index_path}: duplicate index row for {entry.utterance_id!r} / {layer}"
            )
        full = entry.path if os.path.isabs(entry.path) else os.path.join(base, entry.path)
        archive = read_embedding_file(full, utterance_id=entry.utterance_id)
        if archive.layer != layer:
            raise DataError(
                f"{full}: archive layer {archive.layer} does not match index row {layer}"
            )
        pooled[entry.utterance_id] = pool_embedding(archive)
    dims = {len(v) for v in pooled.values()}
    if len(dims) > 1:
        raise DataError(f"{index_path}: mixed dimensions {sorted(dims)} for layer {layer}")
    return pooled


def indexed_layers(index_path) -> list[LayerId]:
    """Distinct layers present in an index, hidden layers first."""
    layers = {e.layer for e in read_embedding_index(index_path)}
    return sorted(layers, key=lambda l: (l.kind != "hidden", l.kind, l.index))
