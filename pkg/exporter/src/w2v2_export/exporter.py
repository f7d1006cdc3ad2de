"""Run a pretrained speech encoder over manifest audio and emit EMB1 archives.

Hidden layer k (1-based) is the k-th transformer encoder state; latent
layer k is the output of the k-th convolutional stage of the feature
encoder, captured with forward hooks. Inference runs in eval mode under
no_grad, one utterance at a time, so re-exporting the same inputs yields
value-identical files.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np
import torch

from .audio import AudioError, load_wav_mono_16k
from .emb1 import write_archive, write_index

DEFAULT_CHECKPOINT = "facebook/wav2vec2-base-960h"


class ExportError(Exception):
    pass


@dataclass(frozen=True)
class LayerSelection:
    hidden: tuple = ()
    latent: tuple = ()  # empty with latent_all False means no latent layers
    latent_all: bool = False

    def __post_init__(self):
        for k in self.hidden:
            if not 1 <= k <= 12:
                raise ExportError(f"hidden layer {k} outside 1..12")
        for k in self.latent:
            if k < 1:
                raise ExportError(f"latent layer {k} must be >= 1")


def parse_layer_selection(spec: str) -> LayerSelection:
    """Parse e.g. 'hidden:1-12', 'hidden:9,10 latent:all', 'latent:1,3'."""
    hidden: list[int] = []
    latent: list[int] = []
    latent_all = False
    for part in spec.split():
        if ":" not in part:
            raise ExportError(f"bad layer selection {part!r}; use kind:indices")
        kind, indices = part.split(":", 1)
        if kind not in ("hidden", "latent"):
            raise ExportError(f"unknown layer kind {kind!r}")
        if indices == "all":
            if kind == "hidden":
                hidden.extend(range(1, 13))
            else:
                latent_all = True
            continue
        for token in indices.split(","):
            if "-" in token:
                lo, hi = token.split("-", 1)
                values = range(int(lo), int(hi) + 1)
            else:
                values = [int(token)]
            (hidden if kind == "hidden" else latent).extend(values)
    if not hidden and not latent and not latent_all:
        raise ExportError("empty layer selection")
    return LayerSelection(tuple(sorted(set(hidden))), tuple(sorted(set(latent))), latent_all)


@dataclass(frozen=True)
class ExportJob:
    manifest: str
    out_dir: str
    layers: LayerSelection
    checkpoint: str = DEFAULT_CHECKPOINT
    device: str = "cpu"


@dataclass(frozen=True)
class ExportRecord:
    utterance_id: str
    layer_kind: str
    layer_index: int
    path: str  # relative to out_dir
    n_frames: int
    dim: int
    pooled: np.ndarray  # mean over frames (float64 accumulation), exporter-side


@dataclass
class ExportResult:
    records: list = field(default_factory=list)
    index_path: str = ""


def read_audio_manifest(path: str) -> list[tuple[str, str]]:
    """(utterance_id, wav_path) pairs; relative paths anchor at the manifest."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise ExportError(f"unreadable manifest {path}: {exc}") from exc
    anchor = os.path.dirname(os.path.abspath(path))
    with fh:
        reader = csv.DictReader(fh)
        need = {"utterance_id", "wav_path"}
        if reader.fieldnames is None or not need.issubset(reader.fieldnames):
            raise ExportError(f"{path}: manifest needs columns {sorted(need)}")
        pairs = []
        seen = set()
        for row in reader:
            utt, wav = row["utterance_id"], row["wav_path"]
            if utt in seen:
                raise ExportError(f"{path}: duplicate utterance_id {utt!r}")
            seen.add(utt)
            if not wav:
                raise ExportError(f"{path}: {utt!r} has no wav_path")
            if not os.path.isabs(wav):
                wav = os.path.join(anchor, wav)
            pairs.append((utt, wav))
    return pairs


def load_model(checkpoint: str, device: str = "cpu"):
    from transformers import Wav2Vec2Model

    try:
        model = Wav2Vec2Model.from_pretrained(checkpoint)
    except Exception as exc:
        raise ExportError(f"cannot load checkpoint {checkpoint!r}: {exc}") from exc
    model.eval()
    return model.to(device)


def resolve_latent_indices(model, selection: LayerSelection) -> tuple:
    n_conv = len(model.feature_extractor.conv_layers)
    if selection.latent_all:
        return tuple(range(1, n_conv + 1))
    for k in selection.latent:
        if k > n_conv:
            raise ExportError(f"latent layer {k} requested; checkpoint has {n_conv}")
    return selection.latent


def _forward_layers(model, samples: np.ndarray, selection: LayerSelection,
                    latent_indices, device: str):
    """Returns {(kind, index): frames float32 (time, dim)} for one utterance."""
    x = torch.from_numpy(np.ascontiguousarray(samples, dtype=np.float32))
    x = x.unsqueeze(0).to(device)
    captured = {}
    hooks = []
    if latent_indices:
        wanted = set(latent_indices)

        def make_hook(stage):
            def hook(_module, _inputs, output):
                if stage in wanted:
                    # conv output is (batch, channels, time)
                    captured[("latent", stage)] = (
                        output.detach()[0].transpose(0, 1).cpu().numpy().astype(np.float32)
                    )
            return hook

        for i, layer in enumerate(model.feature_extractor.conv_layers, start=1):
            hooks.append(layer.register_forward_hook(make_hook(i)))
    try:
        with torch.no_grad():
            out = model(x, output_hidden_states=bool(selection.hidden))
    finally:
        for h in hooks:
            h.remove()
    if selection.hidden:
        n_states = len(out.hidden_states) - 1  # entry 0 is the pre-encoder embedding
        for k in selection.hidden:
            if k > n_states:
                raise ExportError(f"hidden layer {k} requested; checkpoint has {n_states}")
            captured[("hidden", k)] = (
                out.hidden_states[k].detach()[0].cpu().numpy().astype(np.float32)
            )
    return captured


def export(job: ExportJob, model=None) -> ExportResult:
    """Write one EMB1 file per (utterance, selected layer) plus the index."""
    if model is None:
        model = load_model(job.checkpoint, job.device)
    pairs = read_audio_manifest(job.manifest)
    if not pairs:
        raise ExportError(f"{job.manifest}: no utterances listed")
    latent_indices = resolve_latent_indices(model, job.layers)

    archive_dir = os.path.join(job.out_dir, "archives")
    os.makedirs(archive_dir, exist_ok=True)
    result = ExportResult()
    index_rows = []
    hidden_frame_counts: dict[str, set] = {}
    for utterance_id, wav_path in pairs:
        try:
            samples = load_wav_mono_16k(wav_path)
        except AudioError as exc:
            raise ExportError(str(exc)) from exc
        layer_frames = _forward_layers(model, samples, job.layers, latent_indices,
                                       job.device)
        for (kind, index) in sorted(layer_frames):
            frames = layer_frames[(kind, index)]
            rel = os.path.join("archives", f"{utterance_id}_{kind}{index}.emb1")
            write_archive(os.path.join(job.out_dir, rel), kind, index, frames)
            record = ExportRecord(
                utterance_id=utterance_id, layer_kind=kind, layer_index=index,
                path=rel, n_frames=frames.shape[0], dim=frames.shape[1],
                pooled=frames.astype(np.float64).mean(axis=0),
            )
            result.records.append(record)
            index_rows.append((utterance_id, kind, index, rel))
            if kind == "hidden":
                hidden_frame_counts.setdefault(utterance_id, set()).add(frames.shape[0])
    for utterance_id, counts in hidden_frame_counts.items():
        if len(counts) > 1:
            raise ExportError(
                f"{utterance_id}: hidden layers disagree on frame count {sorted(counts)}"
            )
    result.index_path = os.path.join(job.out_dir, "index.csv")
    write_index(result.index_path, index_rows)
    return result
