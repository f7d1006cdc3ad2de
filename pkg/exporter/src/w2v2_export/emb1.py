"""EMB1 archive and index writing.

Wire format (little-endian): magic ``EMB1`` | u8 kind (0 = latent,
1 = hidden) | u32 layer index | u32 n_frames | u32 dim | n_frames x dim
float32 row-major. Index CSV columns: utterance_id, layer_kind,
layer_index, path. This is the exporter's own implementation of the
contract; the consuming toolkit has an independent reader.
"""

from __future__ import annotations

import csv
import os
import struct

import numpy as np

MAGIC = b"EMB1"
KIND_CODES = {"latent": 0, "hidden": 1}


def write_archive(path: str, kind: str, index: int, frames: np.ndarray) -> None:
    """Write one EMB1 file atomically (temp + rename, no partial output)."""
    frames = np.ascontiguousarray(frames, dtype=np.float32)
    if frames.ndim != 2 or frames.shape[0] < 1 or frames.shape[1] < 1:
        raise ValueError(f"{path}: archive payload must be a non-empty 2-D matrix")
    if not np.all(np.isfinite(frames)):
        raise ValueError(f"{path}: refusing to write non-finite embeddings")
    header = MAGIC + struct.pack(
        "<BIII", KIND_CODES[kind], index, frames.shape[0], frames.shape[1]
    )
    tmp = path + ".tmp"
    try:
        with open(tmp, "wb") as fh:
            fh.write(header)
            fh.write(frames.tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_index(path: str, rows) -> None:
    """rows: iterable of (utterance_id, layer_kind, layer_index, rel_path)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["utterance_id", "layer_kind", "layer_index", "path"])
        for row in rows:
            writer.writerow(list(row))
