"""Strict WAV loading for inference input: 16 kHz mono, PCM16 or float32."""

from __future__ import annotations

import struct

import numpy as np

REQUIRED_RATE = 16000


class AudioError(Exception):
    pass


def load_wav_mono_16k(path: str) -> np.ndarray:
    """Float32 samples in [-1, 1]; anything but 16 kHz mono is rejected."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise AudioError(f"unreadable audio {path}: {exc}") from exc
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise AudioError(f"{path}: not a RIFF/WAVE file")

    fmt = data = None
    pos = 12
    while pos + 8 <= len(blob):
        cid = blob[pos : pos + 4]
        (size,) = struct.unpack_from("<I", blob, pos + 4)
        body = blob[pos + 8 : pos + 8 + size]
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)
    if fmt is None or data is None or len(fmt) < 16:
        raise AudioError(f"{path}: malformed WAV chunks")

    tag, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if rate != REQUIRED_RATE:
        raise AudioError(f"{path}: sample rate {rate} Hz; the model expects 16000 Hz")
    if channels != 1:
        raise AudioError(f"{path}: {channels} channels; preprocess to mono first")
    if tag == 1 and bits == 16:
        samples = np.frombuffer(data, dtype="<i2").astype(np.float32) / 32768.0
    elif tag == 3 and bits == 32:
        samples = np.frombuffer(data, dtype="<f4").astype(np.float32)
    else:
        raise AudioError(f"{path}: unsupported encoding (tag {tag}, {bits}-bit)")
    if samples.size == 0:
        raise AudioError(f"{path}: empty audio payload")
    return samples
