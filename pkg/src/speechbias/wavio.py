"""Minimal RIFF/WAVE reader and writer.

Supports the two on-disk encodings the toolkit accepts: 16-bit integer PCM
(format tag 1) and 32-bit IEEE float (format tag 3). Nothing else is parsed
on purpose; anything fancier is a preprocessing gap upstream.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import DataError

_FMT_PCM = 1
_FMT_FLOAT = 3


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a WAV file into a float64 array of shape (n_samples, n_channels).

    PCM16 samples are scaled by 1/32768 so the output lies in [-1, 1].
    """
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise DataError(f"unreadable WAV file {path}: {exc}") from exc

    if len(blob) < 12 or blob[0:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise DataError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(blob):
        chunk_id = blob[pos : pos + 4]
        (chunk_size,) = struct.unpack_from("<I", blob, pos + 4)
        body = blob[pos + 8 : pos + 8 + chunk_size]
        if chunk_id == b"fmt ":
            fmt = body
        elif chunk_id == b"data":
            data = body
        pos += 8 + chunk_size + (chunk_size & 1)

    if fmt is None or data is None:
        raise DataError(f"{path}: missing fmt or data chunk")
    if len(fmt) < 16:
        raise DataError(f"{path}: truncated fmt chunk")

    tag, n_channels, sample_rate, _, _, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if n_channels < 1:
        raise DataError(f"{path}: invalid channel count {n_channels}")

    if tag == _FMT_PCM and bits == 16:
        raw = np.frombuffer(data, dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif tag == _FMT_FLOAT and bits == 32:
        raw = np.frombuffer(data, dtype="<f4")
        samples = raw.astype(np.float64)
    else:
        raise DataError(
            f"{path}: unsupported WAV encoding (format tag {tag}, {bits}-bit); "
            "expected 16-bit PCM or 32-bit float"
        )

    n_frames = samples.size // n_channels
    samples = samples[: n_frames * n_channels].reshape(n_frames, n_channels)
    return samples, int(sample_rate)


def write_wav(path, samples, sample_rate: int, encoding: str = "pcm16") -> None:
    """Write a mono WAV file.

    ``encoding`` is ``pcm16`` or ``float32``. PCM16 quantization is
    round(x * 32768) clipped to the int16 range, so a round trip through
    :func:`read_wav` is exact to within 1/32768.
    """
    x = np.asarray(samples, dtype=np.float64).reshape(-1)
    if encoding == "pcm16":
        tag, bits = _FMT_PCM, 16
        q = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
        payload = q.tobytes()
    elif encoding == "float32":
        tag, bits = _FMT_FLOAT, 32
        payload = x.astype("<f4").tobytes()
    else:
        raise ValueError(f"unknown encoding {encoding!r}")

    block_align = bits // 8
    byte_rate = sample_rate * block_align
    fmt = struct.pack("<HHIIHH", tag, 1, sample_rate, byte_rate, block_align, bits)
    riff_size = 4 + (8 + len(fmt)) + (8 + len(payload))
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", riff_size) + b"WAVE")
        fh.write(b"fmt " + struct.pack("<I", len(fmt)) + fmt)
        fh.write(b"data" + struct.pack("<I", len(payload)) + payload)
