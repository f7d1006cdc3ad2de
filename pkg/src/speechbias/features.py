"""Acoustic feature extraction and external feature ingestion.

The built-in extractor computes 40 mean-pooled MFCCs from 16 kHz mono audio:
Hann-windowed frames, magnitude FFT, a 128-band triangular mel filterbank
(HTK mel scale, 0 Hz to 8 kHz), a floored log, and an orthonormal DCT-II.
Externally computed feature sets (for example 88-dimensional eGeMAPS
functionals) are ingested from CSV rather than reimplemented.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import DataError
from .wavio import read_wav

log = logging.getLogger(__name__)

REQUIRED_SAMPLE_RATE = 16000

# Feature-set tags with a fixed declared dimension. Embedding tags
# (w2v2-layer-k / w2v2-latent-k) carry their dimension in the archive.
DECLARED_DIMS = {"mfcc40": 40, "egemaps88": 88}


def _declared_dim(feature_set_id: str) -> int | None:
    return DECLARED_DIMS.get(feature_set_id)


@dataclass(frozen=True)
class AudioBuffer:
    """Mono 16 kHz audio in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int = REQUIRED_SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "samples", samples)
        if samples.size == 0:
            raise DataError("audio buffer is empty")
        if not np.all(np.isfinite(samples)):
            raise DataError("audio buffer contains non-finite samples")
        if self.sample_rate != REQUIRED_SAMPLE_RATE:
            raise DataError(
                f"unsupported sample rate {self.sample_rate} Hz; "
                f"expected {REQUIRED_SAMPLE_RATE} Hz (resample upstream)"
            )

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class MfccConfig:
    """MFCC parameters: 40 coefficients from 2048-sample windows, 512 hop."""

    n_coeffs: int = 40
    window: int = 2048
    hop: int = 512
    n_mels: int = 128
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.window < 1 or self.hop < 1:
            raise ValueError("window and hop must be positive")
        if self.hop > self.window:
            raise ValueError("hop must not exceed window")
        if self.n_coeffs > self.n_mels:
            raise ValueError("n_coeffs must not exceed n_mels")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")


@dataclass(frozen=True)
class FeatureVector:
    """Fixed-length per-utterance representation."""

    values: np.ndarray
    feature_set_id: str
    utterance_id: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "values", values)
        if not np.all(np.isfinite(values)):
            raise DataError(
                f"feature vector for {self.utterance_id!r} has non-finite values"
            )
        dim = _declared_dim(self.feature_set_id)
        if dim is not None and values.size != dim:
            raise DataError(
                f"feature vector for {self.utterance_id!r} has length "
                f"{values.size}, but {self.feature_set_id} declares {dim}"
            )

    def __len__(self) -> int:
        return self.values.size


def load_wav(path) -> AudioBuffer:
    """Load a PCM16 or float32 WAV file as a mono AudioBuffer.

    Multi-channel audio is averaged down to mono (with a warning). A sample
    rate other than 16 kHz is an error, never silently resampled.
    """
    samples, rate = read_wav(path)
    if samples.shape[1] > 1:
        log.warning(
            "%s: %d channels averaged down to mono", path, samples.shape[1]
        )
        mono = samples.mean(axis=1)
    else:
        mono = samples[:, 0]
    return AudioBuffer(samples=mono, sample_rate=rate)


def hann_window(n: int) -> np.ndarray:
    """Periodic Hann window."""
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def hz_to_mel(f):
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    n_mels: int, window: int, sample_rate: int = REQUIRED_SAMPLE_RATE,
    f_min: float = 0.0, f_max: float | None = None,
) -> np.ndarray:
    """Triangular unit-height mel filterbank sampled at the rfft bin centers.

    Returns an (n_mels, window // 2 + 1) weight matrix.
    """
    if f_max is None:
        f_max = sample_rate / 2.0
    edges_hz = mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))
    bin_hz = np.arange(window // 2 + 1) * (sample_rate / window)
    fb = np.zeros((n_mels, bin_hz.size))
    for i in range(n_mels):
        lo, mid, hi = edges_hz[i], edges_hz[i + 1], edges_hz[i + 2]
        rising = (bin_hz - lo) / (mid - lo)
        falling = (hi - bin_hz) / (hi - mid)
        fb[i] = np.maximum(0.0, np.minimum(rising, falling))
    return fb


def mel_band_edges_hz(n_mels: int = 128, f_min: float = 0.0,
                      f_max: float = REQUIRED_SAMPLE_RATE / 2) -> np.ndarray:
    """The n_mels + 2 filter edge frequencies in Hz."""
    return mel_to_hz(np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_mels + 2))


def frame_signal(samples: np.ndarray, window: int, hop: int) -> np.ndarray:
    """Slice a signal into overlapping frames (no padding).

    n_frames = floor((len - window) / hop) + 1.
    """
    n = samples.size
    if n < window:
        raise DataError(
            f"buffer of {n} samples is shorter than one {window}-sample window"
        )
    n_frames = (n - window) // hop + 1
    idx = np.arange(window)[None, :] + hop * np.arange(n_frames)[:, None]
    return samples[idx]


def log_mel_frames(buffer: AudioBuffer, config: MfccConfig = MfccConfig()) -> np.ndarray:
    """Per-frame floored log mel magnitudes, shape (n_frames, n_mels).

    This is the representation just before the DCT; exposed so the spectral
    content of a frame can be inspected directly.
    """
    frames = frame_signal(buffer.samples, config.window, config.hop)
    spectra = np.abs(np.fft.rfft(frames * hann_window(config.window), axis=1))
    fb = mel_filterbank(config.n_mels, config.window, buffer.sample_rate)
    mel_energy = spectra @ fb.T
    return np.log(np.maximum(mel_energy, config.log_floor))


def mfcc(buffer: AudioBuffer, config: MfccConfig = MfccConfig()) -> np.ndarray:
    """MFCC frame matrix of shape (n_frames, n_coeffs)."""
    log_mel = log_mel_frames(buffer, config)
    coeffs = scipy.fft.dct(log_mel, type=2, norm="ortho", axis=1)
    return coeffs[:, : config.n_coeffs]


def mean_pool(matrix: np.ndarray, utterance_id: str = "",
              feature_set_id: str = "mfcc40") -> FeatureVector:
    """Average a frame matrix along the time axis into one FeatureVector."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] < 1:
        raise DataError("mean_pool needs a non-empty 2-D frame matrix")
    return FeatureVector(
        values=matrix.mean(axis=0),
        feature_set_id=feature_set_id,
        utterance_id=utterance_id,
    )


def extract_mfcc_vector(buffer: AudioBuffer, utterance_id: str = "",
                        config: MfccConfig = MfccConfig()) -> FeatureVector:
    """The full chain: MFCC frames mean-pooled to one vector per utterance."""
    tag = "mfcc40" if config.n_coeffs == 40 else f"mfcc{config.n_coeffs}"
    return mean_pool(mfcc(buffer, config), utterance_id, tag)


def ingest_feature_csv(path, expected_dim: int,
                       feature_set_id: str | None = None) -> list[FeatureVector]:
    """Read per-utterance feature vectors from a CSV.

    Layout: a header row, ``utterance_id`` first, then exactly
    ``expected_dim`` numeric columns. A header-only file is a valid empty
    feature set.
    """
    if feature_set_id is None:
        by_dim = {dim: tag for tag, dim in DECLARED_DIMS.items()}
        feature_set_id = by_dim.get(expected_dim, f"csv{expected_dim}")
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"unreadable feature CSV {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: missing header row") from None
        if not header or header[0] != "utterance_id":
            raise DataError(f"{path}: first header column must be utterance_id")
        if len(header) - 1 != expected_dim:
            raise DataError(
                f"{path}: header declares {len(header) - 1} feature columns, "
                f"expected {expected_dim}"
            )
        vectors = []
        seen = set()
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            utt = row[0]
            if len(row) - 1 != expected_dim:
                raise DataError(
                    f"{path} line {line_no} ({utt!r}): {len(row) - 1} feature "
                    f"columns, expected {expected_dim}"
                )
            if utt in seen:
                raise DataError(f"{path} line {line_no}: duplicate utterance_id {utt!r}")
            seen.add(utt)
            try:
                values = np.array([float(c) for c in row[1:]], dtype=np.float64)
            except ValueError as exc:
                raise DataError(f"{path} line {line_no} ({utt!r}): {exc}") from exc
            vectors.append(FeatureVector(values, feature_set_id, utt))
    return vectors


def write_feature_csv(path, vectors: list[FeatureVector]) -> None:
    """Write feature vectors in the layout ingest_feature_csv reads."""
    if not vectors:
        raise DataError("refusing to write an empty feature CSV without a dimension")
    dim = len(vectors[0])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["utterance_id"] + [f"f{i + 1}" for i in range(dim)])
        for vec in vectors:
            if len(vec) != dim:
                raise DataError("mixed feature dimensions in one CSV")
            writer.writerow([vec.utterance_id] + [repr(float(v)) for v in vec.values])
