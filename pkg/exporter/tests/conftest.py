import csv
import math
import struct

import numpy as np
import pytest
import torch


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    """A small randomly initialized encoder saved locally (no network)."""
    from transformers import Wav2Vec2Config, Wav2Vec2Model

    torch.manual_seed(0)
    config = Wav2Vec2Config(
        hidden_size=32, num_hidden_layers=2, num_attention_heads=2,
        intermediate_size=64, conv_dim=(16, 16), conv_stride=(5, 2),
        conv_kernel=(10, 3), num_feat_extract_layers=2, vocab_size=32,
        num_conv_pos_embeddings=16, num_conv_pos_embedding_groups=4,
    )
    model = Wav2Vec2Model(config)
    path = tmp_path_factory.mktemp("checkpoint")
    model.save_pretrained(path)
    return str(path)


def write_tone_wav(path, freq_hz: float, duration_s: float, amplitude: float = 0.6):
    n = int(round(duration_s * 16000))
    k = np.arange(n)
    samples = amplitude * np.sin(2.0 * math.pi * freq_hz * k / 16000.0)
    q = np.clip(np.round(samples * 32768.0), -32768, 32767).astype("<i2")
    payload = q.tobytes()
    fmt = struct.pack("<HHIIHH", 1, 1, 16000, 32000, 2, 16)
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", 4 + 8 + len(fmt) + 8 + len(payload)) + b"WAVE")
        fh.write(b"fmt " + struct.pack("<I", len(fmt)) + fmt)
        fh.write(b"data" + struct.pack("<I", len(payload)) + payload)


@pytest.fixture()
def audio_manifest(tmp_path):
    """Two short tone recordings plus the manifest listing them."""
    rows = []
    for i, freq in enumerate((330.0, 550.0), start=1):
        name = f"tone{i}.wav"
        write_tone_wav(tmp_path / name, freq, 0.3)
        rows.append((f"U{i:03d}", name))
    manifest = tmp_path / "manifest.csv"
    with open(manifest, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["utterance_id", "wav_path"])
        writer.writerows(rows)
    return manifest
