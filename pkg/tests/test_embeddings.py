import struct

import numpy as np
import pytest

from speechbias.embeddings import (
    EmbeddingArchive,
    IndexEntry,
    LayerId,
    indexed_layers,
    load_pooled_layer,
    pool_embedding,
    read_embedding_file,
    read_embedding_index,
    write_embedding_file,
    write_embedding_index,
)
from speechbias.errors import DataError


def test_round_trip_value_exact(tmp_path):
    rng = np.random.Generator(np.random.PCG64(11))
    for trial in range(10):
        frames = rng.normal(size=(int(rng.integers(1, 20)), int(rng.integers(1, 32))))
        frames32 = frames.astype(np.float32)
        path = tmp_path / f"a{trial}.emb1"
        layer = LayerId("hidden", int(rng.integers(1, 13)))
        write_embedding_file(path, layer, frames32)
        archive = read_embedding_file(path, utterance_id=f"U{trial}")
        assert archive.layer == layer
        assert np.array_equal(archive.frames, frames32.astype(np.float64))


def test_reference_shape_round_trip(tmp_path):
    frames = np.arange(12, dtype=np.float32).reshape(3, 4)
    path = tmp_path / "ref.emb1"
    write_embedding_file(path, LayerId("latent", 2), frames)
    archive = read_embedding_file(path)
    assert archive.frames.shape == (3, 4)
    assert np.array_equal(archive.frames, frames)
    assert archive.utterance_id == "ref"


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.emb1"
    path.write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(DataError, match="bad magic"):
        read_embedding_file(path)


def test_truncated_payload(tmp_path):
    header = b"EMB1" + struct.pack("<BIII", 1, 3, 10, 4)
    payload = np.zeros(9 * 4, dtype="<f4").tobytes()  # 9 frames, header says 10
    path = tmp_path / "trunc.emb1"
    path.write_bytes(header + payload)
    with pytest.raises(DataError, match="truncated payload"):
        read_embedding_file(path)


def test_zero_frames_rejected(tmp_path):
    header = b"EMB1" + struct.pack("<BIII", 1, 3, 0, 4)
    path = tmp_path / "zero.emb1"
    path.write_bytes(header)
    with pytest.raises(DataError, match="empty archive"):
        read_embedding_file(path)


def test_nan_payload_rejected(tmp_path):
    frames = np.array([[1.0, np.nan]], dtype="<f4")
    header = b"EMB1" + struct.pack("<BIII", 0, 1, 1, 2)
    path = tmp_path / "nan.emb1"
    path.write_bytes(header + frames.tobytes())
    with pytest.raises(DataError, match="NaN"):
        read_embedding_file(path)


class TestPooling:
    def test_single_frame_identity(self):
        frame = np.array([[1.5, -2.0, 3.0]])
        archive = EmbeddingArchive("u", LayerId("hidden", 9), frame)
        vec = pool_embedding(archive)
        assert np.array_equal(vec.values, frame[0])
        assert vec.feature_set_id == "w2v2-layer-9"

    def test_arithmetic_mean(self):
        archive = EmbeddingArchive("u", LayerId("hidden", 1), [[0.0, 0.0], [2.0, 4.0]])
        assert np.array_equal(pool_embedding(archive).values, [1.0, 2.0])

    def test_frame_permutation_invariance(self):
        rng = np.random.Generator(np.random.PCG64(12))
        for _ in range(20):
            frames = rng.normal(size=(int(rng.integers(2, 40)), 8))
            a = EmbeddingArchive("u", LayerId("latent", 1), frames)
            b = EmbeddingArchive("u", LayerId("latent", 1), frames[rng.permutation(frames.shape[0])])
            assert np.allclose(pool_embedding(a).values, pool_embedding(b).values, atol=1e-12)


class TestLayerId:
    def test_hidden_range(self):
        with pytest.raises(DataError):
            LayerId("hidden", 13)
        with pytest.raises(DataError):
            LayerId("hidden", 0)
        assert LayerId("latent", 3).feature_set_id == "w2v2-latent-3"

    def test_unknown_kind(self):
        with pytest.raises(DataError):
            LayerId("secret", 1)


class TestIndex:
    def _write_archives(self, tmp_path, n=4):
        layer = LayerId("hidden", 5)
        entries = []
        for i in range(n):
            rel = f"u{i}.emb1"
            write_embedding_file(tmp_path / rel, layer, np.full((2, 3), float(i), dtype=np.float32))
            entries.append(IndexEntry(f"U{i}", layer, rel))
        index = tmp_path / "index.csv"
        write_embedding_index(index, entries)
        return index, layer

    def test_loads_exactly_n(self, tmp_path):
        index, layer = self._write_archives(tmp_path, n=4)
        pooled = load_pooled_layer(index, layer)
        assert set(pooled) == {f"U{i}" for i in range(4)}
        assert np.array_equal(pooled["U2"].values, [2.0, 2.0, 2.0])

    def test_fails_atomically_on_one_bad_archive(self, tmp_path):
        index, layer = self._write_archives(tmp_path, n=4)
        (tmp_path / "u2.emb1").write_bytes(b"EMB1 garbage")
        with pytest.raises(DataError):
            load_pooled_layer(index, layer)

    def test_round_trip_and_layer_listing(self, tmp_path):
        index, layer = self._write_archives(tmp_path)
        entries = read_embedding_index(index)
        assert len(entries) == 4
        assert indexed_layers(index) == [layer]

    def test_missing_layer_is_error(self, tmp_path):
        index, _ = self._write_archives(tmp_path)
        with pytest.raises(DataError, match="no archives"):
            load_pooled_layer(index, LayerId("hidden", 9))
