import numpy as np
import pytest

from w2v2_export.emb1 import write_archive, write_index

# the consuming toolkit's independent reader validates our writer
from speechbias.embeddings import LayerId, load_pooled_layer, read_embedding_file


def test_written_archive_reads_back_value_exact(tmp_path):
    rng = np.random.Generator(np.random.PCG64(1))
    frames = rng.normal(size=(7, 5)).astype(np.float32)
    path = tmp_path / "a.emb1"
    write_archive(str(path), "hidden", 9, frames)
    archive = read_embedding_file(path, utterance_id="U1")
    assert archive.layer == LayerId("hidden", 9)
    assert np.array_equal(archive.frames, frames.astype(np.float64))


def test_latent_kind_round_trip(tmp_path):
    frames = np.arange(6, dtype=np.float32).reshape(2, 3)
    path = tmp_path / "l.emb1"
    write_archive(str(path), "latent", 2, frames)
    archive = read_embedding_file(path)
    assert archive.layer == LayerId("latent", 2)


def test_rejects_bad_payloads(tmp_path):
    with pytest.raises(ValueError):
        write_archive(str(tmp_path / "x.emb1"), "hidden", 1, np.zeros((0, 3), np.float32))
    with pytest.raises(ValueError):
        write_archive(str(tmp_path / "y.emb1"), "hidden", 1,
                      np.array([[np.nan]], np.float32))
    assert not (tmp_path / "x.emb1").exists()
    assert not (tmp_path / "y.emb1").exists()


def test_index_loads_through_reader(tmp_path):
    frames = np.ones((3, 4), np.float32)
    write_archive(str(tmp_path / "u1.emb1"), "hidden", 3, frames)
    write_archive(str(tmp_path / "u2.emb1"), "hidden", 3, 2 * frames)
    write_index(str(tmp_path / "index.csv"),
                [("U1", "hidden", 3, "u1.emb1"), ("U2", "hidden", 3, "u2.emb1")])
    pooled = load_pooled_layer(tmp_path / "index.csv", LayerId("hidden", 3))
    assert set(pooled) == {"U1", "U2"}
    assert np.array_equal(pooled["U2"].values, [2.0, 2.0, 2.0, 2.0])
