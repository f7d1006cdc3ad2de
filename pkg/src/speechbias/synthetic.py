"""Synthetic cohorts and audio with analytically known properties.

Feature vectors are isotropic Gaussians whose class means sit at
+/- separation/2 along one shared unit direction, so the within-cell AUC is
exactly Phi(separation / (sigma * sqrt(2))). Clinical scores are drawn
inside label-consistent ranges, so intended CI/depression flags round-trip
through label derivation. Everything is a pure function of the spec and its
seed: same spec, same bytes.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.special

from .cohort import Cohort, CohortMember, SubjectRecord, derive_labels, write_manifest
from .embeddings import IndexEntry, LayerId, write_embedding_file, write_embedding_index
from .errors import DataError
from .features import FeatureVector
from .wavio import write_wav

# Demographic cell: (gender, age_group, depressed). With the CI flag this
# spans the 16 generation cells.
DEMOGRAPHIC_CELLS = tuple(
    (gender, age_group, depressed)
    for gender in ("F", "M")
    for age_group in (1, 2)
    for depressed in (False, True)
)


def analytic_auc(separation: float, sigma: float) -> float:
    """AUC of two isotropic Gaussians whose means are ``separation`` apart."""
    return float(scipy.special.ndtr(separation / (sigma * math.sqrt(2.0))))


def separation_for_auc(target_auc: float, sigma: float) -> float:
    """Mean separation that yields a target AUC (inverse of analytic_auc)."""
    if not 0.0 < target_auc < 1.0:
        raise DataError(f"target AUC {target_auc} must lie strictly inside (0, 1)")
    return float(math.sqrt(2.0) * sigma * scipy.special.ndtri(target_auc))


@dataclass(frozen=True)
class SyntheticSpec:
    """Generation recipe for one cohort.

    ``n_per_cell`` is either one count for all 16 (class x demographic)
    cells or a mapping keyed by (ci, gender, age_group, depressed).
    ``separation`` is the class-mean distance, optionally overridden per
    demographic cell to inject subgroup disparities.
    """

    n_per_cell: int | Mapping = 25
    dim: int = 8
    sigma: float = 1.0
    seed: int = 0
    separation: float = 2.0
    separation_overrides: Mapping = field(default_factory=dict)

    def __post_init__(self):
        if self.sigma <= 0:
            raise DataError("sigma must be positive")
        if self.dim < 1:
            raise DataError("dim must be >= 1")

    def cell_count(self, ci: bool, cell) -> int:
        if isinstance(self.n_per_cell, Mapping):
            n = int(self.n_per_cell.get((ci, *cell), 0))
        else:
            n = int(self.n_per_cell)
        if n < 0:
            raise DataError("cell counts must be >= 0")
        return n

    def cell_separation(self, cell) -> float:
        return float(self.separation_overrides.get(cell, self.separation))


def gender_gap_spec(auc_male: float, auc_female: float, n_per_cell: int,
                    dim: int = 8, sigma: float = 1.0, seed: int = 0) -> SyntheticSpec:
    """Spec with gender-dependent separations hitting the two target AUCs."""
    overrides = {}
    for cell in DEMOGRAPHIC_CELLS:
        target = auc_male if cell[0] == "M" else auc_female
        overrides[cell] = separation_for_auc(target, sigma)
    return SyntheticSpec(
        n_per_cell=n_per_cell, dim=dim, sigma=sigma, seed=seed,
        separation=separation_for_auc(auc_male, sigma),
        separation_overrides=overrides,
    )


def _unit_direction(dim: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 0xD12))))
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _cell_rng(seed: int, cell_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, cell_index))))


def make_cohort(spec: SyntheticSpec, feature_layer: LayerId = LayerId("hidden", 1)) -> Cohort:
    """Build the cohort in memory with features already attached."""
    u = _unit_direction(spec.dim, spec.seed)
    members = []
    subject_no = 0
    cell_index = 0
    for ci in (True, False):
        for cell in DEMOGRAPHIC_CELLS:
            gender, age_group, depressed = cell
            n = spec.cell_count(ci, cell)
            cell_index += 1
            if n == 0:
                continue
            rng = _cell_rng(spec.seed, cell_index)
            sep = spec.cell_separation(cell)
            mean = (0.5 if ci else -0.5) * sep * u
            feats = rng.normal(size=(n, spec.dim)) * spec.sigma + mean
            mmse = rng.integers(10, 24, size=n) if ci else rng.integers(25, 31, size=n)
            hamd = rng.integers(8, 21, size=n) if depressed else rng.integers(0, 8, size=n)
            age = rng.integers(40, 66, size=n) if age_group == 1 else rng.integers(66, 91, size=n)
            for k in range(n):
                subject_no += 1
                record = SubjectRecord(
                    subject_id=f"S{subject_no:05d}",
                    gender=gender,
                    age=int(age[k]),
                    mmse=int(mmse[k]),
                    hamd=int(hamd[k]),
                    utterance_id=f"U{subject_no:05d}",
                )
                labels = derive_labels(record)
                assert labels.ci == ci and labels.depressed == depressed
                assert labels.age_group == age_group
                vec = FeatureVector(feats[k], feature_layer.feature_set_id,
                                    record.utterance_id)
                members.append(CohortMember(record, labels, vec))
    if not members:
        raise DataError("spec generated an empty cohort")
    return Cohort(tuple(members), "custom")


def gen_cohort(spec: SyntheticSpec, out_dir,
               feature_layer: LayerId = LayerId("hidden", 1)) -> dict[str, str]:
    """Write manifest + single-frame EMB1 archives + index under out_dir.

    Returns the paths of the emitted manifest and index.
    """
    cohort = make_cohort(spec, feature_layer)
    os.makedirs(os.path.join(out_dir, "archives"), exist_ok=True)
    manifest_path = os.path.join(out_dir, "manifest.csv")
    index_path = os.path.join(out_dir, "index.csv")
    write_manifest(manifest_path, [m.record for m in cohort.members])
    entries = []
    for m in cohort.members:
        rel = os.path.join("archives", f"{m.record.utterance_id}.emb1")
        write_embedding_file(
            os.path.join(out_dir, rel), feature_layer, m.features.values[None, :]
        )
        entries.append(IndexEntry(m.record.utterance_id, feature_layer, rel))
    write_embedding_index(index_path, entries)
    return {"manifest": manifest_path, "index": index_path}


def gen_layer_archives(spec: SyntheticSpec, out_dir,
                       layer_separations: Mapping[LayerId, float]) -> dict[str, str]:
    """One cohort, one archive per (utterance, layer) with per-layer separation.

    Layer-specific features are drawn independently per layer with the
    layer's separation, so a layer with a larger separation is strictly
    more discriminative by construction.
    """
    os.makedirs(os.path.join(out_dir, "archives"), exist_ok=True)
    manifest_path = os.path.join(out_dir, "manifest.csv")
    index_path = os.path.join(out_dir, "index.csv")
    entries = []
    records_written = False
    for layer_no, (layer, separation) in enumerate(sorted(
        layer_separations.items(), key=lambda kv: (kv[0].kind, kv[0].index)
    )):
        layer_spec = SyntheticSpec(
            n_per_cell=spec.n_per_cell, dim=spec.dim, sigma=spec.sigma,
            seed=spec.seed + 7919 * (layer_no + 1), separation=separation,
        )
        cohort = make_cohort(layer_spec, layer)
        if not records_written:
            write_manifest(manifest_path, [m.record for m in cohort.members])
            records_written = True
        for m in cohort.members:
            rel = os.path.join("archives", f"{m.record.utterance_id}_{layer.kind}{layer.index}.emb1")
            write_embedding_file(
                os.path.join(out_dir, rel), layer, m.features.values[None, :]
            )
            entries.append(IndexEntry(m.record.utterance_id, layer, rel))
    write_embedding_index(index_path, entries)
    return {"manifest": manifest_path, "index": index_path}


def gen_tone_wav(path, freq_hz: float, duration_s: float, amplitude: float = 0.8,
                 sample_rate: int = 16000, encoding: str = "pcm16") -> None:
    """Write a pure sine tone; frequencies at or above Nyquist are rejected."""
    if freq_hz >= sample_rate / 2:
        raise DataError(
            f"tone frequency {freq_hz} Hz is at or above Nyquist ({sample_rate / 2} Hz)"
        )
    n = int(round(duration_s * sample_rate))
    k = np.arange(n)
    samples = amplitude * np.sin(2.0 * np.pi * freq_hz * k / sample_rate)
    write_wav(path, samples, sample_rate, encoding=encoding)
