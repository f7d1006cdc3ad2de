"""Subject records, clinical label derivation, balancing, and split plans.

Labels follow the clinical cutoffs used throughout the toolkit: MMSE below
24 marks cognitive impairment (CI), HAM-D of 8 or more marks depression,
and age 66+ separates age group 2 from group 1. An MMSE of exactly 24 is
unassigned by those two rules; it is classified NCI and a boundary warning
is logged so audits can exclude such subjects.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError
from .features import FeatureVector

log = logging.getLogger(__name__)

GENDERS = ("F", "M")
CONDITION_TAGS = ("IMB", "CIB", "CIGB", "custom")


@dataclass(frozen=True)
class SubjectRecord:
    subject_id: str
    gender: str
    age: int
    mmse: int
    hamd: int
    utterance_id: str
    wav_path: str = ""

    def __post_init__(self):
        if self.gender not in GENDERS:
            raise DataError(f"{self.subject_id}: gender must be F or M, got {self.gender!r}")
        if self.age < 0:
            raise DataError(f"{self.subject_id}: negative age")
        if not 0 <= self.mmse <= 30:
            raise DataError(f"{self.subject_id}: MMSE {self.mmse} outside 0..30")
        if self.hamd < 0:
            raise DataError(f"{self.subject_id}: negative HAM-D")


@dataclass(frozen=True)
class LabelSet:
    ci: bool
    depressed: bool
    age_group: int


def derive_labels(record: SubjectRecord) -> LabelSet:
    """Derive binary labels from clinical scores; pure and total."""
    if record.mmse == 24:
        log.warning(
            "%s: MMSE exactly 24 sits on the CI boundary; classified NCI",
            record.subject_id,
        )
    return LabelSet(
        ci=record.mmse < 24,
        depressed=record.hamd >= 8,
        age_group=1 if record.age <= 65 else 2,
    )


@dataclass(frozen=True)
class CohortMember:
    record: SubjectRecord
    labels: LabelSet
    features: FeatureVector | None = None


@dataclass(frozen=True)
class Cohort:
    members: tuple[CohortMember, ...]
    condition_tag: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if self.condition_tag not in CONDITION_TAGS:
            raise DataError(f"unknown condition tag {self.condition_tag!r}")
        ids = [m.record.subject_id for m in self.members]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate subject_ids in cohort")
        tags = {m.features.feature_set_id for m in self.members if m.features is not None}
        if len(tags) > 1:
            raise DataError(f"cohort mixes feature sets {sorted(tags)}")

    def __len__(self) -> int:
        return len(self.members)

    def subject_ids(self) -> set[str]:
        return {m.record.subject_id for m in self.members}

    def subset(self, subject_ids, condition_tag: str | None = None) -> "Cohort":
        """Members whose subject_id is in the given set, input order kept."""
        wanted = set(subject_ids)
        kept = tuple(m for m in self.members if m.record.subject_id in wanted)
        return Cohort(kept, condition_tag or self.condition_tag)

    def restrict_ci(self) -> "Cohort":
        """Only CI members (the depression task operates within CI)."""
        return Cohort(
            tuple(m for m in self.members if m.labels.ci), self.condition_tag
        )

    def with_features(self, by_utterance: dict[str, FeatureVector]) -> "Cohort":
        members = []
        for m in self.members:
            utt = m.record.utterance_id
            if utt not in by_utterance:
                raise DataError(f"no features for utterance {utt!r}")
            members.append(replace(m, features=by_utterance[utt]))
        return Cohort(tuple(members), self.condition_tag)

    def feature_matrix(self) -> np.ndarray:
        rows = []
        for m in self.members:
            if m.features is None:
                raise DataError(f"{m.record.subject_id}: member has no features")
            rows.append(m.features.values)
        return np.stack(rows)

    def label_array(self, label: str) -> np.ndarray:
        if label == "ci":
            return np.array([m.labels.ci for m in self.members], dtype=int)
        if label == "depressed":
            return np.array([m.labels.depressed for m in self.members], dtype=int)
        raise DataError(f"unknown label {label!r}")


def build_cohort(records, condition_tag: str = "IMB") -> Cohort:
    members = tuple(CohortMember(r, derive_labels(r)) for r in records)
    return Cohort(members, condition_tag)


@dataclass(frozen=True)
class SplitPlan:
    train_ids: frozenset[str]
    test_ids: frozenset[str]
    seed: int
    stratify_on: str


def _sorted_ids(cohort: Cohort, predicate) -> list[str]:
    return sorted(m.record.subject_id for m in cohort.members if predicate(m))


def balance_ci(cohort: Cohort, seed: int) -> Cohort:
    """Subsample the majority CI class down to the minority count.

    The minority class is untouched; the majority class is sampled
    uniformly without replacement by a dedicated seeded generator, so
    balancing reproduces independently of any split seed.
    """
    ci_ids = _sorted_ids(cohort, lambda m: m.labels.ci)
    nci_ids = _sorted_ids(cohort, lambda m: not m.labels.ci)
    if not ci_ids or not nci_ids:
        raise DataError("balance_ci needs both CI and NCI members")
    rng = np.random.Generator(np.random.PCG64(seed))
    if len(ci_ids) > len(nci_ids):
        keep = set(rng.choice(ci_ids, size=len(nci_ids), replace=False)) | set(nci_ids)
    else:
        keep = set(ci_ids) | set(rng.choice(nci_ids, size=len(ci_ids), replace=False))
    return cohort.subset(keep, condition_tag="CIB")


def balance_ci_gender(cohort: Cohort, seed: int) -> Cohort:
    """Subsample every (CI status x gender) cell to the smallest cell count."""
    cells = {}
    for ci in (True, False):
        for gender in GENDERS:
            ids = _sorted_ids(
                cohort, lambda m, c=ci, g=gender: m.labels.ci == c and m.record.gender == g
            )
            if not ids:
                raise DataError(f"empty cell CI={ci} gender={gender}; cannot balance")
            cells[(ci, gender)] = ids
    m_count = min(len(ids) for ids in cells.values())
    rng = np.random.Generator(np.random.PCG64(seed))
    keep = set()
    for key in sorted(cells, key=lambda k: (k[0], k[1])):
        ids = cells[key]
        if len(ids) == m_count:
            keep.update(ids)
        else:
            keep.update(rng.choice(ids, size=m_count, replace=False))
    return cohort.subset(keep, condition_tag="CIGB")


def remaining_after_balance(full: Cohort, balanced: Cohort) -> Cohort:
    """Set difference by subject_id; the balanced cohort must be a subset."""
    extra = balanced.subject_ids() - full.subject_ids()
    if extra:
        raise DataError(f"balanced cohort has members not in the full cohort: {sorted(extra)[:5]}")
    return full.subset(full.subject_ids() - balanced.subject_ids(), condition_tag="custom")


def stratified_split(cohort: Cohort, stratify_on: str, seed: int) -> SplitPlan:
    """70/30 split per stratum: floor(0.7 n) to train, remainder to test."""
    labels = cohort.label_array(stratify_on)
    rng = np.random.Generator(np.random.PCG64(seed))
    train: set[str] = set()
    test: set[str] = set()
    for value in sorted(set(labels.tolist())):
        ids = sorted(
            m.record.subject_id
            for m, lab in zip(cohort.members, labels)
            if lab == value
        )
        if len(ids) < 2:
            raise DataError(
                f"stratum {stratify_on}={value} has {len(ids)} member(s); need >= 2"
            )
        order = rng.permutation(len(ids))
        n_train = (7 * len(ids)) // 10  # floor(0.7 n) in exact integer math
        train.update(ids[i] for i in order[:n_train])
        test.update(ids[i] for i in order[n_train:])
    return SplitPlan(frozenset(train), frozenset(test), seed, stratify_on)


MANIFEST_COLUMNS = ["subject_id", "utterance_id", "gender", "age", "mmse", "hamd", "wav_path"]


def read_manifest(path) -> list[SubjectRecord]:
    """Read a subject manifest CSV (one utterance per subject)."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"unreadable manifest {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(MANIFEST_COLUMNS).issubset(reader.fieldnames):
            raise DataError(f"{path}: manifest header must contain {MANIFEST_COLUMNS}")
        records = []
        for line_no, row in enumerate(reader, start=2):
            try:
                records.append(
                    SubjectRecord(
                        subject_id=row["subject_id"],
                        gender=row["gender"],
                        age=int(row["age"]),
                        mmse=int(row["mmse"]),
                        hamd=int(row["hamd"]),
                        utterance_id=row["utterance_id"],
                        wav_path=row["wav_path"],
                    )
                )
            except ValueError as exc:
                raise DataError(f"{path} line {line_no}: {exc}") from exc
    return records


def write_manifest(path, records) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for r in records:
            writer.writerow(
                [r.subject_id, r.utterance_id, r.gender, r.age, r.mmse, r.hamd, r.wav_path]
            )
