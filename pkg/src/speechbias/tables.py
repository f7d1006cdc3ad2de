"""Bundled reference result tables and their internal consistency checks.

The toolkit ships transcriptions of the published benchmark tables it is
designed to audit against (values in percent, as printed). Two identities
must hold on any faithfully transcribed table:

* result rows: UAR = (sensitivity + specificity) / 2 up to the rounding of
  the printed values;
* bias rows: delta = Sp - Se and each inter-group Delta equals the
  difference of the printed group values, exactly (integer percents).

``uar_identity_violations`` reports rows whose printed UAR deviates beyond
a tolerance expressed on the [0, 1] metric scale (0.005 = half a percentage
point). One shipped row is known to violate the identity in its published
source by 0.995 points; it is flagged in the fixture's ``note`` column.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

from .errors import DataError

RESULT_TABLES = ("ci_nci", "dci_ndci", "cross_task")
BIAS_TABLES = ("svm_hl9", "mlp_hl10")


@dataclass(frozen=True)
class ReferenceResultRow:
    table: str
    dataset: str
    feature: str
    classifier: str
    split: str
    accuracy: float
    uar: float
    sensitivity: float
    specificity: float
    note: str = ""

    def uar_deviation(self) -> float:
        """|uar - (se + sp) / 2| in percentage points."""
        return abs(self.uar - (self.sensitivity + self.specificity) / 2.0)

    def key(self) -> str:
        return f"{self.table}/{self.dataset}/{self.feature}/{self.classifier}/{self.split}"


@dataclass(frozen=True)
class ReferenceBiasGroup:
    table: str
    dataset: str
    dimension: str
    group: str
    specificity: int
    sensitivity: int
    delta: int
    significant: bool


@dataclass(frozen=True)
class ReferenceBiasDisparity:
    table: str
    dataset: str
    dimension: str
    group_a: str
    group_b: str
    delta_spec: int
    delta_sens: int
    significant_spec: bool
    significant_sens: bool


def _read_fixture(name: str) -> list[dict]:
    ref = resources.files("speechbias.fixtures").joinpath(name)
    with ref.open("r", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def load_result_table(table: str) -> list[ReferenceResultRow]:
    if table not in RESULT_TABLES:
        raise DataError(f"unknown result table {table!r}; have {RESULT_TABLES}")
    rows = []
    for raw in _read_fixture(f"reference_{table}.csv"):
        rows.append(
            ReferenceResultRow(
                table=table,
                dataset=raw.get("dataset", raw.get("task", "")),
                feature=raw["feature"],
                classifier=raw["classifier"],
                split=raw.get("split", "main"),
                accuracy=float(raw["accuracy"]),
                uar=float(raw["uar"]),
                sensitivity=float(raw["sensitivity"]),
                specificity=float(raw["specificity"]),
                note=raw.get("note", "") or "",
            )
        )
    return rows


def load_bias_table(table: str) -> tuple[list[ReferenceBiasGroup], list[ReferenceBiasDisparity]]:
    if table not in BIAS_TABLES:
        raise DataError(f"unknown bias table {table!r}; have {BIAS_TABLES}")
    groups = [
        ReferenceBiasGroup(
            table=table,
            dataset=raw["dataset"],
            dimension=raw["dimension"],
            group=raw["group"],
            specificity=int(raw["specificity"]),
            sensitivity=int(raw["sensitivity"]),
            delta=int(raw["delta"]),
            significant=raw["significant"] == "yes",
        )
        for raw in _read_fixture(f"reference_bias_{table}_groups.csv")
    ]
    disparities = [
        ReferenceBiasDisparity(
            table=table,
            dataset=raw["dataset"],
            dimension=raw["dimension"],
            group_a=raw["group_a"],
            group_b=raw["group_b"],
            delta_spec=int(raw["delta_spec"]),
            delta_sens=int(raw["delta_sens"]),
            significant_spec=raw["significant_spec"] == "yes",
            significant_sens=raw["significant_sens"] == "yes",
        )
        for raw in _read_fixture(f"reference_bias_{table}_disparity.csv")
    ]
    return groups, disparities


def uar_identity_violations(rows, tol: float = 0.005) -> list[tuple[ReferenceResultRow, float]]:
    """Rows whose UAR identity deviates beyond tol on the [0, 1] scale."""
    out = []
    for row in rows:
        deviation = row.uar_deviation() / 100.0
        if deviation > tol + 1e-12:
            out.append((row, deviation))
    return out


def bias_identity_violations(table: str) -> list[str]:
    """delta and Delta identities over one bias table; exact integer math."""
    groups, disparities = load_bias_table(table)
    by_key = {(g.dataset, g.dimension, g.group): g for g in groups}
    problems = []
    for g in groups:
        if g.delta != g.specificity - g.sensitivity:
            problems.append(
                f"{table}/{g.dataset}/{g.dimension}/{g.group}: delta {g.delta} "
                f"!= Sp - Se = {g.specificity - g.sensitivity}"
            )
    for d in disparities:
        a = by_key.get((d.dataset, d.dimension, d.group_a))
        b = by_key.get((d.dataset, d.dimension, d.group_b))
        if a is None or b is None:
            problems.append(f"{table}/{d.dataset}/{d.dimension}: missing group rows")
            continue
        if d.delta_spec != a.specificity - b.specificity:
            problems.append(
                f"{table}/{d.dataset}/{d.dimension}: delta_spec {d.delta_spec} "
                f"!= {a.specificity} - {b.specificity}"
            )
        if d.delta_sens != a.sensitivity - b.sensitivity:
            problems.append(
                f"{table}/{d.dataset}/{d.dimension}: delta_sens {d.delta_sens} "
                f"!= {a.sensitivity} - {b.sensitivity}"
            )
    return problems


def check_all_tables(tol: float = 0.005) -> dict[str, list]:
    """Run every bundled consistency check; maps table name to violations."""
    report: dict[str, list] = {}
    for table in RESULT_TABLES:
        report[table] = [
            (row.key(), dev) for row, dev in uar_identity_violations(load_result_table(table), tol)
        ]
    for table in BIAS_TABLES:
        report[f"bias_{table}"] = bias_identity_violations(table)
    return report
