"""Experiment orchestration: conditions, seeds, aggregation, bias analysis.

A run is fully determined by (config, cohort, features): balancing uses one
dedicated balance seed per condition, the five split seeds partition that
fixed cohort, and every classifier is seeded, so two executions of the same
config emit byte-identical artifacts. Per-sample test scores are retained
for every seed so subgroup bias can be analyzed afterwards without
retraining.

Task semantics:

* ``ci_vs_nci``         train and evaluate on the CI label;
* ``dci_vs_ndci``       restrict to CI subjects, label = depression;
* ``cross_train_ci_test_d`` / ``cross_train_d_test_ci``
                        train on one label, score the same test samples
                        against the other; both require the CIGB condition.

The ``train_bal_test_rem`` condition retrains per seed on a freshly drawn
CIGB-balanced cohort (derived balance seed) and tests on the remaining
census instead of splitting.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .cohort import (
    Cohort,
    balance_ci,
    balance_ci_gender,
    remaining_after_balance,
    stratified_split,
)
from .errors import ConfigError, DataError
from .estimators import (
    MlpClassifier,
    RandomForestClassifier,
    StandardNormalizer,
    fit_svm_with_grid,
    matrix_hash,
)
from .fairness import (
    DisparityReport,
    MetricReport,
    ScoreDistribution,
    SubgroupReport,
    auc,
    confusion_from,
    core_metrics,
    paired_ttest,
    score_distribution,
    subgroup_metrics,
)

TASKS = ("ci_vs_nci", "dci_vs_ndci", "cross_train_ci_test_d", "cross_train_d_test_ci")
CONDITIONS = ("IMB", "CIB", "CIGB", "train_bal_test_rem")
CLASSIFIERS = ("svm", "rf", "mlp")
DEFAULT_SEEDS = (0, 50, 100, 150, 200)
BIAS_DIMENSIONS = ("gender", "age_group", "depression")

# Ordered group pairs (A, B) for inter-group disparities.
DIMENSION_GROUPS = {
    "gender": ("M", "F"),
    "age_group": ("1", "2"),
    "depression": ("non_depressed", "depressed"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    task: str
    condition: str
    feature: str
    classifier: str
    seeds: tuple = DEFAULT_SEEDS
    balance_seed: int = 7

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"unknown task {self.task!r}; have {TASKS}")
        if self.condition not in CONDITIONS:
            raise ConfigError(f"unknown condition {self.condition!r}; have {CONDITIONS}")
        if self.classifier not in CLASSIFIERS:
            raise ConfigError(f"unknown classifier {self.classifier!r}; have {CLASSIFIERS}")
        if self.task.startswith("cross_") and self.condition not in ("CIGB", "train_bal_test_rem"):
            raise ConfigError("cross-task evaluations require the CIGB condition")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ConfigError("at least one seed is required")

    @property
    def train_label(self) -> str:
        return "depressed" if self.task in ("dci_vs_ndci", "cross_train_d_test_ci") else "ci"

    @property
    def eval_label(self) -> str:
        return "depressed" if self.task in ("dci_vs_ndci", "cross_train_ci_test_d") else "ci"

    @property
    def threshold(self) -> float:
        return 0.0 if self.classifier == "svm" else 0.5


@dataclass(frozen=True)
class ScoreRow:
    utterance_id: str
    label: int
    score: float
    prediction: int
    seed: int


@dataclass(frozen=True)
class SeedRun:
    seed: int
    metrics: MetricReport
    scores: tuple
    n_train: int
    n_test: int
    train_hash: str
    normalizer_hash: str
    svm_grid: dict | None


@dataclass(frozen=True)
class AggregateResult:
    config: ExperimentConfig
    per_seed: tuple
    mean: MetricReport
    std: MetricReport


def _derive_seed(balance_seed: int, split_seed: int) -> int:
    return int(np.random.SeedSequence((balance_seed, split_seed)).generate_state(1)[0])


def _apply_condition(cohort: Cohort, config: ExperimentConfig) -> Cohort:
    if config.condition == "IMB":
        return cohort
    if config.condition == "CIB":
        return balance_ci(cohort, config.balance_seed)
    if config.condition == "CIGB":
        return balance_ci_gender(cohort, config.balance_seed)
    raise ConfigError(f"condition {config.condition} is resolved per seed")


def _restrict_for_task(cohort: Cohort, config: ExperimentConfig) -> Cohort:
    if config.task == "dci_vs_ndci":
        return cohort.restrict_ci()
    return cohort


def _train_test_cohorts(cohort: Cohort, config: ExperimentConfig, seed: int):
    if config.condition == "train_bal_test_rem":
        balanced = balance_ci_gender(cohort, _derive_seed(config.balance_seed, seed))
        remaining = remaining_after_balance(cohort, balanced)
        return _restrict_for_task(balanced, config), _restrict_for_task(remaining, config)
    conditioned = _restrict_for_task(_apply_condition(cohort, config), config)
    plan = stratified_split(conditioned, config.train_label, seed)
    return conditioned.subset(plan.train_ids), conditioned.subset(plan.test_ids)


def _fit_and_score(config: ExperimentConfig, X_train, y_train, X_test, seed: int):
    """Returns (scores, svm grid summary or None)."""
    if len(set(y_train.tolist())) < 2:
        raise DataError("training set contains a single class")
    if config.classifier == "svm":
        model, grid = fit_svm_with_grid(X_train, y_train, seed=seed)
        summary = {
            "C": grid.best_c,
            "gamma": grid.best_gamma,
            "cv_accuracy": grid.cv_accuracy,
            "n_support": int(model.support_vectors_.shape[0]),
            "cv_table": [list(cell) for cell in grid.table],
        }
        return model.decision_function(X_test), summary
    if config.classifier == "rf":
        model = RandomForestClassifier(seed=42).fit(X_train, y_train)
        return model.predict_score(X_test), None
    model = MlpClassifier(seed=42).fit(X_train, y_train)
    return model.predict_score(X_test), None


def _run_seed(cohort: Cohort, config: ExperimentConfig, seed: int) -> SeedRun:
    train, test = _train_test_cohorts(cohort, config, seed)
    X_train = train.feature_matrix()
    y_train = train.label_array(config.train_label)
    X_test = test.feature_matrix()
    y_eval = test.label_array(config.eval_label)

    normalizer = StandardNormalizer().fit(X_train)
    train_hash = matrix_hash(X_train)
    if normalizer.fit_hash_ != train_hash:
        raise DataError("leakage guard tripped: normalizer fitted on different data")
    scores, svm_grid = _fit_and_score(
        config, normalizer.transform(X_train), y_train,
        normalizer.transform(X_test), seed,
    )
    predictions = (scores >= config.threshold).astype(int)
    metrics = core_metrics(confusion_from(y_eval.astype(bool), predictions.astype(bool)))
    rows = tuple(
        ScoreRow(m.record.utterance_id, int(y_eval[i]), float(scores[i]),
                 int(predictions[i]), seed)
        for i, m in enumerate(test.members)
    )
    return SeedRun(
        seed=seed, metrics=metrics, scores=rows,
        n_train=len(train), n_test=len(test),
        train_hash=train_hash, normalizer_hash=normalizer.fit_hash_,
        svm_grid=svm_grid,
    )


def _seed_worker(args):
    cohort, config, seed = args
    return _run_seed(cohort, config, seed)


def run_experiment(cohort: Cohort, config: ExperimentConfig, jobs: int = 1) -> AggregateResult:
    """Run every seed, aggregate mean and (population) std per metric."""
    if any(m.features is None for m in cohort.members):
        raise DataError("cohort members are missing features; attach them first")
    if jobs > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = list(pool.map(_seed_worker, [(cohort, config, s) for s in config.seeds]))
    else:
        runs = [_run_seed(cohort, config, s) for s in config.seeds]

    def agg(fn) -> MetricReport:
        fields = ("accuracy", "uar", "sensitivity", "specificity")
        vals = {f: fn(np.array([getattr(r.metrics, f) for r in runs])) for f in fields}
        return MetricReport(**vals)

    return AggregateResult(
        config=config,
        per_seed=tuple(runs),
        mean=agg(lambda v: float(np.mean(v))),
        std=agg(lambda v: float(np.std(v))),
    )


def layer_sweep(records_cohort: Cohort, pooled_by_layer, template: ExperimentConfig,
                jobs: int = 1) -> list[tuple[str, AggregateResult]]:
    """One experiment per layer; pooled_by_layer maps feature tag -> vectors."""
    results = []
    for tag in sorted(pooled_by_layer):
        cohort = records_cohort.with_features(pooled_by_layer[tag])
        config = ExperimentConfig(
            task=template.task, condition=template.condition, feature=tag,
            classifier=template.classifier, seeds=template.seeds,
            balance_seed=template.balance_seed,
        )
        results.append((tag, run_experiment(cohort, config, jobs=jobs)))
    return results


# ---------------------------------------------------------------------------
# Bias analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupBiasRow:
    dimension: str
    group: str
    n_positive: int
    n_negative: int
    sensitivity: float | None
    specificity: float | None
    delta: float | None
    auc: float | None
    overlap: float | None
    distribution: ScoreDistribution | None


@dataclass(frozen=True)
class BiasReport:
    config: ExperimentConfig
    groups: tuple
    disparities: tuple


def _group_membership(cohort: Cohort, dimension: str) -> dict[str, str]:
    """utterance_id -> group name for one demographic dimension."""
    out = {}
    for m in cohort.members:
        if dimension == "gender":
            group = m.record.gender
        elif dimension == "age_group":
            group = str(m.labels.age_group)
        elif dimension == "depression":
            group = "depressed" if m.labels.depressed else "non_depressed"
        else:
            raise ConfigError(f"unknown bias dimension {dimension!r}")
        out[m.record.utterance_id] = group
    return out


def bias_analysis(result: AggregateResult, cohort: Cohort,
                  dimensions=BIAS_DIMENSIONS) -> BiasReport:
    """Subgroup metrics, disparities with fold-wise t-tests, AUC, overlap.

    Reported group metrics pool the retained test scores across all seeds
    (so tiny cells that are empty in some splits still report), while the
    significance tests pair per-seed metrics across the fixed splits.
    Undefined cells surface as None and exclude their seed from the t-test.
    """
    all_rows = [row for run in result.per_seed for row in run.scores]
    if not all_rows:
        raise DataError("run retained no scores; bias analysis needs them")
    labels = np.array([r.label for r in all_rows], dtype=bool)
    predictions = np.array([r.prediction for r in all_rows], dtype=bool)
    scores = np.array([r.score for r in all_rows])

    group_rows = []
    disparity_rows = []
    for dimension in dimensions:
        membership = _group_membership(cohort, dimension)
        row_groups = np.array([membership[r.utterance_id] for r in all_rows])
        pooled: dict[str, SubgroupReport] = {}
        for group in DIMENSION_GROUPS[dimension]:
            mask = row_groups == group
            if not mask.any():
                group_rows.append(GroupBiasRow(dimension, group, 0, 0, None, None,
                                               None, None, None, None))
                continue
            report = subgroup_metrics(labels, predictions, mask, dimension, group)
            pooled[group] = report
            pos_scores = scores[mask & labels]
            neg_scores = scores[mask & ~labels]
            if pos_scores.size and neg_scores.size:
                auc_g = auc(pos_scores, neg_scores)
                dist = score_distribution(pos_scores, neg_scores)
                overlap = dist.overlap
            else:
                auc_g, dist, overlap = None, None, None
            group_rows.append(GroupBiasRow(
                dimension, group, report.n_positive, report.n_negative,
                report.sensitivity, report.specificity, report.delta,
                auc_g, overlap, dist,
            ))

        group_a, group_b = DIMENSION_GROUPS[dimension]
        if group_a not in pooled or group_b not in pooled:
            continue
        a, b = pooled[group_a], pooled[group_b]
        if None in (a.sensitivity, a.specificity, b.sensitivity, b.specificity):
            continue
        p_sens = _fold_ttest_p(result, cohort, dimension, group_a, group_b, "sensitivity")
        p_spec = _fold_ttest_p(result, cohort, dimension, group_a, group_b, "specificity")
        disparity_rows.append(DisparityReport(
            dimension=dimension, group_a=group_a, group_b=group_b,
            delta_sens=a.sensitivity - b.sensitivity,
            delta_spec=a.specificity - b.specificity,
            p_sens=p_sens, p_spec=p_spec,
        ))
    return BiasReport(result.config, tuple(group_rows), tuple(disparity_rows))


def _fold_ttest_p(result: AggregateResult, cohort: Cohort, dimension: str,
                  group_a: str, group_b: str, metric: str) -> float | None:
    membership = _group_membership(cohort, dimension)
    diffs = []
    for run in result.per_seed:
        labels = np.array([r.label for r in run.scores], dtype=bool)
        predictions = np.array([r.prediction for r in run.scores], dtype=bool)
        row_groups = np.array([membership[r.utterance_id] for r in run.scores])
        pair = []
        for group in (group_a, group_b):
            mask = row_groups == group
            if not mask.any():
                pair.append(None)
                continue
            report = subgroup_metrics(labels, predictions, mask, dimension, group)
            pair.append(getattr(report, metric))
        if pair[0] is None or pair[1] is None:
            continue
        diffs.append(pair[0] - pair[1])
    if len(diffs) < 2:
        return None
    return paired_ttest(diffs).p


# ---------------------------------------------------------------------------
# Artifact serialization
# ---------------------------------------------------------------------------

def _metric_dict(m: MetricReport) -> dict:
    return {"accuracy": m.accuracy, "uar": m.uar,
            "sensitivity": m.sensitivity, "specificity": m.specificity}


def _classifier_params(config: ExperimentConfig) -> dict:
    """Fixed hyperparameters echoed into the run manifest for audit trails."""
    if config.classifier == "svm":
        from .estimators.grid import SVM_C_GRID, SVM_GAMMA_GRID

        return {"kernel": "rbf", "c_grid": list(SVM_C_GRID),
                "gamma_grid": list(SVM_GAMMA_GRID), "cv_folds": 5,
                "tol": 1e-3, "threshold": 0.0}
    if config.classifier == "rf":
        return {"n_trees": 100, "seed": 42, "max_features": "sqrt",
                "criterion": "gini", "threshold": 0.5}
    return {"hidden": [150, 100, 50], "learning_rate": 1e-3, "epochs": 1000,
            "seed": 42, "optimizer": "adam", "beta1": 0.9, "beta2": 0.999,
            "eps": 1e-8, "threshold": 0.5}


def write_run_dir(result: AggregateResult, out_dir, input_hashes: dict | None = None) -> None:
    """Emit run_manifest.json, metrics.csv, and scores.csv under out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "config": asdict(result.config),
        "classifier_params": _classifier_params(result.config),
        "input_hashes": dict(sorted((input_hashes or {}).items())),
        "aggregate": {"mean": _metric_dict(result.mean), "std": _metric_dict(result.std)},
        "per_seed": [
            {
                "seed": run.seed,
                "metrics": _metric_dict(run.metrics),
                "n_train": run.n_train,
                "n_test": run.n_test,
                "train_hash": run.train_hash,
                "normalizer_hash": run.normalizer_hash,
                "svm_grid": run.svm_grid,
            }
            for run in result.per_seed
        ],
        "scores_csv": "scores.csv",
        "metrics_csv": "metrics.csv",
    }
    with open(os.path.join(out_dir, "run_manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(out_dir, "metrics.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seed", "accuracy", "uar", "sensitivity", "specificity"])
        for run in result.per_seed:
            m = run.metrics
            writer.writerow([run.seed, repr(m.accuracy), repr(m.uar),
                             repr(m.sensitivity), repr(m.specificity)])
        for name, m in (("mean", result.mean), ("std", result.std)):
            writer.writerow([name, repr(m.accuracy), repr(m.uar),
                             repr(m.sensitivity), repr(m.specificity)])
    with open(os.path.join(out_dir, "scores.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["utterance_id", "label", "score", "prediction", "seed"])
        for run in result.per_seed:
            for r in run.scores:
                writer.writerow([r.utterance_id, r.label, repr(r.score), r.prediction, r.seed])


def write_bias_dir(report: BiasReport, out_dir) -> None:
    """Emit bias_report.csv, disparity.csv, and distributions.csv."""
    os.makedirs(out_dir, exist_ok=True)

    def fmt(value):
        return "undefined" if value is None else repr(value)

    with open(os.path.join(out_dir, "bias_report.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dimension", "group", "n_ci", "n_nci", "Se", "Sp",
                         "delta", "auc", "overlap"])
        for g in report.groups:
            writer.writerow([g.dimension, g.group, g.n_positive, g.n_negative,
                             fmt(g.sensitivity), fmt(g.specificity), fmt(g.delta),
                             fmt(g.auc), fmt(g.overlap)])
    with open(os.path.join(out_dir, "disparity.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dimension", "groupA", "groupB", "delta_sens", "delta_spec",
                         "p_sens", "p_spec", "significant"])
        for d in report.disparities:
            significant = "yes" if (d.significant_sens or d.significant_spec) else "no"
            writer.writerow([d.dimension, d.group_a, d.group_b, repr(d.delta_sens),
                             repr(d.delta_spec), fmt(d.p_sens), fmt(d.p_spec), significant])
    with open(os.path.join(out_dir, "distributions.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dimension", "group", "class", "bin_left", "bin_right", "mass"])
        for g in report.groups:
            if g.distribution is None:
                continue
            edges = g.distribution.bin_edges
            for cls, masses in (("positive", g.distribution.pos_mass),
                                ("negative", g.distribution.neg_mass)):
                for i, mass in enumerate(masses):
                    writer.writerow([g.dimension, g.group, cls,
                                     repr(float(edges[i])), repr(float(edges[i + 1])),
                                     repr(float(mass))])
