"""Command-line surface: reproducible audits end to end.

Exit codes are a stable contract: 0 success, 1 configuration error,
2 data error, 3 numeric failure. Every command is deterministic over
unchanged inputs; run directories are self-describing (config echo, input
hashes, per-seed metrics, persisted scores).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys

import numpy as np

from . import synthetic
from .cohort import build_cohort, read_manifest
from .embeddings import LayerId, load_pooled_layer
from .errors import ConfigError, DataError, SpeechBiasError
from .fairness import MetricReport, confusion_from, core_metrics
from .features import extract_mfcc_vector, ingest_feature_csv, load_wav, write_feature_csv
from .harness import (
    AggregateResult,
    BIAS_DIMENSIONS,
    DEFAULT_SEEDS,
    ExperimentConfig,
    ScoreRow,
    SeedRun,
    bias_analysis,
    layer_sweep,
    run_experiment,
    write_bias_dir,
    write_run_dir,
)
from .tables import RESULT_TABLES, BIAS_TABLES, load_result_table, \
    uar_identity_violations, bias_identity_violations

DATA_ROOT_ENV = "SBA_DATA_ROOT"

RUN_CONFIG_KEYS = {
    "task", "condition", "feature", "classifier", "seeds", "balance_seed",
    "manifest", "embedding_index", "feature_csv", "feature_dim",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are config errors (exit 1)
        raise ConfigError(message)


def _resolve(path: str, anchor_dir: str) -> str:
    if os.path.isabs(path):
        return path
    root = os.environ.get(DATA_ROOT_ENV)
    return os.path.join(root if root else anchor_dir, path)


def _sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _parse_layer_tag(tag: str) -> LayerId:
    if tag.startswith("w2v2-layer-"):
        return LayerId("hidden", int(tag.rsplit("-", 1)[1]))
    if tag.startswith("w2v2-latent-"):
        return LayerId("latent", int(tag.rsplit("-", 1)[1]))
    raise ConfigError(f"feature {tag!r} is not an embedding layer tag")


def _load_run_config(path: str, seeds_override=None):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    unknown = set(raw) - RUN_CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in ("task", "condition", "feature", "classifier", "manifest"):
        if key not in raw:
            raise ConfigError(f"config is missing required key {key!r}")
    if ("embedding_index" in raw) == ("feature_csv" in raw):
        raise ConfigError("config needs exactly one of embedding_index or feature_csv")
    if "feature_csv" in raw and "feature_dim" not in raw:
        raise ConfigError("feature_csv requires feature_dim")

    anchor = os.path.dirname(os.path.abspath(path))
    paths = {"manifest": _resolve(raw["manifest"], anchor)}
    if "embedding_index" in raw:
        paths["embedding_index"] = _resolve(raw["embedding_index"], anchor)
    else:
        paths["feature_csv"] = _resolve(raw["feature_csv"], anchor)
    for name, p in paths.items():
        if not os.path.exists(p):
            raise ConfigError(f"{name} path does not exist: {p}")

    config = ExperimentConfig(
        task=raw["task"],
        condition=raw["condition"],
        feature=raw["feature"],
        classifier=raw["classifier"],
        seeds=tuple(seeds_override if seeds_override else raw.get("seeds", DEFAULT_SEEDS)),
        balance_seed=int(raw.get("balance_seed", 7)),
    )
    extra = {"feature_dim": int(raw["feature_dim"])} if "feature_dim" in raw else {}
    return config, paths, extra


def _load_cohort(config: ExperimentConfig, paths: dict, extra: dict):
    records = read_manifest(paths["manifest"])
    cohort = build_cohort(records)
    if "embedding_index" in paths:
        vectors = load_pooled_layer(paths["embedding_index"], _parse_layer_tag(config.feature))
    else:
        listed = ingest_feature_csv(paths["feature_csv"], extra["feature_dim"], config.feature)
        vectors = {v.utterance_id: v for v in listed}
    return cohort.with_features(vectors)


def _input_hashes(paths: dict) -> dict:
    return {name: _sha256_file(p) for name, p in paths.items()}


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_extract_features(args) -> int:
    records = read_manifest(args.manifest)
    anchor = os.path.dirname(os.path.abspath(args.manifest))
    os.makedirs(args.out, exist_ok=True)
    vectors, failures = [], []
    for record in records:
        wav = _resolve(record.wav_path, anchor) if record.wav_path else ""
        try:
            if not wav:
                raise DataError("manifest row has no wav_path")
            buffer = load_wav(wav)
            vectors.append(extract_mfcc_vector(buffer, record.utterance_id))
        except SpeechBiasError as exc:
            failures.append((record.utterance_id, str(exc)))
    if vectors:
        write_feature_csv(os.path.join(args.out, "mfcc40.csv"), vectors)
    for utterance_id, message in failures:
        print(f"error: {utterance_id}: {message}", file=sys.stderr)
    if failures:
        print(f"{len(failures)} of {len(records)} utterances failed", file=sys.stderr)
        return 2
    print(f"wrote {len(vectors)} mfcc40 rows to {os.path.join(args.out, 'mfcc40.csv')}")
    return 0


def _cmd_run(args) -> int:
    config, paths, extra = _load_run_config(args.config, args.seeds)
    cohort = _load_cohort(config, paths, extra)
    result = run_experiment(cohort, config, jobs=args.jobs)
    write_run_dir(result, args.out, input_hashes=_input_hashes(paths))
    with open(os.path.join(args.out, "run_config.json"), "w", encoding="utf-8") as fh:
        json.dump({"config_file": os.path.abspath(args.config),
                   "resolved_paths": dict(sorted(paths.items()))},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    m = result.mean
    print(f"task={config.task} condition={config.condition} feature={config.feature} "
          f"classifier={config.classifier}")
    print(f"mean over {len(config.seeds)} seeds: accuracy={m.accuracy:.4f} "
          f"uar={m.uar:.4f} sensitivity={m.sensitivity:.4f} specificity={m.specificity:.4f}")
    return 0


def _reload_run(run_dir: str) -> tuple[AggregateResult, dict]:
    manifest_path = os.path.join(run_dir, "run_manifest.json")
    scores_path = os.path.join(run_dir, "scores.csv")
    if not os.path.exists(manifest_path):
        raise DataError(f"{run_dir}: run_manifest.json not found")
    if not os.path.exists(scores_path):
        raise DataError(f"{run_dir}: scores.csv not found; bias analysis needs persisted scores")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    config = ExperimentConfig(**manifest["config"])
    by_seed: dict[int, list[ScoreRow]] = {s: [] for s in config.seeds}
    with open(scores_path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            seed = int(row["seed"])
            by_seed.setdefault(seed, []).append(ScoreRow(
                utterance_id=row["utterance_id"], label=int(row["label"]),
                score=float(row["score"]), prediction=int(row["prediction"]),
                seed=seed,
            ))
    runs = []
    for seed in config.seeds:
        rows = by_seed.get(seed, [])
        if not rows:
            raise DataError(f"{run_dir}: no persisted scores for seed {seed}")
        labels = np.array([r.label for r in rows], dtype=bool)
        predictions = np.array([r.prediction for r in rows], dtype=bool)
        metrics = core_metrics(confusion_from(labels, predictions))
        runs.append(SeedRun(seed=seed, metrics=metrics, scores=tuple(rows),
                            n_train=0, n_test=len(rows), train_hash="",
                            normalizer_hash="", svm_grid=None))

    def agg(fn) -> MetricReport:
        fields = ("accuracy", "uar", "sensitivity", "specificity")
        return MetricReport(**{
            f: fn(np.array([getattr(r.metrics, f) for r in runs])) for f in fields
        })

    result = AggregateResult(config=config, per_seed=tuple(runs),
                             mean=agg(lambda v: float(np.mean(v))),
                             std=agg(lambda v: float(np.std(v))))
    return result, manifest


def _cmd_bias_report(args) -> int:
    result, _ = _reload_run(args.run)
    records = read_manifest(args.manifest)
    cohort = build_cohort(records)
    dimensions = tuple(args.dimensions) if args.dimensions else BIAS_DIMENSIONS
    report = bias_analysis(result, cohort, dimensions=dimensions)
    write_bias_dir(report, args.out)
    defined = sum(1 for g in report.groups if g.sensitivity is not None)
    print(f"wrote bias report for {len(report.groups)} group rows "
          f"({defined} with defined sensitivity) to {args.out}")
    for g in report.groups:
        if g.sensitivity is None or g.specificity is None:
            print(f"note: {g.dimension}={g.group} has an undefined metric "
                  f"(n_pos={g.n_positive}, n_neg={g.n_negative})")
    return 0


def _cmd_sweep(args) -> int:
    config, paths, extra = _load_run_config(args.config, args.seeds)
    if "embedding_index" not in paths:
        raise ConfigError("layer sweeps need an embedding_index config")
    records = read_manifest(paths["manifest"])
    cohort = build_cohort(records)
    layers = _parse_layer_selection(args.layers)
    pooled = {}
    for layer in layers:
        pooled[layer.feature_set_id] = load_pooled_layer(paths["embedding_index"], layer)
    results = layer_sweep(cohort, pooled, config, jobs=args.jobs)
    os.makedirs(args.out, exist_ok=True)
    out_csv = os.path.join(args.out, "layer_sweep.csv")
    with open(out_csv, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["feature", "classifier", "mean_accuracy", "mean_uar",
                         "mean_sensitivity", "mean_specificity", "std_uar"])
        for tag, result in results:
            writer.writerow([tag, config.classifier, repr(result.mean.accuracy),
                             repr(result.mean.uar), repr(result.mean.sensitivity),
                             repr(result.mean.specificity), repr(result.std.uar)])
    print(f"wrote {len(results)} layer rows to {out_csv}")
    return 0


def _parse_layer_selection(spec: str) -> list[LayerId]:
    """Parse selections like 'hidden:1-12', 'hidden:9,10', 'latent:1-3'."""
    layers = []
    for part in spec.split():
        if ":" not in part:
            raise ConfigError(f"bad layer selection {part!r}; use kind:indices")
        kind, indices = part.split(":", 1)
        for token in indices.split(","):
            if "-" in token:
                lo, hi = token.split("-", 1)
                layers.extend(LayerId(kind, i) for i in range(int(lo), int(hi) + 1))
            else:
                layers.append(LayerId(kind, int(token)))
    if not layers:
        raise ConfigError("empty layer selection")
    return layers


def _cmd_check_tables(args) -> int:
    """Verify the bundled reference tables are in their known-good state."""
    tol = args.tol
    failures = []
    for table in RESULT_TABLES:
        if args.table and table != args.table:
            continue
        rows = load_result_table(table)
        for row, deviation in uar_identity_violations(rows, tol):
            line = f"{row.key()}: UAR off by {deviation * 100:.3f} points"
            if row.note:
                print(f"known source inconsistency: {line} [{row.note}]")
            else:
                failures.append(line)
    for table in BIAS_TABLES:
        if args.table and table != args.table:
            continue
        failures.extend(bias_identity_violations(table))
    if failures:
        for line in failures:
            print(f"violation: {line}", file=sys.stderr)
        return 3
    print("reference tables consistent" + (f" (table={args.table})" if args.table else ""))
    return 0


def _cmd_synth(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    if args.preset == "tones":
        return _synth_tones(args)
    presets = {
        "quickstart": synthetic.SyntheticSpec(
            n_per_cell=6, dim=8, sigma=1.0, seed=args.seed,
            separation=synthetic.separation_for_auc(0.95, 1.0)),
        "separable": synthetic.SyntheticSpec(
            n_per_cell=25, dim=8, sigma=1.0, seed=args.seed,
            separation=synthetic.separation_for_auc(0.999, 1.0)),
        "null": synthetic.SyntheticSpec(
            n_per_cell=args.n_per_cell, dim=8, sigma=1.0, seed=args.seed,
            separation=synthetic.separation_for_auc(0.983, 1.0)),
        "gender-gap": synthetic.gender_gap_spec(
            auc_male=0.92, auc_female=0.84, n_per_cell=args.n_per_cell,
            dim=8, sigma=1.0, seed=args.seed),
    }
    if args.preset not in presets:
        raise ConfigError(f"unknown preset {args.preset!r}")
    paths = synthetic.gen_cohort(presets[args.preset], args.out)
    print(f"wrote {paths['manifest']} and {paths['index']}")
    return 0


def _synth_tones(args) -> int:
    from .cohort import SubjectRecord, write_manifest

    records = []
    for i, freq in enumerate((220.0, 440.0, 880.0), start=1):
        wav_rel = f"tone{i}.wav"
        synthetic.gen_tone_wav(os.path.join(args.out, wav_rel), freq, 1.0)
        records.append(SubjectRecord(
            subject_id=f"S{i:05d}", gender="F" if i % 2 else "M",
            age=50 + i, mmse=20 if i % 2 else 28, hamd=2, utterance_id=f"U{i:05d}",
            wav_path=wav_rel,
        ))
    manifest = os.path.join(args.out, "manifest.csv")
    write_manifest(manifest, records)
    print(f"wrote {manifest} and 3 tone wavs")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sba", description="Subgroup bias audits for speech classifiers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract-features", help="compute mfcc40 vectors for manifest audio")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_extract_features)

    p = sub.add_parser("run", help="run one experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", type=int, nargs="+", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("bias-report", help="subgroup bias report from a finished run")
    p.add_argument("--run", required=True, help="run directory with persisted scores")
    p.add_argument("--manifest", required=True, help="subject manifest for demographics")
    p.add_argument("--out", required=True)
    p.add_argument("--dimensions", nargs="+", choices=list(BIAS_DIMENSIONS), default=None)
    p.set_defaults(func=_cmd_bias_report)

    p = sub.add_parser("sweep", help="run one config across embedding layers")
    p.add_argument("--config", required=True)
    p.add_argument("--layers", required=True, help="e.g. 'hidden:1-12' or 'hidden:9,10 latent:1'")
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", type=int, nargs="+", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("check-tables", help="verify bundled reference tables")
    p.add_argument("--table", default=None)
    p.add_argument("--tol", type=float, default=0.005)
    p.set_defaults(func=_cmd_check_tables)

    p = sub.add_parser("synth", help="generate synthetic cohorts and audio")
    p.add_argument("--out", required=True)
    p.add_argument("--preset", default="quickstart",
                   choices=["quickstart", "separable", "null", "gender-gap", "tones"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-per-cell", type=int, default=100)
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except SpeechBiasError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
