"""Fairness auditing for speech-based cognitive-impairment classifiers.

Pipeline pieces: acoustic features (``features``), embedding archives
(``embeddings``), the subject data model with balancing and splits
(``cohort``), classifier families (``estimators``), evaluation and
subgroup-fairness math (``fairness``), experiment orchestration
(``harness``), synthetic oracles (``synthetic``), bundled reference tables
(``tables``), and the ``sba`` command line (``cli``).
"""

from .cohort import (
    Cohort,
    CohortMember,
    LabelSet,
    SplitPlan,
    SubjectRecord,
    balance_ci,
    balance_ci_gender,
    build_cohort,
    derive_labels,
    read_manifest,
    remaining_after_balance,
    stratified_split,
    write_manifest,
)
from .embeddings import (
    EmbeddingArchive,
    LayerId,
    load_pooled_layer,
    pool_embedding,
    read_embedding_file,
    read_embedding_index,
    write_embedding_file,
    write_embedding_index,
)
from .errors import ConfigError, DataError, NumericError, SpeechBiasError, UndefinedMetricError
from .estimators import (
    MlpClassifier,
    RandomForestClassifier,
    SmoSvmClassifier,
    StandardNormalizer,
    fit_svm_with_grid,
    svm_grid_search,
)
from .fairness import (
    ConfusionCounts,
    DisparityReport,
    MetricReport,
    ScoreDistribution,
    SubgroupReport,
    TTestResult,
    auc,
    auc_subgroup,
    confusion_from,
    core_metrics,
    disparity,
    paired_ttest,
    score_distribution,
    subgroup_metrics,
)
from .features import (
    AudioBuffer,
    FeatureVector,
    MfccConfig,
    extract_mfcc_vector,
    ingest_feature_csv,
    load_wav,
    mean_pool,
    mfcc,
)
from .harness import (
    AggregateResult,
    BiasReport,
    ExperimentConfig,
    bias_analysis,
    layer_sweep,
    run_experiment,
    write_bias_dir,
    write_run_dir,
)
from .synthetic import SyntheticSpec, analytic_auc, gen_cohort, gen_tone_wav, make_cohort

__version__ = "0.1.0"
