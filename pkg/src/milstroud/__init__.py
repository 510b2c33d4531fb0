"""Bag-level anomaly detection with strangeness scores and conformal p-values."""

from .aggregation import ALL_AGGREGATES, Aggregate, aggregate
from .autoencoder import AeArchitecture, AeTrainingConfig, TrainedAe, forward, mse_strangeness, train
from .bags import Bag, Dataset, Instance, Label, validate_dataset
from .data import (
    BagCompositionSpec,
    SyntheticSpec,
    WindowingSpec,
    compose_bags,
    corrupt_snr,
    generate_synthetic,
    load_feature_csv,
    read_dataset,
    window_signal,
    write_dataset,
)
from .errors import ConfigurationError, DataError, ExperimentError, ScoringError, TrainingError
from .evaluation import RocCurve, confidence_levels, roc_from_verdicts
from .lof import LofConfig, ProximityContext, Scope, local_outlier_factors, lof_score
from .mil import Baseline, BagVerdict, bag_score, classify_bag, create_baseline, p_value, run_experiment
from .scorers import LofScorer, MseScorer
from .stroud import InstanceBaseline, StroudRule, run_stroud, stroud_bag_decision, stroud_instance_pvalue

__version__ = "0.1.0"
