"""Robust point-cloud class-incremental learning toolkit.

Deterministic, seed-reproducible building blocks: corruption generators,
farthest point sampling, probabilistic farthest exemplar selection, a
quantity/quality-balanced replay buffer, and a class-incremental
train/evaluate harness with a built-in geometric feature extractor.
"""

from .cloud import PointCloud, normalize_unit_ball
from .config import ExperimentConfig, parse_config, read_config
from .corruption import (
    CorruptionSpec,
    MixPolicy,
    SEVERITY_LEVELS,
    apply_corruption,
    corrupt_training_class,
    expand_test_set,
)
from .dataset import (
    CorruptionType,
    DatasetManifest,
    LabeledSample,
    load_dataset,
    read_manifest,
    save_dataset,
    write_manifest,
)
from .errors import (
    InvalidArgumentError,
    InvalidConfigError,
    InvalidInputError,
    InvalidStateError,
    ParseError,
    ToolkitError,
)
from .features import (
    GeometricFeatureExtractor,
    class_mean,
    extract_geometric,
    feature_distance,
    read_feature_cache,
    write_feature_cache,
)
from .harness import (
    ClassifierState,
    ExperimentResult,
    Scenario,
    build_scenario,
    evaluate,
    prepare_scenario,
    run_experiment,
    run_prepared,
    train_task,
)
from .pcio import load_cloud, save_cloud
from .replay import BudgetConfig, ExemplarForm, ReplayBuffer, capacity, load_buffer, save_buffer
from .rng import derive_rng
from .sampling import downsample_exemplar, fix_point_count, fps, fps_select
from .selection import (
    ConstantProbability,
    FarthestStrategy,
    HerdingStrategy,
    IndicatorProbability,
    RandomStrategy,
    SigmoidProbability,
    farthest_exemplar_select,
    herding_select,
    sigmoid_prob,
    strategy_from_name,
    uniform_random_select,
)
from .synthetic import ShapeSpec, default_shape_specs, gen_synthetic_dataset

__version__ = "0.1.0"
