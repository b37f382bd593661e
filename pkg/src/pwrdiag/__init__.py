"""PWR transient simulation and PCA/RBF-network fault diagnosis."""

from .errors import (
    ConfigurationError,
    CorpusError,
    DiagnosisError,
    EvaluationError,
    LabelError,
    PreprocessingError,
    PwrDiagError,
    ScalingError,
    ShapeError,
    SplitError,
    TrainingError,
    VersioningError,
)
from .plantsim import (
    CHANNELS,
    FaultKind,
    FaultLabel,
    LabeledDataset,
    PlantConfig,
    PlantState,
    ScenarioSpec,
    TransientRecord,
    encode_label,
    generate_corpus,
    init_steady_state,
    read_corpus_csv,
    reference_corpus,
    reference_scenarios,
    run_scenario,
    steady_state_values,
    step,
    sweep_corpus,
    sweep_scenarios,
    write_corpus_csv,
)

__version__ = "0.1.0"

__all__ = [
    "CHANNELS",
    "FaultKind",
    "FaultLabel",
    "LabeledDataset",
    "PlantConfig",
    "PlantState",
    "ScenarioSpec",
    "TransientRecord",
    "encode_label",
    "generate_corpus",
    "init_steady_state",
    "read_corpus_csv",
    "reference_corpus",
    "reference_scenarios",
    "run_scenario",
    "steady_state_values",
    "step",
    "sweep_corpus",
    "sweep_scenarios",
    "write_corpus_csv",
    "ConfigurationError",
    "CorpusError",
    "DiagnosisError",
    "EvaluationError",
    "LabelError",
    "PreprocessingError",
    "PwrDiagError",
    "ScalingError",
    "ShapeError",
    "SplitError",
    "TrainingError",
    "VersioningError",
    "__version__",
]
