"""Exception types shared across the toolkit."""


class PwrDiagError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(PwrDiagError, ValueError):
    """Invalid plant configuration or scenario description."""


class CorpusError(PwrDiagError, ValueError):
    """Inconsistent or empty scenario collection for corpus generation."""


class PreprocessingError(PwrDiagError, ValueError):
    """Degenerate input to normalization or component analysis."""


class ShapeError(PwrDiagError, ValueError):
    """Array dimensions do not match the fitted transform or model."""


class TrainingError(PwrDiagError, ValueError):
    """Empty or unusable training set."""


class LabelError(PwrDiagError, ValueError):
    """Fault label outside the supported encoding."""


class ScalingError(PwrDiagError, ValueError):
    """Degenerate target range for min-max scaling."""


class SplitError(PwrDiagError, ValueError):
    """Dataset split request that cannot be honored."""


class DiagnosisError(PwrDiagError, ValueError):
    """Telemetry window unusable for inference."""


class EvaluationError(PwrDiagError, ValueError):
    """Empty or mismatched evaluation set."""


class VersioningError(PwrDiagError, ValueError):
    """Serialized model written by a newer schema than this build reads."""
