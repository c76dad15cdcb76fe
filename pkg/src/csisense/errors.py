"""Exception hierarchy. Every error carries a short machine-readable code
that the CLI prints as a single parsable line."""


class CsiSenseError(Exception):
    code = "error"


class FormatError(CsiSenseError):
    """Malformed binary container, checkpoint, or spec file."""

    code = "format"


class ValidationError(CsiSenseError):
    """A value is outside its documented range (labels, taps, ids)."""

    code = "validation"


class ConsistencyError(CsiSenseError):
    """Two inputs that must agree do not (e.g. container vs. manifest count)."""

    code = "consistency"


class RangeError(CsiSenseError):
    """Annotation or slice indices out of bounds or degenerate."""

    code = "range"


class DegenerateDataError(CsiSenseError):
    """Input too small or too uniform to process (zero variance, length < 2)."""

    code = "degenerate"


class ShapeError(CsiSenseError):
    """Array shapes incompatible with the requested operation."""

    code = "shape"


class ConfigError(CsiSenseError):
    """Bad hyperparameter, unknown tap, missing required setting."""

    code = "config"


class NumericError(CsiSenseError):
    """NaN/Inf encountered where finite values are required."""

    code = "numeric"


class StateError(CsiSenseError):
    """Operation called out of order (e.g. backward before forward)."""

    code = "state"


class LabelError(CsiSenseError):
    """Class label outside 0..K-1."""

    code = "label"


class InfeasibleBandError(CsiSenseError):
    """Sakoe-Chiba band too narrow for any warping path to exist."""

    code = "infeasible-band"


class TrainingError(CsiSenseError):
    """Training cannot proceed (single-class SVM input, empty train set)."""

    code = "training"


class CompatibilityError(CsiSenseError):
    """Checkpoint and network spec do not match."""

    code = "compatibility"


class UndefinedMetricError(CsiSenseError):
    """Metric has no defined value (accuracy of an empty confusion matrix)."""

    code = "undefined-metric"
