"""Exception taxonomy shared by every stage.

Exit-code mapping used by the CLI and mirrored by the service error payloads:
0 success, 2 configuration error, 3 data error, 4 convergence error.
"""


class VowelProbeError(Exception):
    """Base class for all domain errors."""

    exit_code = 1
    kind = "error"


class ConfigError(VowelProbeError):
    """Invalid parameters, grids, fold counts, or option combinations."""

    exit_code = 2
    kind = "config"


class DataError(VowelProbeError):
    """Malformed or inconsistent input data (corpora, audio, containers)."""

    exit_code = 3
    kind = "data"


class ConvergenceError(VowelProbeError):
    """An iterative solver hit its hard iteration ceiling."""

    exit_code = 4
    kind = "convergence"


class ParseError(DataError):
    """A text input (e.g. a .PHN file) failed to parse; carries the line number."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class AudioFormatError(DataError):
    """Unknown or unsupported audio container/encoding."""


class EstimationError(DataError):
    """A per-segment estimate (LPC, formants) could not be produced."""


class WeightLoadError(DataError):
    """Base class for weight-container load failures."""


class BadMagicError(WeightLoadError):
    pass


class ChecksumError(WeightLoadError):
    pass


class MissingTensorError(WeightLoadError):
    def __init__(self, name):
        super().__init__(f"container is missing tensor {name!r}")
        self.tensor_name = name


class TensorShapeError(WeightLoadError):
    def __init__(self, name, expected, got):
        super().__init__(f"tensor {name!r}: expected shape {tuple(expected)}, got {tuple(got)}")
        self.tensor_name = name
