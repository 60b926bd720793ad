"""
Exception hierarchy for contourgraph.

Every error raised on purpose by the library derives from ContourGraphError.
The concrete classes also derive from ValueError, so callers that only
expect bad-input errors can keep catching ValueError.
"""


class ContourGraphError(Exception):
    """Base class for all library errors."""


class ContourError(ContourGraphError, ValueError):
    """Invalid contour, raster or shape/perturbation spec."""


class NetworkError(ContourGraphError, ValueError):
    """Invalid weighted network, threshold or sweep plan."""


class MetricError(ContourGraphError, ValueError):
    """A measurement was requested outside its domain."""


class DescriptorError(ContourGraphError, ValueError):
    """Inconsistent feature vector layout."""


class ClassificationError(ContourGraphError, ValueError):
    """Dataset unusable for the requested classifier or fold count."""


class DatasetError(ContourGraphError, ValueError):
    """Unreadable or malformed dataset file or directory."""


class ConfigError(ContourGraphError, ValueError):
    """Malformed environment setting or experiment config."""


class ExperimentError(ContourGraphError):
    """
    A pipeline stage failed.

    Attributes:
        stage: Name of the stage that failed (load, perturb, extract, classify, write)
    """

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.message = message
