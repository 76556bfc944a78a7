"""Freeness of arrangements cut out by maximal minors of a generic matrix."""

__version__ = "0.1.0"

from .algebra import Polynomial, PrimeField, VariableOrder  # noqa: E402
from .model import DEFAULT_SHAPE, Arrangement, Derivation, MatrixShape, arrangement, minor, tangency  # noqa: E402
from .analyzer import AnalyzeConfig, FreenessVerdict, VerdictKind, analyze  # noqa: E402
from .saito import certify_free  # noqa: E402
from .syzygy import graded_dimensions, minimal_generators  # noqa: E402

__all__ = [
    "__version__", "Polynomial", "PrimeField", "VariableOrder", "DEFAULT_SHAPE", "Arrangement", "Derivation",
    "MatrixShape", "arrangement", "minor", "tangency", "AnalyzeConfig", "FreenessVerdict", "VerdictKind",
    "analyze", "certify_free", "graded_dimensions", "minimal_generators",
]
