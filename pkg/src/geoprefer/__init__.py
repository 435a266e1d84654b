"""Interactive top-k search over geo-tagged visual-word objects."""

from .model import (
    Constraint,
    DatasetSummary,
    GeoObject,
    PreferenceVector,
    Query,
    ScorePair,
    ValidationError,
    validate_dataset,
)
from .session import Phase, SessionReport, SimulatedUser, Strategy, simulate, start_session

__all__ = [
    "Constraint",
    "DatasetSummary",
    "GeoObject",
    "Phase",
    "PreferenceVector",
    "Query",
    "ScorePair",
    "SessionReport",
    "SimulatedUser",
    "Strategy",
    "ValidationError",
    "simulate",
    "start_session",
    "validate_dataset",
]
