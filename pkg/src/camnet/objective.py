"""Mean and worst-case objectives with a coverage penalty."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .fusion import QualityReport

DEFAULT_COVERAGE_PENALTY = 1e6


class ObjectiveKind(str, enum.Enum):
    MEAN = "mean"
    MINIMAX = "minimax"


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: ObjectiveKind = ObjectiveKind.MEAN
    coverage_penalty: float = DEFAULT_COVERAGE_PENALTY

    def __post_init__(self):
        object.__setattr__(self, "kind", ObjectiveKind(self.kind))
        if not self.coverage_penalty > 0.0:
            raise ValueError(f"coverage_penalty must be positive, got {self.coverage_penalty}")


def penalized_values(fused: np.ndarray, spec: ObjectiveSpec) -> np.ndarray:
    """Objective over the last axis of ``fused`` (any leading batch shape).

    Each uncovered (infinite) entry is replaced by
    ``penalty * (1 + number_uncovered)`` so infeasible points still rank by
    how many targets they miss.
    """
    fused = np.asarray(fused, dtype=float)
    uncovered = ~np.isfinite(fused)
    n_bad = uncovered.sum(axis=-1, keepdims=True)
    filled = np.where(uncovered, spec.coverage_penalty * (1.0 + n_bad), fused)
    if spec.kind is ObjectiveKind.MEAN:
        # sorting first makes the sum independent of target order
        return np.sort(filled, axis=-1).mean(axis=-1)
    return filled.max(axis=-1)


def objective_value(report: QualityReport, spec: ObjectiveSpec) -> float:
    return float(penalized_values(report.fused, spec))


def is_feasible(report: QualityReport) -> bool:
    return all(t.covered for t in report.targets)
