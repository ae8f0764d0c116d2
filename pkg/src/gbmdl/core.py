"""Shared domain types and the elementary ball statistics every model reuses.

All types are immutable value objects: pipeline stages communicate by
constructing new instances, never by mutating shared state, so any number of
threads may read them concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DataQualityError


def _as_matrix(values: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DataQualityError(f"expected a 2-D sample matrix, got ndim={arr.ndim}")
    return arr


@dataclass(frozen=True)
class Dataset:
    """An n x d sample matrix plus optional integer ground-truth labels.

    Labels are carried along for evaluation only; no clustering stage reads
    them. Values must be finite; after min-max normalization they lie in
    [0, 1].
    """

    values: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        values = _as_matrix(self.values)
        object.__setattr__(self, "values", values)
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise DataQualityError("dataset needs at least one sample and one feature")
        if not np.isfinite(values).all():
            row, col = np.argwhere(~np.isfinite(values))[0]
            raise DataQualityError(f"non-finite value at sample {row}, feature {col}")
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (values.shape[0],):
                raise DataQualityError("labels must be one integer per sample")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class BallStats:
    """Sufficient statistics of a point set: count, per-feature sum, total squared norm.

    Only the isotropic dispersion is ever needed downstream, so the squared
    norms are accumulated as one scalar rather than per feature.
    """

    count: int
    sum: np.ndarray
    sumsq: float


def stats_from_points(points: np.ndarray) -> BallStats:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return BallStats(
        count=pts.shape[0],
        sum=pts.sum(axis=0),
        sumsq=float(np.einsum("ij,ij->", pts, pts)),
    )


def stats_add_point(stats: BallStats, x: np.ndarray) -> BallStats:
    x = np.asarray(x, dtype=np.float64)
    return BallStats(stats.count + 1, stats.sum + x, stats.sumsq + float(x @ x))


def stats_remove_point(stats: BallStats, x: np.ndarray) -> BallStats:
    x = np.asarray(x, dtype=np.float64)
    return BallStats(stats.count - 1, stats.sum - x, stats.sumsq - float(x @ x))


def stats_sse(stats: BallStats) -> float:
    """Within-set sum of squared deviations from the mean, clamped at 0.

    The clamp absorbs floating-point cancellation; downstream logarithms
    require nonnegativity.
    """
    return max(stats.sumsq - float(stats.sum @ stats.sum) / stats.count, 0.0)


def ball_center(stats: BallStats) -> np.ndarray:
    """Mean of the member points."""
    return stats.sum / stats.count


def ball_radius(points: np.ndarray, center: np.ndarray) -> float:
    """Maximum Euclidean distance from any member point to the center."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return float(np.sqrt(((pts - center) ** 2).sum(axis=1).max()))


@dataclass(frozen=True)
class GranularBall:
    """A subset of samples summarized by cached statistics, a center, and a radius.

    ``members`` holds original sample indices, kept sorted ascending so that
    iteration order (and therefore floating-point accumulation order) is
    reproducible across runs.
    """

    members: np.ndarray
    stats: BallStats
    center: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        members = np.asarray(self.members, dtype=np.int64)
        object.__setattr__(self, "members", members)
        if members.size == 0:
            raise ValueError("a granular ball must have at least one member")
        if members.size > 1 and not (np.diff(members) > 0).all():
            raise ValueError("members must be strictly increasing sample indices")

    @classmethod
    def from_members(cls, values: np.ndarray, members: np.ndarray) -> "GranularBall":
        members = np.sort(np.asarray(members, dtype=np.int64))
        pts = values[members]
        stats = stats_from_points(pts)
        center = ball_center(stats)
        return cls(members=members, stats=stats, center=center,
                   radius=ball_radius(pts, center))

    @property
    def size(self) -> int:
        return self.stats.count


class ModelChoice(Enum):
    """The three competing local explanations of a ball."""

    SINGLE_BALL = "M1"
    TWO_BALL = "M2"
    CORE_RESIDUAL = "M3"


@dataclass(frozen=True)
class ModelVerdict:
    """Outcome of the three-way description-length competition for one ball.

    ``split`` is present iff the two-ball model won; ``peel_q`` (the residual
    size) iff the core-plus-residual model won. A ball is abnormal iff
    ``min(l2_star, l3_star) < l1`` strictly.
    """

    choice: ModelChoice
    l1: float
    l2_star: float
    l3_star: float
    split: tuple[np.ndarray, np.ndarray] | None = None
    peel_q: int | None = None

    @property
    def abnormal(self) -> bool:
        return min(self.l2_star, self.l3_star) < self.l1


@dataclass(frozen=True)
class GenerationResult:
    """Everything the generation stage produces.

    ``stable_balls`` are the final balls after residual attachment;
    ``residual_background`` lists samples that stayed in the background;
    ``ownership`` maps every sample to the stable ball with the nearest
    center; ``trace`` records (ball size, verdict) in dequeue order.
    """

    stable_balls: tuple[GranularBall, ...]
    residual_background: np.ndarray
    ownership: np.ndarray
    trace: tuple[tuple[int, ModelVerdict], ...]
