"""The description-length engine.

Three candidate explanations compete for every ball: keep it whole, split it
in two along the first principal direction, or peel the farthest points off
into a uniform background shell around a compact core. All lengths are in
nats (the Gaussian coding cost fixes base e) and the cheapest explanation
wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BallStats, GranularBall, ModelChoice, ModelVerdict, stats_sse
from .errors import GbmdlError

LOG_2PI = math.log(2.0 * math.pi)
SHELL_LOG_FLOOR = math.log(1e-300)
RADIUS_FLOOR = 1e-12


class DegenerateDirectionError(GbmdlError):
    """All points coincide, so no principal direction exists."""


@dataclass(frozen=True)
class MdlConfig:
    """Numerical knobs of the coding model.

    ``variance_floor`` replaces a zero dispersion estimate so duplicate-heavy
    balls keep a finite, comparable coding cost. Lengths are always in nats.
    """

    variance_floor: float = 1e-12


DEFAULT_MDL = MdlConfig()


@dataclass(frozen=True)
class SplitCandidate:
    """One feasible two-ball cut along the sorted principal projection."""

    cut_position: int
    l2: float
    left_indices: np.ndarray
    right_indices: np.ndarray


@dataclass(frozen=True)
class PeelCandidate:
    """One feasible core-plus-residual peel, identified by the residual size q."""

    q: int
    l3: float
    core_indices: np.ndarray
    residual_indices: np.ndarray


def mle_mean_var(stats: BallStats, d: int,
                 cfg: MdlConfig = DEFAULT_MDL) -> tuple[np.ndarray, float]:
    """Gaussian maximum-likelihood center and isotropic variance, floored."""
    mean = stats.sum / stats.count
    var = max(stats_sse(stats) / (d * stats.count), cfg.variance_floor)
    return mean, var


def l1_length(stats: BallStats, d: int, cfg: MdlConfig = DEFAULT_MDL) -> float:
    """Single-ball description length.

    Closed form of the Gaussian negative log-likelihood at the MLE plus a
    BIC-style penalty of (d+1)/2 * ln m for the d-dimensional center and the
    scalar variance.
    """
    _, var = mle_mean_var(stats, d, cfg)
    m = stats.count
    return 0.5 * m * d * (1.0 + math.log(2.0 * math.pi * var)) \
        + 0.5 * (d + 1) * math.log(m)


def _l1_vec(counts: np.ndarray, sses: np.ndarray, d: int, cfg: MdlConfig) -> np.ndarray:
    # vectorized twin of l1_length for the split/peel scans
    var = np.maximum(sses / (d * counts), cfg.variance_floor)
    return 0.5 * counts * d * (1.0 + LOG_2PI + np.log(var)) \
        + 0.5 * (d + 1) * np.log(counts)


def partition_cost(m1: int, m2: int) -> float:
    """Entropy cost of announcing a bipartition of m1 + m2 items, in nats.

    Uses the convention 0 * ln 0 = 0, so degenerate partitions cost nothing.
    """
    n = m1 + m2
    cost = 0.0
    for m in (m1, m2):
        if m > 0:
            pi = m / n
            cost -= m * math.log(pi)
    return cost


def first_principal_direction(points: np.ndarray) -> np.ndarray:
    """Unit eigenvector of the sample covariance for its largest eigenvalue.

    Deterministic power iteration: start from the axis of maximum per-feature
    variance, iterate at most 100 times, stop when the direction moves by
    less than 1e-10. The sign is fixed so the first nonzero coordinate is
    positive. Raises DegenerateDirectionError when all points coincide.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[0] < 2:
        raise ValueError("need at least two points for a principal direction")
    centered = pts - pts.mean(axis=0)
    per_feature = (centered ** 2).sum(axis=0)
    if per_feature.max() <= 0.0:
        raise DegenerateDirectionError("zero covariance: all points coincide")

    v = np.zeros(pts.shape[1])
    v[int(np.argmax(per_feature))] = 1.0
    for _ in range(100):
        w = centered.T @ (centered @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            raise DegenerateDirectionError("power iteration collapsed to the null space")
        w /= norm
        delta = np.linalg.norm(w - v)
        v = w
        if delta < 1e-10:
            break

    nonzero = np.flatnonzero(v)
    if nonzero.size and v[nonzero[0]] < 0:
        v = -v
    return v


def log_ball_volume(d: int, r: float) -> float:
    """ln of the volume of a d-dimensional Euclidean ball of radius r.

    Evaluated entirely in the log domain via lgamma, since the raw volume
    underflows for a few hundred dimensions at unit radius. The radius is
    floored at RADIUS_FLOOR to keep the logarithm finite.
    """
    r = max(r, RADIUS_FLOOR)
    return 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0) + d * math.log(r)


def log_shell_volume(d: int, r_out: float, r_core: float) -> float:
    """ln of the volume between the core ball and the outer background ball.

    Computed as a + ln(1 - e^(b-a)) with a, b the log ball volumes; degenerate
    or underflowing shells return the fixed floor ln(1e-300).
    """
    a = log_ball_volume(d, r_out)
    if r_core <= 0.0:
        return a
    if r_core >= r_out:
        return SHELL_LOG_FLOOR
    b = log_ball_volume(d, r_core)
    if b >= a:
        return SHELL_LOG_FLOOR
    result = a + math.log1p(-math.exp(b - a))
    if not math.isfinite(result) or result < SHELL_LOG_FLOOR:
        return SHELL_LOG_FLOOR
    return result


def _prefix_stats(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    prefix_sum = np.cumsum(points, axis=0)
    prefix_sq = np.cumsum(np.einsum("ij,ij->i", points, points))
    return prefix_sum, prefix_sq


def _prefix_sse(prefix_sum: np.ndarray, prefix_sq: np.ndarray,
                sizes: np.ndarray) -> np.ndarray:
    sums = prefix_sum[sizes - 1]
    return np.maximum(prefix_sq[sizes - 1] - np.einsum("ij,ij->i", sums, sums) / sizes, 0.0)


def l2_best_split(ball: GranularBall, values: np.ndarray, n_min: int,
                  cfg: MdlConfig = DEFAULT_MDL) -> tuple[float, SplitCandidate | None]:
    """Cheapest two-ball explanation over all feasible principal-direction cuts.

    Members are projected onto the first principal direction and stable-sorted
    by (projection, original index); every prefix length m1 with both halves
    at least n_min is evaluated from running sufficient statistics, so each
    cut costs O(d). Returns (+inf, None) when no cut is feasible or the
    direction is degenerate.
    """
    n_b = ball.size
    if n_b < 2 * n_min:
        return math.inf, None
    pts = values[ball.members]
    try:
        direction = first_principal_direction(pts)
    except DegenerateDirectionError:
        return math.inf, None

    proj = pts @ direction
    order = np.lexsort((ball.members, proj))
    sorted_members = ball.members[order]
    sorted_pts = pts[order]

    prefix_sum, prefix_sq = _prefix_stats(sorted_pts)
    total_sum = prefix_sum[-1]
    total_sq = prefix_sq[-1]
    d = pts.shape[1]

    m1 = np.arange(n_min, n_b - n_min + 1)
    m2 = n_b - m1
    sse_left = _prefix_sse(prefix_sum, prefix_sq, m1)
    right_sums = total_sum - prefix_sum[m1 - 1]
    sse_right = np.maximum(
        (total_sq - prefix_sq[m1 - 1])
        - np.einsum("ij,ij->i", right_sums, right_sums) / m2,
        0.0,
    )
    pi1 = m1 / n_b
    pi2 = m2 / n_b
    entropy_cost = -(m1 * np.log(pi1) + m2 * np.log(pi2))
    lengths = entropy_cost + _l1_vec(m1, sse_left, d, cfg) + _l1_vec(m2, sse_right, d, cfg)

    best = int(np.argmin(lengths))  # first minimum = smallest m1
    cut = int(m1[best])
    candidate = SplitCandidate(
        cut_position=cut,
        l2=float(lengths[best]),
        left_indices=np.sort(sorted_members[:cut]),
        right_indices=np.sort(sorted_members[cut:]),
    )
    return candidate.l2, candidate


def l3_best_peel(ball: GranularBall, values: np.ndarray, n_min: int,
                 cfg: MdlConfig = DEFAULT_MDL) -> tuple[float, PeelCandidate | None]:
    """Cheapest core-plus-residual explanation over all feasible residual sizes.

    Members are sorted ascending by distance to the full-ball center (ties by
    original index). For residual size q the core keeps the nearest
    n_B - q points; its cost is the single-ball length of the core plus
    q times the log shell volume between the core radius (about the core's own
    mean) and the outer background radius 2 * r_B, plus ln(max(n_B, 2)) to
    encode q itself. Returns (+inf, None) when n_B <= n_min, or when the ball
    radius sits at or below the radius floor so no residual shell exists.
    """
    n_b = ball.size
    if n_b <= n_min:
        return math.inf, None
    if ball.radius <= RADIUS_FLOOR:
        return math.inf, None
    pts = values[ball.members]
    dist = np.sqrt(((pts - ball.center) ** 2).sum(axis=1))
    order = np.lexsort((ball.members, dist))
    sorted_members = ball.members[order]
    sorted_pts = pts[order]
    d = pts.shape[1]

    prefix_sum, prefix_sq = _prefix_stats(sorted_pts)
    core_sizes = np.arange(n_min, n_b)          # q = n_b - size, so q runs n_b - n_min .. 1
    core_l1 = _l1_vec(core_sizes, _prefix_sse(prefix_sum, prefix_sq, core_sizes), d, cfg)

    r_out = 2.0 * ball.radius
    index_cost = math.log(max(n_b, 2))
    best_q = -1
    best_len = math.inf
    for q in range(1, n_b - n_min + 1):         # ascending q: first strict minimum wins ties
        size = n_b - q
        core_mean = prefix_sum[size - 1] / size
        core_radius = float(np.sqrt(((sorted_pts[:size] - core_mean) ** 2).sum(axis=1).max()))
        length = float(core_l1[size - n_min]) \
            + q * log_shell_volume(d, r_out, core_radius) + index_cost
        if length < best_len:
            best_len = length
            best_q = q

    size = n_b - best_q
    candidate = PeelCandidate(
        q=best_q,
        l3=best_len,
        core_indices=np.sort(sorted_members[:size]),
        residual_indices=np.sort(sorted_members[size:]),
    )
    return best_len, candidate


def _choose(l1: float, l2_star: float, l3_star: float) -> ModelChoice:
    # exact ties prefer the least-destructive explanation: keep > peel > split
    if l1 <= l2_star and l1 <= l3_star:
        return ModelChoice.SINGLE_BALL
    if l3_star <= l2_star:
        return ModelChoice.CORE_RESIDUAL
    return ModelChoice.TWO_BALL


def evaluate_ball(ball: GranularBall, values: np.ndarray, n_min: int,
                  cfg: MdlConfig = DEFAULT_MDL,
                  ) -> tuple[ModelVerdict, SplitCandidate | None, PeelCandidate | None]:
    """Run the three-way competition and keep the winning candidates around.

    The generation loop needs the concrete index sets of the winning split or
    peel, not just the verdict, so this returns all three.
    """
    d = values.shape[1]
    l1 = l1_length(ball.stats, d, cfg)
    l2_star, split = l2_best_split(ball, values, n_min, cfg)
    l3_star, peel = l3_best_peel(ball, values, n_min, cfg)
    choice = _choose(l1, l2_star, l3_star)
    verdict = ModelVerdict(
        choice=choice,
        l1=l1,
        l2_star=l2_star,
        l3_star=l3_star,
        split=(split.left_indices, split.right_indices)
        if choice is ModelChoice.TWO_BALL else None,
        peel_q=peel.q if choice is ModelChoice.CORE_RESIDUAL else None,
    )
    return verdict, split, peel


def select_model(ball: GranularBall, values: np.ndarray, n_min: int,
                 cfg: MdlConfig = DEFAULT_MDL) -> ModelVerdict:
    """Pick the shortest of the three local explanations for one ball."""
    return evaluate_ball(ball, values, n_min, cfg)[0]
