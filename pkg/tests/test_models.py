import math

import numpy as np
import pytest

from gbmdl.core import GranularBall, ModelChoice, stats_from_points
from gbmdl.models import (
    DegenerateDirectionError,
    MdlConfig,
    first_principal_direction,
    l1_length,
    l2_best_split,
    l3_best_peel,
    log_ball_volume,
    log_shell_volume,
    mle_mean_var,
    partition_cost,
    select_model,
)

from oracles import best_peel_bruteforce, best_split_bruteforce, l1_numeric
from oracles import log_ball_volume as oracle_log_ball_volume
from oracles import log_shell_volume as oracle_log_shell_volume

FLOOR = MdlConfig().variance_floor


def ball_of(points) -> GranularBall:
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    return GranularBall.from_members(pts, np.arange(len(pts)))


class TestMleMeanVar:
    def test_two_points_1d(self):
        mean, var = mle_mean_var(stats_from_points(np.array([[0.0], [1.0]])), d=1)
        assert mean[0] == pytest.approx(0.5)
        assert var == pytest.approx(0.25)

    def test_identical_points_hit_floor(self):
        _, var = mle_mean_var(stats_from_points(np.full((4, 2), 0.3)), d=2)
        assert var == FLOOR

    def test_two_points_2d(self):
        mean, var = mle_mean_var(stats_from_points(np.array([[0.0, 0.0], [2.0, 0.0]])), d=2)
        assert np.allclose(mean, [1.0, 0.0])
        assert var == pytest.approx(0.5)


class TestL1Length:
    def test_two_point_hand_value(self):
        got = l1_length(stats_from_points(np.array([[0.0], [1.0]])), d=1)
        assert got == pytest.approx(1.0 + math.log(math.pi / 2) + math.log(2), abs=1e-12)

    def test_singleton_penalty_vanishes(self):
        for d in (1, 3, 7):
            got = l1_length(stats_from_points(np.zeros((1, d))), d=d)
            assert got == pytest.approx(0.5 * d * (1.0 + math.log(2 * math.pi * FLOOR)),
                                        abs=1e-12)

    def test_duplicate_pair_floored(self):
        got = l1_length(stats_from_points(np.array([[0.0], [0.0]])), d=1)
        expected = 1.0 + math.log(2 * math.pi * FLOOR) + math.log(2)
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(-24.10, abs=0.01)

    def test_matches_numeric_nll_route(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            m = int(rng.integers(2, 301))
            d = int(rng.integers(1, 31))
            pts = rng.normal(size=(m, d)) * rng.uniform(0.05, 5.0)
            assert l1_length(stats_from_points(pts), d) == pytest.approx(
                l1_numeric(pts), rel=1e-9)

    def test_scale_monotonicity(self):
        rng = np.random.default_rng(9)
        pts = rng.normal(size=(40, 3))
        mean = pts.mean(axis=0)
        previous = l1_length(stats_from_points(pts), 3)
        for s in (0.8, 0.5, 0.2):
            shrunk = mean + s * (pts - mean)
            current = l1_length(stats_from_points(shrunk), 3)
            assert current < previous
            previous = current

    def test_translation_invariance(self):
        rng = np.random.default_rng(10)
        pts = rng.normal(size=(25, 4))
        shift = rng.normal(size=4) * 100
        a = l1_length(stats_from_points(pts), 4)
        b = l1_length(stats_from_points(pts + shift), 4)
        assert b == pytest.approx(a, rel=1e-9)


class TestPartitionCost:
    def test_balanced(self):
        assert partition_cost(2, 2) == pytest.approx(4 * math.log(2), abs=1e-12)

    def test_unbalanced(self):
        expected = 3 * (-(1 / 3) * math.log(1 / 3) - (2 / 3) * math.log(2 / 3))
        assert partition_cost(1, 2) == pytest.approx(expected, abs=1e-12)
        assert partition_cost(1, 2) == pytest.approx(1.9095, abs=1e-4)

    def test_degenerate_partition_free(self):
        assert partition_cost(5, 0) == 0.0
        assert partition_cost(0, 5) == 0.0

    def test_stirling_binomial_approximation(self):
        # the entropy cost tracks ln C(n, m1) and tightens as n grows
        worst = []
        for n in (100, 1000, 10000):
            m1 = np.arange(1, n)
            log_binom = (math.lgamma(n + 1)
                         - np.array([math.lgamma(m + 1) for m in m1])
                         - np.array([math.lgamma(n - m + 1) for m in m1]))
            entropy = np.array([partition_cost(int(m), int(n - m)) for m in m1])
            ratio = np.abs(log_binom - entropy) / n
            worst.append(ratio.max())
            assert ratio.max() <= 0.1
        assert worst[0] > worst[1] > worst[2]


class TestFirstPrincipalDirection:
    def test_axis_aligned(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.5, 0.0]])
        assert np.allclose(first_principal_direction(pts), [1.0, 0.0], atol=1e-10)

    def test_diagonal_line(self):
        t = np.linspace(0, 1, 9)
        pts = np.stack([t, t], axis=1)
        got = first_principal_direction(pts)
        assert np.allclose(got, [1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-8)

    def test_degenerate_when_identical(self):
        with pytest.raises(DegenerateDirectionError):
            first_principal_direction(np.full((5, 3), 0.2))

    def test_sign_convention(self):
        pts = np.stack([np.linspace(0, 1, 11), -np.linspace(0, 1, 11)], axis=1)
        got = first_principal_direction(pts)
        assert got[0] > 0

    def test_matches_dense_eigensolver(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            pts = rng.normal(size=(rng.integers(5, 60), rng.integers(2, 8)))
            pts = pts @ np.diag(rng.uniform(0.2, 3.0, pts.shape[1]))
            got = first_principal_direction(pts)
            cov = np.cov(pts, rowvar=False, bias=True)
            w, v = np.linalg.eigh(np.atleast_2d(cov))
            ref = v[:, -1]
            assert abs(abs(got @ ref) - 1.0) < 1e-6


class TestLogVolumes:
    def test_circle(self):
        assert log_ball_volume(2, 1.0) == pytest.approx(math.log(math.pi), abs=1e-12)

    def test_segment(self):
        assert log_ball_volume(1, 2.0) == pytest.approx(math.log(4.0), abs=1e-12)

    def test_sphere(self):
        assert log_ball_volume(3, 1.0) == pytest.approx(math.log(4 * math.pi / 3), abs=1e-12)

    def test_high_dimension_stays_finite(self):
        assert math.isfinite(log_ball_volume(500, 0.5))

    def test_shell_direct(self):
        assert log_shell_volume(1, 2.0, 1.0) == pytest.approx(math.log(2.0), abs=1e-12)

    def test_shell_empty_core(self):
        assert log_shell_volume(4, 1.5, 0.0) == log_ball_volume(4, 1.5)

    def test_shell_degenerate(self):
        assert log_shell_volume(3, 1.0, 1.0) == math.log(1e-300)
        assert log_shell_volume(3, 1.0, 2.0) == math.log(1e-300)

    def test_matches_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            d = int(rng.integers(1, 40))
            r_out = float(rng.uniform(0.01, 3.0))
            r_core = float(rng.uniform(0.0, r_out))
            assert log_shell_volume(d, r_out, r_core) == pytest.approx(
                oracle_log_shell_volume(d, r_out, r_core), rel=1e-9)
            assert log_ball_volume(d, r_out) == pytest.approx(
                oracle_log_ball_volume(d, r_out), rel=1e-9)


class TestL2BestSplit:
    def test_two_clumps_1d(self):
        pts = np.array([[0.0], [0.1], [0.2], [0.9], [1.0], [1.1]])
        ball = ball_of(pts)
        l2_star, cand = l2_best_split(ball, pts, n_min=2)
        assert cand is not None
        assert cand.cut_position == 3
        assert set(map(tuple, pts[cand.left_indices])) == {(0.0,), (0.1,), (0.2,)} or \
            set(map(tuple, pts[cand.left_indices])) == {(0.9,), (1.0,), (1.1,)}
        assert l2_star < l1_length(ball.stats, 1)
        direction = first_principal_direction(pts)
        oracle_len, oracle_m1 = best_split_bruteforce(pts, ball.members, direction, 2)
        assert l2_star == pytest.approx(oracle_len, rel=1e-9)
        assert cand.cut_position == oracle_m1

    def test_infeasible_when_too_small(self):
        pts = np.array([[0.0], [0.5], [1.0]])
        l2_star, cand = l2_best_split(ball_of(pts), pts, n_min=2)
        assert l2_star == math.inf and cand is None

    def test_identical_points_degenerate(self):
        pts = np.full((10, 2), 0.25)
        ball = ball_of(pts)
        l2_star, cand = l2_best_split(ball, pts, n_min=2)
        assert l2_star == math.inf and cand is None
        assert l2_star > l1_length(ball.stats, 2)

    def test_nearly_identical_points_still_beaten_by_single_ball(self):
        # 0.4 carries representation noise, so the direction is not degenerate;
        # the split still loses on entropy plus the doubled penalty at the floor
        pts = np.full((10, 2), 0.4)
        ball = ball_of(pts)
        l2_star, _ = l2_best_split(ball, pts, n_min=2)
        assert l2_star > l1_length(ball.stats, 2)

    def test_matches_bruteforce_on_random_balls(self):
        rng = np.random.default_rng(77)
        for _ in range(25):
            n = int(rng.integers(8, 120))
            d = int(rng.integers(1, 6))
            pts = rng.normal(size=(n, d))
            ball = ball_of(pts)
            n_min = int(rng.integers(2, max(3, n // 3)))
            l2_star, cand = l2_best_split(ball, pts, n_min)
            if n < 2 * n_min:
                assert l2_star == math.inf
                continue
            direction = first_principal_direction(pts)
            oracle_len, oracle_m1 = best_split_bruteforce(pts, ball.members, direction, n_min)
            assert l2_star == pytest.approx(oracle_len, rel=1e-9)
            assert cand.cut_position == oracle_m1

    def test_translation_invariance(self):
        rng = np.random.default_rng(13)
        pts = rng.normal(size=(30, 3))
        shifted = pts + np.array([50.0, -20.0, 7.0])
        a, _ = l2_best_split(ball_of(pts), pts, 3)
        b, _ = l2_best_split(ball_of(shifted), shifted, 3)
        assert b == pytest.approx(a, rel=1e-9)


class TestL3BestPeel:
    def test_far_outlier_peeled(self):
        pts = np.array([[0.0], [0.05], [0.1], [0.15], [0.2], [1.0]])
        ball = ball_of(pts)
        l3_star, cand = l3_best_peel(ball, pts, n_min=3)
        assert cand is not None
        assert cand.q == 1
        assert pts[cand.residual_indices].ravel().tolist() == [1.0]
        assert l3_star < l1_length(ball.stats, 1)
        oracle_len, oracle_q = best_peel_bruteforce(pts, ball.members, 3)
        assert l3_star == pytest.approx(oracle_len, rel=1e-9)
        assert cand.q == oracle_q

    def test_infeasible_at_n_min(self):
        pts = np.random.default_rng(2).random((4, 2))
        l3_star, cand = l3_best_peel(ball_of(pts), pts, n_min=4)
        assert l3_star == math.inf and cand is None

    def test_q_bounded_by_feasibility(self):
        rng = np.random.default_rng(6)
        pts = rng.random((12, 2))
        n_min = 5
        _, cand = l3_best_peel(ball_of(pts), pts, n_min)
        assert cand is not None
        assert 1 <= cand.q <= 12 - n_min

    def test_zero_radius_ball_has_no_shell(self):
        pts = np.full((8, 2), 0.25)
        l3_star, cand = l3_best_peel(ball_of(pts), pts, n_min=2)
        assert l3_star == math.inf and cand is None

    def test_matches_bruteforce_on_random_balls(self):
        rng = np.random.default_rng(88)
        for _ in range(25):
            n = int(rng.integers(5, 100))
            d = int(rng.integers(1, 6))
            pts = rng.normal(size=(n, d))
            ball = ball_of(pts)
            n_min = int(rng.integers(2, max(3, n // 2)))
            l3_star, cand = l3_best_peel(ball, pts, n_min)
            oracle_len, oracle_q = best_peel_bruteforce(pts, ball.members, n_min)
            if n <= n_min:
                assert l3_star == math.inf
                continue
            assert l3_star == pytest.approx(oracle_len, rel=1e-9)
            assert cand.q == oracle_q

    def test_translation_invariance(self):
        rng = np.random.default_rng(14)
        pts = rng.normal(size=(30, 3))
        shifted = pts + np.array([-9.0, 4.0, 100.0])
        a, _ = l3_best_peel(ball_of(pts), pts, 3)
        b, _ = l3_best_peel(ball_of(shifted), shifted, 3)
        assert b == pytest.approx(a, rel=1e-9)


class TestSelectModel:
    def test_two_clumps_choose_split(self):
        pts = np.array([[0.0], [0.1], [0.2], [0.9], [1.0], [1.1]])
        verdict = select_model(ball_of(pts), pts, n_min=2)
        assert verdict.choice is ModelChoice.TWO_BALL
        assert verdict.split is not None and verdict.peel_q is None
        assert verdict.abnormal

    def test_outlier_chooses_peel(self):
        pts = np.array([[0.0], [0.05], [0.1], [0.15], [0.2], [1.0]])
        verdict = select_model(ball_of(pts), pts, n_min=3)
        assert verdict.choice is ModelChoice.CORE_RESIDUAL
        assert verdict.peel_q == 1 and verdict.split is None
        assert verdict.abnormal

    def test_small_ball_forced_single(self):
        pts = np.array([[0.0], [1.0]])
        verdict = select_model(ball_of(pts), pts, n_min=2)
        assert verdict.choice is ModelChoice.SINGLE_BALL
        assert verdict.l2_star == math.inf and verdict.l3_star == math.inf
        assert not verdict.abnormal

    def test_choice_is_argmin(self):
        rng = np.random.default_rng(99)
        for _ in range(20):
            pts = rng.normal(size=(int(rng.integers(5, 60)), int(rng.integers(1, 5))))
            verdict = select_model(ball_of(pts), pts, n_min=2)
            best = min(verdict.l1, verdict.l2_star, verdict.l3_star)
            chosen = {ModelChoice.SINGLE_BALL: verdict.l1,
                      ModelChoice.TWO_BALL: verdict.l2_star,
                      ModelChoice.CORE_RESIDUAL: verdict.l3_star}[verdict.choice]
            assert chosen == best
