import itertools

import numpy as np
import pytest

from preftune.action_space import DimensionSpec, build_grid
from preftune.preference_gp import LikelihoodConfig
from preftune.synthetic_oracle import (
    OracleConfig,
    calibrated_utility,
    make_oracle,
    synthetic_ordinal,
    synthetic_preference,
    true_utility,
)


def grid12():
    return build_grid([DimensionSpec(f"d{i}", 0.0, 1.0, 8) for i in range(12)])


def grid3():
    return build_grid(
        [
            DimensionSpec("a", 0.0, 10.0, 4),
            DimensionSpec("b", -1.0, 1.0, 4),
            DimensionSpec("c", 5.0, 6.0, 4),
        ]
    )


class TestOracleConfig:
    def test_correct_prob_range(self):
        g = grid3()
        opt = g.action((0, 0, 0))
        with pytest.raises(ValueError):
            OracleConfig(optimum=opt, correct_prob=0.5)
        with pytest.raises(ValueError):
            OracleConfig(optimum=opt, correct_prob=1.1)
        OracleConfig(optimum=opt, correct_prob=1.0)

    def test_scale_positive(self):
        g = grid3()
        with pytest.raises(ValueError):
            OracleConfig(optimum=g.action((0, 0, 0)), utility_scale=0.0)


class TestTrueUtility:
    def test_optimum_is_argmax_at_zero(self):
        g = grid3()
        opt = g.action((1, 2, 3))
        cfg = OracleConfig(optimum=opt)
        assert true_utility(opt, cfg) == 0.0
        for idx in itertools.product(range(4), repeat=3):
            assert true_utility(g.action(idx), cfg) <= 0.0

    def test_single_step_distance(self):
        g = grid12()
        opt = g.action((0,) * 12)
        one_off = g.action((1,) + (0,) * 11)
        cfg = OracleConfig(optimum=opt, utility_scale=3.0)
        assert true_utility(one_off, cfg) == pytest.approx(-3.0 / 7.0)

    def test_monotone_along_axis(self):
        g = grid3()
        opt = g.action((0, 0, 0))
        cfg = OracleConfig(optimum=opt)
        utils = [true_utility(g.action((i, 0, 0)), cfg) for i in range(4)]
        assert all(b < a for a, b in zip(utils, utils[1:]))

    def test_permutation_equivariance(self):
        g = build_grid([DimensionSpec(f"d{i}", 0.0, 1.0, 5) for i in range(3)])
        cfg = OracleConfig(optimum=g.action((4, 1, 2)))
        a = g.action((0, 3, 2))
        # permute dimensions of both a and the optimum
        cfg_p = OracleConfig(optimum=g.action((1, 2, 4)))
        a_p = g.action((3, 2, 0))
        assert true_utility(a, cfg) == pytest.approx(true_utility(a_p, cfg_p))


class TestCalibration:
    def test_median_maps_to_zero(self):
        g = grid3()
        opt = g.action((0, 0, 0))
        cfg = make_oracle(g, opt)
        dists = [
            np.linalg.norm(
                np.array(g.action_from_id(i).normalized) - np.array(opt.normalized)
            )
            for i in range(g.cardinality)
        ]
        median = float(np.median(dists))
        assert cfg.median_distance == pytest.approx(median)
        # an action exactly at the median distance would score 0; near-optimal
        # actions clear the top threshold
        assert calibrated_utility(opt, cfg) > 1.0

    def test_optimum_gets_top_label(self):
        g = grid3()
        cfg = make_oracle(g, g.action((2, 2, 2)), correct_prob=1.0)
        rec = synthetic_ordinal(g.action((2, 2, 2)), cfg, LikelihoodConfig(), rng_seed=0)
        assert rec.label == 3

    def test_far_corner_distances_map_below_neutral(self):
        g = grid3()
        opt = g.action((0, 0, 0))
        cfg = make_oracle(g, opt, correct_prob=1.0)
        far = g.action((3, 3, 3))
        assert calibrated_utility(far, cfg) < -1.0
        assert synthetic_ordinal(far, cfg, LikelihoodConfig(), 0).label == 1

    def test_sampled_calibration_close_to_exhaustive(self):
        g = grid12()  # 8^12 actions forces the sampled path
        opt = g.action((0,) * 12)
        cfg = make_oracle(g, opt)
        assert cfg.median_distance > 0
        assert cfg.utility_scale > 0


class TestSyntheticPreference:
    def test_noise_free_always_correct(self):
        g = grid3()
        opt = g.action((0, 0, 0))
        cfg = make_oracle(g, opt, correct_prob=1.0)
        better, worse = g.action((1, 0, 0)), g.action((3, 3, 3))
        for seed in range(50):
            rec = synthetic_preference(better, worse, cfg, seed)
            assert rec.winner_id == better.uid

    def test_identical_actions_rejected(self):
        g = grid3()
        cfg = make_oracle(g, g.action((0, 0, 0)))
        a = g.action((1, 1, 1))
        with pytest.raises(ValueError):
            synthetic_preference(a, a, cfg, 0)

    def test_tie_splits_evenly(self):
        g = grid3()
        opt = g.action((0, 0, 0))
        cfg = make_oracle(g, opt, correct_prob=1.0)
        a, b = g.action((1, 0, 0)), g.action((0, 1, 0))  # equidistant
        wins = sum(
            synthetic_preference(a, b, cfg, seed).winner_id == a.uid
            for seed in range(10_000)
        )
        assert abs(wins / 10_000 - 0.5) < 0.02

    def test_noisy_correct_rate(self):
        g = grid3()
        opt = g.action((0, 0, 0))
        cfg = make_oracle(g, opt, correct_prob=0.9)
        better, worse = g.action((0, 0, 1)), g.action((3, 3, 3))
        correct = sum(
            synthetic_preference(better, worse, cfg, seed).winner_id == better.uid
            for seed in range(10_000)
        )
        assert abs(correct / 10_000 - 0.9) < 0.01

    def test_transitive_when_noise_free(self):
        g = grid3()
        opt = g.action((0, 0, 0))
        cfg = make_oracle(g, opt, correct_prob=1.0)
        a, b, c = g.action((0, 0, 1)), g.action((0, 2, 2)), g.action((3, 3, 3))
        assert synthetic_preference(a, b, cfg, 0).winner_id == a.uid
        assert synthetic_preference(b, c, cfg, 0).winner_id == b.uid
        assert synthetic_preference(a, c, cfg, 0).winner_id == a.uid


class TestSyntheticOrdinal:
    def test_deterministic_when_noise_free(self):
        g = grid3()
        cfg = make_oracle(g, g.action((0, 0, 0)), correct_prob=1.0)
        lcfg = LikelihoodConfig()
        a = g.action((2, 1, 0))
        labels = {synthetic_ordinal(a, cfg, lcfg, seed).label for seed in range(20)}
        assert len(labels) == 1

    def test_noise_shifts_one_category(self):
        g = grid3()
        opt = g.action((0, 0, 0))
        cfg = make_oracle(g, opt, correct_prob=0.9)
        lcfg = LikelihoodConfig()
        clean = synthetic_ordinal(opt, cfg, LikelihoodConfig(), 0)
        assert clean.label == 3
        counts = np.zeros(4)
        for seed in range(10_000):
            counts[synthetic_ordinal(opt, cfg, lcfg, seed).label] += 1
        freq = counts / 10_000
        # top label shifts inward to 2 with probability 1 - 0.9
        assert abs(freq[3] - 0.9) < 0.01
        assert abs(freq[2] - 0.1) < 0.01
        assert freq[1] == 0.0

    def test_middle_label_splits_both_ways(self):
        g = grid3()
        opt = g.action((0, 0, 0))
        cfg = make_oracle(g, opt, correct_prob=0.8)
        lcfg = LikelihoodConfig()
        # find a neutral-band action
        neutral = None
        for i in range(g.cardinality):
            a = g.action_from_id(i)
            if synthetic_ordinal(a, cfg, lcfg, 0).label == 2 and abs(calibrated_utility(a, cfg)) < 0.9:
                neutral = a
                break
        assert neutral is not None
        counts = np.zeros(4)
        for seed in range(10_000):
            counts[synthetic_ordinal(neutral, cfg, lcfg, seed).label] += 1
        freq = counts / 10_000
        assert abs(freq[2] - 0.8) < 0.015
        assert abs(freq[1] - 0.1) < 0.01
        assert abs(freq[3] - 0.1) < 0.01
