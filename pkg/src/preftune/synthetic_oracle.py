"""Simulated feedback: latent utility from distance to a hidden optimum."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .action_space import Action, ActionGrid
from .preference_gp import LikelihoodConfig, OrdinalRecord, PreferenceRecord

__all__ = [
    "OracleConfig",
    "make_oracle",
    "true_utility",
    "calibrated_utility",
    "synthetic_preference",
    "synthetic_ordinal",
]


@dataclass(frozen=True)
class OracleConfig:
    """Hidden optimum, feedback reliability, and the distance-to-utility scale.

    `median_distance` is the grid's typical distance from the optimum (in
    bound-normalized coordinates); it centers the calibrated utility so that
    a median action sits in the neutral ordinal band.
    """

    optimum: Action
    correct_prob: float = 0.9
    utility_scale: float = 1.0
    median_distance: float = 0.0

    def __post_init__(self):
        if not 0.5 < self.correct_prob <= 1.0:
            raise ValueError("correct_prob must be in (0.5, 1]")
        if self.utility_scale <= 0:
            raise ValueError("utility_scale must be positive")


def _distance(a: Action, b: Action) -> float:
    return float(np.linalg.norm(np.asarray(a.normalized) - np.asarray(b.normalized)))


def make_oracle(
    grid: ActionGrid,
    optimum: Action,
    correct_prob: float = 0.9,
    calibration_seed: int = 0,
    max_exhaustive: int = 20000,
) -> OracleConfig:
    """Build an oracle calibrated to the grid's distance distribution.

    The utility scale maps the median distance-to-optimum onto the neutral
    ordinal band and distances under 10% of the maximum above the top
    threshold, with a 2x margin so near-optimal actions land well inside
    the top band.  Median and max are exact for small grids, otherwise
    estimated from a seeded sample.
    """
    if grid.cardinality <= max_exhaustive:
        ids = range(grid.cardinality)
        dists = np.array([_distance(grid.action_from_id(i), optimum) for i in ids])
    else:
        rng = np.random.default_rng(calibration_seed)
        dists = np.array(
            [_distance(grid.random_action(rng), optimum) for _ in range(4096)]
        )
    median = float(np.median(dists))
    largest = float(np.max(dists))
    span = median - 0.1 * largest
    scale = 2.0 / span if span > 0 else 1.0
    return OracleConfig(
        optimum=optimum,
        correct_prob=correct_prob,
        utility_scale=scale,
        median_distance=median,
    )


def true_utility(a: Action, cfg: OracleConfig) -> float:
    """Negative normalized distance to the hidden optimum, times the scale."""
    return -_distance(a, cfg.optimum) * cfg.utility_scale


def calibrated_utility(a: Action, cfg: OracleConfig) -> float:
    """Utility shifted so the median-distance action scores zero."""
    return cfg.utility_scale * (cfg.median_distance - _distance(a, cfg.optimum))


def synthetic_preference(
    a_new: Action, a_old: Action, cfg: OracleConfig, rng_seed: int
) -> PreferenceRecord:
    """Prefer the truly better action with probability `correct_prob`."""
    if a_new.uid == a_old.uid:
        raise ValueError("preference needs two distinct actions")
    rng = np.random.default_rng(rng_seed)
    u_new, u_old = true_utility(a_new, cfg), true_utility(a_old, cfg)
    if u_new == u_old:
        better, worse = (a_new, a_old) if rng.random() < 0.5 else (a_old, a_new)
    elif u_new > u_old:
        better, worse = a_new, a_old
    else:
        better, worse = a_old, a_new
    if rng.random() >= cfg.correct_prob:
        better, worse = worse, better
    return PreferenceRecord(winner_id=better.uid, loser_id=worse.uid)


def synthetic_ordinal(
    a: Action, cfg: OracleConfig, lcfg: LikelihoodConfig, rng_seed: int
) -> OrdinalRecord:
    """Noise-free label from the calibrated utility against the thresholds;
    with probability 1 - correct_prob the label shifts one category (end
    labels shift inward, middle labels shift a fair coin either way)."""
    rng = np.random.default_rng(rng_seed)
    u = calibrated_utility(a, cfg)
    b = lcfg.thresholds
    label = int(np.searchsorted(b, u, side="left"))
    label = min(max(label, 1), lcfg.n_categories)
    if rng.random() >= cfg.correct_prob:
        if label == 1:
            label += 1
        elif label == lcfg.n_categories:
            label -= 1
        else:
            label += 1 if rng.random() < 0.5 else -1
        label = min(max(label, 1), lcfg.n_categories)
    return OrdinalRecord(action_id=a.uid, label=label)
