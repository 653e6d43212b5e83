"""Thompson-sampling action selection over visited actions plus a fresh line."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .action_space import Action, ActionGrid
from .preference_gp import PosteriorModel, posterior_sample

__all__ = ["CandidateSet", "next_action", "believed_best", "refresh_candidates"]


@dataclass
class CandidateSet:
    """Uniquely visited actions plus the current random line.

    `union` (visited first, then unvisited line points) is the set the
    posterior is inferred over.  `visited` only ever grows.
    """

    visited: list = field(default_factory=list)
    line: list = field(default_factory=list)

    @property
    def union(self) -> list:
        seen = {a.uid for a in self.visited}
        extra = [a for a in self.line if a.uid not in seen]
        return list(self.visited) + extra

    @property
    def visited_ids(self) -> set:
        return {a.uid for a in self.visited}

    def mark_visited(self, action: Action):
        if action.uid not in self.visited_ids:
            self.visited.append(action)


def _argmax_lowest_id(scores: np.ndarray, actions) -> Action:
    best = np.max(scores)
    tied = [a for s, a in zip(scores, actions) if s == best]
    return min(tied, key=lambda a: a.uid)


def next_action(model: PosteriorModel, candidates, rng_seed: int, restrict_to=None) -> Action:
    """Thompson draw: sample one utility vector, deploy its argmax.

    Ties (e.g. a degenerate draw) break toward the lowest canonical id.
    `restrict_to` limits the argmax to a subset of the candidates (the draw
    is still joint over all of them).
    """
    if not candidates:
        raise ValueError("empty candidate set")
    if tuple(a.uid for a in candidates) != model.action_ids:
        raise ValueError("candidate ordering disagrees with the posterior model")
    draw = posterior_sample(model, rng_seed)
    if restrict_to is not None:
        allowed = {a.uid for a in restrict_to}
        pairs = [(s, a) for s, a in zip(draw, candidates) if a.uid in allowed]
        if not pairs:
            raise ValueError("restriction excludes every candidate")
        scores = np.array([s for s, _ in pairs])
        return _argmax_lowest_id(scores, [a for _, a in pairs])
    return _argmax_lowest_id(draw, candidates)


def believed_best(model: PosteriorModel, visited) -> Action:
    """Argmax of the posterior mean over *visited* actions only."""
    if not visited:
        raise ValueError("no visited actions")
    idx = [model.index_of(a.uid) for a in visited]
    return _argmax_lowest_id(model.mean[idx], visited)


def refresh_candidates(
    cset: CandidateSet, grid: ActionGrid, anchor: Action, rng_seed: int
) -> CandidateSet:
    """New random line through `anchor`, unioned with the visited set."""
    line = grid.random_line_subset(anchor, rng_seed)
    return CandidateSet(visited=list(cset.visited), line=line)
