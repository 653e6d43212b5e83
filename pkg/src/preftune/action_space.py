"""Discretized gain search space: grids, actions, and random line subsets."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "DimensionSpec",
    "Action",
    "ActionGrid",
    "build_grid",
    "load_grid",
    "parse_grid_config",
]


@dataclass(frozen=True)
class DimensionSpec:
    """One tunable gain dimension: inclusive bounds and number of grid points."""

    name: str
    lower: float
    upper: float
    count: int

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(
                f"dimension {self.name!r}: lower ({self.lower}) must be < upper ({self.upper})"
            )
        if self.count < 2:
            raise ValueError(f"dimension {self.name!r}: count must be >= 2, got {self.count}")

    def value_at(self, index: int) -> float:
        """Grid value at `index`, evenly spaced and inclusive of both bounds."""
        if not 0 <= index < self.count:
            raise IndexError(f"index {index} out of range for dimension {self.name!r}")
        return self.lower + index * (self.upper - self.lower) / (self.count - 1)


@dataclass(frozen=True)
class Action:
    """A concrete point of the gain grid.

    `values` are the gains in their native units, `normalized` the same point
    with every dimension rescaled to [0, 1] by its bounds.  `uid` is the
    mixed-radix encoding of `indices` and is the canonical dedup key.
    """

    indices: tuple
    values: tuple
    normalized: tuple
    uid: int

    def __eq__(self, other):
        return isinstance(other, Action) and self.uid == other.uid and self.indices == other.indices

    def __hash__(self):
        return hash((self.uid, self.indices))


@dataclass(frozen=True)
class ActionGrid:
    """The full discretized search space: an ordered list of dimensions."""

    dims: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if len(self.dims) < 1:
            raise ValueError("grid needs at least one dimension")

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def counts(self) -> tuple:
        return tuple(d.count for d in self.dims)

    @property
    def cardinality(self) -> int:
        return int(np.prod([d.count for d in self.dims], dtype=object))

    def action(self, indices) -> Action:
        """Build the Action at a multi-index."""
        indices = tuple(int(i) for i in indices)
        if len(indices) != self.ndim:
            raise IndexError(f"expected {self.ndim} indices, got {len(indices)}")
        values = tuple(d.value_at(i) for d, i in zip(self.dims, indices))
        normalized = tuple(i / (d.count - 1) for d, i in zip(self.dims, indices))
        return Action(indices, values, normalized, self.canonical_id(indices))

    def canonical_id(self, indices) -> int:
        """Mixed-radix (row-major) encoding of a multi-index; injective."""
        uid = 0
        for d, i in zip(self.dims, indices):
            if not 0 <= i < d.count:
                raise IndexError(f"index {i} out of range for dimension {d.name!r}")
            uid = uid * d.count + int(i)
        return uid

    def decode_id(self, uid: int) -> tuple:
        """Inverse of canonical_id."""
        indices = []
        for d in reversed(self.dims):
            uid, i = divmod(uid, d.count)
            indices.append(i)
        return tuple(reversed(indices))

    def action_from_id(self, uid: int) -> Action:
        return self.action(self.decode_id(uid))

    def contains(self, action: Action) -> bool:
        try:
            return self.action(action.indices) == action
        except IndexError:
            return False

    def random_action(self, rng: np.random.Generator) -> Action:
        indices = tuple(int(rng.integers(d.count)) for d in self.dims)
        return self.action(indices)

    def random_line_subset(self, anchor: Action, rng_seed: int) -> list:
        """All grid points on a random line through `anchor`, anchor included.

        With probability 1/2 the line is coordinate-aligned (uniformly random
        axis); otherwise a random direction with per-dimension integer steps in
        {-1, 0, 1} (at least one nonzero) is walked both ways until it leaves
        the grid.  Deterministic for a fixed seed.
        """
        if not self.contains(anchor):
            raise ValueError("anchor is not a point of this grid")
        rng = np.random.default_rng(rng_seed)
        if rng.random() < 0.5:
            axis = int(rng.integers(self.ndim))
            step = np.zeros(self.ndim, dtype=int)
            step[axis] = 1
        else:
            step = rng.integers(-1, 2, size=self.ndim)
            while not step.any():
                step = rng.integers(-1, 2, size=self.ndim)
        base = np.array(anchor.indices, dtype=int)
        counts = np.array(self.counts, dtype=int)

        def in_range(idx):
            return bool(np.all(idx >= 0) and np.all(idx < counts))

        points = [anchor]
        for direction in (step, -step):
            idx = base + direction
            while in_range(idx):
                points.append(self.action(idx))
                idx = idx + direction
        points.sort(key=lambda a: a.uid)
        return points


def build_grid(specs) -> ActionGrid:
    """Assemble an ActionGrid from an ordered list of DimensionSpec."""
    return ActionGrid(tuple(specs))


def parse_grid_config(text: str) -> ActionGrid:
    """Parse the grid config grammar.

    One dimension per line: ``name lower upper count`` separated by
    whitespace, in search-space order.  Blank lines and ``#`` comments are
    ignored.
    """
    specs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 'name lower upper count', got {raw!r}")
        name, lower, upper, count = parts
        specs.append(DimensionSpec(name, float(lower), float(upper), int(count)))
    if not specs:
        raise ValueError("grid config defines no dimensions")
    return build_grid(specs)


def load_grid(path) -> ActionGrid:
    return parse_grid_config(Path(path).read_text())
