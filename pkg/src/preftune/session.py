"""Learning-loop orchestration: deploy, collect feedback, infer, select.

A session is a fold over an append-only JSON-lines event log; replaying the
log with the same seed reproduces every posterior fit and every selection
decision exactly.  Batch mode drives many seeded sessions against the
synthetic oracle and reports convergence curves.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .action_space import ActionGrid, DimensionSpec, build_grid, load_grid
from .acquisition import CandidateSet, believed_best, next_action, refresh_candidates
from .clf_plant import EpisodeConfig, EpisodeMetrics, gains_from_action, simulate_episode
from .preference_gp import (
    FeedbackDataset,
    KernelConfig,
    LikelihoodConfig,
    laplace_fit,
)
from .synthetic_oracle import make_oracle, synthetic_ordinal, synthetic_preference

__all__ = [
    "SessionConfig",
    "FeedbackEvent",
    "Session",
    "SessionError",
    "ConvergenceReport",
    "run_batch",
    "plant_autorater_feedback",
    "write_curves_csv",
]

# purpose codes for deterministic per-iteration seed derivation
_SEED_FIRST, _SEED_LINE, _SEED_THOMPSON, _SEED_RANDOM, _SEED_ORACLE = range(5)


class SessionError(RuntimeError):
    pass


@dataclass
class SessionConfig:
    """Everything needed to reproduce a session from its seed."""

    budget: int = 50
    seed: int = 0
    grid_file: str | None = None
    dimensions: list | None = None  # [[name, lower, upper, count], ...]
    feedback_mode: str = "pref+ord"  # "pref" | "pref+ord"
    feedback_source: str = "human"  # "human" | "synthetic" | "autorater"
    selection: str = "thompson"  # "thompson" | "random"
    line_only: bool = True  # Thompson argmax over the line only, not visited ∪ line
    signal_variance: float = 1.0
    lengthscale: float = 0.85
    jitter: float = 1e-6
    pref_noise: float = 0.15
    ordinal_noise: float = 1.0
    thresholds: list = field(default_factory=lambda: [-1.0, 1.0])  # interior only
    oracle: dict = field(default_factory=dict)  # optimum_indices, correct_prob
    episode: dict = field(default_factory=dict)  # profile, duration, dt, controller, ...
    autorater: dict = field(default_factory=dict)  # weights, good/bad score thresholds
    log_path: str | None = None

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.feedback_mode not in ("pref", "pref+ord"):
            raise ValueError(f"unknown feedback_mode {self.feedback_mode!r}")
        if self.feedback_source not in ("human", "synthetic", "autorater"):
            raise ValueError(f"unknown feedback_source {self.feedback_source!r}")
        if self.selection not in ("thompson", "random"):
            raise ValueError(f"unknown selection {self.selection!r}")
        if self.grid_file is None and not self.dimensions:
            raise ValueError("config needs grid_file or inline dimensions")

    def build_grid(self) -> ActionGrid:
        if self.grid_file is not None:
            return load_grid(self.grid_file)
        return build_grid([DimensionSpec(n, float(lo), float(hi), int(c))
                           for n, lo, hi, c in self.dimensions])

    def kernel_config(self, grid: ActionGrid) -> KernelConfig:
        return KernelConfig(
            signal_variance=self.signal_variance,
            lengthscales=(self.lengthscale,) * grid.ndim,
            jitter=self.jitter,
        )

    def likelihood_config(self) -> LikelihoodConfig:
        return LikelihoodConfig(
            pref_noise=self.pref_noise,
            ordinal_noise=self.ordinal_noise,
            thresholds=(-np.inf, *map(float, self.thresholds), np.inf),
        )

    def episode_config(self) -> EpisodeConfig:
        ep = self.episode
        return EpisodeConfig(
            dt=float(ep.get("dt", 1e-3)),
            controller=ep.get("controller", "delta"),
            q0_offset=tuple(ep.get("q0_offset", (0.25, -0.2))),
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        return cls(**d)

    @classmethod
    def from_json_file(cls, path) -> "SessionConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise SessionError(f"unreadable session config {path}: {exc}") from exc


@dataclass
class FeedbackEvent:
    """One round of operator (or stand-in) feedback for the current action."""

    preference: str | None = None  # "new" | "old"
    ordinal: int | None = None
    skip: bool = False
    note: str = ""
    timestamp: float = field(default_factory=time.time)

    def __post_init__(self):
        if self.preference not in (None, "new", "old"):
            raise ValueError(f"preference must be 'new', 'old', or absent, got {self.preference!r}")
        if not self.skip and self.preference is None and self.ordinal is None:
            raise ValueError("event needs a preference or an ordinal unless it is a skip")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FeedbackEvent":
        return cls(**d)


def _seed_for(master: int, iteration: int, purpose: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master, iteration, purpose]))


def _checksum(kind: str, payload: dict) -> str:
    blob = json.dumps([kind, payload], sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


class Session:
    """Single tuning session: holds grid, dataset, posterior, and history."""

    def __init__(self, config: SessionConfig):
        self.config = config
        self.grid = config.build_grid()
        self.kcfg = config.kernel_config(self.grid)
        self.lcfg = config.likelihood_config()
        self.dataset = FeedbackDataset()
        self.candidates = CandidateSet()
        self.iteration = 0
        self.completed = False
        self.previous_action = None
        self.model = None
        self.best_history = []  # (iteration, best_uid, best_mu)
        self._log_file = None
        self._metrics_cache = {}

        rng = _seed_for(config.seed, 0, _SEED_FIRST)
        self.current_action = self.grid.random_action(rng)
        self.candidates.mark_visited(self.current_action)
        self.candidates = refresh_candidates(
            self.candidates, self.grid, self.current_action,
            _seed_for(config.seed, 0, _SEED_LINE).integers(2**32),
        )
        self._fit()

    # -- construction ------------------------------------------------------

    @classmethod
    def start(cls, config: SessionConfig) -> "Session":
        session = cls(config)
        if config.log_path:
            session._open_log(config.log_path)
            session._append_event("start", config.to_dict())
        return session

    @classmethod
    def load(cls, log_path) -> "Session":
        """Rebuild a session by folding its event log; resumes appending."""
        events = read_event_log(log_path)
        if not events or events[0][0] != "start":
            raise SessionError(f"{log_path}: log does not begin with a start event")
        config = SessionConfig.from_dict(events[0][1])
        config.log_path = str(log_path)
        session = cls(config)
        for kind, payload in events[1:]:
            if kind == "feedback":
                session.submit_feedback(FeedbackEvent.from_dict(payload), _persist=False)
            else:
                raise SessionError(f"unknown event type {kind!r} in log")
        session._open_log(log_path)
        return session

    def _open_log(self, path):
        self._log_file = open(path, "a", encoding="utf-8")

    def _append_event(self, kind: str, payload: dict):
        if self._log_file is None:
            return
        record = {
            "type": kind,
            "payload": payload,
            "ts": time.time(),
            "checksum": _checksum(kind, payload),
        }
        self._log_file.write(json.dumps(record, sort_keys=True) + "\n")
        self._log_file.flush()
        os.fsync(self._log_file.fileno())

    # -- the loop ----------------------------------------------------------

    def _fit(self):
        self.model = laplace_fit(self.candidates.union, self.dataset, self.kcfg, self.lcfg)

    def submit_feedback(self, event: FeedbackEvent, _persist: bool = True) -> None:
        """Fold one feedback event: extend datasets, re-fit, select the next action."""
        if self.completed:
            raise SessionError("session already completed")

        if (
            event.preference is not None
            and self.previous_action is not None
            and self.previous_action.uid != self.current_action.uid
        ):
            winner, loser = (
                (self.current_action, self.previous_action)
                if event.preference == "new"
                else (self.previous_action, self.current_action)
            )
            self.dataset.add_preference(winner.uid, loser.uid)
        if event.ordinal is not None and self.config.feedback_mode == "pref+ord":
            if not 1 <= event.ordinal <= self.lcfg.n_categories:
                raise SessionError(f"ordinal label {event.ordinal} out of range")
            self.dataset.add_ordinal(self.current_action.uid, event.ordinal)

        if _persist:
            self._append_event("feedback", event.to_dict())

        anchor = believed_best(self.model, self.candidates.visited)
        self.candidates = refresh_candidates(
            self.candidates, self.grid, anchor,
            int(_seed_for(self.config.seed, self.iteration + 1, _SEED_LINE).integers(2**32)),
        )
        self._fit()
        best = believed_best(self.model, self.candidates.visited)
        best_mu = float(self.model.mean[self.model.index_of(best.uid)])
        self.best_history.append((self.iteration, best.uid, best_mu))
        self.iteration += 1

        if self.iteration >= self.config.budget:
            self.completed = True
            return

        if self.config.selection == "random":
            rng = _seed_for(self.config.seed, self.iteration, _SEED_RANDOM)
            chosen = self.grid.random_action(rng)
        else:
            seed = int(_seed_for(self.config.seed, self.iteration, _SEED_THOMPSON).integers(2**32))
            pool = self.candidates.union
            if self.config.line_only:
                # inference still covers the union; only the argmax is
                # restricted to the current line
                line_ids = {a.uid for a in self.candidates.line}
                pool = [a for a in pool if a.uid in line_ids]
            chosen = next_action(self.model, self.candidates.union, seed, restrict_to=pool)
        self.previous_action = self.current_action
        self.current_action = chosen
        self.candidates.mark_visited(chosen)
        # chosen may be new: refresh union ordering for the next fit
        self._fit()

    def believed_best_action(self):
        return believed_best(self.model, self.candidates.visited)

    # -- plant episodes ----------------------------------------------------

    def episode_metrics(self, action) -> EpisodeMetrics:
        """Run (and cache) one plant episode for an action."""
        if action.uid not in self._metrics_cache:
            ep = self.config.episode
            gains = gains_from_action(
                action,
                profile=ep.get("profile", "toy"),
                torque_limit=float(ep.get("torque_limit", 80.0)),
                epsilon=float(ep.get("epsilon", 0.15)),
                w_vdot=float(ep.get("w_vdot", 2.0)),
            )
            self._metrics_cache[action.uid] = simulate_episode(
                gains, self.config.episode_config(), float(ep.get("duration", 1.5))
            )
        return self._metrics_cache[action.uid]

    # -- automatic feedback sources ---------------------------------------

    def auto_feedback(self, oracle_cfg=None) -> FeedbackEvent:
        """Generate this iteration's feedback from the configured source."""
        seed = int(_seed_for(self.config.seed, self.iteration, _SEED_ORACLE).integers(2**32))
        if self.config.feedback_source == "synthetic":
            if oracle_cfg is None:
                raise SessionError("synthetic feedback needs an oracle config")
            pref = None
            if (
                self.previous_action is not None
                and self.previous_action.uid != self.current_action.uid
            ):
                rec = synthetic_preference(
                    self.current_action, self.previous_action, oracle_cfg, seed
                )
                pref = "new" if rec.winner_id == self.current_action.uid else "old"
            ordinal = None
            if self.config.feedback_mode == "pref+ord":
                ordinal = synthetic_ordinal(
                    self.current_action, oracle_cfg, self.lcfg, seed + 1
                ).label
            if pref is None and ordinal is None:
                return FeedbackEvent(skip=True)  # first iteration in pref-only mode
            return FeedbackEvent(preference=pref, ordinal=ordinal)
        if self.config.feedback_source == "autorater":
            new_metrics = self.episode_metrics(self.current_action)
            old_metrics = (
                self.episode_metrics(self.previous_action)
                if self.previous_action is not None
                else None
            )
            return plant_autorater_feedback(
                new_metrics, old_metrics, rng_seed=seed, **self.config.autorater
            )
        raise SessionError(f"no automatic feedback for source {self.config.feedback_source!r}")

    # -- views -------------------------------------------------------------

    def summary(self) -> dict:
        names = [d.name for d in self.grid.dims]
        best = self.believed_best_action() if self.candidates.visited else None
        latest = self._metrics_cache.get(self.current_action.uid)
        return {
            "iteration": self.iteration,
            "budget": self.config.budget,
            "completed": self.completed,
            "dimension_names": names,
            "current_action": _action_view(self.current_action),
            "previous_action": _action_view(self.previous_action),
            "believed_best": _action_view(best),
            "latest_metrics": _metrics_view(latest),
            "history": [
                {"iteration": i, "best_id": uid, "best_mu": mu}
                for i, uid, mu in self.best_history
            ],
            "ordinals": [
                {"action_id": r.action_id, "label": r.label} for r in self.dataset.ordinals
            ],
        }

    def posterior_view(self) -> dict:
        visited_ids = [a.uid for a in self.candidates.visited]
        idx = [self.model.index_of(uid) for uid in visited_ids]
        std = self.model.uncertainty()
        return {
            "action_ids": visited_ids,
            "mean": [float(self.model.mean[i]) for i in idx],
            "std": [float(std[i]) for i in idx],
        }

    def close(self):
        if self._log_file is not None:
            self._log_file.close()
            self._log_file = None


def _action_view(action):
    if action is None:
        return None
    return {
        "id": action.uid,
        "indices": list(action.indices),
        "values": list(action.values),
    }


def _metrics_view(m):
    if m is None:
        return None
    return {
        "tracking_rms": m.tracking_rms,
        "torque_chatter": m.torque_chatter,
        "saturation_frac": m.saturation_frac,
        "vdot_violation": m.vdot_violation,
        "failed": m.failed,
    }


def read_event_log(log_path) -> list:
    """Parse a JSONL event log, verifying checksums.

    A corrupt or truncated final line (interrupted write) is dropped; a bad
    checksum anywhere else is an error.
    """
    lines = Path(log_path).read_text().splitlines()
    events = []
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            kind, payload = record["type"], record["payload"]
            if record["checksum"] != _checksum(kind, payload):
                raise ValueError("checksum mismatch")
        except (ValueError, KeyError) as exc:
            if i == len(lines) - 1:
                break  # interrupted final write; the event was never acknowledged
            raise SessionError(f"{log_path}:{i + 1}: corrupt event ({exc})") from exc
        events.append((kind, payload))
    return events


# ---------------------------------------------------------------------------
# Autorater: a stand-in human scoring episode metrics.

_AUTORATER_WEIGHTS = (1.0, 0.1, 0.5, 1e-4)


def autorater_score(metrics: EpisodeMetrics, weights=_AUTORATER_WEIGHTS) -> float:
    w1, w2, w3, w4 = weights
    return -(
        w1 * metrics.tracking_rms
        + w2 * metrics.torque_chatter
        + w3 * metrics.saturation_frac
        + w4 * metrics.vdot_violation
    )


def plant_autorater_feedback(
    metrics_new: EpisodeMetrics,
    metrics_old: EpisodeMetrics | None,
    weights=_AUTORATER_WEIGHTS,
    good_score: float = -0.08,
    bad_score: float = -0.5,
    rng_seed: int = 0,
) -> FeedbackEvent:
    """Score both episodes and emit the induced preference and ordinal label.

    Identical scores flip a fair (seeded) coin; the ordinal comes from fixed
    score thresholds.
    """
    score_new = autorater_score(metrics_new, weights)
    pref = None
    if metrics_old is not None:
        score_old = autorater_score(metrics_old, weights)
        if score_new > score_old:
            pref = "new"
        elif score_new < score_old:
            pref = "old"
        else:
            pref = "new" if np.random.default_rng(rng_seed).random() < 0.5 else "old"
    if score_new >= good_score:
        ordinal = 3
    elif score_new <= bad_score:
        ordinal = 1
    else:
        ordinal = 2
    return FeedbackEvent(preference=pref, ordinal=ordinal)


# ---------------------------------------------------------------------------
# Batch simulation.


@dataclass
class ConvergenceReport:
    """Per-iteration believed-best error, averaged over seeded runs."""

    mode: str
    errors: np.ndarray  # shape (runs, iterations)

    @property
    def mean(self) -> np.ndarray:
        return self.errors.mean(axis=0)

    @property
    def stderr(self) -> np.ndarray:
        n = self.errors.shape[0]
        return self.errors.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(self.mean)


def _normalized_error(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a.normalized) - np.asarray(b.normalized)))


def run_batch(config: SessionConfig, runs: int, mode_label: str | None = None) -> ConvergenceReport:
    """Repeat seeded synthetic-feedback sessions and collect error curves.

    Each run draws its own hidden optimum (unless pinned in the config) and
    records the believed-best error after every iteration.
    """
    if config.feedback_source not in ("synthetic", "autorater"):
        raise SessionError("batch mode needs a synthetic or autorater feedback source")
    label = mode_label or f"{config.feedback_mode}/{config.selection}"
    errors = np.zeros((runs, config.budget))
    for run in range(runs):
        run_seed = int(np.random.SeedSequence([config.seed, run]).generate_state(1)[0])
        cfg = SessionConfig.from_dict({**config.to_dict(), "seed": run_seed, "log_path": None})
        session = Session(cfg)
        oracle_cfg = None
        if cfg.feedback_source == "synthetic":
            opt_idx = cfg.oracle.get("optimum_indices")
            optimum = (
                session.grid.action(opt_idx)
                if opt_idx
                else session.grid.random_action(_seed_for(run_seed, 0, _SEED_ORACLE))
            )
            oracle_cfg = make_oracle(
                session.grid, optimum, correct_prob=float(cfg.oracle.get("correct_prob", 0.9))
            )
        for it in range(cfg.budget):
            session.submit_feedback(session.auto_feedback(oracle_cfg), _persist=False)
            best = session.believed_best_action()
            target = oracle_cfg.optimum if oracle_cfg is not None else best
            errors[run, it] = _normalized_error(best, target)
    return ConvergenceReport(mode=label, errors=errors)


def write_curves_csv(reports, path):
    """Emit convergence curves: iteration, mode, mean_error, stderr."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "mode", "mean_error", "stderr"])
        for report in reports:
            mean, stderr = report.mean, report.stderr
            for it in range(len(mean)):
                writer.writerow([it + 1, report.mode, f"{mean[it]:.10g}", f"{stderr[it]:.10g}"])
