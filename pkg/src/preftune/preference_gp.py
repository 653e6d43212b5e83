"""Gaussian-process preference learning with a Laplace-approximate posterior.

Latent utilities over a candidate set get a squared-exponential Gaussian
prior (on bound-normalized coordinates) and are observed only through
pairwise preferences and coarse ordinal labels, both passed through a
logistic link.  The posterior mode is found by damped Newton iteration and
the covariance is the inverse Hessian at the mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit, log_expit

from .action_space import Action

__all__ = [
    "KernelConfig",
    "LikelihoodConfig",
    "PreferenceRecord",
    "OrdinalRecord",
    "FeedbackDataset",
    "PosteriorModel",
    "LaplaceError",
    "kernel",
    "prior_covariance",
    "link",
    "preference_likelihood",
    "ordinal_likelihood",
    "neg_log_posterior",
    "laplace_fit",
    "posterior_sample",
    "posterior_samples",
]

_LIKELIHOOD_FLOOR = 1e-300


class LaplaceError(RuntimeError):
    """Newton iteration failed to reach the posterior mode."""


@dataclass(frozen=True)
class KernelConfig:
    """Squared-exponential kernel hyperparameters on normalized coordinates."""

    signal_variance: float = 1.0
    lengthscales: tuple = ()
    jitter: float = 1e-6

    def __post_init__(self):
        if self.signal_variance <= 0:
            raise ValueError("signal_variance must be positive")
        if any(l <= 0 for l in self.lengthscales):
            raise ValueError("lengthscales must be positive")
        if self.jitter < 0:
            raise ValueError("jitter must be nonnegative")

    @classmethod
    def default(cls, ndim: int) -> "KernelConfig":
        return cls(signal_variance=1.0, lengthscales=(0.15,) * ndim, jitter=1e-6)


@dataclass(frozen=True)
class LikelihoodConfig:
    """Noise scales and ordinal thresholds for the two feedback channels.

    Thresholds must be strictly increasing with -inf first and +inf last;
    the number of ordinal categories is ``len(thresholds) - 1``.
    """

    pref_noise: float = 0.2
    ordinal_noise: float = 1.0
    thresholds: tuple = (-np.inf, -1.0, 1.0, np.inf)

    def __post_init__(self):
        if self.pref_noise <= 0 or self.ordinal_noise <= 0:
            raise ValueError("noise scales must be positive")
        b = self.thresholds
        if len(b) < 2 or b[0] != -np.inf or b[-1] != np.inf:
            raise ValueError("thresholds must start at -inf and end at +inf")
        if any(lo >= hi for lo, hi in zip(b, b[1:])):
            raise ValueError("thresholds must be strictly increasing")

    @property
    def n_categories(self) -> int:
        return len(self.thresholds) - 1


@dataclass(frozen=True)
class PreferenceRecord:
    """One pairwise comparison: `winner_id` was preferred over `loser_id`."""

    winner_id: int
    loser_id: int

    def __post_init__(self):
        if self.winner_id == self.loser_id:
            raise ValueError("a preference needs two distinct actions")


@dataclass(frozen=True)
class OrdinalRecord:
    """One coarse absolute rating of an action (label in 1..N)."""

    action_id: int
    label: int


@dataclass
class FeedbackDataset:
    """All user feedback collected so far."""

    preferences: list = field(default_factory=list)
    ordinals: list = field(default_factory=list)

    def __len__(self):
        return len(self.preferences) + len(self.ordinals)

    def add_preference(self, winner_id: int, loser_id: int):
        self.preferences.append(PreferenceRecord(winner_id, loser_id))

    def add_ordinal(self, action_id: int, label: int):
        self.ordinals.append(OrdinalRecord(action_id, label))


@dataclass
class PosteriorModel:
    """Laplace-approximate Gaussian over latent utilities of the candidates."""

    action_ids: tuple
    mean: np.ndarray
    covariance: np.ndarray
    converged: bool = True
    iterations: int = 0

    def __post_init__(self):
        n = len(self.action_ids)
        if self.mean.shape != (n,) or self.covariance.shape != (n, n):
            raise ValueError("posterior dimensions disagree with candidate count")

    def uncertainty(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    def index_of(self, action_id: int) -> int:
        return self.action_ids.index(action_id)


def kernel(a: Action, b: Action, cfg: KernelConfig) -> float:
    """Squared-exponential covariance between two actions.

    Distances are taken in bound-normalized coordinates, scaled per dimension
    by the configured lengthscales.
    """
    if len(a.normalized) != len(b.normalized):
        raise ValueError("actions have different dimensionality")
    ls = np.asarray(cfg.lengthscales if cfg.lengthscales else (0.15,) * len(a.normalized))
    d = (np.asarray(a.normalized) - np.asarray(b.normalized)) / ls
    return float(cfg.signal_variance * np.exp(-0.5 * np.dot(d, d)))


def prior_covariance(actions, cfg: KernelConfig) -> np.ndarray:
    """Gram matrix over the candidates plus jitter on the diagonal."""
    if not actions:
        raise ValueError("need at least one action")
    ids = [a.uid for a in actions]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate actions in candidate set")
    ls = np.asarray(cfg.lengthscales if cfg.lengthscales else (0.15,) * len(actions[0].normalized))
    x = np.array([a.normalized for a in actions]) / ls
    sq = np.sum((x[:, None, :] - x[None, :, :]) ** 2, axis=-1)
    return cfg.signal_variance * np.exp(-0.5 * sq) + cfg.jitter * np.eye(len(actions))


def link(x) -> float:
    """Logistic sigmoid 1 / (1 + exp(-x)); the link for both likelihoods."""
    return expit(x)


def preference_likelihood(f_win: float, f_lose: float, pref_noise: float) -> float:
    """P(winner preferred | latent utilities) under logistic noise."""
    if pref_noise <= 0:
        raise ValueError("pref_noise must be positive")
    return float(link((f_win - f_lose) / pref_noise))


def ordinal_likelihood(f: float, label: int, cfg: LikelihoodConfig) -> float:
    """P(ordinal label | latent utility): difference of links at the bracketing thresholds."""
    if not 1 <= label <= cfg.n_categories:
        raise ValueError(f"label {label} outside 1..{cfg.n_categories}")
    b = cfg.thresholds
    return float(link((b[label] - f) / cfg.ordinal_noise) - link((b[label - 1] - f) / cfg.ordinal_noise))


def _dataset_indices(data: FeedbackDataset, action_ids):
    lookup = {uid: i for i, uid in enumerate(action_ids)}
    try:
        win = np.array([lookup[r.winner_id] for r in data.preferences], dtype=int)
        lose = np.array([lookup[r.loser_id] for r in data.preferences], dtype=int)
        ords = np.array([lookup[r.action_id] for r in data.ordinals], dtype=int)
    except KeyError as exc:
        raise ValueError(f"feedback references unknown action id {exc.args[0]}") from exc
    labels = np.array([r.label for r in data.ordinals], dtype=int)
    return win, lose, ords, labels


def neg_log_posterior(f, data: FeedbackDataset, sigma, lcfg: LikelihoodConfig, action_ids):
    """Negative log posterior (up to a constant), its gradient and Hessian.

    `action_ids` gives the candidate ordering that maps feedback record ids
    onto entries of `f`.  The Hessian is the prior precision plus the
    (positive-semidefinite) likelihood curvature.
    """
    f = np.asarray(f, dtype=float)
    n = len(f)
    sigma = np.asarray(sigma, dtype=float)
    try:
        chol = cho_factor(sigma)
    except np.linalg.LinAlgError as exc:
        raise ValueError("prior covariance is singular") from exc
    prior_prec = cho_solve(chol, np.eye(n))
    sif = cho_solve(chol, f)

    value = 0.5 * float(f @ sif)
    grad = sif.copy()
    hess = prior_prec.copy()

    win, lose, ords, labels = _dataset_indices(data, action_ids)

    if len(win):
        z = (f[win] - f[lose]) / lcfg.pref_noise
        value -= float(np.sum(log_expit(z)))
        # d(-log phi(z))/dz = -(1 - phi(z)) = -phi(-z)
        gz = -expit(-z) / lcfg.pref_noise
        np.add.at(grad, win, gz)
        np.add.at(grad, lose, -gz)
        s = expit(z) * expit(-z) / lcfg.pref_noise**2
        np.add.at(hess, (win, win), s)
        np.add.at(hess, (lose, lose), s)
        np.add.at(hess, (win, lose), -s)
        np.add.at(hess, (lose, win), -s)

    if len(ords):
        b = np.asarray(lcfg.thresholds)
        co = lcfg.ordinal_noise
        zr = (b[labels] - f[ords]) / co
        zl = (b[labels - 1] - f[ords]) / co
        pr, pl = expit(zr), expit(zl)
        like = np.maximum(pr - pl, _LIKELIHOOD_FLOOR)
        value -= float(np.sum(np.log(like)))
        dpr = pr * (1.0 - pr)
        dpl = pl * (1.0 - pl)
        dlike = -(dpr - dpl) / co  # dL/df
        d2like = (dpr * (1.0 - 2.0 * pr) - dpl * (1.0 - 2.0 * pl)) / co**2
        g = -dlike / like
        h = (dlike / like) ** 2 - d2like / like
        np.add.at(grad, ords, g)
        np.add.at(hess, (ords, ords), h)

    return value, grad, hess


def laplace_fit(
    actions,
    data: FeedbackDataset,
    kcfg: KernelConfig,
    lcfg: LikelihoodConfig,
    tol: float = 1e-6,
    max_iter: int = 100,
) -> PosteriorModel:
    """Fit the Laplace-approximate posterior over the candidate actions.

    Damped Newton iteration (step halving on the objective) to the mode,
    then covariance = inverse Hessian at the mode.  Raises LaplaceError with
    diagnostics if the gradient max-norm has not reached `tol` after
    `max_iter` iterations.
    """
    action_ids = tuple(a.uid for a in actions)
    sigma = prior_covariance(actions, kcfg)
    n = len(actions)
    f = np.zeros(n)

    value, grad, hess = neg_log_posterior(f, data, sigma, lcfg, action_ids)
    iterations = 0
    while np.max(np.abs(grad)) > tol:
        if iterations >= max_iter:
            raise LaplaceError(
                f"no convergence after {max_iter} Newton iterations "
                f"(gradient max-norm {np.max(np.abs(grad)):.3e}, {len(data)} feedback items, "
                f"{n} candidates)"
            )
        step = cho_solve(cho_factor(hess), -grad)
        t = 1.0
        while t > 1e-12:
            trial = f + t * step
            tv, tg, th = neg_log_posterior(trial, data, sigma, lcfg, action_ids)
            if tv <= value:
                f, value, grad, hess = trial, tv, tg, th
                break
            t *= 0.5
        else:
            raise LaplaceError(
                f"line search stalled at iteration {iterations} (value {value:.6e})"
            )
        iterations += 1

    covariance = cho_solve(cho_factor(hess), np.eye(n))
    covariance = 0.5 * (covariance + covariance.T)
    return PosteriorModel(action_ids, f, covariance, converged=True, iterations=iterations)


def _sample_factor(cov: np.ndarray) -> np.ndarray:
    """Cholesky factor of a posterior covariance, escalating jitter as needed."""
    if not np.any(cov):
        return np.zeros_like(cov)
    jitter = 0.0
    scale = np.max(np.diag(cov))
    for _ in range(10):
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(len(cov)))
        except np.linalg.LinAlgError:
            jitter = max(jitter * 10.0, 1e-12 * scale)
    raise LaplaceError("posterior covariance factorization failed after jitter escalation")


def posterior_sample(model: PosteriorModel, rng_seed: int) -> np.ndarray:
    """One joint draw from the posterior Gaussian; deterministic per seed."""
    return posterior_samples(model, rng_seed, 1)[0]


def posterior_samples(model: PosteriorModel, rng_seed: int, n_draws: int) -> np.ndarray:
    """Batch of joint posterior draws, shape (n_draws, n_candidates)."""
    rng = np.random.default_rng(rng_seed)
    factor = _sample_factor(model.covariance)
    z = rng.standard_normal((n_draws, len(model.mean)))
    return model.mean[None, :] + z @ factor.T
