"""Desk-scale CLF-QP control stack and its simulated plant.

A gain action parameterizes (Q, epsilon, w_vdot).  The Riccati solution P
built from Q yields a rapidly exponentially stabilizing Lyapunov function
over the relative-degree-2 output dynamics; two quadratic-program
controllers (relaxed-constraint and cost-penalty variants) command torques
on a fully actuated two-link arm tracking a smooth periodic reference.
Episodes reduce a gain vector to quality metrics the learner can judge.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_continuous_are

from .action_space import Action

__all__ = [
    "ClfGains",
    "ClfCertificate",
    "PlantState",
    "EpisodeMetrics",
    "TwoLinkArm",
    "PeriodicReference",
    "EpisodeConfig",
    "solve_care",
    "clf_value",
    "output_dynamics",
    "clf_qp_delta",
    "clf_qp_plus",
    "solve_box_qp",
    "simulate_episode",
    "simulate_linear_output",
    "gains_from_action",
    "FAILURE_METRICS",
]


def _assert_pd(m: np.ndarray, name: str):
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"{name} must be symmetric positive definite") from exc


@dataclass
class ClfGains:
    """Controller parameterization: output weights, convergence rate, relaxation penalty, torque box."""

    Q: np.ndarray
    R: np.ndarray
    epsilon: float
    w_vdot: float
    u_min: np.ndarray
    u_max: np.ndarray

    def __post_init__(self):
        self.Q = np.asarray(self.Q, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        self.u_min = np.asarray(self.u_min, dtype=float)
        self.u_max = np.asarray(self.u_max, dtype=float)
        _assert_pd(self.Q, "Q")
        _assert_pd(self.R, "R")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.w_vdot <= 0:
            raise ValueError("w_vdot must be positive")
        if not np.all(self.u_min < self.u_max):
            raise ValueError("u_min must be elementwise below u_max")

    @property
    def n_outputs(self) -> int:
        return self.Q.shape[0] // 2


@dataclass
class ClfCertificate:
    """Riccati solution and the derived convergence-rate data."""

    P: np.ndarray
    P_eps: np.ndarray
    gamma: float
    epsilon: float

    @property
    def n_outputs(self) -> int:
        return self.P.shape[0] // 2


@dataclass
class PlantState:
    """Configuration, velocity, and phase of the simulated plant."""

    q: np.ndarray
    dq: np.ndarray
    phase: float = 0.0

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.dq = np.asarray(self.dq, dtype=float)
        if not (np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.dq))):
            raise ValueError("plant state must be finite")


@dataclass(frozen=True)
class EpisodeMetrics:
    """Measurable proxies for what an operator judges in one episode."""

    tracking_rms: float
    torque_chatter: float
    saturation_frac: float
    vdot_violation: float
    failed: bool = False

    def __post_init__(self):
        if self.tracking_rms < 0 or self.torque_chatter < 0 or self.vdot_violation < 0:
            raise ValueError("metrics must be nonnegative")
        if not 0.0 <= self.saturation_frac <= 1.0:
            raise ValueError("saturation_frac must lie in [0, 1]")


# Worst-case metrics assigned when an episode blows up (the desk-scale "fall").
FAILURE_METRICS = EpisodeMetrics(
    tracking_rms=1e6, torque_chatter=1e6, saturation_frac=1.0, vdot_violation=1e6, failed=True
)


def _fg(p: int):
    F = np.zeros((2 * p, 2 * p))
    F[:p, p:] = np.eye(p)
    G = np.zeros((2 * p, p))
    G[p:, :] = np.eye(p)
    return F, G


def solve_care(Q: np.ndarray, R: np.ndarray, epsilon: float = 1.0) -> ClfCertificate:
    """Solve the output-dynamics Riccati equation and build the certificate.

    The output dynamics are the stacked double integrators (eta = (y, dy)),
    so a diagonal Q and R decouple per output and admit the closed form
    p12 = sqrt(q1 r), p22 = sqrt(r (q2 + 2 p12)), p11 = p12 p22 / r; any
    other positive-definite pair falls back to a dense solver.  The residual
    of F'P + PF - P G R^-1 G' P + Q is checked below 1e-8.
    """
    Q = np.asarray(Q, dtype=float)
    R = np.asarray(R, dtype=float)
    _assert_pd(Q, "Q")
    _assert_pd(R, "R")
    p = Q.shape[0] // 2
    if Q.shape != (2 * p, 2 * p) or R.shape != (p, p):
        raise ValueError("Q must be 2p x 2p and R p x p")
    F, G = _fg(p)

    diagonal = (
        np.count_nonzero(Q - np.diag(np.diag(Q))) == 0
        and np.count_nonzero(R - np.diag(np.diag(R))) == 0
    )
    if diagonal:
        P = np.zeros((2 * p, 2 * p))
        for i in range(p):
            q1, q2, r = Q[i, i], Q[p + i, p + i], R[i, i]
            p12 = math.sqrt(q1 * r)
            p22 = math.sqrt(r * (q2 + 2.0 * p12))
            p11 = p12 * p22 / r
            P[i, i] = p11
            P[i, p + i] = P[p + i, i] = p12
            P[p + i, p + i] = p22
    else:
        P = solve_continuous_are(F, G, Q, R)
        P = 0.5 * (P + P.T)

    residual = F.T @ P + P @ F - P @ G @ np.linalg.solve(R, G.T @ P) + Q
    res_norm = float(np.linalg.norm(residual))
    if res_norm >= 1e-8:
        raise ValueError(f"Riccati residual {res_norm:.3e} exceeds tolerance")
    _assert_pd(P, "P")

    gamma = float(np.min(np.linalg.eigvalsh(Q)) / np.max(np.linalg.eigvalsh(P)))
    i_eps = np.diag(np.concatenate([np.full(p, 1.0 / epsilon), np.ones(p)]))
    return ClfCertificate(P=P, P_eps=i_eps @ P @ i_eps, gamma=gamma, epsilon=epsilon)


def clf_value(eta: np.ndarray, cert: ClfCertificate) -> float:
    """V(eta) = eta' I_eps P I_eps eta."""
    eta = np.asarray(eta, dtype=float)
    return float(eta @ cert.P_eps @ eta)


def _vdot_terms(eta: np.ndarray, cert: ClfCertificate):
    """Drift and input-gain of V̇ along the output dynamics: V̇ = drift + gain · nu."""
    p = cert.n_outputs
    F, G = _fg(p)
    drift = float(eta @ (F.T @ cert.P_eps + cert.P_eps @ F) @ eta)
    gain = 2.0 * (G.T @ cert.P_eps @ eta)
    return drift, gain


# ---------------------------------------------------------------------------
# Toy plant: fully actuated planar two-link arm.


@dataclass(frozen=True)
class TwoLinkArm:
    """Standard planar two-link arm; fully actuated, relative degree 2 everywhere."""

    m1: float = 1.0
    m2: float = 1.0
    l1: float = 0.5
    l2: float = 0.5
    lc1: float = 0.25
    lc2: float = 0.25
    i1: float = 0.02
    i2: float = 0.02
    gravity: float = 9.81

    def mass_matrix(self, q: np.ndarray) -> np.ndarray:
        c2 = math.cos(q[1])
        d11 = (
            self.m1 * self.lc1**2
            + self.i1
            + self.m2 * (self.l1**2 + self.lc2**2 + 2.0 * self.l1 * self.lc2 * c2)
            + self.i2
        )
        d12 = self.m2 * (self.lc2**2 + self.l1 * self.lc2 * c2) + self.i2
        d22 = self.m2 * self.lc2**2 + self.i2
        return np.array([[d11, d12], [d12, d22]])

    def bias(self, q: np.ndarray, dq: np.ndarray) -> np.ndarray:
        """Coriolis plus gravity torques: D qdd + bias = u."""
        h = -self.m2 * self.l1 * self.lc2 * math.sin(q[1])
        c = np.array(
            [
                h * dq[1] * dq[0] + h * (dq[0] + dq[1]) * dq[1],
                -h * dq[0] * dq[0],
            ]
        )
        g1 = (self.m1 * self.lc1 + self.m2 * self.l1) * self.gravity * math.cos(q[0])
        g1 += self.m2 * self.lc2 * self.gravity * math.cos(q[0] + q[1])
        g2 = self.m2 * self.lc2 * self.gravity * math.cos(q[0] + q[1])
        return c + np.array([g1, g2])

    def energy(self, q: np.ndarray, dq: np.ndarray) -> float:
        kinetic = 0.5 * float(dq @ self.mass_matrix(q) @ dq)
        potential = (self.m1 * self.lc1 + self.m2 * self.l1) * self.gravity * math.sin(q[0])
        potential += self.m2 * self.lc2 * self.gravity * math.sin(q[0] + q[1])
        return kinetic + potential

    def accel(self, q: np.ndarray, dq: np.ndarray, u: np.ndarray) -> np.ndarray:
        return np.linalg.solve(self.mass_matrix(q), u - self.bias(q, dq))


@dataclass(frozen=True)
class PeriodicReference:
    """Smooth periodic desired joint trajectory."""

    offsets: tuple = (0.6, 0.8)
    amplitudes: tuple = (0.35, 0.45)
    phases: tuple = (0.0, 1.1)
    period: float = 2.0

    def desired(self, phase: float):
        w = 2.0 * math.pi / self.period
        arg = np.asarray([w * phase + p for p in self.phases])
        q_d = np.asarray(self.offsets) + np.asarray(self.amplitudes) * np.sin(arg)
        dq_d = np.asarray(self.amplitudes) * w * np.cos(arg)
        ddq_d = -np.asarray(self.amplitudes) * w**2 * np.sin(arg)
        return q_d, dq_d, ddq_d


def output_dynamics(state: PlantState, plant: TwoLinkArm, ref: PeriodicReference, u=None):
    """Relative-degree-2 output terms at a state.

    Returns (L_f^2 y, L_g L_f y, eta, eta_dot); eta_dot requires a torque and
    is None when `u` is omitted.  The decoupling matrix is the inverse mass
    matrix, never singular for this plant.
    """
    q_d, dq_d, ddq_d = ref.desired(state.phase)
    y = state.q - q_d
    dy = state.dq - dq_d
    d_inv = np.linalg.inv(plant.mass_matrix(state.q))
    lf2y = -d_inv @ plant.bias(state.q, state.dq) - ddq_d
    eta = np.concatenate([y, dy])
    eta_dot = None
    if u is not None:
        ddy = lf2y + d_inv @ np.asarray(u, dtype=float)
        eta_dot = np.concatenate([dy, ddy])
    return lf2y, d_inv, eta, eta_dot


def feedback_linearizing_input(
    state: PlantState, plant: TwoLinkArm, ref: PeriodicReference, nu=None
) -> np.ndarray:
    """Torque rendering ddot(y) = nu (zero by default)."""
    lf2y, a, _, _ = output_dynamics(state, plant, ref)
    nu = np.zeros(len(lf2y)) if nu is None else np.asarray(nu, dtype=float)
    return np.linalg.solve(a, nu - lf2y)


# ---------------------------------------------------------------------------
# Exact small QPs.


def solve_box_qp(H: np.ndarray, g: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Minimize 1/2 u'Hu + g'u over a box, H positive definite.

    Exact active-set enumeration over box faces; intended for the toy
    plant's small torque dimension.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    m = len(g)

    if np.all(np.isinf(lo)) and np.all(np.isinf(hi)):
        return np.linalg.solve(H, -g)

    best_u, best_val = None, np.inf
    for faces in itertools.product((0, -1, 1), repeat=m):
        u = np.empty(m)
        fixed = np.array([f != 0 for f in faces])
        u[fixed] = np.where(np.array(faces)[fixed] < 0, lo[fixed], hi[fixed])
        if not np.all(np.isfinite(u[fixed])):
            continue  # cannot pin a coordinate at an infinite bound
        free = ~fixed
        if free.any():
            rhs = -(g[free] + H[np.ix_(free, fixed)] @ u[fixed]) if fixed.any() else -g[free]
            u[free] = np.linalg.solve(H[np.ix_(free, free)], rhs)
        if np.any(u < lo - 1e-9) or np.any(u > hi + 1e-9):
            continue
        grad = H @ u + g
        # KKT: multipliers at lower bounds nonnegative, at upper nonpositive
        ok = True
        for i, f in enumerate(faces):
            if f < 0 and grad[i] < -1e-9:
                ok = False
            if f > 0 and grad[i] > 1e-9:
                ok = False
        if not ok:
            continue
        val = 0.5 * float(u @ H @ u) + float(g @ u)
        if val < best_val:
            best_u, best_val = np.clip(u, lo, hi), val
    if best_u is None:
        raise RuntimeError("box QP enumeration found no KKT point")
    return best_u


def _qp_data(lf2y, a, eta, cert: ClfCertificate):
    drift, gain = _vdot_terms(eta, cert)
    c = a.T @ gain  # V̇ = e0 + c'u
    e0 = drift + float(gain @ lf2y)
    return c, e0


def clf_qp_delta_core(lf2y, a, eta, gains: ClfGains, cert: ClfCertificate):
    """Relaxed CLF-QP on prepared data: returns (u, delta).

    Minimizes ||lf2y + a u||^2 + w_vdot delta^2 subject to
    V̇(u) <= -(gamma/epsilon) V + delta and the torque box.  If the
    unrelaxed optimum already satisfies the decrease constraint the
    relaxation is exactly zero; otherwise the constraint is active and is
    substituted into the cost, leaving a strictly convex box QP.
    """
    a = np.asarray(a, dtype=float)
    lf2y = np.asarray(lf2y, dtype=float)
    c, e0 = _qp_data(lf2y, a, eta, cert)
    v = clf_value(eta, cert)
    rate = cert.gamma / cert.epsilon

    H0 = 2.0 * a.T @ a
    g0 = 2.0 * a.T @ lf2y
    u = solve_box_qp(H0, g0, gains.u_min, gains.u_max)
    slack = e0 + float(c @ u) + rate * v
    if slack <= 1e-12:
        return u, 0.0

    # Active constraint: delta = e0 + c'u + rate*v, penalized in the cost.
    k = e0 + rate * v
    H = H0 + 2.0 * gains.w_vdot * np.outer(c, c)
    g = g0 + 2.0 * gains.w_vdot * k * c
    u = solve_box_qp(H, g, gains.u_min, gains.u_max)
    delta = k + float(c @ u)
    return u, delta


def clf_qp_plus_core(lf2y, a, eta, gains: ClfGains, cert: ClfCertificate) -> np.ndarray:
    """Cost-penalty CLF-QP on prepared data: V̇ enters the objective linearly."""
    a = np.asarray(a, dtype=float)
    lf2y = np.asarray(lf2y, dtype=float)
    c, _ = _qp_data(lf2y, a, eta, cert)
    H = 2.0 * a.T @ a
    g = 2.0 * a.T @ lf2y + gains.w_vdot * c
    return solve_box_qp(H, g, gains.u_min, gains.u_max)


def clf_qp_delta(
    state: PlantState,
    gains: ClfGains,
    cert: ClfCertificate,
    plant: TwoLinkArm,
    ref: PeriodicReference,
):
    """Relaxed CLF-QP torque at a plant state; returns (u, delta)."""
    lf2y, a, eta, _ = output_dynamics(state, plant, ref)
    return clf_qp_delta_core(lf2y, a, eta, gains, cert)


def clf_qp_plus(
    state: PlantState,
    gains: ClfGains,
    cert: ClfCertificate,
    plant: TwoLinkArm,
    ref: PeriodicReference,
) -> np.ndarray:
    """Cost-penalty CLF-QP torque at a plant state."""
    lf2y, a, eta, _ = output_dynamics(state, plant, ref)
    return clf_qp_plus_core(lf2y, a, eta, gains, cert)


# ---------------------------------------------------------------------------
# Episodes.


@dataclass(frozen=True)
class EpisodeConfig:
    """Plant, reference, integration step, and initial perturbation for one episode."""

    plant: TwoLinkArm = field(default_factory=TwoLinkArm)
    reference: PeriodicReference = field(default_factory=PeriodicReference)
    dt: float = 1e-3
    controller: str = "delta"
    q0_offset: tuple = (0.25, -0.2)
    dq0_offset: tuple = (0.0, 0.0)
    blowup_norm: float = 1e3

    def initial_state(self) -> PlantState:
        q_d, dq_d, _ = self.reference.desired(0.0)
        return PlantState(
            q=q_d + np.asarray(self.q0_offset),
            dq=dq_d + np.asarray(self.dq0_offset),
            phase=0.0,
        )


def _rk4_plant_step(plant: TwoLinkArm, q, dq, u, dt):
    def deriv(q_, dq_):
        return dq_, plant.accel(q_, dq_, u)

    k1q, k1v = deriv(q, dq)
    k2q, k2v = deriv(q + 0.5 * dt * k1q, dq + 0.5 * dt * k1v)
    k3q, k3v = deriv(q + 0.5 * dt * k2q, dq + 0.5 * dt * k2v)
    k4q, k4v = deriv(q + dt * k3q, dq + dt * k3v)
    q_next = q + dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
    dq_next = dq + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return q_next, dq_next


def simulate_episode(
    gains: ClfGains, cfg: EpisodeConfig, duration: float, controller: str | None = None
) -> EpisodeMetrics:
    """Run the closed loop for `duration` seconds and report quality metrics.

    Torques are held over each integration step (zero-order hold at the
    control rate 1/dt).  A state blow-up marks the episode failed and
    returns the worst-case metrics, mirroring a fall.
    """
    controller = controller or cfg.controller
    if controller not in ("delta", "plus"):
        raise ValueError(f"unknown controller {controller!r}")
    cert = solve_care(gains.Q, gains.R, gains.epsilon)
    state = cfg.initial_state()
    plant, ref, dt = cfg.plant, cfg.reference, cfg.dt
    rate = cert.gamma / cert.epsilon
    n_steps = max(1, int(round(duration / dt)))

    sq_err = 0.0
    chatter = 0.0
    saturated = 0
    violation = 0.0
    u_prev = None
    for _ in range(n_steps):
        lf2y, a, eta, _ = output_dynamics(state, plant, ref)
        if controller == "delta":
            u, _delta = clf_qp_delta_core(lf2y, a, eta, gains, cert)
        else:
            u = clf_qp_plus_core(lf2y, a, eta, gains, cert)

        p = cert.n_outputs
        sq_err += float(eta[:p] @ eta[:p])
        if u_prev is not None:
            chatter += float(np.sum(np.abs(u - u_prev)))
        u_prev = u
        if np.any(u <= gains.u_min + 1e-9) or np.any(u >= gains.u_max - 1e-9):
            saturated += 1
        drift, gain = _vdot_terms(eta, cert)
        vdot = drift + float(gain @ (lf2y + a @ u))
        violation += max(0.0, vdot + rate * clf_value(eta, cert))

        q, dq = _rk4_plant_step(plant, state.q, state.dq, u, dt)
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(dq))):
            return FAILURE_METRICS
        if np.linalg.norm(np.concatenate([q, dq])) > cfg.blowup_norm:
            return FAILURE_METRICS
        state = PlantState(q=q, dq=dq, phase=(state.phase + dt) % ref.period)

    return EpisodeMetrics(
        tracking_rms=math.sqrt(sq_err / n_steps),
        torque_chatter=chatter / max(1, n_steps - 1),
        saturation_frac=saturated / n_steps,
        vdot_violation=violation / n_steps,
    )


def simulate_linear_output(
    gains: ClfGains,
    cert: ClfCertificate,
    eta0: np.ndarray,
    duration: float,
    dt: float = 1e-3,
    controller: str = "delta",
):
    """Integrate the linearized output system under a CLF-QP controller.

    The controller is evaluated inside every integrator stage (continuous
    feedback, not zero-order hold), so the trajectory tracks the true
    closed loop closely enough to verify the Lyapunov decay certificate.
    Returns (times, V values).
    """
    p = cert.n_outputs
    F, G = _fg(p)
    eye = np.eye(p)
    zero = np.zeros(p)

    def nu_of(eta):
        if controller == "delta":
            nu, _ = clf_qp_delta_core(zero, eye, eta, gains, cert)
        else:
            nu = clf_qp_plus_core(zero, eye, eta, gains, cert)
        return nu

    def deriv(eta):
        return F @ eta + G @ nu_of(eta)

    eta = np.asarray(eta0, dtype=float)
    n_steps = max(1, int(round(duration / dt)))
    times = np.empty(n_steps + 1)
    values = np.empty(n_steps + 1)
    times[0], values[0] = 0.0, clf_value(eta, cert)
    for k in range(n_steps):
        k1 = deriv(eta)
        k2 = deriv(eta + 0.5 * dt * k1)
        k3 = deriv(eta + 0.5 * dt * k2)
        k4 = deriv(eta + dt * k3)
        eta = eta + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        times[k + 1] = (k + 1) * dt
        values[k + 1] = clf_value(eta, cert)
    return times, values


# ---------------------------------------------------------------------------
# Gain profiles.

_DEFAULT_TORQUE = 80.0


def gains_from_action(
    action,
    profile: str = "amber",
    torque_limit: float = _DEFAULT_TORQUE,
    epsilon: float = 0.15,
    w_vdot: float = 2.0,
) -> ClfGains:
    """Map an action (or raw gain vector) onto controller gains.

    The "amber" profile expects six values [a1..a6] and builds the 8x8
    weight Q = diag(a1, a2, a2, a1, a3, a4, a4, a3) with epsilon = a5 and
    w_vdot = a6.  The "toy" profile maps two values onto the two-output
    plant as Q = diag(a1, a2, a1, a2) with fixed epsilon and w_vdot.
    """
    values = action.values if isinstance(action, Action) else tuple(action)
    if profile == "amber":
        if len(values) != 6:
            raise ValueError("amber profile expects 6 gain values")
        a1, a2, a3, a4, eps, w = values
        q = np.diag([a1, a2, a2, a1, a3, a4, a4, a3]).astype(float)
        p = 4
    elif profile == "toy":
        if len(values) != 2:
            raise ValueError("toy profile expects 2 gain values")
        a1, a2 = values
        q = np.diag([a1, a2, a1, a2]).astype(float)
        eps, w = epsilon, w_vdot
        p = 2
    else:
        raise ValueError(f"unknown profile {profile!r}")
    return ClfGains(
        Q=q,
        R=np.eye(p),
        epsilon=float(eps),
        w_vdot=float(w),
        u_min=np.full(p, -torque_limit),
        u_max=np.full(p, torque_limit),
    )
