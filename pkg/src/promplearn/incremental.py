"""Stepwise EM: constant-memory incremental training with a forgetting factor.

Each new demonstration contributes its expected sufficient statistics
(ESS), which are blended into the running accumulators with a decaying
step size delta_n = (n+1)^-beta. The step size doubles as a forgetting
factor: older demonstrations are geometrically down-weighted, which lets
the skill track corrections and task shifts. An optional step-size floor
keeps adaptation alive for open-ended shaping.

State layout mirrors the update loop:
  u1, u2, u3   interpolated ESS (weight mean, weight second moment,
               observation-noise statistic)
  eta          delta-weighted convex-combination accumulator in (0, 1]
  t_eff        effective (interpolated) time-step count
  n            demo counter, starts at 1 and post-increments
  delta        step size for the next update

A frequent confusion, worth stating once: the M-step divides u1 by eta
alone, while the NIW blending uses the integer counter n as the data
weight. eta and n are distinct state fields and never multiplied together.
"""

import struct
from dataclasses import dataclass, replace

import numpy as np

from .basis import basis_rows
from .errors import ConfigError
from .estimators import (NIWPrior, blockdiag_by_dof, niw_blend_mean,
                         niw_map_estimate)
from .linalg import symmetrize
from .model import ProMPParams, weight_posterior


@dataclass(eq=False)
class StepwiseConfig:
    """Knobs of the incremental learner.

    beta in (0.5, 1] sets the step-size decay; delta_min > 0 floors the
    step size so very old demonstrations keep being forgotten.
    """

    beta: float = 0.75
    prior: NIWPrior | None = None
    init_mu: np.ndarray | None = None
    init_sigma_w: np.ndarray | None = None
    init_sigma_y: np.ndarray | None = None
    minibatch_size: int = 1
    delta_min: float = 0.0
    sigma_star_uses_mle_mean: bool = False
    s0_freeze: bool = False

    def __post_init__(self):
        if not 0.5 < self.beta <= 1.0:
            raise ConfigError("beta must satisfy 0.5 < beta <= 1")
        if self.minibatch_size < 1:
            raise ConfigError("minibatch_size must be >= 1")
        if self.delta_min < 0.0:
            raise ConfigError("delta_min must be >= 0")


@dataclass(eq=False)
class StepwiseState:
    """Everything the learner carries between updates; size is fixed by
    (K, D) and independent of how many demonstrations were consumed."""

    u1: np.ndarray        # (K*D,)
    u2: np.ndarray        # (K*D, K*D)
    u3: np.ndarray        # (D, D)
    eta: float
    t_eff: float
    n: int
    delta: float
    params: ProMPParams
    config: StepwiseConfig
    frozen_s0: np.ndarray | None = None

    def to_bytes(self):
        """Fixed-size binary snapshot of the accumulators and counters.

        The byte length depends only on (K, D), which makes the
        constant-memory property directly checkable.
        """
        head = struct.pack("<qddd", self.n, self.eta, self.t_eff, self.delta)
        parts = [head, self.u1.tobytes(), self.u2.tobytes(), self.u3.tobytes(),
                 self.params.mu_w.tobytes(), self.params.sigma_w.tobytes(),
                 self.params.sigma_y.tobytes()]
        return b"".join(parts)


@dataclass(eq=False)
class MetricHookPayload:
    """Per-update telemetry handed back with the new state."""

    w_bar: np.ndarray
    delta_used: float
    n: int          # counter after the update
    t_prime: int    # time steps of the consumed demonstration(s)


def step_size(n, beta, delta_min=0.0):
    """Decaying step size max((n+1)^-beta, delta_min) for counter n >= 1."""
    if not 0.5 < beta <= 1.0:
        raise ConfigError("beta must satisfy 0.5 < beta <= 1")
    if n < 1:
        raise ConfigError("demo counter starts at 1")
    return max(float(n + 1) ** (-beta), delta_min)


def init_session(cfg, basis):
    """Fresh state: zero accumulators, counter at 1, broad initial params."""
    kd = basis.weight_dim
    d = basis.n_dof
    mu = np.zeros(kd) if cfg.init_mu is None else np.asarray(cfg.init_mu, float)
    sw = np.eye(kd) if cfg.init_sigma_w is None else np.asarray(cfg.init_sigma_w, float)
    sy = np.eye(d) if cfg.init_sigma_y is None else np.asarray(cfg.init_sigma_y, float)
    params = ProMPParams(basis=basis, mu_w=mu, sigma_w=sw, sigma_y=sy)
    prior = cfg.prior
    if prior is None:
        prior = NIWPrior.paper_default(basis.n_basis, basis.n_dof)
        cfg = replace(cfg, prior=prior)
    if prior.m0.size != kd:
        raise ConfigError("prior dimension does not match the basis layout")
    return StepwiseState(
        u1=np.zeros(kd), u2=np.zeros((kd, kd)), u3=np.zeros((d, d)),
        eta=0.0, t_eff=0.0, n=1, delta=step_size(1, cfg.beta, cfg.delta_min),
        params=params, config=cfg)


def _demo_ess(params, demo):
    """Expected sufficient statistics of one demo under current params."""
    post = weight_posterior(params, demo)
    second = np.outer(post.mean, post.mean) + post.cov
    k, d = params.basis.n_basis, params.basis.n_dof
    rows = basis_rows(params.basis, demo.phases)
    resid = demo.states - rows @ post.mean.reshape(d, k).T
    gram = rows.T @ rows
    cov4 = post.cov.reshape(d, k, d, k)
    # algebraically the y-statistic sum_t yy^T - 2 y w^T Phi^T + Phi ww^T Phi^T
    # in its symmetric residual form
    u3 = resid.T @ resid + np.einsum("akbl,kl->ab", cov4, gram)
    return post.mean, second, symmetrize(u3), demo.n_steps, post


def _m_step(state, u1, u2, u3, eta, t_eff):
    cfg = state.config
    prior = cfg.prior
    basis = state.params.basis
    n = state.n
    mu_star = u1 / eta
    mu_map = niw_blend_mean(mu_star, n, prior.m0, prior.k0)
    center = mu_star if cfg.sigma_star_uses_mle_mean else mu_map
    sigma_star = symmetrize(u2 / eta - np.outer(center, center))
    if prior.s0_mode == "explicit":
        s0 = prior.s0
        frozen = state.frozen_s0
    elif state.frozen_s0 is not None:
        s0 = state.frozen_s0
        frozen = state.frozen_s0
    else:
        s0 = (prior.v0 + mu_star.size + 1.0) * blockdiag_by_dof(
            sigma_star, basis.n_dof)
        frozen = s0 if cfg.s0_freeze else None
    _, sigma_w = niw_map_estimate(mu_star, sigma_star, n, prior.m0,
                                  prior.k0, prior.v0, s0)
    sigma_y = symmetrize(u3 / t_eff)
    params = ProMPParams(basis=basis, mu_w=mu_map, sigma_w=sigma_w,
                         sigma_y=sigma_y)
    return params, frozen


def _apply_update(state, u1p, u2p, u3p, t_prime, w_bar):
    cfg = state.config
    delta = state.delta
    u1 = (1.0 - delta) * state.u1 + delta * u1p
    u2 = (1.0 - delta) * state.u2 + delta * u2p
    u3 = (1.0 - delta) * state.u3 + delta * u3p
    eta = (1.0 - delta) * state.eta + delta
    t_eff = (1.0 - delta) * state.t_eff + delta * t_prime
    params, frozen = _m_step(state, u1, u2, u3, eta, t_eff)
    n_next = state.n + 1
    new_state = StepwiseState(
        u1=u1, u2=u2, u3=u3, eta=eta, t_eff=t_eff, n=n_next,
        delta=step_size(n_next, cfg.beta, cfg.delta_min),
        params=params, config=cfg, frozen_s0=frozen)
    payload = MetricHookPayload(w_bar=w_bar, delta_used=delta, n=n_next,
                                t_prime=int(round(t_prime)))
    return new_state, payload


def add_demonstration(state, demo):
    """One full update: E-step on the new demo, ESS interpolation, M-step.

    Returns the successor state (the input state is never mutated, so
    concurrent readers always see a consistent snapshot) plus a payload
    with the posterior weight mean and the step size that was applied.
    """
    if demo.n_dof != state.params.basis.n_dof:
        raise ConfigError("demonstration dimension does not match the basis")
    u1p, u2p, u3p, t_prime, _ = _demo_ess(state.params, demo)
    return _apply_update(state, u1p, u2p, u3p, float(t_prime), u1p)


def add_minibatch(state, demos):
    """Pool several demos' ESS (arithmetic mean) into a single update.

    The batch length must equal the configured minibatch size; the
    counter n still advances by one per call.
    """
    if len(demos) != state.config.minibatch_size:
        raise ConfigError(
            f"minibatch length {len(demos)} != configured size "
            f"{state.config.minibatch_size}")
    ess = [_demo_ess(state.params, demo) for demo in demos]
    u1p = np.mean([e[0] for e in ess], axis=0)
    u2p = np.mean([e[1] for e in ess], axis=0)
    u3p = np.mean([e[2] for e in ess], axis=0)
    t_bar = float(np.mean([e[3] for e in ess]))
    return _apply_update(state, u1p, u2p, u3p, t_bar, u1p)


def run_passes(demos, cfg, basis, passes=1):
    """Stream the list ``passes`` times through one session, counter never
    resetting, and return the final parameters."""
    if passes < 1:
        raise ConfigError("passes must be >= 1")
    state = init_session(cfg, basis)
    for _ in range(passes):
        for demo in demos:
            state, _ = add_demonstration(state, demo)
    return state.params
