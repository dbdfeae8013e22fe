"""The ProMP probability model.

A trajectory is a time series of D-dimensional states. Each demonstration
is compressed into a weight vector w (dimension K*D, DOF-major) through a
block-diagonal basis matrix; weights follow N(mu_w, Sigma_w) and states
follow y_t = Phi_t w + noise with noise ~ N(0, Sigma_y).
"""

import math
from dataclasses import dataclass

import numpy as np

from .basis import BasisConfig, basis_rows, block_basis
from .errors import (DegenerateTrajectory, InsufficientDemos,
                     NonMonotoneTime)
from .linalg import chol_spd, spd_inverse, spd_logdet, symmetrize

_SYM_RTOL = 1e-10

_LOG_2PI = math.log(2.0 * math.pi)


def normalize_phase(timestamps):
    """Affine map of a strictly increasing time vector onto [0, 1]."""
    t = np.asarray(timestamps, dtype=float)
    if t.ndim != 1 or t.size < 2:
        raise DegenerateTrajectory("need at least two timestamps")
    if np.any(np.diff(t) <= 0):
        raise NonMonotoneTime("timestamps must be strictly increasing")
    return (t - t[0]) / (t[-1] - t[0])


def _check_symmetric(a, name):
    scale = max(1.0, float(np.max(np.abs(a))) if a.size else 0.0)
    if float(np.max(np.abs(a - a.T))) > _SYM_RTOL * scale:
        raise ValueError(f"{name} must be symmetric")


@dataclass(eq=False)
class Demonstration:
    """One demonstration: timestamps, states, and the normalized phase."""

    timestamps: np.ndarray  # (T,)
    states: np.ndarray      # (T, n_dof)
    phases: np.ndarray      # (T,) in [0, 1]

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.phases = np.asarray(self.phases, dtype=float)
        n = self.timestamps.size
        if n < 2:
            raise DegenerateTrajectory("a demonstration needs >= 2 samples")
        if self.states.shape[0] != n or self.phases.shape != (n,):
            raise ValueError("timestamps, states and phases must align")
        if np.any(np.diff(self.phases) < 0):
            raise NonMonotoneTime("phases must be non-decreasing")
        if abs(self.phases[0]) > 1e-9 or abs(self.phases[-1] - 1.0) > 1e-9:
            raise ValueError("phases must start at 0 and end at 1")

    @classmethod
    def from_states(cls, timestamps, states):
        """Build a demonstration, deriving phases from the timestamps."""
        return cls(timestamps=np.asarray(timestamps, dtype=float),
                   states=states,
                   phases=normalize_phase(timestamps))

    @property
    def n_steps(self):
        return self.timestamps.size

    @property
    def n_dof(self):
        return self.states.shape[1]


@dataclass(eq=False)
class ProMPParams:
    """A learned skill: weight distribution plus observation noise."""

    basis: BasisConfig
    mu_w: np.ndarray     # (K*D,)
    sigma_w: np.ndarray  # (K*D, K*D)
    sigma_y: np.ndarray  # (D, D)

    def __post_init__(self):
        kd = self.basis.weight_dim
        d = self.basis.n_dof
        self.mu_w = np.array(self.mu_w, dtype=float).reshape(kd)
        self.sigma_w = np.array(self.sigma_w, dtype=float).reshape(kd, kd)
        self.sigma_y = np.array(self.sigma_y, dtype=float).reshape(d, d)
        _check_symmetric(self.sigma_w, "sigma_w")
        _check_symmetric(self.sigma_y, "sigma_y")
        for arr in (self.mu_w, self.sigma_w, self.sigma_y):
            arr.setflags(write=False)

    @classmethod
    def default_init(cls, basis):
        """Broad starting point: zero mean, identity covariances."""
        kd = basis.weight_dim
        return cls(basis=basis, mu_w=np.zeros(kd), sigma_w=np.eye(kd),
                   sigma_y=np.eye(basis.n_dof))


@dataclass(eq=False)
class WeightPosterior:
    """Gaussian over one demonstration's weight vector."""

    mean: np.ndarray  # (K*D,)
    cov: np.ndarray   # (K*D, K*D)


def _data_terms(params, demo):
    """Per-demo sufficient pieces of the weight-space Gaussian algebra.

    Exploits the shared basis row across DOFs: the summed data precision
    is kron(sigma_y^-1, R^T R) and the data side of the mean stacks
    DOF-major. Returns (rows R, data precision, function y -> Phi^T
    Sy^-1 y stacked over time).
    """
    rows = basis_rows(params.basis, demo.phases)
    sy_inv = spd_inverse(params.sigma_y)
    prec_data = np.kron(sy_inv, rows.T @ rows)

    def weighted_stack(values):
        # values: (T, D) -> sum_t Phi_t^T Sy^-1 values_t, DOF-major
        m = rows.T @ (values @ sy_inv)   # (K, D)
        return m.T.ravel()

    return rows, prec_data, weighted_stack


def weight_posterior(params, demo):
    """Posterior N(mean, cov) over the weights of one demonstration.

    cov  = (Sigma_w^-1 + sum_t Phi_t^T Sigma_y^-1 Phi_t)^-1
    mean = cov (Sigma_w^-1 mu_w + sum_t Phi_t^T Sigma_y^-1 y_t)
    """
    sw_inv = spd_inverse(params.sigma_w)
    _, prec_data, weighted_stack = _data_terms(params, demo)
    precision = sw_inv + prec_data
    cov = spd_inverse(precision)
    mean = cov @ (sw_inv @ params.mu_w + weighted_stack(demo.states))
    return WeightPosterior(mean=mean, cov=cov)


def marginal_at_phase(params, z):
    """Mean and covariance of the state at one phase, weights integrated out."""
    phi = block_basis(params.basis, z)
    mean = phi @ params.mu_w
    cov = symmetrize(phi @ params.sigma_w @ phi.T + params.sigma_y)
    return mean, cov


def sample_trajectory(params, num_steps, seed):
    """Draw one trajectory: w ~ N(mu_w, Sigma_w) once, then per-step noise.

    Phases are evenly spaced on [0, 1]; timestamps equal phases (unit
    duration). Deterministic given the seed; a numpy Generator may be
    passed to continue an existing stream.
    """
    if num_steps < 2:
        raise DegenerateTrajectory("num_steps must be >= 2")
    rng = np.random.default_rng(seed)
    k, d = params.basis.n_basis, params.basis.n_dof
    low_w, _ = chol_spd(params.sigma_w)
    w = params.mu_w + low_w @ rng.standard_normal(k * d)
    low_y, _ = chol_spd(params.sigma_y)
    noise = rng.standard_normal((num_steps, d)) @ low_y.T
    phases = np.linspace(0.0, 1.0, num_steps)
    rows = basis_rows(params.basis, phases)
    states = rows @ w.reshape(d, k).T + noise
    return Demonstration(timestamps=phases.copy(), states=states,
                         phases=phases)


def marginal_log_likelihood(params, demos):
    """Log of the Gaussian marginal of the observed states, weights
    integrated out, summed over demonstrations.

    Evaluated through the weight-space identity (matrix inversion lemma
    on the stacked design), so cost scales with the weight dimension.
    """
    if len(demos) < 1:
        raise InsufficientDemos("need at least one demonstration")
    sw_inv = spd_inverse(params.sigma_w)
    logdet_sw = spd_logdet(params.sigma_w)
    logdet_sy = spd_logdet(params.sigma_y)
    sy_inv = spd_inverse(params.sigma_y)
    k, d = params.basis.n_basis, params.basis.n_dof
    mean_mat = params.mu_w.reshape(d, k).T  # (K, D)
    total = 0.0
    for demo in demos:
        rows, prec_data, weighted_stack = _data_terms(params, demo)
        precision = sw_inv + prec_data
        resid = demo.states - rows @ mean_mat
        h = weighted_stack(resid)
        quad = float(np.sum(resid * (resid @ sy_inv)))
        low_p, _ = chol_spd(precision)
        half = np.linalg.solve(low_p, h)
        quad -= float(half @ half)
        logdet_prec = 2.0 * float(np.sum(np.log(np.diag(low_p))))
        t_steps = demo.n_steps
        logdet_total = t_steps * logdet_sy + logdet_sw + logdet_prec
        total += -0.5 * (quad + logdet_total + t_steps * d * _LOG_2PI)
    return total
