"""Synthetic reference skills and the three evaluation pipelines.

The reference construction stands in for lab recordings: smooth via-point
trajectories (two minimum-jerk segments with a tight middle via-point and
a wider endpoint spread, plus low-amplitude smooth variation so the weight
covariance has full rank) are compressed into weights by collocation at
the basis centers, and their empirical moments become the reference
parameters. Observation noise is drawn from a Wishart distribution.
"""

from dataclasses import dataclass

import numpy as np

from .basis import BasisConfig, basis_rows
from .errors import (ConfigError, InsufficientDemos, InvalidCount,
                     InvalidSplit, SingularCovariance)
from .estimators import NIWPrior, fit_em_map, fit_em_mle, fit_ridge
from .incremental import StepwiseConfig, add_demonstration, init_session, run_passes
from .linalg import symmetrize
from .metrics import compare_to_reference, log10_condition_number
from .model import Demonstration, ProMPParams, sample_trajectory


@dataclass
class ReferenceSpec:
    """Recipe for a synthetic reference skill.

    ``task_scale`` multiplies the whole task geometry (base points and
    spreads). At 1.0 the workspace spans ~5 units, which keeps the
    identity initialization of the learners broad rather than dominant;
    0.1 gives a robot-bench-sized task where a 0.2-unit endpoint shift is
    a large, visible change.
    """

    n_basis: int = 10
    n_dof: int = 3
    num_via_trajectories: int = 60
    wishart_dof: float | None = None      # default n_dof + 2
    wishart_scale: np.ndarray | None = None  # default 1e-6 * I
    seed: int = 0
    task_scale: float = 1.0
    variation_scale: float = 1.0  # 0 makes every seed trajectory identical

    def resolved_wishart(self):
        dof = self.wishart_dof if self.wishart_dof is not None else self.n_dof + 2.0
        if dof <= self.n_dof - 1:
            raise ValueError("wishart_dof must exceed n_dof - 1")
        scale = (np.asarray(self.wishart_scale, dtype=float)
                 if self.wishart_scale is not None
                 else 1e-6 * self.task_scale ** 2 * np.eye(self.n_dof))
        return float(dof), scale


@dataclass
class ShiftDatasetSpec:
    """How to rearrange a dataset into a simulated task shift."""

    split_count: int = 30
    endpoint_window: int = 5
    axis: int = 1
    seed: int = 0


# demos per trajectory in the regenerated protocols; dense enough that
# five EM iterations flush the identity noise init (rate ~ K/T' per
# iteration) below the reference's smallest weight variances
PRESET_STEPS = 200

# geometry of the synthetic via-point task (arbitrary state units; the
# workspace spans ~5 units so the identity init of the learners is broad
# rather than dominant)
_START_BASE = 0.0
_VIA_BASE = 2.5
_END_BASE = 5.0
_START_JITTER = 0.1
_VIA_JITTER = 0.02
_END_JITTER = 0.3
_SMOOTH_AMP = 0.04
_SMOOTH_DECAY = 1.5


def _min_jerk(s):
    return s ** 3 * (10.0 - 15.0 * s + 6.0 * s * s)


def _via_curve(phases, start, via, end):
    """Two minimum-jerk segments start->via->end, one column per DOF."""
    out = np.empty((phases.size, start.size))
    first = phases <= 0.5
    s1 = _min_jerk(2.0 * phases[first])
    out[first] = start + s1[:, None] * (via - start)
    s2 = _min_jerk(2.0 * phases[~first] - 1.0)
    out[~first] = via + s2[:, None] * (end - via)
    return out


def generate_seed_trajectories(spec):
    """Deterministic family of demonstrations for reference construction.

    Trajectories agree tightly at mid-phase (the precise via-point) and
    spread out toward the endpoint; per-DOF sinusoidal perturbations with
    decaying amplitudes vanish at both ends and give the weight
    distribution full rank.
    """
    rng = np.random.default_rng([spec.seed, 0])
    d = spec.n_dof
    scale = spec.task_scale
    spread = scale * spec.variation_scale
    start_base = np.full(d, scale * _START_BASE)
    via_base = np.full(d, scale * _VIA_BASE)
    end_base = np.full(d, scale * _END_BASE)
    n_modes = spec.n_basis + 2
    amps = spread * _SMOOTH_AMP / np.arange(1, n_modes + 1) ** _SMOOTH_DECAY
    demos = []
    for _ in range(spec.num_via_trajectories):
        n_steps = 110 + int(round(
            20.0 * rng.uniform(-1.0, 1.0) * spec.variation_scale))
        duration = 1.0 + 0.2 * rng.uniform(-1.0, 1.0) * spec.variation_scale
        timestamps = np.linspace(0.0, duration, n_steps)
        phases = np.linspace(0.0, 1.0, n_steps)
        start = start_base + spread * _START_JITTER * rng.standard_normal(d)
        via = via_base + spread * _VIA_JITTER * rng.standard_normal(d)
        end = end_base + spread * _END_JITTER * rng.standard_normal(d)
        states = _via_curve(phases, start, via, end)
        coeffs = rng.standard_normal((n_modes, d)) * amps[:, None]
        modes = np.sin(np.pi * np.outer(phases, np.arange(1, n_modes + 1)))
        states = states + modes @ coeffs
        demos.append(Demonstration(timestamps=timestamps, states=states,
                                   phases=phases))
    return demos


def _wishart_sample(dof, scale, rng):
    """Bartlett construction; works for non-integer dof > dim - 1."""
    dim = scale.shape[0]
    low = np.linalg.cholesky(symmetrize(scale))
    a = np.zeros((dim, dim))
    for i in range(dim):
        a[i, i] = np.sqrt(rng.chisquare(dof - i))
        for j in range(i):
            a[i, j] = rng.standard_normal()
    factor = low @ a
    return factor @ factor.T


def collocation_weights(demo, basis):
    """Read one weight vector off a demonstration by collocation.

    The demo is downsampled (interpolated) to the basis centers and the
    square K x K basis system is solved per DOF; DOF-major concatenation.
    """
    values = np.column_stack([
        np.interp(basis.centers, demo.phases, demo.states[:, d])
        for d in range(demo.n_dof)])
    system = basis_rows(basis, basis.centers)
    try:
        coef = np.linalg.solve(system, values)  # (K, D)
    except np.linalg.LinAlgError:
        raise SingularCovariance("basis collocation system is singular")
    return coef.T.ravel()


def build_reference_promp(trajectories, spec):
    """Empirical weight moments of the trajectories plus Wishart noise."""
    if len(trajectories) < 2:
        raise InsufficientDemos("reference needs >= 2 trajectories")
    basis = BasisConfig.create(spec.n_basis, spec.n_dof)
    weights = np.array([collocation_weights(t, basis) for t in trajectories])
    mu = weights.mean(axis=0)
    dev = weights - mu
    sigma_w = symmetrize(dev.T @ dev / len(trajectories))
    dof, scale = spec.resolved_wishart()
    rng = np.random.default_rng([spec.seed, 1])
    sigma_y = symmetrize(_wishart_sample(dof, scale, rng) / dof)
    return ProMPParams(basis=basis, mu_w=mu, sigma_w=sigma_w, sigma_y=sigma_y)


def make_reference(spec):
    """Convenience: seed trajectories + reference parameters in one call."""
    return build_reference_promp(generate_seed_trajectories(spec), spec)


def sample_dataset(ref, n, steps_per_demo=100, seed=0):
    """n independent trajectory draws from a reference skill."""
    if n < 1:
        raise InvalidCount("dataset size must be >= 1")
    rng = np.random.default_rng([seed, 3])
    return [sample_trajectory(ref, steps_per_demo, rng) for _ in range(n)]


def demo_endpoint(demo, axis, window):
    """Mean of the last ``window`` states on one axis."""
    tail = demo.states[-min(window, demo.n_steps):, axis]
    return float(tail.mean())


def make_shifted_dataset(demos, spec):
    """Reorder a dataset into a simulated task shift.

    Demos are sorted by endpoint (mean of the trailing window on the
    chosen axis, stable sort); the ``split_count`` largest form the late
    subset. Both subsets are shuffled internally and concatenated
    small-endpoints-first. A permutation of the input, nothing dropped.
    """
    if not 0 < spec.split_count < len(demos):
        raise InvalidSplit("split_count must leave both subsets non-empty")
    endpoints = [demo_endpoint(d, spec.axis, spec.endpoint_window)
                 for d in demos]
    order = np.argsort(endpoints, kind="stable")
    cut = len(demos) - spec.split_count
    early = order[:cut].tolist()
    late = order[cut:].tolist()
    rng_a = np.random.default_rng([spec.seed, 10])
    rng_b = np.random.default_rng([spec.seed, 11])
    rng_a.shuffle(early)
    rng_b.shuffle(late)
    return [demos[i] for i in early] + [demos[i] for i in late]


def _endpoint_ramp(center):
    """0 before mid-phase, smoothly rising to 1 at phase 1."""
    s = np.clip((center - 0.5) / 0.5, 0.0, 1.0)
    return _min_jerk(s)


def shift_reference_endpoint(ref, shift, axis):
    """New reference whose mean trajectory ends ``shift`` further along
    one axis, leaving the early movement untouched.

    The ramp is pushed into weight space by collocation at the basis
    centers, so the realized shift at phase 1 is exact.
    """
    basis = ref.basis
    k = basis.n_basis
    system = basis_rows(basis, basis.centers)
    ramp_weights = np.linalg.solve(system,
                                   shift * _endpoint_ramp(basis.centers))
    offset = np.zeros(basis.weight_dim)
    offset[axis * k:(axis + 1) * k] = ramp_weights
    return ProMPParams(basis=basis, mu_w=ref.mu_w + offset,
                       sigma_w=ref.sigma_w, sigma_y=ref.sigma_y)


def make_step_shift_dataset(ref, per_side=15, shift=0.2, axis=1, seed=0,
                            steps_per_demo=100):
    """Two-position protocol: ``per_side`` demos from the reference, then
    ``per_side`` demos from an endpoint-shifted copy, in that order."""
    first = sample_dataset(ref, per_side, steps_per_demo, seed=seed)
    shifted_ref = shift_reference_endpoint(ref, shift, axis)
    second = sample_dataset(shifted_ref, per_side, steps_per_demo,
                            seed=seed + 104729)
    return first + second


def model_endpoint(params, axis, window=5, grid=100):
    """Endpoint of the mean trajectory, same trailing-window convention
    as the per-demo endpoint."""
    zs = np.linspace(0.0, 1.0, grid)
    rows = basis_rows(params.basis, zs)
    k, d = params.basis.n_basis, params.basis.n_dof
    traj = rows @ params.mu_w.reshape(d, k).T
    return float(traj[-window:, axis].mean())


def experiment_compare(dataset, ref, *, lam=1e-12, iterations=5, beta=0.75,
                       prior=None, passes=5):
    """The algorithm-comparison table: one row per training algorithm with
    the Bhattacharyya distance to the reference and log10 condition number
    of the weight covariance, plus a reference row."""
    basis = ref.basis
    if prior is None:
        prior = NIWPrior.paper_default(basis.n_basis, basis.n_dof)
    rows = [{
        "algorithm": "reference", "settings": "",
        "d_b": None, "log_kappa": log10_condition_number(ref.sigma_w),
    }]

    def add_row(name, settings, params):
        rep = compare_to_reference(ref, params)
        rows.append({"algorithm": name, "settings": settings,
                     "d_b": rep.d_b, "log_kappa": rep.log_kappa})

    add_row("mle_ridge", f"lambda={lam:g}",
            fit_ridge(dataset, basis, lam=lam).params)
    add_row("mle_em", f"{iterations} iterations",
            fit_em_mle(dataset, basis, iterations=iterations).params)
    add_row("map_em", f"{iterations} iterations",
            fit_em_map(dataset, basis, iterations=iterations, prior=prior).params)
    sem_cfg = StepwiseConfig(beta=beta, prior=prior)
    add_row("map_sem", f"beta={beta:g}",
            run_passes(dataset, sem_cfg, basis, passes=1))
    add_row("map_sem_multipass", f"beta={beta:g}, {passes} passes",
            run_passes(dataset, sem_cfg, basis, passes=passes))
    return rows


def experiment_progress(dataset, ref, *, beta=0.75, prior=None,
                        delta_min=0.0):
    """Stream the dataset once; after every update record the full metric
    report against the reference (principal-axis rotation is against the
    previous update's covariance, so the first entry has none)."""
    basis = ref.basis
    cfg = StepwiseConfig(beta=beta, prior=prior, delta_min=delta_min)
    state = init_session(cfg, basis)
    reports = []
    prev_sigma = None
    for demo in dataset:
        state, _ = add_demonstration(state, demo)
        reports.append(compare_to_reference(ref, state.params,
                                            prev_sigma_w=prev_sigma))
        prev_sigma = state.params.sigma_w
    return reports


def preset_compare(seed=0):
    """Full regenerated comparison protocol for one seed."""
    ref = make_reference(ReferenceSpec(seed=seed))
    demos = sample_dataset(ref, 100, PRESET_STEPS, seed=seed)
    return {"experiment": "compare", "seed": seed,
            "rows": experiment_compare(demos, ref)}


def preset_progress(seed=0):
    """Full regenerated incremental-progress protocol for one seed."""
    ref = make_reference(ReferenceSpec(seed=seed))
    demos = sample_dataset(ref, 100, PRESET_STEPS, seed=seed)
    reports = experiment_progress(demos, ref)
    series = [{"update": i + 1, "d_b": r.d_b, "e_f_mu": r.e_f_mu,
               "e_f_sigma": r.e_f_sigma, "log_kappa": r.log_kappa,
               "pc_rotation_deg": r.pc_rotation_deg}
              for i, r in enumerate(reports)]
    return {"experiment": "progress", "seed": seed, "series": series}


def preset_adapt(seed=0, variant="sorted"):
    """Adaptation protocols: 70/30 endpoint-sorted reorder of one dataset
    ("sorted") or the bench-scale two-position 15/15 run ("panda")."""
    if variant == "panda":
        ref = make_reference(ReferenceSpec(seed=seed, task_scale=0.1))
        sspec = ShiftDatasetSpec(split_count=15, endpoint_window=5, axis=1,
                                 seed=seed)
        demos = make_step_shift_dataset(ref, per_side=15, shift=0.2,
                                        axis=sspec.axis, seed=seed,
                                        steps_per_demo=100)
    elif variant == "sorted":
        ref = make_reference(ReferenceSpec(seed=seed))
        sspec = ShiftDatasetSpec(split_count=30, endpoint_window=5, axis=1,
                                 seed=seed)
        base = sample_dataset(ref, 100, PRESET_STEPS, seed=seed)
        demos = make_shifted_dataset(base, sspec)
    else:
        raise ConfigError(f"unknown adapt variant {variant!r}")
    report = experiment_adaptation(demos, sspec, basis=ref.basis, beta=0.6)
    report.update({"experiment": "adapt", "seed": seed, "variant": variant})
    return report


def experiment_adaptation(shifted_dataset, spec, *, basis=None, beta=0.6,
                          batch_iterations=5, prior=None, grid=100):
    """Shift protocol: stepwise EM streams the reordered set while batch
    MAP-EM sees it all at once; compare both endpoints to the subset means.

    Returns endpoints of both models, the two subset mean endpoints, and
    the per-update endpoint series for plotting.
    """
    demos = shifted_dataset
    cut = len(demos) - spec.split_count
    if not 0 < cut < len(demos):
        raise InvalidSplit("split_count must leave both subsets non-empty")
    if basis is None:
        basis = BasisConfig.create(10, demos[0].n_dof)
    endpoints = [demo_endpoint(d, spec.axis, spec.endpoint_window)
                 for d in demos]
    pre_mean = float(np.mean(endpoints[:cut]))
    post_mean = float(np.mean(endpoints[cut:]))

    cfg = StepwiseConfig(beta=beta, prior=prior)
    state = init_session(cfg, basis)
    sem_series = []
    for demo in demos:
        state, _ = add_demonstration(state, demo)
        sem_series.append(model_endpoint(state.params, spec.axis,
                                         spec.endpoint_window, grid))
    batch = fit_em_map(demos, basis, iterations=batch_iterations, prior=prior)
    return {
        "axis": spec.axis,
        "sem_endpoint": sem_series[-1],
        "batch_endpoint": model_endpoint(batch.params, spec.axis,
                                         spec.endpoint_window, grid),
        "pre_shift_mean": pre_mean,
        "post_shift_mean": post_mean,
        "demo_endpoints": endpoints,
        "sem_endpoint_series": sem_series,
    }
