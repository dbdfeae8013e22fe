"""Indicators for comparing a learned skill against a reference.

All distribution-level metrics operate on the weight-space Gaussians
N(mu_w, Sigma_w); a trajectory-space variant of the Bhattacharyya
distance over a phase grid is available as an alternative.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateReference
from .linalg import chol_spd, spd_logdet, symmetrize
from .model import marginal_at_phase


@dataclass
class MetricReport:
    """One evaluation record; pc_rotation_deg is None when there is no
    previous covariance or the top eigenvalue is ambiguous."""

    d_b: float
    e_f_mu: float
    e_f_sigma: float
    log_kappa: float
    pc_rotation_deg: float | None


def bhattacharyya_gaussian(mu1, s1, mu2, s2):
    """Bhattacharyya distance between two Gaussians (closed form).

    1/8 dmu^T Sbar^-1 dmu + 1/2 ln(det Sbar / sqrt(det S1 det S2)),
    Sbar = (S1 + S2) / 2. Symmetric, non-negative, zero iff identical.
    """
    mu1 = np.asarray(mu1, dtype=float).reshape(-1)
    mu2 = np.asarray(mu2, dtype=float).reshape(-1)
    s_bar = symmetrize((np.asarray(s1, float) + np.asarray(s2, float)) / 2.0)
    low, _ = chol_spd(s_bar)
    diff = mu1 - mu2
    half = np.linalg.solve(low, diff)
    quad = float(half @ half) / 8.0
    logdet_bar = 2.0 * float(np.sum(np.log(np.diag(low))))
    logdet_1 = spd_logdet(s1)
    logdet_2 = spd_logdet(s2)
    return quad + 0.5 * (logdet_bar - 0.5 * (logdet_1 + logdet_2))


def bhattacharyya_trajectory(params_a, params_b, num_phases=20):
    """Alternative view: mean Bhattacharyya distance of the per-phase state
    marginals over a uniform phase grid."""
    zs = np.linspace(0.0, 1.0, num_phases)
    vals = []
    for z in zs:
        ma, ca = marginal_at_phase(params_a, z)
        mb, cb = marginal_at_phase(params_b, z)
        vals.append(bhattacharyya_gaussian(ma, ca, mb, cb))
    return float(np.mean(vals))


def frobenius_rel_error(ref, est):
    """|| ref - est ||_F / || ref ||_F."""
    ref = np.asarray(ref, dtype=float)
    est = np.asarray(est, dtype=float)
    denom = float(np.linalg.norm(ref))
    if denom == 0.0:
        raise DegenerateReference("reference has zero Frobenius norm")
    return float(np.linalg.norm(ref - est)) / denom


def log10_condition_number(s):
    """log10 of (largest / smallest singular value); +inf when singular."""
    s = symmetrize(s)
    svals = np.linalg.svd(s, compute_uv=False)
    smin = float(svals[-1])
    smax = float(svals[0])
    if smin <= 0.0:
        return math.inf
    return math.log10(smax / smin)


def pc_rotation_deg(s_prev, s_next, rel_tol=1e-10):
    """Angle in degrees between the top principal axes of two covariances.

    Sign-invariant, always in [0, 90]. Returns None when either matrix has
    an ambiguous top eigenvalue (multiplicity within rel_tol).
    """
    vecs = []
    for s in (s_prev, s_next):
        evals, evecs = np.linalg.eigh(symmetrize(s))
        top, second = evals[-1], evals[-2]
        if abs(top - second) <= rel_tol * max(abs(top), 1e-300):
            return None
        vecs.append(evecs[:, -1])
    cosine = min(1.0, abs(float(vecs[0] @ vecs[1])))
    return math.degrees(math.acos(cosine))


def compare_to_reference(ref, est, prev_sigma_w=None):
    """Full MetricReport of an estimate against a reference skill."""
    return MetricReport(
        d_b=bhattacharyya_gaussian(ref.mu_w, ref.sigma_w,
                                   est.mu_w, est.sigma_w),
        e_f_mu=frobenius_rel_error(ref.mu_w, est.mu_w),
        e_f_sigma=frobenius_rel_error(ref.sigma_w, est.sigma_w),
        log_kappa=log10_condition_number(est.sigma_w),
        pc_rotation_deg=(None if prev_sigma_w is None
                         else pc_rotation_deg(prev_sigma_w, est.sigma_w)),
    )
