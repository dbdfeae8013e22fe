import numpy as np
import pytest

from promplearn.basis import BasisConfig, block_basis
from promplearn.model import Demonstration, ProMPParams


def random_spd(rng, dim, scale=1.0):
    a = rng.standard_normal((dim, dim))
    return scale * (a @ a.T + dim * np.eye(dim))


def random_params(rng, n_basis, n_dof):
    basis = BasisConfig.create(n_basis, n_dof)
    kd = basis.weight_dim
    return ProMPParams(
        basis=basis,
        mu_w=rng.standard_normal(kd),
        sigma_w=random_spd(rng, kd, scale=0.5),
        sigma_y=random_spd(rng, n_dof, scale=0.05),
    )


def random_demo(rng, n_dof, n_steps):
    timestamps = np.sort(rng.uniform(0.0, 5.0, n_steps))
    while np.any(np.diff(timestamps) <= 0):
        timestamps = np.sort(rng.uniform(0.0, 5.0, n_steps))
    states = rng.standard_normal((n_steps, n_dof))
    return Demonstration.from_states(timestamps, states)


def stacked_design(params, demo):
    """Dense (T*D, K*D) design matrix built row-block by row-block."""
    return np.vstack([block_basis(params.basis, z) for z in demo.phases])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
