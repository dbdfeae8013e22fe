"""Normalized Gaussian basis features indexed by movement phase."""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True, eq=False)
class BasisConfig:
    """Basis layout shared by every degree of freedom.

    ``n_basis`` Gaussians with centers evenly spaced on [0, 1]; ``width``
    is the squared bandwidth of the unnormalized Gaussians (phase^2 units).
    Weight vectors downstream have dimension ``n_basis * n_dof``.
    """

    n_basis: int
    n_dof: int
    centers: np.ndarray
    width: float

    def __post_init__(self):
        if self.n_basis < 1:
            raise ConfigError("n_basis must be >= 1")
        if self.n_dof < 1:
            raise ConfigError("n_dof must be >= 1")
        if self.width <= 0.0:
            raise ConfigError("width must be > 0")
        centers = np.asarray(self.centers, dtype=float)
        if centers.shape != (self.n_basis,):
            raise ConfigError("centers must have one entry per basis function")
        if self.n_basis > 1:
            gaps = np.diff(centers)
            if np.any(gaps <= 0):
                raise ConfigError("centers must be strictly increasing")
            if np.any(np.abs(gaps - gaps[0]) > 1e-9 * max(gaps[0], 1e-12)):
                raise ConfigError("centers must be evenly spaced")
        object.__setattr__(self, "centers", centers)

    @property
    def weight_dim(self):
        return self.n_basis * self.n_dof

    @classmethod
    def create(cls, n_basis, n_dof, overlap=1.0):
        """Default layout: centers on [0, 1], bandwidth from center spacing.

        ``overlap`` scales the squared bandwidth; 1.0 gives roughly 50%
        neighbor overlap. A single basis function sits at phase 0.5.
        """
        if n_basis < 1:
            raise ConfigError("n_basis must be >= 1")
        if overlap <= 0.0:
            raise ConfigError("overlap must be > 0")
        if n_basis == 1:
            centers = np.array([0.5])
            width = 0.125 * overlap
        else:
            centers = np.linspace(0.0, 1.0, n_basis)
            spacing = 1.0 / (n_basis - 1)
            width = 0.5 * spacing * spacing * overlap
        return cls(n_basis=n_basis, n_dof=n_dof, centers=centers, width=width)


def basis_row(cfg, z):
    """Values of the normalized basis functions at one phase.

    Returns a length-``n_basis`` vector; entries are non-negative and sum
    to 1. Phases slightly outside [0, 1] are clamped.
    """
    return basis_rows(cfg, np.array([z]))[0]


def basis_rows(cfg, zs):
    """Stacked :func:`basis_row` values, one row per phase in ``zs``."""
    zs = np.clip(np.asarray(zs, dtype=float), 0.0, 1.0)
    diff = zs[:, None] - cfg.centers[None, :]
    expo = -(diff * diff) / (2.0 * cfg.width)
    expo -= expo.max(axis=1, keepdims=True)
    rows = np.exp(expo)
    rows /= rows.sum(axis=1, keepdims=True)
    return rows


def block_basis(cfg, z):
    """Block-diagonal basis matrix at one phase, shape (n_dof, weight_dim).

    Row ``d`` carries the basis row in columns [d*K, (d+1)*K) and zeros
    elsewhere, matching the DOF-major weight layout.
    """
    return np.kron(np.eye(cfg.n_dof), basis_row(cfg, z)[None, :])
