"""File formats: trajectory CSV and the JSON parameter file.

Trajectory CSV: header ``t,y1,...,yD``, one row per time step, raw seconds
in the time column; phase normalization happens on ingest and is never
persisted. Parameter JSON carries the weight distribution, the basis
layout, and optionally the full incremental-learner state so a session can
be resumed exactly. Floats are serialized with round-trip precision.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .basis import BasisConfig
from .errors import FileFormatError
from .estimators import NIWPrior
from .incremental import StepwiseConfig, StepwiseState, step_size
from .model import Demonstration, ProMPParams

FORMAT_VERSION = 1

_SYM_LOAD_TOL = 1e-9


def save_trajectory(path, demo):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"y{i + 1}" for i in range(demo.n_dof)])
        for t, row in zip(demo.timestamps, demo.states):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def load_trajectory(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "t" or len(header) < 2:
            raise FileFormatError(f"{path}: expected header t,y1,...,yD")
        rows = [[float(v) for v in row] for row in reader if row]
    if len(rows) < 2:
        raise FileFormatError(f"{path}: need at least two rows")
    data = np.asarray(rows, dtype=float)
    if data.shape[1] != len(header):
        raise FileFormatError(f"{path}: inconsistent column count")
    return Demonstration.from_states(data[:, 0], data[:, 1:])


def save_dataset(directory, demos):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, demo in enumerate(demos):
        save_trajectory(directory / f"demo_{i:04d}.csv", demo)


def load_dataset(directory):
    files = sorted(Path(directory).glob("*.csv"))
    if not files:
        raise FileFormatError(f"no .csv trajectories found in {directory}")
    return [load_trajectory(f) for f in files]


def _symmetrize_checked(mat, name):
    mat = np.asarray(mat, dtype=float)
    tol = _SYM_LOAD_TOL * max(1.0, float(np.max(np.abs(mat))))
    if float(np.max(np.abs(mat - mat.T))) > tol:
        raise FileFormatError(f"{name} is not symmetric within tolerance")
    return 0.5 * (mat + mat.T)


def params_to_dict(params, state=None):
    doc = {
        "format_version": FORMAT_VERSION,
        "K": params.basis.n_basis,
        "D": params.basis.n_dof,
        "basis": {
            "centers": params.basis.centers.tolist(),
            "width": params.basis.width,
        },
        "mu_w": params.mu_w.tolist(),
        "sigma_w": params.sigma_w.tolist(),
        "sigma_y": params.sigma_y.tolist(),
    }
    if state is not None:
        doc["stepwise_state"] = {
            "u1": state.u1.tolist(),
            "u2": state.u2.tolist(),
            "u3": state.u3.tolist(),
            "eta": state.eta,
            "t_eff": state.t_eff,
            "n": state.n,
            "beta": state.config.beta,
            "delta_min": state.config.delta_min,
        }
    return doc


def params_from_dict(doc):
    """Returns (params, stepwise_extras_or_None)."""
    if doc.get("format_version") != FORMAT_VERSION:
        raise FileFormatError(
            f"unsupported format_version {doc.get('format_version')!r}")
    try:
        basis = BasisConfig(n_basis=int(doc["K"]), n_dof=int(doc["D"]),
                            centers=np.asarray(doc["basis"]["centers"], float),
                            width=float(doc["basis"]["width"]))
        mu_w = np.asarray(doc["mu_w"], dtype=float)
        sigma_w = _symmetrize_checked(doc["sigma_w"], "sigma_w")
        sigma_y = _symmetrize_checked(doc["sigma_y"], "sigma_y")
    except KeyError as exc:
        raise FileFormatError(f"missing key {exc}") from exc
    params = ProMPParams(basis=basis, mu_w=mu_w, sigma_w=sigma_w,
                         sigma_y=sigma_y)
    return params, doc.get("stepwise_state")


def save_promp(path, params, state=None):
    with open(path, "w") as fh:
        json.dump(params_to_dict(params, state), fh, indent=1)
        fh.write("\n")


def load_promp(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: invalid JSON ({exc})") from exc
    return params_from_dict(doc)


def resume_state(params, extras, *, prior=None, minibatch_size=1,
                 sigma_star_uses_mle_mean=False):
    """Rebuild a StepwiseState from a loaded parameter file.

    The file stores the accumulators and counters; the prior and other
    config flags are not part of the schema and must be re-supplied
    (defaults match a fresh session). Continuing training from the result
    reproduces an uninterrupted run bit for bit.
    """
    if extras is None:
        raise FileFormatError("file has no stepwise_state to resume from")
    basis = params.basis
    if prior is None:
        prior = NIWPrior.paper_default(basis.n_basis, basis.n_dof)
    cfg = StepwiseConfig(beta=float(extras["beta"]), prior=prior,
                         minibatch_size=minibatch_size,
                         delta_min=float(extras["delta_min"]),
                         sigma_star_uses_mle_mean=sigma_star_uses_mle_mean)
    n = int(extras["n"])
    return StepwiseState(
        u1=np.asarray(extras["u1"], dtype=float),
        u2=_symmetrize_checked(extras["u2"], "u2"),
        u3=_symmetrize_checked(extras["u3"], "u3"),
        eta=float(extras["eta"]),
        t_eff=float(extras["t_eff"]),
        n=n,
        delta=step_size(n, cfg.beta, cfg.delta_min),
        params=params,
        config=cfg)
