"""Independent dense reference implementations for cross-validation.

Everything here goes through plain dense linear algebra (SVD, eigensolve,
explicit matrix products) and deliberately shares no code with the fast
engines.  Oracles operate on finite truncations; callers own the choice of
dimension and the tolerance for truncation effects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpectrumHit

ORACLE_DIM_CAP = 2000


@dataclass
class DenseTruncation:
    """Finite section of a model, optionally with its finite-rank update."""

    n: int
    matrix: np.ndarray
    perturbed: np.ndarray | None = None

    @property
    def effective(self):
        return self.perturbed if self.perturbed is not None else self.matrix


def truncate(model, n, pert=None):
    """Dense n x n section of the model and, if given, of model + update."""
    if n > ORACLE_DIM_CAP:
        raise ValueError(f"oracle truncations are capped at {ORACLE_DIM_CAP}")
    if model.kind == "dense":
        mat = np.array(model.matrix[:n, :n], dtype=complex)
    else:
        if n > model.n_max:
            raise ValueError("truncation exceeds realized model entries")
        mat = np.diag(model.entries[:n].astype(complex))
    perturbed = None
    if pert is not None:
        idx = np.arange(1, n + 1)
        B = np.column_stack([col.values(model, idx) for col in pert.b_columns])
        C = np.column_stack([col.values(model, idx) for col in pert.c_columns])
        perturbed = mat + B @ np.conj(C).T
    return DenseTruncation(n=n, matrix=mat, perturbed=perturbed)


def oracle_resolvent_norm(trunc, lam, perturbed=False):
    """Reciprocal smallest singular value of (lam - T) on the truncation."""
    T = trunc.effective if perturbed else trunc.matrix
    mat = lam * np.eye(trunc.n) - T
    smin = float(np.linalg.svd(mat, compute_uv=False)[-1])
    if smin <= 1e-14:
        raise SpectrumHit(f"{lam} is numerically an eigenvalue of the truncation",
                          lam=complex(lam), distance=smin)
    return 1.0 / smin


def oracle_resolvent_solve(trunc, lam, x, perturbed=False):
    T = trunc.effective if perturbed else trunc.matrix
    mat = lam * np.eye(trunc.n) - T
    return np.linalg.solve(mat, x)


def oracle_eigens(trunc, perturbed=True):
    """All eigenvalues of the (perturbed) truncation."""
    T = trunc.effective if perturbed else trunc.matrix
    if np.count_nonzero(T - np.diag(np.diag(T))) == 0:
        return np.diag(T).copy()
    return np.linalg.eigvals(T)


def oracle_orbit(trunc, x, n, perturbed=True):
    """x after n applications of the dense truncation."""
    T = trunc.effective if perturbed else trunc.matrix
    y = np.array(x, dtype=complex)
    for _ in range(n):
        y = T @ y
    return y


def oracle_orbit_norms(trunc, x, steps, perturbed=True):
    """Norms of the orbit at every step in ``steps`` (ascending)."""
    T = trunc.effective if perturbed else trunc.matrix
    y = np.array(x, dtype=complex)
    out = []
    last = 0
    for s in steps:
        for _ in range(s - last):
            y = T @ y
        last = s
        out.append(float(np.linalg.norm(y)))
    return np.asarray(out)


def oracle_first_passage(trunc, x, threshold, n_cap, perturbed=True):
    """First step with orbit norm at or below threshold * ||x||, or None."""
    T = trunc.effective if perturbed else trunc.matrix
    y = np.array(x, dtype=complex)
    target = threshold * float(np.linalg.norm(y))
    for n in range(1, n_cap + 1):
        y = T @ y
        if float(np.linalg.norm(y)) <= target:
            return n
    return None
