"""Operator models: exact diagonal operators with tail rules, and dense matrices.

A diagonal model realizes the infinite operator ``diag(a_1, a_2, ...)`` whose
entries are produced by a parametric rule and accumulate only at finitely many
declared unit-circle points ``e^{i phi_k}``.  Vectors live on the first
``n_max`` coordinates (the head); norms, suprema and series are computed over
the *whole* operator by combining the realized head with bracketed extrema and
sums over the un-realized tail of the rule (see :mod:`stablab.norms`).

Dense models are plain square matrices with spectrum strictly inside the unit
disk.  They serve as truncation oracles and as non-normal test subjects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import SpectrumHit, ValidationError

TWO_PI = 2.0 * np.pi

#: Default safety floor for distance-to-spectrum checks.
SPECTRUM_FLOOR = 1e-13


def circ_dist(phi, psi):
    """Shortest circular distance between angles, in [0, pi]."""
    d = np.mod(np.asarray(phi) - np.asarray(psi), TWO_PI)
    return np.minimum(d, TWO_PI - d)


# ---------------------------------------------------------------------------
# entry rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolyApproachRule:
    """Diagonal entries marching toward unit-circle points on polynomial curves.

    Entry ``n`` (1-based) belongs to point ``k = (n-1) mod N`` at step
    ``m = (n-1) // N + 1`` with angular offset ``theta = 1/m``::

        a_n = (1 - theta**order) * exp(1j * (phi_k + theta))

    The radial gap ``1 - |a_n|`` scales like ``theta**order`` while the angular
    offset scales like ``theta``, so the resolvent grows with order ``order``
    on the approach side of each point and with order 1 on the other side.

    Parameters
    ----------
    phis : tuple of float
        Accumulation angles on the unit circle.
    order : float
        Radial-gap exponent ``q >= 1``.
    """

    phis: tuple
    order: float

    def __post_init__(self):
        if self.order < 1.0:
            raise ValidationError("rule order must be >= 1", ["order >= 1"])
        if len(self.phis) == 0:
            raise ValidationError("rule needs at least one unit point", ["phis nonempty"])

    @property
    def n_points(self):
        return len(self.phis)

    def class_and_step(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        k = (idx - 1) % self.n_points
        m = (idx - 1) // self.n_points + 1
        return k, m

    def index_of(self, k, m):
        """Global 1-based index of step ``m`` in class ``k``."""
        m = np.asarray(m, dtype=np.int64)
        return (m - 1) * self.n_points + k + 1

    def curve(self, k, theta):
        """Point on the approach curve of class ``k`` at offset ``theta``."""
        theta = np.asarray(theta, dtype=float)
        return (1.0 - theta**self.order) * np.exp(1j * (self.phis[k] + theta))

    def entries(self, idx):
        k, m = self.class_and_step(idx)
        theta = 1.0 / m
        phi = np.asarray(self.phis)[k]
        return (1.0 - theta**self.order) * np.exp(1j * (phi + theta))

    def m_start(self, k, n_max):
        """First un-realized step of class ``k`` when the head stops at ``n_max``."""
        if n_max < k + 1:
            return 1
        return (n_max - k - 1) // self.n_points + 2

    def tail_radius(self, k, n_max):
        """Upper bound on |a - e^{i phi_k}| over the un-realized entries of class k."""
        theta = 1.0 / self.m_start(k, n_max)
        # |gamma(theta) - e^{i phi}| <= theta**q + theta, and theta is decreasing.
        return theta**self.order + theta


RULE_FAMILIES = {"poly_approach": PolyApproachRule}


# ---------------------------------------------------------------------------
# column rules (for finite-rank perturbations)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmoothedPowerColumn:
    """Column sequence ``v_n = scale * prod_j (1 - e^{-i phi_j} a_n)**w / n**t``.

    With ``conj=True`` the whole value is conjugated, which produces the
    adjoint-side pattern ``scale * prod_j (1 - e^{i phi_j} conj(a_n))**w / n**t``.
    ``w`` controls how strongly the column vanishes at each unit point (its
    smoothness), ``t`` the plain coordinate decay.
    """

    w: float
    t: float
    scale: complex = 1.0
    conj: bool = False

    def values(self, model, idx):
        idx = np.asarray(idx, dtype=np.int64)
        a = model.entry_values(idx)
        out = np.full(idx.shape, complex(self.scale), dtype=complex)
        if self.w != 0.0:
            for phi in model.unit_points:
                out = out * (1.0 - np.exp(-1j * phi) * a) ** self.w
        out = out / idx.astype(float) ** self.t
        return np.conj(out) if self.conj else out

    def decay_exponents(self, model):
        """(theta-exponent at own accumulation point, index-exponent) of |v_n|."""
        return self.w, self.t


@dataclass(frozen=True)
class ExplicitColumn:
    """Finitely supported column given by explicit complex coordinates."""

    coords: tuple

    def values(self, model, idx):
        idx = np.asarray(idx, dtype=np.int64)
        out = np.zeros(idx.shape, dtype=complex)
        coords = np.asarray(self.coords, dtype=complex)
        mask = idx <= len(coords)
        out[mask] = coords[idx[mask] - 1]
        return out

    def decay_exponents(self, model):
        return np.inf, np.inf


COLUMN_FAMILIES = {"smoothed_power": SmoothedPowerColumn, "explicit": ExplicitColumn}


# ---------------------------------------------------------------------------
# operator model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OperatorModel:
    """A diagonal-with-rule or dense operator with spectrum in the closed disk.

    Attributes
    ----------
    kind : str
        ``"diagonal"`` or ``"dense"``.
    n_max : int
        Truncation index: vectors live on coordinates ``1..n_max``.
    unit_points : tuple of float
        Angles of the unit-circle spectral points (empty when the spectrum
        stays strictly inside the disk).
    entries : ndarray or None
        Realized diagonal head ``a_1..a_{n_max}``.
    rule : PolyApproachRule or None
        Generator of the un-realized tail entries (``None`` = finite model).
    matrix : ndarray or None
        Dense matrix (``kind == "dense"`` only).
    """

    kind: str
    n_max: int
    unit_points: tuple
    entries: np.ndarray | None = None
    rule: PolyApproachRule | None = None
    matrix: np.ndarray | None = None

    # -- constructors ------------------------------------------------------

    def entry_values(self, idx):
        """Diagonal entries at arbitrary 1-based indices (head or tail)."""
        idx = np.asarray(idx, dtype=np.int64)
        if self.rule is None:
            out = np.zeros(idx.shape, dtype=complex)
            mask = idx <= self.n_max
            out[mask] = self.entries[idx[mask] - 1]
            return out
        out = self.rule.entries(idx)
        mask = idx <= self.n_max
        if np.any(mask):
            out = np.array(out)
            out[mask] = self.entries[idx[mask] - 1]
        return out

    def tail_radius(self):
        """Max over classes of the tail neighborhood radius (0 for finite models)."""
        if self.rule is None:
            return 0.0
        return max(self.rule.tail_radius(k, self.n_max) for k in range(self.rule.n_points))

    def adjoint_entries(self):
        return np.conj(self.entries)


def diagonal_model(n_max, rule=None, prefix=(), strict=True):
    """Build a diagonal model from an optional rule and explicit prefix.

    The prefix overrides the first ``len(prefix)`` rule entries.  Without a
    rule the model is the finite diagonal ``diag(prefix)`` (``n_max`` defaults
    to the prefix length) and has no unit-circle spectrum.
    """
    prefix = np.asarray(list(prefix), dtype=complex)
    if rule is None:
        if len(prefix) == 0:
            raise ValidationError("finite diagonal model needs explicit entries",
                                  ["prefix nonempty or rule given"])
        n_max = int(n_max or len(prefix))
        if n_max != len(prefix):
            raise ValidationError("finite diagonal model: n_max must equal prefix length",
                                  ["n_max == len(prefix)"])
        entries = prefix
        unit_points = ()
    else:
        n_max = int(n_max)
        if len(prefix) > n_max:
            raise ValidationError("prefix longer than truncation", ["len(prefix) <= n_max"])
        entries = rule.entries(np.arange(1, n_max + 1))
        entries = np.array(entries)
        entries[: len(prefix)] = prefix
        unit_points = tuple(float(p) for p in rule.phis)
    if strict and np.any(np.abs(entries) >= 1.0):
        bad = int(np.argmax(np.abs(entries) >= 1.0)) + 1
        raise ValidationError(
            f"diagonal entry a_{bad} has modulus >= 1",
            ["all |a_n| < 1"],
        )
    return OperatorModel(kind="diagonal", n_max=n_max, unit_points=unit_points,
                         entries=entries, rule=rule)


def dense_model(matrix, strict=True):
    """Build a dense model; the spectrum must lie strictly inside the unit disk."""
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError("dense model needs a square matrix", ["square matrix"])
    if strict:
        radius = float(np.max(np.abs(np.linalg.eigvals(matrix)))) if matrix.size else 0.0
        if radius >= 1.0:
            raise ValidationError(
                f"dense model has spectral radius {radius:.6g} >= 1",
                ["all eigenvalue magnitudes < 1"],
            )
    return OperatorModel(kind="dense", n_max=matrix.shape[0], unit_points=(),
                         matrix=matrix)


# ---------------------------------------------------------------------------
# fractional factors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FractionalFactor:
    """Principal fractional power of the unit factor at one spectral point.

    Represents ``(1 - e^{-i phi_k} A)**exponent`` (or the power of its adjoint
    with ``conjugate=True``).  Powers use the principal branch, which is
    well-defined because ``Re(1 - e^{-i phi_k} a) > 0`` whenever ``|a| < 1``.
    """

    point_index: int
    exponent: float
    conjugate: bool = False


def factor_base(model, point_index):
    """Diagonal of the unit factor ``1 - e^{-i phi_k} A`` on the head."""
    phi = model.unit_points[point_index] if model.unit_points else 0.0
    return 1.0 - np.exp(-1j * phi) * model.entries


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def apply(model, x):
    """One application ``A x`` on the truncation."""
    x = np.asarray(x, dtype=complex)
    if model.kind == "diagonal":
        return model.entries * x
    return model.matrix @ x


def adjoint_apply(model, x):
    """One application of the Hilbert-space adjoint ``A* x``."""
    x = np.asarray(x, dtype=complex)
    if model.kind == "diagonal":
        return np.conj(model.entries) * x
    return model.matrix.conj().T @ x


def orbit(model, x, n):
    """``A**n x`` by repeated application (exact semigroup composition)."""
    if n < 0:
        raise ValidationError("orbit index must be >= 0", ["n >= 0"])
    y = np.asarray(x, dtype=complex).copy()
    for _ in range(int(n)):
        y = apply(model, y)
    return y


def resolvent_apply(model, lam, x, floor=SPECTRUM_FLOOR):
    """Solve ``(lam - A) y = x`` on the truncation.

    Raises :class:`SpectrumHit` if ``lam`` is within ``floor`` of the spectrum
    (for diagonal models the distance includes the rule tail and the
    unit-circle accumulation points).
    """
    from . import norms  # local import: norms builds on this module

    x = np.asarray(x, dtype=complex)
    lam = complex(lam)
    if model.kind == "diagonal":
        dist = norms.spectral_distance(model, np.array([lam]))[1][0]
        if dist <= floor:
            raise SpectrumHit(f"lambda={lam} is within {floor} of the spectrum",
                              lam=lam, distance=float(dist))
        return x / (lam - model.entries)
    mat = lam * np.eye(model.n_max) - model.matrix
    smin = np.linalg.svd(mat, compute_uv=False)[-1]
    if smin <= floor:
        raise SpectrumHit(f"lambda={lam} is within {floor} of the spectrum",
                          lam=lam, distance=float(smin))
    y = np.linalg.solve(mat, x)
    return y


def fractional_apply(model, factor, x):
    """Apply a fractional power of a unit factor to a head vector.

    ``x`` may also be a row batch of vectors (shape ``(b, n_max)``).
    Diagonal models act entrywise through the principal branch; dense models
    go through a principal matrix power.
    """
    x = np.asarray(x, dtype=complex)
    theta = float(factor.exponent)
    if model.kind == "diagonal":
        base = factor_base(model, factor.point_index)
        pw = base**theta if theta != 0.0 else np.ones_like(base)
        if factor.conjugate:
            pw = np.conj(pw)
        return pw * x
    phi = 0.0
    if model.unit_points:
        phi = model.unit_points[factor.point_index]
    base = np.eye(model.n_max) - np.exp(-1j * phi) * model.matrix
    if factor.conjugate:
        base = base.conj().T
    if theta == 0.0:
        return x.copy()
    pw = scipy.linalg.fractional_matrix_power(base, theta)
    return x @ pw.T if x.ndim == 2 else pw @ x


def power_bound(model, n_probe=64):
    """``sup_{1 <= m <= n_probe} ||A**m||`` (exact for diagonal models).

    For a diagonal model the norm of every power is ``r**m`` with
    ``r = sup_n |a_n|`` taken over the full entry sequence; entries that
    accumulate on the unit circle force ``r = 1`` exactly.
    """
    if n_probe < 1:
        raise ValidationError("power bound needs n_probe >= 1", ["n_probe >= 1"])
    if model.kind == "diagonal":
        r = float(np.max(np.abs(model.entries))) if model.n_max else 0.0
        if model.rule is not None:
            # entries converge to the circle, so the supremum over the whole
            # sequence is exactly 1
            r = 1.0
        return r if r <= 1.0 else r ** float(n_probe)
    best = 0.0
    power = np.eye(model.n_max, dtype=complex)
    for _ in range(int(n_probe)):
        power = power @ model.matrix
        best = max(best, float(np.linalg.norm(power, 2)))
    return best
