"""Spectral profiles, near-point regions, and scan-grid generation.

A profile declares the distinguished unit-circle points together with the
growth order ``alpha``, the neighborhood half-width ``eps_a``, and the growth
constant ``m_a`` the certificates are checked against.  Regions are the
punctured chordal neighborhoods of the distinguished points intersected with
the closed exterior of the unit disk; grids are deterministic functions of
(profile, resolution).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ResolutionTooCoarse
from .models import TWO_PI, circ_dist

FAR_FIELD_RADIUS = 3.0


@dataclass(frozen=True)
class SpectralProfile:
    """Distinguished boundary points with declared growth data.

    phis: sorted distinct angles in [0, 2pi); alpha >= 1 is the growth order;
    eps_a the angular neighborhood half-width; m_a >= 1 the declared bound.
    """

    phis: tuple
    alpha: float
    eps_a: float
    m_a: float

    def __post_init__(self):
        object.__setattr__(self, "phis", tuple(float(p) for p in self.phis))

    @property
    def n_points(self):
        return len(self.phis)

    @property
    def min_gap(self):
        # smallest pairwise circular gap; a full turn when there is one point
        if len(self.phis) < 2:
            return TWO_PI
        gaps = [
            circ_dist(a, b)
            for i, a in enumerate(self.phis)
            for b in self.phis[i + 1 :]
        ]
        return float(min(gaps))

    @property
    def region_radius(self):
        # chord length subtended by eps_a
        return float(abs(1.0 - np.exp(1j * self.eps_a)))

    def unit_values(self):
        return np.exp(1j * np.asarray(self.phis))


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple


def validate_profile(profile):
    """Check every profile invariant; returns a report listing violated clauses."""
    bad = []
    phis = profile.phis
    if len(phis) < 1:
        bad.append("phis: at least one distinguished point is required")
    if len(set(phis)) != len(phis):
        bad.append("phis: points must be pairwise distinct")
    if any(not (0.0 <= p < TWO_PI) for p in phis):
        bad.append("phis: angles must lie in [0, 2pi)")
    if list(phis) != sorted(phis):
        bad.append("phis: angles must be sorted")
    if not profile.alpha >= 1.0:
        bad.append(f"alpha: growth order must be >= 1 (got {profile.alpha})")
    cap = min(np.pi / 8.0, profile.min_gap / 3.0)
    if not (0.0 < profile.eps_a <= cap + 1e-15):
        bad.append(
            f"eps_a: must satisfy 0 < eps_a <= min(pi/8, gap/3) = {cap:.6g} "
            f"(got {profile.eps_a})"
        )
    if not profile.m_a >= 1.0:
        bad.append(f"m_a: growth constant must be >= 1 (got {profile.m_a})")
    return ValidationReport(ok=not bad, violations=tuple(bad))


@dataclass(frozen=True)
class Region:
    """Punctured chordal neighborhood of one distinguished point, outside the disk."""

    point_index: int
    phi: float
    radius: float


def region_contains(region, lam):
    lam = complex(lam)
    d = abs(lam - np.exp(1j * region.phi))
    return abs(lam) >= 1.0 and 0.0 < d <= region.radius


def regions(profile):
    r = profile.region_radius
    return [Region(k, phi, r) for k, phi in enumerate(profile.phis)]


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridResolution:
    """Density parameters for all scan grids.

    ``points_per_decade`` controls every log-spaced axis; ``min_offset`` is
    the angular floor toward each distinguished point; radial grids cover
    ``r - 1`` in [radial_lo, radial_hi].
    """

    points_per_decade: int = 10
    min_offset: float = 1e-5
    radial_lo: float = 1e-6
    radial_hi: float = 1.0
    uniform_angles: int = 360
    region_angles: int = 48

    def __post_init__(self):
        if self.points_per_decade < 8:
            raise ResolutionTooCoarse(
                f"need at least 8 points per decade (got {self.points_per_decade})"
            )


def log_ladder(lo, hi, ppd):
    """Exact per-decade lattice lo * 10**(j/ppd) capped at hi inclusively."""
    if hi < lo:
        return np.array([])
    count = int(np.floor(ppd * np.log10(hi / lo) + 1e-12)) + 1
    return lo * 10.0 ** (np.arange(count) / ppd)


@dataclass(frozen=True)
class ScanGrid:
    """Deterministic grids: circle angles, radial shells, per-region 2-D points."""

    circle_angles: np.ndarray
    radial_r: np.ndarray
    region_points: tuple  # one complex array per distinguished point
    resolution: GridResolution
    profile: SpectralProfile
    level: int = 0


def _circle_angles(profile, res):
    parts = [np.arange(res.uniform_angles) * (TWO_PI / res.uniform_angles)]
    offs = log_ladder(res.min_offset, profile.eps_a, res.points_per_decade)
    for phi in profile.phis:
        parts.append(np.mod(phi + offs, TWO_PI))
        parts.append(np.mod(phi - offs, TWO_PI))
    angles = np.unique(np.concatenate(parts))
    # the distinguished points themselves are never grid points
    keep = np.ones(len(angles), dtype=bool)
    for phi in profile.phis:
        keep &= circ_dist(angles, phi) > res.min_offset * 0.5
    return angles[keep]


def _region_points(profile, k, res):
    """Polar grid over a region: log-spaced distance x uniform angle, |lam| >= 1."""
    phi = profile.phis[k]
    center = np.exp(1j * phi)
    dists = log_ladder(res.min_offset, profile.region_radius, res.points_per_decade)
    angs = np.arange(res.region_angles) * (TWO_PI / res.region_angles)
    lam = center + dists[:, None] * np.exp(1j * angs[None, :])
    lam = lam.ravel()
    lam = lam[np.abs(lam) >= 1.0]
    # on-circle points at each distance shell: chord d <=> angle 2 asin(d/2)
    psi = 2.0 * np.arcsin(np.minimum(dists / 2.0, 1.0))
    on_circle = np.concatenate([np.exp(1j * (phi + psi)), np.exp(1j * (phi - psi))])
    out = np.concatenate([lam, on_circle])
    order = np.lexsort((out.imag, out.real))
    return out[order]


def build_grids(profile, resolution=None):
    res = resolution or GridResolution()
    angles = _circle_angles(profile, res)
    radial = 1.0 + log_ladder(res.radial_lo, res.radial_hi, res.points_per_decade)
    region_pts = tuple(_region_points(profile, k, res) for k in range(profile.n_points))
    return ScanGrid(
        circle_angles=angles,
        radial_r=radial,
        region_points=region_pts,
        resolution=res,
        profile=profile,
    )


def refine(grid):
    """One refinement step: double every log density (a superset of the old grid)."""
    res = grid.resolution
    finer = replace(res, points_per_decade=res.points_per_decade * 2,
                    uniform_angles=res.uniform_angles * 2,
                    region_angles=res.region_angles * 2)
    out = build_grids(grid.profile, finer)
    return replace(out, level=grid.level + 1)


def complement_points(profile, grid):
    """Exterior scan set: 1 <= |lam| <= far field, outside every region."""
    res = grid.resolution
    radii = 1.0 + log_ladder(res.radial_lo, FAR_FIELD_RADIUS - 1.0, res.points_per_decade)
    angs = grid.circle_angles
    lam = (radii[:, None] * np.exp(1j * angs[None, :])).ravel()
    r_a = profile.region_radius
    keep = np.ones(len(lam), dtype=bool)
    for phi in profile.phis:
        keep &= np.abs(lam - np.exp(1j * phi)) > r_a
    return lam[keep]


def arc_partition(profile, r):
    """Split [0, 2pi) at radius r into per-point arcs and the remainder.

    Returns (arcs, half_widths): arcs[k] = (phi_k - h_k, phi_k + h_k) is the
    angular window where r e^{i phi} falls inside region k (law of cosines);
    empty windows get h_k = 0.
    """
    if r <= 1.0:
        raise ValueError("arc partition needs r > 1")
    r_a = profile.region_radius
    halves = []
    for phi in profile.phis:
        if r > 1.0 + r_a:
            halves.append(0.0)
            continue
        c = (r * r + 1.0 - r_a * r_a) / (2.0 * r)
        halves.append(float(np.arccos(np.clip(c, -1.0, 1.0))))
    arcs = [(phi - h, phi + h) for phi, h in zip(profile.phis, halves)]
    return arcs, np.asarray(halves)
