"""Certificates for the unperturbed resolvent.

Each operation scans a declared bound over deterministic grids and returns a
CertificateReport.  Scanned suprema are reported on the achieved side (values
attained at actual spectrum-adjacent grid points); certification compares the
conservative side (upper brackets) against the declared constants, and in
addition requires stability under one grid refinement.  Status is

* certified    - conservative side within the bound, refinement-stable,
* refuted      - achieved side violates the bound at a witness point,
* inconclusive - neither (for example a bracket straddling the bound).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import norms
from .errors import StabLabError, WindowTooNarrow
from .geometry import FAR_FIELD_RADIUS, build_grids, complement_points, refine
from .models import circ_dist, power_bound

STABILITY_RTOL = 0.10  # two refinements within this ratio => stable


@dataclass
class CertificateReport:
    """One scanned/certified bound."""

    name: str
    supremum: float
    arg: complex
    grid_meta: dict
    refinement_delta: float
    status: str
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "name": self.name,
            "supremum": self.supremum,
            "arg": [self.arg.real, self.arg.imag],
            "grid_meta": self.grid_meta,
            "refinement_delta": self.refinement_delta,
            "status": self.status,
            "details": self.details,
        }


def _status(certified_ok, refuted, delta, tol=STABILITY_RTOL):
    if refuted:
        return "refuted"
    if certified_ok and delta <= tol:
        return "certified"
    return "inconclusive"


def _delta(sup0, sup1):
    if sup0 == sup1:
        return 0.0
    return abs(sup1 - sup0) / max(abs(sup1), 1e-300)


def resolvent_norm(model, lam):
    """Resolvent norm at one point (achieved side for diagonal, exact for dense)."""
    if model.kind == "dense":
        return norms.dense_resolvent_norm(model.matrix, lam)
    value, _ = norms.resolvent_norm_batch(model, np.array([lam]))
    return float(value[0])


def _circle_norms(model, angles):
    lams = np.exp(1j * angles)
    if model.kind == "dense":
        vals = np.array([norms.dense_resolvent_norm(model.matrix, l) for l in lams])
        return vals, vals
    return norms.resolvent_norm_batch(model, lams)


def _growth_scan(model, profile, angles):
    """Near/away split of the circle scan: returns per-branch sups and args."""
    vals, ups = _circle_norms(model, angles)
    dists = np.stack([circ_dist(angles, phi) for phi in profile.phis])
    psi = dists.min(axis=0)
    near = psi <= profile.eps_a
    out = {}
    if np.any(near):
        w_val = psi[near] ** profile.alpha * vals[near]
        w_up = psi[near] ** profile.alpha * ups[near]
        i = int(np.argmax(w_val))
        out["near"] = (float(w_val[i]), float(np.max(w_up)), float(angles[near][i]))
    else:
        out["near"] = (0.0, 0.0, float(profile.phis[0]))
    if np.any(~near):
        i = int(np.argmax(vals[~near]))
        out["away"] = (float(vals[~near][i]), float(np.max(ups[~near])), float(angles[~near][i]))
    else:
        out["away"] = (0.0, 0.0, 0.0)
    return out


def certify_growth(model, profile, grid):
    """Scan the circle growth bound: weighted norm near each point, plain away."""
    scan0 = _growth_scan(model, profile, grid.circle_angles)
    grid1 = refine(grid)
    scan1 = _growth_scan(model, profile, grid1.circle_angles)

    near_sup, near_up, near_arg = scan1["near"]
    away_sup, away_up, away_arg = scan1["away"]
    sup = max(near_sup, away_sup)
    arg = near_arg if near_sup >= away_sup else away_arg
    delta = max(_delta(scan0["near"][0], near_sup), _delta(scan0["away"][0], away_sup))
    refuted = near_sup > profile.m_a or away_sup > profile.m_a
    ok = near_up <= profile.m_a and away_up <= profile.m_a
    return CertificateReport(
        name="circle_growth",
        supremum=sup,
        arg=complex(np.exp(1j * arg)),
        grid_meta={"angles": len(grid1.circle_angles), "floor": grid.resolution.min_offset,
                   "level": grid1.level},
        refinement_delta=delta,
        status=_status(ok, refuted, delta),
        details={
            "near_sup": near_sup, "near_upper": near_up,
            "away_sup": away_sup, "away_upper": away_up,
            "declared_bound": profile.m_a, "alpha": profile.alpha,
        },
    )


def estimate_alpha(model, phi_k, window=(1e-3, 1e-1), points_per_decade=25):
    """Per-side log-log slope of the circle resolvent norm toward one point.

    Returns (left_slope, right_slope) for angles phi_k -/+ psi, psi in window.
    """
    lo, hi = window
    if hi / lo < 10.0:
        raise WindowTooNarrow("slope window must span at least one decade")
    n = int(np.ceil(points_per_decade * np.log10(hi / lo))) + 1
    psi = np.geomspace(lo, hi, n)
    slopes = []
    for sign in (-1.0, +1.0):
        vals, _ = _circle_norms(model, np.mod(phi_k + sign * psi, 2 * np.pi))
        coef = np.polyfit(-np.log(psi), np.log(vals), 1)
        slopes.append(float(coef[0]))
    return slopes[0], slopes[1]


def _kreiss_scan(model, angles, radii):
    lams = (radii[:, None] * np.exp(1j * angles[None, :])).ravel()
    weights = np.repeat(radii - 1.0, len(angles))
    if model.kind == "dense":
        vals = np.array([norms.dense_resolvent_norm(model.matrix, l) for l in lams])
        ups = vals
    else:
        vals, ups = norms.resolvent_norm_batch(model, lams)
    wv = weights * vals
    i = int(np.argmax(wv))
    return float(wv[i]), float(np.max(weights * ups)), complex(lams[i])


def kreiss_check(model, grid, tol=1e-9):
    """Scan the strong Kreiss quotient (|lam|-1)*resolvent over shells > 1."""
    m_ref = power_bound(model)
    sup0, _, _ = _kreiss_scan(model, grid.circle_angles, grid.radial_r)
    grid1 = refine(grid)
    sup1, up1, arg = _kreiss_scan(model, grid1.circle_angles, grid1.radial_r)
    delta = _delta(sup0, sup1)
    ok = up1 <= m_ref + tol
    refuted = sup1 > m_ref + tol
    return CertificateReport(
        name="kreiss_quotient",
        supremum=sup1,
        arg=arg,
        grid_meta={"radii": len(grid1.radial_r), "angles": len(grid1.circle_angles),
                   "level": grid1.level},
        refinement_delta=delta,
        status=_status(ok, refuted, delta),
        details={"power_bound": m_ref, "tolerance": tol, "upper": up1},
    )


def _region_weighted_scan(model, lams, center, alpha, weights=None, dist_power=1):
    if model.kind == "dense":
        vals = np.array([norms.dense_resolvent_norm(model.matrix, l) for l in lams])
        ups = vals
    elif weights is None:
        vals, ups = norms.resolvent_norm_batch(model, lams)
    else:
        res = norms.sup_spectral_functional(model, lams, weights, dist_power)
        vals, ups = res.value, res.upper
    w = np.abs(lams - center) ** alpha if alpha else np.ones(len(lams))
    wv = w * vals
    i = int(np.argmax(wv))
    return float(wv[i]), float(np.max(w * ups)), complex(lams[i])


def region_sup_plain(model, profile, k, grid):
    """Weighted plain-resolvent supremum over one region (distance**alpha weight)."""
    center = complex(np.exp(1j * profile.phis[k]))
    sup0, _, _ = _region_weighted_scan(model, grid.region_points[k], center, profile.alpha)
    grid1 = refine(grid)
    sup1, up1, arg = _region_weighted_scan(model, grid1.region_points[k], center, profile.alpha)
    delta = _delta(sup0, sup1)
    m = power_bound(model)
    chain = 2.0 ** profile.alpha * (m + profile.m_a * (1.0 + m))
    return CertificateReport(
        name=f"region_plain_{k}",
        supremum=sup1,
        arg=arg,
        grid_meta={"points": len(grid1.region_points[k]),
                   "floor": grid.resolution.min_offset, "level": grid1.level},
        refinement_delta=delta,
        status=_status(np.isfinite(up1), False, delta),
        details={"upper": up1, "chain_bound": chain,
                 "chain_ok": bool(up1 <= chain)},
    )


def region_sup_smoothed(model, profile, k, grid):
    """Supremum of the unit-factor-smoothed resolvent norm over one region.

    For diagonal models the smoothed operator norm is the exact entrywise
    supremum of |1 - e^{-i phi_k} a|**alpha / |lam - a| plus the tail bracket.
    """
    if model.kind == "dense":
        raise StabLabError("smoothed region scans are defined for diagonal models")
    weights = [0.0] * profile.n_points
    weights[k] = profile.alpha
    center = complex(np.exp(1j * profile.phis[k]))
    sup0, _, _ = _region_weighted_scan(
        model, grid.region_points[k], center, 0.0, tuple(weights))
    grid1 = refine(grid)
    sup1, up1, arg = _region_weighted_scan(
        model, grid1.region_points[k], center, 0.0, tuple(weights))
    delta = _delta(sup0, sup1)
    return CertificateReport(
        name=f"region_smoothed_{k}",
        supremum=sup1,
        arg=arg,
        grid_meta={"points": len(grid1.region_points[k]),
                   "floor": grid.resolution.min_offset, "level": grid1.level},
        refinement_delta=delta,
        status=_status(np.isfinite(up1), False, delta),
        details={"upper": up1, "alpha": profile.alpha},
    )


def complement_sup(model, profile, grid, m_0=None):
    """Plain resolvent supremum outside the disk and all regions, with far field."""
    lams0 = complement_points(profile, grid)
    grid1 = refine(grid)
    lams1 = complement_points(profile, grid1)
    m = power_bound(model)
    far = m / (FAR_FIELD_RADIUS - 1.0)

    def scan(lams):
        if model.kind == "dense":
            vals = np.array([norms.dense_resolvent_norm(model.matrix, l) for l in lams])
            ups = vals
        else:
            vals, ups = norms.resolvent_norm_batch(model, lams)
        i = int(np.argmax(vals))
        return float(vals[i]), float(np.max(ups)), complex(lams[i])

    sup0, _, _ = scan(lams0)
    sup1, up1, arg = scan(lams1)
    delta = _delta(sup0, sup1)
    details = {"upper": max(up1, far), "far_field_bound": far,
               "grid_sup": sup1}
    if m_0 is not None:
        chain = max(profile.m_a, m_0 / profile.region_radius ** profile.alpha) * (1.0 + m)
        details["chain_bound"] = chain
        details["chain_ok"] = bool(max(up1, far) <= chain)
    return CertificateReport(
        name="complement_plain",
        supremum=max(sup1, far),
        arg=arg,
        grid_meta={"points": len(lams1), "far_field_radius": FAR_FIELD_RADIUS,
                   "level": grid1.level},
        refinement_delta=delta,
        status=_status(np.isfinite(up1), False, delta),
        details=details,
    )


def global_smoothed_sup(model, profile, grid):
    """Supremum of the all-factors-smoothed resolvent over regions plus complement."""
    if model.kind == "dense":
        raise StabLabError("smoothed scans are defined for diagonal models")
    weights = tuple(profile.alpha for _ in profile.phis)

    def scan(grid_):
        lams = np.concatenate([*grid_.region_points, complement_points(profile, grid_)])
        res = norms.sup_spectral_functional(model, lams, weights, 1)
        i = int(np.argmax(res.value))
        return float(res.value[i]), float(np.max(res.upper)), complex(lams[i])

    sup0, _, _ = scan(grid)
    grid1 = refine(grid)
    sup1, up1, arg = scan(grid1)
    delta = _delta(sup0, sup1)
    # diagonal factors commute; spot-check the product in both orders
    commute_err = 0.0
    if profile.n_points >= 2:
        a = model.entries[: min(64, model.n_max)]
        f1 = (1.0 - np.exp(-1j * profile.phis[0]) * a) ** profile.alpha
        f2 = (1.0 - np.exp(-1j * profile.phis[1]) * a) ** profile.alpha
        commute_err = float(np.max(np.abs(f1 * f2 - f2 * f1)))
    return CertificateReport(
        name="global_smoothed",
        supremum=sup1,
        arg=arg,
        grid_meta={"level": grid1.level},
        refinement_delta=delta,
        status=_status(np.isfinite(up1), False, delta),
        details={"upper": up1, "commute_err": commute_err},
    )


def moment_inequality_probe(model, k, theta_tilde, theta, samples=1000, seed=0):
    """Empirical interpolation-constant probe for fractional unit-factor powers.

    Samples vectors x and maximizes ||F^t~ x|| / (||x||^(1-t~/t) ||F^t x||^(t~/t))
    where F is the unit factor at point k.  For diagonal models the true
    constant is 1 (Hoelder on the spectral weights), so the probe should stay
    at or below 1 up to roundoff.
    """
    if not 0.0 < theta_tilde < theta:
        raise ValueError("need 0 < theta_tilde < theta")
    from .models import FractionalFactor, fractional_apply

    rng = np.random.default_rng(seed)
    dim = model.n_max
    f_small = FractionalFactor(point_index=k, exponent=theta_tilde)
    f_big = FractionalFactor(point_index=k, exponent=theta)
    frac = theta_tilde / theta
    best = 0.0
    batch = 50
    done = 0
    while done < samples:
        b = min(batch, samples - done)
        X = rng.standard_normal((b, dim)) + 1j * rng.standard_normal((b, dim))
        num = np.linalg.norm(fractional_apply(model, f_small, X), axis=1)
        den_x = np.linalg.norm(X, axis=1) ** (1.0 - frac)
        den_f = np.linalg.norm(fractional_apply(model, f_big, X), axis=1) ** frac
        ratio = num / np.maximum(den_x * den_f, 1e-300)
        best = max(best, float(np.max(ratio)))
        done += b
    return best
