"""Verdict engine: orbit decay, the integral criterion, majorant machinery,
perturbed growth, and the scale-threshold search.

Everything here composes the certified primitives from the other modules into
the preservation pipeline: hypothesis certificates first, then empirical
checks, then a three-way verdict.  Component failures land in the report as
inconclusive entries; only explicit witnesses (an eigenvalue outside the
closed disk, a singular transfer matrix on a grid) produce "violated".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import norms, resolvent
from .errors import BracketInvalid, QuadratureUnstable, StabLabError
from .geometry import build_grids, refine
from .models import circ_dist
from .perturbation import (PerturbationContext, SmwKernel, column_norm,
                           d_inverse_sup, injectivity_factor_check,
                           proportional_split, smoothed_norms,
                           spectrum_inclusion_check, transfer_bound_certify,
                           transfer_values)
from .quadrature import QuadratureResult, circle_mesh, radial_grid
from .resolvent import CertificateReport, _delta, _status

ORBIT_TABLE_POINTS = 64


# ---------------------------------------------------------------------------
# orbit decay
# ---------------------------------------------------------------------------


@dataclass
class DecayTable:
    steps: np.ndarray
    norms: np.ndarray
    first_passage: int | None
    threshold: float
    budget: int

    def as_rows(self):
        return list(zip(self.steps.tolist(), self.norms.tolist()))


def orbit_decay(model, x, n_max=100000, threshold=1e-3, pert=None, ctx=None):
    """Norm history of the orbit under A (or A + BC) with first passage.

    Sequential application on the head truncation: diagonal step plus a
    rank-p correction, linear cost per step.  The first step index where
    the norm falls to threshold * ||x|| is recorded; "not reached" is None.
    """
    if n_max < 1:
        raise ValueError("orbit budget must be at least 1")
    z = np.asarray(x, dtype=complex).copy()
    base = float(np.linalg.norm(z))
    sample = np.unique(np.concatenate([
        [0], np.round(np.logspace(0, np.log10(max(n_max, 1)),
                                  ORBIT_TABLE_POINTS)).astype(int)]))
    sample = sample[sample <= n_max]
    if base == 0.0:
        return DecayTable(steps=sample, norms=np.zeros(len(sample)),
                          first_passage=0, threshold=threshold, budget=n_max)
    b = c = None
    if pert is not None and pert.rank > 0:
        ctx = ctx or PerturbationContext(model, pert)
        b, c = ctx.b_head, ctx.c_head
    entries = model.entries
    cut = threshold * base
    wanted = set(int(s) for s in sample)
    table = {0: base}
    first = 0 if base <= cut else None
    escape = 1e100 * max(base, 1.0)
    for n in range(1, n_max + 1):
        if b is not None:
            z = entries * z + b @ (np.conj(c).T @ z)
        else:
            z = entries * z
        val = float(np.linalg.norm(z))
        if first is None and val <= cut:
            first = n
        if n in wanted or n == first:
            table[n] = val
        if not np.isfinite(val) or val > escape:
            # runaway orbit: keep the table computed so far, passage stays open
            table[n] = val
            break
    steps = np.array(sorted(table))
    return DecayTable(steps=steps, norms=np.array([table[int(s)] for s in steps]),
                      first_passage=first, threshold=threshold, budget=n_max)


# ---------------------------------------------------------------------------
# integral criterion
# ---------------------------------------------------------------------------


def default_probes(model, basis=20, random=20, seed=7):
    """Probe rows: leading basis vectors plus seeded complex Gaussians."""
    n = model.n_max
    rng = np.random.default_rng(seed)
    rows = []
    for i in range(min(basis, n)):
        e = np.zeros(n, dtype=complex)
        e[i] = 1.0
        rows.append(e)
    if random > 0:
        g = rng.standard_normal((random, n)) + 1j * rng.standard_normal((random, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        rows.extend(g)
    return np.array(rows)


def _unpert_probe_sq(model, lams, X, chunk=2048):
    """||R(lam) x||^2 for head rows X: exact head sum, batched (B, q)."""
    lams = norms.as_batch(lams)
    Xa = np.abs(np.asarray(X, dtype=complex).T) ** 2
    out = np.empty((len(lams), Xa.shape[1]))
    for i in range(0, len(lams), chunk):
        part = lams[i:i + chunk, None] - model.entries[None, :]
        out[i:i + chunk] = (1.0 / np.abs(part) ** 2) @ Xa
    return out


def _criterion_sweep(model, profile, probes, pert, ctx, r_grid, base_panels,
                     width_floor, kern=None):
    """Per (r, pair) integrals of ||R x||^2 + ||R* y||^2 over the circle."""
    node_batches, weights, radii = [], [], []
    for r in r_grid:
        nd, wt = circle_mesh(profile, r, base_panels, width_floor)
        node_batches.append(r * np.exp(1j * nd))
        weights.append(wt)
    lams = np.concatenate(node_batches)
    if pert is None or pert.rank == 0:
        direct = _unpert_probe_sq(model, lams, probes)
        vals = 2.0 * direct  # adjoint side has the same modulus kernel
    else:
        kern = kern or SmwKernel(model, pert, ctx)
        out = kern.probe_norms_sq(lams, probes, probes_y=probes)
        vals = out["x_sq"] + out["y_sq"]
    integrals = np.empty((len(r_grid), probes.shape[0]))
    off = 0
    for i, wt in enumerate(weights):
        integrals[i] = wt @ vals[off:off + len(wt)]
        off += len(wt)
    return integrals


def integral_criterion(model, profile, pert=None, probes=None, ctx=None,
                       r_grid=None, base_panels=24, width_floor=1e-7,
                       stability_tol=0.05, check=True):
    """Power-boundedness criterion on sampled probe pairs.

    For each pair the quantity is sup over the r grid of
    (r-1) * integral of ||R(re^{i phi}) x||^2 + ||R(re^{i phi})^* y||^2;
    the report keeps per-pair suprema and the overall maximum.  The mesh
    is halved once as a stability check.
    """
    r_grid = radial_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    if probes is None:
        probes = default_probes(model)
    probes = np.atleast_2d(np.asarray(probes, dtype=complex))
    if probes.shape[0] == 0 or not np.any(np.abs(probes)):
        zeros = np.zeros(len(r_grid))
        return QuadratureResult(r_grid=r_grid, values=zeros, sup_weighted=0.0,
                                refinement_delta=0.0,
                                details={"per_pair_sup": [], "pairs": 0})
    kern = None
    if pert is not None and pert.rank > 0:
        kern = SmwKernel(model, pert, ctx)

    coarse = _criterion_sweep(model, profile, probes, pert, ctx, r_grid,
                              base_panels, width_floor, kern)
    fine = _criterion_sweep(model, profile, probes, pert, ctx, r_grid,
                            base_panels * 2, width_floor / 2.0, kern)
    wt = (r_grid - 1.0)[:, None]
    per_pair = np.max(wt * fine, axis=0)
    sup_fine = float(np.max(per_pair))
    sup_coarse = float(np.max(wt * coarse))
    delta = abs(sup_fine - sup_coarse) / max(abs(sup_fine), abs(sup_coarse), 1e-300)
    if check and delta > stability_tol:
        raise QuadratureUnstable(
            f"probe criterion moved {delta:.3g} under mesh halving")
    return QuadratureResult(
        r_grid=r_grid, values=np.max(fine, axis=1), sup_weighted=sup_fine,
        refinement_delta=delta,
        details={"per_pair_sup": [float(v) for v in per_pair],
                 "pairs": int(probes.shape[0]),
                 "worst_pair": int(np.argmax(per_pair)),
                 "sup_coarse": sup_coarse})


def finite_rank_integral(model, columns, profile, r_grid=None, base_panels=24,
                         width_floor=1e-7, weight_exponents=None,
                         stability_tol=0.05, check=True, adjoint=False):
    """sup over r of (r-1) * integral of sum_j ||R(re^{i phi}) b_j||^2.

    The sum over columns is the trace of the column Gram against the squared
    modulus kernel; the adjoint analogue has the same value kernel, so the
    flag only relabels the report.  Tail errors from the series engine are
    folded into the reported value.
    """
    r_grid = radial_grid() if r_grid is None else np.asarray(r_grid, dtype=float)
    cols = tuple(columns)
    if not cols:
        return QuadratureResult(r_grid=r_grid, values=np.zeros(len(r_grid)),
                                sup_weighted=0.0, refinement_delta=0.0,
                                details={"columns": 0, "adjoint": adjoint})
    ps = norms.PairSums(model, cols, cols, weight_exponents)

    def integrand(lams):
        vals, err = ps.evaluate(lams, kernel="abs2",
                                tail_dist=norms.tail_min_dist(model, lams))
        tr = np.real(np.trace(vals, axis1=1, axis2=2))
        return tr + len(cols) * err

    def sweep(panels, floor):
        out = np.empty(len(r_grid))
        for i, r in enumerate(r_grid):
            nd, wt = circle_mesh(profile, r, panels, floor)
            out[i] = float(wt @ integrand(r * np.exp(1j * nd)))
        return out

    coarse = sweep(base_panels, width_floor)
    fine = sweep(base_panels * 2, width_floor / 2.0)
    sup_c = float(np.max((r_grid - 1.0) * coarse))
    sup_f = float(np.max((r_grid - 1.0) * fine))
    delta = abs(sup_f - sup_c) / max(abs(sup_f), abs(sup_c), 1e-300)
    if check and delta > stability_tol:
        raise QuadratureUnstable(
            f"finite-rank integral moved {delta:.3g} under mesh halving")
    return QuadratureResult(r_grid=r_grid, values=fine, sup_weighted=sup_f,
                            refinement_delta=delta,
                            details={"columns": len(cols), "adjoint": adjoint,
                                     "sup_coarse": sup_c})


# ---------------------------------------------------------------------------
# majorant machinery
# ---------------------------------------------------------------------------


def fk_constant(model, pert, profile, k, m_1, ctx=None):
    """Assembled constant and split for the point-k majorant.

    K multiplies the smoothed region constant by the fractional block norms;
    the moment-inequality constants are 1 for diagonal models (verified by
    the sampled probes), which is recorded rather than assumed silently.
    """
    ctx = ctx or PerturbationContext(model, pert)
    alpha = profile.alpha
    b1, g1 = proportional_split(pert, alpha)
    nb, _ = column_norm(ctx.smoothed_gram("b", b1, k))
    nc, _ = column_norm(ctx.smoothed_gram("c", g1, k))
    const = m_1 * nb ** (b1 / alpha) * nc ** (g1 / alpha)
    return {"K": float(const), "split": (b1, g1), "block_b": nb, "block_c": nc,
            "moment_constants": (1.0, 1.0), "m_1": m_1}


def fk_evaluate(model, pert, profile, k, lams, m_1, ctx=None, assembled=None):
    """Majorant values on a batch plus the certified upper for each point.

    Returns (values, uppers): value = K * g^{1-b1/a} * h^{1-g1/a} with g, h
    the smoothed block resolvent norms; uppers use the + tail-error side.
    A zero exponent makes that factor exactly 1.
    """
    ctx = ctx or PerturbationContext(model, pert)
    assembled = assembled or fk_constant(model, pert, profile, k, m_1, ctx)
    alpha = profile.alpha
    b1, g1 = assembled["split"]
    lams = norms.as_batch(lams)
    td = norms.tail_min_dist(model, lams)

    def block(side, exponent):
        ps = ctx.smoothed_gram(side, exponent, k)
        vals, err = ps.evaluate(lams, kernel="abs2", tail_dist=td)
        sig = np.linalg.svd(vals, compute_uv=False)[..., 0]
        return np.sqrt(np.maximum(sig, 0.0)), np.sqrt(np.maximum(sig + err, 0.0))

    ones = np.ones(len(lams))
    eb, eg = 1.0 - b1 / alpha, 1.0 - g1 / alpha
    g_val, g_up = block("b", b1) if eb != 0.0 else (ones, ones)
    h_val, h_up = block("c", g1) if eg != 0.0 else (ones, ones)
    value = assembled["K"] * g_val**eb * h_val**eg
    upper = assembled["K"] * g_up**eb * h_up**eg
    return value, upper


def fk_domination_check(model, pert, profile, k, lams, m_1, ctx=None, tol=1e-9):
    """||R B|| * ||C R|| <= f_k pointwise on the given batch."""
    ctx = ctx or PerturbationContext(model, pert)
    lams = norms.as_batch(lams)
    td = norms.tail_min_dist(model, lams)
    gb, _ = ctx.gram_b.evaluate(lams, kernel="abs2", tail_dist=td)
    gc, _ = ctx.gram_c.evaluate(lams, kernel="abs2", tail_dist=td)
    lhs = np.sqrt(np.linalg.svd(gb, compute_uv=False)[..., 0]
                  * np.linalg.svd(gc, compute_uv=False)[..., 0])
    _, fk_up = fk_evaluate(model, pert, profile, k, lams, m_1, ctx)
    ratio = lhs / np.maximum(fk_up, 1e-300)
    return {"max_ratio": float(np.max(ratio)), "ok": bool(np.max(ratio) <= 1.0 + tol),
            "points": int(len(lams))}


def fk_properties_certify(model, pert, profile, k, grid, m_1, ctx=None,
                          r_grid=None, base_panels=24, width_floor=1e-7,
                          stability_tol=0.05):
    """Both finiteness properties of the point-k majorant.

    Circle side: sup of |phi - phi_k|^alpha f_k(e^{i phi}) over the angle
    grid (two levels).  Radial side: sup of (r-1) * integral of f_k^2, with
    the Hoelder cross-bound from the two smoothed finite-rank integrals.
    """
    ctx = ctx or PerturbationContext(model, pert)
    assembled = fk_constant(model, pert, profile, k, m_1, ctx)
    alpha = profile.alpha
    phi_k = profile.phis[k]

    def circle_sup(grid_):
        # the majorant is local to region k: scan its own circle arc only
        ang = grid_.circle_angles
        mask = circ_dist(ang, phi_k) <= profile.eps_a
        ang = ang[mask]
        lams = np.exp(1j * ang)
        val, up = fk_evaluate(model, pert, profile, k, lams, m_1, ctx, assembled)
        w = circ_dist(ang, phi_k) ** alpha
        i = int(np.argmax(w * val))
        return float((w * val)[i]), float(np.max(w * up)), complex(lams[i])

    sup0, _, _ = circle_sup(grid)
    grid1 = refine(grid)
    sup1, upper1, arg = circle_sup(grid1)
    delta = _delta(sup0, sup1)

    r_grid = radial_grid() if r_grid is None else np.asarray(r_grid, dtype=float)

    def quad_sweep(panels, floor):
        out = np.empty(len(r_grid))
        for i, r in enumerate(r_grid):
            nd, wt = circle_mesh(profile, r, panels, floor)
            _, up = fk_evaluate(model, pert, profile, k, r * np.exp(1j * nd),
                                m_1, ctx, assembled)
            out[i] = float(wt @ up**2)
        return out

    q_c = quad_sweep(base_panels, width_floor)
    q_f = quad_sweep(base_panels * 2, width_floor / 2.0)
    qsup_c = float(np.max((r_grid - 1.0) * q_c))
    qsup_f = float(np.max((r_grid - 1.0) * q_f))
    q_delta = abs(qsup_f - qsup_c) / max(abs(qsup_f), abs(qsup_c), 1e-300)

    b1, g1 = assembled["split"]
    u_b = [0.0] * len(model.unit_points)
    u_c = [0.0] * len(model.unit_points)
    u_b[k], u_c[k] = -2.0 * b1, -2.0 * g1
    int_b = finite_rank_integral(model, pert.b_columns, profile, r_grid,
                                 base_panels, width_floor, tuple(u_b), check=False)
    int_c = finite_rank_integral(model, pert.c_columns, profile, r_grid,
                                 base_panels, width_floor, tuple(u_c), check=False)
    holder_ok = True
    if b1 > 0 and g1 > 0:
        inv_q, inv_qp = 1.0 - b1 / alpha, 1.0 - g1 / alpha
        bound = (assembled["K"] ** 2
                 * ((r_grid - 1.0) * int_b.values) ** inv_q
                 * ((r_grid - 1.0) * int_c.values) ** inv_qp)
        holder_ok = bool(np.all((r_grid - 1.0) * q_f <= bound * (1.0 + 1e-6) + 1e-30))

    dom = fk_domination_check(model, pert, profile, k,
                              grid1.region_points[k], m_1, ctx)
    unstable = q_delta > stability_tol
    ok = (np.isfinite(sup1) and np.isfinite(qsup_f) and holder_ok
          and dom["ok"] and not unstable)
    return CertificateReport(
        name=f"fk_properties_{k}",
        supremum=upper1,
        arg=arg,
        grid_meta={"level": grid1.level, "r_count": len(r_grid)},
        refinement_delta=max(delta, q_delta),
        status=_status(ok, False, max(delta, q_delta)),
        details={"circle_sup": sup1, "circle_upper": upper1,
                 "quad_sup": qsup_f, "quad_delta": q_delta,
                 "holder_ok": holder_ok, "domination": dom,
                 "constant": assembled["K"], "split": list(assembled["split"]),
                 "int_b_sup": int_b.sup_weighted, "int_c_sup": int_c.sup_weighted},
    )


# ---------------------------------------------------------------------------
# perturbed growth
# ---------------------------------------------------------------------------


def perturbed_growth_certify(model, pert, profile, grid, m_d, m_k, ctx=None,
                             tol=1e-9, cap=400):
    """Weighted perturbed-resolvent growth on the circle via the low-rank
    update: near each distinguished point against m_a + m_d * m_k, away
    against m_a + m_d ||B|| ||C|| m_a^2.
    """
    ctx = ctx or PerturbationContext(model, pert)
    kern = SmwKernel(model, pert, ctx)
    m_a = profile.m_a
    norm_b, _ = column_norm(ctx.gram_b)
    norm_c, _ = column_norm(ctx.gram_c)
    near_bound = m_a + m_d * m_k + tol
    away_bound = m_a + m_d * norm_b * norm_c * m_a**2 + tol

    def scan(grid_):
        ang = grid_.circle_angles
        lams = np.exp(1j * ang)
        dist = np.min(circ_dist(ang[:, None], np.asarray(profile.phis)[None, :]), axis=1)
        near = dist <= profile.eps_a
        pieces = kern.pieces(lams)
        r_val, r_up = norms.resolvent_norm_batch(model, lams)
        dinv = np.linalg.svd(pieces["d_inv"], compute_uv=False)[..., 0]
        rb = np.sqrt(np.maximum(np.linalg.svd(pieces["gram_b"], compute_uv=False)[..., 0]
                                + pieces["gram_b_err"], 0.0))
        cr = np.sqrt(np.maximum(np.linalg.svd(pieces["gram_c"], compute_uv=False)[..., 0]
                                + pieces["gram_c_err"], 0.0))
        corr = rb * dinv * cr
        low = np.maximum(r_val - corr, 0.0)
        up = r_up + corr
        if np.any(near):
            lo_n, _, _ = kern.operator_norms(lams[near], cap=cap)
            low[near] = np.maximum(low[near], lo_n)
        w = dist**profile.alpha
        if not np.any(near):
            return 0.0, 0.0, float(np.max(low)), float(np.max(up)), complex(lams[0]), 0.0
        i = int(np.argmax(np.where(near, w * low, -np.inf)))
        near_sup = float((w * low)[i])
        near_up = float(np.max((w * up)[near]))
        away_up = float(np.max(up[~near])) if np.any(~near) else 0.0
        away_sup = float(np.max(low[~near])) if np.any(~near) else 0.0
        # pointwise sanity: the perturbed norm moves by at most the correction
        # (relative to the norm scale; raw norms near the circle reach 1e6)
        ref = np.maximum(np.maximum(r_val, r_up), 1.0)
        margin = float(np.max((np.maximum(low - r_up, r_val - up) - corr) / ref))
        return near_sup, near_up, away_sup, away_up, complex(lams[i]), margin

    sup0, _, _, _, _, _ = scan(grid)
    grid1 = refine(grid)
    near_sup, near_up, away_sup, away_up, arg, margin = scan(grid1)
    delta = _delta(sup0, near_sup)
    ok = near_up <= near_bound and away_up <= away_bound and margin <= tol
    return CertificateReport(
        name="perturbed_growth",
        supremum=near_sup,
        arg=arg,
        grid_meta={"level": grid1.level, "angles": len(grid1.circle_angles)},
        refinement_delta=delta,
        status=_status(ok, False, delta),
        details={"near_upper": near_up, "near_bound": near_bound,
                 "away_upper": away_up, "away_bound": away_bound,
                 "away_sup": away_sup, "pointwise_margin": margin,
                 "block_norm_b": norm_b, "block_norm_c": norm_c},
    )


# ---------------------------------------------------------------------------
# the verdict
# ---------------------------------------------------------------------------


@dataclass
class StabilityVerdict:
    verdict: str
    hypothesis: dict
    empirical: dict
    constants: dict
    reports: list
    quadratures: dict
    decay: list
    witnesses: list = field(default_factory=list)

    def as_dict(self):
        return {
            "verdict": self.verdict,
            "hypothesis": self.hypothesis,
            "empirical": self.empirical,
            "constants": self.constants,
            "witnesses": self.witnesses,
        }


def _entry(ok, **numbers):
    out = {"pass": bool(ok) if ok is not None else None}
    out.update(numbers)
    return out


def _guard(section, name, fn):
    """Run one stage; component errors become inconclusive entries."""
    try:
        return fn()
    except StabLabError as exc:
        section[name] = _entry(None, error=f"{type(exc).__name__}: {exc}")
        return None
    except (ValueError, np.linalg.LinAlgError) as exc:
        section[name] = _entry(None, error=f"{type(exc).__name__}: {exc}")
        return None


#: unperturbed certificates keyed by (model, profile, grid) content; they are
#: scale-independent, so threshold searches reuse them across interior checks
_CERT_MEMO = {}


def _memo_cert(key, fn):
    if key not in _CERT_MEMO:
        if len(_CERT_MEMO) > 32:
            _CERT_MEMO.clear()
        _CERT_MEMO[key] = fn()
    return _CERT_MEMO[key]


def _base_key(model, profile, grid):
    from dataclasses import astuple

    return (hash(model.entries.tobytes()), model.n_max,
            profile.phis, profile.alpha, profile.eps_a, profile.m_a,
            astuple(grid.resolution), grid.level)


def stability_verdict(scenario, scale_b=None, scale_c=None):
    """Full preservation pipeline for one scenario.

    Stage order is fixed; every stage lands in the hypothesis or empirical
    section.  The verdict is "violated" only on a refutation witness,
    "preserved" only when every hypothesis and empirical entry passes.
    """
    from .geometry import validate_profile

    model, profile, pert, res = scenario.build(scale_b=scale_b, scale_c=scale_c)
    cfg = scenario.config
    grid = build_grids(profile, res)
    hyp, emp, constants = {}, {}, {}
    reports, quadratures, decay, witnesses = [], {}, [], []
    constants["r_A"] = float(profile.region_radius)
    constants["d_A"] = float(profile.min_gap)

    vr = validate_profile(profile)
    hyp["profile"] = _entry(vr.ok, violations=list(vr.violations))

    base_key = _base_key(model, profile, grid)

    def stage_growth():
        rep = _memo_cert(("growth", base_key),
                         lambda: resolvent.certify_growth(model, profile, grid))
        reports.append(rep)
        constants["M_A"] = float(rep.supremum)
        if rep.status == "refuted":
            witnesses.append({"kind": "growth_excess", "at": [rep.arg.real, rep.arg.imag],
                              "value": rep.supremum})
        hyp["growth"] = _entry(rep.status == "certified", sup=rep.supremum,
                               declared=profile.m_a, status=rep.status,
                               delta=rep.refinement_delta)
        return rep

    def stage_kreiss():
        rep = _memo_cert(("kreiss", base_key, cfg.tol),
                         lambda: resolvent.kreiss_check(model, grid, tol=cfg.tol))
        reports.append(rep)
        constants["M"] = float(rep.supremum)
        hyp["power_bound"] = _entry(rep.status == "certified", sup=rep.supremum,
                                    status=rep.status)
        return rep

    def region_reports():
        pairs = []
        for k in range(len(profile.phis)):
            rp = resolvent.region_sup_plain(model, profile, k, grid)
            rs = resolvent.region_sup_smoothed(model, profile, k, grid)
            pairs.append((rp, rs))
        return pairs

    def stage_regions():
        m0 = m1 = 0.0
        pairs = _memo_cert(("regions", base_key), region_reports)
        for k, (rp, rs) in enumerate(pairs):
            reports.extend([rp, rs])
            m0 = max(m0, rp.supremum)
            m1 = max(m1, rs.supremum)
            if rp.status != "certified" or rs.status != "certified":
                hyp["regions"] = _entry(False, status=f"{rp.status}/{rs.status}", k=k)
                return None
        comp = _memo_cert(("complement", base_key, m0),
                          lambda: resolvent.complement_sup(model, profile, grid,
                                                           m_0=m0))
        reports.append(comp)
        constants["M_0"], constants["M_1"] = float(m0), float(m1)
        constants["M_2"] = float(comp.supremum)
        hyp["regions"] = _entry(comp.status == "certified", m_0=m0, m_1=m1,
                                m_2=comp.supremum)
        return m1

    _guard(hyp, "growth", stage_growth)
    _guard(hyp, "power_bound", stage_kreiss)
    m_1 = _guard(hyp, "regions", stage_regions)

    ctx = None
    if pert is not None:
        ctx = PerturbationContext(model, pert)

        def stage_smoothed():
            rng_ok = pert.beta + pert.gamma >= profile.alpha - 1e-12
            pairs = smoothed_norms(model, pert, profile, ctx)
            finite = all(np.isfinite(a) and np.isfinite(b) for a, b in pairs)
            hyp["smoothing"] = _entry(rng_ok and finite,
                                      beta=pert.beta, gamma=pert.gamma,
                                      alpha=profile.alpha,
                                      pairs=[[float(a), float(b)] for a, b in pairs])
            return pairs

        def stage_transfer():
            ratio, sup = 0.0, 0.0
            ok = True
            for k in range(len(profile.phis)):
                rep = transfer_bound_certify(model, pert, profile, k, grid, ctx,
                                             m_2=constants.get("M_2"))
                reports.append(rep)
                sup = max(sup, rep.supremum)
                ratio = max(ratio, rep.details["empirical_ratio"])
                ok = ok and rep.status == "certified"
            constants["M_R"] = float(ratio)
            hyp["transfer"] = _entry(ok and sup < 1.0, sup=sup, ratio=ratio)
            return sup

        def stage_dinv():
            rep = d_inverse_sup(model, pert, profile, grid, ctx)
            reports.append(rep)
            constants["M_D"] = float(rep.supremum)
            for w in rep.details["singular_witnesses"]:
                witnesses.append({"kind": "singular_transfer", "at": w})
            hyp["neumann"] = _entry(rep.status == "certified",
                                    sup=rep.supremum,
                                    c=rep.details["transfer_sup"],
                                    status=rep.status)
            return rep

        def stage_injectivity():
            ok = True
            worst = 0.0
            for k in range(len(profile.phis)):
                rep = injectivity_factor_check(model, pert, profile, k, ctx=ctx,
                                               seed=cfg.seed,
                                               trunc_dim=cfg.trunc_dim)
                reports.append(rep)
                ok = ok and rep.status == "certified"
                worst = max(worst, rep.details["middle_perturbation_norm"])
            hyp["factorization"] = _entry(ok, middle_norm=worst)
            return ok

        def stage_spectrum():
            rep = spectrum_inclusion_check(model, pert, profile, grid, ctx,
                                           trunc_dim=cfg.trunc_dim)
            reports.append(rep)
            for e in rep.details["escaped_eigenvalues"]:
                witnesses.append({"kind": "eigenvalue_escape", "at": e})
            for w in rep.details["singular_witnesses"]:
                witnesses.append({"kind": "singular_transfer", "at": w})
            emp["truncation_spectrum"] = _entry(
                rep.status == "certified",
                radius=rep.details["truncation_spectral_radius"],
                dim=rep.details["trunc_dim"])
            return rep

        _guard(hyp, "smoothing", stage_smoothed)
        _guard(hyp, "transfer", stage_transfer)
        _guard(hyp, "neumann", stage_dinv)
        _guard(hyp, "factorization", stage_injectivity)
        _guard(emp, "truncation_spectrum", stage_spectrum)

    def stage_criterion():
        probes = default_probes(model, cfg.basis_probes, cfg.random_probes, cfg.seed)
        qr = integral_criterion(model, profile, pert=pert, probes=probes, ctx=ctx,
                                base_panels=cfg.base_panels, check=False)
        quadratures["criterion"] = qr
        finite = np.isfinite(qr.sup_weighted) and qr.refinement_delta <= 0.05
        emp["integral_criterion"] = _entry(finite, sup=qr.sup_weighted,
                                           delta=qr.refinement_delta,
                                           pairs=qr.details.get("pairs"))
        return qr

    _guard(emp, "integral_criterion", stage_criterion)

    if pert is not None:

        def stage_fk():
            if m_1 is None:
                raise StabLabError("smoothed region constant M_1 unavailable")
            mk, const, ok = 0.0, 0.0, True
            for k in range(len(profile.phis)):
                rep = fk_properties_certify(model, pert, profile, k, grid, m_1,
                                            ctx, base_panels=cfg.base_panels)
                reports.append(rep)
                mk = max(mk, rep.supremum)
                const = max(const, rep.details["constant"])
                ok = ok and rep.status == "certified"
            constants["M_k"], constants["K"] = float(mk), float(const)
            emp["majorant"] = _entry(ok, m_k=mk, constant=const)
            return mk

        m_k = _guard(emp, "majorant", stage_fk)

        def stage_pgrowth():
            if m_k is None or constants.get("M_D") is None:
                raise StabLabError("prerequisite constants M_D or M_k unavailable")
            rep = perturbed_growth_certify(model, pert, profile, grid,
                                           constants["M_D"], m_k, ctx,
                                           tol=cfg.tol)
            reports.append(rep)
            emp["perturbed_growth"] = _entry(
                rep.status == "certified", sup=rep.supremum,
                near_bound=rep.details["near_bound"],
                away_bound=rep.details["away_bound"],
                delta=rep.refinement_delta)
            return rep

        _guard(emp, "perturbed_growth", stage_pgrowth)

    def stage_orbit():
        x = np.zeros(model.n_max, dtype=complex)
        x[0] = 1.0
        if model.n_max > 1:
            x[1] = 1.0
        table = orbit_decay(model, x, n_max=cfg.orbit_max,
                            threshold=cfg.orbit_threshold, pert=pert, ctx=ctx)
        decay.append(table)
        reached = table.first_passage is not None
        emp["orbit_decay"] = _entry(
            True if reached else None,
            first_passage=table.first_passage, budget=cfg.orbit_max,
            threshold=cfg.orbit_threshold,
            final_norm=float(table.norms[-1]))
        return table

    _guard(emp, "orbit_decay", stage_orbit)

    seen = set()
    unique = []
    for w in witnesses:
        key = (w["kind"], tuple(round(float(v), 12) for v in w["at"]))
        if key not in seen:
            seen.add(key)
            unique.append(w)
    witnesses = unique

    if witnesses:
        verdict = "violated"
    else:
        all_pass = (all(v.get("pass") is True for v in hyp.values())
                    and all(v.get("pass") is True for v in emp.values()))
        verdict = "preserved" if all_pass else "inconclusive"
    for key in ("M", "M_A", "M_0", "M_1", "M_2", "M_R", "M_D", "M_k", "K"):
        constants.setdefault(key, None)
    return StabilityVerdict(verdict=verdict, hypothesis=hyp, empirical=emp,
                            constants=constants, reports=reports,
                            quadratures=quadratures, decay=decay,
                            witnesses=witnesses)


# ---------------------------------------------------------------------------
# threshold search
# ---------------------------------------------------------------------------


def _fast_flags(s, shared):
    """Cheap decisive core of the verdict at scale factor s.

    The transfer matrix is bilinear in (B, C), so its scan scales exactly by
    s^2 from the cached base arrays; the truncation eigensolve is the only
    per-scale numerical work.
    """
    g0 = shared["g_sigma"]
    err0 = shared["g_err"]
    s2 = s * s
    c_sup = s2 * float(np.max(g0 + err0))
    # p = 1 fast path for the singular check; general p falls back to svd
    if shared["rank"] == 1:
        dmin = np.abs(1.0 - s2 * shared["g_flat"])
        singular = bool(np.any(dmin <= 1e-10))
    else:
        d = np.eye(shared["rank"])[None] - s2 * shared["g_mat"]
        sv = np.linalg.svd(d, compute_uv=False)
        singular = bool(np.any(sv[..., -1] <= 1e-10 * np.maximum(sv[..., 0], 1.0)))
    a_diag, b_h, c_h = shared["trunc"]
    mat = np.diag(a_diag) + s2 * (b_h @ np.conj(c_h).T)
    eigs = np.linalg.eigvals(mat)
    radius = float(np.max(np.abs(eigs)))
    middle = s2 * shared["middle0"]
    escaped = radius > 1.0 + 1e-8
    if escaped or singular:
        return "violated", {"c": c_sup, "radius": radius, "middle": middle}
    if c_sup < 1.0 and middle < 1.0 and shared["base_ok"]:
        return "preserved", {"c": c_sup, "radius": radius, "middle": middle}
    return "inconclusive", {"c": c_sup, "radius": radius, "middle": middle}


def delta_threshold_search(scenario, bounds=(1.0, 20.0), interior_checks=5,
                           reduce_config=True):
    """Bisection for the scale where the certified preservation chain breaks.

    Scales (s_B, s_C) -> (s, s) jointly relative to the scenario's own scale
    factors.  The bracket shrinks until its width is 1e-3 of the initial
    width; the details carry the endpoint outcomes, the bilinear prediction
    1/sqrt(g0), and the interior re-verifications through the full pipeline.
    """
    from .geometry import complement_points
    from .scenario import REDUCED_CONFIG_OVERRIDES

    if scenario.pert is None or scenario.pert.rank == 0:
        raise BracketInvalid("threshold search needs a perturbed scenario")
    lo, hi = float(bounds[0]), float(bounds[1])
    if not (0.0 <= lo < hi):
        raise BracketInvalid(f"bad scale bounds ({lo}, {hi})")
    work_sc = scenario.with_config(**REDUCED_CONFIG_OVERRIDES) if reduce_config else scenario

    model, profile, pert, res = work_sc.build()
    ctx = PerturbationContext(model, pert)
    grid = build_grids(profile, res)

    def gather(grid_):
        shells = (grid_.radial_r[:, None] * np.exp(1j * grid_.circle_angles[None, :])).ravel()
        circle = np.exp(1j * grid_.circle_angles)
        comp = complement_points(profile, grid_)
        return np.concatenate([circle, shells, *grid_.region_points, comp])

    lams = gather(grid)
    g, g_err = transfer_values(ctx, lams)
    sig = np.linalg.svd(g, compute_uv=False)[..., 0]
    b1, gm1 = proportional_split(pert, 1.0)
    nb, _ = column_norm(ctx.smoothed_gram("b", b1, 0))
    nc, _ = column_norm(ctx.smoothed_gram("c", gm1, 0))
    dim = min(work_sc.config.trunc_dim, model.n_max)
    base_growth = resolvent.certify_growth(model, profile, grid)
    shared = {
        "g_sigma": sig, "g_err": g_err, "g_flat": g[:, 0, 0] if pert.rank == 1 else None,
        "g_mat": g, "rank": pert.rank,
        "middle0": nb * nc,
        "trunc": (model.entries[:dim], ctx.b_head[:dim], ctx.c_head[:dim]),
        "base_ok": base_growth.status == "certified",
    }
    g0 = float(np.max(sig + g_err))

    lo_flag, lo_info = _fast_flags(lo, shared)
    hi_flag, hi_info = _fast_flags(hi, shared)
    if lo_flag != "preserved":
        raise BracketInvalid(f"lower endpoint s={lo} is {lo_flag}, not preserved")
    if hi_flag == "preserved":
        raise BracketInvalid(f"upper endpoint s={hi} is preserved; nothing to bracket")

    width0 = hi - lo
    steps = []
    while hi - lo > 1e-3 * width0:
        mid = 0.5 * (lo + hi)
        flag, info = _fast_flags(mid, shared)
        steps.append({"s": mid, "flag": flag, **info})
        if flag == "preserved":
            lo = mid
        else:
            hi = mid
    sb0 = scenario.pert.scale_b
    sc0 = scenario.pert.scale_c
    interior = []
    if interior_checks > 0:
        points = np.linspace(bounds[0], lo, interior_checks + 2)[1:-1]
        for s in points:
            v = stability_verdict(work_sc, scale_b=float(s) * sb0,
                                  scale_c=float(s) * sc0)
            interior.append({"s": float(s), "verdict": v.verdict})
    # two bilinear failure modes scale as s^2: the transfer sup crossing 1
    # and the smoothed-column middle factor crossing 1; whichever crosses
    # first is the a-priori end of the certified range
    transfer_cross = float(1.0 / np.sqrt(g0)) if g0 > 0 else None
    middle_cross = (float(1.0 / np.sqrt(shared["middle0"]))
                    if shared["middle0"] > 0 else None)
    crossings = [x for x in (transfer_cross, middle_cross) if x is not None]
    details = {
        "initial": [float(bounds[0]), float(bounds[1])],
        "g0": g0, "transfer_crossing": transfer_cross,
        "middle_crossing": middle_cross,
        "predicted_end": min(crossings) if crossings else None,
        "endpoint_low": lo_info, "endpoint_high": hi_info,
        "endpoint_high_flag": hi_flag,
        "steps": len(steps), "interior": interior,
    }
    return float(lo), float(hi), details
