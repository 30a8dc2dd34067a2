"""Command line interface.

    stablab <subcommand> --scenario <path|builtin:NAME> --out <dir> [flags]

Subcommands: certify (unperturbed circle/region certificates), perturb
(finite-rank perturbation checks), stability (the full verdict pipeline),
threshold (scale bisection), integral (power-boundedness criterion only),
scan (raw resolvent-norm grids for plotting).

Exit codes: 0 preserved/certified, 2 refuted/violated, 3 inconclusive,
1 process-level error.  STABLAB_THREADS caps internal thread pools.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import reports as rp
from . import resolvent
from .errors import StabLabError, ValidationError
from .geometry import build_grids
from .perturbation import (PerturbationContext, d_inverse_sup,
                           injectivity_factor_check, smoothed_norms,
                           spectrum_inclusion_check, transfer_bound_certify)
from .scenario import load_scenario, scenario_to_dict
from .stability import (default_probes, delta_threshold_search,
                        integral_criterion, stability_verdict)

EXIT_ERROR = 1

SUBCOMMANDS = ("certify", "perturb", "stability", "threshold", "integral", "scan")


def _apply_thread_cap():
    raw = os.environ.get("STABLAB_THREADS")
    if not raw:
        return
    try:
        cap = max(1, int(raw))
    except ValueError:
        raise ValidationError(f"STABLAB_THREADS must be an integer, got {raw!r}")
    import threadpoolctl

    threadpoolctl.threadpool_limits(limits=cap)


def _aggregate(statuses, witnesses=()):
    if witnesses or any(s == "refuted" for s in statuses):
        return "refuted"
    if statuses and all(s == "certified" for s in statuses):
        return "certified"
    return "inconclusive"


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _run_certify(scenario, flags):
    model, profile, _, res = scenario.build()
    grid = build_grids(profile, res)
    certs = [resolvent.certify_growth(model, profile, grid),
             resolvent.kreiss_check(model, grid, tol=scenario.config.tol)]
    constants = {"r_A": profile.region_radius, "d_A": profile.min_gap,
                 "M_A": certs[0].supremum, "M": certs[1].supremum}
    m0 = m1 = 0.0
    for k in range(len(profile.phis)):
        rp_k = resolvent.region_sup_plain(model, profile, k, grid)
        rs_k = resolvent.region_sup_smoothed(model, profile, k, grid)
        certs.extend([rp_k, rs_k])
        m0, m1 = max(m0, rp_k.supremum), max(m1, rs_k.supremum)
    constants["M_0"], constants["M_1"] = m0, m1
    comp = resolvent.complement_sup(model, profile, grid, m_0=m0)
    certs.append(comp)
    constants["M_2"] = comp.supremum
    certs.append(resolvent.global_smoothed_sup(model, profile, grid))
    slopes = {}
    for k, phi in enumerate(profile.phis):
        left, right = resolvent.estimate_alpha(model, phi)
        slopes[str(k)] = {"left": left, "right": right,
                          "declared": profile.alpha}
    return rp.ReportBundle(
        kind="certify",
        scenario=scenario_to_dict(scenario),
        verdict=_aggregate([c.status for c in certs]),
        reports=[c.as_dict() for c in certs],
        constants=constants,
        details={"alpha_estimate": slopes},
        scans={"circle": rp.circle_scan(model, profile, grid),
               "region": rp.region_scan(model, profile, grid)},
        provenance=rp.make_provenance(scenario, grid),
    )


def _run_perturb(scenario, flags):
    sb, sc_ = flags.get("scale_b"), flags.get("scale_c")
    model, profile, pert, res = scenario.build(scale_b=sb, scale_c=sc_)
    if pert is None:
        raise ValidationError("perturb needs a scenario with a perturbation")
    grid = build_grids(profile, res)
    ctx = PerturbationContext(model, pert)
    cfg = scenario.config

    certs, witnesses = [], []
    pairs = smoothed_norms(model, pert, profile, ctx)
    constants = {"r_A": profile.region_radius, "d_A": profile.min_gap}
    ratio = 0.0
    for k in range(len(profile.phis)):
        rep = transfer_bound_certify(model, pert, profile, k, grid, ctx)
        certs.append(rep)
        ratio = max(ratio, rep.details["empirical_ratio"])
    constants["M_R"] = ratio
    dinv = d_inverse_sup(model, pert, profile, grid, ctx)
    certs.append(dinv)
    constants["M_D"] = dinv.supremum
    for w in dinv.details["singular_witnesses"]:
        witnesses.append({"kind": "singular_transfer", "at": w})
    for k in range(len(profile.phis)):
        certs.append(injectivity_factor_check(model, pert, profile, k, ctx=ctx,
                                              seed=cfg.seed,
                                              trunc_dim=cfg.trunc_dim))
    spec_rep = spectrum_inclusion_check(model, pert, profile, grid, ctx,
                                        trunc_dim=cfg.trunc_dim)
    certs.append(spec_rep)
    for e in spec_rep.details["escaped_eigenvalues"]:
        witnesses.append({"kind": "eigenvalue_escape", "at": e})
    for w in spec_rep.details["singular_witnesses"]:
        witnesses.append({"kind": "singular_transfer", "at": w})
    return rp.ReportBundle(
        kind="perturb",
        scenario=scenario_to_dict(scenario),
        verdict=_aggregate([c.status for c in certs], witnesses),
        witnesses=witnesses,
        reports=[c.as_dict() for c in certs],
        constants=constants,
        details={"smoothed_norm_pairs": [[float(a), float(b)] for a, b in pairs],
                 "exponents": {"beta": pert.beta, "gamma": pert.gamma,
                               "alpha": profile.alpha}},
        provenance=rp.make_provenance(scenario, grid),
    )


def _run_stability(scenario, flags):
    v = stability_verdict(scenario, scale_b=flags.get("scale_b"),
                          scale_c=flags.get("scale_c"))
    model, profile, _, res = scenario.build()
    grid = build_grids(profile, res)
    scans = {"circle": rp.circle_scan(model, profile, grid),
             "region": rp.region_scan(model, profile, grid)}
    if "criterion" in v.quadratures:
        scans["quadrature"] = rp.quadrature_scan(v.quadratures["criterion"])
    if v.decay:
        scans["decay"] = rp.decay_scan(v.decay[0])
    return rp.ReportBundle(
        kind="stability",
        scenario=scenario_to_dict(scenario),
        verdict=v.verdict,
        hypothesis=v.hypothesis,
        empirical=v.empirical,
        witnesses=v.witnesses,
        reports=[c.as_dict() for c in v.reports],
        quadratures={k: q.as_dict() for k, q in v.quadratures.items()},
        constants=v.constants,
        scans=scans,
        provenance=rp.make_provenance(scenario, grid),
    )


def _run_threshold(scenario, flags):
    bounds = (flags.get("scale_lo", 1.0), flags.get("scale_hi", 20.0))
    lo, hi, details = delta_threshold_search(scenario, bounds=bounds)
    return rp.ReportBundle(
        kind="threshold",
        scenario=scenario_to_dict(scenario),
        verdict="certified",
        constants={"r_A": scenario.profile().region_radius,
                   "d_A": scenario.profile().min_gap},
        details={"bracket": [lo, hi], **details},
        provenance=rp.make_provenance(scenario),
    )


def _run_integral(scenario, flags):
    model, profile, pert, res = scenario.build(scale_b=flags.get("scale_b"),
                                               scale_c=flags.get("scale_c"))
    cfg = scenario.config
    probes = default_probes(model, cfg.basis_probes, cfg.random_probes, cfg.seed)
    qr = integral_criterion(model, profile, pert=pert, probes=probes,
                            base_panels=cfg.base_panels, check=False)
    finite = bool(np.isfinite(qr.sup_weighted)) and qr.refinement_delta <= 0.05
    return rp.ReportBundle(
        kind="integral",
        scenario=scenario_to_dict(scenario),
        verdict="certified" if finite else "inconclusive",
        quadratures={"criterion": qr.as_dict()},
        constants={"r_A": profile.region_radius, "d_A": profile.min_gap},
        details={"sup_weighted": qr.sup_weighted,
                 "refinement_delta": qr.refinement_delta,
                 "perturbed": pert is not None},
        scans={"quadrature": rp.quadrature_scan(qr)},
        provenance=rp.make_provenance(scenario),
    )


def _run_scan(scenario, flags):
    model, profile, _, res = scenario.build()
    grid = build_grids(profile, res)
    return rp.ReportBundle(
        kind="scan",
        scenario=scenario_to_dict(scenario),
        verdict=None,
        constants={"r_A": profile.region_radius, "d_A": profile.min_gap},
        scans={"circle": rp.circle_scan(model, profile, grid),
               "region": rp.region_scan(model, profile, grid)},
        provenance=rp.make_provenance(scenario, grid),
    )


_HANDLERS = {
    "certify": _run_certify,
    "perturb": _run_perturb,
    "stability": _run_stability,
    "threshold": _run_threshold,
    "integral": _run_integral,
    "scan": _run_scan,
}


def run(subcommand, scenario, **flags):
    """Run one subcommand on a loaded scenario: (bundle, exit code)."""
    if subcommand not in _HANDLERS:
        raise ValidationError(f"unknown subcommand '{subcommand}'; "
                              f"have {sorted(_HANDLERS)}")
    bundle = _HANDLERS[subcommand](scenario, flags)
    return bundle, bundle.exit_code()


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stablab",
        description="Stability laboratory for perturbed discrete semigroups")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True,
                       help="scenario JSON path or builtin:NAME")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--trunc-dim", type=int, default=None)
        p.add_argument("--grid-pts-per-decade", type=int, default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--orbit-max", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--scale-b", type=float, default=None)
        p.add_argument("--scale-c", type=float, default=None)
        if name == "threshold":
            p.add_argument("--scale-lo", type=float, default=1.0)
            p.add_argument("--scale-hi", type=float, default=20.0)
    return parser


_CONFIG_FLAGS = {
    "trunc_dim": "trunc_dim",
    "grid_pts_per_decade": "points_per_decade",
    "tol": "tol",
    "orbit_max": "orbit_max",
    "seed": "seed",
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _apply_thread_cap()
        scenario = load_scenario(args.scenario)
        overrides = {}
        for flag, cfg_field in _CONFIG_FLAGS.items():
            value = getattr(args, flag, None)
            if value is not None:
                overrides[cfg_field] = value
        if overrides:
            scenario = scenario.with_config(**overrides)
        flags = {"scale_b": args.scale_b, "scale_c": args.scale_c}
        if args.subcommand == "threshold":
            flags.update(scale_lo=args.scale_lo, scale_hi=args.scale_hi)
        bundle, code = run(args.subcommand, scenario, **flags)
        rp.emit_reports(bundle, args.out)
        print(f"{args.subcommand}: {bundle.verdict or 'done'} "
              f"(exit {code}); reports in {args.out}")
        return code
    except StabLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
