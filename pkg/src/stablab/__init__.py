"""Numerical laboratory for stability of discrete operator semigroups
under bounded finite-rank perturbation.

The package certifies, on explicit grids with bracketed tail sums, the
hypothesis chain and the conclusions of a preservation argument: circle
resolvent growth of a declared order at finitely many unit-circle points,
fractional smoothing of the perturbation columns, boundedness of the
perturbed resolvent through a rank-p transfer matrix, the integral
criterion for power boundedness, and orbit decay.
"""

from ._version import __version__
from .errors import (BracketInvalid, IoError, ParseError, QuadratureUnstable,
                     RangeViolation, ResolutionTooCoarse, SingularD,
                     SpectrumHit, SplitInfeasible, StabLabError,
                     TailInconclusive, ValidationError, WindowTooNarrow)
from .geometry import (GridResolution, ScanGrid, SpectralProfile, build_grids,
                       refine, validate_profile)
from .models import (ExplicitColumn, OperatorModel, PolyApproachRule,
                     SmoothedPowerColumn, dense_model, diagonal_model,
                     power_bound)
from .perturbation import (FiniteRankPerturbation, PerturbationContext,
                           SmwKernel, d_inverse_sup, injectivity_factor_check,
                           smoothed_norms, smw_resolvent_apply,
                           spectrum_inclusion_check, transfer_bound_certify,
                           transfer_values)
from .quadrature import (QuadratureResult, circle_mesh,
                         closed_form_circle_abs2, radial_grid, radial_sweep)
from .reports import ReportBundle, canonical_json, emit_reports
from .resolvent import (CertificateReport, certify_growth, complement_sup,
                        estimate_alpha, global_smoothed_sup, kreiss_check,
                        moment_inequality_probe, region_sup_plain,
                        region_sup_smoothed, resolvent_norm)
from .scenario import (Scenario, dumps_scenario, load_scenario, loads_scenario,
                       scenario_to_dict)
from .stability import (DecayTable, StabilityVerdict, default_probes,
                        delta_threshold_search, fk_constant,
                        fk_properties_certify, integral_criterion,
                        orbit_decay, perturbed_growth_certify,
                        stability_verdict)

__all__ = [
    "__version__",
    "BracketInvalid", "IoError", "ParseError", "QuadratureUnstable",
    "RangeViolation", "ResolutionTooCoarse", "SingularD", "SpectrumHit",
    "SplitInfeasible", "StabLabError", "TailInconclusive", "ValidationError",
    "WindowTooNarrow",
    "GridResolution", "ScanGrid", "SpectralProfile", "build_grids", "refine",
    "validate_profile",
    "ExplicitColumn", "OperatorModel", "PolyApproachRule",
    "SmoothedPowerColumn", "dense_model", "diagonal_model", "power_bound",
    "FiniteRankPerturbation", "PerturbationContext", "SmwKernel",
    "d_inverse_sup", "injectivity_factor_check", "smoothed_norms",
    "smw_resolvent_apply", "spectrum_inclusion_check",
    "transfer_bound_certify", "transfer_values",
    "QuadratureResult", "circle_mesh", "closed_form_circle_abs2",
    "radial_grid", "radial_sweep",
    "ReportBundle", "canonical_json", "emit_reports",
    "CertificateReport", "certify_growth", "complement_sup", "estimate_alpha",
    "global_smoothed_sup", "kreiss_check", "moment_inequality_probe",
    "region_sup_plain", "region_sup_smoothed", "resolvent_norm",
    "Scenario", "dumps_scenario", "load_scenario", "loads_scenario",
    "scenario_to_dict",
    "DecayTable", "StabilityVerdict", "default_probes",
    "delta_threshold_search", "fk_constant", "fk_properties_certify",
    "integral_criterion", "orbit_decay", "perturbed_growth_certify",
    "stability_verdict",
]
