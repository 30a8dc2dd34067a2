"""Scenario descriptions: model, profile, perturbation, and experiment config.

A scenario is a plain JSON document so runs are reproducible and diffable.
Serialization is canonical (sorted keys, fixed float repr) and round-trips
byte-identically; complex scalars are stored as [re, im] pairs.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ParseError, ValidationError
from .geometry import GridResolution, SpectralProfile, validate_profile
from .models import (COLUMN_FAMILIES, RULE_FAMILIES, OperatorModel, diagonal_model,
                     dense_model)
from .perturbation import FiniteRankPerturbation

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ColumnSpec:
    family: str
    params: tuple  # sorted (key, value) pairs; complex values as [re, im]

    def build(self):
        if self.family not in COLUMN_FAMILIES:
            raise ValidationError(f"unknown column family '{self.family}'")
        kwargs = {}
        for key, value in self.params:
            if key == "scale":
                value = complex(value[0], value[1]) if isinstance(value, (list, tuple)) else value
            if key == "coords":
                value = tuple(complex(v[0], v[1]) for v in value)
            kwargs[key] = value
        return COLUMN_FAMILIES[self.family](**kwargs)


@dataclass(frozen=True)
class ModelSpec:
    kind: str = "diagonal"
    rule: str | None = "poly_approach"
    rule_params: tuple = ()
    prefix: tuple = ()
    n_max: int = 2000

    def build(self):
        if self.kind != "diagonal":
            raise ValidationError("only diagonal scenario models are supported")
        rule = None
        if self.rule is not None:
            if self.rule not in RULE_FAMILIES:
                raise ValidationError(f"unknown rule family '{self.rule}'")
            kwargs = dict(self.rule_params)
            if "phis" in kwargs:
                kwargs["phis"] = tuple(kwargs["phis"])
            rule = RULE_FAMILIES[self.rule](**kwargs)
        prefix = tuple(complex(v[0], v[1]) for v in self.prefix)
        return diagonal_model(self.n_max, rule=rule, prefix=prefix,
                              strict=rule is not None)


@dataclass(frozen=True)
class PerturbationSpec:
    b_columns: tuple = ()
    c_columns: tuple = ()
    beta: float = 0.0
    gamma: float = 0.0
    scale_b: float = 1.0
    scale_c: float = 1.0

    @property
    def rank(self):
        return len(self.b_columns)

    def build(self, scale_b=None, scale_c=None):
        """Materialize columns with the scenario scale factors folded in."""
        sb = self.scale_b if scale_b is None else scale_b
        sc = self.scale_c if scale_c is None else scale_c

        def scaled(spec, s):
            col = spec.build()
            if s == 1.0:
                return col
            if hasattr(col, "scale"):
                return type(col)(**{**_col_kwargs(col), "scale": col.scale * s})
            return type(col)(coords=tuple(s * complex(v) for v in col.coords))

        return FiniteRankPerturbation(
            b_columns=tuple(scaled(c, sb) for c in self.b_columns),
            c_columns=tuple(scaled(c, sc) for c in self.c_columns),
            beta=self.beta, gamma=self.gamma)


def _col_kwargs(col):
    return {f: getattr(col, f) for f in col.__dataclass_fields__}


@dataclass(frozen=True)
class ExperimentConfig:
    points_per_decade: int = 10
    uniform_angles: int = 360
    region_angles: int = 48
    min_offset: float = 1e-5
    radial_lo: float = 1e-6
    radial_hi: float = 1.0
    base_panels: int = 24
    orbit_max: int = 100000
    orbit_threshold: float = 1e-3
    basis_probes: int = 20
    random_probes: int = 20
    seed: int = 7
    trunc_dim: int = 500
    tol: float = 1e-9

    def resolution(self):
        return GridResolution(points_per_decade=self.points_per_decade,
                              min_offset=self.min_offset,
                              radial_lo=self.radial_lo,
                              radial_hi=self.radial_hi,
                              uniform_angles=self.uniform_angles,
                              region_angles=self.region_angles)


#: coarse settings for search loops where each probe runs the full pipeline
REDUCED_CONFIG_OVERRIDES = dict(points_per_decade=8, uniform_angles=180,
                                region_angles=24, base_panels=12,
                                basis_probes=4, random_probes=4,
                                orbit_max=10000)


@dataclass(frozen=True)
class Scenario:
    name: str
    model: ModelSpec
    phis: tuple
    alpha: float
    eps_a: float
    m_a: float
    pert: PerturbationSpec | None = None
    config: ExperimentConfig = field(default_factory=ExperimentConfig)

    def profile(self):
        return SpectralProfile(phis=tuple(self.phis), alpha=self.alpha,
                               eps_a=self.eps_a, m_a=self.m_a)

    def build(self, scale_b=None, scale_c=None):
        """(model, profile, perturbation-or-None, grid resolution)."""
        profile = self.profile()
        report = validate_profile(profile)
        if not report.ok:
            raise ValidationError("; ".join(report.violations))
        pert = None
        if self.pert is not None and self.pert.rank > 0:
            pert = self.pert.build(scale_b=scale_b, scale_c=scale_c)
        return self.model.build(), profile, pert, self.config.resolution()

    def with_config(self, **overrides):
        cfg = ExperimentConfig(**{**asdict(self.config), **overrides})
        return Scenario(name=self.name, model=self.model, phis=self.phis,
                        alpha=self.alpha, eps_a=self.eps_a, m_a=self.m_a,
                        pert=self.pert, config=cfg)

    def with_scales(self, scale_b, scale_c):
        if self.pert is None:
            raise ValidationError("scenario has no perturbation to scale")
        p = self.pert
        pert = PerturbationSpec(b_columns=p.b_columns, c_columns=p.c_columns,
                                beta=p.beta, gamma=p.gamma,
                                scale_b=scale_b, scale_c=scale_c)
        return Scenario(name=self.name, model=self.model, phis=self.phis,
                        alpha=self.alpha, eps_a=self.eps_a, m_a=self.m_a,
                        pert=pert, config=self.config)


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def scenario_to_dict(sc):
    model = {"kind": sc.model.kind, "rule": sc.model.rule,
             "rule_params": {k: _jsonable(v) for k, v in sc.model.rule_params},
             "prefix": _jsonable(sc.model.prefix), "n_max": sc.model.n_max}
    doc = {"schema_version": SCHEMA_VERSION, "name": sc.name, "model": model,
           "profile": {"phis": list(sc.phis), "alpha": sc.alpha,
                       "eps_a": sc.eps_a, "m_a": sc.m_a},
           "config": _jsonable(asdict(sc.config))}
    if sc.pert is not None:
        doc["perturbation"] = {
            "beta": sc.pert.beta, "gamma": sc.pert.gamma,
            "scale_b": sc.pert.scale_b, "scale_c": sc.pert.scale_c,
            "b_columns": [{"family": c.family,
                           "params": {k: _jsonable(v) for k, v in c.params}}
                          for c in sc.pert.b_columns],
            "c_columns": [{"family": c.family,
                           "params": {k: _jsonable(v) for k, v in c.params}}
                          for c in sc.pert.c_columns],
        }
    return doc


def dumps_scenario(sc):
    return json.dumps(scenario_to_dict(sc), sort_keys=True, indent=2) + "\n"


def _require(doc, key, where):
    if key not in doc:
        raise ValidationError(f"missing field '{key}' in {where}")
    return doc[key]


def _columns_from(doc, side, where):
    cols = []
    for i, c in enumerate(doc.get(side, [])):
        family = _require(c, "family", f"{where}.{side}[{i}]")
        params = _require(c, "params", f"{where}.{side}[{i}]")
        items = tuple(sorted((str(k), _tupled(v)) for k, v in params.items()))
        cols.append(ColumnSpec(family=family, params=items))
    return tuple(cols)


def _tupled(v):
    if isinstance(v, list):
        return tuple(_tupled(x) for x in v)
    return v


def scenario_from_dict(doc):
    name = _require(doc, "name", "scenario")
    m = _require(doc, "model", "scenario")
    model = ModelSpec(
        kind=m.get("kind", "diagonal"),
        rule=m.get("rule"),
        rule_params=tuple(sorted((str(k), _tupled(v))
                                 for k, v in m.get("rule_params", {}).items()))
        if isinstance(m.get("rule_params"), dict) else _tupled(m.get("rule_params", [])),
        prefix=_tupled(m.get("prefix", [])),
        n_max=int(_require(m, "n_max", "model")),
    )
    p = _require(doc, "profile", "scenario")
    for key in ("phis", "alpha", "eps_a", "m_a"):
        _require(p, key, "profile")
    pert = None
    if "perturbation" in doc:
        q = doc["perturbation"]
        pert = PerturbationSpec(
            b_columns=_columns_from(q, "b_columns", "perturbation"),
            c_columns=_columns_from(q, "c_columns", "perturbation"),
            beta=float(_require(q, "beta", "perturbation")),
            gamma=float(_require(q, "gamma", "perturbation")),
            scale_b=float(q.get("scale_b", 1.0)),
            scale_c=float(q.get("scale_c", 1.0)),
        )
    cfg_doc = doc.get("config", {})
    known = {f: cfg_doc[f] for f in ExperimentConfig.__dataclass_fields__ if f in cfg_doc}
    config = ExperimentConfig(**known)
    sc = Scenario(name=name, model=model, phis=tuple(p["phis"]),
                  alpha=float(p["alpha"]), eps_a=float(p["eps_a"]),
                  m_a=float(p["m_a"]), pert=pert, config=config)
    report = validate_profile(sc.profile())
    if not report.ok:
        raise ValidationError("; ".join(report.violations))
    return sc


def loads_scenario(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid scenario JSON at line {exc.lineno}, column {exc.colno}: "
                         f"{exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("scenario document must be a JSON object")
    return scenario_from_dict(doc)


# ---------------------------------------------------------------------------
# built-ins
# ---------------------------------------------------------------------------


def _builtin_s1():
    return Scenario(
        name="S1",
        model=ModelSpec(kind="diagonal", rule="poly_approach",
                        rule_params=(("order", 2), ("phis", (0.0,))),
                        n_max=2000),
        phis=(0.0,), alpha=2.0, eps_a=math.pi / 8.0, m_a=10.0,
    )


def _builtin_s2():
    return Scenario(
        name="S2",
        model=ModelSpec(kind="diagonal", rule="poly_approach",
                        rule_params=(("order", 1), ("phis", (0.0, math.pi))),
                        n_max=2000),
        phis=(0.0, math.pi), alpha=1.0, eps_a=math.pi / 8.0, m_a=6.0,
    )


def _builtin_s1_p1():
    base = _builtin_s1()
    pert = PerturbationSpec(
        b_columns=(ColumnSpec("smoothed_power",
                              (("scale", (0.1, 0.0)), ("t", 1.0), ("w", 1.0))),),
        c_columns=(ColumnSpec("smoothed_power",
                              (("conj", True), ("scale", (0.1, 0.0)), ("t", 1.0), ("w", 1.0))),),
        beta=1.0, gamma=1.0,
    )
    return Scenario(name="S1-P1", model=base.model, phis=base.phis,
                    alpha=base.alpha, eps_a=base.eps_a, m_a=base.m_a, pert=pert)


BUILTINS = {"S1": _builtin_s1, "S2": _builtin_s2, "S1-P1": _builtin_s1_p1}


def load_scenario(source):
    """Load from 'builtin:NAME' or a JSON file path."""
    if isinstance(source, str) and source.startswith("builtin:"):
        name = source.split(":", 1)[1]
        if name not in BUILTINS:
            raise ParseError(f"unknown builtin scenario '{name}'; "
                             f"have {sorted(BUILTINS)}")
        return BUILTINS[name]()
    try:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read scenario file {source}: {exc}") from exc
    return loads_scenario(text)
