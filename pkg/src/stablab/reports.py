"""Report bundles: assembly, canonical JSON, and flat CSV scan tables.

A bundle collects everything one run produced: the verdict, every
certificate, quadrature sweeps, orbit decay tables, the constant ledger,
raw scan tables for plotting, and provenance.  JSON output is canonical
(sorted keys, schema version field, complex scalars as [re, im] pairs),
so two runs with the same scenario and seed serialize byte-identically.
Scan tables additionally go to CSV files with a fixed column order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from ._version import __version__
from .errors import IoError
from .models import circ_dist
from . import norms

BUNDLE_SCHEMA_VERSION = 1

#: fixed column order for each scan table
CSV_COLUMNS = {
    "circle": ("phi", "nearest_k", "dist", "resnorm", "weighted"),
    "region": ("re", "im", "resnorm", "smoothed"),
    "quadrature": ("r", "value", "weighted"),
    "decay": ("n", "norm"),
}

#: the constant ledger always carries exactly these keys
CONSTANT_KEYS = ("M", "M_A", "M_0", "M_1", "M_2", "M_R", "M_D", "M_k", "K",
                 "r_A", "d_A")

EXIT_OK = 0
EXIT_VIOLATED = 2
EXIT_INCONCLUSIVE = 3

_EXIT_BY_VERDICT = {
    "preserved": EXIT_OK, "certified": EXIT_OK, "ok": EXIT_OK, None: EXIT_OK,
    "violated": EXIT_VIOLATED, "refuted": EXIT_VIOLATED,
    "inconclusive": EXIT_INCONCLUSIVE,
}


@dataclass
class ReportBundle:
    """Everything one subcommand produced, in JSON-ready form."""

    kind: str = ""
    scenario: dict = field(default_factory=dict)
    verdict: str | None = None
    hypothesis: dict = field(default_factory=dict)
    empirical: dict = field(default_factory=dict)
    witnesses: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    quadratures: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)
    scans: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def exit_code(self):
        return _EXIT_BY_VERDICT.get(self.verdict, EXIT_INCONCLUSIVE)

    def as_dict(self):
        doc = {
            "schema_version": BUNDLE_SCHEMA_VERSION,
            "kind": self.kind,
            "scenario": self.scenario,
            "verdict": self.verdict,
            "hypothesis": self.hypothesis,
            "empirical": self.empirical,
            "witnesses": self.witnesses,
            "reports": self.reports,
            "quadratures": self.quadratures,
            "constants": constant_ledger(self.constants),
            "details": self.details,
            # scans live in the CSV tables; the bundle records their shape
            "scans": {name: {"rows": _scan_rows(tab)}
                      for name, tab in self.scans.items()},
            "provenance": self.provenance,
        }
        return _jsonable(doc)


def _scan_rows(table):
    for col in table.values():
        return int(len(col))
    return 0


def constant_ledger(partial):
    """The pinned ledger: every key present, missing values as None."""
    return {key: (None if partial.get(key) is None else float(partial[key]))
            for key in CONSTANT_KEYS}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def canonical_json(doc):
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------------------
# provenance
# ---------------------------------------------------------------------------


def grid_hash(grid):
    """Content hash of every evaluation point the grid carries."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(grid.circle_angles).tobytes())
    h.update(np.ascontiguousarray(grid.radial_r).tobytes())
    for pts in grid.region_points:
        h.update(np.ascontiguousarray(pts).tobytes())
    return h.hexdigest()[:16]


def make_provenance(scenario, grid=None):
    """Reproducibility stamp: version, seed, grid content hash.  No clocks."""
    prov = {
        "tool": "stablab",
        "version": __version__,
        "scenario_name": scenario.name,
        "seed": scenario.config.seed,
        "trunc_dim": scenario.config.trunc_dim,
    }
    if grid is not None:
        prov["grid_hash"] = grid_hash(grid)
        prov["grid_level"] = grid.level
    return prov


# ---------------------------------------------------------------------------
# scan tables
# ---------------------------------------------------------------------------


def circle_scan(model, profile, grid):
    """Per-angle circle table: angle, nearest point, distance, norm, weighted."""
    angles = grid.circle_angles
    lams = np.exp(1j * angles)
    if model.kind == "dense":
        vals = np.array([norms.dense_resolvent_norm(model.matrix, l) for l in lams])
    else:
        vals, _ = norms.resolvent_norm_batch(model, lams)
    dists = np.stack([circ_dist(angles, phi) for phi in profile.phis])
    nearest = np.argmin(dists, axis=0)
    psi = dists.min(axis=0)
    return {
        "phi": angles,
        "nearest_k": nearest.astype(int),
        "dist": psi,
        "resnorm": vals,
        "weighted": psi ** profile.alpha * vals,
    }


def region_scan(model, profile, grid):
    """All region points: location, plain norm, unit-factor-smoothed norm."""
    res, ims, plains, smooths = [], [], [], []
    for k, pts in enumerate(grid.region_points):
        if len(pts) == 0:
            continue
        if model.kind == "dense":
            vals = np.array([norms.dense_resolvent_norm(model.matrix, l)
                             for l in pts])
            smooth = np.full(len(pts), np.nan)
        else:
            vals, _ = norms.resolvent_norm_batch(model, pts)
            weights = [0.0] * len(profile.phis)
            weights[k] = profile.alpha
            smooth = norms.sup_spectral_functional(model, pts, weights, 1).value
        res.append(pts.real)
        ims.append(pts.imag)
        plains.append(vals)
        smooths.append(smooth)
    if not res:
        return {}
    return {
        "re": np.concatenate(res),
        "im": np.concatenate(ims),
        "resnorm": np.concatenate(plains),
        "smoothed": np.concatenate(smooths),
    }


def quadrature_scan(qr):
    """Radial sweep table from one QuadratureResult."""
    return {"r": qr.r_grid, "value": qr.values, "weighted": qr.weighted}


def decay_scan(table):
    """Orbit decay table: step index, orbit norm."""
    return {"n": table.steps.astype(int), "norm": table.norms}


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def emit_reports(bundle, out_dir, formats=("json", "csv")):
    """Write the bundle under out_dir; returns the written paths.

    JSON always goes to bundle.json.  Each non-empty scan table goes to
    <name>.csv with its fixed header; empty tables produce no file.
    """
    try:
        os.makedirs(out_dir, exist_ok=True)
        paths = []
        if "json" in formats:
            path = os.path.join(out_dir, "bundle.json")
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(canonical_json(bundle.as_dict()))
            paths.append(path)
        if "csv" in formats:
            for name in CSV_COLUMNS:
                table = bundle.scans.get(name)
                if not table or _scan_rows(table) == 0:
                    continue
                cols = CSV_COLUMNS[name]
                path = os.path.join(out_dir, f"{name}.csv")
                with open(path, "w", encoding="utf-8", newline="") as fh:
                    writer = csv.writer(fh, lineterminator="\n")
                    writer.writerow(cols)
                    arrays = [np.asarray(table[c]) for c in cols]
                    for row in zip(*arrays):
                        writer.writerow([_cell(v) for v in row])
                paths.append(path)
        return paths
    except OSError as exc:
        raise IoError(f"cannot write reports under {out_dir}: {exc}") from exc
