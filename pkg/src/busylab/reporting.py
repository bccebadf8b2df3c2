"""Deterministic CSV/JSON emission for experiment artifacts.

Every file embeds the resolved configuration (and package version) so a
``verify`` run can re-derive it byte for byte; nothing time- or
machine-dependent is written.  CSV files start with a single ``#``-prefixed
line holding a compact JSON metadata block.
"""

import csv
import json
import os

import numpy as np

from . import __version__


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        fh.write(canonical_json(obj))


def write_csv(path, meta: dict, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(_jsonable(meta), sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def base_meta(config_dict: dict, **extra) -> dict:
    meta = {"artifact_version": __version__, "config": config_dict}
    meta.update(extra)
    return meta


def estimate_rows(est):
    header = ["x", "p_hat", "ci_lo", "ci_hi", "exceed_count", "ess",
              "biased_low", "low_confidence"]
    rows = [
        (est.grid[j], est.p_hat[j], est.ci_lo[j], est.ci_hi[j],
         int(est.exceed_count[j]), est.ess[j], bool(est.biased_low[j]),
         bool(est.low_confidence[j]))
        for j in range(len(est.grid))
    ]
    return header, rows


def estimate_meta(est) -> dict:
    return {
        "quantity": est.quantity, "n_cycles": est.n_cycles,
        "n_censored": est.n_censored, "weighted": est.weighted,
        "params_digest": est.params_digest, "metadata": est.metadata,
    }


def curve_rows(curve):
    header = ["x", "value", "applicability_flag"]
    rows = [(curve.grid[j], curve.values[j], curve.applicability)
            for j in range(len(curve.grid))]
    return header, rows


def curve_meta(curve) -> dict:
    return {"name": curve.name, "kind": curve.kind,
            "params_digest": curve.params_digest,
            "applicability": curve.applicability, "metadata": curve.metadata}


def ratio_rows(diag):
    header = ["x", "ratio", "ci_lo", "ci_hi", "exceed_count", "low_confidence"]
    rows = [(diag.x[j], diag.ratio[j], diag.ci_lo[j], diag.ci_hi[j],
             int(diag.exceed_count[j]), bool(diag.low_confidence[j]))
            for j in range(len(diag.x))]
    return header, rows


def fit_report_dict(fr) -> dict:
    return {
        "model": fr.model,
        "coefficients": {k: {"value": v, "se": se}
                         for k, (v, se) in fr.coefficients.items()},
        "window": list(fr.window), "n_points": fr.n_points, "wrss": fr.wrss,
        "metadata": fr.metadata,
    }


def hill_dict(h) -> dict:
    return {"alpha": h.alpha, "ci_lo": h.ci_lo, "ci_hi": h.ci_hi, "k": h.k,
            "n": h.n, "threshold": h.threshold}


def profile_rows(profile):
    header = ["s", "q_mean"]
    rows = [(profile.s[j], profile.q_mean[j]) for j in range(profile.n_bins)]
    return header, rows


def profile_dict(profile) -> dict:
    return {
        "n_bins": profile.n_bins, "peak_fraction": profile.peak_fraction,
        "concavity_defect": profile.concavity_defect,
        "triangle_distance": profile.triangle_distance,
        "n_qualifying": profile.n_qualifying, "x_level": profile.x_level,
        "metadata": profile.metadata,
    }


def ensure_outdir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path
