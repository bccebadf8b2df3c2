"""Experiment orchestration: resolved configs, named presets, artifact emission.

Each preset reproduces one claim of the source material at desk scale; the
preset fixes the queue, the cycle budget, the grid window and the reference
curves, so an acceptance run is a plain invocation with a seed.  Every
artifact embeds its resolved config; ``verify_outputs`` re-runs from that
embedded config and byte-compares.
"""

import filecmp
import json
import math
import os
import tempfile
from dataclasses import dataclass, field, replace

import numpy as np

from . import asymptotics, reporting
from .batch import run_cycles
from .cycles import (CycleCaps, FunctionalSpec, PLAIN_QUEUE_AREA,
                     PLAIN_WORKLOAD_AREA, QueueParams)
from .distributions import Exponential, Pareto
from .errors import ConfigError, DomainError
from .estimation import (TailTally, accumulate_stream, conditional_path_profile,
                         default_hill_k, empirical_tail, fit_tail,
                         grid_from_quantiles, hill_estimator, joint_tail,
                         ratio_diagnostic, run_bivariate_cycles,
                         stretched_exp_window, tilted_run, FitWindow,
                         MODEL_LOGLOG, MODEL_STRETCHED)
from .cycles import risk_negative_part_integral
from .rngstream import substream


@dataclass(frozen=True)
class GridPolicy:
    """Log grid between two weighted sample quantiles of a pilot run.

    ``extend_hi`` stretches the top end beyond the pilot's resolution;
    ``decades`` instead pins the top end to lo * 10**decades (fixed-width
    log-log windows); explicit ``x_lo``/``x_hi`` bypass the pilot entirely
    (theory-anchored windows)."""

    lo_q: float = 0.50
    hi_q: float = 0.9999
    points: int = 40
    extend_hi: float = 1.0
    decades: float | None = None
    x_lo: float | None = None
    x_hi: float | None = None

    def build(self, pilot_values) -> np.ndarray:
        if self.x_lo is not None and self.x_hi is not None:
            return np.geomspace(self.x_lo, self.x_hi, self.points)
        grid = grid_from_quantiles(pilot_values, lo_q=self.lo_q, hi_q=self.hi_q,
                                   points=self.points)
        if self.decades is not None:
            grid = np.geomspace(grid[0], grid[0] * 10.0 ** self.decades,
                                self.points)
        elif self.extend_hi != 1.0:
            grid = np.geomspace(grid[0], grid[-1] * self.extend_hi, self.points)
        return grid

    def to_config(self):
        return {"lo_q": self.lo_q, "hi_q": self.hi_q, "points": self.points,
                "extend_hi": self.extend_hi, "decades": self.decades,
                "x_lo": self.x_lo, "x_hi": self.x_hi}

    @staticmethod
    def from_config(cfg):
        return GridPolicy(**cfg)


@dataclass(frozen=True)
class ExperimentConfig:
    queue: QueueParams
    n_cycles: int
    master_seed: int = 0
    workers: int = 1
    pilot_cycles: int = 10 ** 6
    grid: GridPolicy = field(default_factory=GridPolicy)
    grids: dict = field(default_factory=dict)      # per-quantity GridPolicy
    curves: tuple = ()                             # (quantity_label, curve_name) pairs
    extra: dict = field(default_factory=dict)
    preset: str = ""

    def to_config(self) -> dict:
        return {
            "queue": self.queue.to_config(),
            "n_cycles": self.n_cycles,
            "master_seed": self.master_seed,
            "workers": self.workers,
            "pilot_cycles": self.pilot_cycles,
            "grid": self.grid.to_config(),
            "grids": {k: v.to_config() for k, v in self.grids.items()},
            "curves": [list(c) for c in self.curves],
            "extra": self.extra,
            "preset": self.preset,
        }

    @staticmethod
    def from_config(cfg: dict) -> "ExperimentConfig":
        try:
            queue = QueueParams.from_config(cfg["queue"])
        except KeyError:
            raise ConfigError("config is missing the 'queue' section") from None
        return ExperimentConfig(
            queue=queue,
            n_cycles=int(cfg["n_cycles"]),
            master_seed=int(cfg.get("master_seed", 0)),
            workers=int(cfg.get("workers", 1)),
            pilot_cycles=int(cfg.get("pilot_cycles", 10 ** 6)),
            grid=GridPolicy.from_config(cfg.get("grid", {})),
            grids={k: GridPolicy.from_config(v)
                   for k, v in cfg.get("grids", {}).items()},
            curves=tuple(tuple(c) for c in cfg.get("curves", [])),
            extra=dict(cfg.get("extra", {})),
            preset=cfg.get("preset", ""),
        )


def _functional_by_label(params: QueueParams, label: str) -> FunctionalSpec:
    for f in params.functionals:
        if f.label == label:
            return f
    raise ConfigError(
        f"no functional labelled {label!r}; have {[f.label for f in params.functionals]}")


def _quantity_key(params: QueueParams, label: str):
    if label in ("tau", "n", "max_queue", "max_workload"):
        return label
    return _functional_by_label(params, label)


_THRESHOLD_MAPS = {
    "area_w": lambda x, p, c: asymptotics.area_w_threshold(x, p.rho),
    "area_q": lambda x, p, c: asymptotics.area_q_threshold(
        x, p.rho, p.lambda_T, p.lambda_S),
    "power": lambda x, p, c: asymptotics.power_threshold(x, c["k"], p.rho),
    "discounted": lambda x, p, c: asymptotics.discounted_threshold(
        x, c["k"], c["theta"], p.rho),
}


def run_tail_experiment(cfg: ExperimentConfig, out_dir: str | None = None) -> dict:
    """Pilot, stream, estimate: tail curves with overlaid asymptotics and
    conjecture ratio diagnostics (empirical numerator over the empirical
    busy-period tail at the mapped threshold)."""
    params = cfg.queue
    quantities = cfg.extra.get(
        "quantities", ["tau"] + [f.label for f in params.functionals])
    hill_for = cfg.extra.get("hill_for", [])
    conjectures = cfg.extra.get("conjectures", [])

    pilot_n = min(cfg.pilot_cycles, cfg.n_cycles)
    pilot = run_cycles(params, pilot_n, master_seed=cfg.master_seed + 1,
                       workers=cfg.workers)

    tallies = {}
    for label in quantities:
        key = _quantity_key(params, label)
        policy = GridPolicy.from_config(cfg.grids[label]) if isinstance(
            cfg.grids.get(label), dict) else cfg.grids.get(label, cfg.grid)
        grid = policy.build(pilot.quantity(key))
        top_k = 2 * default_hill_k(cfg.n_cycles) + 1 if label in hill_for else 0
        tallies[label] = TailTally(key, grid, top_k=top_k)

    conj_tallies = {}
    for conj in conjectures:
        label = conj["functional"]
        mapper = _THRESHOLD_MAPS[conj["map"]]
        num_grid = tallies[label].grid
        mapped = np.array([mapper(x, params, conj) for x in num_grid])
        conj_tallies[conj["name"]] = TailTally("tau", mapped)

    summary = accumulate_stream(
        params, cfg.n_cycles, cfg.master_seed,
        list(tallies.values()) + list(conj_tallies.values()),
        workers=cfg.workers)
    summary["regime"] = params.regime
    if params.regime != "stable":
        summary["escaped_fraction"] = summary["censored_fraction"]

    digest = params.digest()
    estimates = {label: t.estimate(params_digest=digest)
                 for label, t in tallies.items()}

    hill_ks = cfg.extra.get("hill_k", {})
    hills = {}
    hill_tops = {}
    for label in hill_for:
        top = tallies[label].top_values()
        hill_tops[label] = top
        k = hill_ks.get(label, default_hill_k(cfg.n_cycles))
        hills[label] = hill_estimator(top, k=k)

    curves = {}
    curve_ratios = {}
    for label, curve_name in cfg.curves:
        est = estimates[label]
        kw = {}
        if curve_name in ("PowerConjecture", "DiscountedConjecture"):
            f = _functional_by_label(params, label)
            kw = {"k": f.k, "theta": f.theta or None}
        curve = asymptotics.build_curve(curve_name, params, est.grid, **kw)
        curves[(label, curve_name)] = curve
        if curve.kind == "probability":
            curve_ratios[(label, curve_name)] = ratio_diagnostic(est, curve)

    conj_results = {}
    for conj in conjectures:
        name = conj["name"]
        num = estimates[conj["functional"]]
        den = conj_tallies[name].estimate(params_digest=digest)
        conj_results[name] = {
            "ratio": ratio_diagnostic(num, den),
            "numerator": num, "denominator": den, "spec": conj,
        }

    results = {"summary": summary, "estimates": estimates, "hill": hills,
               "hill_top_values": hill_tops, "curves": curves,
               "curve_ratios": curve_ratios, "conjectures": conj_results}
    if out_dir is not None:
        _emit_tail_artifacts(cfg, results, out_dir)
    return results


def _emit_tail_artifacts(cfg, results, out_dir):
    reporting.ensure_outdir(out_dir)
    meta = reporting.base_meta(cfg.to_config(), command="tail")
    reporting.write_json(os.path.join(out_dir, "config.json"), meta)
    summary = dict(results["summary"])
    summary["hill"] = {k: reporting.hill_dict(h)
                       for k, h in results["hill"].items()}
    reporting.write_json(os.path.join(out_dir, "summary.json"),
                         reporting.base_meta(cfg.to_config(), **summary))
    for label, est in results["estimates"].items():
        header, rows = reporting.estimate_rows(est)
        reporting.write_csv(os.path.join(out_dir, f"tail_{label}.csv"),
                            reporting.estimate_meta(est), header, rows)
    for (label, cname), curve in results["curves"].items():
        header, rows = reporting.curve_rows(curve)
        reporting.write_csv(
            os.path.join(out_dir, f"curve_{label}_{cname}.csv"),
            reporting.curve_meta(curve), header, rows)
    for (label, cname), diag in results["curve_ratios"].items():
        header, rows = reporting.ratio_rows(diag)
        reporting.write_csv(
            os.path.join(out_dir, f"ratio_{label}_{cname}.csv"),
            {"numerator": diag.numerator, "denominator": diag.denominator},
            header, rows)
    for name, conj in results["conjectures"].items():
        header, rows = reporting.ratio_rows(conj["ratio"])
        reporting.write_csv(os.path.join(out_dir, f"conjecture_{name}.csv"),
                            {"conjecture": name, "spec": conj["spec"]},
                            header, rows)


def run_cycles_experiment(cfg: ExperimentConfig, out_dir: str | None = None) -> dict:
    """Cycle-level run: per-cycle CSV (capped) plus a summary of the sample."""
    csv_rows = int(cfg.extra.get("csv_max_rows", 100_000))
    sample_n = min(cfg.n_cycles, csv_rows)
    sample = run_cycles(cfg.queue, sample_n, master_seed=cfg.master_seed,
                        workers=cfg.workers)
    if cfg.n_cycles > sample_n:
        summary = accumulate_stream(cfg.queue, cfg.n_cycles, cfg.master_seed,
                                    [], workers=cfg.workers)
    else:
        summary = {
            "n_cycles": sample_n,
            "n_censored": int(sample.censored.sum()),
            "censored_fraction": float(sample.censored.mean()),
            "mean_n": float(sample.n_customers.mean()),
            "sd_n": float(sample.n_customers.std(ddof=1)),
            "mean_tau": float(sample.tau.mean()),
            "sd_tau": float(sample.tau.std(ddof=1)),
        }
    summary["regime"] = cfg.queue.regime
    summary["mean_areas"] = {f.label: float(sample.areas[:, j].mean())
                             for j, f in enumerate(cfg.queue.functionals)}
    summary["csv_rows"] = sample_n
    if out_dir is not None:
        reporting.ensure_outdir(out_dir)
        meta = reporting.base_meta(cfg.to_config(), command="cycles")
        reporting.write_json(os.path.join(out_dir, "config.json"), meta)
        sample.write_cycle_csv(os.path.join(out_dir, "cycles.csv"))
        reporting.write_json(os.path.join(out_dir, "summary.json"),
                             reporting.base_meta(cfg.to_config(), **summary))
    return {"summary": summary, "sample": sample}


def run_fit_experiment(cfg: ExperimentConfig, model: str | None = None,
                       out_dir: str | None = None) -> dict:
    """Tail run followed by a parametric fit of one quantity's tail."""
    model = model or cfg.extra.get("model", MODEL_STRETCHED)
    label = cfg.extra.get("fit_quantity", "area_q")
    results = run_tail_experiment(cfg)
    est = results["estimates"][label]
    window = None
    if "fit_window" in cfg.extra:
        window = FitWindow(**cfg.extra["fit_window"])
    report = fit_tail(est, model, window=window,
                      include_quarter_log=cfg.extra.get("quarter_log", True))
    fit_info = reporting.fit_report_dict(report)
    if model == MODEL_STRETCHED:
        rho = cfg.queue.rho
        fit_info["candidates"] = {
            "mm1_psi": asymptotics.mm1_psi(rho),
            "kyprianou_comparator": asymptotics.kyprianou_comparator_exponent(
                rho, cfg.queue.lambda_S),
        }
    if model == MODEL_LOGLOG:
        fit_info["reference_slope"] = asymptotics.critical_slope()
    results["fit"] = report
    results["fit_info"] = fit_info
    if out_dir is not None:
        reporting.ensure_outdir(out_dir)
        meta = reporting.base_meta(cfg.to_config(), command="fit")
        reporting.write_json(os.path.join(out_dir, "config.json"), meta)
        header, rows = reporting.estimate_rows(est)
        reporting.write_csv(os.path.join(out_dir, f"tail_{label}.csv"),
                            reporting.estimate_meta(est), header, rows)
        reporting.write_json(os.path.join(out_dir, "fit.json"),
                             reporting.base_meta(cfg.to_config(), **fit_info))
    return results


def run_profile_experiment(cfg: ExperimentConfig, x_level: float | None = None,
                           out_dir: str | None = None) -> dict:
    """Path-capturing run and the conditional profile of large-area cycles."""
    label = cfg.extra.get("profile_quantity", "area_q")
    n_bins = int(cfg.extra.get("n_bins", 50))
    sample = run_cycles(cfg.queue, cfg.n_cycles, master_seed=cfg.master_seed,
                        workers=cfg.workers, capture_paths=True)
    key = _quantity_key(cfg.queue, label)
    if x_level is None:
        quantile = float(cfg.extra.get("level_quantile", 0.999))
        x_level = float(np.quantile(sample.quantity(key), quantile))
    profile = conditional_path_profile(sample, key, x_level, n_bins=n_bins)
    profile.metadata["quantity"] = label
    profile.metadata["rho"] = cfg.queue.rho
    if out_dir is not None:
        reporting.ensure_outdir(out_dir)
        meta = reporting.base_meta(cfg.to_config(), command="profile")
        reporting.write_json(os.path.join(out_dir, "config.json"), meta)
        header, rows = reporting.profile_rows(profile)
        reporting.write_csv(os.path.join(out_dir, "profile.csv"),
                            reporting.profile_dict(profile), header, rows)
        reporting.write_json(os.path.join(out_dir, "profile.json"),
                             reporting.base_meta(
                                 cfg.to_config(),
                                 **reporting.profile_dict(profile)))
    return {"profile": profile, "sample": sample, "x_level": x_level}


def run_tilt_experiment(cfg: ExperimentConfig, out_dir: str | None = None) -> dict:
    """Importance-sampling bridge: plain MC and the tilted estimator compared
    on shared busy-period levels, plus deep levels only the tilt can reach."""
    params = cfg.queue
    gamma = cfg.extra.get("gamma")
    if gamma is None:
        gamma = asymptotics.lundberg_root(params.interarrival, params.service)
    bridge_ps = cfg.extra.get("bridge_p_levels", [1e-2, 1e-3, 1e-4])
    deep_us = cfg.extra.get("deep_levels", [])
    n_tilted = int(cfg.extra.get("n_tilted", 200_000))

    pilot = run_cycles(params, min(cfg.pilot_cycles, cfg.n_cycles),
                       master_seed=cfg.master_seed + 1, workers=cfg.workers)
    bridge_us = [float(np.quantile(pilot.tau, 1.0 - p)) for p in bridge_ps]
    grid = np.array(sorted(set(bridge_us) | set(deep_us)))

    plain_tally = TailTally("tau", grid)
    summary = accumulate_stream(params, cfg.n_cycles, cfg.master_seed,
                                [plain_tally], workers=cfg.workers)
    plain = plain_tally.estimate(params_digest=params.digest())

    tilted = tilted_run(params, gamma, n_tilted, {"tau": grid},
                        master_seed=cfg.master_seed + 2,
                        workers=cfg.workers)["tau"]

    overlap = []
    for u in bridge_us:
        j = int(np.nonzero(np.isclose(grid, u))[0][0])
        overlap.append({
            "u": u,
            "plain": [plain.p_hat[j], plain.ci_lo[j], plain.ci_hi[j]],
            "tilted": [tilted.p_hat[j], tilted.ci_lo[j], tilted.ci_hi[j]],
            "ci_overlap": bool(plain.ci_lo[j] <= tilted.ci_hi[j]
                               and tilted.ci_lo[j] <= plain.ci_hi[j]),
            "plain_exceedances": int(plain.exceed_count[j]),
        })
    deep = []
    for u in deep_us:
        j = int(np.nonzero(np.isclose(grid, u))[0][0])
        deep.append({"u": u, "p_tilted": tilted.p_hat[j],
                     "ess": tilted.ess[j],
                     "exceedances": int(tilted.exceed_count[j])})
    results = {"gamma": gamma, "plain": plain, "tilted": tilted,
               "overlap": overlap, "deep": deep, "summary": summary}
    if out_dir is not None:
        reporting.ensure_outdir(out_dir)
        meta = reporting.base_meta(cfg.to_config(), command="tilt")
        reporting.write_json(os.path.join(out_dir, "config.json"), meta)
        for tag, est in (("plain", plain), ("tilted", tilted)):
            header, rows = reporting.estimate_rows(est)
            reporting.write_csv(os.path.join(out_dir, f"tail_tau_{tag}.csv"),
                                reporting.estimate_meta(est), header, rows)
        reporting.write_json(os.path.join(out_dir, "bridge.json"),
                             reporting.base_meta(cfg.to_config(), gamma=gamma,
                                                 overlap=overlap, deep=deep))
    return results


def run_risk_experiment(cfg: ExperimentConfig, out_dir: str | None = None) -> dict:
    """Moments and tail of the finite-horizon integrated negative part."""
    from . import distributions as dist
    extra = cfg.extra
    v = float(extra.get("initial_capital", 0.0))
    c = float(extra.get("premium_rate", 1.0))
    claim_rate = float(extra.get("claim_rate", 1.0))
    claim = dist.from_config(extra.get(
        "claim", {"family": "exponential", "rate": 1.0}))
    horizon = float(extra.get("horizon", 10.0))
    n = cfg.n_cycles
    rng = substream(cfg.master_seed, 0)
    draws = np.empty(n)
    for i in range(n):
        draws[i] = risk_negative_part_integral(v, c, claim_rate, claim,
                                               horizon, rng)
    magnitude = -draws
    positive = magnitude[magnitude > 0.0]
    moments = {
        "mean": float(draws.mean()),
        "sd": float(draws.std(ddof=1)) if n > 1 else math.nan,
        "fraction_negative_paths": float(np.mean(magnitude > 0.0)),
        "n_draws": n, "horizon": horizon, "initial_capital": v,
        "premium_rate": c, "claim_rate": claim_rate,
        "claim": claim.to_config(),
    }
    estimate = None
    if len(positive) >= 100:
        grid = grid_from_quantiles(positive, lo_q=0.5,
                                   hi_q=1.0 - 10.0 / len(positive),
                                   points=cfg.grid.points)
        tally = TailTally("negative_part_magnitude", grid)
        tally.update(magnitude)
        estimate = tally.estimate(params_digest="risk")
    results = {"moments": moments, "tail": estimate, "draws": draws}
    if out_dir is not None:
        reporting.ensure_outdir(out_dir)
        meta = reporting.base_meta(cfg.to_config(), command="risk")
        reporting.write_json(os.path.join(out_dir, "config.json"), meta)
        reporting.write_json(os.path.join(out_dir, "risk.json"),
                             reporting.base_meta(cfg.to_config(), **moments))
        if estimate is not None:
            header, rows = reporting.estimate_rows(estimate)
            reporting.write_csv(os.path.join(out_dir, "risk_tail.csv"),
                                reporting.estimate_meta(estimate), header, rows)
    return results


def run_joint_experiment(cfg: ExperimentConfig, b: float | None = None,
                         a_values=None, out_dir: str | None = None) -> dict:
    """Joint tail table of the two parallel-server workload areas."""
    b = float(b if b is not None else cfg.extra.get("b", 2.0))
    a_values = list(a_values if a_values is not None
                    else cfg.extra.get("a_values", [0.0, 0.5, 1.0]))
    sample = run_bivariate_cycles(cfg.queue, b, cfg.n_cycles,
                                  master_seed=cfg.master_seed)
    x_grid = grid_from_quantiles(sample.area_w1, lo_q=0.5, hi_q=0.999,
                                 points=int(cfg.extra.get("x_points", 10)))
    table = []
    for x in x_grid:
        marg1 = float(np.mean(sample.area_w1 > x))
        for a in a_values:
            jt = joint_tail(sample, x, a)
            marg2 = float(np.mean(sample.area_w2 > a * x))
            table.append({"x": float(x), "a": float(a), "p_joint": jt.p_hat,
                          "ci_lo": jt.ci_lo, "ci_hi": jt.ci_hi,
                          "count": jt.count, "p_marginal_1": marg1,
                          "p_marginal_2": marg2})
    results = {"b": b, "a_values": a_values, "table": table, "sample": sample}
    if out_dir is not None:
        reporting.ensure_outdir(out_dir)
        meta = reporting.base_meta(cfg.to_config(), command="joint", b=b)
        reporting.write_json(os.path.join(out_dir, "config.json"), meta)
        header = ["x", "a", "p_joint", "ci_lo", "ci_hi", "count",
                  "p_marginal_1", "p_marginal_2"]
        rows = [tuple(r[h] for h in header) for r in table]
        reporting.write_csv(os.path.join(out_dir, "joint.csv"),
                            {"b": b, "n_cycles": cfg.n_cycles}, header, rows)
    return results


# ---------------------------------------------------------------------------
# named presets, one per reproduced claim

def _heavy_pareto_queue() -> QueueParams:
    # lambda_T = 0.5, E[S] = 1 (alpha = 2.5 forces scale 0.6), so rho = 0.5
    return QueueParams(
        interarrival=Exponential(0.5),
        service=Pareto(2.5, 0.6),
        functionals=(PLAIN_WORKLOAD_AREA, PLAIN_QUEUE_AREA,
                     FunctionalSpec("W", 2.0, 0.0), FunctionalSpec("W", 2.0, 0.1)),
    )


def _mm1_queue(lam=0.5, mu=1.0, **kw) -> QueueParams:
    return QueueParams(Exponential(lam), Exponential(mu), **kw)


# Asymptotic windows for the heavy-tail claim checks, calibrated once on
# exploratory runs (seeds disjoint from the acceptance seeds) of the same
# M/Pareto/1 system:
#   - the area conjecture ratios settle into +-30% of 1 below tail level
#     ~1e-2 (workload) / ~6e-4 (queue) and stay there;
#   - the busy-period law's slowly varying correction is ~2.5/sqrt(x),
#     dipping under the band only for x >~ 100, so its comparison window is
#     pinned in x-space where >= 200 exceedances per 1e7 cycles remain;
#   - the Hill threshold must likewise sit inside the settled zone
#     (k = 2000 at n = 1e7 puts it at tail level 2e-4).
_AREA_W_WINDOW = GridPolicy(lo_q=0.99, hi_q=0.99998, points=24)
_AREA_Q_WINDOW = GridPolicy(lo_q=0.9994, hi_q=0.99998, points=20)
_POWER_WINDOW = GridPolicy(lo_q=0.9998, hi_q=0.99998, points=12)
_TAU_LAW_WINDOW = GridPolicy(points=6, x_lo=125.0, x_hi=175.0)


def preset_heavy_pareto(sections=("conjecture1", "conjecture2", "busy-tail",
                                  "power", "discounted")) -> ExperimentConfig:
    queue = _heavy_pareto_queue()
    conjectures = []
    if "conjecture2" in sections:
        conjectures.append({"name": "conjecture2-areaW", "functional": "area_w",
                            "map": "area_w"})
    if "conjecture1" in sections:
        conjectures.append({"name": "conjecture1-areaQ", "functional": "area_q",
                            "map": "area_q"})
    if "power" in sections:
        conjectures.append({"name": "conjecture3-k2", "functional": "area_w_k2",
                            "map": "power", "k": 2.0})
    if "discounted" in sections:
        conjectures.append({"name": "conjecture4-k2-th0.1",
                            "functional": "area_w_k2_th0.1",
                            "map": "discounted", "k": 2.0, "theta": 0.1})
    curves = []
    if "busy-tail" in sections:
        curves.append(("tau", "BusyTailHeavy"))
        curves.append(("area_w", "AreaWConjecture"))
        curves.append(("area_q", "AreaQConjecture"))
    return ExperimentConfig(
        queue=queue, n_cycles=10 ** 7, pilot_cycles=10 ** 6,
        grid=_AREA_W_WINDOW,
        grids={"area_q": _AREA_Q_WINDOW, "tau": _TAU_LAW_WINDOW,
               "area_w_k2": _POWER_WINDOW, "area_w_k2_th0.1": _POWER_WINDOW},
        curves=tuple(curves),
        extra={
            "quantities": ["tau", "area_w", "area_q", "area_w_k2",
                           "area_w_k2_th0.1"],
            "hill_for": ["area_w", "area_q"],
            "hill_k": {"area_w": 2000, "area_q": 2000},
            "conjectures": conjectures,
        },
        preset="heavy-pareto",
    )


def preset_mm1_lighttail() -> ExperimentConfig:
    return ExperimentConfig(
        queue=_mm1_queue(functionals=(PLAIN_QUEUE_AREA,)),
        n_cycles=10 ** 8, pilot_cycles=10 ** 6,
        grid=GridPolicy(lo_q=0.99, hi_q=0.99999, points=40, extend_hi=2.0),
        curves=(("area_q", "MM1LightTail"), ("area_q", "KyprianouComparator")),
        extra={"quantities": ["area_q"], "model": MODEL_STRETCHED,
               "fit_quantity": "area_q", "quarter_log": True},
        preset="mm1-lighttail",
    )


def preset_critical_third() -> ExperimentConfig:
    queue = QueueParams(Exponential(1.0), Exponential(1.0),
                        functionals=(PLAIN_QUEUE_AREA,),
                        caps=CycleCaps(max_customers=10 ** 7))
    return ExperimentConfig(
        queue=queue, n_cycles=10 ** 6, pilot_cycles=10 ** 5,
        grid=GridPolicy(lo_q=0.99, hi_q=0.9999, points=30, decades=2.0),
        curves=(("area_q", "CriticalSlope"),),
        extra={"quantities": ["area_q"], "model": MODEL_LOGLOG,
               "fit_quantity": "area_q"},
        preset="critical-third",
    )


def preset_tilt_bridge() -> ExperimentConfig:
    # gamma sits just above the critical tilt (mu - lambda)/2 = 0.25: the
    # conjugate change of measure for busy-period *duration* events is
    # nearly critical, unlike the root gamma = 0.5 (tuned for cycle maxima),
    # whose weights disperse hopelessly on duration events.
    return ExperimentConfig(
        queue=_mm1_queue(),
        n_cycles=10 ** 7, pilot_cycles=10 ** 6,
        extra={"bridge_p_levels": [1e-2, 1e-3, 1e-4],
               "deep_levels": [150.0, 170.0], "n_tilted": 200_000,
               "gamma": 0.26},
        preset="tilt-bridge",
    )


def preset_profile_pareto() -> ExperimentConfig:
    from .distributions import Exponential, Pareto
    queue = QueueParams(Exponential(0.5), Pareto(2.5, 0.6))
    return ExperimentConfig(
        queue=queue, n_cycles=200_000,
        extra={"profile_quantity": "area_q", "level_quantile": 0.999,
               "n_bins": 50},
        preset="profile-pareto",
    )


def preset_profile_mm1() -> ExperimentConfig:
    return ExperimentConfig(
        queue=_mm1_queue(), n_cycles=200_000,
        extra={"profile_quantity": "area_q", "level_quantile": 0.999,
               "n_bins": 50},
        preset="profile-mm1",
    )


def preset_engine_calibration() -> ExperimentConfig:
    return ExperimentConfig(queue=_mm1_queue(), n_cycles=10 ** 6,
                            preset="engine-mm1-calibration")


def preset_risk() -> ExperimentConfig:
    return ExperimentConfig(
        queue=_mm1_queue(), n_cycles=50_000,
        extra={"initial_capital": 2.0, "premium_rate": 1.2, "claim_rate": 1.0,
               "claim": {"family": "exponential", "rate": 1.0},
               "horizon": 20.0},
        preset="risk-negative-area",
    )


def preset_joint_parallel() -> ExperimentConfig:
    from .distributions import Exponential, Pareto
    queue = QueueParams(Exponential(0.4), Pareto(2.5, 0.6))
    return ExperimentConfig(
        queue=queue, n_cycles=200_000,
        extra={"b": 2.0, "a_values": [0.0, 0.5, 1.0], "x_points": 8},
        preset="joint-parallel",
    )


PRESETS = {
    "engine-mm1-calibration": ("cycles", preset_engine_calibration),
    "heavy-pareto": ("tail", preset_heavy_pareto),
    "conjecture1-pareto": ("tail", lambda: replace(
        preset_heavy_pareto(("conjecture1",)), preset="conjecture1-pareto")),
    "conjecture2-pareto": ("tail", lambda: replace(
        preset_heavy_pareto(("conjecture2",)), preset="conjecture2-pareto")),
    "busy-tail-pareto": ("tail", lambda: replace(
        preset_heavy_pareto(("busy-tail",)), preset="busy-tail-pareto")),
    "power-discount-pareto": ("tail", lambda: replace(
        preset_heavy_pareto(("power", "discounted")),
        preset="power-discount-pareto")),
    "mm1-lighttail": ("fit", preset_mm1_lighttail),
    "critical-third": ("fit", preset_critical_third),
    "tilt-bridge": ("tilt", preset_tilt_bridge),
    "profile-pareto": ("profile", preset_profile_pareto),
    "profile-mm1": ("profile", preset_profile_mm1),
    "risk-negative-area": ("risk", preset_risk),
    "joint-parallel": ("joint", preset_joint_parallel),
}


COMMAND_RUNNERS = {
    "cycles": run_cycles_experiment,
    "tail": run_tail_experiment,
    "fit": run_fit_experiment,
    "profile": run_profile_experiment,
    "tilt": run_tilt_experiment,
    "risk": run_risk_experiment,
    "joint": run_joint_experiment,
}


def load_preset(name: str) -> tuple[str, ExperimentConfig]:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    command, factory = PRESETS[name]
    return command, factory()


def verify_outputs(out_dir: str) -> dict:
    """Re-run the experiment recorded in out_dir/config.json and byte-compare."""
    cfg_path = os.path.join(out_dir, "config.json")
    with open(cfg_path) as fh:
        meta = json.load(fh)
    command = meta.get("command")
    if command not in COMMAND_RUNNERS:
        raise ConfigError(f"config.json has no runnable command ({command!r})")
    cfg = ExperimentConfig.from_config(meta["config"])
    with tempfile.TemporaryDirectory() as tmp:
        COMMAND_RUNNERS[command](cfg, out_dir=tmp)
        names = sorted(os.listdir(out_dir))
        fresh = sorted(os.listdir(tmp))
        missing = [f for f in names if f not in fresh]
        extra = [f for f in fresh if f not in names]
        differing = []
        for f in names:
            if f in fresh and not filecmp.cmp(os.path.join(out_dir, f),
                                              os.path.join(tmp, f),
                                              shallow=False):
                differing.append(f)
    ok = not missing and not extra and not differing
    return {"ok": ok, "missing": missing, "unexpected": extra,
            "differing": differing, "files": names}
