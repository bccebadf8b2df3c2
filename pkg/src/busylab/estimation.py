"""Monte Carlo tail estimation over cycle samples.

Estimates are weighted empirical survival curves with Wilson intervals
computed at the Kish effective sample size; censored cycles carry exact
lower bounds, so they count as exceedances where the bound already clears
the level, and grid points that any censored-but-undetermined cycle could
still push up are flagged biased-low.

Large runs never materialise the sample: per-chunk arrays stream through
``TailTally`` accumulators (exceedance counts by grid point, moments and a
top-k buffer for the Hill estimator).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import asymptotics
from .batch import CycleSample, run_cycles, stream_cycles
from .cycles import CycleCaps, FunctionalSpec, QueueParams, _StopRule
from .errors import (DegenerateSample, DomainError, EmptySample, GridMismatch,
                     InsufficientWindow, TooFewQualifiers)

Z95 = 1.959963984540054  # two-sided 95% normal quantile

LOW_CONFIDENCE_EXCEEDANCES = 200
ESS_WARNING_LEVEL = 100.0


def wilson_interval(successes: float, n: float, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion; robust at small counts."""
    if n <= 0.0:
        raise EmptySample("wilson interval needs n > 0")
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    lo = 0.0 if successes <= 0.0 else max(0.0, center - half)
    hi = 1.0 if successes >= n else min(1.0, center + half)
    return lo, hi


def log_grid(lo: float, hi: float, points: int) -> np.ndarray:
    if not (0.0 < lo < hi):
        raise DomainError(f"grid needs 0 < lo < hi, got [{lo}, {hi}]")
    return np.geomspace(lo, hi, points)


def grid_from_quantiles(values: np.ndarray, weights: np.ndarray | None = None,
                        lo_q: float = 0.5, hi_q: float = 0.9999,
                        points: int = 40) -> np.ndarray:
    """Log-spaced grid between two weighted quantiles of a pilot sample."""
    values = np.asarray(values, dtype=np.float64)
    if len(values) == 0:
        raise EmptySample("cannot build a grid from an empty sample")
    if weights is None:
        lo, hi = np.quantile(values, [lo_q, hi_q])
    else:
        order = np.argsort(values)
        cw = np.cumsum(np.asarray(weights, dtype=np.float64)[order])
        cw /= cw[-1]
        lo = values[order[np.searchsorted(cw, lo_q)]]
        hi = values[order[min(np.searchsorted(cw, hi_q), len(values) - 1)]]
    if not (lo > 0.0):
        lo = float(np.min(values[values > 0.0]))
    if hi <= lo:
        raise DomainError("degenerate quantile grid (hi <= lo)")
    return log_grid(float(lo), float(hi), points)


@dataclass
class TailEstimate:
    """Weighted empirical survival estimates on a grid of levels."""

    quantity: str                 # label ("tau" or a functional label)
    grid: np.ndarray
    p_hat: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    exceed_count: np.ndarray      # raw cycle counts above each level
    ess: np.ndarray               # effective sample size of each exceedance sum
    biased_low: np.ndarray        # censored-undetermined region flags
    n_cycles: int
    n_censored: int
    weighted: bool
    params_digest: str
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.diff(self.grid) <= 0.0):
            raise ValueError("grid must be strictly increasing")
        if np.any(np.diff(self.p_hat) > 1e-15):
            raise ValueError("p_hat must be non-increasing in the level")
        if np.any(np.diff(self.exceed_count) > 0):
            raise ValueError("exceedance counts must be non-increasing")
        if np.any(self.ci_lo > self.p_hat + 1e-15) or np.any(self.p_hat > self.ci_hi + 1e-15):
            raise ValueError("confidence bounds must bracket p_hat")

    @property
    def low_confidence(self) -> np.ndarray:
        return self.exceed_count < LOW_CONFIDENCE_EXCEEDANCES

    @property
    def ess_warning(self) -> np.ndarray:
        return self.ess < ESS_WARNING_LEVEL

    def value_at(self, x: float) -> float:
        """p_hat at a grid point (exact match required)."""
        idx = np.nonzero(np.isclose(self.grid, x, rtol=1e-12))[0]
        if len(idx) != 1:
            raise GridMismatch(f"level {x} not on the estimate grid")
        return float(self.p_hat[idx[0]])


class TailTally:
    """Streaming exceedance accumulator for one quantity over a fixed grid."""

    def __init__(self, quantity, grid, weighted: bool = False, top_k: int = 0):
        self.quantity = quantity
        self.grid = np.asarray(grid, dtype=np.float64)
        if np.any(np.diff(self.grid) <= 0.0):
            raise ValueError("grid must be strictly increasing")
        g = len(self.grid)
        self.weighted = weighted
        self.exceed_n = np.zeros(g, dtype=np.int64)
        self.exceed_w = np.zeros(g)
        self.exceed_w2 = np.zeros(g)
        self.undetermined = np.zeros(g, dtype=np.int64)
        self.sum_w = 0.0
        self.sum_w2 = 0.0
        self.n = 0
        self.n_censored = 0
        self.top_k = int(top_k)
        self._top = np.empty(0)
        self.sum_v = 0.0
        self.sum_v2 = 0.0

    def update(self, values, weights=None, censored=None) -> None:
        values = np.asarray(values, dtype=np.float64)
        m = len(values)
        if m == 0:
            return
        self.n += m
        self.sum_v += float(values.sum())
        self.sum_v2 += float(np.square(values).sum())
        g = len(self.grid)
        # index of the first grid point >= value; value exceeds grid[j] iff j < idx
        idx = np.searchsorted(self.grid, values, side="left")
        counts = np.bincount(idx, minlength=g + 1)
        self.exceed_n += counts[:0:-1].cumsum()[::-1]
        if not self.weighted:
            self.sum_w += m
            self.sum_w2 += m
            self.exceed_w = self.exceed_n.astype(np.float64)
            self.exceed_w2 = self.exceed_n.astype(np.float64)
        else:
            if weights is None:
                raise ValueError("weighted tally requires weights")
            weights = np.asarray(weights, dtype=np.float64)
            self.sum_w += float(weights.sum())
            self.sum_w2 += float(np.square(weights).sum())
            wc = np.bincount(idx, weights=weights, minlength=g + 1)
            w2c = np.bincount(idx, weights=np.square(weights), minlength=g + 1)
            self.exceed_w += wc[:0:-1].cumsum()[::-1]
            self.exceed_w2 += w2c[:0:-1].cumsum()[::-1]
        if censored is not None and np.any(censored):
            cmask = np.asarray(censored, dtype=bool)
            self.n_censored += int(cmask.sum())
            # a censored bound <= grid[j] leaves the indicator at grid[j] unknown
            cidx = idx[cmask]
            cc = np.bincount(cidx, minlength=g + 1)
            self.undetermined += cc[:-1].cumsum()
        if self.top_k > 0:
            merged = np.concatenate([self._top, values])
            if len(merged) > self.top_k:
                part = np.partition(merged, len(merged) - self.top_k)
                merged = part[len(merged) - self.top_k:]
            self._top = merged

    def top_values(self) -> np.ndarray:
        return np.sort(self._top)[::-1]

    @property
    def mean(self) -> float:
        return self.sum_v / self.n if self.n else math.nan

    @property
    def stddev(self) -> float:
        if self.n < 2:
            return math.nan
        var = (self.sum_v2 - self.sum_v ** 2 / self.n) / (self.n - 1)
        return math.sqrt(max(var, 0.0))

    def estimate(self, params_digest: str = "", metadata: dict | None = None) -> TailEstimate:
        if self.n == 0 or self.sum_w <= 0.0:
            raise EmptySample("no cycles accumulated")
        p = self.exceed_w / self.sum_w
        n_eff = self.sum_w ** 2 / self.sum_w2 if self.sum_w2 > 0.0 else 0.0
        lo = np.empty_like(p)
        hi = np.empty_like(p)
        for j in range(len(p)):
            lo[j], hi[j] = wilson_interval(p[j] * n_eff, n_eff)
        with np.errstate(divide="ignore", invalid="ignore"):
            ess = np.where(self.exceed_w2 > 0.0,
                           self.exceed_w ** 2 / self.exceed_w2, 0.0)
        meta = dict(metadata or {})
        meta.setdefault("n_effective", n_eff)
        label = (self.quantity.label if isinstance(self.quantity, FunctionalSpec)
                 else str(self.quantity))
        return TailEstimate(
            quantity=label, grid=self.grid, p_hat=p, ci_lo=lo, ci_hi=hi,
            exceed_count=self.exceed_n.copy(), ess=ess,
            biased_low=self.undetermined > 0, n_cycles=self.n,
            n_censored=self.n_censored, weighted=self.weighted,
            params_digest=params_digest, metadata=meta)


def empirical_tail(sample: CycleSample, quantity, grid) -> TailEstimate:
    """Weighted empirical survival curve of one quantity of a sample."""
    if len(sample) == 0:
        raise EmptySample("empty cycle sample")
    values = sample.quantity(quantity)
    weighted = bool(np.any(sample.weight != 1.0))
    tally = TailTally(quantity, grid, weighted=weighted)
    tally.update(values, sample.weight if weighted else None, sample.censored)
    return tally.estimate(params_digest=sample.params.digest())


def accumulate_stream(params: QueueParams, n: int, master_seed: int,
                      tallies: list[TailTally], workers: int = 1,
                      weight_gamma: float = 0.0, weight_lognorm: float = 0.0,
                      stop_rule: _StopRule | None = None,
                      engine: str = "auto") -> dict:
    """Stream n cycles through the tallies; returns run-level summaries."""
    n_tally = TailTally("n", [1.0])     # moment trackers ride along
    tau_tally = TailTally("tau", [1.0])
    n_censored = 0
    for chunk in stream_cycles(params, n, master_seed, workers=workers,
                               weight_gamma=weight_gamma,
                               weight_lognorm=weight_lognorm,
                               stop_rule=stop_rule, engine=engine):
        weights = chunk["weight"]
        censored = chunk["censored"]
        n_censored += int(censored.sum())
        for tally in tallies:
            q = tally.quantity
            if isinstance(q, FunctionalSpec):
                j = params.functionals.index(q)
                values = chunk["areas"][:, j]
            elif q == "tau":
                values = chunk["tau"]
            elif q == "n":
                values = chunk["n"]
            elif q == "max_queue":
                values = chunk["max_queue"]
            elif q == "max_workload":
                values = chunk["max_workload"]
            else:
                raise KeyError(f"unknown quantity {q!r}")
            tally.update(values, weights if tally.weighted else None, censored)
        n_tally.update(chunk["n"])
        tau_tally.update(chunk["tau"])
    return {
        "n_cycles": n, "n_censored": n_censored,
        "censored_fraction": n_censored / n,
        "mean_n": n_tally.mean, "sd_n": n_tally.stddev,
        "mean_tau": tau_tally.mean, "sd_tau": tau_tally.stddev,
    }


# ---------------------------------------------------------------------------
# ratio diagnostics

@dataclass
class RatioDiagnostic:
    """Pointwise ratio of an empirical tail to a reference curve or tail."""

    x: np.ndarray
    ratio: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    exceed_count: np.ndarray
    low_confidence: np.ndarray
    numerator: str
    denominator: str
    metadata: dict = field(default_factory=dict)

    def confident_within(self, lo: float, hi: float,
                         min_exceed: int = LOW_CONFIDENCE_EXCEEDANCES) -> bool:
        mask = self.exceed_count >= min_exceed
        if not np.any(mask):
            return False
        r = self.ratio[mask]
        return bool(np.all((r >= lo) & (r <= hi)))


def ratio_diagnostic(estimate: TailEstimate, reference) -> RatioDiagnostic:
    """Ratio of the estimate to an AsymptoticCurve or a second TailEstimate.

    For an empirical denominator the caller must have evaluated it on the
    mapped grid (same length, paired pointwise); CIs divide conservatively.
    """
    if estimate.params_digest and getattr(reference, "params_digest", "") and \
            estimate.params_digest != reference.params_digest:
        raise GridMismatch("estimate and reference built from different parameters")
    if isinstance(reference, asymptotics.AsymptoticCurve):
        if reference.kind != "probability":
            raise GridMismatch(f"cannot take ratios to a {reference.kind} curve")
        if len(reference.grid) != len(estimate.grid) or \
                not np.allclose(reference.grid, estimate.grid, rtol=1e-12):
            raise GridMismatch("curve not evaluated on the estimate grid")
        den = reference.values
        den_lo = den
        den_hi = den
        den_count = None
        den_name = reference.name
    elif isinstance(reference, TailEstimate):
        if len(reference.grid) != len(estimate.grid):
            raise GridMismatch("denominator estimate grid length mismatch")
        den = reference.p_hat
        den_lo = reference.ci_lo
        den_hi = reference.ci_hi
        den_count = reference.exceed_count
        den_name = reference.quantity
    else:
        raise TypeError("reference must be an AsymptoticCurve or TailEstimate")

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(den > 0.0, estimate.p_hat / den, np.inf)
        lo = np.where(den_hi > 0.0, estimate.ci_lo / den_hi, np.inf)
        hi = np.where(den_lo > 0.0, estimate.ci_hi / den_lo, np.inf)
    count = estimate.exceed_count.copy()
    if den_count is not None:
        count = np.minimum(count, den_count)
    return RatioDiagnostic(
        x=estimate.grid.copy(), ratio=ratio, ci_lo=lo, ci_hi=hi,
        exceed_count=count,
        low_confidence=count < LOW_CONFIDENCE_EXCEEDANCES,
        numerator=estimate.quantity, denominator=den_name)


# ---------------------------------------------------------------------------
# tail-index and parametric tail fits

@dataclass
class HillEstimate:
    alpha: float
    ci_lo: float
    ci_hi: float
    k: int
    n: int
    threshold: float


def default_hill_k(n: int) -> int:
    """floor(n**(2/3)) capped at n/10 (no guidance in the source material)."""
    return max(2, min(int(n ** (2.0 / 3.0)), n // 10))


def hill_estimator(values, k: int | None = None) -> HillEstimate:
    """Hill tail-index estimate on the k largest order statistics."""
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    if n < 3:
        raise EmptySample("hill estimator needs at least 3 values")
    if k is None:
        k = default_hill_k(n)
    if not (2 <= k < n):
        raise DomainError(f"need 2 <= k < n, got k={k}, n={n}")
    top = np.partition(values, n - k - 1)[n - k - 1:]
    top = np.sort(top)[::-1]  # top[0..k-1] largest, top[k] the threshold
    threshold = top[k]
    if threshold <= 0.0:
        raise DegenerateSample("threshold order statistic is not positive")
    if top[0] == threshold:
        raise DegenerateSample("top order statistics are tied")
    mean_log = float(np.mean(np.log(top[:k] / threshold)))
    alpha = 1.0 / mean_log
    half = Z95 / math.sqrt(k)
    return HillEstimate(alpha=alpha, ci_lo=alpha * (1.0 - half),
                        ci_hi=alpha * (1.0 + half), k=k, n=n,
                        threshold=float(threshold))


@dataclass
class FitWindow:
    """Grid-point filter for tail fits; None bounds are inactive."""

    p_lo: float | None = None
    p_hi: float | None = None
    x_lo: float | None = None
    x_hi: float | None = None

    def mask(self, estimate: TailEstimate) -> np.ndarray:
        m = (estimate.p_hat > 0.0) & (estimate.exceed_count > 0) & \
            ~estimate.biased_low
        if self.p_lo is not None:
            m &= estimate.p_hat >= self.p_lo
        if self.p_hi is not None:
            m &= estimate.p_hat <= self.p_hi
        if self.x_lo is not None:
            m &= estimate.grid >= self.x_lo
        if self.x_hi is not None:
            m &= estimate.grid <= self.x_hi
        return m


def stretched_exp_window(n_cycles: int) -> FitWindow:
    """Default stretched-exponential window: p_hat in [max(1e-6, 5/n), 1e-2]."""
    return FitWindow(p_lo=max(1e-6, 5.0 / n_cycles), p_hi=1e-2)


@dataclass
class FitReport:
    model: str
    coefficients: dict            # name -> (value, standard error)
    window: tuple[float, float]   # [x_lo, x_hi] actually used
    n_points: int
    wrss: float                   # weighted residual sum of squares
    metadata: dict = field(default_factory=dict)

    def value(self, name: str) -> float:
        return self.coefficients[name][0]

    def se(self, name: str) -> float:
        return self.coefficients[name][1]


MODEL_LOGLOG = "LogLogSlope"
MODEL_STRETCHED = "StretchedExp"


def fit_tail(estimate: TailEstimate, model: str,
             window: FitWindow | None = None,
             include_quarter_log: bool = True) -> FitReport:
    """Weighted least squares of log p_hat against a named tail model.

    Weights are exceedance counts (the marginal variance of log p_hat at a
    point with c exceedances is about 1/c, so this is marginal
    inverse-variance weighting).  Grid points of one sample share
    exceedances, with cov(log p_hat_j, log p_hat_k) about 1/c_min(j,k); the
    reported standard errors are sandwich estimates under that nested
    covariance, which replication tests show are calibrated.
    """
    if model == MODEL_STRETCHED and window is None:
        window = stretched_exp_window(estimate.n_cycles)
    if window is None:
        window = FitWindow()
    mask = window.mask(estimate)
    x = estimate.grid[mask]
    p = estimate.p_hat[mask]
    w = estimate.exceed_count[mask].astype(np.float64)
    if len(x) < 5:
        raise InsufficientWindow(
            f"only {len(x)} usable grid points in the fit window (need 5)")
    y = np.log(p)
    meta = {"quantity": estimate.quantity, "n_cycles": estimate.n_cycles}
    if model == MODEL_LOGLOG:
        cols = np.column_stack([np.ones_like(x), np.log(x)])
        names = ["intercept", "slope"]
    elif model == MODEL_STRETCHED:
        if include_quarter_log:
            y = y + 0.25 * np.log(x)
        cols = np.column_stack([np.ones_like(x), -np.sqrt(x)])
        names = ["c0", "psi"]
        meta["include_quarter_log"] = include_quarter_log
    else:
        raise DomainError(f"unknown model {model!r}")
    xtw = cols.T * w
    gram = xtw @ cols
    beta = np.linalg.solve(gram, xtw @ y)
    resid = y - cols @ beta
    wrss = float(np.sum(w * resid ** 2))
    # sandwich covariance of nested exceedance counts: the log-estimates at
    # two levels share the shallower level's fluctuation, so
    # sigma_jk = var(log p_hat at the shallower point) = (1 - p)/count there
    cmax = np.maximum.outer(w, w)
    pmax = np.maximum.outer(p, p)
    sigma = (1.0 - pmax) / cmax
    bread = np.linalg.inv(gram)
    meat = xtw @ sigma @ xtw.T
    cov = bread @ meat @ bread
    ses = np.sqrt(np.maximum(np.diag(cov), 0.0))
    coeffs = {name: (float(b), float(se)) for name, b, se in zip(names, beta, ses)}
    if model == MODEL_STRETCHED and coeffs["psi"][0] <= 0.0:
        meta["warning"] = "fitted psi not positive"
    return FitReport(model=model, coefficients=coeffs,
                     window=(float(x[0]), float(x[-1])), n_points=len(x),
                     wrss=wrss, metadata=meta)


# ---------------------------------------------------------------------------
# importance sampling

def tilted_run(params: QueueParams, gamma: float, n: int, event_thresholds: dict,
               master_seed: int = 0, workers: int = 1,
               max_customers: int = 10 ** 7) -> dict:
    """Exponentially tilted run: unbiased weighted tail estimates.

    ``event_thresholds`` maps "tau" or a FunctionalSpec from
    ``params.functionals`` to its grid of levels.  Service times are tilted
    by +gamma and interarrival times by -gamma; the per-cycle likelihood
    weight is exp(-gamma * (sum S - sum T) + n_customers * lognorm) with
    lognorm = log(mgf_S(gamma) * mgf_T(-gamma)).  At the tilt root the
    paired mgf factors cancel (lognorm = 0) and the tilted system is
    unstable; smaller gamma (down to the critical point where the tilted
    load crosses 1) keeps the estimator unbiased and is the useful range
    for busy-period *duration* events, whose conjugate tilt is nearly
    critical rather than the root.  Each cycle stops as soon as every
    requested indicator is decided, so an unstable tilted system never runs
    away; the stop-censored records are exact lower bounds and every
    requested level stays fully determined.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lognorm = math.log(params.service.mgf(gamma)) + \
        math.log(params.interarrival.mgf(-gamma)) if gamma != 0.0 else 0.0
    tilted = QueueParams(
        interarrival=params.interarrival.tilt(-gamma),
        service=params.service.tilt(gamma),
        functionals=params.functionals,
        caps=CycleCaps(max_customers=max_customers,
                       max_time=params.caps.max_time,
                       early_stop_threshold=None),
    )
    tau_level = -math.inf
    area_levels = np.full(len(params.functionals), -math.inf)
    tallies = {}
    for quantity, grid in event_thresholds.items():
        grid = np.asarray(grid, dtype=np.float64)
        if isinstance(quantity, FunctionalSpec):
            j = params.functionals.index(quantity)
            area_levels[j] = float(grid.max())
        elif quantity == "tau":
            tau_level = float(grid.max())
        else:
            raise KeyError(f"unknown event quantity {quantity!r}")
        tallies[quantity] = TailTally(quantity, grid, weighted=True)
    stop = _StopRule(tau_level, area_levels)
    summary = accumulate_stream(tilted, n, master_seed, list(tallies.values()),
                                workers=workers, weight_gamma=gamma,
                                weight_lognorm=lognorm, stop_rule=stop)
    out = {}
    for quantity, tally in tallies.items():
        est = tally.estimate(params_digest=params.digest(),
                             metadata={"gamma": gamma, "tilted": True,
                                       "run": summary})
        out[quantity] = est
    return out


# ---------------------------------------------------------------------------
# conditional path profiles

@dataclass
class PathProfile:
    """Time-rescaled mean of peak-normalised queue paths conditioned on a
    large functional area."""

    n_bins: int
    s: np.ndarray                # bin midpoints in (0, 1)
    q_mean: np.ndarray
    peak_fraction: float
    concavity_defect: float
    triangle_distance: float
    n_qualifying: int
    x_level: float
    metadata: dict = field(default_factory=dict)


def conditional_path_profile(sample: CycleSample, quantity, x_level: float,
                             n_bins: int = 50,
                             min_qualifying: int = 30) -> PathProfile:
    """Average the paths of cycles whose ``quantity`` exceeds ``x_level``.

    Each qualifying path is rescaled to [0, 1], sampled at bin midpoints
    (piecewise-constant reconstruction) and divided by its own peak before
    averaging, so the profile captures shape rather than magnitude.
    """
    if sample.paths is None:
        raise ValueError("sample was generated without path capture")
    values = sample.quantity(quantity)
    qualifying = np.nonzero((values > x_level) & ~sample.censored)[0]
    if len(qualifying) < min_qualifying:
        raise TooFewQualifiers(
            f"{len(qualifying)} cycles exceed {x_level} (need {min_qualifying})")
    mids = (np.arange(n_bins) + 0.5) / n_bins
    acc = np.zeros(n_bins)
    for i in qualifying:
        path = sample.paths[i]
        tau = sample.tau[i]
        qs = path.queue_at(mids * tau).astype(np.float64)
        peak = qs.max()
        if peak <= 0.0:
            continue
        acc += qs / peak
    q_mean = acc / len(qualifying)
    peak_idx = int(np.argmax(q_mean))
    peak_fraction = float(mids[peak_idx])
    second = np.diff(q_mean, n=2)
    concavity_defect = float(max(0.0, second.max())) if len(second) else 0.0
    tri = _two_segment_triangle(mids, peak_fraction, q_mean[peak_idx])
    triangle_distance = float(np.sqrt(np.mean((q_mean - tri) ** 2)))
    return PathProfile(n_bins=n_bins, s=mids, q_mean=q_mean,
                       peak_fraction=peak_fraction,
                       concavity_defect=concavity_defect,
                       triangle_distance=triangle_distance,
                       n_qualifying=len(qualifying), x_level=float(x_level))


def _two_segment_triangle(s, peak_s, peak_val):
    """Piecewise-linear path through (0,0), (peak_s, peak_val), (1,0)."""
    tri = np.where(s <= peak_s,
                   peak_val * s / peak_s,
                   peak_val * (1.0 - s) / (1.0 - peak_s))
    return tri


# ---------------------------------------------------------------------------
# bivariate (parallel-server) tails

@dataclass
class BivariateSample:
    params: QueueParams
    b: float
    tau_min: np.ndarray
    n_customers: np.ndarray
    area_w1: np.ndarray
    area_w2: np.ndarray
    censored: np.ndarray


def run_bivariate_cycles(params: QueueParams, b: float, n: int,
                         master_seed: int = 0) -> BivariateSample:
    """n joint cycles of the proportional parallel-server system."""
    from .cycles import PLAIN_WORKLOAD_AREA, simulate_bivariate_cycle
    from .rngstream import substream
    if n < 1:
        raise ValueError("n must be >= 1")
    if PLAIN_WORKLOAD_AREA not in params.functionals:
        raise DomainError("bivariate runs need the plain workload functional")
    rng = substream(master_seed, 0)
    tau = np.empty(n)
    nn = np.empty(n, dtype=np.int64)
    a1 = np.empty(n)
    a2 = np.empty(n)
    cens = np.empty(n, dtype=np.bool_)
    for i in range(n):
        r1, r2 = simulate_bivariate_cycle(params, b, rng)
        tau[i] = r1.tau
        nn[i] = r1.n_customers
        a1[i] = r1.areas[PLAIN_WORKLOAD_AREA]
        a2[i] = r2.areas[PLAIN_WORKLOAD_AREA]
        cens[i] = r1.censored or r2.censored
    return BivariateSample(params=params, b=b, tau_min=tau, n_customers=nn,
                           area_w1=a1, area_w2=a2, censored=cens)


@dataclass
class JointTail:
    x: float
    a: float
    p_hat: float
    ci_lo: float
    ci_hi: float
    count: int
    n: int


def joint_tail(sample: BivariateSample, x: float, a: float) -> JointTail:
    """P(area_W1 > x and area_W2 > a*x) with a Wilson interval."""
    if a < 0.0:
        raise DomainError("a must be >= 0")
    n = len(sample.tau_min)
    if n == 0:
        raise EmptySample("empty bivariate sample")
    hits = int(np.sum((sample.area_w1 > x) & (sample.area_w2 > a * x)))
    lo, hi = wilson_interval(hits, n)
    return JointTail(x=float(x), a=float(a), p_hat=hits / n, ci_lo=lo,
                     ci_hi=hi, count=hits, n=n)
