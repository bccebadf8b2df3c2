"""Closed-form evaluators for the asymptotic tail formulas and threshold maps.

Probability-valued formulas clamp to (0, 1]; a clamped point is outside the
asymptotic regime, which the curve records rather than treating as an error.
Two sign readings are corrected relative to the printed forms (see
``mm1_psi`` and ``lundberg_root``); the printed variants are recorded in the
curve provenance metadata.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import distributions as dist
from .cycles import QueueParams
from .errors import DomainError, NoRoot, UnstableRegime

HOLDS = "holds"
FAILS = "fails"
UNKNOWN = "unknown"

CURVE_NAMES = ("BusyTailHeavy", "AreaQConjecture", "AreaWConjecture",
               "PowerConjecture", "DiscountedConjecture", "MM1LightTail",
               "KyprianouComparator", "CriticalSlope")


def _require_stable(rho: float) -> None:
    if not (0.0 < rho < 1.0):
        raise UnstableRegime(f"formula requires 0 < rho < 1, got rho = {rho}")


def _sf_callable(service_sf):
    if isinstance(service_sf, dist.DistributionSpec):
        return service_sf.survival
    return service_sf


def busy_tail_heavy(x: float, rho: float, service_sf) -> float:
    """Subexponential busy-period tail: survival of (1-rho)*x under the
    service law, inflated by 1/(1-rho); clamped to (0, 1]."""
    _require_stable(rho)
    if not (x > 0.0):
        raise DomainError("x must be > 0")
    sf = _sf_callable(service_sf)
    return min(1.0, sf((1.0 - rho) * x) / (1.0 - rho))


def area_q_threshold(x: float, rho: float, lambda_T: float, lambda_S: float) -> float:
    """Queue-area level x maps to the busy-period level sqrt(2x/(rho*(lambda_S-lambda_T)))."""
    _require_stable(rho)
    if not (lambda_S > lambda_T):
        raise UnstableRegime("requires lambda_S > lambda_T")
    if not (x > 0.0):
        raise DomainError("x must be > 0")
    return math.sqrt(2.0 * x / (rho * (lambda_S - lambda_T)))


def area_w_threshold(x: float, rho: float) -> float:
    """Workload-area level x maps to the busy-period level sqrt(2x/(1-rho))."""
    _require_stable(rho)
    if not (x > 0.0):
        raise DomainError("x must be > 0")
    return math.sqrt(2.0 * x / (1.0 - rho))


def power_threshold(x: float, k: float, rho: float) -> float:
    """Threshold for the power functional integral of W**k: ((k+1)x/(1-rho)**k)**(1/(k+1))."""
    _require_stable(rho)
    if k < 0.0:
        raise DomainError("k must be >= 0")
    if not (x > 0.0):
        raise DomainError("x must be > 0")
    if k == 1.0:
        return area_w_threshold(x, rho)  # identical map, bit for bit
    return ((k + 1.0) * x / (1.0 - rho) ** k) ** (1.0 / (k + 1.0))


def discounted_threshold(x: float, k: float, theta: float, rho: float) -> float:
    """Threshold for the discounted power functional: (theta*x/(1-rho)**k)**(1/k)."""
    _require_stable(rho)
    if k <= 0.0:
        raise DomainError("discounted threshold needs k > 0")
    if theta <= 0.0:
        raise DomainError("discounted threshold needs theta > 0")
    if not (x > 0.0):
        raise DomainError("x must be > 0")
    return (theta * x / (1.0 - rho) ** k) ** (1.0 / k)


def mm1_psi(rho: float) -> float:
    """Decay rate of sqrt(x) in the M/M/1 queue-area tail.

    The printed radicand -2(1-rho) + (1+rho)*log(rho) is negative on all of
    (0,1); the sign-corrected form (1+rho)*log(1/rho) - 2(1-rho) is positive
    there and vanishes as rho -> 1, matching the critical-case transition.
    """
    _require_stable(rho)
    radicand = (1.0 + rho) * math.log(1.0 / rho) - 2.0 * (1.0 - rho)
    if radicand <= 0.0:
        raise DomainError(f"psi radicand non-positive at rho = {rho}")
    return 2.0 * math.sqrt(radicand)


def mm1_area_tail(x: float, rho: float) -> float:
    """M/M/1 queue-area tail: prefactor * x**(-1/4) * exp(-psi*sqrt(x)), clamped to (0,1]."""
    if not (x > 0.0):
        raise DomainError("x must be > 0")
    psi = mm1_psi(rho)
    pref = (1.0 - rho) / (rho * math.sqrt(2.0 * math.pi * psi))
    return min(1.0, pref * x ** -0.25 * math.exp(-psi * math.sqrt(x)))


def kyprianou_comparator_exponent(rho: float, mu: float) -> float:
    """Coefficient of sqrt(x) in the piecewise-linear comparator tail:
    (1-sqrt(rho))**2 * mu * sqrt(2*(1+rho)/(1-rho)).

    This is the exponent produced by mapping the busy-period tail through the
    two-triangle threshold; it disagrees with ``mm1_psi``, which is the point
    of the comparison.
    """
    _require_stable(rho)
    if not (mu > 0.0):
        raise DomainError("mu must be > 0")
    gamma = (1.0 - math.sqrt(rho)) ** 2 * mu
    return gamma * math.sqrt(2.0 * (1.0 + rho) / (1.0 - rho))


def critical_slope() -> float:
    """Log-log slope of the critical-case (rho = 1) queue-area tail."""
    return -1.0 / 3.0


def lundberg_root(interarrival: dist.DistributionSpec,
                  service: dist.DistributionSpec) -> float:
    """Unique gamma > 0 with E[exp(gamma*(S - T))] = 1.

    Orientation note: the change of measure reweights increments by
    exp(gamma*(S - T)); the root with gamma > 0 exists for a stable queue
    with light-tailed service and makes the tilted queue unstable, which is
    the regime the rare-event simulation needs.  (Solving E[exp(gamma*(T-S))]
    = 1 for gamma > 0 would instead require an unstable queue.)
    """
    rho = (1.0 / interarrival.mean()) / (1.0 / service.mean())
    if rho >= 1.0:
        raise UnstableRegime(f"lundberg root needs a stable queue, rho = {rho}")
    sup = service.mgf_domain_sup()
    if sup <= 0.0:
        raise NoRoot("service mgf domain is empty on (0, inf) (heavy-tailed)")

    def g(gamma):
        ms = service.mgf(gamma)
        if math.isinf(ms):
            return math.inf
        mt = interarrival.mgf(-gamma)
        if mt == 0.0:  # underflow far into the negative tilt
            return -math.inf
        return math.log(ms) + math.log(mt)

    # ladder toward the domain sup until g changes sign
    hi = None
    if math.isfinite(sup):
        for i in range(1, 60):
            cand = sup * (1.0 - 0.5 ** i)
            if cand > 0.0 and g(cand) > 0.0:
                hi = cand
                break
    else:
        cand = 1.0
        for _ in range(80):
            if g(cand) > 0.0:
                hi = cand
                break
            cand *= 2.0
    if hi is None:
        raise NoRoot("E[exp(gamma*(S-T))] never exceeds 1 on the mgf domain")
    lo = hi
    while g(lo) > 0.0:
        lo *= 0.5
        if lo < 1e-300:
            raise NoRoot("no sign change found above gamma = 0")
    gamma = brentq(g, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=200)
    residual = abs(service.mgf(gamma) * interarrival.mgf(-gamma) - 1.0)
    if residual > 1e-12:
        raise NoRoot(f"root residual {residual} exceeds 1e-12")
    return gamma


# ---------------------------------------------------------------------------
# interarrival-vs-service tail comparison (the light-interarrival condition)

_BOUNDED, _STRETCHED, _LOGNORMAL, _POLY = 0, 1, 2, 3


def _tail_decay(spec: dist.DistributionSpec):
    """Asymptotic decay class of the survival function, as
    (class, parameters); within the stretched class the tail is
    t**p * exp(-c * t**beta) up to constants."""
    if isinstance(spec, dist.Deterministic):
        return (_BOUNDED,)
    if isinstance(spec, dist.Exponential):
        return (_STRETCHED, spec.rate, 1.0, 0.0)
    if isinstance(spec, dist.Erlang):
        return (_STRETCHED, spec.rate, 1.0, float(spec.shape - 1))
    if isinstance(spec, dist.Weibull):
        return (_STRETCHED, spec.scale ** -spec.shape, spec.shape, 0.0)
    if isinstance(spec, dist.Pareto):
        return (_POLY, spec.alpha)
    if isinstance(spec, dist.Lognormal):
        return (_LOGNORMAL, spec.mu, spec.sigma)
    raise TypeError(f"unknown family {spec!r}")


def check_interlight(interarrival: dist.DistributionSpec,
                     service: dist.DistributionSpec, varsigma: float) -> str:
    """Decide whether t**(1+varsigma) * P(T > t) / P(S > t) -> 0.

    Family-level comparison: the heavier class in the numerator decides
    divergence outright; within a class the parameters are compared, with the
    polynomial factor t**(1+varsigma) entering only at class ties.
    """
    if not (varsigma > 0.0):
        raise DomainError("varsigma must be > 0")
    num = _tail_decay(interarrival)
    den = _tail_decay(service)
    if num[0] == _BOUNDED:
        return HOLDS
    if den[0] == _BOUNDED:
        return FAILS
    if num[0] != den[0]:
        return HOLDS if num[0] < den[0] else FAILS
    if num[0] == _POLY:
        # ratio ~ t**(1 + varsigma - alpha_T + alpha_S)
        return HOLDS if num[1] > den[1] + 1.0 + varsigma else FAILS
    if num[0] == _LOGNORMAL:
        mu_t, sg_t = num[1], num[2]
        mu_s, sg_s = den[1], den[2]
        if sg_t != sg_s:
            return HOLDS if sg_t < sg_s else FAILS
        # equal sigma: ratio ~ t**(1 + varsigma + (mu_T - mu_S)/sigma**2)
        return HOLDS if mu_s > mu_t + (1.0 + varsigma) * sg_s ** 2 else FAILS
    c_t, b_t, p_t = num[1], num[2], num[3]
    c_s, b_s, p_s = den[1], den[2], den[3]
    if b_t != b_s:
        return HOLDS if b_t > b_s else FAILS
    if c_t != c_s:
        return HOLDS if c_t > c_s else FAILS
    # same exponential scale: polynomial prefactors decide
    return HOLDS if p_s > p_t + 1.0 + varsigma else FAILS


# ---------------------------------------------------------------------------
# curve container

@dataclass
class AsymptoticCurve:
    """A named formula evaluated on a grid, with provenance and applicability."""

    name: str
    kind: str                   # "probability" | "exponent" | "shape"
    params_digest: str
    grid: np.ndarray
    values: np.ndarray
    applicability: str          # "applicable" | "extrapolated"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if len(self.grid) != len(self.values):
            raise ValueError("grid and values must have equal length")
        if np.any(np.diff(self.grid) <= 0.0):
            raise ValueError("grid must be strictly increasing")


def _heavy_applicability(params: QueueParams, needs_interlight: bool,
                         varsigma: float = 0.5) -> tuple[str, dict]:
    tc = params.service.tail_class()
    notes = {"service_tail": tc.tag}
    if not tc.is_subexponential:
        return "extrapolated", notes
    if needs_interlight:
        verdict = check_interlight(params.interarrival, params.service, varsigma)
        notes["interlight"] = verdict
        notes["interlight_varsigma"] = varsigma
        if verdict != HOLDS:
            return "extrapolated", notes
    return "applicable", notes


def _is_mm1(params: QueueParams) -> bool:
    return (isinstance(params.interarrival, dist.Exponential)
            and isinstance(params.service, dist.Exponential))


def build_curve(name: str, params: QueueParams, grid, *, k: float | None = None,
                theta: float | None = None) -> AsymptoticCurve:
    """Evaluate a named formula on a grid against the queue's parameters."""
    grid = np.asarray(grid, dtype=np.float64)
    rho = params.rho
    lam_t, lam_s = params.lambda_T, params.lambda_S
    sf = params.service.survival
    meta: dict = {"rho": rho, "lambda_T": lam_t, "lambda_S": lam_s,
                  "queue": params.to_config()}
    kind = "probability"
    display = name

    if name == "BusyTailHeavy":
        vals = [busy_tail_heavy(x, rho, sf) for x in grid]
        applicability, notes = _heavy_applicability(params, needs_interlight=False)
    elif name == "AreaWConjecture":
        vals = [busy_tail_heavy(area_w_threshold(x, rho), rho, sf) for x in grid]
        applicability, notes = _heavy_applicability(params, needs_interlight=False)
    elif name == "AreaQConjecture":
        vals = [busy_tail_heavy(area_q_threshold(x, rho, lam_t, lam_s), rho, sf)
                for x in grid]
        applicability, notes = _heavy_applicability(params, needs_interlight=True)
    elif name == "PowerConjecture":
        if k is None:
            raise DomainError("PowerConjecture needs k")
        vals = [busy_tail_heavy(power_threshold(x, k, rho), rho, sf) for x in grid]
        applicability, notes = _heavy_applicability(params, needs_interlight=False)
        meta["k"] = k
        display = f"PowerConjecture[k={k:g}]"
    elif name == "DiscountedConjecture":
        if k is None or theta is None:
            raise DomainError("DiscountedConjecture needs k and theta")
        vals = [busy_tail_heavy(discounted_threshold(x, k, theta, rho), rho, sf)
                for x in grid]
        applicability, notes = _heavy_applicability(params, needs_interlight=False)
        meta["k"] = k
        meta["theta"] = theta
        display = f"DiscountedConjecture[k={k:g},theta={theta:g}]"
    elif name == "MM1LightTail":
        vals = [mm1_area_tail(x, rho) for x in grid]
        applicability = "applicable" if _is_mm1(params) else "extrapolated"
        notes = {"psi": mm1_psi(rho),
                 "printed_radicand": "-2*(1-rho) + (1+rho)*log(rho)",
                 "used_radicand": "(1+rho)*log(1/rho) - 2*(1-rho)"}
    elif name == "KyprianouComparator":
        coef = kyprianou_comparator_exponent(rho, lam_s)
        vals = [coef * math.sqrt(x) for x in grid]
        kind = "exponent"
        applicability = "applicable" if _is_mm1(params) else "extrapolated"
        notes = {"sqrt_coefficient": coef,
                 "constant_prefactor": "unspecified (exponent only)"}
    elif name == "CriticalSlope":
        vals = [x ** critical_slope() for x in grid]
        kind = "shape"
        applicability = ("applicable" if params.rho == 1.0 and _is_mm1(params)
                         else "extrapolated")
        notes = {"slope": critical_slope(),
                 "constant_prefactor": "unspecified (shape only)"}
    else:
        raise DomainError(f"unknown curve name {name!r}; known: {CURVE_NAMES}")

    vals = np.asarray(vals, dtype=np.float64)
    if kind == "probability":
        meta["clamped_points"] = int(np.sum(vals >= 1.0))
    meta.update(notes)
    return AsymptoticCurve(name=display, kind=kind,
                           params_digest=params.digest(), grid=grid,
                           values=vals, applicability=applicability,
                           metadata=meta)
