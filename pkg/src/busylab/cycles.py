"""Exact event-driven simulation of single GI/GI/1 busy cycles.

A cycle starts with one arrival at an empty system at time 0 and ends the
first time the workload drains to zero, which happens at the first n with
``sum(S_1..S_n) <= sum(T_1..T_n)`` (ties end the cycle).  Within the cycle
the server never idles, so the j-th departure occurs exactly at the j-th
partial sum of service times; every recorded area is an exact piecewise
integral, not a discretisation.

Caps truncate runaway cycles (critical and transient regimes).  A censored
record is the exact record of the *input-truncated* cycle: arrivals stop at
the censor step and the remaining workload drains out.  Since removing
future arrivals can only lower the path, every censored field is an exact
lower bound of its uncensored value.

Randomness is consumed in a fixed order (service, then interarrival, per
customer), each variate using a fixed number of uniforms, so the fast kernel
in :mod:`busylab._kernel` reproduces these cycles bit for bit.
"""

import hashlib
import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import distributions as dist
from .errors import ConfigError
from .rngstream import RandomStream
from .segments import (gauss_jacobi_rule, integrate_queue_segment,
                       integrate_workload_segment, _workload_theta)

TARGET_QUEUE = "Q"
TARGET_WORKLOAD = "W"

_UNBOUNDED_CUSTOMERS = 1 << 62


@dataclass(frozen=True)
class FunctionalSpec:
    """Area functional: integral of exp(-theta*t) * X(t)**k dt over the cycle,
    with X the queue length (target "Q") or workload (target "W")."""

    target: str
    k: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        if self.target not in (TARGET_QUEUE, TARGET_WORKLOAD):
            raise ValueError(f"target must be 'Q' or 'W', got {self.target!r}")
        if not (self.k >= 0.0):
            raise ValueError(f"power k must be >= 0, got {self.k}")
        if not (self.theta >= 0.0):
            raise ValueError(f"discount theta must be >= 0, got {self.theta}")

    @property
    def label(self) -> str:
        base = f"area_{self.target.lower()}"
        if self.k != 1.0:
            base += f"_k{self.k:g}"
        if self.theta != 0.0:
            base += f"_th{self.theta:g}"
        return base

    def to_config(self) -> dict:
        return {"target": self.target, "k": self.k, "theta": self.theta}

    @staticmethod
    def from_config(cfg: dict) -> "FunctionalSpec":
        return FunctionalSpec(cfg["target"], float(cfg.get("k", 1.0)),
                              float(cfg.get("theta", 0.0)))


PLAIN_WORKLOAD_AREA = FunctionalSpec(TARGET_WORKLOAD)
PLAIN_QUEUE_AREA = FunctionalSpec(TARGET_QUEUE)


@dataclass(frozen=True)
class CycleCaps:
    """Safety caps; None means unbounded.  early_stop_threshold censors a
    cycle once every requested functional area already exceeds that level
    (the record then carries exact lower bounds)."""

    max_customers: int | None = None
    max_time: float | None = None
    early_stop_threshold: float | None = None

    @property
    def bounded(self) -> bool:
        return (self.max_customers is not None or self.max_time is not None
                or self.early_stop_threshold is not None)

    def customer_limit(self) -> int:
        return self.max_customers if self.max_customers is not None else _UNBOUNDED_CUSTOMERS

    def time_limit(self) -> float:
        return self.max_time if self.max_time is not None else math.inf

    def to_config(self) -> dict:
        return {"max_customers": self.max_customers, "max_time": self.max_time,
                "early_stop_threshold": self.early_stop_threshold}

    @staticmethod
    def from_config(cfg: dict) -> "CycleCaps":
        mc = cfg.get("max_customers")
        return CycleCaps(int(mc) if mc is not None else None,
                         cfg.get("max_time"), cfg.get("early_stop_threshold"))


@dataclass(frozen=True)
class QueueParams:
    """GI/GI/1 input: interarrival and service laws plus requested functionals."""

    interarrival: dist.DistributionSpec
    service: dist.DistributionSpec
    functionals: tuple[FunctionalSpec, ...] = (PLAIN_WORKLOAD_AREA, PLAIN_QUEUE_AREA)
    caps: CycleCaps = field(default_factory=CycleCaps)

    def __post_init__(self):
        violations = self.validate()
        if violations:
            raise ConfigError(violations)

    def validate(self) -> list[str]:
        violations = []
        if len(set(self.functionals)) != len(self.functionals):
            violations.append("functionals: duplicate FunctionalSpec entries")
        if self.rho >= 1.0 and not self.caps.bounded:
            violations.append(
                f"CycleCaps: rho = {self.rho:.6g} >= 1 (critical/transient regime) "
                "requires a finite max_customers, max_time or early_stop_threshold")
        return violations

    @property
    def lambda_T(self) -> float:
        return 1.0 / self.interarrival.mean()

    @property
    def lambda_S(self) -> float:
        return 1.0 / self.service.mean()

    @property
    def rho(self) -> float:
        return self.lambda_T / self.lambda_S

    @property
    def regime(self) -> str:
        if self.rho < 1.0:
            return "stable"
        return "critical" if self.rho == 1.0 else "transient"

    def to_config(self) -> dict:
        return {
            "interarrival": self.interarrival.to_config(),
            "service": self.service.to_config(),
            "functionals": [f.to_config() for f in self.functionals],
            "caps": self.caps.to_config(),
        }

    @staticmethod
    def from_config(cfg: dict) -> "QueueParams":
        functionals = tuple(FunctionalSpec.from_config(f)
                            for f in cfg.get("functionals", []))
        if not functionals:
            functionals = (PLAIN_WORKLOAD_AREA, PLAIN_QUEUE_AREA)
        return QueueParams(dist.from_config(cfg["interarrival"]),
                           dist.from_config(cfg["service"]),
                           functionals,
                           CycleCaps.from_config(cfg.get("caps", {})))

    def digest(self) -> str:
        """Short stable digest of the queue input (used to pair estimates with curves)."""
        blob = json.dumps(self.to_config(), sort_keys=True)
        return hashlib.sha1(blob.encode()).hexdigest()[:12]


@dataclass
class PathTrace:
    """Right-limits of (t, Q, W) at every event epoch, ending at the cycle end."""

    times: np.ndarray
    queue: np.ndarray
    workload: np.ndarray

    def queue_at(self, t):
        """Piecewise-constant reconstruction of Q at times t (scalar or array)."""
        idx = np.searchsorted(self.times, t, side="right") - 1
        idx = np.clip(idx, 0, len(self.times) - 1)
        return self.queue[idx]


@dataclass
class CycleRecord:
    tau: float
    n_customers: int
    max_queue: int
    max_workload: float
    areas: dict
    sojourn_sum: float
    weight: float = 1.0
    censored: bool = False
    path: PathTrace | None = None

    def area(self, func: FunctionalSpec) -> float:
        return self.areas[func]


class _FuncTable:
    """Per-run preprocessed functional list (plus Gauss-Jacobi tables)."""

    def __init__(self, functionals):
        self.specs = tuple(functionals)
        self.n = len(self.specs)
        self.is_w = np.array([f.target == TARGET_WORKLOAD for f in self.specs],
                             dtype=np.bool_)
        self.k = np.array([f.k for f in self.specs], dtype=np.float64)
        self.theta = np.array([f.theta for f in self.specs], dtype=np.float64)
        self.gjx = np.zeros((self.n, 16))
        self.gjw = np.zeros((self.n, 16))
        for j, f in enumerate(self.specs):
            if f.theta > 0.0 and f.k > 0.0 and f.target == TARGET_WORKLOAD:
                x, w = gauss_jacobi_rule(f.k)
                self.gjx[j] = x
                self.gjw[j] = w

    def as_dict(self, values) -> dict:
        return {spec: float(v) for spec, v in zip(self.specs, values)}


class _StopRule:
    """Early-stop levels: censor once tau's lower bound exceeds tau_level and
    every functional area exceeds its level.  Used for threshold-decided
    (importance-sampling) runs; plain caps map to a uniform level."""

    def __init__(self, tau_level: float, area_levels):
        self.tau_level = tau_level
        self.area_levels = np.asarray(area_levels, dtype=np.float64)

    @staticmethod
    def from_caps(caps: CycleCaps, n_functionals: int):
        if caps.early_stop_threshold is None:
            return None
        return _StopRule(-math.inf,
                         np.full(n_functionals, caps.early_stop_threshold))


def _seg_w(w0, delta, k, theta, t0, gjx, gjw):
    """Workload segment integral with preresolved Gauss-Jacobi tables."""
    if delta == 0.0:
        return 0.0
    if theta == 0.0:
        if k == 1.0:
            return delta * (w0 - 0.5 * delta)
        if k == 0.0:
            return delta
        if k == 2.0:
            return delta * (w0 * w0 - w0 * delta + delta * delta / 3.0)
        if delta == w0:
            return w0 ** (k + 1.0) / (k + 1.0)
        return w0 ** (k + 1.0) * (-math.expm1((k + 1.0) * math.log1p(-delta / w0))) / (k + 1.0)
    if k == 0.0:
        return math.exp(-theta * t0) * (-math.expm1(-theta * delta)) / theta
    return _workload_theta(w0, delta, k, theta, t0, gjx, gjw)


def _seg_q(q, delta, k, theta, t0):
    """Queue segment integral (piecewise-constant integrand)."""
    if delta <= 0.0:
        return 0.0
    if q == 0:
        qk = 1.0 if k == 0.0 else 0.0
    elif k == 1.0:
        qk = float(q)
    elif k == 0.0:
        qk = 1.0
    else:
        qk = float(q) ** k
    if qk == 0.0:
        return 0.0
    if theta == 0.0:
        return qk * delta
    return qk * math.exp(-theta * t0) * (-math.expm1(-theta * delta)) / theta


def _sweep(next_s, next_t, table: _FuncTable, caps: CycleCaps,
           weight_gamma: float = 0.0, weight_lognorm: float = 0.0,
           stop_rule: _StopRule | None = None,
           capture_path: bool = False, end_time: float | None = None) -> CycleRecord:
    """Run one cycle, drawing variates from the two callables.

    ``weight_gamma``/``weight_lognorm`` attach the change-of-measure weight
    exp(-gamma * (sum S - sum T) + n * lognorm), where lognorm is
    log(mgf_S(gamma) * mgf_T(-gamma)) of the *plain* laws (zero at the tilt
    root).  ``end_time`` truncates the integration window (used for the
    joint busy period of parallel servers); the caller must guarantee the
    drawn sequences cover [0, end_time].
    """
    max_customers = caps.customer_limit()
    max_time = caps.time_limit()
    nf = table.n
    areas = [0.0] * nf
    backlog = deque()
    n = 0
    cum_s = 0.0
    cum_t = 0.0
    t_now = 0.0
    q = 0
    soj = 0.0
    max_q = 0
    max_w = 0.0
    censored = False
    tau = 0.0
    pt, pq, pw = ([], [], []) if capture_path else (None, None, None)

    def add_segments(t0, t1):
        delta = t1 - t0
        if delta <= 0.0:
            return
        w0 = cum_s - t0
        for j in range(nf):
            if table.is_w[j]:
                areas[j] += _seg_w(w0, delta, table.k[j], table.theta[j], t0,
                                   table.gjx[j], table.gjw[j])
            else:
                areas[j] += _seg_q(q, delta, table.k[j], table.theta[j], t0)

    def drain_out(drain_end):
        """No further arrivals: drain the backlog, integrating up to drain_end."""
        nonlocal q, t_now
        while backlog and backlog[0] <= drain_end:
            d = backlog.popleft()
            add_segments(t_now, d)
            q -= 1
            t_now = d
            if capture_path:
                pt.append(d)
                pq.append(q)
                pw.append(cum_s - d)
        if t_now < drain_end:
            add_segments(t_now, drain_end)
            t_now = drain_end
            if capture_path:
                pt.append(drain_end)
                pq.append(q)
                pw.append(cum_s - drain_end)

    while True:
        try:
            s = next_s()
        except StopIteration:
            # replayed input exhausted before the cycle ended: censor
            if n == 0:
                raise ValueError("empty variate sequence") from None
            censored = True
            tau = cum_s if end_time is None else min(cum_s, end_time)
            drain_out(tau)
            break
        n += 1
        a_n = t_now
        cum_s += s
        q += 1
        w_after = cum_s - a_n
        soj += w_after  # sojourn of customer n: D_n - A_n
        if q > max_q:
            max_q = q
        if w_after > max_w:
            max_w = w_after
        backlog.append(cum_s)
        if capture_path:
            pt.append(a_n)
            pq.append(q)
            pw.append(w_after)
        try:
            t = next_t()
        except StopIteration:
            raise ValueError("interarrival sequence shorter than service sequence") from None
        cum_t += t
        next_arrival = cum_t
        ended = cum_s <= next_arrival
        seg_end = cum_s if ended else next_arrival
        cut = end_time is not None and seg_end >= end_time
        if cut:
            seg_end = end_time
        while backlog and backlog[0] <= seg_end:
            d = backlog.popleft()
            add_segments(t_now, d)
            q -= 1
            t_now = d
            if capture_path:
                pt.append(d)
                pq.append(q)
                pw.append(cum_s - d)
        if t_now < seg_end:
            add_segments(t_now, seg_end)
            t_now = seg_end
        if ended or cut:
            tau = end_time if cut else cum_s
            if cut and not ended and capture_path:
                pt.append(tau)
                pq.append(q)
                pw.append(cum_s - tau)
            break
        hit_cap = n >= max_customers or cum_s >= max_time
        if not hit_cap and stop_rule is not None and cum_s > stop_rule.tau_level:
            hit_cap = True
            for j in range(nf):
                if not areas[j] > stop_rule.area_levels[j]:
                    hit_cap = False
                    break
        if hit_cap:
            censored = True
            tau = cum_s if end_time is None else min(cum_s, end_time)
            drain_out(tau)
            break

    weight = 1.0
    if weight_gamma != 0.0 or weight_lognorm != 0.0:
        weight = math.exp(-weight_gamma * (cum_s - cum_t) + n * weight_lognorm)
    path = None
    if capture_path:
        path = PathTrace(np.array(pt), np.array(pq, dtype=np.int64), np.array(pw))
    return CycleRecord(tau=tau, n_customers=n, max_queue=max_q,
                       max_workload=max_w, areas=table.as_dict(areas),
                       sojourn_sum=soj, weight=weight, censored=censored,
                       path=path)


def simulate_cycle(params: QueueParams, rng: RandomStream, *,
                   capture_path: bool = False, weight_gamma: float = 0.0,
                   weight_lognorm: float = 0.0,
                   stop_rule: _StopRule | None = None) -> CycleRecord:
    """Simulate one busy cycle with exact areas for every requested functional."""
    table = _FuncTable(params.functionals)
    if stop_rule is None:
        stop_rule = _StopRule.from_caps(params.caps, table.n)
    return _sweep(lambda: params.service.sample(rng),
                  lambda: params.interarrival.sample(rng),
                  table, params.caps, weight_gamma=weight_gamma,
                  weight_lognorm=weight_lognorm,
                  stop_rule=stop_rule, capture_path=capture_path)


def cycle_from_draws(service_times, interarrival_times, params: QueueParams, *,
                     capture_path: bool = False,
                     end_time: float | None = None) -> CycleRecord:
    """Replay a cycle from explicit variate sequences (deterministic)."""
    s_it = iter([float(x) for x in service_times])
    t_it = iter([float(x) for x in interarrival_times])
    table = _FuncTable(params.functionals)
    return _sweep(lambda: next(s_it), lambda: next(t_it), table, params.caps,
                  stop_rule=_StopRule.from_caps(params.caps, table.n),
                  capture_path=capture_path, end_time=end_time)


def simulate_bivariate_cycle(params: QueueParams, b: float, rng: RandomStream, *,
                             capture_path: bool = False
                             ) -> tuple[CycleRecord, CycleRecord]:
    """Two parallel servers fed by shared arrivals, with services S1 = b * S2.

    ``params.service`` is the law of S2.  The joint busy period is the
    minimum of the two busy periods; both records integrate exactly on
    [0, tau_min].  The smaller-service server always drains first, so the
    walk of that server decides tau_min.
    """
    if not (b > 0.0):
        raise ValueError(f"proportion b must be > 0, got {b}")
    s2_list = []
    t_list = []
    max_customers = params.caps.customer_limit()
    max_time = params.caps.time_limit()
    scale_min = min(1.0, b)  # service scale of the faster-draining server
    cum_small = 0.0
    cum_t = 0.0
    censored = False
    while True:
        s2 = params.service.sample(rng)
        t = params.interarrival.sample(rng)
        s2_list.append(s2)
        t_list.append(t)
        cum_small += scale_min * s2
        cum_t += t
        if cum_small <= cum_t:
            break
        if len(s2_list) >= max_customers or cum_small >= max_time:
            censored = True
            break
    tau_min = cum_small
    s1_list = [b * s for s in s2_list]
    rec1 = cycle_from_draws(s1_list, t_list, params, capture_path=capture_path,
                            end_time=tau_min)
    rec2 = cycle_from_draws(s2_list, t_list, params, capture_path=capture_path,
                            end_time=tau_min)
    rec1.censored = rec1.censored or censored
    rec2.censored = rec2.censored or censored
    return rec1, rec2


def risk_negative_part_integral(v: float, c: float, claim_rate: float,
                                claim: dist.DistributionSpec, horizon: float,
                                rng: RandomStream) -> float:
    """Integrated negative part of the classical risk path over [0, horizon].

    The path is S(t) = v + c*t - sum of claims arrived by t, with Poisson
    claim arrivals; the result is the exact piecewise-linear integral of
    S(t) * 1{S(t) < 0}, hence <= 0.
    """
    if not (horizon > 0.0):
        raise ValueError("horizon must be > 0")
    if not (c > 0.0) or not (claim_rate > 0.0):
        raise ValueError("premium rate c and claim_rate must be > 0")
    gap = dist.Exponential(claim_rate)
    t = 0.0
    y = float(v)
    total = 0.0
    while t < horizon:
        nxt = t + gap.sample(rng)
        seg = min(nxt, horizon) - t
        if y < 0.0:
            # linear rise from y; negative until it crosses zero
            reach = min(seg, -y / c)
            total += y * reach + 0.5 * c * reach * reach
        y += c * seg
        t += seg
        if nxt >= horizon:
            break
        y -= claim.sample(rng)
    return total


# re-exported for callers assembling functional areas by hand
__all__ = [
    "FunctionalSpec", "CycleCaps", "QueueParams", "CycleRecord", "PathTrace",
    "PLAIN_WORKLOAD_AREA", "PLAIN_QUEUE_AREA",
    "simulate_cycle", "cycle_from_draws", "simulate_bivariate_cycle",
    "risk_negative_part_integral",
    "integrate_workload_segment", "integrate_queue_segment",
]
