"""Parametric families for interarrival and service times.

Every family supports exact sampling, the survival function, the mean, the
moment generating function (returning ``math.inf`` where it diverges),
exponential tilting where a closed-form tilted law exists, and a coarse
tail classification.

Sampling draws uniforms from the passed generator with ``rng.random()`` and
maps them through closed-form transforms, so each variate consumes a fixed
number of uniforms (see ``uniforms_per_draw``).  The fast simulation kernel
replicates these transforms operation for operation; a given seed therefore
produces identical cycles in the reference engine and the kernel.
"""

import math
from dataclasses import dataclass

from scipy import integrate, special

from .errors import TiltOutOfDomain
from .rngstream import RandomStream

_TWO_PI = 2.0 * math.pi
_SQRT2 = math.sqrt(2.0)

LIGHT = "light"
REGULARLY_VARYING = "regularly-varying"
SUBEXPONENTIAL_OTHER = "subexponential-other"


@dataclass(frozen=True)
class TailClass:
    """Coarse tail class: light, regularly varying (with index), or other
    subexponential (lognormal-type / stretched-exponential)."""

    tag: str
    alpha: float | None = None

    @property
    def is_light(self) -> bool:
        return self.tag == LIGHT

    @property
    def is_subexponential(self) -> bool:
        return self.tag in (REGULARLY_VARYING, SUBEXPONENTIAL_OTHER)


# Family codes shared with the numba kernel.
CODE_EXPONENTIAL = 0
CODE_PARETO = 1
CODE_LOGNORMAL = 2
CODE_WEIBULL = 3
CODE_DETERMINISTIC = 4
CODE_ERLANG = 5


class DistributionSpec:
    """Immutable parametric law of a positive random variable."""

    family: str = ""

    # -- sampling ---------------------------------------------------------

    def sample(self, rng: RandomStream) -> float:
        raise NotImplementedError

    def uniforms_per_draw(self) -> int:
        raise NotImplementedError

    # -- analysis ---------------------------------------------------------

    def survival(self, t: float) -> float:
        """P(X > t), exact."""
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def mgf(self, s: float) -> float:
        """E[exp(sX)]; ``math.inf`` where the integral diverges."""
        raise NotImplementedError

    def mgf_domain_sup(self) -> float:
        """Supremum of the set {s : mgf(s) < inf}."""
        raise NotImplementedError

    def tilt(self, gamma: float) -> "DistributionSpec":
        """Exponentially tilted law (density reweighted by exp(gamma*x)/mgf(gamma)).

        Closed forms exist for the exponential, Erlang and deterministic
        families; other families raise TiltOutOfDomain.
        """
        raise NotImplementedError

    def tail_class(self) -> TailClass:
        raise NotImplementedError

    # -- plumbing ---------------------------------------------------------

    def to_config(self) -> dict:
        raise NotImplementedError

    def kernel_code(self) -> tuple[int, float, float]:
        """(family code, p1, p2) triple understood by the simulation kernel."""
        raise NotImplementedError

    def _numeric_mgf(self, s: float) -> float:
        """E[exp(s X)] by quadrature over the quantile transform (s <= 0 only)."""
        val, _ = integrate.quad(lambda u: math.exp(s * self._quantile(u)), 0.0, 1.0,
                                limit=200)
        return val

    def _quantile(self, u: float) -> float:
        raise NotImplementedError


def _require_positive(name: str, value: float) -> None:
    if not (value > 0.0) or not math.isfinite(value):
        raise ValueError(f"{name} must be strictly positive and finite, got {value}")


@dataclass(frozen=True)
class Exponential(DistributionSpec):
    rate: float
    family = "exponential"

    def __post_init__(self):
        _require_positive("rate", self.rate)

    def sample(self, rng):
        return -math.log1p(-rng.random()) / self.rate

    def uniforms_per_draw(self):
        return 1

    def survival(self, t):
        return math.exp(-self.rate * t) if t > 0.0 else 1.0

    def mean(self):
        return 1.0 / self.rate

    def mgf(self, s):
        if s >= self.rate:
            return math.inf
        return self.rate / (self.rate - s)

    def mgf_domain_sup(self):
        return self.rate

    def tilt(self, gamma):
        if gamma == 0.0:
            return self
        if gamma >= self.rate:
            raise TiltOutOfDomain(
                f"tilt {gamma} >= rate {self.rate}: mgf infinite")
        return Exponential(self.rate - gamma)

    def tail_class(self):
        return TailClass(LIGHT)

    def to_config(self):
        return {"family": "exponential", "rate": self.rate}

    def kernel_code(self):
        return (CODE_EXPONENTIAL, self.rate, 0.0)

    def _quantile(self, u):
        return -math.log1p(-u) / self.rate


@dataclass(frozen=True)
class Pareto(DistributionSpec):
    """Pure Pareto tail: survival (scale/t)**alpha for t >= scale.

    alpha > 1 is required so the mean (and hence rho) is finite.
    """

    alpha: float
    scale: float
    family = "pareto"

    def __post_init__(self):
        _require_positive("scale", self.scale)
        if not (self.alpha > 1.0):
            raise ValueError(f"pareto alpha must exceed 1, got {self.alpha}")

    def sample(self, rng):
        return self.scale * (1.0 - rng.random()) ** (-1.0 / self.alpha)

    def uniforms_per_draw(self):
        return 1

    def survival(self, t):
        if t <= self.scale:
            return 1.0
        return (self.scale / t) ** self.alpha

    def mean(self):
        return self.alpha * self.scale / (self.alpha - 1.0)

    def mgf(self, s):
        if s > 0.0:
            return math.inf
        if s == 0.0:
            return 1.0
        return self._numeric_mgf(s)

    def mgf_domain_sup(self):
        return 0.0

    def tilt(self, gamma):
        if gamma == 0.0:
            return self
        raise TiltOutOfDomain("pareto law has no finite mgf for positive tilt")

    def tail_class(self):
        return TailClass(REGULARLY_VARYING, alpha=self.alpha)

    def to_config(self):
        return {"family": "pareto", "alpha": self.alpha, "scale": self.scale}

    def kernel_code(self):
        return (CODE_PARETO, self.alpha, self.scale)

    def _quantile(self, u):
        return self.scale * (1.0 - u) ** (-1.0 / self.alpha)


@dataclass(frozen=True)
class Lognormal(DistributionSpec):
    mu: float
    sigma: float
    family = "lognormal"

    def __post_init__(self):
        _require_positive("sigma", self.sigma)
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")

    def sample(self, rng):
        # Box-Muller (cosine branch): two uniforms per variate, always.
        u1 = rng.random()
        u2 = rng.random()
        z = math.sqrt(-2.0 * math.log1p(-u1)) * math.cos(_TWO_PI * u2)
        return math.exp(self.mu + self.sigma * z)

    def uniforms_per_draw(self):
        return 2

    def survival(self, t):
        if t <= 0.0:
            return 1.0
        return 0.5 * math.erfc((math.log(t) - self.mu) / (self.sigma * _SQRT2))

    def mean(self):
        return math.exp(self.mu + 0.5 * self.sigma * self.sigma)

    def mgf(self, s):
        if s > 0.0:
            return math.inf
        if s == 0.0:
            return 1.0
        return self._numeric_mgf(s)

    def mgf_domain_sup(self):
        return 0.0

    def tilt(self, gamma):
        if gamma == 0.0:
            return self
        raise TiltOutOfDomain("lognormal law has no finite mgf for positive tilt")

    def tail_class(self):
        return TailClass(SUBEXPONENTIAL_OTHER)

    def to_config(self):
        return {"family": "lognormal", "mu": self.mu, "sigma": self.sigma}

    def kernel_code(self):
        return (CODE_LOGNORMAL, self.mu, self.sigma)

    def _quantile(self, u):
        return math.exp(self.mu + self.sigma * special.ndtri(u))


@dataclass(frozen=True)
class Weibull(DistributionSpec):
    shape: float
    scale: float
    family = "weibull"

    def __post_init__(self):
        _require_positive("shape", self.shape)
        _require_positive("scale", self.scale)

    def sample(self, rng):
        return self.scale * (-math.log1p(-rng.random())) ** (1.0 / self.shape)

    def uniforms_per_draw(self):
        return 1

    def survival(self, t):
        if t <= 0.0:
            return 1.0
        return math.exp(-((t / self.scale) ** self.shape))

    def mean(self):
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)

    def mgf(self, s):
        if s == 0.0:
            return 1.0
        if s > 0.0:
            if self.shape < 1.0:
                return math.inf
            if self.shape == 1.0:
                rate = 1.0 / self.scale
                return math.inf if s >= rate else rate / (rate - s)
            # shape > 1: tail lighter than exponential, finite for all s
        return self._numeric_mgf_any(s)

    def mgf_domain_sup(self):
        if self.shape < 1.0:
            return 0.0
        if self.shape == 1.0:
            return 1.0 / self.scale
        return math.inf

    def tilt(self, gamma):
        if gamma == 0.0:
            return self
        raise TiltOutOfDomain(
            "weibull tilt has no closed form (and no finite mgf for shape < 1)")

    def tail_class(self):
        if self.shape < 1.0:
            return TailClass(SUBEXPONENTIAL_OTHER)
        return TailClass(LIGHT)

    def to_config(self):
        return {"family": "weibull", "shape": self.shape, "scale": self.scale}

    def kernel_code(self):
        return (CODE_WEIBULL, self.shape, self.scale)

    def _quantile(self, u):
        return self.scale * (-math.log1p(-u)) ** (1.0 / self.shape)

    def _numeric_mgf_any(self, s):
        val, _ = integrate.quad(lambda u: math.exp(s * self._quantile(u)),
                                0.0, 1.0, limit=200)
        return val


@dataclass(frozen=True)
class Deterministic(DistributionSpec):
    value: float
    family = "deterministic"

    def __post_init__(self):
        _require_positive("value", self.value)

    def sample(self, rng):
        return self.value

    def uniforms_per_draw(self):
        return 0

    def survival(self, t):
        return 1.0 if t < self.value else 0.0

    def mean(self):
        return self.value

    def mgf(self, s):
        try:
            return math.exp(s * self.value)
        except OverflowError:
            return math.inf

    def mgf_domain_sup(self):
        return math.inf

    def tilt(self, gamma):
        # exp(g*x) reweighting of a point mass is the same point mass
        return self

    def tail_class(self):
        return TailClass(LIGHT)

    def to_config(self):
        return {"family": "deterministic", "value": self.value}

    def kernel_code(self):
        return (CODE_DETERMINISTIC, self.value, 0.0)

    def _quantile(self, u):
        return self.value


@dataclass(frozen=True)
class Erlang(DistributionSpec):
    shape: int
    rate: float
    family = "erlang"

    def __post_init__(self):
        if not isinstance(self.shape, int) or self.shape < 1:
            raise ValueError(f"erlang shape must be a positive integer, got {self.shape}")
        _require_positive("rate", self.rate)

    def sample(self, rng):
        acc = 0.0
        for _ in range(self.shape):
            acc += math.log1p(-rng.random())
        return -acc / self.rate

    def uniforms_per_draw(self):
        return self.shape

    def survival(self, t):
        if t <= 0.0:
            return 1.0
        x = self.rate * t
        term = math.exp(-x)
        total = term
        for j in range(1, self.shape):
            term *= x / j
            total += term
        return min(total, 1.0)

    def mean(self):
        return self.shape / self.rate

    def mgf(self, s):
        if s >= self.rate:
            return math.inf
        try:
            return (self.rate / (self.rate - s)) ** self.shape
        except OverflowError:
            return math.inf

    def mgf_domain_sup(self):
        return self.rate

    def tilt(self, gamma):
        if gamma == 0.0:
            return self
        if gamma >= self.rate:
            raise TiltOutOfDomain(
                f"tilt {gamma} >= rate {self.rate}: mgf infinite")
        return Erlang(self.shape, self.rate - gamma)

    def tail_class(self):
        return TailClass(LIGHT)

    def to_config(self):
        return {"family": "erlang", "shape": self.shape, "rate": self.rate}

    def kernel_code(self):
        return (CODE_ERLANG, float(self.shape), self.rate)

    def _quantile(self, u):
        raise NotImplementedError("erlang quantile not needed")


_FAMILIES = {
    "exponential": (Exponential, ("rate",)),
    "pareto": (Pareto, ("alpha", "scale")),
    "lognormal": (Lognormal, ("mu", "sigma")),
    "weibull": (Weibull, ("shape", "scale")),
    "deterministic": (Deterministic, ("value",)),
    "erlang": (Erlang, ("shape", "rate")),
}


def from_config(cfg: dict) -> DistributionSpec:
    """Build a spec from its config form, e.g. {"family": "pareto", "alpha": 2.5, "scale": 0.6}."""
    if "family" not in cfg:
        raise ValueError("distribution config needs a 'family' key")
    family = cfg["family"]
    if family not in _FAMILIES:
        raise ValueError(f"unknown family {family!r}; known: {sorted(_FAMILIES)}")
    cls, fields = _FAMILIES[family]
    missing = [f for f in fields if f not in cfg]
    if missing:
        raise ValueError(f"{family} config missing fields {missing}")
    extra = [k for k in cfg if k not in fields and k != "family"]
    if extra:
        raise ValueError(f"{family} config has unknown fields {extra}")
    kwargs = {f: cfg[f] for f in fields}
    if family == "erlang":
        kwargs["shape"] = int(kwargs["shape"])
    return cls(**kwargs)


# Functional, free-standing views of the per-spec operations.

def sample(spec: DistributionSpec, rng: RandomStream) -> float:
    return spec.sample(rng)


def survival(spec: DistributionSpec, t: float) -> float:
    return spec.survival(t)


def mean(spec: DistributionSpec) -> float:
    return spec.mean()


def mgf(spec: DistributionSpec, s: float) -> float:
    return spec.mgf(s)


def tilt(spec: DistributionSpec, gamma: float) -> DistributionSpec:
    return spec.tilt(gamma)


def classify_tail(spec: DistributionSpec) -> TailClass:
    return spec.tail_class()
