"""busylab: Monte Carlo laboratory for busy-cycle area functionals of GI/GI/1 queues."""

__version__ = "0.1.0"

from . import asymptotics, distributions, estimation, experiments
from .cycles import (CycleCaps, CycleRecord, FunctionalSpec, PathTrace,
                     PLAIN_QUEUE_AREA, PLAIN_WORKLOAD_AREA, QueueParams,
                     cycle_from_draws, integrate_queue_segment,
                     integrate_workload_segment, risk_negative_part_integral,
                     simulate_bivariate_cycle, simulate_cycle)
from .batch import CycleSample, run_cycles, stream_cycles
from .distributions import (Deterministic, Erlang, Exponential, Lognormal,
                            Pareto, TailClass, Weibull)
from .rngstream import RandomStream, make_stream, substream

__all__ = [
    "CycleCaps", "CycleRecord", "CycleSample", "Deterministic", "Erlang",
    "Exponential", "FunctionalSpec", "Lognormal", "Pareto", "PathTrace",
    "PLAIN_QUEUE_AREA", "PLAIN_WORKLOAD_AREA", "QueueParams", "RandomStream",
    "TailClass", "Weibull", "asymptotics", "cycle_from_draws", "distributions",
    "estimation", "experiments", "integrate_queue_segment",
    "integrate_workload_segment",
    "make_stream", "risk_negative_part_integral", "run_cycles",
    "simulate_bivariate_cycle", "simulate_cycle", "stream_cycles", "substream",
]
