"""Deterministic chunked generation of cycle samples.

A run of n cycles is split into fixed chunks of 65536; chunk j always uses
the substream ``substream(master_seed, j)`` regardless of how many workers
process the chunks, so merged results depend only on (params, n, seed).
Within a chunk, cycles run sequentially on the chunk's generator.

The numba kernel is used whenever it is importable and paths are not being
captured; the pure-Python engine is the fallback and the reference.  The two
are bit-identical for a given seed (tested), so the engine choice never
changes the values.
"""

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cycles import (CycleRecord, FunctionalSpec, PathTrace, QueueParams,
                     _FuncTable, _StopRule, simulate_cycle)
from .rngstream import substream

log = logging.getLogger("busylab")

CHUNK_SIZE = 1 << 16

try:
    from . import _kernel
    HAVE_KERNEL = True
except ImportError:  # pragma: no cover - numba not installed
    _kernel = None
    HAVE_KERNEL = False

QUANTITIES = ("tau", "n", "max_queue", "max_workload", "sojourn")


@dataclass
class CycleSample:
    """Column-oriented sample of cycle records."""

    params: QueueParams
    master_seed: int
    tau: np.ndarray
    n_customers: np.ndarray
    max_queue: np.ndarray
    max_workload: np.ndarray
    sojourn_sum: np.ndarray
    weight: np.ndarray
    censored: np.ndarray
    areas: np.ndarray          # shape (n, n_functionals), params.functionals order
    paths: list | None = None
    engine: str = "kernel"

    def __len__(self) -> int:
        return len(self.tau)

    @property
    def functionals(self) -> tuple[FunctionalSpec, ...]:
        return self.params.functionals

    def area(self, func: FunctionalSpec) -> np.ndarray:
        try:
            j = self.params.functionals.index(func)
        except ValueError:
            raise KeyError(f"functional {func} not in sample") from None
        return self.areas[:, j]

    def quantity(self, which) -> np.ndarray:
        """Column by name ("tau", "n", "max_queue", "max_workload", "sojourn")
        or by FunctionalSpec."""
        if isinstance(which, FunctionalSpec):
            return self.area(which)
        if which == "tau":
            return self.tau
        if which == "n":
            return self.n_customers
        if which == "max_queue":
            return self.max_queue
        if which == "max_workload":
            return self.max_workload
        if which == "sojourn":
            return self.sojourn_sum
        raise KeyError(f"unknown quantity {which!r}")

    def record(self, i: int) -> CycleRecord:
        areas = {f: float(self.areas[i, j])
                 for j, f in enumerate(self.params.functionals)}
        return CycleRecord(
            tau=float(self.tau[i]), n_customers=int(self.n_customers[i]),
            max_queue=int(self.max_queue[i]),
            max_workload=float(self.max_workload[i]), areas=areas,
            sojourn_sum=float(self.sojourn_sum[i]),
            weight=float(self.weight[i]), censored=bool(self.censored[i]),
            path=self.paths[i] if self.paths is not None else None)

    def write_cycle_csv(self, path) -> None:
        """Per-cycle dump: cycle_id, tau, n, max_q, max_w, censored, weight,
        then one column per functional label."""
        labels = [f.label for f in self.params.functionals]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["cycle_id", "tau", "n", "max_q", "max_w",
                             "censored", "weight"] + labels)
            for i in range(len(self)):
                row = [i, repr(float(self.tau[i])), int(self.n_customers[i]),
                       int(self.max_queue[i]),
                       repr(float(self.max_workload[i])),
                       int(self.censored[i]), repr(float(self.weight[i]))]
                row += [repr(float(v)) for v in self.areas[i]]
                writer.writerow(row)


def _chunk_sizes(n: int):
    sizes = []
    while n > 0:
        m = min(n, CHUNK_SIZE)
        sizes.append(m)
        n -= m
    return sizes


def _kernel_args(params: QueueParams, table: _FuncTable,
                 stop_rule: _StopRule | None, weight_gamma: float,
                 weight_lognorm: float):
    s_code, s_p1, s_p2 = params.service.kernel_code()
    t_code, t_p1, t_p2 = params.interarrival.kernel_code()
    caps = params.caps
    has_stop = stop_rule is not None
    stop_tau = stop_rule.tau_level if has_stop else math.inf
    stop_levels = (stop_rule.area_levels if has_stop
                   else np.zeros(table.n, dtype=np.float64))
    return (s_code, s_p1, s_p2, t_code, t_p1, t_p2,
            caps.customer_limit(), caps.time_limit(), weight_gamma,
            weight_lognorm, has_stop, stop_tau, stop_levels,
            table.is_w, table.k, table.theta, table.gjx, table.gjw)


def _alloc(m: int, nf: int) -> dict:
    return {
        "tau": np.empty(m), "n": np.empty(m, dtype=np.int64),
        "max_queue": np.empty(m, dtype=np.int64), "max_workload": np.empty(m),
        "sojourn": np.empty(m), "weight": np.empty(m),
        "censored": np.empty(m, dtype=np.bool_),
        "areas": np.empty((m, nf)),
    }


def _run_chunk_kernel(params, table, stop_rule, weight_gamma, weight_lognorm,
                      seed_index, master_seed, m, out=None):
    rng = substream(master_seed, seed_index)
    if out is None:
        out = _alloc(m, table.n)
    args = _kernel_args(params, table, stop_rule, weight_gamma, weight_lognorm)
    _kernel.simulate_chunk(rng, m, *args,
                           out["tau"], out["n"], out["max_queue"],
                           out["max_workload"], out["sojourn"], out["weight"],
                           out["censored"], out["areas"])
    return out

def _run_chunk_python(params, table, stop_rule, weight_gamma, weight_lognorm,
                      seed_index, master_seed, m, capture_paths=False):
    rng = substream(master_seed, seed_index)
    out = _alloc(m, table.n)
    paths = [] if capture_paths else None
    for i in range(m):
        rec = simulate_cycle(params, rng, capture_path=capture_paths,
                             weight_gamma=weight_gamma,
                             weight_lognorm=weight_lognorm, stop_rule=stop_rule)
        out["tau"][i] = rec.tau
        out["n"][i] = rec.n_customers
        out["max_queue"][i] = rec.max_queue
        out["max_workload"][i] = rec.max_workload
        out["sojourn"][i] = rec.sojourn_sum
        out["weight"][i] = rec.weight
        out["censored"][i] = rec.censored
        for j, f in enumerate(table.specs):
            out["areas"][i, j] = rec.areas[f]
        if capture_paths:
            paths.append(rec.path)
    if capture_paths:
        out["paths"] = paths
    return out


def _resolve_engine(engine: str, capture_paths: bool) -> str:
    if engine == "auto":
        return "kernel" if (HAVE_KERNEL and not capture_paths) else "python"
    if engine == "kernel" and not HAVE_KERNEL:
        raise RuntimeError("numba kernel unavailable")
    if engine == "kernel" and capture_paths:
        raise ValueError("path capture requires the python engine")
    return engine


def run_cycles(params: QueueParams, n: int, master_seed: int = 0,
               workers: int = 1, *, capture_paths: bool = False,
               engine: str = "auto", weight_gamma: float = 0.0,
               weight_lognorm: float = 0.0,
               stop_rule: _StopRule | None = None) -> CycleSample:
    """n independent busy cycles; deterministic in (params, n, master_seed).

    The fixed chunk partition makes the result independent of ``workers``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    table = _FuncTable(params.functionals)
    if stop_rule is None:
        stop_rule = _StopRule.from_caps(params.caps, table.n)
    engine = _resolve_engine(engine, capture_paths)
    sizes = _chunk_sizes(n)

    def work(idx_size):
        idx, m = idx_size
        if engine == "kernel":
            return _run_chunk_kernel(params, table, stop_rule, weight_gamma,
                                     weight_lognorm, idx, master_seed, m)
        return _run_chunk_python(params, table, stop_rule, weight_gamma,
                                 weight_lognorm, idx, master_seed, m,
                                 capture_paths=capture_paths)

    jobs = list(enumerate(sizes))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(work, jobs))
    else:
        chunks = [work(j) for j in jobs]

    sample = CycleSample(
        params=params, master_seed=master_seed,
        tau=np.concatenate([c["tau"] for c in chunks]),
        n_customers=np.concatenate([c["n"] for c in chunks]),
        max_queue=np.concatenate([c["max_queue"] for c in chunks]),
        max_workload=np.concatenate([c["max_workload"] for c in chunks]),
        sojourn_sum=np.concatenate([c["sojourn"] for c in chunks]),
        weight=np.concatenate([c["weight"] for c in chunks]),
        censored=np.concatenate([c["censored"] for c in chunks]),
        areas=np.concatenate([c["areas"] for c in chunks], axis=0),
        engine=engine,
    )
    if capture_paths:
        sample.paths = [p for c in chunks for p in c["paths"]]
    return sample


def stream_cycles(params: QueueParams, n: int, master_seed: int = 0,
                  workers: int = 1, *, engine: str = "auto",
                  weight_gamma: float = 0.0, weight_lognorm: float = 0.0,
                  stop_rule: _StopRule | None = None):
    """Yield per-chunk output dicts in chunk order without retaining the run.

    Aggregation over the yielded chunks in order is deterministic in
    (params, n, master_seed) and independent of ``workers``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    table = _FuncTable(params.functionals)
    if stop_rule is None:
        stop_rule = _StopRule.from_caps(params.caps, table.n)
    engine = _resolve_engine(engine, capture_paths=False)
    sizes = _chunk_sizes(n)
    total = len(sizes)

    def work(idx_size):
        idx, m = idx_size
        if engine == "kernel":
            return _run_chunk_kernel(params, table, stop_rule, weight_gamma,
                                     weight_lognorm, idx, master_seed, m)
        return _run_chunk_python(params, table, stop_rule, weight_gamma,
                                 weight_lognorm, idx, master_seed, m)

    jobs = list(enumerate(sizes))
    if workers > 1 and total > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i, chunk in enumerate(pool.map(work, jobs)):
                if total >= 16 and i % max(1, total // 8) == 0:
                    log.info("chunk %d/%d", i + 1, total)
                yield chunk
    else:
        for i, job in enumerate(jobs):
            if total >= 16 and i % max(1, total // 8) == 0:
                log.info("chunk %d/%d", i + 1, total)
            yield work(job)
