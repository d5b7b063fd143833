"""Per-cell load generation and Monte Carlo multiplexing gain.

Random streams: cell ``i`` of a run with master seed ``s`` draws from
``PCG64(SeedSequence(s, spawn_key=(i,)))``. Each TTI consumes exactly one
uniform double, so TTI ``t`` of a stream is reached with ``advance(t)`` and
any partition of the TTI range gives the same numbers as one sequential pass.

Percentiles use the nearest-rank definition: the p-th percentile of N
sorted samples is sample number ``ceil(p / 100 * N)`` (1-based).
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .split_calculus import CellConfig, TRANSPORT, peak_rate_dl

MIN_TAIL_SAMPLES = 100


class LoadModel(str, enum.Enum):
    CONSTANT = "constant"
    ON_OFF = "on_off"
    PER_TTI_UNIFORM = "per_tti_uniform"


@dataclass(frozen=True)
class TrafficProfile:
    """Offered-load process of one cell.

    ``constant`` offers ``activity * peak`` every TTI, ``on_off`` offers the
    full peak with probability ``activity`` and nothing otherwise, and
    ``per_tti_uniform`` draws uniformly from [0, peak].
    """

    model: LoadModel = LoadModel.ON_OFF
    activity: float = float(TRANSPORT.mean_rb_utilisation)
    peak_mbps: float = 1.0
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        object.__setattr__(self, "model", LoadModel(self.model))
        if not 0 <= self.activity <= 1:
            raise ValueError(f"activity must lie in [0, 1], got {self.activity}")
        if self.peak_mbps < 0:
            raise ValueError("peak must be non-negative")

    @classmethod
    def for_cell(cls, cell: CellConfig, **kwargs) -> "TrafficProfile":
        return cls(peak_mbps=float(peak_rate_dl(cell)), **kwargs)


def _uniforms(profile: TrafficProfile, start: int, count: int) -> np.ndarray:
    bitgen = np.random.PCG64(np.random.SeedSequence(profile.seed, spawn_key=(profile.stream,)))
    if start:
        bitgen.advance(start)
    return np.random.Generator(bitgen).random(count)


def gen_loads(profile: TrafficProfile, start: int, count: int) -> np.ndarray:
    """Offered load (Mbps) for TTIs ``start .. start + count - 1``."""
    if profile.model is LoadModel.CONSTANT:
        return np.full(count, profile.activity * profile.peak_mbps)
    u = _uniforms(profile, start, count)
    if profile.model is LoadModel.ON_OFF:
        return np.where(u < profile.activity, profile.peak_mbps, 0.0)
    return u * profile.peak_mbps


def gen_load(profile: TrafficProfile, tti_index: int) -> float:
    return float(gen_loads(profile, tti_index, 1)[0])


def nearest_rank(samples, percentile: float) -> float:
    x = np.sort(np.asarray(samples))
    rank = max(1, math.ceil(percentile / 100 * len(x)))
    return float(x[rank - 1])


@dataclass
class MuxReport:
    n_cells: int
    percentile: float
    percentile_demand_mbps: float
    sum_peaks_mbps: float
    mux_gain: float
    trials: int
    model: str
    activity: float
    mean_demand_mbps: float
    warning: str | None = None
    histogram: list[tuple[float, int]] = field(default_factory=list, repr=False)


def _aggregate(profile: TrafficProfile, n_cells: int, start: int, count: int) -> np.ndarray:
    total = np.zeros(count)
    for cell in range(n_cells):
        total += gen_loads(replace(profile, stream=cell), start, count)
    return total


def aggregate_demand(profile: TrafficProfile, n_cells: int, trials: int, workers: int = 1) -> np.ndarray:
    """Sum of ``n_cells`` independent loads for each of ``trials`` TTIs."""
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    parts = [(int(a), int(b - a)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if workers == 1:
        chunks = [_aggregate(profile, n_cells, a, n) for a, n in parts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda p: _aggregate(profile, n_cells, *p), parts))
    return np.concatenate(chunks) if chunks else np.zeros(0)


def _histogram(samples: np.ndarray) -> list[tuple[float, int]]:
    values, counts = np.unique(np.round(samples, 9), return_counts=True)
    if len(values) <= 1000:
        return [(float(v), int(c)) for v, c in zip(values, counts)]
    counts, edges = np.histogram(samples, bins=100)
    centres = (edges[:-1] + edges[1:]) / 2
    return [(float(v), int(c)) for v, c in zip(centres, counts)]


def mux_gain(
    n_cells: int,
    profile: TrafficProfile,
    percentile: float = 95.0,
    trials: int = 100_000,
    workers: int = 1,
) -> MuxReport:
    """Sum of per-cell peaks over the aggregate demand at ``percentile``.

    Cells use streams ``0 .. n_cells - 1`` of ``profile.seed``; the result
    does not depend on ``workers``.
    """
    if n_cells < 1:
        raise ValueError("need at least one cell")
    if not 0 < percentile < 100:
        raise ValueError("percentile must lie strictly between 0 and 100")
    if trials < 1 or workers < 1:
        raise ValueError("trials and workers must be positive")
    agg = aggregate_demand(profile, n_cells, trials, workers)
    demand = nearest_rank(agg, percentile)
    sum_peaks = n_cells * profile.peak_mbps
    tail = trials * (1 - percentile / 100)
    warning = None
    if tail < MIN_TAIL_SAMPLES:
        warning = (
            f"only {tail:.0f} samples above the {percentile:g}th percentile; "
            f"use at least {math.ceil(MIN_TAIL_SAMPLES / (1 - percentile / 100))} trials"
        )
    return MuxReport(
        n_cells=n_cells,
        percentile=percentile,
        percentile_demand_mbps=demand,
        sum_peaks_mbps=sum_peaks,
        mux_gain=sum_peaks / demand if demand > 0 else math.inf,
        trials=trials,
        model=profile.model.value,
        activity=profile.activity,
        mean_demand_mbps=float(agg.mean()),
        warning=warning,
        histogram=_histogram(agg),
    )
