"""HARQ latency budget to maximum RU-DU fibre distance.

Decomposition convention: of the HARQ round trip, the DL and UL processing
allowances are removed first. A fixed share of what remains
(``fronthaul_share``, default 0.1) is granted to one-way fronthaul
propagation, unless an explicit ``oneway_allowance_us`` is given. With the
LTE figures (8 ms, 1 ms, 2 ms) the default yields 500 us one way, i.e. 100 km
at 5 us/km. Everything is exact rational arithmetic; distances are displayed
at 0.1 km.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InfeasibleError
from .split_calculus import q, round_display

US_PER_MS = 1000


@dataclass(frozen=True)
class LatencyBudget:
    harq_rtt_ms: Fraction = Fraction(8)
    dl_processing_ms: Fraction = Fraction(1)
    ul_processing_ms: Fraction = Fraction(2)
    propagation_us_per_km: Fraction = Fraction(5)
    fronthaul_share: Fraction = Fraction(1, 10)
    oneway_allowance_us: Fraction | None = None

    def __post_init__(self):
        for name in ("harq_rtt_ms", "dl_processing_ms", "ul_processing_ms",
                     "propagation_us_per_km", "fronthaul_share"):
            value = q(getattr(self, name))
            if value < 0:
                raise ValueError(f"{name} must be non-negative")
            object.__setattr__(self, name, value)
        if self.harq_rtt_ms <= 0 or self.propagation_us_per_km <= 0:
            raise ValueError("HARQ RTT and propagation delay must be positive")
        if self.fronthaul_share > 1:
            raise ValueError("fronthaul_share must lie in [0, 1]")
        if self.oneway_allowance_us is not None:
            allowance = q(self.oneway_allowance_us)
            if allowance < 0:
                raise ValueError("oneway_allowance_us must be non-negative")
            object.__setattr__(self, "oneway_allowance_us", allowance)

    @property
    def remainder_us(self) -> Fraction:
        """Round-trip time left after DL and UL processing (may be negative)."""
        return (self.harq_rtt_ms - self.dl_processing_ms - self.ul_processing_ms) * US_PER_MS

    def convention(self) -> str:
        if self.oneway_allowance_us is not None:
            return f"one-way allowance fixed at {float(self.oneway_allowance_us):g} us"
        return (
            f"one-way allowance = {float(self.fronthaul_share):g} x "
            f"(RTT {float(self.harq_rtt_ms):g} ms - DL {float(self.dl_processing_ms):g} ms "
            f"- UL {float(self.ul_processing_ms):g} ms)"
        )


def residual_oneway_budget(budget: LatencyBudget, extra_fixed_us=0) -> Fraction:
    """One-way time (us) left for fibre propagation.

    Raises:
        InfeasibleError: processing exceeds the round trip, or the fixed
            extra delays exceed the allowance. ``deficit_us`` is positive.
    """
    extra = q(extra_fixed_us)
    if extra < 0:
        raise ValueError("extra_fixed_us must be non-negative")
    remainder = budget.remainder_us
    if remainder < 0:
        raise InfeasibleError(
            f"processing ({float(budget.dl_processing_ms + budget.ul_processing_ms):g} ms) "
            f"exceeds the HARQ round trip ({float(budget.harq_rtt_ms):g} ms)",
            deficit_us=-remainder,
        )
    if budget.oneway_allowance_us is not None:
        allowance = budget.oneway_allowance_us
    else:
        allowance = remainder * budget.fronthaul_share
    residual = allowance - extra
    if residual < 0:
        raise InfeasibleError(
            f"fixed delays of {float(extra):g} us exceed the {float(allowance):g} us one-way allowance",
            deficit_us=-residual,
        )
    return residual


def max_fronthaul_distance(residual_oneway_us, propagation_us_per_km=5) -> Fraction:
    """Fibre length (km) that fits in ``residual_oneway_us``; never negative."""
    residual, prop = q(residual_oneway_us), q(propagation_us_per_km)
    if prop <= 0:
        raise ValueError("propagation delay per km must be positive")
    if residual < 0:
        raise ValueError("residual budget must be non-negative")
    return residual / prop


def distance_gain_from_speedup(baseline_proc_us, compression_fraction, propagation_us_per_km=5) -> Fraction:
    """Extra reach (km) from cutting ``compression_fraction`` of the processing time."""
    base, frac, prop = q(baseline_proc_us), q(compression_fraction), q(propagation_us_per_km)
    if not 0 <= frac <= 1:
        raise ValueError(f"compression fraction must lie in [0, 1], got {float(frac)}")
    if base < 0:
        raise ValueError("baseline processing time must be non-negative")
    if prop <= 0:
        raise ValueError("propagation delay per km must be positive")
    return base * frac / prop


def placement_report(budget: LatencyBudget, extra_fixed_us=0) -> dict:
    residual = residual_oneway_budget(budget, extra_fixed_us)
    km = max_fronthaul_distance(residual, budget.propagation_us_per_km)
    return {
        "convention": budget.convention(),
        "harq_rtt_ms": float(budget.harq_rtt_ms),
        "dl_processing_ms": float(budget.dl_processing_ms),
        "ul_processing_ms": float(budget.ul_processing_ms),
        "propagation_us_per_km": float(budget.propagation_us_per_km),
        "extra_fixed_us": float(q(extra_fixed_us)),
        "residual_oneway_us": float(residual),
        "max_distance_km": float(km),
        "max_distance_km_display": round_display(km, 1),
    }
