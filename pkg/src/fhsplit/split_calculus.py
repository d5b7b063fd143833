"""Fronthaul dimensioning for the intra-PHY functional splits.

All rates are exact :class:`fractions.Fraction` values in Mbps. Floats passed
in are converted through their decimal string form, so ``0.25`` becomes
exactly 1/4 and ``1.92`` exactly 48/25. Use :func:`round_display` to get the
one-decimal figures used in the printed tables.

Split naming::

    S8   time-domain I/Q over CPRI           (FS-I)
    S71  frequency-domain I/Q, per antenna   (FS-III)
    S72  modulated I/Q symbols, per layer    (7.2)
    S73  hard coded bits DL / soft bits UL   (FS-VI, bidirectional 7.3)
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from numbers import Rational
from typing import Mapping

from .errors import CapacityError, ConfigurationError

SUBCARRIERS_PER_RB = 12
SUBCARRIER_KHZ = 15
DEFAULT_E1_MBPS = 133

# LTE resource blocks per channel bandwidth. 100 MHz -> 500 RB (6000
# subcarriers) is back-derived from the 378 Mbps uplink peak, not a 5G
# numerology.
N_RB = {1.4: 6, 3: 15, 5: 25, 10: 50, 15: 75, 20: 100, 100: 500}

# Sampling rate in MHz. 100 MHz (4 x 30.72) is an extrapolation at 15 kHz SCS.
F_SAMPLING_MHZ = {
    1.4: Fraction("1.92"),
    3: Fraction("3.84"),
    5: Fraction("7.68"),
    10: Fraction("15.36"),
    15: Fraction("23.04"),
    20: Fraction("30.72"),
    100: Fraction("122.88"),
}
N_FFT = {1.4: 128, 3: 256, 5: 512, 10: 1024, 15: 1536, 20: 2048, 100: 8192}


@dataclass(frozen=True)
class TransportConstants:
    """CPRI-style transport factors.

    ``useful_data_per_slot_us`` (466.67 us) and ``mean_rb_utilisation`` (0.7)
    are carried for completeness; no rate formula consumes the former, and the
    latter is the default activity of :class:`fhsplit.traffic_mux.TrafficProfile`.
    """

    m_bits_per_sample: int = 15
    f_chip_mhz: Fraction = Fraction("3.84")
    f_coding: Fraction = Fraction(10, 8)
    f_control: Fraction = Fraction(16, 15)
    cp_saving: Fraction = Fraction(14, 15)
    k_code_rate: Fraction = Fraction(11, 12)
    symbol_duration_us: Fraction = Fraction("66.67")
    cyclic_prefix_us: Fraction = Fraction("4.76")
    useful_data_per_slot_us: Fraction = Fraction("466.67")
    mean_rb_utilisation: Fraction = Fraction("0.7")


TRANSPORT = TransportConstants()


class Split(str, enum.Enum):
    S8 = "S8"
    S71 = "S71"
    S72 = "S72"
    S73 = "S73"


class Direction(str, enum.Enum):
    DL = "DL"
    UL = "UL"


def q(value) -> Fraction:
    """Exact rational from an int, Fraction, Decimal, str or float."""
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(str(value))


def round_display(value, places: int = 1) -> float:
    """Round half-up to ``places`` decimals, the way the tables print."""
    x = q(value)
    d = Decimal(x.numerator) / Decimal(x.denominator)
    return float(d.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP))


def _bandwidth_key(bw) -> float:
    key = float(bw)
    if key not in N_RB:
        raise ConfigurationError(
            f"unsupported cell bandwidth {bw} MHz; expected one of {sorted(N_RB)}"
        )
    return key


@dataclass(frozen=True)
class CellConfig:
    """Radio cell parameters that drive every rate formula.

    ``n_rb`` defaults from the bandwidth lookup; pass ``n_rb=0`` for an empty
    grid. ``gamma`` is the control/signalling share of the grid.
    """

    cell_bandwidth_mhz: float = 20
    o_m: int = 6
    mimo_layers: int = 1
    n_ant: int = 2
    n_rb: int | None = None
    n_sy_psf: int = 14
    gamma: Fraction = Fraction(1, 4)
    iq_bitwidth: int = 32
    s_bw: int = 8
    e1_mbps: Fraction = Fraction(DEFAULT_E1_MBPS)

    def __post_init__(self):
        bw = _bandwidth_key(self.cell_bandwidth_mhz)
        object.__setattr__(self, "cell_bandwidth_mhz", bw)
        if self.n_rb is None:
            object.__setattr__(self, "n_rb", N_RB[bw])
        object.__setattr__(self, "gamma", q(self.gamma))
        object.__setattr__(self, "e1_mbps", q(self.e1_mbps))
        if self.o_m not in (2, 4, 6, 8):
            raise ConfigurationError(f"modulation order must be 2, 4, 6 or 8, got {self.o_m}")
        if self.mimo_layers not in (1, 2, 4, 8):
            raise ConfigurationError(f"MIMO layers must be 1, 2, 4 or 8, got {self.mimo_layers}")
        if self.s_bw not in (4, 5, 8, 16):
            raise ConfigurationError(f"soft-bit width must be 4, 5, 8 or 16, got {self.s_bw}")
        if not 0 <= self.gamma <= 1:
            raise ConfigurationError(f"gamma must lie in [0, 1], got {self.gamma}")
        if self.n_rb < 0 or self.n_ant < 0 or self.n_sy_psf <= 0:
            raise ConfigurationError("resource block, antenna and symbol counts must be non-negative")
        if self.iq_bitwidth <= 0 or self.iq_bitwidth % 2:
            raise ConfigurationError(f"I/Q bitwidth must be a positive even number, got {self.iq_bitwidth}")
        if self.e1_mbps < 0:
            raise ConfigurationError("E1 overhead must be non-negative")

    @property
    def n_sc(self) -> int:
        return SUBCARRIERS_PER_RB * self.n_rb

    @property
    def f_sampling_mhz(self) -> Fraction:
        return F_SAMPLING_MHZ[self.cell_bandwidth_mhz]

    @property
    def n_fft(self) -> int:
        return N_FFT[self.cell_bandwidth_mhz]

    @property
    def oversampling(self) -> Fraction:
        return Fraction(self.n_fft, self.n_sc)

    def with_(self, **changes) -> "CellConfig":
        """Copy with fields replaced; ``n_rb`` is re-derived when bandwidth changes."""
        if "cell_bandwidth_mhz" in changes and "n_rb" not in changes:
            changes["n_rb"] = None
        return replace(self, **changes)


@dataclass(frozen=True)
class FronthaulDemand:
    """Required fronthaul rate for one split and direction.

    ``overhead_mbps`` is the load-independent signalling part (E1) included
    in ``rate_mbps``; ``user_plane_mbps`` is what remains.
    """

    split: Split
    direction: Direction
    rate_mbps: Fraction
    load_dependent: bool
    overhead_mbps: Fraction = Fraction(0)

    @property
    def user_plane_mbps(self) -> Fraction:
        return self.rate_mbps - self.overhead_mbps


@dataclass(frozen=True)
class ModulationMix:
    """Share of traffic carried at each modulation order."""

    weights: Mapping[int, Fraction] = field(default_factory=dict)

    def normalized(self) -> dict[int, Fraction]:
        weights = {int(k): q(v) for k, v in self.weights.items()}
        if not weights:
            raise ValueError("modulation mix is empty")
        if any(o_m not in (2, 4, 6, 8) for o_m in weights):
            raise ValueError(f"unknown modulation order in mix: {sorted(weights)}")
        if any(w < 0 for w in weights.values()):
            raise ValueError("modulation mix weights must be non-negative")
        total = sum(weights.values())
        if total == 0:
            raise ValueError("modulation mix weights sum to zero")
        return {k: w / total for k, w in sorted(weights.items())}


# Measured usage shares of QPSK, 16QAM and 256QAM in deployed LTE cells.
# They do not sum to one; normalise before use.
OBSERVED_MIX = ModulationMix({2: Fraction("0.3635"), 4: Fraction("0.2843"), 8: Fraction("0.0274")})


def _peak(cfg: CellConfig, layers: int) -> Fraction:
    # bits per subframe == kbit/s per ms; /1000 -> Mbps
    return Fraction(cfg.n_sc * cfg.n_sy_psf * cfg.o_m * layers) * (1 - cfg.gamma) / 1000


def peak_rate_dl(cfg: CellConfig) -> Fraction:
    """Downlink goodput N_sc * N_sy * O_m * (1 - gamma) * layers, in Mbps."""
    return _peak(cfg, cfg.mimo_layers)


def peak_rate_ul(cfg: CellConfig, layers: int = 1) -> Fraction:
    """Uplink peak rate; single radio chain unless ``layers`` says otherwise."""
    if layers < 1:
        raise ConfigurationError("uplink layers must be >= 1")
    return _peak(cfg, layers)


def peak_rate(cfg: CellConfig, direction: Direction, ul_layers: int = 1) -> Fraction:
    if Direction(direction) is Direction.DL:
        return peak_rate_dl(cfg)
    return peak_rate_ul(cfg, ul_layers)


def fs73_dl_demand(cfg: CellConfig) -> FronthaulDemand:
    """Downlink 7.3 demand at peak load: goodput plus the fixed E1 overhead."""
    return FronthaulDemand(
        Split.S73, Direction.DL, peak_rate_dl(cfg) + cfg.e1_mbps, True, cfg.e1_mbps
    )


def _check_o_m(o_m):
    if o_m not in (2, 4, 6, 8):
        raise ValueError(f"modulation order must be 2, 4, 6 or 8, got {o_m}")


def fs72_rate_from_fs73(r73_mbps, o_m: int, iq_bitwidth: int = 32) -> Fraction:
    """Rate once hard bits are mapped to I/Q symbols: r73 * iq_bitwidth / o_m."""
    _check_o_m(o_m)
    r73 = q(r73_mbps)
    if r73 < 0:
        raise ValueError("rate must be non-negative")
    return r73 * iq_bitwidth / o_m


def fs73_ul_rate_from_fs72(r72_mbps, o_m: int, iq_bitwidth: int = 32, s_bw: int = 8) -> Fraction:
    """Soft-bit rate after demodulating I/Q: r72 * o_m / iq_bitwidth * s_bw."""
    _check_o_m(o_m)
    if s_bw < 1:
        raise ValueError("soft-bit width must be >= 1")
    r72 = q(r72_mbps)
    if r72 < 0:
        raise ValueError("rate must be non-negative")
    return r72 * o_m / iq_bitwidth * s_bw


def gain_ratio(direction: Direction, o_m: int, s_bw: int | None = None, iq_bitwidth: int = 32) -> Fraction:
    """How many times fewer bits 7.3 needs than 7.2 for the same payload."""
    _check_o_m(o_m)
    if Direction(direction) is Direction.DL:
        return Fraction(iq_bitwidth, o_m)
    if not s_bw:
        raise ValueError("uplink gain needs a soft-bit width")
    return Fraction(iq_bitwidth, o_m * s_bw)


def cpri_rate(cfg: CellConfig, constants: TransportConstants = TRANSPORT) -> Fraction:
    """Split 8 (FS-I): 2 * M * f_s * F_coding * F_control * N_ant."""
    return (
        2 * constants.m_bits_per_sample * cfg.f_sampling_mhz
        * constants.f_coding * constants.f_control * cfg.n_ant
    )


def freq_domain_iq_rate(cfg: CellConfig, constants: TransportConstants = TRANSPORT) -> Fraction:
    """Split 7.1 (FS-III): I/Q on used subcarriers only, per antenna."""
    return (
        2 * constants.m_bits_per_sample * cfg.n_sc * Fraction(SUBCARRIER_KHZ, 1000)
        * constants.f_coding * constants.f_control * cfg.n_ant
    )


# The published capacity table scales the 3 MHz column from 1.4 MHz (2 x 72
# subcarriers) instead of the 15 RB = 180 of the LTE grid.
CAPACITY_TABLE_N_SC = {1.4: 72, 3: 144, 5: 300, 10: 600, 15: 900, 20: 1200}
CAPACITY_BANDWIDTHS = (1.4, 3, 5, 10, 15, 20)
CAPACITY_ROWS = ("FS-I", "FS-II", "FS-III", "FS-IV", "FS-V", "FS-VI", "FS-VII")

# Cells where the formula and the published table disagree: (row, bw) -> printed value.
CAPACITY_TABLE_ERRATA = {("FS-III", 20.0): Fraction("1140.0")}
PEAK_TABLE_ERRATA = {(2, 8, 100.0): Fraction("100.8")}


def capacity_table(
    o_m: int = 6,
    gamma=0,
    n_ant: int = 2,
    constants: TransportConstants = TRANSPORT,
) -> dict[str, dict[float, Fraction]]:
    """Required fronthaul rate of FS-I..FS-VII for each LTE bandwidth, in Mbps.

    FS-II removes the cyclic prefix from FS-I (factor 14/15). FS-IV carries
    one 2*M-bit I/Q sample per used resource element and antenna, FS-V the
    same after antenna combining (one stream). FS-VI is the coded-bit rate at
    ``o_m`` and FS-VII scales it by the code rate k.
    """
    gamma = q(gamma)
    table: dict[str, dict[float, Fraction]] = {row: {} for row in CAPACITY_ROWS}
    for bw in CAPACITY_BANDWIDTHS:
        n_sc = CAPACITY_TABLE_N_SC[bw]
        cfg = CellConfig(bw, o_m=o_m, n_ant=n_ant, n_rb=n_sc // SUBCARRIERS_PER_RB, gamma=gamma)
        fs1 = cpri_rate(cfg, constants)
        re_rate = Fraction(n_sc * cfg.n_sy_psf * 1000, 10**6)  # resource elements, M per second
        iq = 2 * constants.m_bits_per_sample * re_rate
        fs6 = re_rate * o_m * (1 - gamma)
        table["FS-I"][bw] = fs1
        table["FS-II"][bw] = fs1 * constants.cp_saving
        table["FS-III"][bw] = freq_domain_iq_rate(cfg, constants)
        table["FS-IV"][bw] = iq * n_ant
        table["FS-V"][bw] = iq
        table["FS-VI"][bw] = fs6
        table["FS-VII"][bw] = fs6 * constants.k_code_rate
    return table


def applicable_peak(split: Split, direction: Direction, cfg: CellConfig, code_rate=1, ul_layers: int = 1) -> Fraction:
    """Largest user payload (Mbps) the cell can carry at ``code_rate``."""
    return peak_rate(cfg, direction, ul_layers) * q(code_rate)


def demand(
    split: Split,
    direction: Direction,
    cfg: CellConfig,
    offered_load_mbps=None,
    code_rate=1,
    ul_layers: int = 1,
) -> FronthaulDemand:
    """Fronthaul demand of ``split`` carrying ``offered_load_mbps`` of user payload.

    The offered load is information bits; 7.3 transports coded bits, i.e.
    ``load / code_rate`` (times ``s_bw`` uplink). With the default code rate
    of 1 the peak demand is the goodput itself, matching the published
    downlink table. E1 is added on the downlink only. ``None`` means peak load.
    I/Q splits are constant bit rate and ignore the load.
    """
    split, direction = Split(split), Direction(direction)
    code_rate = q(code_rate)
    if not 0 < code_rate <= 1:
        raise ConfigurationError(f"code rate must lie in (0, 1], got {code_rate}")
    peak = applicable_peak(split, direction, cfg, code_rate, ul_layers)
    load = peak if offered_load_mbps is None else q(offered_load_mbps)
    if load < 0:
        raise CapacityError("offered load must be non-negative", peak)
    if load > peak:
        raise CapacityError(
            f"offered load {float(load):.3f} Mbps exceeds the {direction.value} peak of {float(peak):.3f} Mbps",
            peak,
        )

    if split is Split.S73:
        coded = load / code_rate
        if direction is Direction.DL:
            return FronthaulDemand(split, direction, coded + cfg.e1_mbps, True, cfg.e1_mbps)
        return FronthaulDemand(split, direction, coded * cfg.s_bw, True)
    if split is Split.S72:
        rate = fs72_rate_from_fs73(peak_rate(cfg, direction, ul_layers), cfg.o_m, cfg.iq_bitwidth)
    elif split is Split.S71:
        rate = freq_domain_iq_rate(cfg)
    else:
        rate = cpri_rate(cfg)
    return FronthaulDemand(split, direction, rate, False)


def demand_table(cfg: CellConfig, offered_load_mbps=None, code_rate=1) -> list[FronthaulDemand]:
    """Demand for every split and direction at one load (peak by default)."""
    rows = []
    for direction in Direction:
        for split in (Split.S8, Split.S71, Split.S72, Split.S73):
            rows.append(demand(split, direction, cfg, offered_load_mbps, code_rate))
    return rows


def expected_rate_with_modmix(
    cfg: CellConfig,
    mix: ModulationMix,
    load_fraction,
    direction: Direction = Direction.DL,
    code_rate=1,
) -> Fraction:
    """Mix-weighted 7.3 demand, each order loaded to ``load_fraction`` of its own peak."""
    load_fraction = q(load_fraction)
    if not 0 <= load_fraction <= 1:
        raise ValueError("load fraction must lie in [0, 1]")
    total = Fraction(0)
    for o_m, weight in mix.normalized().items():
        sub = cfg.with_(o_m=o_m)
        load = applicable_peak(Split.S73, direction, sub, code_rate) * load_fraction
        total += weight * demand(Split.S73, direction, sub, load, code_rate).rate_mbps
    return total
