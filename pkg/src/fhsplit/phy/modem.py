"""Gray-mapped square QAM, AWGN channel and max-log LLR demapper.

Bit mapping: within each group of ``o_m`` bits, even positions drive the
in-phase axis and odd positions the quadrature axis. On each axis the bits
select a Gray-coded PAM level, first bit = sign (0 -> positive). So QPSK
``00`` maps to ``(1 + 1j) / sqrt(2)``. Constellations have unit average
energy. ``noise_variance`` is the total complex variance N0 = E|n|^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MODULATION_ORDERS = (2, 4, 6, 8)
FIXED_POINT_FRAC_BITS = 13  # Q2.13 per component: +/-4.0 full scale


def _check_o_m(o_m):
    if o_m not in MODULATION_ORDERS:
        raise ValueError(f"modulation order must be one of {MODULATION_ORDERS}, got {o_m}")


@lru_cache(maxsize=None)
def pam_levels(bits_per_axis: int) -> tuple[np.ndarray, np.ndarray]:
    """Amplitudes (unnormalised, odd integers) and their Gray bit labels.

    Returns ``levels[i]`` and ``labels[i, k]``, bit k of level i.
    """
    n = 1 << bits_per_axis
    idx = np.arange(n)
    levels = (n - 1) - 2 * idx  # index 0 is the most positive level
    gray = idx ^ (idx >> 1)
    labels = (gray[:, None] >> np.arange(bits_per_axis - 1, -1, -1)) & 1
    return levels.astype(np.float64), labels.astype(np.uint8)


def qam_scale(o_m: int) -> float:
    n = 1 << (o_m // 2)
    return float(np.sqrt(3.0 / (2.0 * (n * n - 1))))


def constellation(o_m: int) -> tuple[np.ndarray, np.ndarray]:
    """All ``2**o_m`` points with their bit labels, for brute-force checks."""
    _check_o_m(o_m)
    m = o_m // 2
    levels, labels = pam_levels(m)
    s = qam_scale(o_m)
    points, bit_rows = [], []
    for i in range(len(levels)):
        for j in range(len(levels)):
            bits = np.empty(o_m, np.uint8)
            bits[0::2] = labels[i]
            bits[1::2] = labels[j]
            points.append(s * complex(levels[i], levels[j]))
            bit_rows.append(bits)
    return np.array(points), np.array(bit_rows)


@dataclass(frozen=True)
class IqSymbolBlock:
    symbols: np.ndarray = field(repr=False)
    o_m: int
    pad_bits: int = 0

    @property
    def padded(self) -> bool:
        return self.pad_bits > 0

    def __len__(self):
        return len(self.symbols)

    def to_fixed(self) -> np.ndarray:
        return to_fixed(self.symbols)


def modulate(bits, o_m: int) -> IqSymbolBlock:
    _check_o_m(o_m)
    bits = np.asarray(bits, dtype=np.uint8)
    pad = (-len(bits)) % o_m
    if pad:
        bits = np.concatenate([bits, np.zeros(pad, np.uint8)])
    groups = bits.reshape(-1, o_m)
    m = o_m // 2
    levels, _ = pam_levels(m)
    weights = 1 << np.arange(m - 1, -1, -1)

    def axis(b):
        g = b @ weights
        # Gray -> binary index
        idx = g.copy()
        shift = g >> 1
        while shift.any():
            idx ^= shift
            shift >>= 1
        return levels[idx]

    sym = qam_scale(o_m) * (axis(groups[:, 0::2]) + 1j * axis(groups[:, 1::2]))
    return IqSymbolBlock(sym.astype(np.complex128), o_m, pad)


def noise_variance_for(snr_db: float) -> float:
    return float(10.0 ** (-snr_db / 10.0))


def awgn(symbols, snr_db: float, seed=None) -> np.ndarray:
    """Add complex Gaussian noise at ``snr_db`` (Es/N0, unit symbol energy).

    ``snr_db = inf`` returns an unmodified copy. ``seed`` is anything
    :func:`numpy.random.default_rng` accepts, including a Generator.
    """
    x = np.asarray(symbols.symbols if isinstance(symbols, IqSymbolBlock) else symbols, dtype=np.complex128)
    if np.isposinf(snr_db):
        return x.copy()
    if not np.isfinite(snr_db):
        raise ValueError(f"SNR must be finite or +inf, got {snr_db}")
    rng = np.random.default_rng(seed)
    sigma = np.sqrt(noise_variance_for(snr_db) / 2.0)
    noise = rng.standard_normal((2, len(x)))
    return x + sigma * (noise[0] + 1j * noise[1])


def ebn0_to_snr_db(ebn0_db: float, o_m: int, code_rate: float = 0.5) -> float:
    return ebn0_db + 10.0 * np.log10(o_m * code_rate)


def demodulate_llr(symbols, o_m: int, noise_variance: float) -> np.ndarray:
    """Max-log-MAP LLR per bit: (min d^2 over bit=1 - min d^2 over bit=0) / N0.

    Square Gray QAM separates into two PAM axes, so each axis is searched on
    its own. Output order matches the bit order fed to :func:`modulate`.
    """
    _check_o_m(o_m)
    if not noise_variance > 0:
        raise ValueError("noise variance must be positive")
    y = np.asarray(symbols.symbols if isinstance(symbols, IqSymbolBlock) else symbols, dtype=np.complex128)
    m = o_m // 2
    levels, labels = pam_levels(m)
    pts = qam_scale(o_m) * levels
    out = np.empty((len(y), o_m))
    for offset, comp in ((0, y.real), (1, y.imag)):
        d2 = (comp[:, None] - pts[None, :]) ** 2
        for k in range(m):
            ones = labels[:, k] == 1
            out[:, offset + 2 * k] = (d2[:, ones].min(axis=1) - d2[:, ~ones].min(axis=1)) / noise_variance
    return out.ravel()


def to_fixed(symbols, frac_bits: int = FIXED_POINT_FRAC_BITS) -> np.ndarray:
    """Complex samples -> interleaved int16 I/Q (saturating)."""
    x = np.asarray(symbols, dtype=np.complex128)
    iq = np.empty(2 * len(x))
    iq[0::2] = x.real
    iq[1::2] = x.imag
    return np.clip(np.round(iq * (1 << frac_bits)), -32768, 32767).astype(np.int16)


def from_fixed(iq, frac_bits: int = FIXED_POINT_FRAC_BITS) -> np.ndarray:
    iq = np.asarray(iq, dtype=np.float64) / (1 << frac_bits)
    return iq[0::2] + 1j * iq[1::2]
