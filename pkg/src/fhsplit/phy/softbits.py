"""Soft-bit (LLR) quantisation and bit packing.

The quantiser is uniform mid-rise with saturation: word ``w`` stands for the
value ``(w + 1/2) * step`` with ``step = clip / 2**(s_bw - 1)``, so the words
span the full two's-complement range of ``s_bw`` bits and reconstruction is
odd-symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CLIP_RMS_FACTOR = 4.0


@dataclass(frozen=True)
class SoftBitBlock:
    llr_words: np.ndarray = field(repr=False)
    s_bw: int
    scale: float

    def __post_init__(self):
        lo, hi = word_range(self.s_bw)
        w = self.llr_words
        if len(w) and (w.min() < lo or w.max() > hi):
            raise ValueError(f"soft-bit words outside the {self.s_bw}-bit range")

    def __len__(self):
        return len(self.llr_words)

    def dequantize(self) -> np.ndarray:
        return (self.llr_words.astype(np.float64) + 0.5) * self.scale

    def decoder_metrics(self) -> np.ndarray:
        # Viterbi is invariant to positive scaling; skip the multiply
        return self.llr_words.astype(np.float64) + 0.5


def word_range(s_bw: int) -> tuple[int, int]:
    return -(1 << (s_bw - 1)), (1 << (s_bw - 1)) - 1


def default_clip(llrs) -> float:
    llrs = np.asarray(llrs, dtype=np.float64)
    rms = float(np.sqrt(np.mean(llrs * llrs))) if llrs.size else 0.0
    return CLIP_RMS_FACTOR * rms if rms > 0 else 1.0


def quantize_llr(llrs, s_bw: int, clip: float | None = None) -> SoftBitBlock:
    """Quantise LLRs to ``s_bw``-bit signed words, saturating at +/- ``clip``.

    ``clip`` defaults to four times the RMS LLR magnitude of the input.
    """
    if not 2 <= s_bw <= 16:
        raise ValueError(f"soft-bit width must lie in [2, 16], got {s_bw}")
    if clip is None:
        clip = default_clip(llrs)
    if not clip > 0:
        raise ValueError("clip must be positive")
    step = clip / (1 << (s_bw - 1))
    lo, hi = word_range(s_bw)
    words = np.clip(np.floor(np.asarray(llrs, dtype=np.float64) / step), lo, hi)
    return SoftBitBlock(words.astype(np.int16), s_bw, step)


def pack_words(words, s_bw: int) -> bytes:
    """Pack signed ``s_bw``-bit words MSB first, zero-padding the last byte."""
    w = np.asarray(words, dtype=np.int64) & ((1 << s_bw) - 1)
    shifts = np.arange(s_bw - 1, -1, -1)
    bits = ((w[:, None] >> shifts) & 1).astype(np.uint8)
    return np.packbits(bits.ravel()).tobytes()


def unpack_words(data: bytes, s_bw: int, count: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[: count * s_bw]
    if len(bits) < count * s_bw:
        raise ValueError(f"{len(data)} bytes cannot hold {count} words of {s_bw} bits")
    weights = 1 << np.arange(s_bw - 1, -1, -1)
    raw = bits.reshape(count, s_bw).astype(np.int64) @ weights
    sign = 1 << (s_bw - 1)
    return ((raw ^ sign) - sign).astype(np.int16)


def packed_size(count: int, s_bw: int) -> int:
    return (count * s_bw + 7) // 8
