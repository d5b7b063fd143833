"""Channel coding for the toy 7.3 PHY.

Transport blocks get a CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF), are
cut into code blocks of at most ``max_codeblock_bits`` information bits and
each block is encoded with the rate-1/2, K=7 convolutional code (generators
171/133 octal), terminated with six zero tail bits. Coded bits are emitted
interleaved ``c0[0], c1[0], c0[1], c1[1], ...``.

LLR sign convention everywhere: positive means bit 0 is more likely.
"""

from __future__ import annotations

import binascii
import math
import time
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numba
import numpy as np

from ..errors import FramingError, SizeError
from .softbits import SoftBitBlock

CONSTRAINT_LENGTH = 7
N_STATES = 1 << (CONSTRAINT_LENGTH - 1)
TAIL_BITS = CONSTRAINT_LENGTH - 1
GENERATORS = (0o171, 0o133)
CRC_BITS = 16
DEFAULT_CODEBLOCK_BITS = 6144
MAX_TRANSPORT_BLOCK_BYTES = 1 << 20


def crc16(data: bytes) -> int:
    return binascii.crc_hqx(data, 0xFFFF)


@dataclass(frozen=True)
class TransportBlock:
    payload: bytes
    crc: int
    block_id: int = 0

    @classmethod
    def from_payload(cls, payload: bytes, block_id: int = 0) -> "TransportBlock":
        payload = bytes(payload)
        return cls(payload, crc16(payload), block_id)

    @property
    def crc_valid(self) -> bool:
        return crc16(self.payload) == self.crc


@dataclass(frozen=True)
class CodeBlock:
    coded_bits: np.ndarray = field(repr=False)
    parent_block_id: int
    index: int

    @property
    def info_len(self) -> int:
        return len(self.coded_bits) // 2 - TAIL_BITS


def _taps(poly: int) -> np.ndarray:
    # index 0 is the current input bit (MSB of the octal generator)
    return np.array([(poly >> (CONSTRAINT_LENGTH - 1 - k)) & 1 for k in range(CONSTRAINT_LENGTH)], np.uint8)


_TAPS = [_taps(g) for g in GENERATORS]


def conv_encode(bits) -> np.ndarray:
    """Zero-terminated rate-1/2 encoding; output length 2 * (len(bits) + 6)."""
    u = np.concatenate([np.asarray(bits, dtype=np.uint8), np.zeros(TAIL_BITS, np.uint8)])
    out = np.empty(2 * len(u), dtype=np.uint8)
    for j, taps in enumerate(_TAPS):
        out[j::2] = np.convolve(u, taps)[: len(u)] & 1
    return out


def segment_lengths(total_bits: int, max_codeblock_bits: int) -> list[int]:
    """Information lengths of the code blocks, full blocks first."""
    if max_codeblock_bits < 1:
        raise ValueError("max_codeblock_bits must be positive")
    n = math.ceil(total_bits / max_codeblock_bits)
    return [max_codeblock_bits] * (n - 1) + [total_bits - max_codeblock_bits * (n - 1)]


def coded_length(payload_bytes: int, max_codeblock_bits: int = DEFAULT_CODEBLOCK_BITS) -> int:
    """Total coded bits produced by :func:`encode` for a payload of this size."""
    lengths = segment_lengths(8 * payload_bytes + CRC_BITS, max_codeblock_bits)
    return sum(2 * (n + TAIL_BITS) for n in lengths)


def max_payload_for(coded_bits_budget: int, max_codeblock_bits: int = DEFAULT_CODEBLOCK_BITS) -> int:
    """Largest payload (bytes) whose coded length fits in ``coded_bits_budget``."""
    hi = max(0, coded_bits_budget // 16)
    lo = 0
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if coded_length(mid, max_codeblock_bits) <= coded_bits_budget:
            lo = mid
        else:
            hi = mid - 1
    return lo


def encode(
    tb: TransportBlock,
    max_codeblock_bits: int = DEFAULT_CODEBLOCK_BITS,
    max_transport_bytes: int = MAX_TRANSPORT_BLOCK_BYTES,
) -> list[CodeBlock]:
    if not tb.payload:
        raise SizeError("transport block payload is empty")
    if len(tb.payload) > max_transport_bytes:
        raise SizeError(
            f"transport block of {len(tb.payload)} bytes exceeds the {max_transport_bytes}-byte limit"
        )
    data = tb.payload + tb.crc.to_bytes(2, "big")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    blocks = []
    start = 0
    for i, n in enumerate(segment_lengths(len(bits), max_codeblock_bits)):
        blocks.append(CodeBlock(conv_encode(bits[start:start + n]), tb.block_id, i))
        start += n
    return blocks


def _output_table():
    # sign[r, j] = +1 if coded bit j is 0 for register r = (u << 6) | state
    sign = np.empty((1 << CONSTRAINT_LENGTH, 2), dtype=np.float64)
    for r in range(1 << CONSTRAINT_LENGTH):
        for j, g in enumerate(GENERATORS):
            sign[r, j] = 1.0 - 2.0 * (bin(r & g).count("1") & 1)
    return sign


_SIGN = _output_table()


@numba.njit(nogil=True, cache=True)
def _viterbi_kernel(llr, sign):
    steps = llr.shape[0] // 2
    n_states = 64
    neg = -1e300
    metric = np.full(n_states, neg)
    metric[0] = 0.0
    new = np.empty(n_states)
    decisions = np.empty((steps, n_states), dtype=np.uint8)
    for t in range(steps):
        l0 = llr[2 * t]
        l1 = llr[2 * t + 1]
        for ns in range(n_states):
            u = ns >> 5
            base = (ns & 31) << 1
            r0 = (u << 6) | base
            r1 = r0 | 1
            m0 = metric[base] + l0 * sign[r0, 0] + l1 * sign[r0, 1]
            m1 = metric[base | 1] + l0 * sign[r1, 0] + l1 * sign[r1, 1]
            if m1 > m0:
                new[ns] = m1
                decisions[t, ns] = 1
            else:
                new[ns] = m0
                decisions[t, ns] = 0
        top = new.max()
        for s in range(n_states):
            metric[s] = new[s] - top
    out = np.empty(steps, dtype=np.uint8)
    state = 0
    for t in range(steps - 1, -1, -1):
        out[t] = state >> 5
        state = ((state & 31) << 1) | decisions[t, state]
    return out


def viterbi_decode(llr) -> np.ndarray:
    """Soft-decision ML decoding of one terminated code block; returns info bits."""
    llr = np.ascontiguousarray(llr, dtype=np.float64)
    if llr.ndim != 1 or len(llr) % 2 or len(llr) < 2 * (TAIL_BITS + 1):
        raise FramingError(f"code block of {len(llr)} soft values is not a terminated rate-1/2 block")
    return _viterbi_kernel(llr, _SIGN)[:-TAIL_BITS]


def _as_llr(block) -> np.ndarray:
    if isinstance(block, SoftBitBlock):
        return block.decoder_metrics()
    if isinstance(block, CodeBlock):
        raise TypeError("decode expects soft values, not a CodeBlock of hard bits")
    return np.asarray(block, dtype=np.float64)


def _reassemble(info_bits: Sequence[np.ndarray], block_id: int) -> tuple[TransportBlock, bool]:
    bits = np.concatenate(info_bits) if info_bits else np.zeros(0, np.uint8)
    if len(bits) % 8 or len(bits) < CRC_BITS + 8:
        raise FramingError(f"decoded {len(bits)} bits, not a whole transport block with CRC")
    data = np.packbits(bits).tobytes()
    tb = TransportBlock(data[:-2], int.from_bytes(data[-2:], "big"), block_id)
    return tb, tb.crc_valid


def decode(blocks, block_id: int = 0) -> tuple[TransportBlock, bool]:
    """Decode the code blocks of one transport block and check its CRC.

    ``blocks`` is a sequence of :class:`SoftBitBlock` or LLR arrays, one per
    code block, in order. A CRC failure is reported, not raised.
    """
    return _reassemble([viterbi_decode(_as_llr(b)) for b in blocks], block_id)


def decode_parallel(
    blocks,
    workers: int = 4,
    block_id: int = 0,
    executor: Executor | None = None,
) -> tuple[TransportBlock, bool, float]:
    """Same result as :func:`decode`, with code blocks spread over a thread pool.

    The Viterbi kernel releases the GIL, so blocks really run concurrently.
    Pass a long-lived ``executor`` to avoid pool start-up per call; otherwise
    a pool of ``workers`` threads is created for this call.
    Returns ``(tb, crc_ok, wall_time_s)``.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    llrs = [_as_llr(b) for b in blocks]
    start = time.perf_counter()
    if workers == 1 and executor is None:
        results = [viterbi_decode(x) for x in llrs]
    elif executor is not None:
        results = list(executor.map(viterbi_decode, llrs))
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(viterbi_decode, llrs))
    tb, ok = _reassemble(results, block_id)
    return tb, ok, time.perf_counter() - start


def split_coded(coded_bits: np.ndarray, payload_bytes: int, max_codeblock_bits: int = DEFAULT_CODEBLOCK_BITS):
    """Cut a concatenated coded stream back into per-block slices."""
    lengths = [2 * (n + TAIL_BITS) for n in segment_lengths(8 * payload_bytes + CRC_BITS, max_codeblock_bits)]
    if sum(lengths) != len(coded_bits):
        raise FramingError(f"expected {sum(lengths)} coded values, got {len(coded_bits)}")
    return np.split(coded_bits, np.cumsum(lengths)[:-1])
