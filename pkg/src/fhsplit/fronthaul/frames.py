"""Wire format of fronthaul frames.

Fixed 16-byte header, network byte order::

    offset  size  field
    0       2     magic 0xF7A1
    2       1     version (1)
    3       1     flags: bit0 direction (0 DL, 1 UL), bit1 split (0 S73,
                  1 S72_CBR), bit2 heartbeat, bits 3-7 zero
    4       4     seq, per direction, strictly increasing
    8       2     tti_id (TTI counter modulo 2**16)
    10      2     cell_id
    12      2     payload_len
    14      2     meta: bits 0-3 modulation order, bits 4-7 soft-bit width
                  (0 encodes 16), bits 8-15 zero

Payloads: hard bits are packed MSB first; soft bits are ``s_bw``-bit two's
complement words packed MSB first; I/Q is interleaved big-endian int16 I, Q.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

from ..errors import FramingError

MAGIC = 0xF7A1
VERSION = 1
HEADER = struct.Struct("!HBBIHHHH")
HEADER_LEN = HEADER.size
MAX_PAYLOAD = 8950  # 9000-byte jumbo frame minus Ethernet/IP/UDP and our header

FLAG_UL = 0x01
FLAG_CBR = 0x02
FLAG_HEARTBEAT = 0x04
_FLAG_MASK = FLAG_UL | FLAG_CBR | FLAG_HEARTBEAT


class PayloadKind(str, enum.Enum):
    HARD_BITS = "hard_bits"
    SOFT_BITS = "soft_bits"
    IQ = "iq"
    HEARTBEAT = "heartbeat"


@dataclass(frozen=True)
class FrameMeta:
    seq: int
    tti_id: int
    uplink: bool = False
    cbr: bool = False
    cell_id: int = 0
    o_m: int = 4
    s_bw: int = 8


@dataclass(frozen=True)
class FronthaulFrame:
    kind: PayloadKind
    meta: FrameMeta
    payload: bytes = b""

    @property
    def wire_len(self) -> int:
        return HEADER_LEN + len(self.payload)


def _check_kind(kind: PayloadKind, meta: FrameMeta, offset=None):
    if kind is PayloadKind.HARD_BITS and (meta.uplink or meta.cbr):
        raise FramingError("hard bits travel downlink in 7.3 mode only", offset)
    if kind is PayloadKind.SOFT_BITS and (not meta.uplink or meta.cbr):
        raise FramingError("soft bits travel uplink in 7.3 mode only", offset)
    if kind is PayloadKind.IQ and not meta.cbr:
        raise FramingError("I/Q payloads belong to CBR mode", offset)


def frame_encode(kind: PayloadKind, meta: FrameMeta, payload: bytes = b"") -> bytes:
    kind = PayloadKind(kind)
    _check_kind(kind, meta)
    if kind is PayloadKind.HEARTBEAT and payload:
        raise FramingError("heartbeat frames carry no payload")
    if len(payload) > MAX_PAYLOAD:
        raise FramingError(f"payload of {len(payload)} bytes exceeds {MAX_PAYLOAD}")
    if meta.o_m not in range(16) or meta.s_bw not in range(1, 17):
        raise FramingError("modulation order or soft-bit width does not fit the meta field")
    flags = (
        (FLAG_UL if meta.uplink else 0)
        | (FLAG_CBR if meta.cbr else 0)
        | (FLAG_HEARTBEAT if kind is PayloadKind.HEARTBEAT else 0)
    )
    meta_word = (meta.o_m & 0xF) | ((meta.s_bw & 0xF) << 4)
    header = HEADER.pack(
        MAGIC, VERSION, flags, meta.seq & 0xFFFFFFFF, meta.tti_id & 0xFFFF,
        meta.cell_id & 0xFFFF, len(payload), meta_word,
    )
    return header + bytes(payload)


def frame_decode(buf: bytes) -> FronthaulFrame:
    if len(buf) < HEADER_LEN:
        raise FramingError(f"truncated header: {len(buf)} of {HEADER_LEN} bytes", len(buf))
    magic, version, flags, seq, tti_id, cell_id, length, meta_word = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FramingError(f"bad magic 0x{magic:04X}", 0)
    if version != VERSION:
        raise FramingError(f"unsupported version {version}", 2)
    if flags & ~_FLAG_MASK:
        raise FramingError(f"reserved flag bits set: 0x{flags:02X}", 3)
    if meta_word >> 8:
        raise FramingError("reserved meta bits set", 14)
    if len(buf) - HEADER_LEN != length:
        raise FramingError(
            f"payload_len says {length} bytes but {len(buf) - HEADER_LEN} follow", 12
        )
    uplink, cbr = bool(flags & FLAG_UL), bool(flags & FLAG_CBR)
    if flags & FLAG_HEARTBEAT:
        kind = PayloadKind.HEARTBEAT
        if length:
            raise FramingError("heartbeat frame with payload", 12)
    elif cbr:
        kind = PayloadKind.IQ
    else:
        kind = PayloadKind.SOFT_BITS if uplink else PayloadKind.HARD_BITS
    s_bw = (meta_word >> 4) & 0xF or 16
    meta = FrameMeta(seq, tti_id, uplink, cbr, cell_id, meta_word & 0xF, s_bw)
    return FronthaulFrame(kind, meta, bytes(buf[HEADER_LEN:]))


def chunk(payload: bytes, max_payload: int = MAX_PAYLOAD, align: int = 1) -> list[bytes]:
    """Split ``payload`` into frame-sized pieces whose lengths are multiples of ``align``."""
    size = max_payload - max_payload % align
    if size <= 0:
        raise ValueError("max_payload smaller than the alignment")
    return [payload[i:i + size] for i in range(0, len(payload), size)]
