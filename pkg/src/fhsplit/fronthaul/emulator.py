"""DU and RU endpoints exchanging framed fronthaul traffic.

Downlink: the DU builds one transport block per TTI at the offered load,
encodes it and sends either the coded hard bits (S73) or the whole
resource grid of int16 I/Q samples (S72_CBR). Uplink: the RU plays the
radio side (modulate, AWGN, demap), then sends quantised soft bits (S73) or
the received I/Q grid (S72_CBR); the DU decodes every TTI on a thread pool.

Grants are a pure function of the session config, so both endpoints know
each TTI's transport block size without signalling it. The offered load is
user payload; on the fronthaul it costs ``1 / CODE_RATE`` coded bits per
bit. The load-independent E1 signalling of the dimensioning formula is not
emulated, so reports compare against the user-plane part of the demand.

Timing runs in virtual time by default (TTIs back to back, rates computed
against the nominal session length); ``realtime=True`` paces TTIs at 1 ms.
"""

from __future__ import annotations

import enum
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .. import split_calculus as sc
from ..errors import CapacityError, ConfigurationError, FramingError, FronthaulError, SessionError
from ..phy import coding
from ..phy.modem import awgn, demodulate_llr, from_fixed, modulate, noise_variance_for, to_fixed
from ..phy.softbits import SoftBitBlock, default_clip, pack_words, quantize_llr, unpack_words
from .frames import MAX_PAYLOAD, FrameMeta, PayloadKind, chunk, frame_decode, frame_encode
from .transport import DatagramChannel, InProcessChannel

CODE_RATE = Fraction(1, 2)
IQ_SAMPLE_BYTES = 4
_DIR_CODE = {sc.Direction.DL: 0, sc.Direction.UL: 1}


class SplitMode(str, enum.Enum):
    S73 = "S73"
    S72_CBR = "S72_CBR"


class TransportKind(str, enum.Enum):
    INPROC = "inproc"
    UDP = "udp"


def _default_cell():
    return sc.CellConfig(10, o_m=4)


@dataclass(frozen=True)
class SessionConfig:
    """One emulation session. ``offered_load_mbps=None`` means full load."""

    cell: sc.CellConfig = field(default_factory=_default_cell)
    split_mode: SplitMode = SplitMode.S73
    offered_load_mbps: float | None = None
    duration_ms: int = 2000
    snr_db: float = math.inf
    s_bw: int | None = None
    transport: TransportKind = TransportKind.INPROC
    seed: int = 0
    workers: int = 4
    max_codeblock_bits: int = coding.DEFAULT_CODEBLOCK_BITS
    max_frame_payload: int = MAX_PAYLOAD
    realtime: bool = False
    cell_id: int = 1
    port: int = 0

    def __post_init__(self):
        object.__setattr__(self, "split_mode", SplitMode(self.split_mode))
        object.__setattr__(self, "transport", TransportKind(self.transport))
        if self.s_bw is None:
            object.__setattr__(self, "s_bw", self.cell.s_bw)
        if self.duration_ms < 1:
            raise ConfigurationError("session duration must be at least 1 ms")
        if not 2 <= self.s_bw <= 16:
            raise ConfigurationError(f"soft-bit width must lie in [2, 16], got {self.s_bw}")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.max_frame_payload < IQ_SAMPLE_BYTES or self.max_frame_payload > MAX_PAYLOAD:
            raise ConfigurationError(f"max frame payload must lie in [4, {MAX_PAYLOAD}]")
        if self.snr_db != math.inf and not math.isfinite(self.snr_db):
            raise ConfigurationError("SNR must be finite or +inf")

    def layers(self, direction) -> int:
        return self.cell.mimo_layers if sc.Direction(direction) is sc.Direction.DL else 1

    def peak_payload_mbps(self, direction) -> Fraction:
        return sc.applicable_peak(sc.Split.S73, direction, self.cell, CODE_RATE)

    def load(self, direction) -> Fraction:
        peak = self.peak_payload_mbps(direction)
        load = peak if self.offered_load_mbps is None else sc.q(self.offered_load_mbps)
        if load < 0 or load > peak:
            raise CapacityError(
                f"offered load {float(load):g} Mbps outside [0, {float(peak):g}] Mbps "
                f"({sc.Direction(direction).value} payload peak at code rate 1/2)",
                peak,
            )
        return load

    def grid_res(self, direction) -> int:
        """Data resource elements per TTI (all layers)."""
        c = self.cell
        return math.floor(c.n_sc * c.n_sy_psf * (1 - c.gamma)) * self.layers(direction)

    def grants(self, direction) -> list[int]:
        """Transport block bytes per TTI, capped so coded bits fit the grid."""
        bits_per_tti = self.load(direction) * 1000
        cap = coding.max_payload_for(self.grid_res(direction) * self.cell.o_m, self.max_codeblock_bits)
        out = []
        for t in range(self.duration_ms):
            n = math.floor((t + 1) * bits_per_tti / 8) - math.floor(t * bits_per_tti / 8)
            out.append(min(n, cap))
        return out

    def payload(self, direction, tti: int, nbytes: int) -> bytes:
        rng = np.random.default_rng([self.seed, _DIR_CODE[sc.Direction(direction)], tti])
        return rng.bytes(nbytes)

    def noise_rng(self, tti: int):
        return np.random.default_rng([self.seed, 2, tti])

    @property
    def noise_variance(self) -> float:
        # noiseless sessions still need a positive N0 to scale LLRs
        return noise_variance_for(self.snr_db) if math.isfinite(self.snr_db) else 1.0


@dataclass
class BandwidthReport:
    direction: str
    split_mode: str
    duration_ms: int
    offered_load_mbps: float
    achieved_mbps: float
    payload_mbps: float
    overhead_fraction: float
    reference_mbps: float
    per_tti_mbps: list[float] = field(repr=False)
    frames_sent: int = 0
    frames_received: int = 0
    frames_lost: int = 0
    heartbeat_frames: int = 0
    malformed_frames: int = 0
    bytes_sent: int = 0
    bytes_received: int = 0
    payload_bytes_sent: int = 0
    payload_bytes_received: int = 0
    user_bytes: int = 0
    coded_bits: int = 0
    seq_strictly_increasing: bool = True
    transport_blocks: int = 0
    crc_failures: int = 0
    payload_mismatches: int = 0
    decode_latency_ms: dict[str, float] = field(default_factory=dict)
    soft_bit_clip: float | None = None

    @property
    def reference_ratio(self) -> float:
        return self.achieved_mbps / self.reference_mbps if self.reference_mbps else math.nan

    @property
    def hard_bit_bytes(self) -> int:
        """Bytes the coded bits would take as packed hard bits."""
        return (self.coded_bits + 7) // 8

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("per_tti_mbps")
        d["reference_ratio"] = self.reference_ratio
        if self.direction == "UL" and self.hard_bit_bytes:
            d["ul_to_hard_bit_ratio"] = self.payload_bytes_received / self.hard_bit_bytes
        return d


def reference_demand(cfg: SessionConfig, direction) -> Fraction:
    """User-plane fronthaul demand the dimensioning calculus predicts for this session."""
    direction = sc.Direction(direction)
    load = cfg.load(direction)
    if cfg.split_mode is SplitMode.S72_CBR:
        return sc.demand(sc.Split.S72, direction, cfg.cell, load, CODE_RATE).user_plane_mbps
    if direction is sc.Direction.UL:
        # session s_bw may differ from the cell's
        return load / CODE_RATE * cfg.s_bw
    return sc.demand(sc.Split.S73, direction, cfg.cell, load, CODE_RATE).user_plane_mbps


class _Meter:
    """Receive-side counters, touched only by the receiving endpoint's loop."""

    def __init__(self, duration_ms):
        self.per_tti = np.zeros(duration_ms, dtype=np.int64)
        self.frames = 0
        self.heartbeats = 0
        self.malformed = 0
        self.bytes = 0
        self.payload_bytes = 0
        self.last_seq = None
        self.lost = 0
        self.monotonic = True

    def seq(self, seq):
        if self.last_seq is not None:
            if seq <= self.last_seq:
                self.monotonic = False
            else:
                self.lost += seq - self.last_seq - 1
        self.last_seq = seq


class _Sender:
    """Paces TTIs and frames payloads onto the channel."""

    def __init__(self, cfg: SessionConfig, channel, uplink: bool):
        self.cfg = cfg
        self.channel = channel
        self.uplink = uplink
        self.seq = 0
        self.frames = 0
        self.bytes = 0
        self.payload_bytes = 0
        self.error = None

    def _send(self, kind, tti, payload=b""):
        c = self.cfg
        meta = FrameMeta(self.seq, tti, self.uplink, c.split_mode is SplitMode.S72_CBR,
                         c.cell_id, c.cell.o_m, c.s_bw)
        wire = frame_encode(kind, meta, payload)
        self.channel.send(wire)
        self.seq += 1
        self.frames += 1
        self.bytes += len(wire)
        self.payload_bytes += len(payload)

    def run(self, build):
        """``build(tti) -> (kind, payload bytes, alignment)`` or ``None`` for an idle TTI."""
        try:
            t0 = time.perf_counter()
            for tti in range(self.cfg.duration_ms):
                if self.cfg.realtime:
                    delay = t0 + tti * 1e-3 - time.perf_counter()
                    if delay > 0:
                        time.sleep(delay)
                built = build(tti)
                if built is not None:
                    kind, payload, align = built
                    for piece in chunk(payload, self.cfg.max_frame_payload, align):
                        self._send(kind, tti, piece)
                self._send(PayloadKind.HEARTBEAT, tti)
        except BaseException as exc:  # surfaced by the session driver
            self.error = exc


def _open_channel(cfg: SessionConfig):
    if cfg.transport is TransportKind.UDP:
        return DatagramChannel(port=cfg.port)
    return InProcessChannel()


def _receive(cfg: SessionConfig, channel, meter: _Meter, on_tti, sender_thread, idle_timeout=2.0):
    """Receive loop; ``on_tti(abs_tti, pieces)`` fires at each heartbeat."""
    pending: dict[int, list[bytes]] = {}
    last_abs = -1
    while meter.heartbeats < cfg.duration_ms:
        data = channel.recv(timeout=0.1)
        if data is None:
            if not sender_thread.is_alive():
                data = channel.recv(timeout=idle_timeout if not channel.lossless else 0.5)
                if data is None:
                    break
            else:
                continue
        try:
            frame = frame_decode(data)
        except FramingError:
            meter.malformed += 1
            continue
        meter.frames += 1
        meter.bytes += len(data)
        meter.payload_bytes += len(frame.payload)
        meter.seq(frame.meta.seq)
        abs_tti = last_abs + 1 + ((frame.meta.tti_id - last_abs - 1) & 0xFFFF)
        if 0 <= abs_tti < cfg.duration_ms:
            meter.per_tti[abs_tti] += len(data)
        if frame.kind is PayloadKind.HEARTBEAT:
            meter.heartbeats += 1
            pieces = pending.pop(frame.meta.tti_id, [])
            pending.clear()  # anything older lost its heartbeat
            on_tti(abs_tti, pieces)
            last_abs = abs_tti
        else:
            pending.setdefault(frame.meta.tti_id, []).append(frame.payload)


def _report(cfg, direction, sender: _Sender, meter: _Meter, **extra) -> BandwidthReport:
    to_mbps = 8 / (cfg.duration_ms * 1000)
    achieved = meter.bytes * to_mbps
    payload = meter.payload_bytes * to_mbps
    return BandwidthReport(
        direction=direction.value,
        split_mode=cfg.split_mode.value,
        duration_ms=cfg.duration_ms,
        offered_load_mbps=float(cfg.load(direction)),
        achieved_mbps=achieved,
        payload_mbps=payload,
        overhead_fraction=(achieved - payload) / achieved if achieved else 0.0,
        reference_mbps=float(reference_demand(cfg, direction)),
        per_tti_mbps=(meter.per_tti * 8 / 1000).tolist(),
        frames_sent=sender.frames,
        frames_received=meter.frames,
        frames_lost=sender.frames - meter.frames - meter.malformed,
        heartbeat_frames=meter.heartbeats,
        malformed_frames=meter.malformed,
        bytes_sent=sender.bytes,
        bytes_received=meter.bytes,
        payload_bytes_sent=sender.payload_bytes,
        payload_bytes_received=meter.payload_bytes,
        seq_strictly_increasing=meter.monotonic,
        **extra,
    )


def _session(cfg, direction, build, on_tti, meter):
    channel = _open_channel(cfg)
    sender = _Sender(cfg, channel, uplink=direction is sc.Direction.UL)
    name = "du-tx" if direction is sc.Direction.DL else "ru-tx"
    thread = threading.Thread(target=sender.run, args=(build,), name=name, daemon=True)
    try:
        thread.start()
        _receive(cfg, channel, meter, on_tti, thread)
        thread.join()
    finally:
        channel.close()
    if sender.error is not None:
        if isinstance(sender.error, FronthaulError):
            raise sender.error
        raise SessionError(f"sender failed: {sender.error!r}") from sender.error
    return sender


def _encode_tti(cfg, direction, tti, nbytes):
    tb = coding.TransportBlock.from_payload(cfg.payload(direction, tti, nbytes), tti)
    blocks = coding.encode(tb, cfg.max_codeblock_bits)
    return np.concatenate([b.coded_bits for b in blocks])


def run_downlink(cfg: SessionConfig) -> BandwidthReport:
    """DU -> RU: hard coded bits (S73) or a constant I/Q grid (S72_CBR)."""
    direction = sc.Direction.DL
    grants = cfg.grants(direction)
    n_re = cfg.grid_res(direction)
    totals = {"user_bytes": 0, "coded_bits": 0, "transport_blocks": 0}

    def build(tti):
        n = grants[tti]
        coded = _encode_tti(cfg, direction, tti, n) if n else np.zeros(0, np.uint8)
        if n:
            totals["user_bytes"] += n
            totals["coded_bits"] += len(coded)
            totals["transport_blocks"] += 1
        if cfg.split_mode is SplitMode.S73:
            if not n:
                return None
            return PayloadKind.HARD_BITS, np.packbits(coded).tobytes(), 1
        grid = np.zeros(n_re, dtype=np.complex128)
        if n:
            sym = modulate(coded, cfg.cell.o_m).symbols
            grid[: len(sym)] = sym
        return PayloadKind.IQ, to_fixed(grid).astype(">i2").tobytes(), IQ_SAMPLE_BYTES

    meter = _Meter(cfg.duration_ms)
    sender = _session(cfg, direction, build, lambda t, p: None, meter)
    return _report(cfg, direction, sender, meter, **totals)


def run_uplink(cfg: SessionConfig) -> BandwidthReport:
    """RU -> DU: soft bits (S73) or received I/Q (S72_CBR), decoded at the DU."""
    direction = sc.Direction.UL
    grants = cfg.grants(direction)
    n_re = cfg.grid_res(direction)
    o_m, n0 = cfg.cell.o_m, cfg.noise_variance
    state = {"clip": None}
    totals = {"user_bytes": 0, "coded_bits": 0, "transport_blocks": 0}

    def build(tti):
        n = grants[tti]
        if n:
            coded = _encode_tti(cfg, direction, tti, n)
            totals["user_bytes"] += n
            totals["coded_bits"] += len(coded)
            totals["transport_blocks"] += 1
            sym = modulate(coded, o_m).symbols
        else:
            coded = sym = np.zeros(0)
        if cfg.split_mode is SplitMode.S72_CBR:
            grid = np.zeros(n_re, dtype=np.complex128)
            grid[: len(sym)] = sym
            rx = awgn(grid, cfg.snr_db, cfg.noise_rng(tti))
            return PayloadKind.IQ, to_fixed(rx).astype(">i2").tobytes(), IQ_SAMPLE_BYTES
        if not n:
            return None
        rx = awgn(sym, cfg.snr_db, cfg.noise_rng(tti))
        llr = demodulate_llr(rx, o_m, n0)[: len(coded)]
        if state["clip"] is None:
            state["clip"] = default_clip(llr)
        soft = quantize_llr(llr, cfg.s_bw, state["clip"])
        return PayloadKind.SOFT_BITS, pack_words(soft.llr_words, cfg.s_bw), 1

    stats = {"crc_failures": 0, "payload_mismatches": 0}
    latencies: list[float] = []
    pool = ThreadPoolExecutor(max_workers=cfg.workers, thread_name_prefix="du-decode")

    def on_tti(tti, pieces):
        if not 0 <= tti < cfg.duration_ms or not grants[tti]:
            return
        n = grants[tti]
        n_coded = coding.coded_length(n, cfg.max_codeblock_bits)
        data = b"".join(pieces)
        try:
            if cfg.split_mode is SplitMode.S73:
                words = unpack_words(data, cfg.s_bw, n_coded)
                blocks = [SoftBitBlock(w, cfg.s_bw, 1.0)
                          for w in coding.split_coded(words, n, cfg.max_codeblock_bits)]
            else:
                n_sym = math.ceil(n_coded / o_m)
                rx = from_fixed(np.frombuffer(data, dtype=">i2"))
                if len(rx) < n_sym:
                    raise ValueError("short I/Q grid")
                llr = demodulate_llr(rx[:n_sym], o_m, n0)[:n_coded]
                blocks = coding.split_coded(llr, n, cfg.max_codeblock_bits)
        except (ValueError, FramingError):
            stats["crc_failures"] += 1  # frames of this TTI went missing
            return
        tb, ok, wall = coding.decode_parallel(blocks, cfg.workers, tti, executor=pool)
        latencies.append(wall * 1000)
        if not ok:
            stats["crc_failures"] += 1
        elif tb.payload != cfg.payload(direction, tti, n):
            stats["payload_mismatches"] += 1

    meter = _Meter(cfg.duration_ms)
    try:
        sender = _session(cfg, direction, build, on_tti, meter)
    finally:
        pool.shutdown()
    lat = np.asarray(latencies)
    percentiles = {f"p{p}": float(np.percentile(lat, p)) for p in (50, 90, 99)} if lat.size else {}
    return _report(cfg, direction, sender, meter, decode_latency_ms=percentiles,
                   soft_bit_clip=state["clip"], **stats, **totals)


@dataclass(frozen=True)
class SweepRow:
    load_mbps: float
    dl_mbps: float
    ul_mbps: float
    dl_payload_mbps: float
    ul_payload_mbps: float
    ul_crc_failures: int


def sweep_load(cfg: SessionConfig, load_points) -> list[SweepRow]:
    """Run one downlink and one uplink session per offered load."""
    rows = []
    for load in load_points:
        point = SessionConfig(**{**cfg.__dict__, "offered_load_mbps": load})
        dl, ul = run_downlink(point), run_uplink(point)
        rows.append(SweepRow(float(sc.q(load)), dl.achieved_mbps, ul.achieved_mbps,
                             dl.payload_mbps, ul.payload_mbps, ul.crc_failures))
    return rows
