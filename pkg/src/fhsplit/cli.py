"""Command-line front end: ``fhsplit <subcommand> [options]``.

Every subcommand prints a human-readable table by default. ``--format csv``
or ``--format summary`` (JSON) switch standard output; ``--out DIR`` (or the
``FHSPLIT_OUT`` environment variable) additionally writes ``<cmd>.csv`` and
``<cmd>.json``. The JSON embeds a run manifest; apart from its
``timestamps`` entry it is byte-identical across reruns with the same
arguments.

Exit codes: 0 ok, 2 configuration error, 3 infeasible or over capacity,
4 transport/session error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

from . import __version__
from . import latency_placement as lp
from . import split_calculus as sc
from . import traffic_mux as tm
from .errors import ConfigurationError, FronthaulError

OUT_ENV = "FHSPLIT_OUT"
MODULATION_NAMES = {2: "QPSK", 4: "16QAM", 6: "64QAM", 8: "256QAM"}

# config-file key -> CellConfig field
CELL_KEYS = {
    "bandwidth": ("cell_bandwidth_mhz", float),
    "cell_bandwidth_mhz": ("cell_bandwidth_mhz", float),
    "o_m": ("o_m", int),
    "layers": ("mimo_layers", int),
    "mimo_layers": ("mimo_layers", int),
    "n_ant": ("n_ant", int),
    "n_rb": ("n_rb", int),
    "n_sy_psf": ("n_sy_psf", int),
    "gamma": ("gamma", Fraction),
    "iq_bitwidth": ("iq_bitwidth", int),
    "s_bw": ("s_bw", int),
    "e1_mbps": ("e1_mbps", Fraction),
}


def load_config(path) -> dict:
    """Read ``key = value`` lines (``#`` comments, optional ``[section]`` headers)."""
    text = Path(path).read_text()
    if not text.lstrip().startswith("["):
        text = "[cell]\n" + text
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key not in CELL_KEYS:
                raise ConfigurationError(f"{path}: unknown key {key!r}")
            name, conv = CELL_KEYS[key]
            try:
                values[name] = conv(raw)
            except ValueError as exc:
                raise ConfigurationError(f"{path}: bad value for {key}: {raw!r}") from exc
    return values


def _cell_from_args(args, **defaults) -> sc.CellConfig:
    values = dict(defaults)
    if args.config:
        values.update(load_config(args.config))
    flags = {
        "cell_bandwidth_mhz": args.bw, "o_m": args.om, "mimo_layers": args.layers,
        "n_ant": args.ant, "n_rb": args.n_rb, "gamma": args.gamma,
        "iq_bitwidth": args.iq_bits, "s_bw": args.s_bw, "e1_mbps": args.e1,
    }
    values.update({k: v for k, v in flags.items() if v is not None})
    return sc.CellConfig(**values)


def _cell_dict(cell: sc.CellConfig) -> dict:
    d = asdict(cell)
    d["gamma"] = float(cell.gamma)
    d["e1_mbps"] = float(cell.e1_mbps)
    d["n_sc"] = cell.n_sc
    return d


def _jsonable(value):
    if isinstance(value, Fraction):
        return float(value)
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _format_table(rows: list[dict], columns: list[str]) -> str:
    cells = [[str(r.get(c, "")) for c in columns] for r in rows]
    widths = [max(len(c), *(len(row[i]) for row in cells)) if cells else len(c) for i, c in enumerate(columns)]
    lines = ["  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    return "\n".join(lines)


def _csv_text(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _jsonable(v) for k, v in row.items()})
    return buf.getvalue()


class Result:
    """What a subcommand hands back to the emitter."""

    def __init__(self, rows, columns, summary=None, notes=(), config=None, extra_csv=None):
        self.rows = rows
        self.columns = columns
        self.summary = summary or {}
        self.notes = list(notes)
        self.config = config or {}
        self.extra_csv = extra_csv or {}


def _display_rows(rows, columns):
    return [{c: (sc.round_display(r[c], 3) if isinstance(r.get(c), (float, Fraction)) else r.get(c, ""))
             for c in columns} for r in rows]


# ---------------------------------------------------------------- commands

def cmd_dimension(args) -> Result:
    cell = _cell_from_args(args)
    load = None if args.load is None else sc.q(args.load)
    rows = []
    for d in sc.demand_table(cell, load, args.code_rate):
        rows.append({
            "split": d.split.value,
            "direction": d.direction.value,
            "rate_mbps": d.rate_mbps,
            "mbps": sc.round_display(d.rate_mbps, 1),
            "gbps": sc.round_display(d.rate_mbps / 1000, 3),
            "load_dependent": d.load_dependent,
        })
    summary = {
        "peak_dl_mbps": sc.peak_rate_dl(cell),
        "peak_ul_mbps": sc.peak_rate_ul(cell),
        "offered_load_mbps": "peak" if load is None else load,
        "code_rate": sc.q(args.code_rate),
    }
    return Result(rows, ["split", "direction", "mbps", "gbps", "load_dependent"], summary,
                  config={"cell": _cell_dict(cell), "load": args.load, "code_rate": args.code_rate})


def cmd_gain_table(args) -> Result:
    rows = []
    for o_m in (2, 4, 6, 8):
        row = {"o_m": o_m, "modulation": MODULATION_NAMES[o_m]}
        for s_bw in (8, 5, 4):
            exact = sc.gain_ratio(sc.Direction.UL, o_m, s_bw)
            row[f"ul_sbw{s_bw}_exact"] = exact
            row[f"ul_sbw{s_bw}"] = sc.round_display(exact, 1)
        row["dl_exact"] = sc.gain_ratio(sc.Direction.DL, o_m)
        row["dl"] = sc.round_display(row["dl_exact"], 1)
        rows.append(row)
    return Result(rows, ["o_m", "modulation", "ul_sbw8", "ul_sbw5", "ul_sbw4", "dl"],
                  notes=["ratio of 7.2 to 7.3 fronthaul rate (I/Q bitwidth 32)"])


def cmd_capacity_table(args) -> Result:
    table = sc.capacity_table(o_m=args.table_om, n_ant=args.table_ant)
    rows, notes = [], []
    for name, by_bw in table.items():
        row = {"split": name}
        for bw, value in by_bw.items():
            row[f"{bw:g}"] = sc.round_display(value, 1)
            row[f"{bw:g}_exact"] = value
            if (name, bw) in sc.CAPACITY_TABLE_ERRATA:
                row[f"{bw:g}"] = f"{sc.round_display(value, 1)}*"
                notes.append(
                    f"* {name} at {bw:g} MHz: formula gives {sc.round_display(value, 1)}; "
                    f"the published table prints {float(sc.CAPACITY_TABLE_ERRATA[name, bw])} (typo)"
                )
        rows.append(row)
    notes.append("3 MHz column uses 144 subcarriers, as in the published table")
    return Result(rows, ["split"] + [f"{bw:g}" for bw in sc.CAPACITY_BANDWIDTHS], notes=notes,
                  config={"o_m": args.table_om, "n_ant": args.table_ant, "gamma": 0})


def cmd_peak_table(args) -> Result:
    rows, notes = [], []
    for layers in (1, 2, 4, 8):
        for o_m in (6, 8):
            row = {"direction": "DL", "layers": layers, "o_m": o_m}
            for bw in (10, 20, 100):
                value = sc.peak_rate_dl(sc.CellConfig(bw, o_m=o_m, mimo_layers=layers))
                row[f"{bw}MHz"] = sc.round_display(value, 1)
                if (layers, o_m, float(bw)) in sc.PEAK_TABLE_ERRATA:
                    printed = float(sc.PEAK_TABLE_ERRATA[layers, o_m, float(bw)])
                    row[f"{bw}MHz"] = f"{sc.round_display(value, 1)}*"
                    notes.append(f"* {layers} layers, O_m={o_m}, {bw} MHz: the published table prints {printed}")
            rows.append(row)
    for o_m in (4, 6):
        row = {"direction": "UL", "layers": 1, "o_m": o_m}
        for bw in (10, 20, 100):
            row[f"{bw}MHz"] = sc.round_display(sc.peak_rate_ul(sc.CellConfig(bw, o_m=o_m)), 1)
        rows.append(row)
    notes.append("gamma = 0.25; 100 MHz assumes 6000 subcarriers")
    return Result(rows, ["direction", "layers", "o_m", "10MHz", "20MHz", "100MHz"], notes=notes)


def cmd_placement(args) -> Result:
    budget = lp.LatencyBudget(
        harq_rtt_ms=args.rtt_ms, dl_processing_ms=args.dl_ms, ul_processing_ms=args.ul_ms,
        propagation_us_per_km=args.us_per_km, fronthaul_share=args.share,
        oneway_allowance_us=args.oneway_us,
    )
    report = lp.placement_report(budget, args.extra_us)
    if args.baseline_us is not None:
        gain = lp.distance_gain_from_speedup(args.baseline_us, args.compression, budget.propagation_us_per_km)
        report["speedup_extra_km"] = float(gain)
        report["speedup_extra_km_display"] = sc.round_display(gain, 1)
    rows = [{"quantity": k, "value": v} for k, v in report.items()]
    return Result(rows, ["quantity", "value"], report, config=_jsonable(vars(budget)))


def _load_points(text, peak):
    points = []
    for token in text.split(","):
        token = token.strip()
        points.append(peak * sc.q(token[:-1]) / 100 if token.endswith("%") else sc.q(token))
    return points


def cmd_emulate(args) -> Result:
    from .fronthaul import emulator as em

    cell = _cell_from_args(args, cell_bandwidth_mhz=10, o_m=4)
    cfg = em.SessionConfig(
        cell=cell, split_mode=args.mode, offered_load_mbps=args.load,
        duration_ms=args.duration_ms, snr_db=args.snr_db, s_bw=args.soft_bits,
        transport=args.transport, seed=args.seed, workers=args.workers,
        max_frame_payload=args.frame_payload, realtime=args.realtime, port=args.port,
    )
    config = {"cell": _cell_dict(cell), **{k: v for k, v in vars(cfg).items() if k != "cell"}}
    if args.sweep:
        peak = cfg.peak_payload_mbps(sc.Direction.UL)
        rows = [asdict(r) for r in em.sweep_load(cfg, _load_points(args.sweep, peak))]
        columns = ["load_mbps", "dl_mbps", "ul_mbps", "dl_payload_mbps", "ul_payload_mbps", "ul_crc_failures"]
        return Result(rows, columns, {"sweep_points": len(rows)}, config=_jsonable(config))
    reports = []
    if args.direction in ("dl", "both"):
        reports.append(em.run_downlink(cfg))
    if args.direction in ("ul", "both"):
        reports.append(em.run_uplink(cfg))
    rows = [r.summary() for r in reports]
    per_tti = [{"tti": t, **{f"{r.direction}_mbps": r.per_tti_mbps[t] for r in reports}}
               for t in range(cfg.duration_ms)]
    columns = ["direction", "split_mode", "offered_load_mbps", "achieved_mbps", "payload_mbps",
               "reference_mbps", "overhead_fraction", "crc_failures", "frames_lost"]
    tti_columns = ["tti"] + [f"{r.direction}_mbps" for r in reports]
    return Result(rows, columns, {r.direction: r.summary() for r in reports},
                  config=_jsonable(config), extra_csv={"emulate_tti": (per_tti, tti_columns)})


def cmd_mux(args) -> Result:
    if args.peak is not None:
        peak = args.peak
        config = {}
    else:
        cell = _cell_from_args(args)
        peak = float(sc.peak_rate_dl(cell))
        config = {"cell": _cell_dict(cell)}
    profile = tm.TrafficProfile(args.model, args.activity, peak, args.seed)
    report = tm.mux_gain(args.cells, profile, args.percentile, args.trials, args.workers)
    summary = asdict(report)
    histogram = summary.pop("histogram")
    rows = [{k: summary[k] for k in ("n_cells", "percentile", "percentile_demand_mbps",
                                     "sum_peaks_mbps", "mux_gain", "trials")}]
    notes = [report.warning] if report.warning else []
    hist_rows = [{"aggregate_mbps": v, "count": c} for v, c in histogram]
    return Result(rows, list(rows[0]), summary, notes,
                  config={**config, **{k: _jsonable(v) for k, v in asdict(profile).items()},
                          "cells": args.cells, "trials": args.trials},
                  extra_csv={"mux_histogram": (hist_rows, ["aggregate_mbps", "count"])})


# ---------------------------------------------------------------- plumbing

def _add_cell_flags(p):
    g = p.add_argument_group("cell")
    g.add_argument("--bw", type=float, help="cell bandwidth in MHz")
    g.add_argument("--om", type=int, help="modulation order (bits/symbol)")
    g.add_argument("--layers", type=int, help="MIMO layers")
    g.add_argument("--ant", type=int, help="antenna count")
    g.add_argument("--n-rb", type=int, help="override resource blocks (0 for an empty grid)")
    g.add_argument("--gamma", type=Fraction, help="control overhead fraction")
    g.add_argument("--iq-bits", type=int, help="bits per I/Q pair")
    g.add_argument("--s-bw", type=int, help="soft-bit width")
    g.add_argument("--e1", type=Fraction, help="E1 overhead in Mbps")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value cell configuration file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help=f"output directory (default ${OUT_ENV})")
    common.add_argument("--format", choices=("table", "csv", "summary"), default="table")

    parser = argparse.ArgumentParser(prog="fhsplit", description=__doc__.splitlines()[0], parents=[common])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dimension", parents=[common], help="fronthaul demand for every split")
    _add_cell_flags(p)
    p.add_argument("--load", type=Fraction, help="offered load in Mbps (default: peak)")
    p.add_argument("--code-rate", type=Fraction, default=Fraction(1))
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("gain-table", parents=[common], help="7.2 / 7.3 efficiency ratios")
    p.set_defaults(func=cmd_gain_table)

    p = sub.add_parser("capacity-table", parents=[common], help="FS-I..FS-VII capacity by bandwidth")
    p.add_argument("--table-om", type=int, default=6)
    p.add_argument("--table-ant", type=int, default=2)
    p.set_defaults(func=cmd_capacity_table)

    p = sub.add_parser("peak-table", parents=[common], help="peak user data rates")
    p.set_defaults(func=cmd_peak_table)

    p = sub.add_parser("placement", parents=[common], help="maximum RU-DU distance")
    p.add_argument("--rtt-ms", type=Fraction, default=Fraction(8))
    p.add_argument("--dl-ms", type=Fraction, default=Fraction(1))
    p.add_argument("--ul-ms", type=Fraction, default=Fraction(2))
    p.add_argument("--us-per-km", type=Fraction, default=Fraction(5))
    p.add_argument("--share", type=Fraction, default=Fraction(1, 10),
                   help="share of the post-processing remainder granted one way")
    p.add_argument("--oneway-us", type=Fraction, help="explicit one-way allowance (overrides --share)")
    p.add_argument("--extra-us", type=Fraction, default=Fraction(0), help="fixed one-way delays")
    p.add_argument("--baseline-us", type=Fraction, help="processing time before speed-up")
    p.add_argument("--compression", type=Fraction, default=Fraction(7, 10))
    p.set_defaults(func=cmd_placement)

    p = sub.add_parser("emulate", parents=[common], help="run DU/RU fronthaul sessions")
    _add_cell_flags(p)
    p.add_argument("--mode", choices=("S73", "S72_CBR"), default="S73")
    p.add_argument("--direction", choices=("dl", "ul", "both"), default="both")
    p.add_argument("--load", type=float, help="offered user payload in Mbps (default: full load)")
    p.add_argument("--sweep", help="comma-separated loads in Mbps or percent of peak, e.g. 0,25%%,50%%,100%%")
    p.add_argument("--duration-ms", type=int, default=2000)
    p.add_argument("--snr-db", type=float, default=math.inf)
    p.add_argument("--soft-bits", type=int, help="soft-bit width for the session")
    p.add_argument("--transport", choices=("inproc", "udp"), default="inproc")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--frame-payload", type=int, default=8950)
    p.add_argument("--realtime", action="store_true")
    p.set_defaults(func=cmd_emulate)

    p = sub.add_parser("mux", parents=[common], help="statistical multiplexing gain")
    _add_cell_flags(p)
    p.add_argument("--cells", type=int, default=10)
    p.add_argument("--model", choices=[m.value for m in tm.LoadModel], default="on_off")
    p.add_argument("--activity", type=float, default=0.7)
    p.add_argument("--percentile", type=float, default=95.0)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--peak", type=float, help="per-cell peak in Mbps (default: cell DL peak)")
    p.set_defaults(func=cmd_mux)
    return parser


def _manifest(args, result: Result, started: str) -> dict:
    return {
        "subcommand": args.command,
        "configuration": _jsonable(result.config),
        "seed": args.seed,
        "tool_version": __version__,
        "timestamps": {"started": started, "finished": datetime.now(timezone.utc).isoformat()},
    }


def _structured(args, result: Result, started: str) -> dict:
    return {
        "manifest": _manifest(args, result, started),
        "summary": _jsonable(result.summary),
        "rows": _jsonable(result.rows),
        "notes": result.notes,
    }


def emit(args, result: Result, started: str, stdout=None):
    stdout = stdout or sys.stdout
    structured = _structured(args, result, started)
    if args.format == "summary":
        stdout.write(json.dumps(structured, indent=2, sort_keys=True) + "\n")
    elif args.format == "csv":
        stdout.write(_csv_text(result.rows, result.columns))
    else:
        stdout.write(_format_table(_display_rows(result.rows, result.columns), result.columns) + "\n")
        for note in result.notes:
            stdout.write(note + "\n")
    out = args.out or os.environ.get(OUT_ENV)
    if out:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        name = args.command.replace("-", "_")
        all_columns = list(dict.fromkeys(k for r in result.rows for k in r))
        (out / f"{name}.csv").write_text(_csv_text(result.rows, all_columns))
        (out / f"{name}.json").write_text(json.dumps(structured, indent=2, sort_keys=True) + "\n")
        for extra, (rows, columns) in result.extra_csv.items():
            (out / f"{extra}.csv").write_text(_csv_text(rows, columns))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = datetime.now(timezone.utc).isoformat()
    try:
        result = args.func(args)
        emit(args, result, started)
    except FronthaulError as exc:
        print(f"fhsplit {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        print(f"fhsplit {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
