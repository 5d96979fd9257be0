"""Command line front end: simulate | compare | derive | audit."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace

from .config import (ConfigError, PRESETS, parse_config, preset_config,
                     serialize, with_overrides)
from .energy import (EnergyParams, PacketSpec, battery_energy, packet_energy,
                     packet_tx_time)
from .linkbudget import (RadioParams, max_range, quarter_wave_height,
                         watts_to_dbm, wavelength)
from .simcore import Simulation, SimulationError, average_split
from .topology import ValidationError

CSV_COLUMNS = ("seed", "mode", "generated", "delivered", "delivery_ratio",
               "discoveries", "avg_tx_j", "avg_rx_j", "avg_idle_j",
               "avg_sleep_j", "avg_total_j", "energy_per_delivered_j",
               "route_sent_counts", "partition_time_s")

MEAN_COLUMNS = ("generated", "delivered", "delivery_ratio", "discoveries",
                "avg_tx_j", "avg_rx_j", "avg_idle_j", "avg_sleep_j",
                "avg_total_j")


def _load_config(args):
    if args.preset:
        cfg = preset_config(args.preset)
    elif args.config:
        cfg = parse_config(args.config)
    else:
        raise ConfigError("pass a config file or --preset")
    return cfg


def _add_config_args(sub):
    sub.add_argument("config", nargs="?", help="config file (key = value)")
    sub.add_argument("--preset", choices=sorted(PRESETS),
                     help="start from a built-in scenario instead of a file")


# -- simulate -------------------------------------------------------------------

def _cmd_simulate(args):
    cfg = with_overrides(_load_config(args), seed=args.seed, mode=args.mode)
    sim = Simulation(cfg, trace=args.trace is not None)
    for warning in sim.validation_warnings:
        print("warning: %s" % warning, file=sys.stderr)
    stats = sim.run()
    if args.trace is not None:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write("\n".join(sim.trace_lines) + "\n")
    if args.json:
        print(json.dumps(stats.to_dict(), sort_keys=True))
        return 0
    print("mode = %s" % cfg.routing.mode)
    print("seed = %d" % cfg.sim.seed)
    print("generated = %d" % stats.generated)
    print("delivered = %d" % stats.delivered)
    print("delivery_ratio = %r" % stats.delivery_ratio)
    print("discoveries = %d" % stats.discoveries)
    print("partition_time_s = %s" %
          ("none" if stats.partition_time is None else repr(stats.partition_time)))
    for rec in stats.routes:
        print("route rid=%d seq=%d path=%s sent=%d delivered=%d reason=%s" %
              (rec.rid, rec.seq, "-".join(str(n) for n in rec.path), rec.sent,
               rec.delivered, rec.reason))
    for key in ("tx", "rx", "idle", "sleep", "total"):
        print("avg_%s_j = %r" % (key, stats.avg[key]))
    return 0


# -- compare --------------------------------------------------------------------

def _parse_seeds(spec):
    seeds = []
    for part in spec.split(","):
        part = part.strip()
        if ".." in part:
            lo, _, hi = part.partition("..")
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ConfigError("bad seed range %r" % part)
            seeds.extend(range(lo, hi + 1))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise ConfigError("no seeds given")
    return seeds


def total_consumed(stats) -> float:
    total = 0.0
    for i in sorted(stats.per_node):
        node = stats.per_node[i]
        total += node["tx"] + node["rx"] + node["idle"] + node["sleep"]
    return total


def run_experiment(cfg, seeds, modes):
    """One row per (seed, mode) run plus a trailing mean row per mode."""
    rows = []
    for seed in seeds:
        for mode in modes:
            run_cfg = replace(cfg, sim=replace(cfg.sim, seed=seed),
                              routing=replace(cfg.routing, mode=mode))
            stats = Simulation(run_cfg).run()
            total = total_consumed(stats)
            rows.append({
                "seed": seed, "mode": mode,
                "generated": stats.generated, "delivered": stats.delivered,
                "delivery_ratio": stats.delivery_ratio,
                "discoveries": stats.discoveries,
                "avg_tx_j": stats.avg["tx"], "avg_rx_j": stats.avg["rx"],
                "avg_idle_j": stats.avg["idle"],
                "avg_sleep_j": stats.avg["sleep"],
                "avg_total_j": stats.avg["total"],
                "energy_per_delivered_j": (total / stats.delivered
                                           if stats.delivered else None),
                "route_sent_counts": ";".join(str(r.sent)
                                              for r in stats.routes),
                "partition_time_s": stats.partition_time,
            })
    for mode in modes:
        sub = [r for r in rows if r["mode"] == mode]
        mean = {"seed": "mean", "mode": mode, "route_sent_counts": ""}
        for col in MEAN_COLUMNS:
            mean[col] = sum(r[col] for r in sub) / len(sub)
        for col in ("energy_per_delivered_j", "partition_time_s"):
            present = [r[col] for r in sub if r[col] is not None]
            mean[col] = sum(present) / len(present) if present else None
        rows.append(mean)
    return rows


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(rows, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_csv_cell(row[col]) for col in CSV_COLUMNS])


def _cmd_compare(args):
    cfg = _load_config(args)
    seeds = _parse_seeds(args.seeds)
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    for mode in modes:
        if mode not in ("aodv", "newaodv"):
            raise ConfigError("unknown routing mode %r" % mode)
    rows = run_experiment(cfg, seeds, modes)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, sys.stdout)
    return 0


# -- derive ---------------------------------------------------------------------

BATTERY_HOURS = 80.0


def derive_sheet(radio, energy, packets):
    """Every quantity the radio/energy settings imply, one `key = value` per
    line so scripts can parse it back."""
    data_time = packet_tx_time(packets.data_bytes, radio.data_rate_bps)
    control_time = packet_tx_time(packets.control_bytes, radio.data_rate_bps)
    tx_current = energy.tx_power_w / energy.supply_voltage_v
    rx_current = energy.rx_power_w / energy.supply_voltage_v
    avg_current = (tx_current + rx_current) / 2.0
    rows = [
        ("frequency_hz", radio.frequency_hz),
        ("wavelength_m", wavelength(radio.frequency_hz)),
        ("min_antenna_height_m", quarter_wave_height(radio.frequency_hz)),
        ("antenna_height_tx_m", radio.antenna_height_tx_m),
        ("antenna_height_rx_m", radio.antenna_height_rx_m),
        ("tx_power_w", radio.tx_power_w),
        ("tx_power_dbm", watts_to_dbm(radio.tx_power_w)),
        ("rx_threshold_w", radio.rx_threshold_w),
        ("rx_threshold_dbm", watts_to_dbm(radio.rx_threshold_w)),
        ("carrier_sense_threshold_w", radio.carrier_sense_threshold_w),
        ("max_range_m", max_range(radio, radio.rx_threshold_w)),
        ("data_rate_bps", radio.data_rate_bps),
        ("data_packet_bytes", packets.data_bytes),
        ("control_packet_bytes", packets.control_bytes),
        ("data_packet_time_s", data_time),
        ("control_packet_time_s", control_time),
        ("tx_energy_per_data_packet_j", packet_energy(energy.tx_power_w,
                                                      data_time)),
        ("rx_energy_per_data_packet_j", packet_energy(energy.rx_power_w,
                                                      data_time)),
        ("tx_energy_per_control_packet_j", packet_energy(energy.tx_power_w,
                                                         control_time)),
        ("rx_energy_per_control_packet_j", packet_energy(energy.rx_power_w,
                                                         control_time)),
        ("data_hop_energy_j", packet_energy(energy.tx_power_w, data_time)
         + packet_energy(energy.rx_power_w, data_time)),
        ("supply_voltage_v", energy.supply_voltage_v),
        ("tx_current_a", tx_current),
        ("rx_current_a", rx_current),
        ("avg_current_a", avg_current),
        ("battery_hours", BATTERY_HOURS),
        ("battery_energy_j", battery_energy(energy.supply_voltage_v,
                                            avg_current, BATTERY_HOURS)),
        ("initial_energy_j", energy.initial_energy_j),
    ]
    return rows


def _cmd_derive(args):
    if args.preset or args.config:
        cfg = _load_config(args)
        radio, energy, packets = cfg.radio, cfg.energy, cfg.packets
    else:
        radio, energy, packets = RadioParams(), EnergyParams(), PacketSpec()
    for key, value in derive_sheet(radio, energy, packets):
        print("%s = %s" % (key, repr(value) if isinstance(value, float)
                           else value))
    return 0


# -- audit ----------------------------------------------------------------------

_ACTIVE_EVENTS = frozenset((
    "gen", "send", "deliver", "rreq_origin", "rreq_forward", "rrep_send",
    "rrep_relay", "rerr_send"))


def _parse_trace_line(line, lineno):
    parts = line.split(" ")
    if len(parts) < 3:
        raise ValueError("line %d: expected `time node event ...`" % lineno)
    t, node, event = parts[0], parts[1], parts[2]
    if event == "stats":
        return float(t), None, event, json.loads(" ".join(parts[3:]))
    detail = {}
    for kv in parts[3:]:
        key, sep, value = kv.partition("=")
        if not sep:
            raise ValueError("line %d: malformed field %r" % (lineno, kv))
        detail[key] = value
    return float(t), (None if node == "-" else int(node)), event, detail


def audit_trace(lines):
    """Replay a trace: rebuild the end-of-run statistics from the events and
    verify internal consistency.  Returns a list of problems (empty = ok)."""
    problems = []
    stats_claimed = None
    generated = 0
    delivered = 0
    discoveries = 0
    partition_time = None
    gen_seen = {}       # pkt uid -> line index
    deliver_seen = {}   # pkt uid -> (line index, node)
    sends = {}          # pkt uid -> [(line index, sender, to)]
    deaths = {}         # node -> line index
    routes = []
    per_node = {}
    last_time = None
    for idx, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            t, node, event, detail = _parse_trace_line(line, idx + 1)
        except ValueError as exc:
            problems.append(str(exc))
            continue
        if last_time is not None and t < last_time:
            problems.append("line %d: time goes backwards" % (idx + 1))
        last_time = t
        if stats_claimed is not None:
            problems.append("line %d: events after the stats line" % (idx + 1))
        if (node is not None and node in deaths
                and event in _ACTIVE_EVENTS):
            problems.append("line %d: node %d acts after its death on line %d"
                            % (idx + 1, node, deaths[node] + 1))
        if event == "gen":
            generated += 1
            gen_seen[detail["pkt"]] = idx
        elif event == "send":
            sends.setdefault(detail["pkt"], []).append(
                (idx, node, int(detail["to"])))
        elif event == "deliver":
            delivered += 1
            uid = detail["pkt"]
            if uid in deliver_seen:
                problems.append("line %d: packet %s delivered twice" %
                                (idx + 1, uid))
            deliver_seen[uid] = (idx, node)
        elif event == "rreq_origin":
            discoveries += 1
        elif event == "death":
            deaths[node] = idx
        elif event == "partition":
            partition_time = float(detail["t"])
        elif event == "route_retire":
            routes.append({"rid": int(detail["rid"]),
                           "seq": int(detail["seq"]),
                           "path": detail["path"],
                           "established": float(detail["est"]),
                           "retired": float(detail["ret"]),
                           "sent": int(detail["sent"]),
                           "delivered": int(detail["delivered"]),
                           "reason": detail["reason"]})
            hops = detail["path"].split("-")
            if len(hops) != len(set(hops)):
                problems.append("line %d: route path %s revisits a node" %
                                (idx + 1, detail["path"]))
        elif event == "node_summary":
            per_node[node] = {
                "alive": detail["alive"] == "true",
                "death_time": (None if detail["death"] == "none"
                               else float(detail["death"])),
                "initial": float(detail["initial"]),
                "residual": float(detail["residual"]),
                "tx": float(detail["tx"]), "rx": float(detail["rx"]),
                "idle": float(detail["idle"]),
                "sleep": float(detail["sleep"])}
        elif event == "stats":
            stats_claimed = detail
    if stats_claimed is None:
        problems.append("trace has no stats line")
        return problems
    if not per_node:
        problems.append("trace has no node_summary lines")
        return problems
    # causality and hop chains, for every delivered packet
    for uid, (didx, dnode) in sorted(deliver_seen.items()):
        if uid not in gen_seen:
            problems.append("packet %s delivered but never generated" % uid)
            continue
        if gen_seen[uid] > didx:
            problems.append("packet %s delivered before generated" % uid)
        chain = sends.get(uid, [])
        if not chain:
            problems.append("packet %s delivered without any send" % uid)
            continue
        ok = all(chain[i][2] == chain[i + 1][1] for i in range(len(chain) - 1))
        if not ok or chain[-1][2] != dnode:
            problems.append("packet %s: send chain does not reach its"
                            " delivery" % uid)
    # per-node energy conservation
    for node in sorted(per_node):
        row = per_node[node]
        used = row["tx"] + row["rx"] + row["idle"] + row["sleep"]
        gap = abs(row["initial"] - (row["residual"] + used))
        if gap > 1e-9 * max(1.0, row["initial"]):
            problems.append("node %d books do not balance: gap %g" %
                            (node, gap))
    rebuilt = {
        "generated": generated,
        "delivered": delivered,
        "delivery_ratio": delivered / generated if generated else 0.0,
        "discoveries": discoveries,
        "partition_time": partition_time,
        "routes": sorted(routes, key=lambda r: r["rid"]),
        "per_node": {str(i): per_node[i] for i in sorted(per_node)},
        "avg": average_split(per_node),
    }
    if rebuilt != stats_claimed:
        for key in sorted(set(rebuilt) | set(stats_claimed)):
            if rebuilt.get(key) != stats_claimed.get(key):
                problems.append("stats mismatch at %r: rebuilt %r, claimed %r"
                                % (key, rebuilt.get(key),
                                   stats_claimed.get(key)))
    return problems


def _cmd_audit(args):
    try:
        with open(args.trace, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        print("error: cannot read %s: %s" % (args.trace, exc),
              file=sys.stderr)
        return 2
    problems = audit_trace(lines)
    if problems:
        for problem in problems:
            print("audit: %s" % problem)
        return 2
    print("audit ok: %d lines" % len(lines))
    return 0


# -- entry point ------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="wsnsim",
        description="Discrete-event simulator for static wireless sensor"
                    " grids comparing hop-count routing against an"
                    " energy-aware variant.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario")
    _add_config_args(p)
    p.add_argument("--seed", type=int, help="override the RNG seed")
    p.add_argument("--mode", choices=("aodv", "newaodv"),
                   help="override the routing mode")
    p.add_argument("--trace", metavar="PATH", help="write the event trace")
    p.add_argument("--json", action="store_true",
                   help="print statistics as JSON")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("compare", help="run a seed sweep across modes")
    _add_config_args(p)
    p.add_argument("--seeds", default="0..9",
                   help="e.g. 0..9 or 1,2,5 (default 0..9)")
    p.add_argument("--modes", default="aodv,newaodv",
                   help="comma-separated routing modes")
    p.add_argument("--out", metavar="PATH", help="write CSV here instead of"
                                                 " stdout")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("derive", help="print the derived radio/energy sheet")
    _add_config_args(p)
    p.set_defaults(func=_cmd_derive)

    p = sub.add_parser("audit", help="re-check a trace file")
    p.add_argument("trace", help="trace produced by simulate --trace")
    p.set_defaults(func=_cmd_audit)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 1
    except (SimulationError, ValidationError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
