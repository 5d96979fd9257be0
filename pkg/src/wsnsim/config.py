"""Run configuration: line-oriented `key = value` files with [sections],
named presets, and an exact-round-trip serializer."""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

from .energy import EnergyParams, PacketSpec
from .linkbudget import RadioParams, dbm_to_watts, two_ray_rx_power


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class TopologyParams:
    kind: str = "square"
    rows: int = 3
    cols: int = 3
    spacing_m: float = 150.0
    id_layout: str = "row_major"
    jitter_offset_m: float = 0.0
    jitter_seed: int = 0


@dataclass(frozen=True)
class LadderSpec:
    """Graded starting energies: rank k in the ordering gets min + k*step."""
    min_energy_j: float
    step_j: float
    ordering: str = "bottom_to_top_left_to_right"
    overrides: tuple = ()  # sorted ((node_id, joules), ...)


@dataclass(frozen=True)
class RoutingParams:
    mode: str = "newaodv"
    ttl: int = 30
    jitter_max_s: float = 0.005
    ack_timeout_s: float = 1.0
    discovery_timeout_s: float = 1.0
    max_discovery_retries: int = 3


@dataclass(frozen=True)
class SimParams:
    source: int
    sink: int
    duration_s: float = 105000.0
    interval_s: float = 300.0
    seed: int = 0
    queue_size: int = 150
    audit_interval_s: float = 60.0
    zero_cost_discovery: bool = False
    lossless_control: bool = False

    def __post_init__(self):
        if self.interval_s <= 0:
            raise ValueError("interval_s must be positive")
        if self.duration_s < 0:
            raise ValueError("duration_s must be non-negative")
        if self.queue_size < 1:
            raise ValueError("queue_size must be >= 1")
        if self.audit_interval_s <= 0:
            raise ValueError("audit_interval_s must be positive")
        if self.source < 0 or self.sink < 0:
            raise ValueError("source and sink must be node ids")
        if self.source == self.sink:
            raise ValueError("source and sink must differ")


@dataclass(frozen=True)
class SimConfig:
    radio: RadioParams
    energy: EnergyParams
    packets: PacketSpec
    topology: TopologyParams
    ladder: LadderSpec | None
    routing: RoutingParams
    sim: SimParams


# -- value parsers -------------------------------------------------------------

def _f(v):
    return float(v)


def _i(v):
    return int(v)


def _b(v):
    low = v.lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError("expected true/false, got %r" % v)


def _choice(*allowed):
    def parse(v):
        if v not in allowed:
            raise ValueError("expected one of %s, got %r" %
                             ("/".join(allowed), v))
        return v
    return parse


class _State:
    def __init__(self):
        self.radio = {}
        self.energy = {}
        self.packets = {}
        self.topology = {}
        self.routing = {}
        self.sim = {}
        self.ladder = {}
        self.overrides = {}


def _set(bucket, field, parse):
    def apply(state, value):
        getattr(state, bucket)[field] = parse(value)
    return apply


def _set_ladder(field, parse):
    def apply(state, value):
        state.ladder[field] = parse(value)
    return apply


def _apply_range(state, value):
    distance = _f(value)
    if distance <= 0:
        raise ValueError("range_m must be positive")
    # resolve through the radio settings seen so far (defaults fill the rest)
    probe = RadioParams(**state.radio)
    power = two_ray_rx_power(probe, distance)
    state.radio["rx_threshold_w"] = power
    state.radio["carrier_sense_threshold_w"] = power


_OVERRIDE_RE = re.compile(r"^override_(\d+)_j$")

_KEYS = {
    "radio": {
        "frequency_hz": _set("radio", "frequency_hz", _f),
        "tx_power_w": _set("radio", "tx_power_w", _f),
        "tx_power_dbm": _set("radio", "tx_power_w",
                             lambda v: dbm_to_watts(float(v))),
        "rx_threshold_w": _set("radio", "rx_threshold_w", _f),
        "rx_threshold_dbm": _set("radio", "rx_threshold_w",
                                 lambda v: dbm_to_watts(float(v))),
        "carrier_sense_threshold_w": _set("radio", "carrier_sense_threshold_w",
                                          _f),
        "carrier_sense_threshold_dbm": _set("radio",
                                            "carrier_sense_threshold_w",
                                            lambda v: dbm_to_watts(float(v))),
        "range_m": _apply_range,
        "capture_ratio": _set("radio", "capture_ratio", _f),
        "antenna_height_tx_m": _set("radio", "antenna_height_tx_m", _f),
        "antenna_height_rx_m": _set("radio", "antenna_height_rx_m", _f),
        "gain_tx": _set("radio", "gain_tx", _f),
        "gain_rx": _set("radio", "gain_rx", _f),
        "path_loss": _set("radio", "path_loss", _f),
        "data_rate_bps": _set("radio", "data_rate_bps", _f),
        "backoff_window_s": _set("radio", "backoff_window_s", _f),
        "csma_retry_cap": _set("radio", "csma_retry_cap", _i),
    },
    "energy": {
        "tx_power_w": _set("energy", "tx_power_w", _f),
        "rx_power_w": _set("energy", "rx_power_w", _f),
        "idle_power_w": _set("energy", "idle_power_w", _f),
        "sleep_power_w": _set("energy", "sleep_power_w", _f),
        "supply_voltage_v": _set("energy", "supply_voltage_v", _f),
        "initial_energy_j": _set("energy", "initial_energy_j", _f),
        "mac_header_bytes": _set("packets", "mac_header_bytes", _i),
        "ip_header_bytes": _set("packets", "ip_header_bytes", _i),
        "common_header_bytes": _set("packets", "common_header_bytes", _i),
        "data_payload_bytes": _set("packets", "data_payload_bytes", _i),
        "control_payload_bytes": _set("packets", "control_payload_bytes", _i),
    },
    "topology": {
        "kind": _set("topology", "kind", _choice("square", "hexagonal")),
        "rows": _set("topology", "rows", _i),
        "cols": _set("topology", "cols", _i),
        "spacing_m": _set("topology", "spacing_m", _f),
        "id_layout": _set("topology", "id_layout",
                          _choice("row_major", "fig3")),
        "jitter_offset_m": _set("topology", "jitter_offset_m", _f),
        "jitter_seed": _set("topology", "jitter_seed", _i),
        "min_energy_j": _set_ladder("min_energy_j", _f),
        "step_j": _set_ladder("step_j", _f),
        "ordering": _set_ladder("ordering",
                                _choice("bottom_to_top_left_to_right",
                                        "by_id")),
    },
    "routing": {
        "mode": _set("routing", "mode", _choice("aodv", "newaodv")),
        "ttl": _set("routing", "ttl", _i),
        "jitter_max_s": _set("routing", "jitter_max_s", _f),
        "ack_timeout_s": _set("routing", "ack_timeout_s", _f),
        "discovery_timeout_s": _set("routing", "discovery_timeout_s", _f),
        "max_discovery_retries": _set("routing", "max_discovery_retries", _i),
    },
    "sim": {
        "interval_s": _set("sim", "interval_s", _f),
        "duration_s": _set("sim", "duration_s", _f),
        "seed": _set("sim", "seed", _i),
        "source": _set("sim", "source", _i),
        "sink": _set("sim", "sink", _i),
        "queue_size": _set("sim", "queue_size", _i),
        "audit_interval_s": _set("sim", "audit_interval_s", _f),
        "zero_cost_discovery": _set("sim", "zero_cost_discovery", _b),
        "lossless_control": _set("sim", "lossless_control", _b),
    },
}


def _parse_into(state, text, where, allow_preset):
    section = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        loc = "%s:%d" % (where, lineno)
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("%s: malformed section header %r" %
                                  (loc, raw.strip()))
            section = line[1:-1].strip()
            if section not in _KEYS:
                raise ConfigError("%s: unknown section [%s]" % (loc, section))
            continue
        if "=" not in line:
            raise ConfigError("%s: expected `key = value`, got %r" %
                              (loc, raw.strip()))
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError("%s: expected `key = value`, got %r" %
                              (loc, raw.strip()))
        if section is None:
            if key == "preset":
                if not allow_preset:
                    raise ConfigError("%s: presets cannot nest" % loc)
                if value not in PRESETS:
                    raise ConfigError("%s: unknown preset %r (have: %s)" %
                                      (loc, value,
                                       ", ".join(sorted(PRESETS))))
                _parse_into(state, PRESETS[value], "preset:%s" % value, False)
                continue
            raise ConfigError("%s: key %r appears before any [section]" %
                              (loc, key))
        handlers = _KEYS[section]
        if key in handlers:
            try:
                handlers[key](state, value)
            except (ValueError, KeyError) as exc:
                raise ConfigError("%s: bad value for %s: %s" %
                                  (loc, key, exc)) from None
            continue
        if section == "topology":
            m = _OVERRIDE_RE.match(key)
            if m:
                try:
                    state.overrides[int(m.group(1))] = _f(value)
                except ValueError as exc:
                    raise ConfigError("%s: bad value for %s: %s" %
                                      (loc, key, exc)) from None
                continue
        raise ConfigError("%s: unknown key %r in [%s]" % (loc, key, section))


def _finalize(state, where):
    def build(cls, kwargs, label):
        try:
            return cls(**kwargs)
        except ValueError as exc:
            raise ConfigError("%s: invalid [%s] settings: %s" %
                              (where, label, exc)) from None

    radio = build(RadioParams, state.radio, "radio")
    energy = build(EnergyParams, state.energy, "energy")
    packets = build(PacketSpec, state.packets, "energy")
    topology = build(TopologyParams, state.topology, "topology")
    if state.ladder or state.overrides:
        if "min_energy_j" not in state.ladder or "step_j" not in state.ladder:
            raise ConfigError("%s: graded energies need both min_energy_j and"
                              " step_j" % where)
        ladder = LadderSpec(min_energy_j=state.ladder["min_energy_j"],
                            step_j=state.ladder["step_j"],
                            ordering=state.ladder.get(
                                "ordering", "bottom_to_top_left_to_right"),
                            overrides=tuple(sorted(state.overrides.items())))
    else:
        ladder = None
    routing = build(RoutingParams, state.routing, "routing")
    if "source" not in state.sim or "sink" not in state.sim:
        raise ConfigError("%s: missing required keys source and sink in [sim]"
                          % where)
    sim = build(SimParams, state.sim, "sim")
    node_count = topology.rows * topology.cols
    for label, node in (("source", sim.source), ("sink", sim.sink)):
        if node >= node_count:
            raise ConfigError("%s: %s %d is outside the %dx%d topology" %
                              (where, label, node, topology.rows,
                               topology.cols))
    for node, _ in (ladder.overrides if ladder else ()):
        if node >= node_count:
            raise ConfigError("%s: override_%d_j is outside the %dx%d"
                              " topology" % (where, node, topology.rows,
                                             topology.cols))
    return SimConfig(radio=radio, energy=energy, packets=packets,
                     topology=topology, ladder=ladder, routing=routing,
                     sim=sim)


def parse_text(text, where="<config>"):
    state = _State()
    _parse_into(state, text, where, True)
    return _finalize(state, where)


def parse_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("cannot read %s: %s" % (path, exc)) from None
    return parse_text(text, where=str(path))


def preset_config(name):
    if name not in PRESETS:
        raise ConfigError("unknown preset %r (have: %s)" %
                          (name, ", ".join(sorted(PRESETS))))
    return parse_text("preset = %s\n" % name, where="preset:%s" % name)


# -- serialization --------------------------------------------------------------

def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize(cfg) -> str:
    lines = []

    def emit(obj, keys):
        for key in keys:
            lines.append("%s = %s" % (key, _fmt(getattr(obj, key))))

    lines.append("[radio]")
    emit(cfg.radio, ("frequency_hz", "tx_power_w", "rx_threshold_w",
                     "carrier_sense_threshold_w", "capture_ratio",
                     "antenna_height_tx_m", "antenna_height_rx_m", "gain_tx",
                     "gain_rx", "path_loss", "data_rate_bps",
                     "backoff_window_s", "csma_retry_cap"))
    lines.append("[energy]")
    emit(cfg.energy, ("tx_power_w", "rx_power_w", "idle_power_w",
                      "sleep_power_w", "supply_voltage_v", "initial_energy_j"))
    emit(cfg.packets, ("mac_header_bytes", "ip_header_bytes",
                       "common_header_bytes", "data_payload_bytes",
                       "control_payload_bytes"))
    lines.append("[topology]")
    emit(cfg.topology, ("kind", "rows", "cols", "spacing_m", "id_layout",
                        "jitter_offset_m", "jitter_seed"))
    if cfg.ladder is not None:
        emit(cfg.ladder, ("min_energy_j", "step_j", "ordering"))
        for node, joules in cfg.ladder.overrides:
            lines.append("override_%d_j = %s" % (node, _fmt(joules)))
    lines.append("[routing]")
    emit(cfg.routing, ("mode", "ttl", "jitter_max_s", "ack_timeout_s",
                       "discovery_timeout_s", "max_discovery_retries"))
    lines.append("[sim]")
    emit(cfg.sim, ("source", "sink", "duration_s", "interval_s", "seed",
                   "queue_size", "audit_interval_s", "zero_cost_discovery",
                   "lossless_control"))
    return "\n".join(lines) + "\n"


def with_overrides(cfg, seed=None, mode=None):
    """Common CLI knobs without editing the file."""
    if seed is not None:
        cfg = replace(cfg, sim=replace(cfg.sim, seed=seed))
    if mode is not None:
        if mode not in ("aodv", "newaodv"):
            raise ConfigError("unknown routing mode %r" % mode)
        cfg = replace(cfg, routing=replace(cfg.routing, mode=mode))
    return cfg


# -- presets --------------------------------------------------------------------
# All grid presets share the 150 m pitch with the decode threshold re-derived
# for a 200 m reach, near-zero listen/sleep power (the scenarios meter traffic
# only), wide rebroadcast jitter to decorrelate the flood, and one report
# every 300 s.

_GRID_BASE = """\
[radio]
range_m = 200
[energy]
idle_power_w = 1e-12
sleep_power_w = 1e-13
[routing]
jitter_max_s = 0.05
[sim]
interval_s = 300
duration_s = 105000
seed = 0
"""

_FIG3 = _GRID_BASE + """\
[topology]
kind = square
rows = 3
cols = 3
spacing_m = 150
id_layout = fig3
min_energy_j = 0.2
step_j = 0.1
ordering = bottom_to_top_left_to_right
[sim]
source = 7
sink = 5
"""

_FIG5 = _GRID_BASE + """\
[topology]
kind = square
rows = 5
cols = 5
spacing_m = 150
id_layout = row_major
min_energy_j = 0.2
step_j = 0.1
ordering = bottom_to_top_left_to_right
override_23_j = 3.9
[sim]
source = 23
sink = 21
"""

_GRID5_SHORT = _GRID_BASE + """\
[topology]
kind = square
rows = 5
cols = 5
spacing_m = 150
id_layout = row_major
ordering = bottom_to_top_left_to_right
[sim]
source = 19
sink = 17
duration_s = 10500
"""

PRESETS = {
    "fig3": _FIG3,
    "case1": _FIG3 + "[topology]\noverride_7_j = 1.5\n",
    "case2": _FIG3 + ("[topology]\nmin_energy_j = 0.3\nstep_j = 0.08\n"
                      "override_7_j = 1.41\n"),
    "fig5": _FIG5,
    "case3": _FIG5 + ("[topology]\nmin_energy_j = 0.02\nstep_j = 0.01\n"
                      "override_23_j = 0.39\n"),
    "case4": _GRID5_SHORT + ("[topology]\nmin_energy_j = 0.2\nstep_j = 0.2\n"
                             "override_19_j = 7.5\n"),
    "case5": _GRID5_SHORT + ("[topology]\nmin_energy_j = 0.2\nstep_j = 0.06\n"
                             "override_19_j = 2.46\n"),
}
