"""Deterministic discrete-event simulation: CSMA channel with capture,
propagation-delayed delivery, periodic traffic, energy-driven node death,
partition detection, per-route bookkeeping and a machine-checkable trace.
"""

from __future__ import annotations

import heapq
import json
import random
from collections import deque
from dataclasses import dataclass

from . import linkbudget, routing
from . import topology as topologies
from .energy import EnergyMeter, packet_tx_time
from .linkbudget import SPEED_OF_LIGHT, Reception


class SimulationError(Exception):
    """Invalid run setup or a broken runtime invariant."""


@dataclass
class DataPacket:
    uid: str
    origin: int
    destination: int
    rid: int | None = None  # route record the source charged this packet to


@dataclass
class Frame:
    kind: str        # "data" | "rreq" | "rrep" | "rerr"
    body: object
    to: int | None   # None = broadcast; data frames resolve per attempt
    uid: str

    @property
    def is_control(self) -> bool:
        return self.kind != "data"


@dataclass
class Tx:
    sender: int
    start: float
    end: float
    frame: Frame
    airtime: float
    cost: float
    corrupt: bool  # sender dies mid-air: interferes but delivers nothing


@dataclass
class RouteRecord:
    rid: int
    seq: int
    path: tuple
    established: float
    retired: float | None = None
    sent: int = 0
    delivered: int = 0
    reason: str | None = None

    def to_dict(self):
        return {"rid": self.rid, "seq": self.seq,
                "path": "-".join(str(n) for n in self.path),
                "established": self.established, "retired": self.retired,
                "sent": self.sent, "delivered": self.delivered,
                "reason": self.reason}


@dataclass
class RunStats:
    generated: int
    delivered: int
    delivery_ratio: float
    discoveries: int
    partition_time: float | None
    routes: list
    per_node: dict
    avg: dict

    def to_dict(self):
        return {"generated": self.generated, "delivered": self.delivered,
                "delivery_ratio": self.delivery_ratio,
                "discoveries": self.discoveries,
                "partition_time": self.partition_time,
                "routes": [r.to_dict() for r in self.routes],
                "per_node": {str(i): dict(self.per_node[i])
                             for i in sorted(self.per_node)},
                "avg": dict(self.avg)}


def average_split(per_node: dict) -> dict:
    """Network-wide mean consumption per category, summed in sorted node order
    so a rebuild from the trace reproduces the same floats."""
    n = len(per_node)
    avg = {}
    for cat in ("tx", "rx", "idle", "sleep"):
        avg[cat] = sum(per_node[i][cat] for i in sorted(per_node)) / n
    avg["total"] = avg["tx"] + avg["rx"] + avg["idle"] + avg["sleep"]
    return avg


def build_topology(cfg):
    tp = cfg.topology
    z = cfg.radio.antenna_height_tx_m
    if tp.kind == "square":
        topo = topologies.square_grid(tp.rows, tp.cols, tp.spacing_m, z,
                                      id_layout=tp.id_layout)
    elif tp.kind == "hexagonal":
        topo = topologies.hexagonal(tp.rows, tp.cols, tp.spacing_m, z)
    else:
        raise SimulationError("unknown topology kind %r" % tp.kind)
    if tp.jitter_offset_m > 0.0:
        topo = topologies.jitter(topo, tp.jitter_offset_m, tp.jitter_seed)
    return topo


def resolve_energies(cfg, topo) -> dict:
    if cfg.ladder is None:
        return {i: cfg.energy.initial_energy_j for i in topo.ids}
    lad = cfg.ladder
    if lad.ordering == "bottom_to_top_left_to_right":
        ordering = topologies.bottom_to_top_left_to_right(topo)
    elif lad.ordering == "by_id":
        ordering = tuple(topo.ids)
    else:
        raise SimulationError("unknown energy ordering %r" % lad.ordering)
    assignment = topologies.EnergyAssignment(
        min_energy_j=lad.min_energy_j, step_j=lad.step_j, ordering=ordering,
        overrides=dict(lad.overrides))
    return topologies.assign_energies(topo, assignment)


class _Node:
    __slots__ = ("id", "meter", "router")

    def __init__(self, node_id, meter, router):
        self.id = node_id
        self.meter = meter
        self.router = router


_ACTIVE_EVENTS = frozenset((
    "gen", "send", "deliver", "rreq_origin", "rreq_forward", "rrep_send",
    "rrep_relay", "rerr_send"))


class Simulation:
    def __init__(self, cfg, trace: bool = False):
        self.cfg = cfg
        self.rng = random.Random(cfg.sim.seed)
        self.trace_lines = [] if trace else None

        self.topo = build_topology(cfg)
        range_m = linkbudget.max_range(cfg.radio, cfg.radio.rx_threshold_w)
        self.validation_warnings = topologies.validate(self.topo, range_m,
                                                       strict=True)
        ids = self.topo.ids
        if cfg.sim.source not in ids:
            raise SimulationError("source %d is not a node id" % cfg.sim.source)
        if cfg.sim.sink not in ids:
            raise SimulationError("sink %d is not a node id" % cfg.sim.sink)
        if cfg.sim.source == cfg.sim.sink:
            raise SimulationError("source and sink must differ")

        energies = resolve_energies(cfg, self.topo)
        self.power = {a: {} for a in ids}
        self.dist = {a: {} for a in ids}
        for a in ids:
            for b in ids:
                if a == b:
                    continue
                self.dist[a][b] = self.topo.distance(a, b)
                self.power[a][b] = linkbudget.two_ray_rx_power(cfg.radio,
                                                               self.dist[a][b])
        self.neighbors = {
            a: [b for b in ids
                if b != a and self.power[a][b] >= cfg.radio.rx_threshold_w]
            for a in ids}
        self.nodes = {i: _Node(i, EnergyMeter(energies[i]),
                               routing.Router(i, cfg.routing.mode,
                                              cfg.routing.ttl))
                      for i in ids}
        self.airtime_data = packet_tx_time(cfg.packets.data_bytes,
                                           cfg.radio.data_rate_bps)
        self.airtime_control = packet_tx_time(cfg.packets.control_bytes,
                                              cfg.radio.data_rate_bps)

    # -- plumbing -------------------------------------------------------------

    def schedule(self, t, name, *args):
        heapq.heappush(self.heap, (t, self.tick, name, args))
        self.tick += 1

    def trace(self, node, event, detail=""):
        if self.trace_lines is None:
            return
        line = "%.9f %s %s" % (self.now, "-" if node is None else node, event)
        if detail:
            line += " " + detail
        self.trace_lines.append(line)

    def touch(self, i) -> bool:
        """Charge idle time up to now; report whether the node is still alive."""
        meter = self.nodes[i].meter
        if not meter.alive:
            return False
        if not meter.accrue_idle(self.now, self.cfg.energy):
            self._on_death(i)
            return False
        return True

    def _on_death(self, i):
        m = self.nodes[i].meter
        c = m.consumed
        self.trace(i, "death", "t=%r tx=%r rx=%r idle=%r sleep=%r" %
                   (m.death_time, c["tx"], c["rx"], c["idle"], c["sleep"]))
        if i == self.cfg.sim.source:
            self._declare_partition(m.death_time, "source_death")
        elif i == self.cfg.sim.sink:
            self._declare_partition(m.death_time, "sink_death")

    def _declare_partition(self, t, reason):
        if self.ended:
            return
        self.partition_time = t
        self.ended = True
        self.end_time = self.now
        self.trace(None, "partition", "t=%r reason=%s" % (t, reason))

    # -- run loop -------------------------------------------------------------

    def run(self) -> RunStats:
        sim = self.cfg.sim
        self.now = 0.0
        self.ended = False
        self.end_time = None
        self.partition_time = None
        self.heap = []
        self.tick = 0
        self.txs = []
        self.queue = deque()
        self.pending = {}        # (sender, packet uid) -> awaiting implicit ack
        self.burst = None        # in-flight discovery: {"seq", "attempt"}
        self.current_route = None
        self.records = []
        self.by_rid = {}
        self.next_rid = 1
        self.generated = 0
        self.delivered = 0
        self.discoveries = 0
        self.frame_count = 0
        if sim.interval_s <= sim.duration_s:
            self.schedule(sim.interval_s, "_ev_traffic")
        if sim.audit_interval_s <= sim.duration_s:
            self.schedule(sim.audit_interval_s, "_ev_audit")
        while self.heap and not self.ended:
            t, _, name, args = heapq.heappop(self.heap)
            if t > sim.duration_s:
                break
            self.now = t
            getattr(self, name)(*args)
        return self._finish()

    # -- traffic --------------------------------------------------------------

    def _ev_traffic(self):
        if self.ended:
            return
        sim = self.cfg.sim
        if not self.touch(sim.source):
            return
        self.generated += 1
        pkt = DataPacket(uid="d%d-%d" % (sim.source, self.generated),
                         origin=sim.source, destination=sim.sink)
        self.trace(sim.source, "gen", "pkt=%s dst=%d" % (pkt.uid, sim.sink))
        if len(self.queue) >= sim.queue_size:
            old = self.queue.popleft()
            self.trace(sim.source, "queue_drop",
                       "pkt=%s reason=overflow" % old.uid)
        self.queue.append(pkt)
        if self.nodes[sim.source].router.route_for(sim.sink) is not None:
            self._flush_queue()
        elif self.burst is None:
            self._start_discovery()
        nxt = self.now + sim.interval_s
        if nxt <= sim.duration_s:
            self.schedule(nxt, "_ev_traffic")

    def _flush_queue(self):
        sim = self.cfg.sim
        router = self.nodes[sim.source].router
        while self.queue:
            if router.route_for(sim.sink) is None:
                if self.burst is None:
                    self._start_discovery()
                return
            pkt = self.queue.popleft()
            if self.current_route is not None:
                pkt.rid = self.current_route.rid
            self._attempt_tx(sim.source, Frame("data", pkt, None, pkt.uid), 0)

    # -- discovery ------------------------------------------------------------

    def _start_discovery(self):
        if self.ended or self.burst is not None:
            return
        if not self.touch(self.cfg.sim.source):
            return
        self.burst = {"seq": None, "attempt": 1}
        self._originate()

    def _originate(self):
        sim = self.cfg.sim
        if not self.touch(sim.source):
            return
        node = self.nodes[sim.source]
        rreq = node.router.originate_rreq(sim.sink, node.meter.residual)
        self.burst["seq"] = rreq.seq
        self.discoveries += 1
        self.trace(sim.source, "rreq_origin", "dst=%d seq=%d" % (sim.sink,
                                                                 rreq.seq))
        self._attempt_tx(sim.source, Frame("rreq", rreq, None,
                                           self._frame_uid()), 0)
        self.schedule(self.now + self.cfg.routing.discovery_timeout_s,
                      "_ev_discovery_timeout", rreq.seq)

    def _ev_discovery_timeout(self, seq):
        if self.ended or self.burst is None or self.burst["seq"] != seq:
            return
        if self.current_route is not None:
            self.burst = None
            return
        if self.burst["attempt"] >= self.cfg.routing.max_discovery_retries:
            if self._route_exists_alive():
                # physically reachable, just unlucky: stall until next traffic
                self.trace(self.cfg.sim.source, "unreachable",
                           "dst=%d retries=%d" % (self.cfg.sim.sink,
                                                  self.burst["attempt"]))
                self.burst = None
            else:
                self._declare_partition(self.now, "retries_exhausted")
        else:
            self.burst["attempt"] += 1
            self._originate()

    def _route_exists_alive(self) -> bool:
        sim = self.cfg.sim
        if not (self.nodes[sim.source].meter.alive
                and self.nodes[sim.sink].meter.alive):
            return False
        seen = {sim.source}
        frontier = [sim.source]
        while frontier:
            nxt = []
            for u in frontier:
                for v in self.neighbors[u]:
                    if v not in seen and self.nodes[v].meter.alive:
                        seen.add(v)
                        nxt.append(v)
            frontier = nxt
        return sim.sink in seen

    # -- transmission ---------------------------------------------------------

    def _frame_uid(self) -> str:
        self.frame_count += 1
        return "c%d" % self.frame_count

    def _attempt_tx(self, sender, frame, tries):
        if self.ended:
            return
        if not self.touch(sender):
            if frame.kind == "data":
                self.trace(sender, "data_drop",
                           "pkt=%s reason=dead_sender" % frame.uid)
            return
        node = self.nodes[sender]
        radio = self.cfg.radio
        if frame.kind == "data":
            entry = node.router.route_for(frame.body.destination)
            if entry is None:
                self._data_no_route(sender, frame.body)
                return
            frame.to = entry.next_hop
        if self.cfg.sim.lossless_control and frame.is_control:
            self._lossless_send(sender, frame)
            return
        busy = any(r.end > self.now
                   and (r.sender == sender
                        or self.power[r.sender][sender]
                        >= radio.carrier_sense_threshold_w)
                   for r in self.txs)
        if busy:
            if tries >= radio.csma_retry_cap:
                self.trace(sender, "csma_drop",
                           "pkt=%s tries=%d" % (frame.uid, tries))
                if frame.kind == "data":
                    self._data_tx_failed(sender, frame.body, "csma")
                return
            self.schedule(self.now + self.rng.uniform(0.0,
                                                      radio.backoff_window_s),
                          "_attempt_tx", sender, frame, tries + 1)
            return
        airtime = self.airtime_control if frame.is_control else self.airtime_data
        zero = frame.is_control and self.cfg.sim.zero_cost_discovery
        cost = 0.0 if zero else self.cfg.energy.tx_power_w * airtime
        corrupt = cost > node.meter.residual
        if corrupt:
            end = self.now + node.meter.residual / self.cfg.energy.tx_power_w
        else:
            end = self.now + airtime
        rec = Tx(sender, self.now, end, frame, airtime, cost, corrupt)
        self.txs.append(rec)
        self.schedule(end, "_ev_tx_end", rec)

    def _data_no_route(self, sender, pkt):
        if sender == self.cfg.sim.source:
            self.queue.appendleft(pkt)
            if self.burst is None:
                self._start_discovery()
        else:
            self.trace(sender, "data_drop", "pkt=%s reason=no_route" % pkt.uid)
            self._send_rerr(sender, pkt.destination, pkt.origin)

    def _data_tx_failed(self, sender, pkt, why):
        self.trace(sender, "data_drop", "pkt=%s reason=%s" % (pkt.uid, why))
        if sender == self.cfg.sim.source:
            if (self.current_route is not None
                    and pkt.rid == self.current_route.rid):
                self.nodes[sender].router.invalidate(pkt.destination)
                self._retire(self.current_route, "failure")
                self._start_discovery()
        else:
            self.nodes[sender].router.invalidate(pkt.destination)
            self._send_rerr(sender, pkt.destination, pkt.origin)

    def _send_rerr(self, sender, unreachable, origin):
        router = self.nodes[sender].router
        seq = router.reverse_latest.get(origin)
        if seq is None:
            self.trace(sender, "rerr_drop", "reason=no_reverse")
            return
        to = router.reverse[(origin, seq)].previous_hop
        rerr = routing.Rerr(unreachable_destination=unreachable,
                            failure_origin=sender, source=origin)
        self.trace(sender, "rerr_send", "to=%d unreachable=%d" % (to,
                                                                  unreachable))
        self._attempt_tx(sender, Frame("rerr", rerr, to, self._frame_uid()), 0)

    def _ev_tx_end(self, rec):
        if self.ended:
            return
        sender = rec.sender
        meter = self.nodes[sender].meter
        alive_after = meter.debit(rec.cost, "tx", rec.start,
                                  self.cfg.energy.tx_power_w)
        meter.last_accounted = max(meter.last_accounted, rec.end)
        if rec.corrupt:
            self.trace(sender, "corrupt", "pkt=%s" % rec.frame.uid)
            if rec.frame.kind == "data":
                self.trace(sender, "data_drop",
                           "pkt=%s reason=corrupt" % rec.frame.uid)
            self._on_death(sender)
            return
        if rec.frame.kind == "data":
            pkt = rec.frame.body
            self.trace(sender, "send", "pkt=%s to=%d" % (pkt.uid, rec.frame.to))
            if sender == self.cfg.sim.source and pkt.rid in self.by_rid:
                self.by_rid[pkt.rid].sent += 1
            self.pending[(sender, pkt.uid)] = True
            self.schedule(rec.end + self.cfg.routing.ack_timeout_s,
                          "_ev_ack_timeout", sender, pkt, rec.frame.to)
        if not alive_after:
            self._on_death(sender)
        if self.ended:
            return
        self._resolve_receptions(rec)

    def _resolve_receptions(self, rec):
        energy = self.cfg.energy
        zero = rec.frame.is_control and self.cfg.sim.zero_cost_discovery
        for h in self.neighbors[rec.sender]:
            meter = self.nodes[h].meter
            if not meter.alive:
                continue
            if any(r.sender == h and r.start < rec.end and r.end > rec.start
                   for r in self.txs):
                continue  # half-duplex: was transmitting itself
            listen_start = max(meter.last_accounted, rec.start)
            if not meter.accrue_idle(listen_start, energy):
                self._on_death(h)
                if self.ended:
                    return
                continue
            concurrent = [self.power[r.sender][h] for r in self.txs
                          if r is not rec and r.sender != h
                          and r.start < rec.end and r.end > rec.start]
            decision = linkbudget.reception_decision(self.power[rec.sender][h],
                                                     concurrent, self.cfg.radio)
            if decision is Reception.COLLIDED:
                self.trace(h, "collision", "pkt=%s" % rec.frame.uid)
                continue
            if not decision.ok:
                continue
            rx_cost = 0.0 if zero else energy.rx_power_w * rec.airtime
            if not meter.debit(rx_cost, "rx", listen_start, energy.rx_power_w):
                self._on_death(h)
                if self.ended:
                    return
                continue
            meter.last_accounted = max(meter.last_accounted, rec.end)
            self.schedule(rec.end + self.dist[rec.sender][h] / SPEED_OF_LIGHT,
                          "_ev_rx_deliver", h, rec)

    def _lossless_send(self, sender, frame):
        """Idealized control flood: no contention, no interference, every
        in-range living node decodes.  Costs still apply unless discovery is
        also zero-cost, charged instantaneously (overlapping ideal floods make
        per-window idle exclusion ill-defined)."""
        energy = self.cfg.energy
        airtime = self.airtime_control
        zero = self.cfg.sim.zero_cost_discovery
        meter = self.nodes[sender].meter
        cost = 0.0 if zero else energy.tx_power_w * airtime
        if not meter.debit(cost, "tx", self.now, energy.tx_power_w):
            self._on_death(sender)
            return
        rec = Tx(sender, self.now, self.now + airtime, frame, airtime, cost,
                 False)
        for h in self.neighbors[sender]:
            m2 = self.nodes[h].meter
            if not m2.alive:
                continue
            if not m2.accrue_idle(max(m2.last_accounted, self.now), energy):
                self._on_death(h)
                if self.ended:
                    return
                continue
            rx_cost = 0.0 if zero else energy.rx_power_w * airtime
            if not m2.debit(rx_cost, "rx", self.now, energy.rx_power_w):
                self._on_death(h)
                if self.ended:
                    return
                continue
            self.schedule(self.now + airtime
                          + self.dist[sender][h] / SPEED_OF_LIGHT,
                          "_ev_rx_deliver", h, rec)

    # -- reception ------------------------------------------------------------

    def _ev_rx_deliver(self, h, rec):
        if self.ended or not self.nodes[h].meter.alive:
            return
        frame = rec.frame
        if frame.kind == "data":
            pkt = frame.body
            if frame.to != h:
                return  # overheard unicast; energy already paid
            self.pending.pop((rec.sender, pkt.uid), None)
            if pkt.destination == h:
                self.delivered += 1
                self.trace(h, "deliver", "pkt=%s" % pkt.uid)
                if pkt.rid in self.by_rid:
                    self.by_rid[pkt.rid].delivered += 1
            else:
                self._attempt_tx(h, Frame("data", pkt, None, pkt.uid), 0)
            return
        router = self.nodes[h].router
        if frame.kind == "rreq":
            self._dispatch_rreq(h, frame.body,
                                router.handle_rreq(frame.body, rec.sender,
                                                   self.nodes[h].meter.residual))
        elif frame.kind == "rrep":
            if frame.to == h:
                self._dispatch_rrep(h, frame.body,
                                    router.handle_rrep(frame.body, rec.sender))
        elif frame.kind == "rerr":
            if frame.to == h:
                self._dispatch_rerr(h, router.handle_rerr(frame.body))

    def _dispatch_rreq(self, h, rreq, actions):
        for act in actions:
            kind = act[0]
            if kind == "drop":
                self.trace(h, "rreq_drop", "src=%d seq=%d reason=%s" %
                           (rreq.source, rreq.seq, act[1]))
            elif kind == "accept":
                self.trace(h, "rreq_accept", "src=%d seq=%d hop=%d energy=%r" %
                           (rreq.source, rreq.seq, act[1], act[2]))
            elif kind == "forward":
                fwd = act[1]
                self.trace(h, "rreq_forward", "src=%d seq=%d hop=%d energy=%r" %
                           (fwd.source, fwd.seq, fwd.hop_count,
                            fwd.accumulated_energy))
                delay = routing.rebroadcast_delay(self.cfg.routing.mode,
                                                  self.cfg.routing.jitter_max_s,
                                                  self.rng)
                self.schedule(self.now + delay, "_attempt_tx", h,
                              Frame("rreq", fwd, None, self._frame_uid()), 0)
            elif kind == "answer":
                rrep, to = act[1], act[2]
                self.trace(h, "rrep_send", "to=%d origin=%d seq=%d energy=%r" %
                           (to, rrep.source, rrep.seq, rrep.path_energy))
                self._attempt_tx(h, Frame("rrep", rrep, to, self._frame_uid()),
                                 0)

    def _dispatch_rrep(self, h, rrep, actions):
        for act in actions:
            kind = act[0]
            if kind == "adopt":
                self._on_adopt(act[1])
            elif kind == "relay":
                r2, to = act[1], act[2]
                self.trace(h, "rrep_relay", "to=%d origin=%d seq=%d hop=%d" %
                           (to, r2.source, r2.seq, r2.hop_count))
                self._attempt_tx(h, Frame("rrep", r2, to, self._frame_uid()), 0)
            elif kind == "drop":
                self.trace(h, "rrep_drop", "origin=%d seq=%d reason=%s" %
                           (rrep.source, rrep.seq, act[1]))

    def _dispatch_rerr(self, h, actions):
        for act in actions:
            kind = act[0]
            if kind == "rerr_at_source":
                if self.current_route is not None:
                    self._retire(self.current_route, "failure")
                self._start_discovery()
            elif kind == "relay_rerr":
                r2, to = act[1], act[2]
                self.trace(h, "rerr_send", "to=%d unreachable=%d" %
                           (to, r2.unreachable_destination))
                self._attempt_tx(h, Frame("rerr", r2, to, self._frame_uid()), 0)
            elif kind == "drop":
                self.trace(h, "rerr_drop", "reason=%s" % act[1])

    # -- route bookkeeping ----------------------------------------------------

    def _on_adopt(self, entry):
        if self.current_route is not None:
            self._retire(self.current_route, "superseded")
        rid = self.next_rid
        self.next_rid += 1
        record = RouteRecord(rid=rid, seq=entry.seq, path=self._walk_path(),
                             established=self.now)
        self.records.append(record)
        self.by_rid[rid] = record
        self.current_route = record
        self.trace(self.cfg.sim.source, "route_adopt",
                   "rid=%d seq=%d hops=%d energy=%r path=%s" %
                   (rid, entry.seq, entry.hop_count, entry.path_energy,
                    "-".join(str(n) for n in record.path)))
        if self.burst is not None and entry.seq >= self.burst["seq"]:
            self.burst = None
        self._flush_queue()

    def _walk_path(self) -> tuple:
        """The hop sequence data will actually take: follow per-node forward
        entries from the source (advertised hops/energy may describe an older
        relay chain)."""
        sim = self.cfg.sim
        path = [sim.source]
        cur = sim.source
        for _ in range(self.cfg.routing.ttl + 1):
            entry = self.nodes[cur].router.route_for(sim.sink)
            if entry is None:
                break
            cur = entry.next_hop
            if cur in path:
                break
            path.append(cur)
            if cur == sim.sink:
                break
        return tuple(path)

    def _retire(self, record, reason):
        record.retired = self.now
        record.reason = reason
        self.trace(self.cfg.sim.source, "route_retire",
                   "rid=%d seq=%d path=%s est=%r ret=%r sent=%d delivered=%d"
                   " reason=%s" %
                   (record.rid, record.seq,
                    "-".join(str(n) for n in record.path), record.established,
                    record.retired, record.sent, record.delivered, reason))
        if record is self.current_route:
            self.current_route = None

    def _ev_ack_timeout(self, sender, pkt, to):
        if self.ended or (sender, pkt.uid) not in self.pending:
            return
        self.pending.pop((sender, pkt.uid))
        if not self.nodes[sender].meter.alive:
            return
        self.trace(sender, "link_fail", "pkt=%s next=%d" % (pkt.uid, to))
        router = self.nodes[sender].router
        if sender == self.cfg.sim.source:
            if (self.current_route is not None
                    and pkt.rid == self.current_route.rid):
                router.invalidate(pkt.destination)
                self._retire(self.current_route, "failure")
                self._start_discovery()
        else:
            router.invalidate(pkt.destination)
            self._send_rerr(sender, pkt.destination, pkt.origin)

    # -- periodic audit -------------------------------------------------------

    def _ev_audit(self):
        if self.ended:
            return
        for i in sorted(self.nodes):
            transmitting = any(r.sender == i and r.end > self.now
                               for r in self.txs)
            if not transmitting and not self.touch(i):
                if self.ended:
                    return
            err = self.nodes[i].meter.conservation_error()
            if err > 1e-9:
                raise SimulationError(
                    "energy conservation violated at node %d: %g" % (i, err))
        self.txs = [r for r in self.txs if r.end > self.now - 1.0]
        nxt = self.now + self.cfg.sim.audit_interval_s
        if nxt <= self.cfg.sim.duration_s:
            self.schedule(nxt, "_ev_audit")

    # -- end of run -----------------------------------------------------------

    def _finish(self) -> RunStats:
        sim = self.cfg.sim
        t_end = self.end_time if self.end_time is not None else sim.duration_s
        self.now = t_end
        self.ended = True
        for i in sorted(self.nodes):
            meter = self.nodes[i].meter
            if meter.alive:
                target = max(meter.last_accounted, t_end)
                if not meter.accrue_idle(target, self.cfg.energy):
                    self._on_death(i)
        if self.current_route is not None:
            reason = "partition" if self.partition_time is not None else "end"
            self._retire(self.current_route, reason)
        per_node = {}
        for i in sorted(self.nodes):
            meter = self.nodes[i].meter
            err = meter.conservation_error()
            if err > 1e-9:
                raise SimulationError(
                    "energy conservation violated at node %d: %g" % (i, err))
            c = meter.consumed
            per_node[i] = {"alive": meter.alive, "death_time": meter.death_time,
                           "initial": meter.initial, "residual": meter.residual,
                           "tx": c["tx"], "rx": c["rx"], "idle": c["idle"],
                           "sleep": c["sleep"]}
            self.trace(i, "node_summary",
                       "alive=%s residual=%r initial=%r tx=%r rx=%r idle=%r"
                       " sleep=%r death=%s" %
                       ("true" if meter.alive else "false", meter.residual,
                        meter.initial, c["tx"], c["rx"], c["idle"], c["sleep"],
                        "none" if meter.death_time is None
                        else repr(meter.death_time)))
        ratio = self.delivered / self.generated if self.generated else 0.0
        stats = RunStats(generated=self.generated, delivered=self.delivered,
                         delivery_ratio=ratio, discoveries=self.discoveries,
                         partition_time=self.partition_time,
                         routes=list(self.records), per_node=per_node,
                         avg=average_split(per_node))
        if self.trace_lines is not None:
            self.trace_lines.append("%.9f - stats %s" % (
                t_end, json.dumps(stats.to_dict(), sort_keys=True,
                                  separators=(",", ":"))))
        self.stats = stats
        return stats


def run(cfg, trace: bool = False):
    """Build, validate and execute one run; returns (stats, trace_lines)."""
    sim = Simulation(cfg, trace=trace)
    stats = sim.run()
    return stats, sim.trace_lines
