"""Reactive route discovery state machines: baseline AODV and the
energy-aware variant that keeps equal-hop duplicates when they improve the
accumulated residual energy of the path.

Handlers are pure transitions (state, packet) -> (state, actions); the event
engine interprets the returned action tuples.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

MODE_AODV = "aodv"
MODE_NEWAODV = "newaodv"
MODES = (MODE_AODV, MODE_NEWAODV)

REBROADCAST_BASE_S = {MODE_AODV: 0.01, MODE_NEWAODV: 0.05}


def rebroadcast_delay(mode: str, jitter_max_s: float, rng) -> float:
    """Per-hop pause before re-flooding a route request, plus tie-break jitter."""
    return REBROADCAST_BASE_S[mode] + rng.uniform(0.0, jitter_max_s)


@dataclass(frozen=True)
class Rreq:
    source: int
    destination: int
    seq: int
    hop_count: int
    accumulated_energy: float  # sum of residuals sampled at each processing node
    ttl: int
    traversed: tuple = ()      # ((node, residual), ...) consistency samples


@dataclass(frozen=True)
class Rrep:
    source: int        # the node that originated the discovery
    destination: int   # the answering node (route destination)
    seq: int
    hop_count: int     # hops from the destination to the current receiver
    path_energy: float


@dataclass(frozen=True)
class Rerr:
    unreachable_destination: int
    failure_origin: int
    source: int        # data origin the message is routed toward


@dataclass
class RouteEntry:
    destination: int
    next_hop: int
    hop_count: int
    seq: int
    path_energy: float
    valid: bool = True


@dataclass(frozen=True)
class ReverseRouteEntry:
    origin: int
    previous_hop: int
    hop_count: int
    seq: int
    path_energy: float


class Router:
    """Per-node routing state: discovery acceptance, tables, reply relaying."""

    def __init__(self, node_id: int, mode: str, ttl: int) -> None:
        if mode not in MODES:
            raise ValueError("unknown routing mode %r" % mode)
        if ttl < 1:
            raise ValueError("ttl must be >= 1")
        self.node = node_id
        self.mode = mode
        self.ttl = ttl
        self.seq = 0
        self.rreq_best = {}       # source -> (seq, hop, energy) of best accepted copy
        self.reverse = {}         # (origin, seq) -> ReverseRouteEntry
        self.reverse_latest = {}  # origin -> newest seq with a reverse entry
        self.routes = {}          # destination -> RouteEntry

    # -- discovery -----------------------------------------------------------

    def originate_rreq(self, destination: int, residual: float) -> Rreq:
        self.seq += 1
        return Rreq(source=self.node, destination=destination, seq=self.seq,
                    hop_count=0, accumulated_energy=residual, ttl=self.ttl,
                    traversed=((self.node, residual),))

    def handle_rreq(self, rreq: Rreq, previous_hop: int, residual: float):
        if rreq.source == self.node:
            return [("drop", "own_rreq")]
        hop = rreq.hop_count + 1
        if hop > rreq.ttl:
            return [("drop", "ttl_exceeded")]
        energy = rreq.accumulated_energy + residual
        best = self.rreq_best.get(rreq.source)
        if best is not None:
            seq0, hop0, energy0 = best
            if rreq.seq < seq0:
                return [("drop", "stale_seq")]
            if rreq.seq == seq0:
                if hop > hop0:
                    return [("drop", "worse_hop")]
                if hop == hop0:
                    if self.mode != MODE_NEWAODV:
                        return [("drop", "duplicate_hop")]
                    if energy <= energy0:
                        return [("drop", "worse_energy")]
        self.rreq_best[rreq.source] = (rreq.seq, hop, energy)
        self.reverse[(rreq.source, rreq.seq)] = ReverseRouteEntry(
            origin=rreq.source, previous_hop=previous_hop, hop_count=hop,
            seq=rreq.seq, path_energy=energy)
        if self.reverse_latest.get(rreq.source, -1) < rreq.seq:
            self.reverse_latest[rreq.source] = rreq.seq
        traversed = rreq.traversed + ((self.node, residual),)
        assert abs(energy - sum(r for _, r in traversed)) <= 1e-9 * max(1.0, abs(energy)), \
            "accumulated energy drifted from its per-node samples"
        if rreq.destination == self.node:
            rrep = Rrep(source=rreq.source, destination=self.node, seq=rreq.seq,
                        hop_count=1, path_energy=energy)
            return [("accept", hop, energy), ("answer", rrep, previous_hop)]
        forward = replace(rreq, hop_count=hop, accumulated_energy=energy,
                          traversed=traversed)
        return [("accept", hop, energy), ("forward", forward)]

    # -- replies -------------------------------------------------------------

    def _better(self, new: RouteEntry, old) -> bool:
        if old is None or not old.valid:
            return True
        if new.seq != old.seq:
            return new.seq > old.seq
        if new.hop_count != old.hop_count:
            return new.hop_count < old.hop_count
        return self.mode == MODE_NEWAODV and new.path_energy > old.path_energy

    def handle_rrep(self, rrep: Rrep, from_node: int):
        actions = []
        candidate = RouteEntry(destination=rrep.destination, next_hop=from_node,
                               hop_count=rrep.hop_count, seq=rrep.seq,
                               path_energy=rrep.path_energy)
        installed = self._better(candidate, self.routes.get(rrep.destination))
        if installed:
            self.routes[rrep.destination] = candidate
            actions.append(("install", candidate))
        if rrep.source == self.node:
            actions.append(("adopt", candidate) if installed else ("drop", "not_better"))
            return actions
        rev = self.reverse.get((rrep.source, rrep.seq))
        if rev is None:
            actions.append(("drop", "no_reverse"))
            return actions
        actions.append(("relay", replace(rrep, hop_count=rrep.hop_count + 1),
                        rev.previous_hop))
        return actions

    # -- failures ------------------------------------------------------------

    def handle_rerr(self, rerr: Rerr):
        actions = []
        entry = self.routes.get(rerr.unreachable_destination)
        if entry is not None and entry.valid:
            entry.valid = False
            actions.append(("invalidate", rerr.unreachable_destination))
        if rerr.source == self.node:
            actions.append(("rerr_at_source",))
            return actions
        seq = self.reverse_latest.get(rerr.source)
        if seq is None:
            actions.append(("drop", "no_reverse"))
            return actions
        actions.append(("relay_rerr", rerr, self.reverse[(rerr.source, seq)].previous_hop))
        return actions

    # -- table access --------------------------------------------------------

    def route_for(self, destination: int):
        entry = self.routes.get(destination)
        if entry is not None and entry.valid:
            return entry
        return None

    def invalidate(self, destination: int) -> None:
        entry = self.routes.get(destination)
        if entry is not None:
            entry.valid = False
