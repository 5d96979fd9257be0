"""Node placement (square / honeycomb grids, jitter) and initial-energy ladders."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)

# 3x3 layout with column-major ids, columns bottom-to-top: [7,3,6],[4,0,2],[8,1,5]
FIG3_IDS = ((7, 3, 6), (4, 0, 2), (8, 1, 5))


class ValidationError(Exception):
    """Topology/radio combination violates a structural invariant."""


@dataclass(frozen=True)
class Topology:
    nodes: tuple  # ((id, (x, y, z)), ...)
    kind: str  # "square" | "hexagonal"
    spacing_m: float
    jittered: bool = False

    def __post_init__(self) -> None:
        ids = sorted(i for i, _ in self.nodes)
        if ids != list(range(len(ids))):
            raise ValidationError("node ids must be unique and contiguous from 0")

    @property
    def ids(self):
        return sorted(i for i, _ in self.nodes)

    def positions(self) -> dict:
        return {i: p for i, p in self.nodes}

    def distance(self, a: int, b: int) -> float:
        pos = self.positions()
        ax, ay, _ = pos[a]
        bx, by, _ = pos[b]
        return math.hypot(ax - bx, ay - by)


def square_grid(rows: int, cols: int, spacing_m: float, antenna_height_m: float,
                id_layout: str = "row_major") -> Topology:
    if rows < 1 or cols < 1:
        raise ValidationError("rows and cols must be >= 1")
    if spacing_m <= 0.0:
        raise ValidationError("spacing must be > 0")
    nodes = []
    if id_layout == "row_major":
        for r in range(rows):
            for c in range(cols):
                nodes.append((r * cols + c,
                              (c * spacing_m, r * spacing_m, antenna_height_m)))
    elif id_layout == "fig3":
        if (rows, cols) != (3, 3):
            raise ValidationError("fig3 layout is a fixed 3x3 arrangement")
        for c in range(3):
            for r in range(3):
                nodes.append((FIG3_IDS[c][r],
                              (c * spacing_m, r * spacing_m, antenna_height_m)))
    else:
        raise ValidationError("unknown id_layout %r" % id_layout)
    nodes.sort()
    return Topology(nodes=tuple(nodes), kind="square", spacing_m=spacing_m)


def hexagonal(rows: int, cols: int, spacing_m: float,
              antenna_height_m: float) -> Topology:
    """Honeycomb lattice: edge length = spacing, interior degree 3.

    Node (r, c) sits at x = c*(sqrt3/2)*s, y = 1.5*s*r (+ s/2 when r+c is odd);
    nearest neighbors are at s, next-nearest at sqrt3*s.
    """
    if rows < 1 or cols < 1:
        raise ValidationError("rows and cols must be >= 1")
    if spacing_m <= 0.0:
        raise ValidationError("spacing must be > 0")
    nodes = []
    for r in range(rows):
        for c in range(cols):
            x = c * (SQRT3 / 2.0) * spacing_m
            y = 1.5 * spacing_m * r + (spacing_m / 2.0 if (r + c) % 2 else 0.0)
            nodes.append((r * cols + c, (x, y, antenna_height_m)))
    return Topology(nodes=tuple(nodes), kind="hexagonal", spacing_m=spacing_m)


def jitter(topo: Topology, max_offset_m: float, seed: int) -> Topology:
    """Perturb x/y by uniform offsets in [-max_offset, +max_offset], deterministically."""
    if max_offset_m < 0.0:
        raise ValidationError("jitter offset must be >= 0")
    if max_offset_m == 0.0:
        return topo
    rng = random.Random(seed)
    nodes = []
    for i, (x, y, z) in sorted(topo.nodes):
        nodes.append((i, (x + rng.uniform(-max_offset_m, max_offset_m),
                          y + rng.uniform(-max_offset_m, max_offset_m), z)))
    return Topology(nodes=tuple(nodes), kind=topo.kind, spacing_m=topo.spacing_m,
                    jittered=True)


def neighbors(topo: Topology, range_m: float) -> dict:
    """Symmetric hearing relation: ids within range_m (ground distance)."""
    pos = topo.positions()
    ids = topo.ids
    out = {i: [] for i in ids}
    for n, a in enumerate(ids):
        for b in ids[n + 1:]:
            if topo.distance(a, b) <= range_m:
                out[a].append(b)
                out[b].append(a)
    return {i: sorted(v) for i, v in out.items()}


def validate(topo: Topology, range_m: float, strict: bool = True):
    """Check the hearing-structure invariants for the topology kind.

    Square grids must hear orthogonal neighbors but not diagonals
    (spacing <= range < spacing*sqrt2); honeycombs must hear lattice edges but
    not next-nearest pairs (spacing <= range < spacing*sqrt3). Returns a list
    of violation messages; raises instead when strict.
    """
    problems = []
    if len(topo.nodes) > 1:
        if range_m < topo.spacing_m:
            problems.append("range %.6g m cannot reach grid neighbors at spacing %.6g m"
                            % (range_m, topo.spacing_m))
        limit = topo.spacing_m * (SQRT2 if topo.kind == "square" else SQRT3)
        if range_m >= limit:
            problems.append("range %.6g m reaches beyond nearest neighbors "
                            "(limit %.6g m for %s spacing %.6g m)"
                            % (range_m, limit, topo.kind, topo.spacing_m))
        cap = 4 if topo.kind == "square" else 3
        for i, nbrs in sorted(neighbors(topo, range_m).items()):
            if len(nbrs) > cap:
                problems.append("node %d has %d neighbors (max %d for %s)"
                                % (i, len(nbrs), cap, topo.kind))
    if problems and strict and not topo.jittered:
        raise ValidationError("; ".join(problems))
    return problems


@dataclass(frozen=True)
class EnergyAssignment:
    min_energy_j: float
    step_j: float
    ordering: tuple  # node ids, rank 0 = least energy
    overrides: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.min_energy_j <= 0.0:
            raise ValidationError("min_energy_j must be > 0")
        if self.step_j < 0.0:
            raise ValidationError("step_j must be >= 0")


def bottom_to_top_left_to_right(topo: Topology) -> tuple:
    """Ladder ordering: ascend each column bottom-to-top, columns left-to-right."""
    pos = topo.positions()
    return tuple(sorted(pos, key=lambda i: (pos[i][0], pos[i][1], i)))


def assign_energies(topo: Topology, assignment: EnergyAssignment) -> dict:
    ids = topo.ids
    if sorted(assignment.ordering) != ids:
        raise ValidationError("energy ordering must cover every node id exactly once")
    energies = {node: assignment.min_energy_j + rank * assignment.step_j
                for rank, node in enumerate(assignment.ordering)}
    for node, value in assignment.overrides.items():
        if node not in energies:
            raise ValidationError("energy override for unknown node %r" % node)
        energies[node] = value
    bad = sorted(i for i, e in energies.items() if e <= 0.0)
    if bad:
        raise ValidationError("non-positive energy for nodes %s" % bad)
    return energies
