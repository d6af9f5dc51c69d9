"""Time-expanded graph: one copy of every node per time step.

Movement arcs connect (i, t) to (j, t + travel_time) for each network arc;
dwell arcs connect (i, t) to (i, t + 1) and let a train wait in a station.
Dwell arcs carry no capacity and no cost; whether they may be used at all
is decided by the constraint builder, not here.
"""

from __future__ import annotations

from dataclasses import dataclass

MOVEMENT = "movement"
DWELL = "dwell"


@dataclass(frozen=True)
class TimeNode:
    node: str
    t: int


@dataclass(frozen=True)
class TimeArc:
    frm: TimeNode
    to: TimeNode
    kind: str
    arc_index: int | None = None  # index into network.arcs, movement only


class TimeExpandedGraph:
    def __init__(self, network, horizon):
        self.network = network
        self.horizon = horizon
        self.time_arcs = []
        self.out_adjacency = {}  # (node, t) -> list of time-arc indexes
        self.in_adjacency = {}
        # movement lookup: (arc_index, depart t) -> time-arc index
        self.movement_index = {}
        # dwell lookup: (node, t) -> time-arc index
        self.dwell_index = {}

        for ai, arc in enumerate(network.arcs):
            for t in range(0, horizon - arc.travel_time + 1):
                ta = TimeArc(TimeNode(arc.frm, t), TimeNode(arc.to, t + arc.travel_time),
                             MOVEMENT, ai)
                self._add(ta)
                self.movement_index[(ai, t)] = len(self.time_arcs) - 1
        for node in network.nodes:
            for t in range(0, horizon):
                ta = TimeArc(TimeNode(node.id, t), TimeNode(node.id, t + 1), DWELL)
                self._add(ta)
                self.dwell_index[(node.id, t)] = len(self.time_arcs) - 1

    def _add(self, ta):
        idx = len(self.time_arcs)
        self.time_arcs.append(ta)
        self.out_adjacency.setdefault((ta.frm.node, ta.frm.t), []).append(idx)
        self.in_adjacency.setdefault((ta.to.node, ta.to.t), []).append(idx)

    @property
    def movement_arcs(self):
        return [ta for ta in self.time_arcs if ta.kind == MOVEMENT]

    @property
    def dwell_arcs(self):
        return [ta for ta in self.time_arcs if ta.kind == DWELL]


def expand(network, horizon) -> TimeExpandedGraph:
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    return TimeExpandedGraph(network, horizon)


def adjacency(graph: TimeExpandedGraph, i: str, t: int, j: str) -> bool:
    """True iff a movement arc departs (i, t) toward j."""
    for idx in graph.out_adjacency.get((i, t), []):
        ta = graph.time_arcs[idx]
        if ta.kind == MOVEMENT and ta.to.node == j:
            return True
    return False


def dump(graph: TimeExpandedGraph) -> str:
    """Line-oriented debug format, one `i t -> j t'` line per time arc."""
    lines = []
    for ta in graph.time_arcs:
        lines.append(f"{ta.frm.node} {ta.frm.t} -> {ta.to.node} {ta.to.t} {ta.kind}")
    return "\n".join(lines) + "\n"
