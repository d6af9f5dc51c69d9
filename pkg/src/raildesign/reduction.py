"""Exact-cover-by-3-sets instances, their railway-network encoding, and a
brute-force decider.  The encoding doubles as a correctness-test generator:
the network design optimum hits the 3q threshold exactly when the cover
exists.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .model import Arc, HeadwayTable, Instance, Network, Node, TrainRequest


@dataclass(frozen=True)
class X3cInstance:
    ground_set: tuple  # element ids, |X| = 3q
    subsets: tuple  # of frozensets, 3 distinct elements each

    def validate(self):
        if len(self.ground_set) % 3 != 0:
            raise ValueError("|X| must be divisible by 3")
        if len(set(self.ground_set)) != len(self.ground_set):
            raise ValueError("ground set elements must be distinct")
        ground = set(self.ground_set)
        for s in self.subsets:
            if len(set(s)) != 3:
                raise ValueError(f"subset {sorted(s)} must have exactly 3 distinct elements")
            stray = set(s) - ground
            if stray:
                raise ValueError(f"subset element(s) {sorted(stray)} outside the ground set")

    @property
    def q(self):
        return len(self.ground_set) // 3


def x3c_to_instance(x3c: X3cInstance, unit_capacity_encoding: bool = False):
    """Railway encoding of an X3C instance; returns (instance, threshold 3q).

    Layer graph s -> subset nodes -> element nodes -> t, all travel times 1;
    3q identical trains must cross in exactly 3 steps, so each departs at
    time 0.  Subset arcs carry expandable capacity 3 at cost 3; unit arcs are
    either the expandable c=0/c~=1/k=0 encoding (default, exercising the
    expansion logic) or plain capacity-1 arcs.
    """
    x3c.validate()
    q = x3c.q
    nodes = [Node("s"), Node("t")]
    nodes += [Node(f"C{i}") for i in range(len(x3c.subsets))]
    elem_node = {}
    for j, x in enumerate(x3c.ground_set):
        elem_node[x] = f"E{j}"
        nodes.append(Node(f"E{j}"))
    if unit_capacity_encoding:
        unit = dict(capacity=1, expandable_capacity=0, expansion_cost=Fraction(0))
    else:
        unit = dict(capacity=0, expandable_capacity=1, expansion_cost=Fraction(0))
    arcs = []
    for i, subset in enumerate(x3c.subsets):
        arcs.append(Arc(frm="s", to=f"C{i}", travel_time=1, capacity=0,
                        expandable_capacity=3, expansion_cost=Fraction(3)))
    for i, subset in enumerate(x3c.subsets):
        for x in sorted(subset):
            arcs.append(Arc(frm=f"C{i}", to=elem_node[x], travel_time=1, **unit))
    for x in x3c.ground_set:
        arcs.append(Arc(frm=elem_node[x], to="t", travel_time=1, **unit))
    trains = tuple(
        TrainRequest(id=f"T{k:02d}", origin="s", destination="t",
                     earliest_departure=0, latest_arrival=3)
        for k in range(3 * q)
    )
    instance = Instance(
        network=Network(nodes=tuple(nodes), arcs=tuple(arcs), headways=HeadwayTable()),
        horizon=3,
        trains=trains,
        capacity_window=3,
        allow_dwell=False,
    )
    return instance, Fraction(3 * q)


def x3c_brute_force(x3c: X3cInstance) -> bool:
    """Exhaustive search for q pairwise-disjoint covering subsets."""
    x3c.validate()
    if len(x3c.subsets) > 20:
        raise ValueError("brute force is guarded to at most 20 subsets")
    ground = frozenset(x3c.ground_set)
    subsets = [frozenset(s) for s in x3c.subsets]
    by_element = {}
    for i, s in enumerate(subsets):
        for x in s:
            by_element.setdefault(x, []).append(i)

    def cover(remaining):
        if not remaining:
            return True
        x = min(remaining)
        for i in by_element.get(x, []):
            if subsets[i] <= remaining:
                if cover(remaining - subsets[i]):
                    return True
        return False

    return cover(ground)


def gen_random_x3c(q: int, num_subsets: int, seed: int, planted: bool = True) -> X3cInstance:
    """Deterministic random instance; with planted=True a cover is built in."""
    if q < 1:
        raise ValueError("q must be >= 1")
    if num_subsets < q:
        raise ValueError("need at least q subsets")
    rng = random.Random(seed)
    ground = [f"x{j + 1}" for j in range(3 * q)]
    chosen = set()
    if planted:
        shuffled = ground[:]
        rng.shuffle(shuffled)
        for k in range(q):
            chosen.add(frozenset(shuffled[3 * k:3 * k + 3]))
    attempts = 0
    while len(chosen) < num_subsets:
        chosen.add(frozenset(rng.sample(ground, 3)))
        attempts += 1
        if attempts > 10000:
            raise ValueError("cannot draw enough distinct subsets")
    subsets = sorted(chosen, key=lambda s: sorted(s))
    return X3cInstance(ground_set=tuple(ground), subsets=tuple(subsets))


def worked_example() -> X3cInstance:
    """X = {x1..x6}, C = {{x1,x3,x4},{x1,x4,x5},{x2,x5,x6}}; has a cover."""
    return X3cInstance(
        ground_set=("x1", "x2", "x3", "x4", "x5", "x6"),
        subsets=(frozenset({"x1", "x3", "x4"}),
                 frozenset({"x1", "x4", "x5"}),
                 frozenset({"x2", "x5", "x6"})),
    )
