"""Shared builders and brute-force oracles for the test suite."""

import itertools
import random
from fractions import Fraction

from raildesign.model import (Arc, HeadwayTable, Instance, Network, Node,
                              Scenario, TrainRequest)


def mk_network(arc_specs, headways=None, extra_nodes=()):
    """Network from (frm, to, tt, c, c_exp, k[, mult]) tuples; nodes inferred."""
    arcs = []
    names = []
    for spec in arc_specs:
        frm, to, tt, c, ce, k = spec[:6]
        mult = spec[6] if len(spec) > 6 else 1
        arcs.append(Arc(frm=frm, to=to, travel_time=tt, capacity=c,
                        expandable_capacity=ce, expansion_cost=Fraction(k),
                        multiplicity=mult))
        names += [frm, to]
    for n in extra_nodes:
        names.append(n)
    seen = []
    for n in names:
        if n not in seen:
            seen.append(n)
    return Network(nodes=tuple(Node(n) for n in seen), arcs=tuple(arcs),
                   headways=headways or HeadwayTable())


def mk_train(tid, origin, dest, dep, arr, optional=False, penalty=None, via=()):
    return TrainRequest(id=tid, origin=origin, destination=dest,
                        earliest_departure=dep, latest_arrival=arr,
                        optional=optional,
                        penalty=Fraction(penalty) if penalty is not None else None,
                        via_nodes=tuple(via))


def line_instance(c, ce, k, n_trains, horizon=2, window=1, dwell=True,
                  headway_default=0, dep=0, arr=None):
    """Single arc A->B with n identical trains; the workhorse tiny instance."""
    net = mk_network([("A", "B", 1, c, ce, k)],
                     headways=HeadwayTable(default=headway_default))
    arr = horizon if arr is None else arr
    trains = tuple(mk_train(f"T{i}", "A", "B", dep, arr) for i in range(n_trains))
    return Instance(network=net, horizon=horizon, trains=trains,
                    capacity_window=window, allow_dwell=dwell)


def row_satisfied(row, bits):
    lhs = sum(Fraction(c) * bits[v] for v, c in row.terms)
    if row.sense == "<=":
        return lhs <= row.rhs
    if row.sense == ">=":
        return lhs >= row.rhs
    return lhs == row.rhs


def enumerate_system(system):
    """Exhaustive 2^n oracle: (status, optimal objective or None)."""
    n = len(system.variables)
    obj = {v: Fraction(0) for v in range(n)}
    for vid, c in system.objective:
        obj[vid] += Fraction(c)
    best = None
    for bits in itertools.product((0, 1), repeat=n):
        if all(row_satisfied(row, bits) for row in system.rows):
            value = Fraction(system.objective_constant) \
                + sum(obj[v] * bits[v] for v in range(n))
            if best is None or value < best:
                best = value
    if best is None:
        return "infeasible", None
    return "optimal", best


# ---------------------------------------------------------------------------
# random instance generators for the special-case oracle comparisons


def random_arborescence_instance(rng: random.Random):
    """Random directed tree with tight train windows (fixed departures)."""
    n = rng.randint(3, 10)
    names = [f"N{i}" for i in range(n)]
    arcs = []
    children = {name: [] for name in names}
    for i in range(1, n):
        p = rng.randrange(i)
        tt = rng.randint(1, 2)
        arcs.append((names[p], names[i], tt, rng.randint(0, 2), rng.randint(0, 2),
                     rng.randint(0, 6)))
        children[names[p]].append((names[i], tt))
    net = mk_network(arcs)

    horizon = rng.randint(4, 10)
    trains = []
    for k in range(rng.randint(1, 6)):
        origin = rng.choice([nm for nm in names if children[nm]])
        node, total_tt = origin, 0
        while children[node] and (node == origin or rng.random() < 0.6):
            nxt, tt = rng.choice(children[node])
            node, total_tt = nxt, total_tt + tt
        dep = rng.randint(0, 2)
        trains.append(mk_train(f"T{k:02d}", origin, node, dep, dep + total_tt))
    scenarios = ()
    if len(trains) >= 2 and rng.random() < 0.4:
        cut = rng.randint(1, len(trains) - 1)
        ids = [t.id for t in trains]
        scenarios = (Scenario("S1", tuple(ids[:cut])), Scenario("S2", tuple(ids[cut:])))
    return Instance(network=net, horizon=horizon, trains=tuple(trains),
                    scenarios=scenarios,
                    capacity_window=rng.randint(1, horizon), allow_dwell=False)


def _random_sp_arcs(rng, budget, used, s, t, fresh):
    """Arc list for a random SP block from s to t; never duplicates a pair."""
    def leaf(u, v):
        if (u, v) in used or u == v:
            mid = f"M{next(fresh)}"
            return leaf(u, mid) + leaf(mid, v)
        used.add((u, v))
        return [(u, v, rng.randint(1, 2), rng.randint(0, 2), rng.randint(0, 3),
                 rng.randint(0, 5))]

    if budget <= 1:
        return leaf(s, t)
    shape = rng.random()
    if shape < 0.4:
        return leaf(s, t)
    half = rng.randint(1, budget - 1)
    if shape < 0.7:
        mid = f"M{next(fresh)}"
        return (_random_sp_arcs(rng, half, used, s, mid, fresh)
                + _random_sp_arcs(rng, budget - half, used, mid, t, fresh))
    return (_random_sp_arcs(rng, half, used, s, t, fresh)
            + _random_sp_arcs(rng, budget - half, used, s, t, fresh))


def random_sp_instance(rng: random.Random, max_arcs=12, max_trains=6):
    """Random two-terminal SP network, uniform trains, window = horizon."""
    while True:
        fresh = itertools.count()
        arcs = _random_sp_arcs(rng, rng.randint(1, max_arcs), set(), "s", "t", fresh)
        if len(arcs) <= max_arcs:  # leaf subdivision can overshoot by a couple
            break
    net = mk_network(arcs)
    min_tt = min(tt for (_, _, tt, *_rest) in arcs)
    horizon = rng.randint(max(1, min_tt), sum(tt for (_, _, tt, *_r) in arcs) + 1)
    trains = tuple(mk_train(f"T{k:02d}", "s", "t", 0, horizon)
                   for k in range(rng.randint(0, max_trains)))
    return Instance(network=net, horizon=horizon, trains=trains,
                    capacity_window=horizon, allow_dwell=False)
