"""Exhaustive exact solver and independent feasibility checker.

Everything here re-implements the constraint rules from scratch, on
purpose: these routines anchor the differential tests, so they must not
share checking code with the model module.  Single-threaded plain Python;
built for trust on small instances, not for scale.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

from .model import (
    BLOCKED_ARC,
    COVERAGE,
    DEPOT,
    FLOW,
    LOAD,
    PRECEDENCE,
    TIME_WINDOW,
    FeasibilityMode,
    FeasibilityReport,
    InputError,
    Instance,
    ModelError,
    Route,
    RoutedSolution,
    Violation,
)


class OracleLimitError(ModelError):
    """Enumeration refused or interrupted; carries partial counts."""

    def __init__(self, message: str, explored: int = 0, feasible: int = 0):
        super().__init__(message)
        self.explored = explored
        self.feasible = feasible


@dataclass(frozen=True)
class OracleLimits:
    max_nodes: int = 8
    max_vehicles: int | None = None  # None: the whole fleet
    time_budget: float | None = None  # seconds of wall clock

    def __post_init__(self):
        if self.max_nodes > 10:
            raise InputError("oracle max_nodes is capped at 10")
        if self.max_nodes < 2:
            raise InputError("oracle max_nodes must be at least 2")


@dataclass(frozen=True)
class OracleResult:
    optimum: RoutedSolution | None
    optimal_fitness: float | None
    feasible_count: int
    explored_count: int


def count_ordered_partitions(n_prime: int, k: int, max_vehicles: int | None = None) -> int:
    """Closed-form size of the search space: permutations of the nodes cut
    into 1..min(k, N') non-empty segments assigned to an ascending choice
    of vehicles."""
    r_top = min(k, n_prime)
    if max_vehicles is not None:
        r_top = min(r_top, max_vehicles)
    total = 0
    for r in range(1, r_top + 1):
        total += math.comb(k, r) * math.comb(n_prime - 1, r - 1) * math.factorial(n_prime)
    return total


def _compositions(n: int, r: int):
    """All r-tuples of positive ints summing to n, lexicographic."""
    for cuts in itertools.combinations(range(1, n), r - 1):
        prev = 0
        shape = []
        for c in cuts:
            shape.append(c - prev)
            prev = c
        shape.append(n - prev)
        yield tuple(shape)


def enumerate_optimal(
    instance: Instance,
    mode: FeasibilityMode = FeasibilityMode.PAPER_LITERAL,
    limits: OracleLimits = OracleLimits(),
) -> OracleResult:
    """Try every ordered partition of the non-depot nodes over every
    vehicle choice and return the cheapest feasible one.

    Enumeration is lexicographic over (vehicle count, vehicle subset,
    segment shape, permutation); the first solution reaching the minimum
    wins, which makes ties deterministic.  No pruning: every leaf is
    visited and counted, so explored_count always matches
    count_ordered_partitions.
    """
    n_prime = instance.n_prime
    if n_prime > limits.max_nodes:
        raise OracleLimitError(
            f"instance has N'={n_prime}, oracle limit is {limits.max_nodes}"
        )
    fleet_size = len(instance.fleet)

    # independent numeric tables
    xs = [node.x for node in instance.nodes]
    ys = [node.y for node in instance.nodes]
    n_all = n_prime + 1
    dist = [[0.0] * n_all for _ in range(n_all)]
    for i in range(n_all):
        for j in range(n_all):
            dx = xs[i] - xs[j]
            dy = ys[i] - ys[j]
            dist[i][j] = math.sqrt(dx * dx + dy * dy)
    blocked = set(instance.blocked_arcs)
    w_open = [node.window_open for node in instance.nodes]
    w_close = [node.window_close for node in instance.nodes]
    serv = [node.service_time for node in instance.nodes]
    qty = [node.quantity for node in instance.nodes]
    caps = [v.capacity for v in instance.fleet]
    costs = [v.cost_coefficient for v in instance.fleet]
    speeds = [v.speed for v in instance.fleet]
    pairs = [(req.supplier, req.client) for req in instance.requests]
    strict = mode is FeasibilityMode.STRICT_PAIRING
    depot_closes = math.isfinite(w_close[0])

    deadline = None if limits.time_budget is None else time.monotonic() + limits.time_budget
    explored = 0
    feasible_count = 0
    best_cost = math.inf
    best: tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]] | None = None

    r_top = min(fleet_size, n_prime)
    if limits.max_vehicles is not None:
        r_top = min(r_top, limits.max_vehicles)
    ids = list(range(1, n_prime + 1))
    departure = [0.0] * n_all
    route_of = [0] * n_all
    pos_of = [0] * n_all

    for r in range(1, r_top + 1):
        for vehicles in itertools.combinations(range(fleet_size), r):
            for shape in _compositions(n_prime, r):
                for perm in itertools.permutations(ids):
                    explored += 1
                    if deadline is not None and explored % 4096 == 0:
                        if time.monotonic() > deadline:
                            raise OracleLimitError(
                                "oracle time budget exhausted",
                                explored=explored,
                                feasible=feasible_count,
                            )
                    ok = True
                    cost = 0.0
                    start = 0
                    for seg_idx in range(r):
                        k = vehicles[seg_idx]
                        cap = caps[k]
                        spd = speeds[k]
                        t = 0.0
                        q = 0.0
                        rdist = 0.0
                        prev = 0
                        for pos in range(start, start + shape[seg_idx]):
                            node = perm[pos]
                            if (prev, node) in blocked:
                                ok = False
                                break
                            leg = dist[prev][node]
                            rdist += leg
                            arr = t + leg / spd
                            st = arr if arr > w_open[node] else w_open[node]
                            t = st + serv[node]
                            if t > w_close[node]:
                                ok = False
                                break
                            q += qty[node]
                            if q < 0.0 or q > cap:
                                ok = False
                                break
                            departure[node] = t
                            route_of[node] = seg_idx
                            pos_of[node] = pos
                            prev = node
                        if not ok:
                            break
                        if (prev, 0) in blocked:
                            ok = False
                            break
                        leg = dist[prev][0]
                        rdist += leg
                        if depot_closes:
                            arr = t + leg / spd
                            st = arr if arr > w_open[0] else w_open[0]
                            if st + serv[0] > w_close[0]:
                                ok = False
                                break
                        cost += costs[k] * rdist
                        start += shape[seg_idx]
                    if not ok:
                        continue
                    for s, c in pairs:
                        if strict:
                            if route_of[s] != route_of[c] or pos_of[s] >= pos_of[c]:
                                ok = False
                                break
                        elif departure[s] > departure[c]:
                            ok = False
                            break
                    if not ok:
                        continue
                    feasible_count += 1
                    if cost < best_cost:
                        best_cost = cost
                        best = (vehicles, shape, perm)

    if best is None:
        return OracleResult(None, None, 0, explored)
    vehicles, shape, perm = best
    routes = []
    start = 0
    for seg_idx, k in enumerate(vehicles):
        routes.append(Route(vehicle=k, visits=tuple(perm[start : start + shape[seg_idx]])))
        start += shape[seg_idx]
    return OracleResult(RoutedSolution(tuple(routes)), best_cost, feasible_count, explored)


def cross_check(
    solution: RoutedSolution,
    instance: Instance,
    mode: FeasibilityMode = FeasibilityMode.PAPER_LITERAL,
) -> FeasibilityReport:
    """Independent feasibility verdict for differential testing.

    Applies the same reporting conventions as the model checker (first
    time/load failure per route, precedence judged only for exactly-once
    endpoints with defined departures) but with fully separate code.
    """
    n_prime = instance.n_prime
    fleet_size = len(instance.fleet)
    out: list[Violation] = []

    occurrences: dict[int, int] = {}
    for route in solution.routes:
        for nid in route.visits:
            occurrences[nid] = occurrences.get(nid, 0) + 1
    for nid in range(1, n_prime + 1):
        c = occurrences.get(nid, 0)
        if c == 0:
            out.append(Violation(COVERAGE, (nid,), 1.0))
        elif c > 1:
            out.append(Violation(COVERAGE, (nid,), float(c - 1)))
    for route in solution.routes:
        for nid in route.visits:
            if not 0 <= nid <= n_prime:
                out.append(Violation(COVERAGE, (nid,), 1.0))

    first_pos: dict[int, tuple[int, int]] = {}
    dep_time: dict[int, float] = {}
    used: set[int] = set()
    for ridx, route in enumerate(solution.routes):
        for vidx, nid in enumerate(route.visits):
            if 1 <= nid <= n_prime and nid not in first_pos:
                first_pos[nid] = (ridx, vidx)
        k = route.vehicle
        if not 0 <= k < fleet_size:
            out.append(Violation(DEPOT, (k,), 1.0))
            continue
        if k in used:
            out.append(Violation(FLOW, (k,), 1.0))
        used.add(k)
        for nid in route.visits:
            if nid == 0:
                out.append(Violation(DEPOT, (k, 0), 1.0))
        if any(not 0 <= nid <= n_prime for nid in route.visits):
            continue
        spec = instance.fleet[k]
        t = 0.0
        prev = 0
        broke = False
        for nid in route.visits:
            if (prev, nid) in instance.blocked_arcs:
                out.append(Violation(BLOCKED_ARC, (k, prev, nid), 1.0))
                broke = True
                break
            a, b = instance.nodes[prev], instance.nodes[nid]
            dx, dy = a.x - b.x, a.y - b.y
            arrival = t + math.sqrt(dx * dx + dy * dy) / spec.speed
            begin = arrival if arrival > b.window_open else b.window_open
            leave = begin + b.service_time
            if leave > b.window_close:
                out.append(Violation(TIME_WINDOW, (k, nid), leave - b.window_close))
                broke = True
                break
            dep_time[nid] = leave
            t = leave
            prev = nid
        if not broke and route.visits:
            if (prev, 0) in instance.blocked_arcs:
                out.append(Violation(BLOCKED_ARC, (k, prev, 0), 1.0))
            else:
                a, b = instance.nodes[prev], instance.nodes[0]
                dx, dy = a.x - b.x, a.y - b.y
                arrival = t + math.sqrt(dx * dx + dy * dy) / spec.speed
                begin = arrival if arrival > b.window_open else b.window_open
                leave = begin + b.service_time
                if math.isfinite(b.window_close) and leave > b.window_close:
                    out.append(Violation(TIME_WINDOW, (k, 0), leave - b.window_close))
        q = 0.0
        for nid in route.visits:
            q += instance.nodes[nid].quantity
            if q < 0.0:
                out.append(Violation(LOAD, (k, nid), -q))
                break
            if q > spec.capacity:
                out.append(Violation(LOAD, (k, nid), q - spec.capacity))
                break

    for req in instance.requests:
        s, c = req.supplier, req.client
        if occurrences.get(s, 0) != 1 or occurrences.get(c, 0) != 1:
            continue
        if mode is FeasibilityMode.STRICT_PAIRING:
            rs, ps = first_pos[s]
            rc, pc = first_pos[c]
            if rs != rc or ps >= pc:
                out.append(Violation(PRECEDENCE, (s, c), 1.0))
        else:
            if s in dep_time and c in dep_time and dep_time[s] > dep_time[c]:
                out.append(Violation(PRECEDENCE, (s, c), dep_time[s] - dep_time[c]))

    return FeasibilityReport(tuple(out))
