"""Problem data model, schedule and load propagation, feasibility, and cost.

Conventions used throughout the package:

* node 0 is the single depot; nodes 1..N' are suppliers (positive quantity)
  and clients (negative quantity), paired one-to-one by requests;
* a vehicle arriving before a window opens waits; service must then finish
  by the window close (service_start + service_time <= window_close);
* blocked arcs are an explicit set of ordered pairs, never a numeric
  sentinel, so all arithmetic stays finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

COVERAGE = "COVERAGE"
DEPOT = "DEPOT"
FLOW = "FLOW"
LOAD = "LOAD"
PRECEDENCE = "PRECEDENCE"
TIME_WINDOW = "TIME_WINDOW"
BLOCKED_ARC = "BLOCKED_ARC"

VIOLATION_TAGS = frozenset(
    {COVERAGE, DEPOT, FLOW, LOAD, PRECEDENCE, TIME_WINDOW, BLOCKED_ARC}
)


class ModelError(Exception):
    """Base class for all package errors."""


class InputError(ModelError, ValueError):
    """Invalid identifiers, malformed data, or bad parameters."""


class BlockedArcError(ModelError):
    """Travel between two nodes is impossible: the arc is blocked."""

    def __init__(self, tail: int, head: int):
        super().__init__(f"arc ({tail}, {head}) is blocked")
        self.tail = tail
        self.head = head


class TimeInfeasible(ModelError):
    """Service at some node cannot finish inside its time window."""

    def __init__(self, node: int, position: int, lateness: float):
        super().__init__(f"node {node} misses its window close by {lateness:.6g}")
        self.node = node
        self.position = position
        self.lateness = lateness


class LoadInfeasible(ModelError):
    """The running vehicle load leaves the [0, capacity] band."""

    def __init__(self, node: int, position: int, magnitude: float):
        super().__init__(f"load out of range by {magnitude:.6g} after node {node}")
        self.node = node
        self.position = position
        self.magnitude = magnitude


class FeasibilityMode(Enum):
    """How request precedence is interpreted.

    PAPER_LITERAL compares departure times fleet-wide: the supplier of each
    request must depart no later than its client, wherever they are routed.
    STRICT_PAIRING additionally requires both endpoints in the same route
    with the supplier visited first (positional rule; the departure ordering
    then follows automatically).
    """

    PAPER_LITERAL = "paper"
    STRICT_PAIRING = "strict"


@dataclass(frozen=True)
class Node:
    """A visitable location with a service window and a signed quantity."""

    id: int
    x: float
    y: float
    window_open: float = 0.0
    window_close: float = math.inf
    service_time: float = 0.0
    quantity: float = 0.0

    def __post_init__(self):
        if self.window_open > self.window_close:
            raise InputError(
                f"node {self.id}: window_open {self.window_open} exceeds "
                f"window_close {self.window_close}"
            )
        if self.service_time < 0:
            raise InputError(f"node {self.id}: negative service_time")
        if self.id == 0 and self.quantity != 0:
            raise InputError("depot quantity must be 0")


@dataclass(frozen=True)
class Request:
    """One transport demand: goods picked up at `supplier`, dropped at `client`."""

    supplier: int
    client: int


@dataclass(frozen=True)
class VehicleSpec:
    """Capacity, per-distance cost, and speed of one vehicle."""

    capacity: float
    cost_coefficient: float = 1.0
    speed: float = 1.0

    def __post_init__(self):
        if self.capacity <= 0:
            raise InputError("vehicle capacity must be positive")
        if self.cost_coefficient < 0:
            raise InputError("vehicle cost coefficient must be non-negative")
        if self.speed <= 0:
            raise InputError("vehicle speed must be positive")


@dataclass(frozen=True)
class Instance:
    """Immutable problem statement: nodes (depot first), requests, fleet.

    Safe to share across workers; every operation in this module is a pure
    function of its inputs.
    """

    nodes: tuple[Node, ...]
    requests: tuple[Request, ...]
    fleet: tuple[VehicleSpec, ...]
    blocked_arcs: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "requests", tuple(self.requests))
        object.__setattr__(self, "fleet", tuple(self.fleet))
        object.__setattr__(
            self, "blocked_arcs", frozenset((int(i), int(j)) for i, j in self.blocked_arcs)
        )
        if not self.nodes:
            raise InputError("instance needs at least the depot node")
        if self.nodes[0].id != 0:
            raise InputError("depot (id 0) must be the first node")
        for pos, node in enumerate(self.nodes):
            if node.id != pos:
                raise InputError(f"node ids must be contiguous; found id {node.id} at position {pos}")
        n_prime = len(self.nodes) - 1
        if n_prime % 2 != 0:
            raise InputError(f"number of non-depot nodes must be even, got {n_prime}")
        if not self.fleet:
            raise InputError("fleet must contain at least one vehicle")
        if len(self.requests) != n_prime // 2:
            raise InputError(
                f"expected {n_prime // 2} requests for {n_prime} non-depot nodes, "
                f"got {len(self.requests)}"
            )
        seen: dict[int, str] = {}
        for req in self.requests:
            for role, nid in (("supplier", req.supplier), ("client", req.client)):
                if not 1 <= nid <= n_prime:
                    raise InputError(f"request {role} {nid} is not a non-depot node id")
                if nid in seen:
                    raise InputError(f"node {nid} appears in more than one request")
                seen[nid] = role
            if self.nodes[req.supplier].quantity <= 0:
                raise InputError(f"supplier {req.supplier} must have positive quantity")
            if self.nodes[req.client].quantity >= 0:
                raise InputError(f"client {req.client} must have negative quantity")
        if len(seen) != n_prime:
            missing = sorted(set(range(1, n_prime + 1)) - set(seen))
            raise InputError(f"nodes {missing} belong to no request")
        for i, j in self.blocked_arcs:
            if i == j:
                raise InputError(f"blocked arc ({i}, {j}) is a self-loop")
            if not (0 <= i <= n_prime and 0 <= j <= n_prime):
                raise InputError(f"blocked arc ({i}, {j}) references unknown nodes")

    @property
    def n_prime(self) -> int:
        """Number of non-depot nodes."""
        return len(self.nodes) - 1

    @property
    def depot(self) -> Node:
        return self.nodes[0]

    @cached_property
    def partner(self) -> dict[int, int]:
        """Maps each supplier to its client and vice versa."""
        out: dict[int, int] = {}
        for req in self.requests:
            out[req.supplier] = req.client
            out[req.client] = req.supplier
        return out

    @cached_property
    def suppliers(self) -> frozenset[int]:
        return frozenset(req.supplier for req in self.requests)

    def is_supplier(self, node_id: int) -> bool:
        return node_id in self.suppliers


@dataclass(frozen=True)
class Route:
    """Visits of one vehicle, depot implicit at both ends."""

    vehicle: int
    visits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "visits", tuple(int(v) for v in self.visits))


@dataclass(frozen=True)
class RoutedSolution:
    """A set of routes; validity is judged by check_feasibility, not here."""

    routes: tuple[Route, ...]

    def __post_init__(self):
        object.__setattr__(self, "routes", tuple(self.routes))


@dataclass(frozen=True)
class ScheduleStop:
    node: int
    arrival: float
    service_start: float
    departure: float
    wait: float


@dataclass(frozen=True)
class Schedule:
    """Timed stops of one route: depot start, each visit, depot return."""

    stops: tuple[ScheduleStop, ...]

    @property
    def visit_stops(self) -> tuple[ScheduleStop, ...]:
        """Stops at the visited nodes only, depot bookends stripped."""
        inner = [s for s in self.stops[1:] if s.node != 0]
        return tuple(inner)


@dataclass(frozen=True)
class LoadProfile:
    """Vehicle load after departing each visited node, in route order."""

    loads: tuple[float, ...]


@dataclass(frozen=True)
class Violation:
    tag: str
    where: tuple[int, ...]
    magnitude: float


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[Violation, ...]

    def __post_init__(self):
        object.__setattr__(self, "violations", tuple(self.violations))

    @property
    def feasible(self) -> bool:
        return not self.violations

    def tags(self) -> frozenset[str]:
        return frozenset(v.tag for v in self.violations)


def _euclid(a: Node, b: Node) -> float:
    # sqrt(dx*dx + dy*dy), matching the kernels' arithmetic bit-for-bit
    dx = a.x - b.x
    dy = a.y - b.y
    return math.sqrt(dx * dx + dy * dy)


def _check_node_id(instance: Instance, i: int) -> None:
    if not 0 <= i <= instance.n_prime:
        raise InputError(f"node id {i} out of range 0..{instance.n_prime}")


def distance(instance: Instance, i: int, j: int) -> float:
    """Euclidean distance between two nodes; raises BlockedArcError if the
    arc (i, j) does not exist."""
    _check_node_id(instance, i)
    _check_node_id(instance, j)
    if (i, j) in instance.blocked_arcs:
        raise BlockedArcError(i, j)
    a, b = instance.nodes[i], instance.nodes[j]
    return _euclid(a, b)


def travel_time(instance: Instance, k: int, i: int, j: int) -> float:
    """Travel duration of vehicle k over arc (i, j); blocked arcs propagate."""
    if not 0 <= k < len(instance.fleet):
        raise InputError(f"vehicle index {k} out of range 0..{len(instance.fleet) - 1}")
    return distance(instance, i, j) / instance.fleet[k].speed


def _time_walk(
    visits: tuple[int, ...], vehicle: int, instance: Instance
) -> tuple[list[ScheduleStop], Violation | None]:
    """Forward time simulation from the depot at time 0.

    Returns the stops that carry usable times plus the first failure, if
    any.  The walk stops at a blocked arc or at the first node whose
    service cannot finish by its window close; later nodes of the route
    have no defined times.  The return leg is simulated, and checked only
    when the depot window close is finite.
    """
    nodes = instance.nodes
    speed = instance.fleet[vehicle].speed
    depot = nodes[0]
    stops = [ScheduleStop(0, 0.0, 0.0, 0.0, 0.0)]
    t = 0.0
    prev = 0
    for pos, nid in enumerate(visits):
        if (prev, nid) in instance.blocked_arcs:
            return stops, Violation(BLOCKED_ARC, (vehicle, prev, nid), 1.0)
        node = nodes[nid]
        arrival = t + _euclid(nodes[prev], node) / speed
        service_start = max(arrival, node.window_open)
        departure = service_start + node.service_time
        if departure > node.window_close:
            return stops, Violation(TIME_WINDOW, (vehicle, nid), departure - node.window_close)
        stops.append(ScheduleStop(nid, arrival, service_start, departure, service_start - arrival))
        t = departure
        prev = nid
    if visits:
        if (prev, 0) in instance.blocked_arcs:
            return stops, Violation(BLOCKED_ARC, (vehicle, prev, 0), 1.0)
        arrival = t + _euclid(nodes[prev], depot) / speed
        service_start = max(arrival, depot.window_open)
        departure = service_start + depot.service_time
        if math.isfinite(depot.window_close) and departure > depot.window_close:
            return stops, Violation(TIME_WINDOW, (vehicle, 0), departure - depot.window_close)
        stops.append(ScheduleStop(0, arrival, service_start, departure, service_start - arrival))
    return stops, None


def _load_walk(
    visits: tuple[int, ...], vehicle: int, instance: Instance
) -> tuple[list[float], Violation | None]:
    """Running load from 0, adding each node's quantity on departure; stops
    at the first excursion outside [0, capacity]."""
    capacity = instance.fleet[vehicle].capacity
    loads: list[float] = []
    q = 0.0
    for nid in visits:
        q += instance.nodes[nid].quantity
        if q < 0.0:
            return loads, Violation(LOAD, (vehicle, nid), -q)
        if q > capacity:
            return loads, Violation(LOAD, (vehicle, nid), q - capacity)
        loads.append(q)
    return loads, None


def _validate_route(route: Route, instance: Instance) -> None:
    if not 0 <= route.vehicle < len(instance.fleet):
        raise InputError(f"route vehicle {route.vehicle} not in fleet")
    seen = set()
    for nid in route.visits:
        if not 1 <= nid <= instance.n_prime:
            raise InputError(f"route visit {nid} is not a non-depot node id")
        if nid in seen:
            raise InputError(f"route visits node {nid} twice")
        seen.add(nid)


def propagate_schedule(route: Route, instance: Instance) -> Schedule:
    """Timed simulation of a route.

    Raises TimeInfeasible at the first node whose service cannot finish
    inside its window (early arrivals wait; service then runs past the
    close), and BlockedArcError if the route uses a missing arc.
    """
    _validate_route(route, instance)
    stops, failure = _time_walk(route.visits, route.vehicle, instance)
    if failure is None:
        return Schedule(tuple(stops))
    if failure.tag == BLOCKED_ARC:
        raise BlockedArcError(failure.where[1], failure.where[2])
    raise TimeInfeasible(failure.where[1], len(stops) - 1, failure.magnitude)


def load_profile(route: Route, instance: Instance) -> LoadProfile:
    """Load after each visit; raises LoadInfeasible at the first excursion."""
    _validate_route(route, instance)
    loads, failure = _load_walk(route.visits, route.vehicle, instance)
    if failure is None:
        return LoadProfile(tuple(loads))
    raise LoadInfeasible(failure.where[1], len(loads), failure.magnitude)


def check_feasibility(
    solution: RoutedSolution,
    instance: Instance,
    mode: FeasibilityMode = FeasibilityMode.PAPER_LITERAL,
) -> FeasibilityReport:
    """Exhaustive constraint check; accepts malformed solutions.

    All constraint families are reported (coverage, depot/flow structure,
    per-route load and time windows, blocked arcs, request precedence), but
    within one route the time and load walks each stop at their first
    failure.  Precedence is only judged for requests whose endpoints are
    visited exactly once; in paper-literal mode both departures must also
    be defined, i.e. lie before any time failure in their routes.
    """
    n_prime = instance.n_prime
    fleet_size = len(instance.fleet)
    violations: list[Violation] = []

    counts = [0] * (n_prime + 1)
    foreign: list[int] = []
    for route in solution.routes:
        for nid in route.visits:
            if 0 <= nid <= n_prime:
                counts[nid] += 1
            else:
                foreign.append(nid)
    for nid in range(1, n_prime + 1):
        if counts[nid] == 0:
            violations.append(Violation(COVERAGE, (nid,), 1.0))
        elif counts[nid] > 1:
            violations.append(Violation(COVERAGE, (nid,), float(counts[nid] - 1)))
    for nid in foreign:
        violations.append(Violation(COVERAGE, (nid,), 1.0))

    position: dict[int, tuple[int, int]] = {}  # node -> (route index, visit index)
    departure: dict[int, float] = {}  # node -> departure, defined stops only
    seen_vehicles: set[int] = set()
    for ridx, route in enumerate(solution.routes):
        for vidx, nid in enumerate(route.visits):
            if 1 <= nid <= n_prime and nid not in position:
                position[nid] = (ridx, vidx)
        if not 0 <= route.vehicle < fleet_size:
            violations.append(Violation(DEPOT, (route.vehicle,), 1.0))
            continue  # no spec to walk with
        if route.vehicle in seen_vehicles:
            violations.append(Violation(FLOW, (route.vehicle,), 1.0))
        seen_vehicles.add(route.vehicle)
        for nid in route.visits:
            if nid == 0:
                violations.append(Violation(DEPOT, (route.vehicle, 0), 1.0))
        if any(not 0 <= nid <= n_prime for nid in route.visits):
            continue  # foreign ids already reported; times/loads undefined
        stops, time_failure = _time_walk(route.visits, route.vehicle, instance)
        if time_failure is not None:
            violations.append(time_failure)
        for stop in stops[1:]:
            if stop.node != 0:
                departure[stop.node] = stop.departure
        _, load_failure = _load_walk(route.visits, route.vehicle, instance)
        if load_failure is not None:
            violations.append(load_failure)

    for req in instance.requests:
        s, c = req.supplier, req.client
        if counts[s] != 1 or counts[c] != 1:
            continue
        if mode is FeasibilityMode.STRICT_PAIRING:
            rs, ps = position[s]
            rc, pc = position[c]
            if rs != rc or ps >= pc:
                violations.append(Violation(PRECEDENCE, (s, c), 1.0))
        else:
            if s in departure and c in departure and departure[s] > departure[c]:
                violations.append(Violation(PRECEDENCE, (s, c), departure[s] - departure[c]))

    return FeasibilityReport(tuple(violations))


def route_distance(route: Route, instance: Instance) -> float:
    """Depot-to-depot length of one route; raises on blocked arcs."""
    if not route.visits:
        return 0.0
    total = 0.0
    prev = 0
    for nid in route.visits:
        total += distance(instance, prev, nid)
        prev = nid
    total += distance(instance, prev, 0)
    return total


def solution_distance(solution: RoutedSolution, instance: Instance) -> float:
    """Total depot-anchored length over all routes."""
    return sum(route_distance(route, instance) for route in solution.routes)


def fitness(solution: RoutedSolution, instance: Instance) -> float:
    """Transport cost: each route's length weighted by its vehicle's cost
    coefficient."""
    total = 0.0
    for route in solution.routes:
        if not 0 <= route.vehicle < len(instance.fleet):
            raise InputError(f"route vehicle {route.vehicle} not in fleet")
        total += instance.fleet[route.vehicle].cost_coefficient * route_distance(route, instance)
    return total
