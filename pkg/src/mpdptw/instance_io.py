"""Instance and solution serialization plus the random instance generator.

Native formats are JSON documents with sorted keys so equal objects always
serialize to identical bytes.  Instance files quantize floats to at most 6
fractional digits; solution reports keep full precision.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .ga import _lenient_totals
from .model import (
    FeasibilityMode,
    InputError,
    Instance,
    ModelError,
    Node,
    Request,
    Route,
    RoutedSolution,
    VehicleSpec,
    check_feasibility,
    _load_walk,
    _time_walk,
)

_TOP_KEYS = {"blocked_arcs", "depot", "depot_window", "fleet", "nodes", "requests"}
_NODE_KEYS = {"id", "x", "y", "window", "service_time", "quantity"}


class FormatError(ModelError):
    """A document failed to parse or violated the instance invariants."""


def _q(value: float) -> float:
    return round(float(value), 6)


def write_native(instance: Instance) -> str:
    """Canonical instance document: sorted keys, at most 6 fractional
    digits, blocked arcs as an explicit sorted pair list."""
    depot = instance.depot
    depot_window = None
    if depot.window_open != 0.0 or math.isfinite(depot.window_close):
        depot_window = [
            _q(depot.window_open),
            _q(depot.window_close) if math.isfinite(depot.window_close) else None,
        ]
    doc = {
        "blocked_arcs": sorted([i, j] for i, j in instance.blocked_arcs),
        "depot": {"x": _q(depot.x), "y": _q(depot.y)},
        "depot_window": depot_window,
        "fleet": [
            {"capacity": _q(v.capacity), "cost": _q(v.cost_coefficient), "speed": _q(v.speed)}
            for v in instance.fleet
        ],
        "nodes": [
            {
                "id": node.id,
                "x": _q(node.x),
                "y": _q(node.y),
                "window": [_q(node.window_open), _q(node.window_close)],
                "service_time": _q(node.service_time),
                "quantity": _q(node.quantity),
            }
            for node in instance.nodes[1:]
        ],
        "requests": [[req.supplier, req.client] for req in instance.requests],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _require(doc: dict, key: str, kind, where: str):
    if key not in doc:
        raise FormatError(f"{where}: missing field '{key}'")
    value = doc[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise FormatError(f"{where}: field '{key}' must be a number")
        return float(value)
    if not isinstance(value, kind):
        raise FormatError(f"{where}: field '{key}' must be {kind.__name__}")
    return value


def parse_native(text: str) -> Instance:
    """Parse the native instance document, rejecting malformed input with a
    field diagnostic."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("top level must be an object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise FormatError(f"unknown field(s): {', '.join(sorted(unknown))}")

    depot_doc = _require(doc, "depot", dict, "document")
    depot_open, depot_close = 0.0, math.inf
    window = doc.get("depot_window")
    if window is not None:
        if not isinstance(window, list) or len(window) != 2:
            raise FormatError("depot_window must be [open, close] or null")
        depot_open = float(window[0])
        depot_close = math.inf if window[1] is None else float(window[1])
    nodes = [
        Node(
            id=0,
            x=_require(depot_doc, "x", float, "depot"),
            y=_require(depot_doc, "y", float, "depot"),
            window_open=depot_open,
            window_close=depot_close,
            service_time=0.0,
            quantity=0.0,
        )
    ]
    node_docs = _require(doc, "nodes", list, "document")
    for idx, node_doc in enumerate(node_docs):
        where = f"nodes[{idx}]"
        if not isinstance(node_doc, dict):
            raise FormatError(f"{where}: must be an object")
        extra = set(node_doc) - _NODE_KEYS
        if extra:
            raise FormatError(f"{where}: unknown field(s): {', '.join(sorted(extra))}")
        win = _require(node_doc, "window", list, where)
        if len(win) != 2:
            raise FormatError(f"{where}: window must be [open, close]")
        try:
            nodes.append(
                Node(
                    id=int(_require(node_doc, "id", int, where)),
                    x=_require(node_doc, "x", float, where),
                    y=_require(node_doc, "y", float, where),
                    window_open=float(win[0]),
                    window_close=float(win[1]),
                    service_time=_require(node_doc, "service_time", float, where),
                    quantity=_require(node_doc, "quantity", float, where),
                )
            )
        except InputError as exc:
            raise FormatError(f"{where}: {exc}") from exc

    requests = []
    for idx, pair in enumerate(_require(doc, "requests", list, "document")):
        if not isinstance(pair, list) or len(pair) != 2:
            raise FormatError(f"requests[{idx}]: must be [supplier, client]")
        requests.append(Request(supplier=int(pair[0]), client=int(pair[1])))

    fleet = []
    for idx, veh in enumerate(_require(doc, "fleet", list, "document")):
        where = f"fleet[{idx}]"
        if not isinstance(veh, dict):
            raise FormatError(f"{where}: must be an object")
        try:
            fleet.append(
                VehicleSpec(
                    capacity=_require(veh, "capacity", float, where),
                    cost_coefficient=float(veh.get("cost", 1.0)),
                    speed=float(veh.get("speed", 1.0)),
                )
            )
        except InputError as exc:
            raise FormatError(f"{where}: {exc}") from exc

    blocked = set()
    for idx, arc in enumerate(doc.get("blocked_arcs", [])):
        if not isinstance(arc, list) or len(arc) != 2:
            raise FormatError(f"blocked_arcs[{idx}]: must be [tail, head]")
        blocked.add((int(arc[0]), int(arc[1])))

    try:
        return Instance(
            nodes=tuple(nodes),
            requests=tuple(requests),
            fleet=tuple(fleet),
            blocked_arcs=frozenset(blocked),
        )
    except InputError as exc:
        raise FormatError(str(exc)) from exc


def parse_li_lim(text: str) -> Instance:
    """Parse the classic pickup-and-delivery benchmark format.

    Header line `K Q speed`, then one row per node:
    `id x y demand earliest latest service pickup-sibling delivery-sibling`
    with the depot on row id 0.  Requests are rebuilt from the sibling
    columns; the single capacity is replicated into a homogeneous fleet
    with unit cost.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty document")
    header = lines[0].split()
    if len(header) < 2:
        raise FormatError("header must be: vehicle-count capacity [speed]")
    try:
        k = int(header[0])
        capacity = float(header[1])
        speed = float(header[2]) if len(header) > 2 else 1.0
    except ValueError as exc:
        raise FormatError(f"bad header: {exc}") from exc
    if speed <= 0:
        speed = 1.0

    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 9:
            raise FormatError(f"line {lineno}: expected 9 fields, got {len(parts)}")
        try:
            rows.append(
                {
                    "id": int(parts[0]),
                    "x": float(parts[1]),
                    "y": float(parts[2]),
                    "demand": float(parts[3]),
                    "open": float(parts[4]),
                    "close": float(parts[5]),
                    "service": float(parts[6]),
                    "pickup_sibling": int(parts[7]),
                    "delivery_sibling": int(parts[8]),
                    "lineno": lineno,
                }
            )
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc

    for idx, row in enumerate(rows):
        if row["id"] != idx:
            raise FormatError(f"line {row['lineno']}: ids must be contiguous from 0")
    if rows[0]["demand"] != 0:
        raise FormatError("depot row must have zero demand")

    by_id = {row["id"]: row for row in rows}
    requests = []
    for row in rows[1:]:
        if row["demand"] > 0:  # pickup row carries the pointer to its delivery
            if row["pickup_sibling"] != 0:
                raise FormatError(
                    f"line {row['lineno']}: pickup rows must have pickup-sibling 0"
                )
            sib = by_id.get(row["delivery_sibling"])
            if sib is None or sib["id"] == 0:
                raise FormatError(
                    f"line {row['lineno']}: delivery-sibling {row['delivery_sibling']} unknown"
                )
            if sib["demand"] >= 0:
                raise FormatError(
                    f"line {row['lineno']}: delivery-sibling {sib['id']} is not a delivery"
                )
            if sib["pickup_sibling"] != row["id"] or sib["delivery_sibling"] != 0:
                raise FormatError(
                    f"line {sib['lineno']}: sibling pointers do not match pickup {row['id']}"
                )
            requests.append(Request(supplier=row["id"], client=sib["id"]))
        elif row["demand"] == 0:
            raise FormatError(f"line {row['lineno']}: non-depot rows need nonzero demand")

    try:
        nodes = tuple(
            Node(
                id=row["id"],
                x=row["x"],
                y=row["y"],
                window_open=row["open"],
                window_close=row["close"],
                service_time=row["service"],
                quantity=row["demand"],
            )
            for row in rows
        )
        fleet = tuple(
            VehicleSpec(capacity=capacity, cost_coefficient=1.0, speed=speed) for _ in range(k)
        )
        return Instance(nodes=nodes, requests=tuple(requests), fleet=fleet)
    except InputError as exc:
        raise FormatError(str(exc)) from exc


@dataclass(frozen=True)
class GeneratorParams:
    n_prime: int
    k: int
    area: float = 100.0
    capacity: float = 60.0
    window_width_range: tuple[float, float] = (60.0, 240.0)
    service_time_range: tuple[float, float] = (10.0, 60.0)
    quantity_range: tuple[int, int] = (5, 25)
    horizon: float | None = None  # None: 1.15 x the longest seeded route
    seed: int = 0

    def __post_init__(self):
        if self.n_prime < 2 or self.n_prime % 2 != 0:
            raise InputError("n_prime must be even and at least 2")
        if self.k < 1:
            raise InputError("k must be at least 1")
        if self.horizon is not None and self.horizon <= 0:
            raise InputError("horizon must be positive")
        if self.area <= 0 or self.capacity <= 0:
            raise InputError("area and capacity must be positive")
        for name in ("window_width_range", "service_time_range", "quantity_range"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise InputError(f"{name} must satisfy 0 <= lo <= hi")
        if self.quantity_range[0] < 1:
            raise InputError("quantities must be at least 1")
        if self.quantity_range[1] > self.capacity:
            raise InputError("quantities must not exceed the vehicle capacity")


def generate_random(params: GeneratorParams) -> Instance:
    """Random instance with feasibility by construction.

    Coordinates are uniform on the square, consecutive nodes form the
    requests (odd id picks up, the next id delivers), and the windows are
    laid out along a randomly ordered seeding tour that picks up and
    immediately delivers each request, so that tour itself is feasible in
    both precedence modes.  Deterministic per seed; all values are
    quantized to 2 decimals so native round-trips are exact.
    """
    rng = np.random.default_rng(params.seed)
    n_prime = params.n_prime
    n_requests = n_prime // 2
    half = round(params.area / 2.0, 2)
    xy = rng.uniform(0.0, params.area, size=(n_prime, 2)).round(2)
    quantities = rng.integers(params.quantity_range[0], params.quantity_range[1] + 1, n_requests)
    services = rng.uniform(*params.service_time_range, size=n_prime).round(2)
    widths = rng.uniform(*params.window_width_range, size=n_prime).round(2)

    # seeding tour: requests shuffled, dealt round-robin over the vehicles
    order = rng.permutation(n_requests)
    route_visits: list[list[int]] = [[] for _ in range(params.k)]
    for slot, req_idx in enumerate(order):
        supplier = 2 * int(req_idx) + 1
        client = supplier + 1
        route_visits[slot % params.k].extend((supplier, client))

    w_open = [0.0] * (n_prime + 1)
    w_close = [math.inf] * (n_prime + 1)
    coords = {0: (half, half)}
    for nid in range(1, n_prime + 1):
        coords[nid] = (float(xy[nid - 1, 0]), float(xy[nid - 1, 1]))

    latest_return = 0.0
    for visits in route_visits:
        t = 0.0
        prev = 0
        for nid in visits:
            dx = coords[prev][0] - coords[nid][0]
            dy = coords[prev][1] - coords[nid][1]
            arrival = t + math.sqrt(dx * dx + dy * dy)
            width = float(widths[nid - 1])
            service = float(services[nid - 1])
            open_ = round(max(0.0, arrival - 0.5 * width), 2)
            start = max(arrival, open_)
            # full width of slack after the seeded service; the 1.0 margin
            # dominates the 2-decimal quantization error
            w_open[nid] = open_
            w_close[nid] = round(start + service + 1.0 + width, 2)
            t = start + service
            prev = nid
        if visits:
            dx = coords[prev][0] - coords[0][0]
            dy = coords[prev][1] - coords[0][1]
            latest_return = max(latest_return, t + math.sqrt(dx * dx + dy * dy))

    # the depot close binds per-route duration: with several seeded routes a
    # single tour covering everything cannot return in time
    if params.horizon is None:
        depot_close = round(1.15 * latest_return + 0.01, 2)
    else:
        depot_close = round(max(params.horizon, 1.02 * latest_return + 0.01), 2)
    nodes = [Node(id=0, x=half, y=half, window_open=0.0, window_close=depot_close)]
    for nid in range(1, n_prime + 1):
        quantity = float(quantities[(nid - 1) // 2])
        nodes.append(
            Node(
                id=nid,
                x=coords[nid][0],
                y=coords[nid][1],
                window_open=w_open[nid],
                window_close=w_close[nid],
                service_time=float(services[nid - 1]),
                quantity=quantity if nid % 2 == 1 else -quantity,
            )
        )
    requests = tuple(Request(supplier=2 * i + 1, client=2 * i + 2) for i in range(n_requests))
    fleet = tuple(VehicleSpec(capacity=params.capacity) for _ in range(params.k))
    instance = Instance(nodes=tuple(nodes), requests=requests, fleet=fleet)

    seed_solution = RoutedSolution(
        tuple(
            Route(vehicle=v, visits=tuple(visits))
            for v, visits in enumerate(route_visits)
            if visits
        )
    )
    report = check_feasibility(instance=instance, solution=seed_solution)
    assert report.feasible, f"generator produced an infeasible seed tour: {report.violations[:3]}"
    return instance


def write_solution(
    solution: RoutedSolution,
    instance: Instance,
    mode: FeasibilityMode = FeasibilityMode.PAPER_LITERAL,
) -> str:
    """Solution report: per-route visits, times, loads and distances plus
    global totals and the feasibility verdict.  Full float precision, sorted
    keys, byte-deterministic."""
    report = check_feasibility(solution, instance, mode)
    weighted, length = _lenient_totals(solution, instance)
    routes = []
    for route in solution.routes:
        entry: dict = {"vehicle": route.vehicle, "visits": list(route.visits)}
        walkable = 0 <= route.vehicle < len(instance.fleet) and all(
            0 <= nid <= instance.n_prime for nid in route.visits
        )
        if walkable:
            stops, _ = _time_walk(route.visits, route.vehicle, instance)
            loads, _ = _load_walk(route.visits, route.vehicle, instance)
            entry["stops"] = [
                {
                    "node": s.node,
                    "arrival": s.arrival,
                    "service_start": s.service_start,
                    "departure": s.departure,
                    "wait": s.wait,
                }
                for s in stops
            ]
            entry["loads"] = loads
            sub = RoutedSolution((route,))
            entry["distance"] = _lenient_totals(sub, instance)[1]
        routes.append(entry)
    doc = {
        "mode": mode.value,
        "feasible": report.feasible,
        "fitness": weighted,
        "total_distance": length,
        "routes": routes,
        "violations": [
            {"tag": v.tag, "where": list(v.where), "magnitude": v.magnitude}
            for v in report.violations
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def parse_solution(text: str) -> RoutedSolution:
    """Rebuild a RoutedSolution from a solution report (routes only)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "routes" not in doc:
        raise FormatError("solution document needs a 'routes' field")
    routes = []
    for idx, entry in enumerate(doc["routes"]):
        if not isinstance(entry, dict) or "vehicle" not in entry or "visits" not in entry:
            raise FormatError(f"routes[{idx}]: needs 'vehicle' and 'visits'")
        routes.append(
            Route(vehicle=int(entry["vehicle"]), visits=tuple(int(v) for v in entry["visits"]))
        )
    return RoutedSolution(tuple(routes))
