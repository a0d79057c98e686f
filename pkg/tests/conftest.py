"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from mpdptw.model import Instance, Node, Request, Route, RoutedSolution, VehicleSpec

# couples (client, supplier) used by the repair and decode regression tests:
# (1,5), (2,8), (9,7), (10,3), (4,6) with every supplier carrying +20
SUPPLIER_TO_CLIENT = {5: 1, 8: 2, 7: 9, 3: 10, 6: 4}


@pytest.fixture
def ten_node_instance() -> Instance:
    """Five couples, +/-20 quantities, two vehicles of capacity 60, windows
    wide enough that only load and precedence rules bite."""
    nodes = [Node(id=0, x=0.0, y=0.0)]
    for nid in range(1, 11):
        q = 20.0 if nid in SUPPLIER_TO_CLIENT else -20.0
        nodes.append(
            Node(id=nid, x=float(nid), y=float(nid % 3), window_close=1e6, quantity=q)
        )
    requests = tuple(Request(supplier=s, client=c) for s, c in SUPPLIER_TO_CLIENT.items())
    fleet = (VehicleSpec(capacity=60.0), VehicleSpec(capacity=60.0))
    return Instance(nodes=tuple(nodes), requests=requests, fleet=fleet)


@pytest.fixture
def single_request_instance() -> Instance:
    """Depot at the origin, pickup at (3,4), delivery at (6,8), one vehicle.
    The only feasible tour is depot -> 1 -> 2 -> depot with length 20."""
    nodes = (
        Node(id=0, x=0.0, y=0.0),
        Node(id=1, x=3.0, y=4.0, window_close=1e6, quantity=10.0),
        Node(id=2, x=6.0, y=8.0, window_close=1e6, quantity=-10.0),
    )
    return Instance(
        nodes=nodes, requests=(Request(1, 2),), fleet=(VehicleSpec(capacity=30.0),)
    )


def random_solution(instance: Instance, rng: np.random.Generator) -> RoutedSolution:
    """Random routed solution, sometimes deliberately malformed, so every
    violation family shows up in differential tests."""
    n_prime = instance.n_prime
    fleet_size = len(instance.fleet)
    ids = list(rng.permutation(n_prime) + 1)
    if rng.random() < 0.25 and len(ids) > 1:  # drop nodes -> missing coverage
        for _ in range(int(rng.integers(1, min(3, len(ids)) + 1))):
            ids.pop(int(rng.integers(len(ids))))
    if rng.random() < 0.25:  # duplicate a node
        ids.insert(int(rng.integers(len(ids) + 1)), int(rng.integers(1, n_prime + 1)))
    if rng.random() < 0.15:  # depot in the middle of a route
        ids.insert(int(rng.integers(len(ids) + 1)), 0)
    if rng.random() < 0.10:  # unknown node id
        ids.insert(int(rng.integers(len(ids) + 1)), n_prime + 1 + int(rng.integers(3)))

    n_routes = int(rng.integers(1, min(4, max(2, len(ids))) + 1))
    cuts = sorted(int(rng.integers(0, len(ids) + 1)) for _ in range(n_routes - 1))
    pieces = []
    prev = 0
    for cut in cuts + [len(ids)]:
        pieces.append(ids[prev:cut])
        prev = cut
    routes = []
    for piece in pieces:
        if rng.random() < 0.12:  # invalid or duplicate vehicle
            vehicle = int(rng.integers(-1, fleet_size + 2))
        else:
            vehicle = int(rng.integers(fleet_size))
        routes.append(Route(vehicle=vehicle, visits=tuple(piece)))
    return RoutedSolution(tuple(routes))


def report_key(report):
    """Comparable digest of a feasibility report: order-free, magnitudes
    rounded to absorb come-and-go last-ulp noise."""
    return (
        report.feasible,
        sorted((v.tag, v.where, round(v.magnitude, 9)) for v in report.violations),
    )
