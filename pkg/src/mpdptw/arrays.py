"""Packed numpy view of an Instance for the evaluation kernels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Instance


@dataclass(frozen=True)
class InstanceArrays:
    dist: np.ndarray  # (N+1, N+1) float64, Euclidean, blocked arcs included
    blocked: np.ndarray  # (N+1, N+1) bool
    window_open: np.ndarray  # (N+1,) float64
    window_close: np.ndarray  # (N+1,) float64, inf allowed
    service: np.ndarray  # (N+1,) float64
    quantity: np.ndarray  # (N+1,) float64
    capacity: np.ndarray  # (K,) float64
    cost: np.ndarray  # (K,) float64
    speed: np.ndarray  # (K,) float64
    suppliers: np.ndarray  # (R,) int64, in request order
    clients: np.ndarray  # (R,) int64, in request order
    n_prime: int

    @property
    def max_distance(self) -> float:
        if self.blocked.all():
            return 1.0
        return float(self.dist[~self.blocked].max())


def build_arrays(instance: Instance) -> InstanceArrays:
    n = instance.n_prime + 1
    xy = np.array([(node.x, node.y) for node in instance.nodes], dtype=np.float64)
    delta = xy[:, None, :] - xy[None, :, :]
    dist = np.sqrt((delta**2).sum(axis=-1))
    blocked = np.zeros((n, n), dtype=np.bool_)
    for i, j in instance.blocked_arcs:
        blocked[i, j] = True
    return InstanceArrays(
        dist=dist,
        blocked=blocked,
        window_open=np.array([nd.window_open for nd in instance.nodes], dtype=np.float64),
        window_close=np.array([nd.window_close for nd in instance.nodes], dtype=np.float64),
        service=np.array([nd.service_time for nd in instance.nodes], dtype=np.float64),
        quantity=np.array([nd.quantity for nd in instance.nodes], dtype=np.float64),
        capacity=np.array([v.capacity for v in instance.fleet], dtype=np.float64),
        cost=np.array([v.cost_coefficient for v in instance.fleet], dtype=np.float64),
        speed=np.array([v.speed for v in instance.fleet], dtype=np.float64),
        suppliers=np.array([r.supplier for r in instance.requests], dtype=np.int64),
        clients=np.array([r.client for r in instance.requests], dtype=np.int64),
        n_prime=instance.n_prime,
    )
