"""Hot evaluation kernels: the full node-population x vehicle-population
scoring sweep.

The same source runs two ways: compiled with numba (default) or as plain
numpy/python, selected by the MPDPTW_ENGINE environment variable
("auto", "numba", "python").  Both paths produce bit-identical scores; the
python path exists as a dependency-free reference and is orders of
magnitude slower on large populations (see benchmarks/engine_bench.py).
"""

from __future__ import annotations

import os

import numpy as np

ENGINE = os.environ.get("MPDPTW_ENGINE", "auto").strip().lower()
if ENGINE not in {"auto", "numba", "python"}:
    raise ValueError(f"MPDPTW_ENGINE must be auto, numba or python, got {ENGINE!r}")

NUMBA_ENABLED = False
if ENGINE in ("auto", "numba"):
    try:
        # workqueue is always available and skips the TBB/OMP probing noise
        os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")
        import numba
        from numba import prange

        NUMBA_ENABLED = True
    except ImportError:
        if ENGINE == "numba":
            raise

if not NUMBA_ENABLED:
    prange = range

MODE_PAPER = 0
MODE_STRICT = 1


def _pair_scores_impl(
    perms,  # (A, N') int64, each row a permutation of 1..N'
    counts,  # (B, Kmax) int64, each row summing to N'
    dist,  # (N+1, N+1) float64
    blocked,  # (N+1, N+1) bool
    window_open,  # (N+1,) float64
    window_close,  # (N+1,) float64
    service,  # (N+1,) float64
    quantity,  # (N+1,) float64
    capacity,  # (K,) float64
    cost,  # (K,) float64
    speed,  # (K,) float64
    suppliers,  # (R,) int64
    clients,  # (R,) int64
    mode,  # MODE_PAPER or MODE_STRICT
    penalty,  # cost per unit of violation magnitude
):
    A = perms.shape[0]
    B = counts.shape[0]
    n_prime = perms.shape[1]
    kmax = counts.shape[1]
    fleet_size = capacity.shape[0]
    n_requests = suppliers.shape[0]
    scores = np.empty((A, B), dtype=np.float64)
    viols = np.empty((A, B), dtype=np.float64)
    for a in prange(A):
        perm = perms[a]
        pos_of = np.empty(n_prime + 1, dtype=np.int64)
        seg_of = np.empty(n_prime + 1, dtype=np.int64)
        departure = np.zeros(n_prime + 1, dtype=np.float64)
        avail = np.zeros(n_prime + 1, dtype=np.bool_)
        for i in range(n_prime):
            pos_of[perm[i]] = i
        for b in range(B):
            cnt = counts[b]
            for i in range(n_prime + 1):
                avail[i] = False
            total = 0.0
            viol = 0.0
            pos = 0
            for s in range(kmax):
                c = cnt[s]
                if c == 0:
                    continue
                end = pos + c
                if s >= fleet_size:
                    # no such vehicle: structural violation, nothing to walk
                    viol += 1.0
                    for i in range(pos, end):
                        seg_of[perm[i]] = s
                    pos = end
                    continue
                # time walk, stopping at the first blocked arc or late service
                t = 0.0
                prev = 0
                failed = False
                for i in range(pos, end):
                    node = perm[i]
                    seg_of[node] = s
                    if failed:
                        continue
                    if blocked[prev, node]:
                        viol += 1.0
                        failed = True
                        continue
                    arr = t + dist[prev, node] / speed[s]
                    st = arr if arr > window_open[node] else window_open[node]
                    dep = st + service[node]
                    if dep > window_close[node]:
                        viol += dep - window_close[node]
                        failed = True
                        continue
                    departure[node] = dep
                    avail[node] = True
                    t = dep
                    prev = node
                if not failed:
                    if blocked[prev, 0]:
                        viol += 1.0
                    else:
                        arr = t + dist[prev, 0] / speed[s]
                        st = arr if arr > window_open[0] else window_open[0]
                        dep = st + service[0]
                        if window_close[0] < np.inf and dep > window_close[0]:
                            viol += dep - window_close[0]
                # load walk, stopping at the first excursion
                q = 0.0
                for i in range(pos, end):
                    node = perm[i]
                    q += quantity[node]
                    if q < 0.0:
                        viol += -q
                        break
                    if q > capacity[s]:
                        viol += q - capacity[s]
                        break
                # full-length distance, blocked legs contribute nothing
                rdist = 0.0
                prev = 0
                for i in range(pos, end):
                    node = perm[i]
                    if not blocked[prev, node]:
                        rdist += dist[prev, node]
                    prev = node
                if not blocked[prev, 0]:
                    rdist += dist[prev, 0]
                total += cost[s] * rdist
                pos = end
            if mode == MODE_STRICT:
                for r in range(n_requests):
                    sn = suppliers[r]
                    cn = clients[r]
                    if seg_of[sn] != seg_of[cn] or pos_of[sn] >= pos_of[cn]:
                        viol += 1.0
            else:
                for r in range(n_requests):
                    sn = suppliers[r]
                    cn = clients[r]
                    if avail[sn] and avail[cn] and departure[sn] > departure[cn]:
                        viol += departure[sn] - departure[cn]
            scores[a, b] = total + penalty * viol
            viols[a, b] = viol
    return scores, viols


pair_scores_python = _pair_scores_impl
if NUMBA_ENABLED:
    pair_scores = numba.njit(cache=True, parallel=True)(_pair_scores_impl)
else:
    pair_scores = _pair_scores_impl


def engine_name() -> str:
    return "numba" if NUMBA_ENABLED else "python"


def set_workers(workers: int | None) -> None:
    """Bound the threads used by the compiled sweep; no-op on the python
    path.  Thread count never changes results: every (row, column) slot is
    computed independently."""
    if workers is None or not NUMBA_ENABLED:
        return
    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(max(1, min(int(workers), limit)))
