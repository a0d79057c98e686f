"""Dual-population genetic solver.

One population holds visit-order permutations of the non-depot nodes, the
other holds per-vehicle visit counts that cut a permutation into routes.
Each generation doubles both populations with offspring, scores every
(order, counts) combination in the cross product, and keeps the best
individuals of each population by rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .arrays import build_arrays
from .kernels import MODE_PAPER, MODE_STRICT
from .model import (
    FeasibilityMode,
    InputError,
    Instance,
    Route,
    RoutedSolution,
    check_feasibility,
)

NodeChromosome = np.ndarray  # permutation of 1..N', dtype int64
VehicleChromosome = np.ndarray  # K_max counts summing to N', dtype int64


@dataclass
class GaParams:
    population_size: int = 100
    generations: int = 50
    crossover_rate: float = 0.9
    mutation_rate: float = 0.5
    elitism: int = 1
    seed: int = 0
    mode: FeasibilityMode = FeasibilityMode.PAPER_LITERAL
    infeasibility_penalty: float | None = None  # None: 10 x largest distance

    def validate(self) -> None:
        if self.population_size < 1:
            raise InputError("population_size must be at least 1")
        if self.generations < 1:
            raise InputError("generations must be at least 1")
        for name in ("crossover_rate", "mutation_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise InputError(f"{name} must lie in [0, 1]")
        if not 0 <= self.elitism < self.population_size:
            raise InputError("elitism must lie in [0, population_size)")
        if self.infeasibility_penalty is not None and self.infeasibility_penalty < 0:
            raise InputError("infeasibility_penalty must be non-negative")


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_penalized: float
    mean_penalized: float


@dataclass(frozen=True)
class GaResult:
    best_solution: RoutedSolution
    best_fitness: float
    best_distance: float
    feasible: bool
    history: tuple[GenerationStats, ...]
    evaluations: int
    mode: FeasibilityMode
    penalty: float


def chromosome_slots(instance: Instance) -> int:
    """Length of a vehicle chromosome: one slot per potentially used vehicle."""
    return instance.n_prime // 2


def usable_slots(instance: Instance) -> int:
    """Slots that map to a real vehicle; positive counts stay within these."""
    return min(len(instance.fleet), chromosome_slots(instance))


def resolve_penalty(instance: Instance, params: GaParams) -> float:
    if params.infeasibility_penalty is not None:
        return float(params.infeasibility_penalty)
    return 10.0 * build_arrays(instance).max_distance


def repair_precedence(chrom: NodeChromosome, instance: Instance) -> NodeChromosome:
    """Make every supplier precede its client.

    Scans left to right; when a client is found before its supplier, the
    supplier is pulled out and re-inserted immediately before the client.
    Already-satisfied pairs are never disturbed, so the repair is
    idempotent.
    """
    seq = [int(v) for v in chrom]
    suppliers = instance.suppliers
    partner = instance.partner
    i = 0
    while i < len(seq):
        nid = seq[i]
        if nid not in suppliers:
            sup = partner[nid]
            sp = seq.index(sup)
            if sp > i:
                seq.pop(sp)
                seq.insert(i, sup)
                i += 1  # the client shifted one right; it is now satisfied
        i += 1
    return np.asarray(seq, dtype=np.int64)


def repair_capacity(chrom: NodeChromosome, instance: Instance) -> NodeChromosome:
    """Shed load whenever the running pickup stream would overflow.

    The whole permutation is treated as one load stream against the largest
    vehicle capacity (the chromosome is not yet split into routes).  At an
    overflowing position, the client of the most recently passed supplier
    (among clients still ahead whose supplier lies strictly before the
    overflow) is moved to just before it, dropping its goods early.  If no
    such client exists the overload stands and is left to the fitness
    penalty.
    """
    q_max = max(v.capacity for v in instance.fleet)
    qty = {node.id: node.quantity for node in instance.nodes}
    suppliers = instance.suppliers
    partner = instance.partner
    seq = [int(v) for v in chrom]
    load = 0.0
    p = 0
    while p < len(seq):
        nid = seq[p]
        prospective = load + qty[nid]
        if prospective > q_max:
            pos = {v: idx for idx, v in enumerate(seq)}
            best_j = -1
            best_sup_pos = -1
            for j in range(p + 1, len(seq)):
                cand = seq[j]
                if cand in suppliers:
                    continue
                sup_pos = pos[partner[cand]]
                if sup_pos < p and sup_pos > best_sup_pos:
                    best_sup_pos = sup_pos
                    best_j = j
            if best_j >= 0:
                client = seq.pop(best_j)
                seq.insert(p, client)
                load += qty[client]
                p += 1  # re-test the overflowing node at its shifted position
                continue
        load = prospective
        p += 1
    return np.asarray(seq, dtype=np.int64)


def _repair(chrom: NodeChromosome, instance: Instance) -> NodeChromosome:
    return repair_capacity(repair_precedence(chrom, instance), instance)


def random_node_chromosome(instance: Instance, rng: np.random.Generator) -> NodeChromosome:
    perm = rng.permutation(instance.n_prime).astype(np.int64) + 1
    return _repair(perm, instance)


def random_vehicle_chromosome(instance: Instance, rng: np.random.Generator) -> VehicleChromosome:
    """Uniform composition of N' over the usable slots (zeros allowed)."""
    k_max = chromosome_slots(instance)
    m = usable_slots(instance)
    counts = np.zeros(k_max, dtype=np.int64)
    n_prime = instance.n_prime
    if m == 1:
        counts[0] = n_prime
        return counts
    cuts = np.sort(rng.integers(0, n_prime + 1, size=m - 1))
    parts = np.diff(np.concatenate(([0], cuts, [n_prime])))
    counts[:m] = parts
    return counts


def crossover_nodes(
    p1: NodeChromosome, p2: NodeChromosome, point: int, instance: Instance
) -> tuple[NodeChromosome, NodeChromosome]:
    """One-point crossover with order-preserving completion.

    Child 1 keeps parent 1's prefix up to `point` and appends the missing
    ids in parent 2's relative order (and symmetrically for child 2), so
    both children stay permutations.  Children are repaired before return.
    """
    n = len(p1)
    if not 1 <= point < n:
        raise InputError(f"crossover point {point} out of range 1..{n - 1}")
    a = [int(v) for v in p1]
    b = [int(v) for v in p2]
    head1, head2 = a[:point], b[:point]
    used1, used2 = set(head1), set(head2)
    raw1 = head1 + [g for g in b if g not in used1]
    raw2 = head2 + [g for g in a if g not in used2]
    return (
        _repair(np.asarray(raw1, dtype=np.int64), instance),
        _repair(np.asarray(raw2, dtype=np.int64), instance),
    )


def _renormalize(counts: np.ndarray, n_prime: int) -> np.ndarray:
    cnt = counts.copy()
    positive = np.flatnonzero(cnt > 0)
    if positive.size == 0:
        cnt[0] = n_prime
        return cnt
    delta = n_prime - int(cnt.sum())
    if delta >= 0:
        cnt[positive[-1]] += delta
        return cnt
    need = -delta
    for j in positive[::-1]:
        take = min(int(cnt[j]), need)
        cnt[j] -= take
        need -= take
        if need == 0:
            break
    return cnt


def crossover_vehicles(
    p1: VehicleChromosome, p2: VehicleChromosome, point: int
) -> tuple[VehicleChromosome, VehicleChromosome]:
    """Tail exchange at `point`, then renormalization back to sum N'.

    The sum correction is applied to the last positive slot; if it would go
    negative the deficit keeps consuming earlier positive slots.
    """
    k_max = len(p1)
    if not 1 <= point < k_max:
        raise InputError(f"crossover point {point} out of range 1..{k_max - 1}")
    n_prime = int(p1.sum())
    c1 = np.concatenate([p1[:point], p2[point:]]).astype(np.int64)
    c2 = np.concatenate([p2[:point], p1[point:]]).astype(np.int64)
    return _renormalize(c1, n_prime), _renormalize(c2, n_prime)


def mutate_nodes(
    chrom: NodeChromosome, instance: Instance, rng: np.random.Generator
) -> NodeChromosome:
    """Swap two distinct positions, then repair."""
    n = len(chrom)
    out = chrom.copy()
    if n >= 2:
        i = int(rng.integers(n))
        j = int(rng.integers(n - 1))
        if j >= i:
            j += 1
        out[i], out[j] = out[j], out[i]
    return _repair(out, instance)


def mutate_vehicles(
    chrom: VehicleChromosome, instance: Instance, rng: np.random.Generator
) -> VehicleChromosome:
    """Move one unit of work between slots; no-op when only one vehicle is
    usable."""
    m = usable_slots(instance)
    out = chrom.copy()
    if m <= 1:
        return out
    positive = np.flatnonzero(out > 0)
    src = int(positive[rng.integers(positive.size)])
    dst = int(rng.integers(m - 1))
    if dst >= src:
        dst += 1  # src < m always holds for well-formed counts
    out[src] -= 1
    out[dst] += 1
    return out


def decode(nodes: NodeChromosome, vehicles: VehicleChromosome) -> RoutedSolution:
    """Cut the permutation into consecutive segments, one per positive slot."""
    routes = []
    pos = 0
    for slot, c in enumerate(vehicles):
        c = int(c)
        if c == 0:
            continue
        routes.append(Route(vehicle=slot, visits=tuple(int(v) for v in nodes[pos : pos + c])))
        pos += c
    if pos != len(nodes):
        raise InputError(f"vehicle counts sum to {pos}, expected {len(nodes)}")
    return RoutedSolution(tuple(routes))


def _lenient_totals(solution: RoutedSolution, instance: Instance) -> tuple[float, float]:
    """(weighted cost, plain distance) with blocked legs, unknown vehicles
    and unknown nodes contributing nothing; mirrors the kernels' distance
    pass."""
    n_prime = instance.n_prime
    nodes = instance.nodes
    total = 0.0
    length = 0.0
    for route in solution.routes:
        if not 0 <= route.vehicle < len(instance.fleet):
            continue
        if any(not 0 <= nid <= n_prime for nid in route.visits):
            continue
        rdist = 0.0
        prev = 0
        for nid in route.visits:
            if (prev, nid) not in instance.blocked_arcs:
                dx = nodes[prev].x - nodes[nid].x
                dy = nodes[prev].y - nodes[nid].y
                rdist += (dx * dx + dy * dy) ** 0.5
            prev = nid
        if (prev, 0) not in instance.blocked_arcs:
            dx = nodes[prev].x - nodes[0].x
            dy = nodes[prev].y - nodes[0].y
            rdist += (dx * dx + dy * dy) ** 0.5
        total += instance.fleet[route.vehicle].cost_coefficient * rdist
        length += rdist
    return total, length


def penalized_fitness(solution: RoutedSolution, instance: Instance, params: GaParams) -> float:
    """Transport cost plus penalty times the summed violation magnitudes;
    equals the plain fitness exactly when the solution is feasible."""
    penalty = resolve_penalty(instance, params)
    report = check_feasibility(solution, instance, params.mode)
    viol = 0.0
    for v in report.violations:
        viol += v.magnitude
    return _lenient_totals(solution, instance)[0] + penalty * viol


def _mode_flag(mode: FeasibilityMode) -> int:
    return MODE_STRICT if mode is FeasibilityMode.STRICT_PAIRING else MODE_PAPER


def _score_product(
    node_pop: list[NodeChromosome],
    veh_pop: list[VehicleChromosome],
    arr,
    mode_flag: int,
    penalty: float,
) -> tuple[np.ndarray, np.ndarray]:
    perms = np.stack(node_pop).astype(np.int64)
    cnts = np.stack(veh_pop).astype(np.int64)
    # the compiled kernel does no bounds checking, so reject junk here
    expected = np.arange(1, arr.n_prime + 1)
    if perms.shape[1] != arr.n_prime or not (np.sort(perms, axis=1) == expected).all():
        raise InputError("every node chromosome must be a permutation of 1..N'")
    if (cnts < 0).any() or not (cnts.sum(axis=1) == arr.n_prime).all():
        raise InputError("every vehicle chromosome must be non-negative and sum to N'")
    return kernels.pair_scores(
        perms,
        cnts,
        arr.dist,
        arr.blocked,
        arr.window_open,
        arr.window_close,
        arr.service,
        arr.quantity,
        arr.capacity,
        arr.cost,
        arr.speed,
        arr.suppliers,
        arr.clients,
        mode_flag,
        penalty,
    )


def evaluate_generation(
    node_pop: list[NodeChromosome],
    veh_pop: list[VehicleChromosome],
    instance: Instance,
    params: GaParams,
) -> tuple[tuple[int, int], np.ndarray]:
    """Score every (order, counts) pair in the cross product.

    Returns the index pair with the lowest penalized score (ties broken by
    lowest node index, then lowest vehicle index) and the full score
    matrix, shaped (len(node_pop), len(veh_pop)).
    """
    arr = build_arrays(instance)
    penalty = resolve_penalty(instance, params)
    scores, _ = _score_product(node_pop, veh_pop, arr, _mode_flag(params.mode), penalty)
    flat = int(scores.argmin())
    return divmod(flat, scores.shape[1]), scores


def _offspring_nodes(pop, instance, params, rng) -> list[NodeChromosome]:
    n = len(pop)
    n_prime = instance.n_prime
    out: list[NodeChromosome] = []
    while len(out) < n:
        i = int(rng.integers(n))
        j = int(rng.integers(n))
        if n_prime >= 2 and rng.random() < params.crossover_rate:
            point = int(rng.integers(1, n_prime))
            c1, c2 = crossover_nodes(pop[i], pop[j], point, instance)
        else:
            c1, c2 = pop[i].copy(), pop[j].copy()
        for child in (c1, c2):
            if rng.random() < params.mutation_rate:
                child = mutate_nodes(child, instance, rng)
            out.append(child)
    return out[:n]


def _offspring_vehicles(pop, instance, params, rng) -> list[VehicleChromosome]:
    n = len(pop)
    k_max = chromosome_slots(instance)
    out: list[VehicleChromosome] = []
    while len(out) < n:
        i = int(rng.integers(n))
        j = int(rng.integers(n))
        if k_max >= 2 and rng.random() < params.crossover_rate:
            point = int(rng.integers(1, k_max))
            c1, c2 = crossover_vehicles(pop[i], pop[j], point)
        else:
            c1, c2 = pop[i].copy(), pop[j].copy()
        for child in (c1, c2):
            if rng.random() < params.mutation_rate:
                child = mutate_vehicles(child, instance, rng)
            out.append(child)
    return out[:n]


def _select(pool, best_scores: np.ndarray, n: int, elitism: int):
    """Keep the best `elitism` of the whole pool plus the best offspring.

    Rank is each individual's best score over the evaluation product;
    stable sorting makes lower indices win ties.  With elitism 0 the next
    generation is offspring only.
    """
    order = np.argsort(best_scores, kind="stable")
    chosen = [int(i) for i in order[:elitism]]
    chosen += [int(i) for i in order if i >= n][: n - elitism]
    return [pool[i].copy() for i in chosen]


def run_ga(instance: Instance, params: GaParams) -> GaResult:
    """Evolve both populations and return the best decoded solution.

    Fully deterministic for a given seed: all stochastic draws come from
    one seeded generator consumed in a fixed order, and the scoring sweep
    is order-independent.  If no feasible combination is ever scored the
    best penalized solution is returned with feasible=False.
    """
    params.validate()
    rng = np.random.default_rng(params.seed)
    arr = build_arrays(instance)
    penalty = resolve_penalty(instance, params)
    mode_flag = _mode_flag(params.mode)
    n = params.population_size

    node_pop = [random_node_chromosome(instance, rng) for _ in range(n)]
    veh_pop = [random_vehicle_chromosome(instance, rng) for _ in range(n)]

    best_pen = np.inf
    best_pen_pair: tuple[NodeChromosome, VehicleChromosome] | None = None
    best_feas = np.inf
    best_feas_pair: tuple[NodeChromosome, VehicleChromosome] | None = None
    history: list[GenerationStats] = []
    evaluations = 0

    for gen in range(params.generations):
        all_nodes = node_pop + _offspring_nodes(node_pop, instance, params, rng)
        all_veh = veh_pop + _offspring_vehicles(veh_pop, instance, params, rng)
        scores, viols = _score_product(all_nodes, all_veh, arr, mode_flag, penalty)
        evaluations += scores.size

        flat = int(scores.argmin())
        bi, bj = divmod(flat, scores.shape[1])
        gen_best = float(scores[bi, bj])
        history.append(GenerationStats(gen, gen_best, float(scores.mean())))
        if gen_best < best_pen:
            best_pen = gen_best
            best_pen_pair = (all_nodes[bi].copy(), all_veh[bj].copy())

        feas_scores = np.where(viols == 0.0, scores, np.inf)
        fflat = int(feas_scores.argmin())
        fbest = float(feas_scores.flat[fflat])
        if fbest < best_feas:
            fi, fj = divmod(fflat, scores.shape[1])
            best_feas = fbest
            best_feas_pair = (all_nodes[fi].copy(), all_veh[fj].copy())

        node_pop = _select(all_nodes, scores.min(axis=1), n, params.elitism)
        veh_pop = _select(all_veh, scores.min(axis=0), n, params.elitism)

    if best_feas_pair is not None:
        solution = decode(*best_feas_pair)
        best_fitness = best_feas
        feasible = True
    else:
        solution = decode(*best_pen_pair)
        best_fitness = best_pen
        feasible = False
    return GaResult(
        best_solution=solution,
        best_fitness=best_fitness,
        best_distance=_lenient_totals(solution, instance)[1],
        feasible=feasible,
        history=tuple(history),
        evaluations=evaluations,
        mode=params.mode,
        penalty=penalty,
    )
