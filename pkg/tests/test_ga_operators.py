import numpy as np
import pytest

from mpdptw.ga import (
    GaParams,
    crossover_nodes,
    crossover_vehicles,
    decode,
    mutate_nodes,
    mutate_vehicles,
    penalized_fitness,
    random_node_chromosome,
    random_vehicle_chromosome,
    repair_capacity,
    repair_precedence,
)
from mpdptw.model import (
    FeasibilityMode,
    Instance,
    Node,
    Request,
    Route,
    RoutedSolution,
    VehicleSpec,
    fitness,
)

REFERENCE_PRECEDENCE_BEFORE = [3, 2, 6, 8, 1, 4, 5, 9, 10, 7]
REFERENCE_PRECEDENCE_AFTER = [3, 8, 2, 6, 5, 1, 4, 7, 9, 10]
REFERENCE_CAPACITY_BEFORE = [5, 8, 7, 3, 1, 2, 4, 9, 6, 10]
REFERENCE_CAPACITY_AFTER = [5, 8, 7, 9, 3, 1, 2, 4, 6, 10]


def supplier_precedes_client(seq, instance) -> bool:
    pos = {int(v): i for i, v in enumerate(seq)}
    return all(pos[req.supplier] < pos[req.client] for req in instance.requests)


class TestRepairPrecedence:
    def test_reference_sequence(self, ten_node_instance):
        out = repair_precedence(np.array(REFERENCE_PRECEDENCE_BEFORE), ten_node_instance)
        assert out.tolist() == REFERENCE_PRECEDENCE_AFTER

    def test_already_ordered_unchanged(self, ten_node_instance):
        out = repair_precedence(np.array(REFERENCE_PRECEDENCE_AFTER), ten_node_instance)
        assert out.tolist() == REFERENCE_PRECEDENCE_AFTER

    def test_idempotent(self, ten_node_instance):
        rng = np.random.default_rng(0)
        for _ in range(200):
            perm = rng.permutation(10) + 1
            once = repair_precedence(perm, ten_node_instance)
            twice = repair_precedence(once, ten_node_instance)
            assert once.tolist() == twice.tolist()

    def test_reversed_worst_case(self, ten_node_instance):
        # every client ahead of its supplier
        seq = []
        for req in ten_node_instance.requests:
            seq.append(req.client)
        for req in ten_node_instance.requests:
            seq.append(req.supplier)
        out = repair_precedence(np.array(seq), ten_node_instance)
        assert sorted(out.tolist()) == list(range(1, 11))
        assert supplier_precedes_client(out, ten_node_instance)

    def test_random_permutations_satisfy_predicate(self, ten_node_instance):
        rng = np.random.default_rng(1)
        for _ in range(200):
            out = repair_precedence(rng.permutation(10) + 1, ten_node_instance)
            assert sorted(out.tolist()) == list(range(1, 11))
            assert supplier_precedes_client(out, ten_node_instance)


class TestRepairCapacity:
    def test_reference_sequence(self, ten_node_instance):
        out = repair_capacity(np.array(REFERENCE_CAPACITY_BEFORE), ten_node_instance)
        assert out.tolist() == REFERENCE_CAPACITY_AFTER

    def test_no_op_when_stream_fits(self, ten_node_instance):
        seq = [5, 1, 8, 2, 7, 9, 3, 10, 6, 4]  # each pickup delivered immediately
        out = repair_capacity(np.array(seq), ten_node_instance)
        assert out.tolist() == seq

    def test_preserves_precedence(self, ten_node_instance):
        rng = np.random.default_rng(2)
        for _ in range(200):
            repaired = repair_precedence(rng.permutation(10) + 1, ten_node_instance)
            out = repair_capacity(repaired, ten_node_instance)
            assert sorted(out.tolist()) == list(range(1, 11))
            assert supplier_precedes_client(out, ten_node_instance)

    def test_idempotent(self, ten_node_instance):
        rng = np.random.default_rng(3)
        for _ in range(200):
            repaired = repair_precedence(rng.permutation(10) + 1, ten_node_instance)
            once = repair_capacity(repaired, ten_node_instance)
            twice = repair_capacity(once, ten_node_instance)
            assert once.tolist() == twice.tolist()


def four_node_instance() -> Instance:
    """Requests (1 -> 2) and (4 -> 3), so both [1,2,4,3] and [4,3,1,2] are
    already precedence-valid and ample capacity keeps repairs inert."""
    nodes = (
        Node(id=0, x=0.0, y=0.0),
        Node(id=1, x=1.0, y=0.0, window_close=1e6, quantity=5.0),
        Node(id=2, x=2.0, y=0.0, window_close=1e6, quantity=-5.0),
        Node(id=3, x=3.0, y=0.0, window_close=1e6, quantity=-5.0),
        Node(id=4, x=4.0, y=0.0, window_close=1e6, quantity=5.0),
    )
    return Instance(
        nodes=nodes,
        requests=(Request(1, 2), Request(4, 3)),
        fleet=(VehicleSpec(capacity=100.0), VehicleSpec(capacity=100.0)),
    )


class TestCrossoverNodes:
    def test_one_point_completion(self):
        inst = four_node_instance()
        c1, c2 = crossover_nodes(np.array([1, 2, 3, 4]), np.array([4, 3, 2, 1]), 2, inst)
        assert c1.tolist() == [1, 2, 4, 3]
        assert c2.tolist() == [4, 3, 1, 2]

    def test_identical_parents(self, ten_node_instance):
        parent = random_node_chromosome(ten_node_instance, np.random.default_rng(5))
        c1, c2 = crossover_nodes(parent, parent, 4, ten_node_instance)
        assert c1.tolist() == parent.tolist()
        assert c2.tolist() == parent.tolist()

    def test_children_are_valid_permutations(self, ten_node_instance):
        rng = np.random.default_rng(6)
        for _ in range(100):
            p1 = random_node_chromosome(ten_node_instance, rng)
            p2 = random_node_chromosome(ten_node_instance, rng)
            point = int(rng.integers(1, 10))
            for child in crossover_nodes(p1, p2, point, ten_node_instance):
                assert sorted(child.tolist()) == list(range(1, 11))
                assert supplier_precedes_client(child, ten_node_instance)

    def test_point_out_of_range(self, ten_node_instance):
        p = random_node_chromosome(ten_node_instance, np.random.default_rng(7))
        with pytest.raises(Exception):
            crossover_nodes(p, p, 0, ten_node_instance)


class TestCrossoverVehicles:
    def test_reference_exchange(self):
        c1, c2 = crossover_vehicles(
            np.array([6, 4, 0, 0, 0]), np.array([2, 8, 0, 0, 0]), 1
        )
        assert int(c1.sum()) == 10 and int(c2.sum()) == 10
        assert (c1 >= 0).all() and (c2 >= 0).all()
        # the sum correction lands on the last positive slot
        assert c1.tolist() == [6, 4, 0, 0, 0]
        assert c2.tolist() == [2, 8, 0, 0, 0]

    def test_deficit_consumes_earlier_slots(self):
        c1, c2 = crossover_vehicles(np.array([9, 1, 0]), np.array([7, 2, 1]), 1)
        # raw child 1 is [9, 2, 1], two units over: the trailing slot
        # empties, the next one absorbs the rest
        assert c1.tolist() == [9, 1, 0]
        # raw child 2 is [7, 1, 0], two units short on the last positive slot
        assert c2.tolist() == [7, 3, 0]

    def test_identical_parents_unchanged(self):
        p = np.array([6, 4, 0, 0, 0])
        c1, c2 = crossover_vehicles(p, p, 2)
        assert c1.tolist() == p.tolist()
        assert c2.tolist() == p.tolist()

    def test_positive_slots_stay_bounded(self, ten_node_instance):
        rng = np.random.default_rng(8)
        k = len(ten_node_instance.fleet)
        for _ in range(200):
            p1 = random_vehicle_chromosome(ten_node_instance, rng)
            p2 = random_vehicle_chromosome(ten_node_instance, rng)
            point = int(rng.integers(1, 5))
            for child in crossover_vehicles(p1, p2, point):
                assert int(child.sum()) == 10
                assert (child >= 0).all()
                assert int((child > 0).sum()) <= k


class TestMutateNodes:
    def test_two_node_instance_forced_order(self, single_request_instance):
        rng = np.random.default_rng(9)
        for _ in range(20):
            out = mutate_nodes(np.array([1, 2]), single_request_instance, rng)
            assert out.tolist() == [1, 2]

    def test_stays_valid(self, ten_node_instance):
        rng = np.random.default_rng(10)
        for _ in range(200):
            chrom = random_node_chromosome(ten_node_instance, rng)
            out = mutate_nodes(chrom, ten_node_instance, rng)
            assert sorted(out.tolist()) == list(range(1, 11))
            assert supplier_precedes_client(out, ten_node_instance)

    def test_swap_of_uncoupled_suppliers_changes_two_slots(self):
        inst = four_node_instance()
        # suppliers 1 and 4 in separate halves; swapping them keeps validity
        chrom = np.array([1, 2, 4, 3])
        seen_two_slot_diff = False
        rng = np.random.default_rng(11)
        for _ in range(50):
            out = mutate_nodes(chrom, inst, rng)
            diff = int((out != chrom).sum())
            assert diff in (0, 2, 3, 4)  # swap possibly followed by repairs
            if diff == 2:
                seen_two_slot_diff = True
        assert seen_two_slot_diff


class TestMutateVehicles:
    def test_single_vehicle_is_fixed_point(self, single_request_instance):
        rng = np.random.default_rng(12)
        out = mutate_vehicles(np.array([2]), single_request_instance, rng)
        assert out.tolist() == [2]

    def test_sum_preserved_and_one_unit_moved(self, ten_node_instance):
        rng = np.random.default_rng(13)
        for _ in range(200):
            chrom = random_vehicle_chromosome(ten_node_instance, rng)
            out = mutate_vehicles(chrom, ten_node_instance, rng)
            assert int(out.sum()) == 10
            assert (out >= 0).all()
            delta = out - chrom
            assert int(np.abs(delta).sum()) in (0, 2)  # one unit moved (or no move)
            assert int((out > 0).sum()) <= len(ten_node_instance.fleet)

    def test_balanced_split_is_reachable(self, ten_node_instance):
        rng = np.random.default_rng(14)
        start = np.array([6, 4, 0, 0, 0])
        seen = set()
        for _ in range(100):
            seen.add(tuple(mutate_vehicles(start, ten_node_instance, rng).tolist()))
        assert (5, 5, 0, 0, 0) in seen
        assert seen <= {(5, 5, 0, 0, 0), (7, 3, 0, 0, 0)}


class TestRandomChromosomes:
    def test_two_node_always_ordered(self, single_request_instance):
        rng = np.random.default_rng(14)
        for _ in range(20):
            out = random_node_chromosome(single_request_instance, rng)
            assert out.tolist() == [1, 2]

    def test_deterministic_for_fixed_seed(self, ten_node_instance):
        a = random_node_chromosome(ten_node_instance, np.random.default_rng(99))
        b = random_node_chromosome(ten_node_instance, np.random.default_rng(99))
        assert a.tolist() == b.tolist()

    def test_random_perms_satisfy_orderings(self, ten_node_instance):
        rng = np.random.default_rng(15)
        for _ in range(200):
            out = random_node_chromosome(ten_node_instance, rng)
            assert supplier_precedes_client(out, ten_node_instance)

    def test_vehicle_chromosome_shape(self, ten_node_instance):
        rng = np.random.default_rng(16)
        k = len(ten_node_instance.fleet)
        for _ in range(200):
            out = random_vehicle_chromosome(ten_node_instance, rng)
            assert len(out) == 5  # half the non-depot nodes
            assert int(out.sum()) == 10
            assert int((out > 0).sum()) <= k

    def test_single_vehicle_forced_composition(self, single_request_instance):
        out = random_vehicle_chromosome(single_request_instance, np.random.default_rng(17))
        assert out.tolist() == [2]


class TestDecode:
    def test_reference_split(self):
        sol = decode(np.array([5, 8, 2, 6, 4, 3, 10, 7, 9, 1]), np.array([6, 4, 0, 0, 0]))
        assert [(r.vehicle, list(r.visits)) for r in sol.routes] == [
            (0, [5, 8, 2, 6, 4, 3]),
            (1, [10, 7, 9, 1]),
        ]

    def test_single_route(self):
        sol = decode(np.array([3, 1, 2, 4]), np.array([4, 0]))
        assert len(sol.routes) == 1
        assert list(sol.routes[0].visits) == [3, 1, 2, 4]

    def test_round_trip_concatenation(self, ten_node_instance):
        rng = np.random.default_rng(18)
        for _ in range(100):
            nodes = random_node_chromosome(ten_node_instance, rng)
            counts = random_vehicle_chromosome(ten_node_instance, rng)
            sol = decode(nodes, counts)
            flat = [v for route in sol.routes for v in route.visits]
            assert flat == nodes.tolist()


class TestPenalizedFitness:
    def test_feasible_equals_fitness(self, single_request_instance):
        sol = RoutedSolution((Route(0, (1, 2)),))
        params = GaParams()
        assert penalized_fitness(sol, single_request_instance, params) == fitness(
            sol, single_request_instance
        )

    def test_zero_penalty_ignores_violations(self, single_request_instance):
        sol = RoutedSolution((Route(0, (2, 1)),))  # client first: load violation
        params = GaParams(infeasibility_penalty=0.0)
        assert penalized_fitness(sol, single_request_instance, params) == fitness(
            sol, single_request_instance
        )

    def test_load_magnitude_is_charged(self):
        nodes = (
            Node(id=0, x=0.0, y=0.0),
            Node(id=1, x=3.0, y=4.0, window_close=1e6, quantity=80.0),
            Node(id=2, x=6.0, y=8.0, window_close=1e6, quantity=-80.0),
        )
        inst = Instance(
            nodes=nodes, requests=(Request(1, 2),), fleet=(VehicleSpec(capacity=60.0),)
        )
        sol = RoutedSolution((Route(0, (1, 2)),))
        params = GaParams(infeasibility_penalty=10.0)
        # single load violation of magnitude 20 on an otherwise clean tour
        assert penalized_fitness(sol, inst, params) == fitness(sol, inst) + 10.0 * 20.0
