import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_net, random_grid
from oracles import dense_flow
from gridattack.grid import (
    Branch,
    Bus,
    BusKind,
    FlowState,
    GridNetwork,
    SolverError,
    build_system,
    current_imbalance,
    link_current,
    node_load,
    solve_flow,
)


class TestNetworkInvariants:
    def test_adjacency_lists_each_branch_twice(self, golden6):
        golden6.validate()
        flat = sorted(k for inc in golden6.adjacency for k in inc)
        assert flat == sorted(list(range(5)) * 2)

    @pytest.mark.parametrize(
        "edges, msg",
        [
            ([(0, 0, 1.0)], "self-loop"),
            ([(0, 1, 0.0)], "positive"),
            ([(0, 1, float("inf"))], "positive"),
            ([(0, 1, 1.0), (1, 0, 2.0)], "duplicates"),
            ([(0, 7, 1.0)], "missing"),
        ],
    )
    def test_bad_branches(self, edges, msg):
        with pytest.raises(ValueError, match=msg):
            make_net(["G", 1.0], edges)

    def test_needs_two_buses_and_a_link(self):
        with pytest.raises(ValueError):
            GridNetwork((Bus(0, BusKind.GENERATOR, 1.0),), ())

    def test_validate_requires_generator(self):
        net = make_net([1.0, 1.0], [(0, 1, 1.0)])
        with pytest.raises(ValueError, match="no generator"):
            net.validate()

    def test_setpoint_signs(self):
        with pytest.raises(ValueError):
            make_net([("G", 0.0), 1.0], [(0, 1, 1.0)])
        with pytest.raises(ValueError):
            make_net(["G", -1.0], [(0, 1, 1.0)])

    def test_ids_must_be_dense(self):
        buses = (Bus(0, BusKind.GENERATOR, 1.0), Bus(2, BusKind.CONSUMER, 1.0))
        with pytest.raises(ValueError, match="id"):
            GridNetwork(buses, (Branch(0, 0, 1, 1.0),))


class TestBuildSystem:
    def test_two_bus_zero_demand(self):
        sys_ = build_system(make_net(["G", 0.0], [(0, 1, 1.0)]))
        np.testing.assert_array_equal(sys_.matrix, [[1, 0], [-1, 1]])
        np.testing.assert_array_equal(sys_.rhs, [1, 0])

    def test_two_bus_unit_demand(self, two_bus):
        sys_ = build_system(two_bus)
        np.testing.assert_array_equal(sys_.matrix, [[1, 0], [-1, 1]])
        np.testing.assert_array_equal(sys_.rhs, [1, -1])

    def test_path_consumer_row(self):
        sys_ = build_system(make_net(["G", 1.0, 1.0], [(0, 1, 1), (1, 2, 1)]))
        np.testing.assert_array_equal(sys_.matrix[1], [-1, 2, -1])

    def test_dimension_follows_live_nodes(self, golden6):
        sys_ = build_system(golden6, live_nodes=[0, 1, 3, 4], live_links=[0, 1, 4])
        assert sys_.matrix.shape == (4, 4)
        assert sys_.nodes == (0, 1, 3, 4)

    def test_isolated_consumer_flagged(self, golden6):
        sys_ = build_system(golden6, live_links=[0, 1, 2, 3])
        assert sys_.isolated == (4,)

    def test_live_link_to_dead_node_rejected(self, golden6):
        with pytest.raises(ValueError, match="dead"):
            build_system(golden6, live_nodes=[0, 1, 2, 3], live_links=[4])


class TestSolveFlow:
    def test_two_bus(self, two_bus):
        flow = solve_flow(two_bus)
        assert flow.voltages[1] == pytest.approx(0.0, abs=1e-12)
        assert flow.currents[0] == pytest.approx(1.0, abs=1e-12)

    def test_zero_demand_is_equipotential(self, golden6):
        net = make_net(["G", 0.0, 0.0, 0.0, 0.0, "G"], [(b.from_bus, b.to_bus, b.admittance) for b in golden6.branches])
        flow = solve_flow(net)
        np.testing.assert_allclose(flow.voltages, 1.0, atol=1e-12)
        np.testing.assert_allclose(flow.currents, 0.0, atol=1e-12)

    def test_three_bus_path_matches_dense_oracle(self):
        net = make_net(["G", 1.0, 1.0], [(0, 1, 1), (1, 2, 1)])
        v, c = dense_flow(net)
        flow = solve_flow(net)
        np.testing.assert_allclose(flow.voltages, v, atol=1e-9)
        np.testing.assert_allclose(flow.currents, c, atol=1e-9)
        # by hand: v1 = -1, v2 = -2, both links carry their downstream demand
        np.testing.assert_allclose(flow.voltages, [1, -1, -2], atol=1e-12)

    def test_golden_voltages_by_hand(self, golden6):
        flow = solve_flow(golden6)
        np.testing.assert_allclose(flow.voltages, [1, 23 / 30, 41 / 60, 3 / 10, 1 / 20, 1], atol=1e-12)
        np.testing.assert_allclose(flow.currents, [7 / 15, 7 / 15, 38 / 15, 23 / 15, 1], atol=1e-12)

    def test_component_without_generator_errors(self, golden6):
        with pytest.raises(SolverError) as info:
            solve_flow(golden6, live_links=[0, 1, 2, 3])
        assert info.value.component == (4,)

    def test_dead_entries_are_nan(self, golden6):
        flow = solve_flow(golden6, live_nodes=[0, 1, 2, 3, 5], live_links=[0, 1, 2, 3])
        assert np.isnan(flow.voltages[4]) and np.isnan(flow.node_loads[4])
        assert np.isnan(flow.currents[4])

    def test_flow_state_is_read_only(self, two_bus):
        flow = solve_flow(two_bus)
        with pytest.raises(ValueError):
            flow.voltages[0] = 3.0

    def test_generators_pinned_exactly(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            net = random_grid(rng, 8)
            flow = solve_flow(net)
            gens = list(net.generators)
            assert (flow.voltages[gens] == net.setpoints[gens]).all()


class TestLinkCurrentAndNodeLoad:
    @pytest.mark.parametrize("vi, vj, y, expected", [(1.0, 0.0, 1.0, 1.0), (0.5, 0.5, 3.0, 0.0), (0.0, 1.0, 2.0, -2.0)])
    def test_link_current_formula(self, vi, vj, y, expected):
        net = make_net([("G", 1.0), 1.0], [(0, 1, y)])
        live = np.ones(2, dtype=bool)
        flow = FlowState(np.array([vi, vj]), np.array([np.nan]), np.zeros(2), live, live[:1].copy())
        assert link_current(flow, net.branches[0]) == expected

    def test_link_current_dead_branch(self, golden6):
        flow = solve_flow(golden6, live_nodes=[0, 1, 2, 3, 5], live_links=[0, 1, 2, 3])
        with pytest.raises(ValueError):
            link_current(flow, golden6.branches[4])
        with pytest.raises(ValueError):
            link_current(flow, 4)

    def test_isolated_generator_load_zero(self):
        net = make_net(["G", "G", 1.0], [(1, 2, 1.0)])
        assert node_load(solve_flow(net), 0) == 0.0

    def test_two_bus_loads(self, two_bus):
        flow = solve_flow(two_bus)
        assert node_load(flow, two_bus.buses[0]) == pytest.approx(1.0)
        assert node_load(flow, 1) == pytest.approx(0.0, abs=1e-12)

    def test_sink_consumer_load_zero(self, golden6):
        assert node_load(solve_flow(golden6), 4) == 0.0

    def test_load_is_voltage_times_gross_outflow(self, golden6):
        flow = solve_flow(golden6)
        # bus 2 sends 23/15 to bus 3 at voltage 41/60
        assert node_load(flow, 2) == pytest.approx(41 / 60 * 23 / 15, abs=1e-12)
        assert node_load(flow, 1) == pytest.approx(23 / 30 * 7 / 15, abs=1e-12)

    def test_negative_voltage_uses_magnitude(self):
        flow = solve_flow(make_net(["G", 1.0, 1.0], [(0, 1, 1), (1, 2, 1)]))
        # v1 = -1 sends 1 unit on to bus 2
        assert node_load(flow, 1) == pytest.approx(1.0, abs=1e-12)

    def test_dead_node(self, golden6):
        flow = solve_flow(golden6, live_nodes=[0, 1, 2, 3, 5], live_links=[0, 1, 2, 3])
        with pytest.raises(ValueError):
            node_load(flow, 4)


@st.composite
def grids(draw, max_n=10):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(2, max_n))
    return random_grid(np.random.default_rng(seed), n, extra=draw(st.integers(0, 4)))


@settings(max_examples=60, deadline=None)
@given(grids())
def test_current_conservation(net):
    flow = solve_flow(net)
    assert np.abs(current_imbalance(net, flow)).max() <= 1e-9


@settings(max_examples=60, deadline=None)
@given(grids(), st.floats(0.1, 10.0))
def test_scaling_admittance_and_demand(net, c):
    flow = solve_flow(net)
    scaled = GridNetwork(
        tuple(b if b.is_generator else Bus(b.id, b.kind, b.setpoint * c) for b in net.buses),
        tuple(Branch(br.id, br.from_bus, br.to_bus, br.admittance * c) for br in net.branches),
    )
    sflow = solve_flow(scaled)
    np.testing.assert_allclose(sflow.voltages, flow.voltages, rtol=0, atol=1e-9)
    np.testing.assert_allclose(sflow.currents, c * flow.currents, rtol=1e-9, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(grids(), st.integers(0, 2**32 - 1))
def test_superposition_in_demand(net, seed):
    rng = np.random.default_rng(seed)
    cons = [b for b in net.buses if not b.is_generator]

    def with_demand(d):
        it = iter(d)
        buses = tuple(b if b.is_generator else Bus(b.id, b.kind, next(it)) for b in net.buses)
        return solve_flow(GridNetwork(buses, net.branches)).currents

    d1, d2 = rng.uniform(0, 2, len(cons)), rng.uniform(0, 2, len(cons))
    lhs = with_demand(d1) + with_demand(d2) - with_demand(np.zeros(len(cons)))
    np.testing.assert_allclose(lhs, with_demand(d1 + d2), atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(grids())
def test_matches_dense_oracle(net):
    v, c = dense_flow(net)
    flow = solve_flow(net)
    np.testing.assert_allclose(flow.voltages, v, rtol=0, atol=1e-9)
    np.testing.assert_allclose(flow.currents, c, rtol=0, atol=1e-9)
