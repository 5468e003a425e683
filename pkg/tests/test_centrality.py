import csv
import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_net, random_grid
from gridattack.centrality import (
    CentralityWeights,
    LinkScore,
    link_degree,
    link_degrees,
    rank_links,
    score_links,
    scores_to_csv,
    top_links,
)
from gridattack.grid import solve_flow


class TestLinkDegree:
    def test_path(self):
        net = make_net(["G", 1.0, 1.0], [(0, 1, 1), (1, 2, 1)])
        assert link_degree(net, 0) == 1
        assert link_degree(net, net.branches[1]) == 1

    def test_triangle(self):
        net = make_net(["G", 1.0, 1.0], [(0, 1, 1), (1, 2, 1), (0, 2, 1)])
        assert [link_degree(net, k) for k in range(3)] == [2, 2, 2]

    def test_single_link(self, two_bus):
        assert link_degree(two_bus, 0) == 0

    def test_vector_form_agrees(self, golden6):
        assert link_degrees(golden6).tolist() == [link_degree(golden6, k) for k in range(5)] == [1, 3, 1, 3, 2]


class TestScores:
    def test_projections(self, golden6):
        flow = solve_flow(golden6)
        deg = [s.theta for s in score_links(golden6, flow, CentralityWeights(1, 0))]
        cur = [s.theta for s in score_links(golden6, flow, CentralityWeights(0, 1))]
        assert deg == [1, 3, 1, 3, 2]
        np.testing.assert_allclose(cur, [7 / 15, 7 / 15, 38 / 15, 23 / 15, 1], atol=1e-12)

    def test_substitution(self):
        # hub link with 3 neighbours carrying half a unit
        net = make_net(["G", 0.5, 0.0, 0.0, 0.0], [(0, 1, 1), (0, 2, 1), (0, 3, 1), (1, 4, 1)])
        s = score_links(net, solve_flow(net), CentralityWeights())[0]
        assert (s.degree, s.current_mag) == (3, pytest.approx(0.5))
        assert s.theta == pytest.approx(3.5)

    def test_current_magnitude_used(self):
        # branch oriented against the flow
        net = make_net([1.0, "G"], [(0, 1, 1)])
        s = score_links(net, solve_flow(net), CentralityWeights(0, 1))[0]
        assert s.current_mag == pytest.approx(1.0) and s.theta > 0

    def test_requires_intact_flow(self, golden6):
        flow = solve_flow(golden6, live_nodes=[0, 1, 2, 3, 5], live_links=[0, 1, 2, 3])
        with pytest.raises(ValueError):
            score_links(golden6, flow, CentralityWeights())

    def test_weights_finite(self):
        with pytest.raises(ValueError):
            CentralityWeights(float("nan"), 1)


class TestRanking:
    def _scores(self, thetas):
        return [LinkScore(i, 0, 0.0, t) for i, t in enumerate(thetas)]

    def test_tie_break(self):
        assert rank_links(self._scores([2.0, 5.0, 2.0])) == [1, 0, 2]

    def test_all_equal(self):
        assert rank_links(self._scores([1.0] * 4)) == [0, 1, 2, 3]

    def test_single(self):
        assert rank_links(self._scores([7.0])) == [0]

    def test_top_links_matches_rank(self, golden6):
        flow = solve_flow(golden6)
        w = CentralityWeights(1, 1)
        ranked = rank_links(score_links(golden6, flow, w))
        assert list(top_links(link_degrees(golden6), np.abs(flow.currents), w, 5)) == ranked
        # thetas 22/15, 52/15, 53/15, 68/15, 3
        assert ranked == [3, 2, 1, 4, 0]


def test_csv_export(golden6):
    scores = score_links(golden6, solve_flow(golden6), CentralityWeights())
    rows = list(csv.reader(io.StringIO(scores_to_csv(scores, golden6))))
    assert rows[0] == ["branch", "buses", "degree", "current", "theta"]
    assert len(rows) == 6
    assert float(rows[3][4]) == scores[2].theta
    plain = list(csv.reader(io.StringIO(scores_to_csv(scores))))
    assert plain[0] == ["branch", "degree", "current", "theta"]


@st.composite
def grids(draw):
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    return random_grid(rng, draw(st.integers(3, 10)), extra=draw(st.integers(0, 4)))


@settings(max_examples=50, deadline=None)
@given(grids(), st.floats(-3, 3), st.floats(-3, 3), st.integers(-6, 6))
def test_rank_invariant_under_power_of_two_scaling(net, h1, h2, e):
    flow = solve_flow(net)
    c = 2.0**e
    a = rank_links(score_links(net, flow, CentralityWeights(h1, h2)))
    b = rank_links(score_links(net, flow, CentralityWeights(c * h1, c * h2)))
    assert a == b


@settings(max_examples=50, deadline=None)
@given(grids(), st.floats(-3, 3), st.floats(-3, 3))
def test_theta_affine_in_weights(net, h1, h2):
    flow = solve_flow(net)
    d = score_links(net, flow, CentralityWeights(1, 0))
    i = score_links(net, flow, CentralityWeights(0, 1))
    both = score_links(net, flow, CentralityWeights(h1, h2))
    for sd, si, sb in zip(d, i, both):
        assert sb.theta == pytest.approx(h1 * sd.theta + h2 * si.theta, abs=1e-12)
