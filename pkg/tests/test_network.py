import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sirmsr.network import (
    Graph,
    Partition,
    generate_rgg,
    heterogeneity,
    homogeneity_check,
    local_infection_ratio,
    min_degree,
    partition_nodes,
    read_edge_list,
    write_edge_list,
)


def _brute_degrees(pos, r):
    n = len(pos)
    out = []
    for i in range(n):
        c = 0
        for j in range(n):
            if i != j and math.dist(pos[i], pos[j]) <= r:
                c += 1
        out.append(c)
    return out


def test_large_radius_gives_complete_graph():
    g = generate_rgg(200, 100.0, 150.0, seed=3)
    assert g.is_complete()
    assert min_degree(g) == 199


def test_single_node():
    g = generate_rgg(1, 10.0, 1.0, seed=0)
    assert g.n == 1 and g.degrees.tolist() == [0]
    assert g.isolated.tolist() == [0]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_degrees_match_pairwise_oracle(seed):
    g = generate_rgg(120, 100.0, 30.0, seed=seed)
    assert g.degrees.tolist() == _brute_degrees(g.positions.tolist(), 30.0)
    assert min_degree(g) == min(_brute_degrees(g.positions.tolist(), 30.0))


def test_determinism_and_symmetry():
    a = generate_rgg(80, 50.0, 12.0, seed=11)
    b = generate_rgg(80, 50.0, 12.0, seed=11)
    assert np.array_equal(a.adj, b.adj) and np.array_equal(a.positions, b.positions)
    assert a.is_symmetric()
    assert not np.array_equal(a.adj, generate_rgg(80, 50.0, 12.0, seed=12).adj)


def test_star_min_degree():
    g = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    assert min_degree(g) == 1
    assert g.degrees.tolist() == [3, 1, 1, 1]


def test_self_loop_rejected():
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(1, 1)])
    with pytest.raises(ValueError):
        Graph(adj=np.eye(2, dtype=bool), positions=np.zeros((2, 2)))


def test_directed_edges():
    g = Graph.from_edges(3, [(0, 1)], directed=True)
    assert g.in_neighbors(1).tolist() == [0]
    assert g.in_neighbors(0).tolist() == []
    assert not g.is_symmetric()


def test_rgg_argument_errors():
    with pytest.raises(ValueError):
        generate_rgg(0, 1.0, 1.0, 0)
    with pytest.raises(ValueError):
        generate_rgg(5, 1.0, 0.0, 0)


def test_partition_sizes_and_modes():
    g = generate_rgg(1000, 100.0, 20.0, seed=0)
    p = partition_nodes(g, 2, "index", seed=4)
    assert p.sizes().tolist() == [500, 500]
    assert partition_nodes(g, 1).sizes().tolist() == [1000]
    sp = partition_nodes(g, 2, "spatial")
    x = g.positions[:, 0]
    assert x[sp.members(1)].max() <= x[sp.members(2)].min()
    with pytest.raises(ValueError):
        partition_nodes(g, 1001)
    with pytest.raises(ValueError):
        partition_nodes(g, 2, "diagonal")


def test_spatial_partition_on_known_positions():
    pos = np.array([[9.0, 0], [1.0, 0], [6.0, 0], [2.0, 0]])
    g = Graph(adj=np.zeros((4, 4), dtype=bool), positions=pos)
    p = partition_nodes(g, 2, "spatial")
    assert sorted(p.members(1).tolist()) == [1, 3]


def _cycle4():
    # nodes 1..4 renumbered 0..3
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)])


def test_local_ratio_on_cycle():
    g = _cycle4()
    p = Partition(2, np.array([1, 1, 2, 2]))
    assert local_infection_ratio(g, p, [2], 1) == pytest.approx(0.25)
    assert local_infection_ratio(g, p, [], 1) == 0.0
    assert local_infection_ratio(g, p, [0, 1, 2, 3], 2) == 1.0
    with pytest.raises(ValueError):
        local_infection_ratio(g, p, [], 3)


def test_empty_union_gives_zero():
    g = Graph.from_edges(3, [(0, 1)])
    p = Partition(2, np.array([1, 1, 2]))
    assert local_infection_ratio(g, p, [0, 1], 2) == 0.0


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), extra=st.integers(0, 39))
def test_local_ratio_monotone(seed, extra):
    rng = np.random.default_rng(seed)
    g = generate_rgg(40, 10.0, 3.0, seed=seed)
    p = partition_nodes(g, 3, seed=seed)
    base = rng.random(40) < 0.3
    more = base.copy()
    more[extra] = True
    for s in (1, 2, 3):
        assert local_infection_ratio(g, p, more, s) >= local_infection_ratio(g, p, base, s)


def test_heterogeneity_matches_definition():
    g = generate_rgg(60, 10.0, 3.0, seed=5)
    p = partition_nodes(g, 3, seed=1)
    inf = np.arange(0, 60, 4)
    mask = np.zeros(60, bool)
    mask[inf] = True
    expect = max(abs(local_infection_ratio(g, p, inf, s) - mask.mean()) for s in (1, 2, 3))
    assert heterogeneity(g, p, inf) == expect


def test_homogeneity_trivial_cases():
    g = generate_rgg(30, 10.0, 4.0, seed=2)
    p = partition_nodes(g, 2, seed=0)
    assert homogeneity_check(g, p, []).all_pass
    singles = partition_nodes(g, 30, seed=0)
    rng = np.random.default_rng(0)
    for _ in range(20):
        inf = np.flatnonzero(rng.random(30) < 0.4)
        assert homogeneity_check(g, singles, inf).all_pass


def test_homogeneity_reports_gathered_violation():
    # dense pocket on the left, sparse right side
    g = generate_rgg(200, 100.0, 15.0, seed=7)
    p = partition_nodes(g, 2, "spatial")
    left = p.members(1)
    inf = left[np.argsort(g.positions[left, 1])[:60]]
    rep = homogeneity_check(g, p, inf)
    assert not rep.all_pass
    assert rep.worst_ratio > 1.0


def test_homogeneity_hand_ratio():
    g = Graph.from_edges(3, [(0, 1), (1, 2)])
    p = Partition(2, np.array([1, 2, 2]))
    # subgroup 2 union is {0,1,2}, so I_2 = 1/3; node 1 sees 1 of d=2
    rep = homogeneity_check(g, p, [0])
    assert rep.passes.tolist() == [True, False, True]
    assert rep.worst_ratio == pytest.approx(1.5)


def test_edge_list_round_trip():
    g = generate_rgg(25, 10.0, 3.5, seed=9)
    buf = io.StringIO()
    write_edge_list(g, buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == "25 10.0 3.5 9"
    g2 = read_edge_list(io.StringIO(text))
    assert np.array_equal(g.adj, g2.adj)
    assert np.array_equal(g.positions, g2.positions)
    assert (g2.side, g2.radius, g2.seed) == (10.0, 3.5, 9)
