import itertools
import math
import random

import pytest
from scipy import stats

from covertroute.channel_model import build_gain_table, load_scenario
from covertroute.covert_metrics import Hop, hop_throughput
from covertroute.errors import ScenarioError
from covertroute.topology import Action, action_space, feasibility_graph, neighbor_set, state_space

from conftest import full_table, make_scenario, random_small_scenario


def test_huge_radius_reaches_everyone(template_path):
    sc = load_scenario(template_path).replace(neighbor_radius=1e4)
    assert neighbor_set(1, sc) == frozenset(range(2, 37))


def test_tiny_radius_isolates(template_path):
    sc = load_scenario(template_path).replace(neighbor_radius=1.0)
    assert all(neighbor_set(n, sc) == frozenset() for n in sc.node_ids)


def test_radius_80_matches_pairwise_check(template_path):
    sc = load_scenario(template_path)
    pos = {n.id: n.position for n in sc.nodes}
    for a in sc.node_ids:
        expected = {b for b in sc.node_ids if b != a and math.dist(pos[a], pos[b]) <= 80.0}
        assert neighbor_set(a, sc) == expected
        for b in expected:
            assert a in neighbor_set(b, sc)


def test_state_space_excludes_owner(template_path):
    sc = load_scenario(template_path)
    assert state_space(5, sc).states == frozenset(range(1, 37)) - {5}
    with pytest.raises(ScenarioError):
        state_space(99, sc)


def test_all_feasible_gives_full_product(template_path):
    sc = load_scenario(template_path).replace(target_throughput=0.0)
    g = build_gain_table(sc)
    for n in (1, 8, 36):
        assert len(action_space(n, g, sc)) == 3 * len(neighbor_set(n, sc))


def test_unreachable_target_empties_spaces(template_path):
    sc = load_scenario(template_path).replace(target_throughput=1e12)
    g = build_gain_table(sc)
    assert all(len(action_space(n, g, sc)) == 0 for n in sc.node_ids)
    assert len(feasibility_graph(g, sc)) == 0


def test_mixed_feasibility_membership(template_path):
    sc = load_scenario(template_path)
    g = build_gain_table(sc)
    for n in sc.node_ids:
        space = action_space(n, g, sc)
        for rx in neighbor_set(n, sc):
            for m in sc.modality_ids:
                ok = hop_throughput(Hop(n, rx, m), g, sc) >= sc.target_throughput
                assert (Action(rx, m) in space) == ok
        assert list(space.actions) == sorted(space.actions)


def test_edge_count_and_weights(template_path):
    sc = load_scenario(template_path)
    g = build_gain_table(sc)
    graph = feasibility_graph(g, sc)
    assert len(graph) == sum(len(action_space(n, g, sc)) for n in sc.node_ids)
    L, s0 = sc.block_length, sc.noise_psd * 4e6
    for e in graph.edges:
        s1 = s0 + sc.transmit_power * g.willie_gain(e.tx, e.modality)
        delta = s0 * s1 / (s1 - s0) * math.log(s1 / s0)
        dep = stats.gamma.cdf(L * delta / s1, L) + stats.gamma.sf(L * delta / s0, L)
        assert e.weight == pytest.approx(-math.log(dep), rel=1e-9, abs=1e-12)
        assert e.weight >= 0.0


def test_raising_target_never_adds_edges():
    for seed in range(10):
        sc = random_small_scenario(seed)
        g = build_gain_table(sc)
        prev = None
        for target in sorted({0.0, sc.target_throughput, 2 * sc.target_throughput, 1e9}):
            edges = {e[:3] for e in feasibility_graph(g, sc.replace(target_throughput=target)).edges}
            if prev is not None:
                assert edges <= prev
            prev = edges


def test_action_order_is_construction_independent():
    pos = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0), (2, 0, 0)]
    sc = make_scenario(pos)
    g = full_table(sc, lambda a, b, m: 3.0, lambda a, m: 1.0)
    base = action_space(1, g, sc)
    order = list(range(5))
    random.Random(0).shuffle(order)
    shuffled = sc.replace(nodes=tuple(sc.nodes[i] for i in order))
    assert action_space(1, g, shuffled) == base


def test_best_simple_edges_keep_highest_dep(template_path):
    sc = load_scenario(template_path)
    graph = feasibility_graph(build_gain_table(sc), sc)
    best = graph.best_simple_edges()
    for (tx, rx), group in itertools.groupby(graph.edges, key=lambda e: (e.tx, e.rx)):
        assert best[(tx, rx)].dep == max(e.dep for e in group)


def test_edge_list_dump(tmp_path, template_path):
    sc = load_scenario(template_path)
    graph = feasibility_graph(build_gain_table(sc), sc)
    graph.write_edge_list(tmp_path / "e.csv")
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "tx,rx,modality,weight,throughput_bps"
    assert len(lines) == len(graph) + 1
    tx, rx, m, w, thr = lines[1].split(",")
    e = graph.edges[0]
    assert (int(tx), int(rx), int(m), float(w), float(thr)) == (e.tx, e.rx, e.modality, e.weight, e.throughput)
