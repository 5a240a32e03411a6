import math

import numpy as np
import pytest

from covertroute.channel_model import build_gain_table, load_scenario
from covertroute.covert_metrics import Hop, Route, hop_throughput, link_dep, route_dep
from covertroute.errors import InfeasibleError, ScenarioError
from covertroute.harness import apply_overrides, Overrides, run_method
from covertroute.oracle_routing import (
    BASELINE_FAILURE,
    best_direction_to_destination,
    brute_force_optimal,
    brute_force_search,
    closest_to_destination,
    dijkstra_optimal,
)
from covertroute.q_routing import LearningConfig
from covertroute.topology import feasibility_graph

from conftest import UNIT_MOD, full_table, make_scenario, random_small_scenario

FAR = (1e3, 1e3, 0.0)
MODS = (UNIT_MOD, UNIT_MOD.__class__(2, 2e9, 1.0, 2.0, 0.0, 0.0, 0.0))


def test_two_node_direct_hop_best_modality():
    sc = make_scenario([(0, 0, 0), (1, 0, 0)], modalities=MODS)
    g = full_table(sc, lambda a, b, m: 3.0, lambda a, m: 0.2 if m == 1 else 0.05)
    res = dijkstra_optimal(g, sc)
    assert res.route == Route((Hop(1, 2, 2),))
    assert res.end_to_end_dep == pytest.approx(link_dep(Hop(1, 2, 2), g, sc), abs=1e-15)


def test_unreachable_destination():
    sc = make_scenario([(0, 0, 0), (1, 0, 0)], target=5.0)
    g = full_table(sc, lambda a, b, m: 3.0, lambda a, m: 0.1)
    with pytest.raises(InfeasibleError):
        dijkstra_optimal(g, sc)
    with pytest.raises(InfeasibleError):
        brute_force_optimal(g, sc)


def test_single_feasible_route():
    sc = make_scenario([(0, 0, 0), (1, 0, 0), (2, 0, 0), (3, 0, 0)], radius=1.1)
    g = full_table(sc, lambda a, b, m: 3.0, lambda a, m: 0.1)
    assert brute_force_optimal(g, sc).route == Route.parse("1-2:1|2-3:1|3-4:1")
    assert brute_force_search(g, sc).n_routes == 1


def test_equal_deps_prefer_fewest_hops_canonically():
    sc = make_scenario([(0, 0, 0), (1, 1, 0), (1, -1, 0), (2, 0, 0), (0.2, 1.3, 0)], radius=1.5, dest=4)
    g = full_table(sc, lambda a, b, m: 3.0, lambda a, m: 0.3)
    assert brute_force_optimal(g, sc).route == Route.parse("1-2:1|2-4:1")
    assert dijkstra_optimal(g, sc).end_to_end_dep == brute_force_optimal(g, sc).end_to_end_dep


def test_six_node_random_instance_agrees():
    sc = next(s for s in (random_small_scenario(i, 6, 6) for i in range(50)) if _feasible(s))
    g = build_gain_table(sc)
    assert dijkstra_optimal(g, sc).end_to_end_dep == pytest.approx(brute_force_optimal(g, sc).end_to_end_dep, abs=1e-12)


def _feasible(sc):
    try:
        dijkstra_optimal(build_gain_table(sc), sc)
        return True
    except InfeasibleError:
        return False


def test_sum_and_product_optima_agree_small():
    checked = 0
    for seed in range(60):
        sc = random_small_scenario(seed, 4, 8)
        g = build_gain_table(sc)
        try:
            found = brute_force_search(g, sc)
        except InfeasibleError:
            continue
        assert found.by_sum == found.by_product
        total = sum(-math.log(link_dep(h, g, sc)) for h in found.by_sum)
        assert total == pytest.approx(-math.log(route_dep(found.by_sum, g, sc)), abs=1e-12)
        checked += 1
    assert checked > 40


def test_brute_force_size_guard(template_path):
    sc = load_scenario(template_path)
    with pytest.raises(ScenarioError):
        brute_force_search(build_gain_table(sc), sc)


def test_kept_modality_is_best(template_path):
    sc = load_scenario(template_path)
    g = build_gain_table(sc)
    best = dijkstra_optimal(g, sc)
    base = best.end_to_end_dep
    for i, h in enumerate(best.route):
        for m in sc.modality_ids:
            alt = Hop(h.tx_id, h.rx_id, m)
            if m == h.modality_id or hop_throughput(alt, g, sc) < sc.target_throughput:
                continue
            hops = list(best.route.hops)
            hops[i] = alt
            assert route_dep(Route(tuple(hops)), g, sc) <= base


@pytest.mark.parametrize("wx", [25.0, 125.0, 225.0])
def test_centralized_is_upper_bound(template_path, wx):
    sc0 = load_scenario(template_path)
    sc, lc = apply_overrides(sc0, LearningConfig(episodes=150), Overrides(willie_x=wx, willie_y=125.0))
    g = build_gain_table(sc)
    top = dijkstra_optimal(g, sc).end_to_end_dep
    for method in ("qcovert", "closest", "bestdir"):
        rec = run_method(method, sc, lc, 1, gains=g)
        if rec.end_to_end_dep is not None:
            assert rec.end_to_end_dep <= top + 1e-12


def test_raising_target_never_helps(template_path):
    sc = load_scenario(template_path)
    g = build_gain_table(sc)
    deps = []
    for u in (0.0, 0.25e6, 0.5e6, 1.0e6, 1.5e6):
        deps.append(dijkstra_optimal(g, sc.replace(target_throughput=u)).end_to_end_dep)
    assert all(a >= b for a, b in zip(deps, deps[1:]))


# -- baselines -----------------------------------------------------------------


def test_closest_direct_hop_when_destination_qualifies():
    sc = make_scenario([(0, 0, 0), (5, 5, 0), (3, 0, 0)], modalities=MODS, willie=FAR, radius=4)
    g = full_table(sc, lambda a, b, m: 3.0, lambda a, m: 0.1 if m == 1 else 0.2)
    res = closest_to_destination(g, sc)
    assert res.ok and res.route == Route((Hop(1, 3, 1),))


def test_closest_fails_near_willie():
    sc = make_scenario([(0, 0, 0), (10, 0, 0), (100, 0, 0)], willie=(20, 0, 0), radius=20)
    g = full_table(sc, lambda a, b, m: 3.0, lambda a, m: 0.1)
    res = closest_to_destination(g, sc)
    assert res.status == BASELINE_FAILURE and res.route is None and "dead end at node 1" in res.diagnostic


def scripted_closest(g, sc):
    pos = {n.id: np.asarray(n.position) for n in sc.nodes}
    w = np.asarray(sc.willie_position)
    node, seen, hops = sc.source_id, {sc.source_id}, []
    while node != sc.destination_id:
        options = []
        for rx in sc.node_ids:
            if rx in seen or np.linalg.norm(pos[rx] - pos[node]) > sc.neighbor_radius:
                continue
            if np.linalg.norm(pos[rx] - w) <= 50.0:
                continue
            mods = [m for m in sc.modality_ids if hop_throughput(Hop(node, rx, m), g, sc) >= sc.target_throughput]
            if mods:
                options.append((np.linalg.norm(pos[sc.destination_id] - pos[rx]), rx, mods))
        if not options:
            return None
        _, rx, mods = min(options, key=lambda t: (t[0], t[1]))
        m = max(mods, key=lambda k: (link_dep(Hop(node, rx, k), g, sc), -k))
        hops.append(Hop(node, rx, m))
        seen.add(rx)
        node = rx
    return Route(tuple(hops))


@pytest.mark.parametrize("wx", [75.0, 145.0, 200.0])
def test_closest_matches_hand_trace(template_path, wx):
    sc = load_scenario(template_path).replace(willie_position=(wx, 115.0, 3.0))
    g = build_gain_table(sc)
    res = closest_to_destination(g, sc)
    assert (res.route if res.ok else None) == scripted_closest(g, sc)


def test_bestdir_takes_on_ray_neighbor():
    sc = make_scenario([(0, 0, 0), (1, 0, 0), (0, 1, 0), (3, 0, 0)], willie=FAR, radius=2.5)
    g = full_table(sc, lambda a, b, m: 3.0, lambda a, m: 0.1)
    assert best_direction_to_destination(g, sc).route == Route.parse("1-2:1|2-4:1")


def test_bestdir_equal_angles_lower_id():
    sc = make_scenario([(0, 0, 0), (1, 1, 0), (2, 2, 0), (4, 0.5, 0)], willie=FAR, radius=3.2)
    g = full_table(sc, lambda a, b, m: 3.0, lambda a, m: 0.1)
    assert best_direction_to_destination(g, sc).route == Route.parse("1-2:1|2-4:1")


def test_bestdir_angles_recomputed(template_path):
    sc = load_scenario(template_path).replace(willie_position=(60.0, 180.0, 3.0))
    g = build_gain_table(sc)
    res = best_direction_to_destination(g, sc)
    assert res.ok
    pos = {n.id: n.position for n in sc.nodes}
    dest = pos[sc.destination_id]
    graph = feasibility_graph(g, sc)
    seen = {sc.source_id}
    for h in res.route:
        def offset(rx):
            a = math.atan2(pos[rx][1] - pos[h.tx_id][1], pos[rx][0] - pos[h.tx_id][0])
            b = math.atan2(dest[1] - pos[h.tx_id][1], dest[0] - pos[h.tx_id][0])
            d = abs(a - b) % (2 * math.pi)
            return min(d, 2 * math.pi - d)

        cands = {e.rx for e in graph.out_edges(h.tx_id)
                 if e.rx not in seen and math.dist(pos[e.rx], sc.willie_position) > 50.0}
        assert offset(h.rx_id) <= min(offset(c) for c in cands) + 1e-12
        seen.add(h.rx_id)
