"""Centralized optimum, exhaustive verifier and the two geometric baselines."""

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .covert_metrics import Hop, Route, link_dep, route_dep, route_throughput
from .errors import InfeasibleError, ScenarioError
from .kernels import enumerate_routes
from .topology import action_space, feasibility_graph

OK = "ok"
BASELINE_FAILURE = "baseline-failure"
WILLIE_CLEARANCE = 50.0  # m; baselines only relay through nodes farther than this from Willie
BRUTE_FORCE_MAX_NODES = 12


@dataclass(frozen=True)
class RouteResult:
    method: str
    route: Route | None
    end_to_end_dep: float | None
    end_to_end_throughput: float | None
    status: str = OK
    diagnostic: str = ""

    @property
    def ok(self):
        return self.status == OK


def _result(method, route, gains, scenario):
    return RouteResult(method, route, route_dep(route, gains, scenario), route_throughput(route, gains, scenario))


def dijkstra_optimal(gains, scenario, graph=None):
    """Max end-to-end DEP route under the per-hop throughput constraint.

    Modalities are collapsed first (best DEP per node pair), then Dijkstra runs
    on ``ln(1/DEP)`` weights. Equal-distance ties settle on the lower node id.
    """
    graph = graph or feasibility_graph(gains, scenario)
    best = graph.best_simple_edges()
    adj = {}
    for (tx, _), e in sorted(best.items()):
        adj.setdefault(tx, []).append(e)
    src, dst = scenario.source_id, scenario.destination_id
    dist = {src: 0.0}
    prev = {}
    heap = [(0.0, src)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == dst:
            break
        for e in adj.get(u, ()):
            nd = d + e.weight
            if e.rx not in dist or nd < dist[e.rx]:
                dist[e.rx] = nd
                prev[e.rx] = e
                heapq.heappush(heap, (nd, e.rx))
    if dst not in done:
        raise InfeasibleError(f"destination {dst} unreachable from {src} at target throughput")
    hops = []
    node = dst
    while node != src:
        e = prev[node]
        hops.append(Hop(e.tx, e.rx, e.modality))
        node = e.tx
    return _result("centralized", Route(tuple(reversed(hops))), gains, scenario)


@dataclass(frozen=True)
class BruteForceResult:
    by_sum: Route  # argmin of summed ln(1/DEP)
    by_product: Route  # argmax of the DEP product
    n_routes: int


def brute_force_search(gains, scenario, graph=None, use_numba=None):
    """Enumerate every simple route and per-hop feasible modality assignment."""
    if len(scenario.nodes) > BRUTE_FORCE_MAX_NODES:
        raise ScenarioError(f"brute force limited to {BRUTE_FORCE_MAX_NODES} nodes, got {len(scenario.nodes)}")
    graph = graph or feasibility_graph(gains, scenario)
    ids = list(scenario.node_ids)
    index = {n: i for i, n in enumerate(ids)}
    edges = graph.edges  # sorted by (tx, rx, modality): DFS order is canonical
    indptr = np.zeros(len(ids) + 1, dtype=np.int64)
    for e in edges:
        indptr[index[e.tx] + 1] += 1
    indptr = np.cumsum(indptr)
    dst = np.array([index[e.rx] for e in edges], dtype=np.int64)
    weight = np.array([e.weight for e in edges], dtype=float)
    dep = np.array([e.dep for e in edges], dtype=float)
    by_sum, by_prod, n_routes = enumerate_routes(
        len(ids), indptr, dst, weight, dep, index[scenario.source_id], index[scenario.destination_id], use_numba
    )
    if n_routes == 0:
        raise InfeasibleError("no feasible route")

    def route(idx):
        return Route(tuple(Hop(edges[k].tx, edges[k].rx, edges[k].modality) for k in idx))

    return BruteForceResult(route(by_sum), route(by_prod), n_routes)


def brute_force_optimal(gains, scenario, graph=None, use_numba=None):
    found = brute_force_search(gains, scenario, graph, use_numba)
    return _result("brute", found.by_product, gains, scenario)


def _greedy_baseline(method, score, gains, scenario):
    spaces = {n: action_space(n, gains, scenario) for n in scenario.node_ids}
    pos = {n.id: np.asarray(n.position, dtype=float) for n in scenario.nodes}
    willie = np.asarray(scenario.willie_position, dtype=float)
    src, dst = scenario.source_id, scenario.destination_id
    node = src
    visited = {src}
    hops = []
    while node != dst:
        by_rx = {}
        for a in spaces[node]:
            by_rx.setdefault(a.receiver_id, []).append(a.modality_id)
        ranked = []
        for rx in sorted(by_rx):
            if rx in visited or np.linalg.norm(pos[rx] - willie) <= WILLIE_CLEARANCE:
                continue
            s = score(pos[node], pos[rx], pos[dst])
            if s is not None:
                ranked.append((s, rx))
        if not ranked or len(hops) >= len(scenario.nodes):
            partial = "|".join(str(h) for h in hops) or "-"
            return RouteResult(method, None, None, None, BASELINE_FAILURE, f"dead end at node {node} after {partial}")
        _, rx = min(ranked)
        m = max(by_rx[rx], key=lambda mid: (link_dep(Hop(node, rx, mid), gains, scenario), -mid))
        hops.append(Hop(node, rx, m))
        visited.add(rx)
        node = rx
    return _result(method, Route(tuple(hops)), gains, scenario)


def _distance_score(tx, rx, dest):
    return float(np.linalg.norm(dest - rx))


def horizontal_angle(tx, rx, dest):
    """Angle between tx->rx and tx->dest in the horizontal plane; ``None`` if degenerate."""
    u = (rx - tx)[:2]
    v = (dest - tx)[:2]
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return None
    c = float(np.dot(u, v) / (nu * nv))
    return math.acos(min(1.0, max(-1.0, c)))


def closest_to_destination(gains, scenario):
    return _greedy_baseline("closest", _distance_score, gains, scenario)


def best_direction_to_destination(gains, scenario):
    return _greedy_baseline("bestdir", horizontal_angle, gains, scenario)
