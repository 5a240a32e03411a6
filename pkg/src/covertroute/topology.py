"""Neighbor sets, per-node state/action spaces and the throughput-feasibility graph."""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .covert_metrics import Hop, hop_throughput, link_dep
from .errors import ScenarioError


class Action(NamedTuple):
    receiver_id: int
    modality_id: int


@dataclass(frozen=True)
class ActionSpace:
    owner: int
    actions: tuple[Action, ...]

    def __len__(self):
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)

    def __contains__(self, action):
        return action in self.actions

    def hop(self, action):
        return Hop(self.owner, action.receiver_id, action.modality_id)


@dataclass(frozen=True)
class StateSpace:
    owner: int
    states: frozenset


def neighbor_set(node_id, scenario):
    """Other legitimate nodes within ``neighbor_radius`` (3D Euclidean)."""
    me = np.asarray(scenario.position(node_id))
    out = set()
    for n in scenario.nodes:
        if n.id != node_id and np.linalg.norm(np.asarray(n.position) - me) <= scenario.neighbor_radius:
            out.add(n.id)
    return frozenset(out)


def state_space(node_id, scenario):
    if node_id not in scenario.node_ids:
        raise ScenarioError(f"unknown node id {node_id}")
    return StateSpace(node_id, frozenset(scenario.node_ids) - {node_id})


def action_space(node_id, gains, scenario):
    """Feasible (receiver, modality) pairs: hop throughput >= target, canonical order."""
    target = scenario.target_throughput
    actions = []
    for rx in sorted(neighbor_set(node_id, scenario)):
        for m in scenario.modality_ids:
            if hop_throughput(Hop(node_id, rx, m), gains, scenario) >= target:
                actions.append(Action(rx, m))
    return ActionSpace(node_id, tuple(actions))


class Edge(NamedTuple):
    tx: int
    rx: int
    modality: int
    weight: float  # ln(1 / hop DEP)
    dep: float
    throughput: float


def dep_cost(dep):
    """``ln(1/dep)``; a DEP that underflowed to 0 is clamped to the smallest normal float."""
    return -math.log(max(dep, np.finfo(float).tiny))


class FeasibilityGraph:
    """Directed multigraph with one edge per feasible (tx, rx, modality)."""

    def __init__(self, nodes, edges):
        self.nodes = tuple(nodes)
        self.edges = tuple(sorted(edges))
        self._out = {n: [] for n in self.nodes}
        for e in self.edges:
            self._out[e.tx].append(e)

    def out_edges(self, node):
        return self._out[node]

    def __len__(self):
        return len(self.edges)

    def best_simple_edges(self):
        """Keep, per directed node pair, the feasible modality with the highest DEP."""
        best = {}
        for e in self.edges:
            key = (e.tx, e.rx)
            if key not in best or e.dep > best[key].dep:
                best[key] = e
        return best

    def write_edge_list(self, path):
        with open(path, "w") as fh:
            fh.write("tx,rx,modality,weight,throughput_bps\n")
            for e in self.edges:
                fh.write(f"{e.tx},{e.rx},{e.modality},{e.weight!r},{e.throughput!r}\n")


def feasibility_graph(gains, scenario, spaces=None):
    if spaces is None:
        spaces = {n: action_space(n, gains, scenario) for n in scenario.node_ids}
    edges = []
    for owner, space in spaces.items():
        for a in space:
            hop = space.hop(a)
            dep = link_dep(hop, gains, scenario)
            edges.append(Edge(owner, a.receiver_id, a.modality_id, dep_cost(dep), dep, hop_throughput(hop, gains, scenario)))
    return FeasibilityGraph(scenario.node_ids, edges)
