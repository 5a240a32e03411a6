"""Decentralized Q-learning covert routing.

Each node keeps a Q-table over (destination, action) holding its estimated
cost-to-go in ``ln(1/DEP)`` units. Per step a transmitter picks an action
epsilon-greedily, receives the immediate cost of the hop and the receiver's
best Q-value as future cost, and moves its estimate toward
``cost + discount * future_cost``. After training, the route is read off by
greedy descent from the source.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .covert_metrics import Hop, Route, link_dep, route_dep
from .errors import ExtractionError, InfeasibleError
from .topology import ActionSpace, action_space, dep_cost

log = logging.getLogger(__name__)

TIE_TOL = 1e-12
DEFAULT_DEAD_END_PENALTY = 50.0

DESTINATION = "destination"
DEAD_END = "dead_end"
HOP_CAP = "hop_cap"


@dataclass(frozen=True)
class LearningConfig:
    episodes: int = 300
    learning_rate: float = 0.3
    discount: float = 0.9
    epsilon: float = 0.1
    max_hops: int | None = None  # None -> number of nodes
    dead_end_penalty: float = DEFAULT_DEAD_END_PENALTY

    def __post_init__(self):
        if self.episodes < 0:
            raise ValueError("episodes must be >= 0")
        for name in ("learning_rate", "discount", "epsilon"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.max_hops is not None and self.max_hops < 1:
            raise ValueError("max_hops must be >= 1")
        if not (math.isfinite(self.dead_end_penalty) and self.dead_end_penalty >= 0):
            raise ValueError("dead_end_penalty must be finite and >= 0")


class QTable:
    """Q-values of one node, one array per destination state aligned with ``space.actions``.

    States are allocated lazily; an unallocated state reads as all zeros.
    """

    def __init__(self, space: ActionSpace):
        self.owner = space.owner
        self.space = space
        self._index = {a: i for i, a in enumerate(space.actions)}
        self._values = {}

    def row(self, state):
        row = self._values.get(state)
        if row is None:
            row = self._values[state] = np.zeros(len(self.space.actions))
        return row

    def get(self, state, action):
        row = self._values.get(state)
        return 0.0 if row is None else float(row[self._index[action]])

    def set(self, state, action, value):
        self.row(state)[self._index[action]] = value

    def index(self, action):
        return self._index[action]

    def states(self):
        return sorted(self._values)

    def rows(self):
        for state in self.states():
            for a, q in zip(self.space.actions, self._values[state]):
                yield self.owner, state, a.receiver_id, a.modality_id, float(q)


def init_q_tables(spaces):
    return {owner: QTable(space) for owner, space in spaces.items()}


def export_q_tables(tables, path):
    with open(path, "w") as fh:
        fh.write("owner,state,receiver,modality,q_value\n")
        for owner in sorted(tables):
            for row in tables[owner].rows():
                fh.write("{},{},{},{},{!r}\n".format(*row))


@dataclass(frozen=True)
class Feedback:
    immediate_cost: float
    future_cost: float


@dataclass
class EpisodeTrace:
    steps: list = field(default_factory=list)  # (node, Action, Feedback)
    terminal: str = DEAD_END

    @property
    def route_nodes(self):
        if not self.steps:
            return []
        return [s[0] for s in self.steps] + [self.steps[-1][1].receiver_id]


def action_cost(hop: Hop, gains, scenario):
    """Immediate cost ``ln(1/DEP)`` of a hop."""
    return dep_cost(link_dep(hop, gains, scenario))


def _argmin_first(values):
    lo = values.min()
    return int(np.flatnonzero(values <= lo + TIE_TOL)[0])


def select_action(q, owner, state, actions, epsilon, rng):
    """Epsilon-greedy choice among ``actions`` (canonically ordered); ``None`` if empty.

    One uniform draw decides exploration (``r < epsilon``); exploring draws a
    second uniform index. Exploiting returns the first action within 1e-12 of
    the minimum Q-value.
    """
    actions = list(actions)
    if not actions:
        return None
    table = q[owner] if isinstance(q, dict) else q
    if rng.random() < epsilon:
        return actions[int(rng.integers(len(actions)))]
    values = np.array([table.get(state, a) for a in actions])
    return actions[_argmin_first(values)]


def update_q(q, owner, state, action, feedback: Feedback, alpha, gamma):
    table = q[owner] if isinstance(q, dict) else q
    old = table.get(state, action)
    new = (1.0 - alpha) * old + alpha * (feedback.immediate_cost + gamma * feedback.future_cost)
    table.set(state, action, new)
    return new


class RoutingContext:
    """Per-scenario data every node needs locally: its action space and hop costs."""

    def __init__(self, scenario, gains, spaces=None):
        self.scenario = scenario
        self.gains = gains
        if spaces is None:
            spaces = {n: action_space(n, gains, scenario) for n in scenario.node_ids}
        self.spaces = spaces
        self.costs = {
            owner: np.array([action_cost(space.hop(a), gains, scenario) for a in space])
            for owner, space in spaces.items()
        }

    def candidates(self, node, visited):
        space = self.spaces[node]
        return [i for i, a in enumerate(space.actions) if a.receiver_id not in visited]


def run_episode(q, scenario, gains, config: LearningConfig, rng, context=None):
    """One traversal from the source, updating Q-values hop by hop.

    Already-visited nodes are excluded from the candidates. A receiver left
    with no candidates feeds back ``dead_end_penalty`` and ends the episode;
    the destination feeds back 0.
    """
    ctx = context or RoutingContext(scenario, gains)
    dest = scenario.destination_id
    max_hops = config.max_hops or len(scenario.nodes)
    trace = EpisodeTrace()
    node = scenario.source_id
    visited = {node}
    while True:
        cand = ctx.candidates(node, visited)
        if not cand:
            trace.terminal = DEAD_END
            return trace
        table = q[node]
        space = ctx.spaces[node]
        if rng.random() < config.epsilon:
            i = cand[int(rng.integers(len(cand)))]
        else:
            row = table.row(dest)
            i = cand[_argmin_first(row[cand])]
        action = space.actions[i]
        rx = action.receiver_id
        if rx == dest:
            future, terminal = 0.0, DESTINATION
        else:
            nxt = ctx.candidates(rx, visited | {rx})
            if nxt:
                future, terminal = float(q[rx].row(dest)[nxt].min()), None
            else:
                future, terminal = config.dead_end_penalty, DEAD_END
        fb = Feedback(float(ctx.costs[node][i]), future)
        row = table.row(dest)
        row[i] = (1.0 - config.learning_rate) * row[i] + config.learning_rate * (
            fb.immediate_cost + config.discount * fb.future_cost
        )
        trace.steps.append((node, action, fb))
        if terminal is not None:
            trace.terminal = terminal
            return trace
        if len(trace.steps) >= max_hops:
            trace.terminal = HOP_CAP
            return trace
        node = rx
        visited.add(rx)


def extract_route(q, scenario, gains, context=None):
    """Greedy argmin-Q descent from the source over unvisited feasible receivers."""
    ctx = context or RoutingContext(scenario, gains)
    dest = scenario.destination_id
    node = scenario.source_id
    visited = {node}
    hops = []
    while node != dest:
        cand = ctx.candidates(node, visited)
        if not cand or len(hops) >= len(scenario.nodes):
            raise ExtractionError(f"greedy extraction dead-ended at node {node}", hops)
        row = q[node].row(dest)
        i = cand[_argmin_first(row[cand])]
        a = ctx.spaces[node].actions[i]
        hops.append(Hop(node, a.receiver_id, a.modality_id))
        node = a.receiver_id
        visited.add(node)
    return Route(tuple(hops))


@dataclass
class TrainingResult:
    q_tables: dict
    episode_route_dep: np.ndarray  # NaN where extraction failed
    episode_terminal: list
    episode_length: np.ndarray


def train(scenario, gains, config: LearningConfig, rng, context=None, track_routes=True):
    """Run ``config.episodes`` episodes from zero-initialized Q-tables.

    When ``track_routes`` is set, the greedy route is extracted after every
    episode and its end-to-end DEP stored for convergence studies.
    """
    ctx = context or RoutingContext(scenario, gains)
    if not len(ctx.spaces[scenario.source_id]):
        raise InfeasibleError(f"source {scenario.source_id} has no feasible action")
    q = init_q_tables(ctx.spaces)
    n = config.episodes
    deps = np.full(n, np.nan)
    lengths = np.zeros(n, dtype=np.int64)
    terminals = []
    for ep in range(n):
        trace = run_episode(q, scenario, gains, config, rng, ctx)
        terminals.append(trace.terminal)
        lengths[ep] = len(trace.steps)
        if track_routes:
            try:
                deps[ep] = route_dep(extract_route(q, scenario, gains, ctx), gains, scenario)
            except ExtractionError:
                pass
    log.debug("trained %d episodes; last terminal %s", n, terminals[-1] if terminals else None)
    return TrainingResult(q, deps, terminals, lengths)
