"""Scene geometry, modalities and per-link power gains.

Gains come either from :func:`build_gain_table` (log-distance path loss with
per-obstacle penetration loss and seeded log-normal shadowing) or from a CSV
table ingested with :func:`load_gain_table`.
"""

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import yaml

from .errors import GainTableError, GeometryError, MissingLinkError, ScenarioError
from .kernels import obstruction_counts

REFERENCE_DISTANCE = 1.0  # m
WILLIE = -1  # rx id used for node->Willie rows in gain-table files
GAIN_TABLE_HEADER = ("tx", "rx", "modality", "gain_linear")


def _vec3(value, what):
    try:
        vec = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ScenarioError(f"{what}: expected a 3-vector, got {value!r}") from None
    if len(vec) != 3:
        raise ScenarioError(f"{what}: expected 3 coordinates, got {len(vec)}")
    if not all(math.isfinite(v) for v in vec):
        raise ScenarioError(f"{what}: coordinates must be finite")
    return vec


@dataclass(frozen=True)
class NodeDef:
    id: int
    position: tuple[float, float, float]

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, f"node {self.id} position"))


@dataclass(frozen=True)
class Modality:
    id: int
    center_frequency: float  # Hz
    bandwidth: float  # Hz
    pathloss_exponent: float
    reference_loss_db: float  # at REFERENCE_DISTANCE
    obstruction_loss_db: float  # per obstacle crossed
    shadowing_sigma_db: float

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ScenarioError(f"modality {self.id}: bandwidth must be > 0")
        if not self.pathloss_exponent >= 1:
            raise ScenarioError(f"modality {self.id}: pathloss_exponent must be >= 1")
        for name in ("reference_loss_db", "obstruction_loss_db", "shadowing_sigma_db"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ScenarioError(f"modality {self.id}: {name} must be finite and >= 0")


@dataclass(frozen=True)
class Obstacle:
    min_corner: tuple[float, float, float]
    max_corner: tuple[float, float, float]

    def __post_init__(self):
        lo = _vec3(self.min_corner, "obstacle min corner")
        hi = _vec3(self.max_corner, "obstacle max corner")
        if any(a > b for a, b in zip(lo, hi)):
            raise ScenarioError(f"obstacle min corner {lo} exceeds max corner {hi}")
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)


@dataclass(frozen=True)
class Scenario:
    nodes: tuple[NodeDef, ...]
    modalities: tuple[Modality, ...]
    source_id: int
    destination_id: int
    willie_position: tuple[float, float, float]
    transmit_power: float  # W
    noise_psd: float  # W/Hz
    block_length: int  # channel uses per slot
    target_throughput: float  # bit/s
    neighbor_radius: float  # m
    rng_seed: int
    obstacles: tuple[Obstacle, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "modalities", tuple(self.modalities))
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        object.__setattr__(self, "willie_position", _vec3(self.willie_position, "willie_position"))
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ScenarioError("node ids must be unique")
        mids = [m.id for m in self.modalities]
        if not mids:
            raise ScenarioError("at least one modality is required")
        if len(set(mids)) != len(mids):
            raise ScenarioError("modality ids must be unique")
        if self.source_id == self.destination_id:
            raise ScenarioError("source_id and destination_id must differ")
        for name in ("source_id", "destination_id"):
            if getattr(self, name) not in ids:
                raise ScenarioError(f"{name} {getattr(self, name)} is not a node")
        if not self.transmit_power > 0:
            raise ScenarioError("transmit_power must be > 0")
        if not self.noise_psd > 0:
            raise ScenarioError("noise_psd must be > 0")
        if int(self.block_length) != self.block_length or self.block_length < 1:
            raise ScenarioError("block_length must be an integer >= 1")
        if not (math.isfinite(self.target_throughput) and self.target_throughput >= 0):
            raise ScenarioError("target_throughput must be finite and >= 0")
        if not self.neighbor_radius > 0:
            raise ScenarioError("neighbor_radius must be > 0")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ScenarioError("rng_seed must fit in 64 bits")

    @property
    def node_ids(self):
        return tuple(sorted(n.id for n in self.nodes))

    @property
    def modality_ids(self):
        return tuple(sorted(m.id for m in self.modalities))

    def position(self, node_id):
        for n in self.nodes:
            if n.id == node_id:
                return n.position
        raise ScenarioError(f"unknown node id {node_id}")

    def modality(self, modality_id):
        for m in self.modalities:
            if m.id == modality_id:
                return m
        raise ScenarioError(f"unknown modality id {modality_id}")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=True)
class GainTable:
    """Linear power gains ``|g|^2``.

    ``links`` maps ``(tx, rx, modality)``; ``willie`` maps ``(tx, modality)``.
    Treat as immutable once built.
    """

    links: Mapping[tuple[int, int, int], float] = field(default_factory=dict)
    willie: Mapping[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        for key, g in list(self.links.items()) + list(self.willie.items()):
            if not (math.isfinite(g) and g > 0):
                raise GainTableError(f"gain for {key} must be finite and > 0, got {g!r}")

    def link_gain(self, tx, rx, modality):
        try:
            return self.links[(tx, rx, modality)]
        except KeyError:
            raise MissingLinkError(f"no gain for link {tx}->{rx} modality {modality}") from None

    def willie_gain(self, tx, modality):
        try:
            return self.willie[(tx, modality)]
        except KeyError:
            raise MissingLinkError(f"no gain for link {tx}->Willie modality {modality}") from None


def segment_obstruction_count(p1, p2, obstacles: Sequence[Obstacle]):
    """Number of obstacles whose closed box meets the open segment ``p1 -> p2``."""
    if not obstacles:
        return 0
    lo = np.array([o.min_corner for o in obstacles])
    hi = np.array([o.max_corner for o in obstacles])
    return int(obstruction_counts(np.asarray(p1, float), np.asarray(p2, float), lo, hi)[0])


def in_radius_pairs(scenario):
    """Ordered ``(tx, rx)`` pairs within ``neighbor_radius``, in canonical order."""
    ids = scenario.node_ids
    pos = {n.id: np.asarray(n.position) for n in scenario.nodes}
    pairs = []
    for tx in ids:
        for rx in ids:
            if tx == rx:
                continue
            d = float(np.linalg.norm(pos[tx] - pos[rx]))
            if d == 0.0:
                raise GeometryError(f"nodes {tx} and {rx} share a position")
            if d <= scenario.neighbor_radius:
                pairs.append((tx, rx))
    return pairs


def path_loss_db(distance, modality: Modality, n_obstructions, shadowing_db):
    d = np.maximum(np.asarray(distance, dtype=float), REFERENCE_DISTANCE)
    return (
        modality.reference_loss_db
        + 10.0 * modality.pathloss_exponent * np.log10(d / REFERENCE_DISTANCE)
        + modality.obstruction_loss_db * np.asarray(n_obstructions, dtype=float)
        + shadowing_db
    )


def build_gain_table(scenario: Scenario) -> GainTable:
    """Synthesize all in-radius link gains and all node->Willie gains.

    Shadowing draws are taken from ``default_rng(scenario.rng_seed)`` in the order
    (tx, rx, modality) over node links, then (tx, modality) over Willie links, so
    node-link gains do not depend on where Willie stands.
    """
    ids = scenario.node_ids
    mods = sorted(scenario.modalities, key=lambda m: m.id)
    pos = {n.id: np.asarray(n.position, dtype=float) for n in scenario.nodes}
    pairs = in_radius_pairs(scenario)
    willie = np.asarray(scenario.willie_position, dtype=float)

    p1 = np.array([pos[tx] for tx, _ in pairs] + [pos[tx] for tx in ids]).reshape(-1, 3)
    p2 = np.array([pos[rx] for _, rx in pairs] + [willie for _ in ids]).reshape(-1, 3)
    dist = np.linalg.norm(p2 - p1, axis=1)
    if scenario.obstacles:
        lo = np.array([o.min_corner for o in scenario.obstacles])
        hi = np.array([o.max_corner for o in scenario.obstacles])
        nobs = obstruction_counts(p1, p2, lo, hi)
    else:
        nobs = np.zeros(len(p1), dtype=np.int64)

    rng = np.random.default_rng(scenario.rng_seed)
    n_mod = len(mods)
    z_links = rng.standard_normal(len(pairs) * n_mod).reshape(len(pairs), n_mod)
    z_willie = rng.standard_normal(len(ids) * n_mod).reshape(len(ids), n_mod)
    z = np.vstack([z_links, z_willie])

    gains = np.empty((len(p1), n_mod))
    for k, m in enumerate(mods):
        pl = path_loss_db(dist, m, nobs, m.shadowing_sigma_db * z[:, k])
        gains[:, k] = 10.0 ** (-pl / 10.0)

    links = {}
    for i, (tx, rx) in enumerate(pairs):
        for k, m in enumerate(mods):
            links[(tx, rx, m.id)] = float(gains[i, k])
    wl = {}
    for j, tx in enumerate(ids):
        for k, m in enumerate(mods):
            wl[(tx, m.id)] = float(gains[len(pairs) + j, k])
    return GainTable(links=links, willie=wl)


def check_coverage(table: GainTable, scenario: Scenario):
    """Raise :class:`GainTableError` naming the first link the table lacks."""
    mids = scenario.modality_ids
    for tx, rx in in_radius_pairs(scenario):
        for m in mids:
            if (tx, rx, m) not in table.links:
                raise GainTableError(f"gain table missing link {tx}->{rx} modality {m}")
    for tx in scenario.node_ids:
        for m in mids:
            if (tx, m) not in table.willie:
                raise GainTableError(f"gain table missing link {tx}->Willie modality {m}")


def _check_self_coverage(table: GainTable):
    # without a scenario: every node seen needs a Willie row for every modality seen
    nodes = {k[0] for k in table.links} | {k[1] for k in table.links} | {k[0] for k in table.willie}
    mods = {k[2] for k in table.links} | {k[1] for k in table.willie}
    for tx in sorted(nodes):
        for m in sorted(mods):
            if (tx, m) not in table.willie:
                raise GainTableError(f"gain table missing link {tx}->Willie modality {m}")
    pairs = {(k[0], k[1]) for k in table.links}
    for tx, rx in sorted(pairs):
        for m in sorted(mods):
            if (tx, rx, m) not in table.links:
                raise GainTableError(f"gain table missing link {tx}->{rx} modality {m}")


def save_gain_table(table: GainTable, path):
    rows = [(tx, rx, m, g) for (tx, rx, m), g in sorted(table.links.items())]
    rows += [(tx, WILLIE, m, g) for (tx, m), g in sorted(table.willie.items())]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GAIN_TABLE_HEADER)
        for tx, rx, m, g in rows:
            writer.writerow((tx, rx, m, repr(float(g))))


def load_gain_table(path, scenario: Scenario | None = None) -> GainTable:
    """Read a ``tx,rx,modality,gain_linear`` table; ``rx = -1`` rows are Willie links.

    Coverage is checked against ``scenario`` when given, otherwise for internal
    consistency (all modalities per pair, a Willie row per node and modality).
    """
    links, wl = {}, {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != GAIN_TABLE_HEADER:
            raise GainTableError(f"{path}: header must be {','.join(GAIN_TABLE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise GainTableError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            try:
                tx, rx, m = (int(c) for c in row[:3])
                g = float(row[3])
            except ValueError:
                raise GainTableError(f"{path}:{lineno}: malformed row {row!r}") from None
            if not (math.isfinite(g) and g > 0):
                raise GainTableError(f"{path}:{lineno}: gain must be finite and > 0, got {row[3]}")
            if rx == WILLIE:
                key, target = (tx, m), wl
            else:
                if rx == tx:
                    raise GainTableError(f"{path}:{lineno}: self link {tx}->{rx}")
                key, target = (tx, rx, m), links
            if key in target:
                raise GainTableError(f"{path}:{lineno}: duplicate row for {key}")
            target[key] = g
    table = GainTable(links=links, willie=wl)
    if scenario is not None:
        check_coverage(table, scenario)
    else:
        _check_self_coverage(table)
    return table


# -- scenario files -----------------------------------------------------------

_SCALAR_KEYS = (
    "source_id",
    "destination_id",
    "willie_position",
    "transmit_power",
    "noise_psd",
    "block_length",
    "target_throughput",
    "neighbor_radius",
    "rng_seed",
)
_KNOWN_KEYS = set(_SCALAR_KEYS) | {"nodes", "modalities", "obstacles", "learning"}
_MODALITY_KEYS = {f.name for f in dataclasses.fields(Modality)}


def scenario_from_mapping(data) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario file must contain a mapping at top level")
    unknown = set(data) - _KNOWN_KEYS
    if unknown:
        raise ScenarioError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
    missing = [k for k in (*_SCALAR_KEYS, "nodes", "modalities") if k not in data]
    if missing:
        raise ScenarioError(f"missing scenario keys: {', '.join(missing)}")
    try:
        nodes = [NodeDef(id=int(n["id"]), position=n["position"]) for n in data["nodes"]]
        modalities = []
        for m in data["modalities"]:
            extra = set(m) - _MODALITY_KEYS
            if extra or set(m) != _MODALITY_KEYS:
                raise ScenarioError(f"modality entry keys must be exactly {sorted(_MODALITY_KEYS)}")
            modalities.append(Modality(**{k: (int(v) if k == "id" else float(v)) for k, v in m.items()}))
        obstacles = [Obstacle(o["min"], o["max"]) for o in (data.get("obstacles") or [])]
        return Scenario(
            nodes=nodes,
            modalities=modalities,
            obstacles=obstacles,
            source_id=int(data["source_id"]),
            destination_id=int(data["destination_id"]),
            willie_position=data["willie_position"],
            transmit_power=float(data["transmit_power"]),
            noise_psd=float(data["noise_psd"]),
            block_length=int(data["block_length"]),
            target_throughput=float(data["target_throughput"]),
            neighbor_radius=float(data["neighbor_radius"]),
            rng_seed=int(data["rng_seed"]),
        )
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"malformed scenario entry: {exc}") from None


def scenario_to_mapping(scenario: Scenario):
    return {
        "source_id": scenario.source_id,
        "destination_id": scenario.destination_id,
        "willie_position": list(scenario.willie_position),
        "transmit_power": scenario.transmit_power,
        "noise_psd": scenario.noise_psd,
        "block_length": scenario.block_length,
        "target_throughput": scenario.target_throughput,
        "neighbor_radius": scenario.neighbor_radius,
        "rng_seed": scenario.rng_seed,
        "modalities": [dataclasses.asdict(m) for m in scenario.modalities],
        "nodes": [{"id": n.id, "position": list(n.position)} for n in scenario.nodes],
        "obstacles": [{"min": list(o.min_corner), "max": list(o.max_corner)} for o in scenario.obstacles],
    }


def read_scenario_file(path):
    """Parse the YAML document; returns the raw mapping (scenario plus optional ``learning``)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: invalid YAML: {exc}") from None


def load_scenario(path) -> Scenario:
    return scenario_from_mapping(read_scenario_file(path))


def dump_scenario(scenario: Scenario, path, learning=None):
    data = scenario_to_mapping(scenario)
    if learning is not None:
        data["learning"] = dict(learning)
    Path(path).write_text(yaml.safe_dump(data, sort_keys=False))
