"""Experiment runner: single runs, parameter sweeps and CSV output."""

import csv
import dataclasses
import functools
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel_model import build_gain_table, read_scenario_file, scenario_from_mapping
from .covert_metrics import Route, route_dep, route_throughput
from .errors import ExtractionError, InfeasibleError, ScenarioError
from .oracle_routing import (
    best_direction_to_destination,
    brute_force_optimal,
    closest_to_destination,
    dijkstra_optimal,
)
from .q_routing import LearningConfig, RoutingContext, export_q_tables, extract_route, train
from .template import TEMPLATE_LEARNING, scenario_template_text

log = logging.getLogger(__name__)

METHODS = ("qcovert", "centralized", "brute", "closest", "bestdir")
AXES = ("willie_x", "u_target", "episodes")
CSV_HEADER = (
    "method",
    "seed",
    "willie_x",
    "willie_y",
    "u_target_bps",
    "episodes",
    "e2e_dep",
    "e2e_throughput_bps",
    "hop_count",
    "route",
    "wall_time_ms",
    "status",
)
OK = "ok"
INFEASIBLE = "infeasible"
BASELINE_FAILURE = "baseline-failure"
EXTRACTION_FAILURE = "extraction-failure"


def fmt(x):
    """12 significant digits; empty for missing values."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{x:.12g}"


@dataclass(frozen=True)
class ExperimentRecord:
    method: str
    seed: int
    willie_x: float
    willie_y: float
    u_target: float
    episodes: int
    end_to_end_dep: float | None
    end_to_end_throughput: float | None
    hop_count: int | None
    route: str
    wall_time_ms: float | None
    status: str

    def to_row(self):
        return [
            self.method,
            str(self.seed),
            fmt(self.willie_x),
            fmt(self.willie_y),
            fmt(self.u_target),
            str(self.episodes),
            fmt(self.end_to_end_dep),
            fmt(self.end_to_end_throughput),
            "" if self.hop_count is None else str(self.hop_count),
            self.route,
            fmt(self.wall_time_ms),
            self.status,
        ]


def write_csv(records, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        writer.writerow(r.to_row())


def records_to_csv(records):
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


def read_csv_records(text):
    """Parse emitted CSV back into dicts (numbers as float/int, blanks as None)."""
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        out = dict(row)
        for k in ("willie_x", "willie_y", "u_target_bps", "e2e_dep", "e2e_throughput_bps", "wall_time_ms"):
            out[k] = float(row[k]) if row[k] else None
        for k in ("seed", "episodes", "hop_count"):
            out[k] = int(row[k]) if row[k] else None
        rows.append(out)
    return rows


@dataclass(frozen=True)
class Overrides:
    seed: int = 0
    episodes: int | None = None
    alpha: float | None = None
    gamma: float | None = None
    epsilon: float | None = None
    u_target: float | None = None
    willie_x: float | None = None
    willie_y: float | None = None


def learning_from_mapping(data):
    if data is None:
        return LearningConfig()
    if not isinstance(data, dict):
        raise ScenarioError("learning section must be a mapping")
    known = {f.name for f in dataclasses.fields(LearningConfig)}
    unknown = set(data) - known
    if unknown:
        raise ScenarioError(f"unknown learning keys: {', '.join(sorted(unknown))}")
    try:
        return LearningConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid learning section: {exc}") from None


def load_experiment(path):
    """Scenario and learning configuration from one scenario file."""
    data = read_scenario_file(path)
    scenario = scenario_from_mapping(data)
    return scenario, learning_from_mapping(data.get("learning"))


def apply_overrides(scenario, learning, ov: Overrides):
    wx, wy, wz = scenario.willie_position
    changes = {}
    if ov.willie_x is not None or ov.willie_y is not None:
        changes["willie_position"] = (
            wx if ov.willie_x is None else float(ov.willie_x),
            wy if ov.willie_y is None else float(ov.willie_y),
            wz,
        )
    if ov.u_target is not None:
        changes["target_throughput"] = float(ov.u_target)
    if changes:
        scenario = scenario.replace(**changes)
    lchanges = {}
    for src, dst in (("episodes", "episodes"), ("alpha", "learning_rate"), ("gamma", "discount"), ("epsilon", "epsilon")):
        v = getattr(ov, src)
        if v is not None:
            lchanges[dst] = v
    if lchanges:
        learning = dataclasses.replace(learning, **lchanges)
    return scenario, learning


@functools.lru_cache(maxsize=64)
def cached_gain_table(scenario):
    return build_gain_table(scenario)


def run_method(method, scenario, learning, seed, gains=None, timing=False, q_out=None):
    """Run one method on one configuration and produce its record.

    ``q_out`` (qcovert only) receives the trained Q-tables as CSV.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    gains = gains if gains is not None else cached_gain_table(scenario)
    t0 = time.perf_counter()
    route, status = None, OK
    try:
        if method == "qcovert":
            ctx = RoutingContext(scenario, gains)
            result = train(scenario, gains, learning, np.random.default_rng(seed), ctx, track_routes=False)
            if q_out is not None:
                export_q_tables(result.q_tables, q_out)
            route = extract_route(result.q_tables, scenario, gains, ctx)
        elif method in ("centralized", "brute"):
            fn = dijkstra_optimal if method == "centralized" else brute_force_optimal
            route = fn(gains, scenario).route
        else:
            fn = closest_to_destination if method == "closest" else best_direction_to_destination
            res = fn(gains, scenario)
            if res.ok:
                route = res.route
            else:
                status = BASELINE_FAILURE
                log.info("%s: %s", method, res.diagnostic)
    except InfeasibleError as exc:
        status = INFEASIBLE
        log.info("%s: %s", method, exc)
    except ExtractionError as exc:
        status = EXTRACTION_FAILURE
        log.info("%s: %s", method, exc)
    elapsed = (time.perf_counter() - t0) * 1e3 if timing else None
    wx, wy, _ = scenario.willie_position
    if route is not None:
        dep = route_dep(route, gains, scenario)
        thr = route_throughput(route, gains, scenario)
        hop_count, text = len(route), str(route)
    else:
        dep = thr = hop_count = None
        text = ""
    return ExperimentRecord(
        method, int(seed), wx, wy, scenario.target_throughput, learning.episodes, dep, thr, hop_count, text, elapsed, status
    )


def run_single(scenario_path, method, overrides=None, timing=False):
    scenario, learning = load_experiment(scenario_path)
    ov = overrides or Overrides()
    scenario, learning = apply_overrides(scenario, learning, ov)
    return run_method(method, scenario, learning, ov.seed, timing=timing)


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    seeds: tuple
    methods: tuple

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {', '.join(AXES)}")
        for name in ("values", "seeds", "methods"):
            if not getattr(self, name):
                raise ValueError(f"sweep {name} must be nonempty")
        if not all(math.isfinite(float(v)) for v in self.values):
            raise ValueError("sweep values must be finite")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods: {', '.join(bad)}")


def cell_seed(base_seed, axis_index, replicate_index):
    """Independent, replayable seed for one sweep cell.

    ``SeedSequence([base_seed, axis_index, replicate_index])`` hashed to 63 bits.
    """
    state = np.random.SeedSequence([int(base_seed), int(axis_index), int(replicate_index)]).generate_state(2, np.uint32)
    return int((int(state[0]) << 32 | int(state[1])) & (2**63 - 1))


def _overrides_for(axis, value, seed):
    if axis == "willie_x":
        return Overrides(seed=seed, willie_x=float(value))
    if axis == "u_target":
        return Overrides(seed=seed, u_target=float(value))
    return Overrides(seed=seed, episodes=int(value))


def _run_cell(args):
    scenario, learning, method, ov, timing = args
    sc, lc = apply_overrides(scenario, learning, ov)
    return run_method(method, sc, lc, ov.seed, timing=timing)


def _axis_value(record, axis):
    return {"willie_x": record.willie_x, "u_target": record.u_target, "episodes": record.episodes}[axis]


def run_sweep(scenario_path, sweep: SweepSpec, timing=False, jobs=1, scenario=None, learning=None):
    """Cartesian product of axis values x seeds x methods, one record per cell.

    Records come back sorted by (method, axis value, seed) whatever order cells
    finish in.
    """
    if scenario is None:
        scenario, learning = load_experiment(scenario_path)
    learning = learning or LearningConfig()
    cells = []
    for ai, value in enumerate(sweep.values):
        for ri, base in enumerate(sweep.seeds):
            seed = cell_seed(base, ai, ri)
            for method in sweep.methods:
                cells.append((scenario, learning, method, _overrides_for(sweep.axis, value, seed), timing))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_cell, cells, chunksize=4))
    else:
        records = [_run_cell(c) for c in cells]
    records.sort(key=lambda r: (r.method, _axis_value(r, sweep.axis), r.seed))
    return records


def convergence_study(scenario, gains, learning, seeds):
    """Per-episode extracted-route DEP for each seed: array ``(len(seeds), episodes)``."""
    ctx = RoutingContext(scenario, gains)
    curves = []
    for seed in seeds:
        result = train(scenario, gains, learning, np.random.default_rng(seed), ctx)
        curves.append(result.episode_route_dep)
    return np.array(curves)


def verify_record(record, scenario, gains, tol=1e-12):
    """Recompute a record's DEP and throughput from its route text; returns the Route."""
    route = Route.parse(record.route if isinstance(record, ExperimentRecord) else record["route"])
    route.check_endpoints(scenario)
    dep = route_dep(route, gains, scenario)
    stored = record.end_to_end_dep if isinstance(record, ExperimentRecord) else record["e2e_dep"]
    if abs(dep - stored) > tol:
        raise AssertionError(f"dep {stored} does not match recomputed {dep} for {route}")
    return route


def emit_scenario_template(path):
    Path(path).write_text(scenario_template_text())
    return Path(path)


__all__ = [
    "AXES",
    "CSV_HEADER",
    "METHODS",
    "ExperimentRecord",
    "Overrides",
    "SweepSpec",
    "TEMPLATE_LEARNING",
    "apply_overrides",
    "cell_seed",
    "convergence_study",
    "emit_scenario_template",
    "load_experiment",
    "read_csv_records",
    "records_to_csv",
    "run_method",
    "run_single",
    "run_sweep",
    "verify_record",
    "write_csv",
]
