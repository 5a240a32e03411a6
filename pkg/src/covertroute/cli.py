"""``covertroute`` command line.

Exit codes: 0 success, 1 usage or input error, 2 infeasible configuration.
Log verbosity comes from ``COVERTROUTE_LOG`` (DEBUG, INFO, WARNING, ...).
"""

import logging
import os
import sys

import click

from . import _accel
from .channel_model import build_gain_table, load_gain_table, save_gain_table
from .errors import CovertRouteError, GainTableError, InfeasibleError, ScenarioError
from .harness import (
    AXES,
    INFEASIBLE,
    METHODS,
    Overrides,
    SweepSpec,
    apply_overrides,
    emit_scenario_template,
    load_experiment,
    run_method,
    run_sweep,
    write_csv,
)
from .oracle_routing import dijkstra_optimal
from .topology import action_space, feasibility_graph

LOG_ENV = "COVERTROUTE_LOG"
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2


def _split(text, cast):
    try:
        return tuple(cast(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise click.BadParameter(f"cannot parse {text!r}") from None


def _open_out(path):
    return click.open_file(path or "-", "w", lazy=False)


_learning_options = [
    click.option("--episodes", type=click.IntRange(min=0), default=None, help="Training episodes."),
    click.option("--alpha", type=click.FloatRange(0, 1), default=None, help="Learning rate."),
    click.option("--gamma", type=click.FloatRange(0, 1), default=None, help="Discount factor."),
    click.option("--epsilon", type=click.FloatRange(0, 1), default=None, help="Exploration probability."),
    click.option("--u-target", "u_target", type=float, default=None, help="Target throughput, bit/s."),
    click.option("--willie-x", "willie_x", type=float, default=None, help="Willie x coordinate, m."),
    click.option("--willie-y", "willie_y", type=float, default=None, help="Willie y coordinate, m."),
]


def learning_options(fn):
    for opt in reversed(_learning_options):
        fn = opt(fn)
    return fn


@click.group()
def cli():
    """Covert routing experiments over multi-modality wireless networks."""
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger(__name__).debug("kernel backend: %s", _accel.backend())


@cli.command()
@click.option("--scenario", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(METHODS), default="qcovert", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Learning RNG seed.")
@learning_options
@click.option("--gains", "gains_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Use this gain-table CSV instead of the synthetic channel model.")
@click.option("--graph-out", type=click.Path(dir_okay=False), default=None, help="Dump the feasibility graph edge list.")
@click.option("--q-out", type=click.Path(dir_okay=False), default=None, help="Dump trained Q-tables (qcovert only).")
@click.option("--timing/--no-timing", default=False, help="Fill wall_time_ms (breaks byte-identical reruns).")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV output (default stdout).")
def run(scenario, method, seed, episodes, alpha, gamma, epsilon, u_target, willie_x, willie_y, gains_path, graph_out, q_out, timing, out):
    """Run one method once and emit a single CSV record."""
    sc, lc = load_experiment(scenario)
    ov = Overrides(seed, episodes, alpha, gamma, epsilon, u_target, willie_x, willie_y)
    sc, lc = apply_overrides(sc, lc, ov)
    gains = load_gain_table(gains_path, sc) if gains_path else build_gain_table(sc)
    if graph_out:
        feasibility_graph(gains, sc).write_edge_list(graph_out)
    if q_out and method != "qcovert":
        raise click.UsageError("--q-out needs --method qcovert")
    record = run_method(method, sc, lc, seed, gains=gains, timing=timing, q_out=q_out)
    with _open_out(out) as fh:
        write_csv([record], fh)
    return EXIT_INFEASIBLE if record.status == INFEASIBLE else 0


@cli.command()
@click.option("--scenario", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--axis", type=click.Choice(AXES), required=True)
@click.option("--values", required=True, help="Comma-separated axis values.")
@click.option("--seeds", default="0", show_default=True, help="Comma-separated replicate seeds.")
@click.option("--methods", default="qcovert,centralized,closest,bestdir", show_default=True)
@learning_options
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--timing/--no-timing", default=False, help="Fill wall_time_ms (breaks byte-identical reruns).")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV output (default stdout).")
def sweep(scenario, axis, values, seeds, methods, episodes, alpha, gamma, epsilon, u_target, willie_x, willie_y, jobs, timing, out):
    """Sweep one axis over values x seeds x methods."""
    if willie_x is not None and axis == "willie_x":
        raise click.UsageError("--willie-x conflicts with --axis willie_x")
    cast = int if axis == "episodes" else float
    try:
        spec = SweepSpec(axis, _split(values, cast), _split(seeds, int), _split(methods, str))
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    sc, lc = load_experiment(scenario)
    sc, lc = apply_overrides(sc, lc, Overrides(0, episodes, alpha, gamma, epsilon, u_target, willie_x, willie_y))
    records = run_sweep(scenario, spec, timing=timing, jobs=jobs, scenario=sc, learning=lc)
    with _open_out(out) as fh:
        write_csv(records, fh)
    return 0


@cli.command()
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def template(out):
    """Write the bundled 36-node scenario with the default parameter set."""
    path = emit_scenario_template(out)
    click.echo(f"wrote {path}", err=True)
    return 0


@cli.command()
@click.option("--scenario", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--gains-out", type=click.Path(dir_okay=False), default=None, help="Also write the synthesized gain table.")
def validate(scenario, gains_out):
    """Lint a scenario: schema, geometry, and source-to-destination feasibility."""
    sc, lc = load_experiment(scenario)
    gains = build_gain_table(sc)
    if gains_out:
        save_gain_table(gains, gains_out)
    graph = feasibility_graph(gains, sc)
    n_src = len(action_space(sc.source_id, gains, sc))
    click.echo(f"nodes={len(sc.nodes)} modalities={len(sc.modalities)} obstacles={len(sc.obstacles)}")
    click.echo(f"links={len(gains.links)} feasible_edges={len(graph)} source_actions={n_src}")
    click.echo(f"learning: episodes={lc.episodes} alpha={lc.learning_rate} gamma={lc.discount} epsilon={lc.epsilon}")
    try:
        best = dijkstra_optimal(gains, sc, graph)
    except InfeasibleError as exc:
        click.echo(f"infeasible: {exc}", err=True)
        return EXIT_INFEASIBLE
    click.echo(f"centralized dep={best.end_to_end_dep:.12g} hops={len(best.route)}")
    return 0


def main(argv=None):
    try:
        rv = cli.main(args=argv, prog_name="covertroute", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except InfeasibleError as exc:
        click.echo(f"infeasible: {exc}", err=True)
        return EXIT_INFEASIBLE
    except (ScenarioError, GainTableError, CovertRouteError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    return rv if isinstance(rv, int) else 0


def run_cli():
    sys.exit(main())
