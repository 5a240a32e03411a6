import math

import numpy as np
import pytest

from covertroute.channel_model import GainTable, Modality, NodeDef, Obstacle, Scenario
from covertroute.template import scenario_template_text

UNIT_MOD = Modality(1, 1e9, 1.0, 2.0, 0.0, 0.0, 0.0)


def make_scenario(positions, *, modalities=(UNIT_MOD,), willie=(0.0, 0.0, 0.0), radius=1e6, target=0.0,
                  seed=0, obstacles=(), power=1.0, n0=1.0, L=100, source=None, dest=None):
    """Scenario over ``positions`` (ids 1..n). Defaults make SNR = gain, X = 1/willie_gain."""
    nodes = [NodeDef(i + 1, p) for i, p in enumerate(positions)]
    return Scenario(
        nodes=nodes,
        modalities=tuple(modalities),
        source_id=source or 1,
        destination_id=dest or len(nodes),
        willie_position=willie,
        transmit_power=power,
        noise_psd=n0,
        block_length=L,
        target_throughput=target,
        neighbor_radius=radius,
        rng_seed=seed,
        obstacles=tuple(obstacles),
    )


def full_table(scenario, link_gain, willie_gain):
    """Hand table: ``link_gain(tx, rx, m)`` for every ordered pair, ``willie_gain(tx, m)``."""
    ids, mids = scenario.node_ids, scenario.modality_ids
    links = {(a, b, m): link_gain(a, b, m) for a in ids for b in ids if a != b for m in mids}
    willie = {(a, m): willie_gain(a, m) for a in ids for m in mids}
    return GainTable(links=links, willie=willie)


def random_small_scenario(seed, n_min=5, n_max=9):
    """Random geometric instance with 3 modalities, a few boxes and a mid-quantile target."""
    rng = np.random.default_rng([7, seed])
    n = int(rng.integers(n_min, n_max + 1))
    pos = [(float(x), float(y), 0.0) for x, y in rng.uniform(0.0, 12.0, size=(n, 2))]
    boxes = []
    for _ in range(int(rng.integers(0, 3))):
        lo = rng.uniform(0.0, 10.0, size=2)
        hi = lo + rng.uniform(0.5, 3.0, size=2)
        boxes.append(Obstacle((lo[0], lo[1], -1.0), (hi[0], hi[1], 1.0)))
    mods = (
        Modality(1, 4e8, 1.0, 1.0, 0.0, 3.0, 2.0),
        Modality(2, 9e8, 1.0, 1.2, 0.0, 5.0, 2.0),
        Modality(3, 2.4e9, 1.0, 1.5, 0.0, 8.0, 2.0),
    )
    willie = (float(rng.uniform(0, 12)), float(rng.uniform(0, 12)), 0.0)
    sc = make_scenario(pos, modalities=mods, willie=willie, radius=7.0, seed=int(rng.integers(2**31)),
                       obstacles=boxes, L=int(rng.choice([10, 100])))
    from covertroute.channel_model import build_gain_table
    from covertroute.covert_metrics import Hop, hop_throughput

    g = build_gain_table(sc)
    thr = sorted(hop_throughput(Hop(*k), g, sc) for k in g.links)
    target = thr[int(rng.uniform(0.05, 0.35) * len(thr))] if thr else 0.0
    return sc.replace(target_throughput=float(target))


@pytest.fixture
def template_path(tmp_path):
    p = tmp_path / "scene.yaml"
    p.write_text(scenario_template_text())
    return p


# -- acceptance summary lines ---------------------------------------------------

_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    def record(number, passed, detail):
        _ACCEPTANCE[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")


def assert_close(a, b, tol):
    assert math.isclose(a, b, rel_tol=0.0, abs_tol=tol), (a, b)
