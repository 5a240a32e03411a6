"""The bundled 36-node scene written by ``covertroute template``.

Node coordinates and building footprints are a representative stand-in for a
250 x 250 x 9.5 m urban block: a jittered 6 x 6 grid of nodes 3 m above ground
with concrete cuboids placed in the gaps between grid lines.
"""

GRID = 6
SPACING = 45.0  # m
ORIGIN = 12.5  # m
NODE_HEIGHT = 3.0  # m
BUILDING_HEIGHT = 9.5  # m

# (x_min, y_min, x_max, y_max); all rise from 0 to BUILDING_HEIGHT
BUILDINGS = (
    (25.0, 40.0, 45.0, 130.0),
    (70.0, 110.0, 90.0, 200.0),
    (115.0, 20.0, 135.0, 80.0),
    (160.0, 140.0, 180.0, 230.0),
    (200.0, 70.0, 230.0, 90.0),
    (100.0, 160.0, 150.0, 180.0),
)

# (id, label, center_frequency Hz, pathloss_exponent, reference_loss_db, obstruction_loss_db, shadowing_sigma_db)
MODALITIES = (
    (1, "400 MHz", 400e6, 1.6, 0.0, 6.0, 2.0),
    (2, "900 MHz", 900e6, 1.95, 0.0, 10.0, 2.0),
    (3, "2.4 GHz", 2.4e9, 2.05, 0.0, 16.0, 2.0),
)

BANDWIDTH = 4e6  # Hz, every modality
TRANSMIT_POWER_DBM = 10.0
NOISE_PSD_DBM_PER_HZ = -80.0
BLOCK_LENGTH = 100
TARGET_THROUGHPUT = 0.5e6  # bit/s
NEIGHBOR_RADIUS = 80.0  # m
WILLIE_POSITION = (145.0, 115.0, NODE_HEIGHT)
RNG_SEED = 20240607

TEMPLATE_LEARNING = {
    "episodes": 300,
    "learning_rate": 0.3,
    "discount": 0.9,
    "epsilon": 0.1,
    "dead_end_penalty": 50.0,
}


def dbm_to_watts(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


def node_positions():
    """Row-major ids 1..36 from the (low x, low y) corner with a fixed jitter pattern."""
    out = []
    for r in range(GRID):
        for c in range(GRID):
            nid = r * GRID + c + 1
            dx = ((7 * nid) % 9 - 4) * 1.5
            dy = ((5 * nid) % 7 - 3) * 1.5
            out.append((nid, (ORIGIN + SPACING * c + dx, ORIGIN + SPACING * r + dy, NODE_HEIGHT)))
    return out


def _num(x):
    return repr(float(x))


def scenario_template_text():
    lines = [
        "# covertroute scenario",
        "#",
        "# Representative stand-in scene: 36 legitimate nodes on a jittered grid in a",
        "# 250 x 250 x 9.5 m block with concrete buildings. Coordinates and buildings",
        "# are illustrative, not a measured layout. Units: meters, watts, hertz, bit/s.",
        "# Every key is required except 'obstacles' (default none) and 'learning'.",
        "",
        "source_id: 1",
        "destination_id: 36",
        f"willie_position: [{', '.join(_num(v) for v in WILLIE_POSITION)}]  # m",
        f"transmit_power: {_num(dbm_to_watts(TRANSMIT_POWER_DBM))}  # W ({TRANSMIT_POWER_DBM:g} dBm)",
        f"noise_psd: {_num(dbm_to_watts(NOISE_PSD_DBM_PER_HZ))}  # W/Hz ({NOISE_PSD_DBM_PER_HZ:g} dBm/Hz)",
        f"block_length: {BLOCK_LENGTH}  # channel uses per slot",
        f"target_throughput: {_num(TARGET_THROUGHPUT)}  # bit/s",
        f"neighbor_radius: {_num(NEIGHBOR_RADIUS)}  # m",
        f"rng_seed: {RNG_SEED}  # shadowing stream",
        "",
        "# path loss (dB) = reference_loss_db + 10 * pathloss_exponent * log10(d / 1 m)",
        "#                 + obstruction_loss_db * (buildings crossed) + N(0, shadowing_sigma_db^2)",
        "modalities:",
    ]
    for mid, label, f, n, ref, obs, sigma in MODALITIES:
        lines += [
            f"  - id: {mid}  # {label}",
            f"    center_frequency: {_num(f)}",
            f"    bandwidth: {_num(BANDWIDTH)}",
            f"    pathloss_exponent: {_num(n)}",
            f"    reference_loss_db: {_num(ref)}",
            f"    obstruction_loss_db: {_num(obs)}",
            f"    shadowing_sigma_db: {_num(sigma)}",
        ]
    lines.append("")
    lines.append("nodes:")
    for nid, (x, y, z) in node_positions():
        lines.append(f"  - {{id: {nid}, position: [{_num(x)}, {_num(y)}, {_num(z)}]}}")
    lines.append("")
    lines.append("obstacles:")
    for x0, y0, x1, y1 in BUILDINGS:
        lines.append(f"  - {{min: [{_num(x0)}, {_num(y0)}, 0.0], max: [{_num(x1)}, {_num(y1)}, {_num(BUILDING_HEIGHT)}]}}")
    lines.append("")
    lines.append("learning:")
    for k, v in TEMPLATE_LEARNING.items():
        lines.append(f"  {k}: {v}")
    return "\n".join(lines) + "\n"
