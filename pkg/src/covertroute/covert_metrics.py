"""Detection error probability (DEP) and throughput of hops and routes.

Willie runs a radiometer on each hop: ``ybar = (1/L) sum |y[l]|^2`` compared with
a threshold. With circular complex Gaussian samples of variance ``sigma2``,
``L * ybar / sigma2`` is Gamma(L, 1), so

    P_FA = Q(L, L*delta/sigma0^2),    P_MD = P(L, L*delta/sigma1^2)

where P and Q are the regularized lower/upper incomplete gamma functions.
Equating the two likelihoods gives the minimizing threshold

    delta* = sigma0^2 sigma1^2 / (sigma1^2 - sigma0^2) * ln(sigma1^2 / sigma0^2)

and with ``X = sigma0^2 / (sigma1^2 - sigma0^2)`` the gamma arguments reduce to
``L (1+X) ln(1+1/X)`` and ``L X ln(1+1/X)``.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CovertRouteError
from .kernels import count_energy_above, gamma_pq

LOG_SPACE_BELOW = 1e-15
TINY = np.finfo(float).tiny


class Hop(NamedTuple):
    tx_id: int
    rx_id: int
    modality_id: int

    def __str__(self):
        return f"{self.tx_id}-{self.rx_id}:{self.modality_id}"


class RouteError(CovertRouteError, ValueError):
    pass


@dataclass(frozen=True)
class Route:
    hops: tuple[Hop, ...]

    def __post_init__(self):
        hops = tuple(Hop(*h) for h in self.hops)
        object.__setattr__(self, "hops", hops)
        if not hops:
            raise RouteError("route must have at least one hop")
        for h in hops:
            if h.tx_id == h.rx_id:
                raise RouteError(f"hop {h} loops on itself")
        for a, b in zip(hops, hops[1:]):
            if a.rx_id != b.tx_id:
                raise RouteError(f"hops {a} and {b} do not chain")
        nodes = [h.tx_id for h in hops] + [hops[-1].rx_id]
        if len(set(nodes)) != len(nodes):
            raise RouteError(f"route {self} revisits a node")

    @property
    def source(self):
        return self.hops[0].tx_id

    @property
    def destination(self):
        return self.hops[-1].rx_id

    @property
    def nodes(self):
        return tuple(h.tx_id for h in self.hops) + (self.hops[-1].rx_id,)

    def __len__(self):
        return len(self.hops)

    def __iter__(self):
        return iter(self.hops)

    def __str__(self):
        return "|".join(str(h) for h in self.hops)

    @classmethod
    def parse(cls, text):
        """Inverse of ``str(route)``: ``tx-rx:m`` segments joined by ``|``."""
        hops = []
        for seg in text.split("|"):
            try:
                pair, m = seg.split(":")
                tx, rx = pair.split("-")
                hops.append(Hop(int(tx), int(rx), int(m)))
            except ValueError:
                raise RouteError(f"malformed hop {seg!r}") from None
        return cls(tuple(hops))

    def check_endpoints(self, scenario):
        if self.source != scenario.source_id or self.destination != scenario.destination_id:
            raise RouteError(
                f"route {self} does not run {scenario.source_id} -> {scenario.destination_id}"
            )


@dataclass(frozen=True)
class DetectionParams:
    noise_variance: float  # sigma0^2 = bandwidth * N0
    signal_plus_noise_variance: float  # sigma1^2 = P |g_W|^2 + sigma0^2
    block_length: int

    def __post_init__(self):
        s0, s1 = self.noise_variance, self.signal_plus_noise_variance
        if not (math.isfinite(s0) and math.isfinite(s1) and s0 > 0):
            raise ValueError("noise variance must be finite and > 0")
        if not s1 > s0:
            raise ValueError("Willie receives no signal power (sigma1^2 <= sigma0^2)")
        if self.block_length < 1:
            raise ValueError("block_length must be >= 1")

    @property
    def x_ratio(self):
        return self.noise_variance / (self.signal_plus_noise_variance - self.noise_variance)

    @classmethod
    def from_link(cls, transmit_power, willie_gain, bandwidth, noise_psd, block_length):
        s0 = bandwidth * noise_psd
        return cls(s0, transmit_power * willie_gain + s0, int(block_length))

    @classmethod
    def from_x(cls, x_ratio, block_length, noise_variance=1.0):
        return cls(noise_variance, noise_variance * (1.0 + 1.0 / x_ratio), int(block_length))


def regularized_lower_gamma(s, x):
    """``gamma(s, x) / Gamma(s)``; scalar in, float out, arrays in, array out."""
    p, _ = gamma_pq(s, x)
    return float(p) if np.ndim(p) == 0 else p


def optimal_threshold(params: DetectionParams):
    s0, s1 = params.noise_variance, params.signal_plus_noise_variance
    return s0 * s1 / (s1 - s0) * math.log(s1 / s0)


def md_fa_probabilities(params: DetectionParams, threshold):
    """``(P_MD, P_FA)`` of the radiometer test at ``threshold`` (watts)."""
    if not threshold > 0:
        raise ValueError("threshold must be > 0")
    L = params.block_length
    p_md, _ = gamma_pq(L, L * threshold / params.signal_plus_noise_variance)
    _, p_fa = gamma_pq(L, L * threshold / params.noise_variance)
    return float(p_md), float(p_fa)


def dep_from_x(x_ratio, block_length):
    """Vectorized optimal-threshold DEP as a function of ``X`` and ``L``.

    Evaluated as ``Q(L, a_hi) + P(L, a_lo)`` (false alarm plus missed detection),
    which equals ``1 - [P(L, a_hi) - P(L, a_lo)]`` without cancellation near 0.
    """
    x = np.asarray(x_ratio, dtype=float)
    L = np.asarray(block_length, dtype=float)
    log_term = np.log1p(1.0 / x)
    _, q_hi = gamma_pq(L, L * (1.0 + x) * log_term)
    p_lo, _ = gamma_pq(L, L * x * log_term)
    dep = np.clip(q_hi + p_lo, 0.0, 1.0)
    return float(dep) if dep.ndim == 0 else dep


def hop_dep(params: DetectionParams):
    return dep_from_x(params.x_ratio, params.block_length)


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    stderr: float
    p_md: float
    p_fa: float
    trials: int


def monte_carlo_dep(params: DetectionParams, threshold, trials=1_000_000, seed=0, chunk=20_000):
    """Estimate ``P_MD + P_FA`` by simulating Willie's radiometer.

    Half the slots are silent (noise only, CN(0, sigma0^2)) and half carry a
    transmission (CN(0, sigma1^2): unit-power Gaussian symbols through the Willie
    channel plus noise). Each slot draws L complex samples and applies the test.
    """
    if trials < 1000:
        raise ValueError("monte_carlo_dep needs at least 1000 trials")
    rng = np.random.default_rng(seed)
    L = params.block_length
    n1 = trials // 2
    n0 = trials - n1

    def exceed(n, variance):
        # mean |y|^2 > delta  <=>  sum(a^2 + b^2) > 2 L delta / variance for y = sqrt(var/2)(a + ib)
        level = 2.0 * L * threshold / variance
        hits = 0
        left = n
        while left:
            k = min(chunk, left)
            re = rng.standard_normal((k, L))
            im = rng.standard_normal((k, L))
            hits += count_energy_above(re, im, level)
            left -= k
        return hits

    false_alarms = exceed(n0, params.noise_variance)
    detections = exceed(n1, params.signal_plus_noise_variance)
    p_fa = false_alarms / n0
    p_md = 1.0 - detections / n1
    se = math.sqrt(p_fa * (1 - p_fa) / n0 + p_md * (1 - p_md) / n1)
    return MonteCarloEstimate(p_md + p_fa, se, p_md, p_fa, trials)


# -- link-level helpers over a gain table ------------------------------------


def link_detection_params(tx, modality_id, gains, scenario):
    m = scenario.modality(modality_id)
    return DetectionParams.from_link(
        scenario.transmit_power,
        gains.willie_gain(tx, modality_id),
        m.bandwidth,
        scenario.noise_psd,
        scenario.block_length,
    )


def link_dep(hop: Hop, gains, scenario):
    return hop_dep(link_detection_params(hop.tx_id, hop.modality_id, gains, scenario))


def hop_throughput(hop: Hop, gains, scenario):
    """Shannon rate ``bandwidth * log2(1 + P |g|^2 / (bandwidth N0))`` in bit/s."""
    bw = scenario.modality(hop.modality_id).bandwidth
    g = gains.link_gain(hop.tx_id, hop.rx_id, hop.modality_id)
    return bw * math.log2(1.0 + scenario.transmit_power * g / (bw * scenario.noise_psd))


def combine_deps(deps: Sequence[float]):
    """Product of per-hop DEPs, formed in log space if any factor is below 1e-15."""
    deps = [float(d) for d in deps]
    if min(deps) < LOG_SPACE_BELOW:
        return math.exp(sum(math.log(max(d, TINY)) for d in deps))
    out = 1.0
    for d in deps:
        out *= d
    return out


def route_dep(route: Route, gains, scenario):
    for h in route.hops:
        gains.link_gain(*h)
    return combine_deps([link_dep(h, gains, scenario) for h in route.hops])


def route_throughput(route: Route, gains, scenario):
    return min(hop_throughput(h, gains, scenario) for h in route.hops)
