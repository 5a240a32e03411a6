"""Hot numeric kernels with a numba path and a pure-numpy fallback.

Every public function here dispatches on :data:`covertroute._accel.USE_NUMBA`.
The ``*_loop`` functions are the scalar-loop forms compiled by numba; the
``*_numpy`` functions are vectorized equivalents used when numba is disabled.
Both are importable so tests and ``benchmarks/bench_kernels.py`` can compare them.
"""

import math

import numpy as np

from . import _accel
from ._accel import njit

EPS = 1e-16
FPMIN = 1e-300
MAXIT = 200_000


# -- regularized incomplete gamma -------------------------------------------

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
SERIES_T = 0.3  # |t| below which log1p(t) - t is summed directly


def _log1pmx(t):
    """``log(1 + t) - t`` without cancellation near 0."""
    if abs(t) >= SERIES_T:
        return math.log1p(t) - t
    pk = t
    total = 0.0
    for k in range(2, 80):
        pk *= -t
        total += pk / k
        if abs(pk) < EPS * abs(total) * k:
            break
    return total


def _stirlerr(s):
    """``lgamma(s) - [(s - 1/2) ln s - s + ln(2 pi)/2]``."""
    if s < 15.0:
        return math.lgamma(s) - ((s - 0.5) * math.log(s) - s + HALF_LOG_2PI)
    r = 1.0 / (s * s)
    return (1.0 / 12 - r * (1.0 / 360 - r * (1.0 / 1260 - r * (1.0 / 1680 - r / 1188)))) / s


_log1pmx_jit = njit(_log1pmx)
_stirlerr_jit = njit(_stirlerr)


def _log_prefactor(s, x):
    # ln(x^s e^-x / Gamma(s)) regrouped so the O(s) terms cancel analytically
    t = (x - s) / s
    if abs(t) < SERIES_T:
        main = s * _log1pmx_jit(t)
    else:
        main = s * math.log(x / s) - (x - s)
    return main + 0.5 * math.log(s) - HALF_LOG_2PI - _stirlerr_jit(s)


_log_prefactor_jit = njit(_log_prefactor)


def _gamma_pq_loop(s, x, p_out, q_out):
    for i in range(s.shape[0]):
        si = s[i]
        xi = x[i]
        if xi <= 0.0:
            p_out[i] = 0.0
            q_out[i] = 1.0
            continue
        if math.isinf(xi):
            p_out[i] = 1.0
            q_out[i] = 0.0
            continue
        log_pref = _log_prefactor_jit(si, xi)
        if xi < si + 1.0:
            ap = si
            term = 1.0 / si
            total = term
            for _ in range(MAXIT):
                ap += 1.0
                term *= xi / ap
                total += term
                if abs(term) < abs(total) * EPS:
                    break
            p = min(total * math.exp(log_pref), 1.0)
            p_out[i] = p
            q_out[i] = 1.0 - p
        else:
            # modified Lentz on the continued fraction for Q
            b = xi + 1.0 - si
            c = 1.0 / FPMIN
            d = 1.0 / b
            h = d
            for n in range(1, MAXIT):
                an = -n * (n - si)
                b += 2.0
                d = an * d + b
                if abs(d) < FPMIN:
                    d = FPMIN
                c = b + an / c
                if abs(c) < FPMIN:
                    c = FPMIN
                d = 1.0 / d
                delta = d * c
                h *= delta
                if abs(delta - 1.0) < EPS:
                    break
            q = min(math.exp(log_pref) * h, 1.0)
            q_out[i] = q
            p_out[i] = 1.0 - q


_gamma_pq_numba = njit(_gamma_pq_loop)


def _log_prefactor_numpy(s, x):
    t = (x - s) / s
    near = np.abs(t) < SERIES_T
    tn = np.where(near, t, 0.0)
    series = np.zeros_like(t)
    pk = tn.copy()
    for k in range(2, 80):
        pk = pk * -tn
        series += pk / k
    far = ~near
    main = np.where(near, s * series, 0.0)
    main[far] = s[far] * np.log(x[far] / s[far]) - (x[far] - s[far])
    small = s < 15.0
    r = 1.0 / (s * s)
    st = (1.0 / 12 - r * (1.0 / 360 - r * (1.0 / 1260 - r * (1.0 / 1680 - r / 1188)))) / s
    if small.any():
        ss = s[small]
        lg = np.array([math.lgamma(v) for v in ss])
        st[small] = lg - ((ss - 0.5) * np.log(ss) - ss + HALF_LOG_2PI)
    return main + 0.5 * np.log(s) - HALF_LOG_2PI - st


def _gamma_pq_numpy(s, x, p_out, q_out):
    p_out[:] = 0.0
    q_out[:] = 1.0
    big = np.isinf(x)
    p_out[big] = 1.0
    q_out[big] = 0.0
    live = (x > 0.0) & ~big
    series = live & (x < s + 1.0)
    cfrac = live & ~series

    idx = np.flatnonzero(series)
    if idx.size:
        si, xi = s[idx], x[idx]
        log_pref = _log_prefactor_numpy(si, xi)
        ap = si.copy()
        term = 1.0 / si
        total = term.copy()
        active = np.arange(idx.size)
        for _ in range(MAXIT):
            ap[active] += 1.0
            term[active] *= xi[active] / ap[active]
            total[active] += term[active]
            done = np.abs(term[active]) < np.abs(total[active]) * EPS
            active = active[~done]
            if active.size == 0:
                break
        p = np.minimum(total * np.exp(log_pref), 1.0)
        p_out[idx] = p
        q_out[idx] = 1.0 - p

    idx = np.flatnonzero(cfrac)
    if idx.size:
        si, xi = s[idx], x[idx]
        log_pref = _log_prefactor_numpy(si, xi)
        b = xi + 1.0 - si
        c = np.full(idx.size, 1.0 / FPMIN)
        d = 1.0 / b
        h = d.copy()
        active = np.arange(idx.size)
        for n in range(1, MAXIT):
            sa = active
            an = -n * (n - si[sa])
            b[sa] += 2.0
            dd = an * d[sa] + b[sa]
            dd = np.where(np.abs(dd) < FPMIN, FPMIN, dd)
            cc = b[sa] + an / c[sa]
            cc = np.where(np.abs(cc) < FPMIN, FPMIN, cc)
            dd = 1.0 / dd
            delta = dd * cc
            d[sa] = dd
            c[sa] = cc
            h[sa] *= delta
            active = sa[~(np.abs(delta - 1.0) < EPS)]
            if active.size == 0:
                break
        q = np.minimum(np.exp(log_pref) * h, 1.0)
        q_out[idx] = q
        p_out[idx] = 1.0 - q


def gamma_pq(s, x, use_numba=None):
    """Return ``(P(s, x), Q(s, x))``, the regularized lower and upper incomplete gamma.

    Both are returned so callers needing a tail probability never form ``1 - P``.
    Inputs broadcast; outputs are float arrays of the broadcast shape.
    """
    s_arr, x_arr = np.broadcast_arrays(np.asarray(s, dtype=np.float64), np.asarray(x, dtype=np.float64))
    shape = s_arr.shape
    s_flat = np.ascontiguousarray(s_arr).ravel()
    x_flat = np.ascontiguousarray(x_arr).ravel()
    if not (np.all(np.isfinite(s_flat)) and np.all(np.isfinite(x_flat) | (x_flat == np.inf))):
        raise ValueError("incomplete gamma arguments must be finite")
    if np.any(s_flat <= 0.0) or np.any(x_flat < 0.0):
        raise ValueError("incomplete gamma requires s > 0 and x >= 0")
    p = np.empty_like(s_flat)
    q = np.empty_like(s_flat)
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    if use_numba:
        _gamma_pq_numba(s_flat, x_flat, p, q)
    else:
        _gamma_pq_numpy(s_flat, x_flat, p, q)
    return p.reshape(shape), q.reshape(shape)


# -- segment / box obstruction ----------------------------------------------


def _obstruction_counts_loop(p1, p2, box_lo, box_hi, out):
    for i in range(p1.shape[0]):
        count = 0
        for j in range(box_lo.shape[0]):
            t0 = 0.0
            t1 = 1.0
            hit = True
            for ax in range(3):
                a = p1[i, ax]
                d = p2[i, ax] - a
                lo = box_lo[j, ax]
                hi = box_hi[j, ax]
                if d == 0.0:
                    if a < lo or a > hi:
                        hit = False
                        break
                else:
                    ta = (lo - a) / d
                    tb = (hi - a) / d
                    if ta > tb:
                        ta, tb = tb, ta
                    if ta > t0:
                        t0 = ta
                    if tb < t1:
                        t1 = tb
                    if t0 > t1:
                        hit = False
                        break
            # open segment: the closed overlap [t0, t1] must reach into (0, 1)
            if hit and t1 > 0.0 and t0 < 1.0:
                count += 1
        out[i] = count


_obstruction_counts_numba = njit(_obstruction_counts_loop)


def _obstruction_counts_numpy(p1, p2, box_lo, box_hi, out):
    a = p1[:, None, :]
    d = (p2 - p1)[:, None, :]
    lo = box_lo[None, :, :]
    hi = box_hi[None, :, :]
    flat = d == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = (lo - a) / d
        tb = (hi - a) / d
    tmin = np.where(flat, -np.inf, np.minimum(ta, tb))
    tmax = np.where(flat, np.inf, np.maximum(ta, tb))
    outside = flat & ((a < lo) | (a > hi))
    t0 = np.maximum(tmin.max(axis=2), 0.0)
    t1 = np.minimum(tmax.min(axis=2), 1.0)
    hit = ~outside.any(axis=2) & (t0 <= t1) & (t1 > 0.0) & (t0 < 1.0)
    out[:] = hit.sum(axis=1)


def obstruction_counts(p1, p2, box_lo, box_hi, use_numba=None):
    """Count, per segment ``p1[i] -> p2[i]``, the boxes its open interior touches."""
    p1 = np.ascontiguousarray(p1, dtype=np.float64).reshape(-1, 3)
    p2 = np.ascontiguousarray(p2, dtype=np.float64).reshape(-1, 3)
    box_lo = np.ascontiguousarray(box_lo, dtype=np.float64).reshape(-1, 3)
    box_hi = np.ascontiguousarray(box_hi, dtype=np.float64).reshape(-1, 3)
    out = np.zeros(p1.shape[0], dtype=np.int64)
    if p1.shape[0] == 0 or box_lo.shape[0] == 0:
        return out
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    if use_numba:
        _obstruction_counts_numba(p1, p2, box_lo, box_hi, out)
    else:
        _obstruction_counts_numpy(p1, p2, box_lo, box_hi, out)
    return out


# -- radiometer energy ------------------------------------------------------


def _count_above_loop(re, im, level):
    count = 0
    for i in range(re.shape[0]):
        acc = 0.0
        for j in range(re.shape[1]):
            acc += re[i, j] * re[i, j] + im[i, j] * im[i, j]
        if acc > level:
            count += 1
    return count


_count_above_numba = njit(_count_above_loop)


def _count_above_numpy(re, im, level):
    energy = np.einsum("ij,ij->i", re, re) + np.einsum("ij,ij->i", im, im)
    return int(np.count_nonzero(energy > level))


def count_energy_above(re, im, level, use_numba=None):
    """Count rows whose summed ``re**2 + im**2`` exceeds ``level``."""
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    if use_numba:
        return int(_count_above_numba(re, im, level))
    return _count_above_numpy(re, im, level)


# -- exhaustive simple-path search ------------------------------------------


def _enumerate_routes_loop(n_nodes, indptr, dst, weight, dep, source, target):
    # weight = -ln(dep); both objectives are tracked so argmin/argmax can be compared
    max_depth = n_nodes
    path_nodes = np.empty(max_depth + 1, np.int64)
    path_edges = np.empty(max_depth, np.int64)
    ptr = np.empty(max_depth + 1, np.int64)
    sums = np.empty(max_depth + 1, np.float64)
    prods = np.empty(max_depth + 1, np.float64)
    visited = np.zeros(n_nodes, np.bool_)
    best_sum_edges = np.empty(max_depth, np.int64)
    best_prod_edges = np.empty(max_depth, np.int64)
    best_sum = np.inf
    best_prod = -1.0
    best_sum_len = 0
    best_prod_len = 0
    n_routes = 0

    depth = 0
    path_nodes[0] = source
    visited[source] = True
    ptr[0] = indptr[source]
    sums[0] = 0.0
    prods[0] = 1.0
    while depth >= 0:
        u = path_nodes[depth]
        if ptr[depth] < indptr[u + 1]:
            e = ptr[depth]
            ptr[depth] += 1
            v = dst[e]
            if visited[v]:
                continue
            s_new = sums[depth] + weight[e]
            p_new = prods[depth] * dep[e]
            path_edges[depth] = e
            if v == target:
                n_routes += 1
                if s_new < best_sum:
                    best_sum = s_new
                    best_sum_len = depth + 1
                    for k in range(depth + 1):
                        best_sum_edges[k] = path_edges[k]
                if p_new > best_prod:
                    best_prod = p_new
                    best_prod_len = depth + 1
                    for k in range(depth + 1):
                        best_prod_edges[k] = path_edges[k]
                continue
            depth += 1
            path_nodes[depth] = v
            visited[v] = True
            ptr[depth] = indptr[v]
            sums[depth] = s_new
            prods[depth] = p_new
        else:
            visited[u] = False
            depth -= 1
    return best_sum_edges[:best_sum_len], best_prod_edges[:best_prod_len], n_routes


_enumerate_routes_numba = njit(_enumerate_routes_loop)


def enumerate_routes(n_nodes, indptr, dst, weight, dep, source, target, use_numba=None):
    """Exhaustively enumerate simple ``source -> target`` edge paths of a CSR multigraph.

    Returns ``(argmin_sum_edges, argmax_product_edges, n_routes)`` where the first
    minimizes the summed ``weight`` and the second maximizes the product of ``dep``.
    Ties keep the first path met in DFS order, which follows the CSR edge order.
    There is no vectorized formulation; the fallback runs the loop in the interpreter.
    """
    args = (
        int(n_nodes),
        np.ascontiguousarray(indptr, dtype=np.int64),
        np.ascontiguousarray(dst, dtype=np.int64),
        np.ascontiguousarray(weight, dtype=np.float64),
        np.ascontiguousarray(dep, dtype=np.float64),
        int(source),
        int(target),
    )
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    fn = _enumerate_routes_numba if use_numba else _enumerate_routes_loop
    sum_edges, prod_edges, n_routes = fn(*args)
    return np.asarray(sum_edges), np.asarray(prod_edges), int(n_routes)
