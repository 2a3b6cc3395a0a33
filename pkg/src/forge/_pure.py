"""Pure-Python fallback for the compiled hot loops in `forge._speed`.

Algorithm and random-stream consumption match the compiled versions draw for
draw, so both backends give identical results for identical seeds.  This
backend is much slower and is intended for installs without a C toolchain
and for cross-checking the extension.
"""

from __future__ import annotations

import math

import numpy as np

_INV_SQRT3 = 1.0 / math.sqrt(3.0)
_LOG2 = math.log(2.0)
_LOG3 = math.log(3.0)
_LOG4 = math.log(4.0)
_LOG6 = math.log(6.0)
_LOG_8_SQRT3 = math.log(8.0 * math.sqrt(3.0))
_INF = float("inf")


def _log_nc2n(n):
    return math.log(n) + math.lgamma(2.0 * n + 1.0) - 2.0 * math.lgamma(n + 1.0)


def _log_z1(n):
    j = n - 2.0
    ldf = math.lgamma(2.0 * j + 1.0) - j * _LOG2 - math.lgamma(j + 1.0)
    return n * _LOG6 + ldf - _LOG_8_SQRT3 - math.lgamma(n + 1.0)


def _log_z2(L, p):
    return -_LOG2 + (L + p) * _LOG3 - math.log(L + p) + _log_nc2n(L) + _log_nc2n(p)


def _up_prob(L, p):
    if L == _INF:
        return _INV_SQRT3 * (1.0 + 0.5 / p)
    return _INV_SQRT3 * ((p + 0.5) * (L + p)) / (p * (L + p + 1.0))


def _kill_prob(L, p):
    return math.exp(math.log(L) + _log_z1(L + p + 1.0) - _log_z2(L, p))


def _down_ratio(L, p, m):
    if m <= 64.0:
        c = (p - m) / p
        j = p - m + 1.0
        while j <= p:
            c *= (2.0 * j) / (2.0 * j - 1.0)
            j += 1.0
    else:
        c = math.exp(_log_nc2n(p - m) - _log_nc2n(p) + m * _LOG4)
    if L == _INF:
        return c
    return c * (L + p) / (L + p - m)


def _envelope(L, p):
    if L == _INF or L >= p:
        return 1.000001
    e = 0.5 * (math.sqrt(L / p) + math.sqrt(p / L))
    return max(e, 1.0) * 1.000001


def _sample_down(u01, L, p, qneg_cdf, qneg_total):
    tab = len(qneg_cdf)
    env = _envelope(L, p)
    while True:
        v = u01() * qneg_total
        if v < qneg_cdf[1]:
            m = 0 if v < qneg_cdf[0] else 1
        elif v < qneg_cdf[tab - 1]:
            m = int(np.searchsorted(qneg_cdf, v, side="right"))
        else:
            v -= qneg_cdf[tab - 1]
            m = tab - 1
            q = qneg_cdf[tab - 1] - qneg_cdf[tab - 2]
            while True:
                q *= (2.0 * m - 1.0) / (2.0 * (m + 2.0))
                m += 1
                if v < q or q < 1e-300:
                    break
                v -= q
        if m > int(p) - 1:
            continue
        if m == 0:
            # the acceptance ratio is exactly 1 for m = 0
            if u01() * env < 1.0:
                return 0
            continue
        if u01() * env < _down_ratio(L, p, float(m)):
            return m


def peel_run(gen, L, p0, step_cap, qneg_cdf, record):
    u01 = gen.random
    Lf = float(L)
    qneg_total = 1.0 - _INV_SQRT3
    p = p0
    n = 0
    # The killing probability is strictly decreasing in p (the one-step ratio
    # is provably < 1), so kill(p_lo) bounds it on a perimeter window
    # [p_lo, p_hi] and the exact value is only needed when the uniform draw
    # falls inside the bound -- about once per run.
    p_lo = max(1, p0 >> 1)
    p_hi = 2 * p0
    kill_bound = 1.01 * _kill_prob(Lf, float(p_lo))
    events = swall = perims = None
    if record:
        events = np.empty(step_cap, dtype=np.int8)
        swall = np.zeros(step_cap, dtype=np.int64)
        perims = np.empty(step_cap, dtype=np.int64)
    while n < step_cap:
        u = u01()
        up = _up_prob(Lf, p)
        if u < up:
            p += 1
            if p > p_hi:
                p_lo = p >> 1
                p_hi = 2 * p
                kill_bound = 1.01 * _kill_prob(Lf, float(p_lo))
            if record:
                events[n] = 0
                perims[n] = p
            n += 1
            continue
        if u < up + kill_bound:
            kill = _kill_prob(Lf, float(p))
            if u < up + kill:
                if record:
                    events[n] = 2
                    perims[n] = p
                n += 1
                if record:
                    return p + 1, False, n, events[:n].copy(), swall[:n].copy(), perims[:n].copy()
                return p + 1, False, n, None, None, None
        m = _sample_down(u01, Lf, float(p), qneg_cdf, qneg_total)
        side = 1 if u01() < 0.5 else -1
        p -= m
        if p < p_lo:
            p_lo = max(1, p >> 1)
            p_hi = 2 * p
            kill_bound = 1.01 * _kill_prob(Lf, float(p_lo))
        if record:
            events[n] = 1
            swall[n] = side * m
            perims[n] = p
        n += 1
    if record:
        return -1, True, n, events[:n].copy(), swall[:n].copy(), perims[:n].copy()
    return -1, True, n, None, None, None


def peel_run_many(gens, L, p0, step_cap, qneg_cdf):
    """Batch of independent peeling runs; result matches looping peel_run."""
    z = np.empty(len(gens), dtype=np.int64)
    cens = np.zeros(len(gens), dtype=bool)
    for i, gen in enumerate(gens):
        zi, ci, _, _, _, _ = peel_run(gen, L, p0, step_cap, qneg_cdf, False)
        z[i] = zi
        cens[i] = ci
    return z, cens


def qinf_visits(gen, p0, j_max, p_cap, qneg_cdf):
    u01 = gen.random
    qneg_total = 1.0 - _INV_SQRT3
    p = p0
    visits = np.zeros(j_max, dtype=np.int64)
    if p <= j_max:
        visits[p - 1] += 1
    while p <= p_cap:
        if u01() < _up_prob(_INF, p):
            p += 1
        else:
            p -= _sample_down(u01, _INF, float(p), qneg_cdf, qneg_total)
        if p <= j_max:
            visits[p - 1] += 1
    return visits


def _dyck_rotation(gen, n):
    total = n + 1
    arr = np.empty(total, dtype=np.int8)
    arr[: n // 2] = 1
    arr[n // 2:] = -1
    u01 = gen.random
    for i in range(total - 1, 0, -1):
        j = int(u01() * (i + 1))
        if j > i:
            j = i
        arr[i], arr[j] = arr[j], arr[i]
    s = 0
    smin = 1
    jmin = 0
    for i in range(total):
        s += int(arr[i])  # keep a Python int: int8 would wrap at height 127
        if s < smin:
            smin = s
            jmin = i
    return arr, jmin + 1


def snake_tree_stats(gen, n_steps, root_label, step_std, floor, y, eps1, eps2):
    arr, start = _dyck_rotation(gen, n_steps)
    total = n_steps + 1
    track = not math.isnan(y)
    normal = gen.standard_normal
    stack = np.empty(n_steps // 2 + 2, dtype=np.float64)
    depth = 0
    cross_depth = -1
    alive_steps = cnt1 = cnt2 = 0
    head = w_min = root_label
    thr1 = y + eps1
    thr2 = y + eps2
    for k in range(n_steps):
        idx = start + k
        if idx >= total:
            idx -= total
        if arr[idx] == 1:
            inc = normal() * step_std
            stack[depth] = inc
            depth += 1
            head += inc
            if head < w_min:
                w_min = head
                if w_min <= floor:
                    return False, w_min, alive_steps, cnt1, cnt2
            if track and cross_depth < 0 and head <= y:
                cross_depth = depth
        else:
            depth -= 1
            head -= stack[depth]
            if track and cross_depth == depth + 1:
                cross_depth = -1
        if track:
            if cross_depth < 0:
                alive_steps += 1
                if head < thr1:
                    cnt1 += 1
                if head < thr2:
                    cnt2 += 1
        else:
            alive_steps += 1
    return True, w_min, alive_steps, cnt1, cnt2


def snake_tree_arrays(gen, n_steps, root_label, step_std, sqrt_delta):
    arr, start = _dyck_rotation(gen, n_steps)
    total = n_steps + 1
    normal = gen.standard_normal
    stack = np.empty(n_steps // 2 + 2, dtype=np.float64)
    amin = np.empty(n_steps // 2 + 2, dtype=np.float64)
    contour = np.empty(total, dtype=np.float64)
    head_arr = np.empty(total, dtype=np.float64)
    anc_min = np.empty(total, dtype=np.float64)
    depth = 0
    head = cur_min = root_label
    contour[0] = 0.0
    head_arr[0] = root_label
    anc_min[0] = root_label
    for k in range(n_steps):
        idx = start + k
        if idx >= total:
            idx -= total
        if arr[idx] == 1:
            inc = normal() * step_std
            stack[depth] = inc
            amin[depth] = cur_min
            depth += 1
            head += inc
            if head < cur_min:
                cur_min = head
        else:
            depth -= 1
            head -= stack[depth]
            cur_min = amin[depth]
        contour[k + 1] = depth * sqrt_delta
        head_arr[k + 1] = head
        anc_min[k + 1] = cur_min
    return contour, head_arr, anc_min
