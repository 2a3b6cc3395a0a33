# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: peeling chain steps, visit counting for the limit
walk, and discrete-snake tree passes.

Each function mirrors the pure-Python twin in `forge._pure` and consumes the
underlying bit-generator stream in exactly the same order, so the two
backends produce identical results for identical seeds.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport lgamma, log, sqrt, exp, INFINITY, isnan
from cpython.pycapsule cimport PyCapsule_GetPointer
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal

cnp.import_array()

cdef double LOG2 = 0.6931471805599453
cdef double LOG3 = 1.0986122886681098
cdef double LOG4 = 1.3862943611198906
cdef double LOG6 = 1.791759469228055
cdef double INV_SQRT3 = 0.5773502691896258
cdef double LOG_8_SQRT3 = log(8.0 * sqrt(3.0))


cdef bitgen_t *_bitgen(object gen):
    capsule = gen.bit_generator.capsule
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


cdef inline double _u01(bitgen_t *rng) noexcept nogil:
    return rng.next_double(rng.state)


cdef inline double _log_nc2n(double n) noexcept nogil:
    # log(n * C(2n, n))
    return log(n) + lgamma(2.0 * n + 1.0) - 2.0 * lgamma(n + 1.0)


cdef inline double _log_z1(double n) noexcept nogil:
    # log Z(n) for n >= 2 via (2n-5)!! = (2n-4)!/(2^(n-2) (n-2)!)
    cdef double j = n - 2.0
    cdef double ldf = lgamma(2.0 * j + 1.0) - j * LOG2 - lgamma(j + 1.0)
    return n * LOG6 + ldf - LOG_8_SQRT3 - lgamma(n + 1.0)


cdef inline double _log_z2(double L, double p) noexcept nogil:
    return -LOG2 + (L + p) * LOG3 - log(L + p) + _log_nc2n(L) + _log_nc2n(p)


cdef inline double _up_prob(double L, double p) noexcept nogil:
    # q_L(p, p+1); pass L = INFINITY for the UIPT kernel.
    if L == INFINITY:
        return INV_SQRT3 * (1.0 + 0.5 / p)
    return INV_SQRT3 * ((p + 0.5) * (L + p)) / (p * (L + p + 1.0))


cdef inline double _kill_prob(double L, double p) noexcept nogil:
    # q_L(p, dagger) = L Z(L+p+1) / Z'(L, p)
    return exp(log(L) + _log_z1(L + p + 1.0) - _log_z2(L, p))


cdef inline double _down_ratio(double L, double p, double m) noexcept nogil:
    # q_L(p, p-m) / q_{-m}; bounded by max(1, (sqrt(L/p)+sqrt(p/L))/2).
    cdef double c, j
    if m <= 64.0:
        c = (p - m) / p
        j = p - m + 1.0
        while j <= p:
            c *= (2.0 * j) / (2.0 * j - 1.0)
            j += 1.0
    else:
        c = exp(_log_nc2n(p - m) - _log_nc2n(p) + m * LOG4)
    if L == INFINITY:
        return c
    return c * (L + p) / (L + p - m)


cdef inline double _envelope(double L, double p) noexcept nogil:
    cdef double e
    # The 1e-6 slack absorbs the log-gamma evaluation error in the ratio.
    if L == INFINITY or L >= p:
        return 1.000001
    e = 0.5 * (sqrt(L / p) + sqrt(p / L))
    if e < 1.0:
        e = 1.0
    return e * 1.000001


cdef long _sample_down(bitgen_t *rng, double L, double p,
                       double[::1] qneg_cdf, double qneg_total) noexcept nogil:
    """Sample the swallowed edge count m of a down move, conditionally on the
    move being a down move, by rejection from the limit-walk proposal."""
    cdef long tab = qneg_cdf.shape[0]
    cdef long lo, hi, mid, m
    cdef double v, q, ratio, env = _envelope(L, p)
    while True:
        v = _u01(rng) * qneg_total
        if v < qneg_cdf[1]:
            m = 0 if v < qneg_cdf[0] else 1
        elif v < qneg_cdf[tab - 1]:
            lo = 2
            hi = tab - 1
            while lo < hi:
                mid = (lo + hi) >> 1
                if v < qneg_cdf[mid]:
                    hi = mid
                else:
                    lo = mid + 1
            m = lo
        else:
            # Tail beyond the table: walk the exact recurrence
            # q_{-(m+1)} = q_{-m} (2m-1)/(2(m+2)).
            v -= qneg_cdf[tab - 1]
            m = tab - 1
            q = qneg_cdf[tab - 1] - qneg_cdf[tab - 2]
            while True:
                q *= (2.0 * m - 1.0) / (2.0 * (m + 2.0))
                m += 1
                if v < q or q < 1e-300:
                    break
                v -= q
        if m > <long> p - 1:
            continue
        if m == 0:
            # the acceptance ratio is exactly 1 for m = 0
            if _u01(rng) * env < 1.0:
                return 0
            continue
        ratio = _down_ratio(L, p, <double> m)
        if _u01(rng) * env < ratio:
            return m


def peel_run(object gen, long L, long p0, long step_cap,
             double[::1] qneg_cdf, bint record):
    """One peeling chain run under q_L from perimeter p0.

    Returns (z, censored, n_steps, events, swallowed, perimeters); the last
    three are None unless record is true.  Event codes: 0 grow, 1 swallow
    (with the count and a side sign in `swallowed`), 2 kill.
    """
    cdef bitgen_t *rng = _bitgen(gen)
    cdef double Lf = <double> L
    cdef double qneg_total = 1.0 - INV_SQRT3
    cdef long p = p0, n = 0, m
    cdef double u, up, kill
    # The killing probability is strictly decreasing in p (the one-step ratio
    # is provably < 1), so kill(p_lo) bounds it on a perimeter window
    # [p_lo, p_hi] and the exact value is only needed when the uniform draw
    # falls inside the bound -- about once per run.
    cdef long p_lo = p0 >> 1 if p0 >> 1 > 0 else 1
    cdef long p_hi = 2 * p0
    cdef double kill_bound = 1.01 * _kill_prob(Lf, <double> p_lo)
    cdef cnp.int8_t[::1] ev
    cdef cnp.int64_t[::1] sw, per
    events = swall = perims = None
    if record:
        events = np.empty(step_cap, dtype=np.int8)
        swall = np.zeros(step_cap, dtype=np.int64)
        perims = np.empty(step_cap, dtype=np.int64)
        ev = events
        sw = swall
        per = perims
    while n < step_cap:
        u = _u01(rng)
        up = _up_prob(Lf, p)
        if u < up:
            p += 1
            if p > p_hi:
                p_lo = p >> 1
                p_hi = 2 * p
                kill_bound = 1.01 * _kill_prob(Lf, <double> p_lo)
            if record:
                ev[n] = 0
                per[n] = p
            n += 1
            continue
        if u < up + kill_bound:
            kill = _kill_prob(Lf, <double> p)
            if u < up + kill:
                if record:
                    ev[n] = 2
                    per[n] = p
                n += 1
                if record:
                    return p + 1, False, n, events[:n].copy(), swall[:n].copy(), perims[:n].copy()
                return p + 1, False, n, None, None, None
        m = _sample_down(rng, Lf, <double> p, qneg_cdf, qneg_total)
        # Swallowed edges may lie on either side of the revealed edge.
        side = 1 if _u01(rng) < 0.5 else -1
        p -= m
        if p < p_lo:
            p_lo = p >> 1 if p >> 1 > 0 else 1
            p_hi = 2 * p
            kill_bound = 1.01 * _kill_prob(Lf, <double> p_lo)
        if record:
            ev[n] = 1
            sw[n] = side * m
            per[n] = p
        n += 1
    if record:
        return -1, True, n, events[:n].copy(), swall[:n].copy(), perims[:n].copy()
    return -1, True, n, None, None, None


cdef long _run_one(bitgen_t *rng, double Lf, long p0, long step_cap,
                   double[::1] qneg_cdf, double qneg_total,
                   cnp.uint8_t *censored) noexcept nogil:
    cdef long p = p0, n = 0, m
    cdef double u, up, kill
    cdef long p_lo = p0 >> 1 if p0 >> 1 > 0 else 1
    cdef long p_hi = 2 * p0
    cdef double kill_bound = 1.01 * _kill_prob(Lf, <double> p_lo)
    while n < step_cap:
        u = _u01(rng)
        up = _up_prob(Lf, p)
        if u < up:
            p += 1
            if p > p_hi:
                p_lo = p >> 1
                p_hi = 2 * p
                kill_bound = 1.01 * _kill_prob(Lf, <double> p_lo)
            n += 1
            continue
        if u < up + kill_bound:
            kill = _kill_prob(Lf, <double> p)
            if u < up + kill:
                censored[0] = 0
                return p + 1
        m = _sample_down(rng, Lf, <double> p, qneg_cdf, qneg_total)
        _u01(rng)  # side draw, kept for stream parity with peel_run
        p -= m
        if p < p_lo:
            p_lo = p >> 1 if p >> 1 > 0 else 1
            p_hi = 2 * p
            kill_bound = 1.01 * _kill_prob(Lf, <double> p_lo)
        n += 1
    censored[0] = 1
    return -1


def peel_run_many(object gens, long L, long p0, long step_cap,
                  double[::1] qneg_cdf):
    """Batch of independent peeling runs; result matches looping peel_run.

    Chains run sequentially: each consumes its own generator's stream exactly
    as peel_run would.  Returns (z, censored) int64/bool arrays."""
    cdef long n_chains = len(gens)
    cdef double Lf = <double> L
    cdef double qneg_total = 1.0 - INV_SQRT3
    cdef long i
    z_np = np.empty(n_chains, dtype=np.int64)
    cens_np = np.zeros(n_chains, dtype=bool)
    cdef cnp.int64_t[::1] z = z_np
    cdef cnp.uint8_t[::1] cens = cens_np.view(np.uint8)
    cdef bitgen_t *rng
    for i in range(n_chains):
        rng = _bitgen(gens[i])
        with nogil:
            z[i] = _run_one(rng, Lf, p0, step_cap, qneg_cdf, qneg_total,
                            &cens[i])
    return z_np, cens_np


def qinf_visits(object gen, long p0, long j_max, long p_cap,
                double[::1] qneg_cdf):
    """Visit counts to perimeters 1..j_max of the UIPT peeling chain started
    at p0, truncated once the perimeter exceeds p_cap."""
    cdef bitgen_t *rng = _bitgen(gen)
    cdef double qneg_total = 1.0 - INV_SQRT3
    cdef long p = p0, m
    cdef double u
    visits = np.zeros(j_max, dtype=np.int64)
    cdef cnp.int64_t[::1] vis = visits
    if p <= j_max:
        vis[p - 1] += 1
    while p <= p_cap:
        u = _u01(rng)
        if u < _up_prob(INFINITY, p):
            p += 1
        else:
            m = _sample_down(rng, INFINITY, <double> p, qneg_cdf, qneg_total)
            p -= m
        if p <= j_max:
            vis[p - 1] += 1
    return visits


cdef long _dyck_rotation(bitgen_t *rng, cnp.int8_t[::1] arr, long n) noexcept nogil:
    """Shuffle n/2 up and n/2+1 down steps in arr (length n+1) and return the
    start offset whose cyclic read is a Dyck path plus a final down step."""
    cdef long i, j, s, smin, jmin, total = n + 1
    cdef cnp.int8_t tmp
    for i in range(total):
        arr[i] = 1 if i < n // 2 else -1
    for i in range(total - 1, 0, -1):
        j = <long> (_u01(rng) * (i + 1))
        if j > i:
            j = i
        tmp = arr[i]
        arr[i] = arr[j]
        arr[j] = tmp
    s = 0
    smin = 1
    jmin = 0
    for i in range(total):
        s += arr[i]
        if s < smin:
            smin = s
            jmin = i
    return jmin + 1


def snake_tree_stats(object gen, long n_steps, double root_label,
                     double step_std, double floor, double y,
                     double eps1, double eps2):
    """One-pass discrete snake tree, returning summary statistics only.

    Returns (accepted, w_min, alive_steps, cnt1, cnt2): `accepted` is false
    when the head reaches `floor` (the pass aborts immediately, implementing
    Poisson thinning for conditioned forests); `alive_steps` counts grid
    steps on the truncation tr_y, and cnt1/cnt2 count alive steps with head
    below y + eps.  Pass y = nan to skip truncation bookkeeping.
    """
    cdef bitgen_t *rng = _bitgen(gen)
    cdef long total = n_steps + 1
    cdef bint track = not isnan(y)
    arr_np = np.empty(total, dtype=np.int8)
    cdef cnp.int8_t[::1] arr = arr_np
    stack_np = np.empty(n_steps // 2 + 2, dtype=np.float64)
    cdef double[::1] stack = stack_np
    cdef long start = _dyck_rotation(rng, arr, n_steps)
    cdef long k, idx, depth = 0, cross_depth = -1
    cdef long alive_steps = 0, cnt1 = 0, cnt2 = 0
    cdef double head = root_label, w_min = root_label, inc
    cdef double thr1 = y + eps1, thr2 = y + eps2
    for k in range(n_steps):
        idx = start + k
        if idx >= total:
            idx -= total
        if arr[idx] == 1:
            inc = random_standard_normal(rng) * step_std
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


def snake_tree_arrays(object gen, long n_steps, double root_label,
                      double step_std, double sqrt_delta):
    """Full discrete snake tree: contour lifetimes, head labels, and the
    running ancestral label minimum, on the n_steps + 1 grid."""
    cdef bitgen_t *rng = _bitgen(gen)
    cdef long total = n_steps + 1
    arr_np = np.empty(total, dtype=np.int8)
    cdef cnp.int8_t[::1] arr = arr_np
    stack_np = np.empty(n_steps // 2 + 2, dtype=np.float64)
    amin_np = np.empty(n_steps // 2 + 2, dtype=np.float64)
    cdef double[::1] stack = stack_np
    cdef double[::1] amin = amin_np
    contour = np.empty(total, dtype=np.float64)
    head_arr = np.empty(total, dtype=np.float64)
    anc_min = np.empty(total, dtype=np.float64)
    cdef double[::1] con = contour
    cdef double[::1] hd = head_arr
    cdef double[::1] am = anc_min
    cdef long start = _dyck_rotation(rng, arr, n_steps)
    cdef long k, idx, depth = 0
    cdef double head = root_label, cur_min = root_label, inc
    con[0] = 0.0
    hd[0] = root_label
    am[0] = root_label
    for k in range(n_steps):
        idx = start + k
        if idx >= total:
            idx -= total
        if arr[idx] == 1:
            inc = random_standard_normal(rng) * step_std
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
        con[k + 1] = depth * sqrt_delta
        hd[k + 1] = head
        am[k + 1] = cur_min
    return contour, head_arr, anc_min
