# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.

Mirrors ``_purepy`` function for function. Both modules implement the same
algorithms so results agree to the last few ulps (and exactly for the
sampler, which only uses exact integer and IEEE arithmetic plus ``log``).
"""

from libc.math cimport exp, log, log1p, sqrt, floor, fabs, INFINITY
from libc.stdint cimport uint32_t, uint64_t

cdef double LN_SQRT_2PI = 0.91893853320467274178
cdef double LN_2PI = 1.8378770664093454836

# stirlerr(n) = ln n! - (n + 1/2) ln n + n - ln sqrt(2 pi), exact for n <= 15
cdef double[16] SFERR
SFERR[:] = [
    0.0,
    0.08106146679532725822,
    0.041340695955409294094,
    0.027677925684998339149,
    0.020790672103765093112,
    0.016644691189821192163,
    0.013876128823070747999,
    0.011896709945891770095,
    0.010411265261972096497,
    0.0092554621827127329177,
    0.0083305634333628712565,
    0.007573675487951840795,
    0.0069428401072095298657,
    0.0064089941880042070684,
    0.0059513701127588477356,
    0.005554733551962801371,
]

cdef double S0 = 1.0 / 12.0
cdef double S1 = 1.0 / 360.0
cdef double S2 = 1.0 / 1260.0
cdef double S3 = 1.0 / 1680.0
cdef double S4 = 1.0 / 1188.0

cdef double TAIL_EPS = 1e-17


cdef inline double _stirlerr(long long n) noexcept nogil:
    cdef double nn, nn2
    if n <= 15:
        return SFERR[n]
    nn = <double>n
    nn2 = nn * nn
    if n > 500:
        return (S0 - S1 / nn2) / nn
    if n > 80:
        return (S0 - (S1 - S2 / nn2) / nn2) / nn
    if n > 35:
        return (S0 - (S1 - (S2 - S3 / nn2) / nn2) / nn2) / nn
    return (S0 - (S1 - (S2 - (S3 - S4 / nn2) / nn2) / nn2) / nn2) / nn


cdef inline double _bd0(double x, double m) noexcept nogil:
    # x ln(x/m) + m - x, with the series branch when x is close to m
    cdef double v, s, s1, ej
    cdef int j
    if fabs(x - m) < 0.1 * (x + m):
        v = (x - m) / (x + m)
        s = (x - m) * v
        ej = 2.0 * x * v
        v = v * v
        for j in range(1, 1000):
            ej *= v
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
        return s
    return x * log(x / m) + m - x


cdef inline double _logfactorial(long long k) noexcept nogil:
    cdef double kk
    if k <= 1:
        return 0.0
    kk = <double>k
    return _stirlerr(k) + (kk + 0.5) * log(kk) - kk + LN_SQRT_2PI


cdef inline double _logpmf(long long k, double lam) noexcept nogil:
    if lam == 0.0:
        return 0.0 if k == 0 else -INFINITY
    if k < 0:
        return -INFINITY
    if k == 0:
        return -lam
    return -_stirlerr(k) - _bd0(<double>k, lam) - 0.5 * (LN_2PI + log(<double>k))


cdef double _log_cdf(long long n, double x) noexcept nogil:
    # ln P(xi <= n - 1) for xi ~ Poisson(x); equals ln Q(n, x)
    cdef double t, s, lp
    cdef long long k, m
    if n <= 0:
        return -INFINITY
    if x == 0.0:
        return 0.0
    if n <= 30 and x <= 30.0:
        t = exp(-x)
        s = t
        for k in range(1, n):
            t *= x / k
            s += t
        return log(s)
    m = <long long>floor(x)
    if m > n - 1:
        m = n - 1
    lp = _logpmf(m, x)
    s = 1.0
    t = 1.0
    k = m
    while k > 0:
        t *= k / x
        s += t
        if t < TAIL_EPS * s:
            break
        k -= 1
    t = 1.0
    k = m + 1
    while k <= n - 1:
        t *= x / k
        s += t
        if t < TAIL_EPS * s:
            break
        k += 1
    return lp + log(s)


cdef double _log_sf(long long n, double x) noexcept nogil:
    # ln P(xi >= n) for xi ~ Poisson(x)
    cdef double t, s, lp
    cdef long long k, m
    if n <= 0:
        return 0.0
    if x == 0.0:
        return -INFINITY
    m = <long long>floor(x)
    if m < n:
        m = n
    lp = _logpmf(m, x)
    s = 1.0
    t = 1.0
    k = m + 1
    while True:
        t *= x / k
        s += t
        if t < TAIL_EPS * s:
            break
        k += 1
    t = 1.0
    k = m
    while k > n:
        t *= k / x
        s += t
        if t < TAIL_EPS * s:
            break
        k -= 1
    return lp + log(s)


cdef inline double _logaddexp(double a, double b) noexcept nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a > b:
        return a + log1p(exp(b - a))
    return b + log1p(exp(a - b))


cpdef double stirlerr(long long n):
    return _stirlerr(n)


cpdef double logfactorial(long long k):
    return _logfactorial(k)


cpdef double poisson_logpmf(long long k, double lam):
    return _logpmf(k, lam)


cpdef double log_poisson_cdf(long long n, double x):
    return _log_cdf(n, x)


cpdef double log_poisson_sf(long long n, double x):
    return _log_sf(n, x)


cpdef double log_infidelity(long long n, double n_up, double n_down):
    """ln of the total error probability for threshold ``n``."""
    return _logaddexp(_log_cdf(n, n_up), _log_sf(n, n_down))


cpdef double branch_fidelity(long long n, double n_up, double n_down):
    """Fidelity for a fixed threshold ``n``: Q(n, n_down) - Q(n, n_up)."""
    cdef double lc = _log_cdf(n, n_up)
    cdef double err = exp(lc) + exp(_log_sf(n, n_down))
    if err <= 0.5:
        return 1.0 - err
    return exp(_log_cdf(n, n_down)) - exp(lc)


# ---------------------------------------------------------------------------
# Threefry-2x32, 20 rounds

cdef int[8] ROT
ROT[:] = [13, 15, 26, 6, 17, 29, 16, 24]


cdef inline void _threefry(uint32_t k0, uint32_t k1, uint32_t c0, uint32_t c1,
                           uint32_t* out) noexcept nogil:
    cdef uint32_t ks0 = k0, ks1 = k1
    cdef uint32_t ks2 = 0x1BD11BDA ^ k0 ^ k1
    cdef uint32_t x0 = c0 + ks0, x1 = c1 + ks1
    cdef uint32_t ks[3]
    cdef int r, s
    ks[0] = ks0
    ks[1] = ks1
    ks[2] = ks2
    for r in range(20):
        x0 = x0 + x1
        x1 = (x1 << ROT[r % 8]) | (x1 >> (32 - ROT[r % 8]))
        x1 = x1 ^ x0
        if r % 4 == 3:
            s = (r + 1) // 4
            x0 = x0 + ks[s % 3]
            x1 = x1 + ks[(s + 1) % 3] + <uint32_t>s
    out[0] = x0
    out[1] = x1


cdef inline double _uniform(uint32_t k0, uint32_t k1, uint32_t c0, uint32_t c1) noexcept nogil:
    cdef uint32_t w[2]
    _threefry(k0, k1, c0, c1, w)
    return ((w[0] >> 5) * 67108864.0 + (w[1] >> 6) + 0.5) * (1.0 / 9007199254740992.0)


def threefry2x32(uint32_t k0, uint32_t k1, uint32_t c0, uint32_t c1):
    """Threefry-2x32-20 block: returns two 32-bit words."""
    cdef uint32_t w[2]
    _threefry(k0, k1, c0, c1, w)
    return (w[0], w[1])


def uniform(uint32_t k0, uint32_t k1, uint32_t c0, uint32_t c1):
    return _uniform(k0, k1, c0, c1)


cdef struct PoissonConst:
    double lam
    double emlam
    double slam
    double loglam
    double a
    double b
    double invalpha
    double vr
    double loginvalpha


cdef PoissonConst _poisson_const(double lam) noexcept nogil:
    cdef PoissonConst c
    c.lam = lam
    c.emlam = exp(-lam)
    c.slam = sqrt(lam)
    c.loglam = log(lam) if lam > 0 else 0.0
    c.b = 0.931 + 2.53 * c.slam
    c.a = -0.059 + 0.02483 * c.b
    c.invalpha = 1.1239 + 1.1328 / (c.b - 3.4)
    c.vr = 0.9277 - 3.6224 / (c.b - 2.0)
    c.loginvalpha = log(c.invalpha) if c.invalpha > 0 else 0.0
    return c


cdef long long _poisson(PoissonConst* c, uint32_t k0, uint32_t k1, uint32_t trial,
                        uint32_t* j) noexcept nogil:
    # Draws consume counters (trial, j), (trial, j + 1), ...
    cdef double u, p, f, U, V, us
    cdef long long k
    if c.lam <= 0.0:
        return 0
    if c.lam <= 30.0:
        u = _uniform(k0, k1, trial, j[0])
        j[0] += 1
        k = 0
        p = c.emlam
        f = p
        while u > f:
            k += 1
            p *= c.lam / k
            if p == 0.0:
                break
            f += p
        return k
    while True:
        U = _uniform(k0, k1, trial, j[0]) - 0.5
        V = _uniform(k0, k1, trial, j[0] + 1)
        j[0] += 2
        us = 0.5 - fabs(U)
        k = <long long>floor((2.0 * c.a / us + c.b) * U + c.lam + 0.43)
        if us >= 0.07 and V <= c.vr:
            return k
        if k < 0 or (us < 0.013 and V > us):
            continue
        if (log(V) + c.loginvalpha - log(c.a / (us * us) + c.b)
                <= -c.lam + k * c.loglam - _logfactorial(k)):
            return k


def sample_poisson(double lam, uint32_t k0, uint32_t k1, long long[:] out):
    """Fill ``out`` with Poisson draws; draw ``i`` uses trial counter ``i``."""
    cdef Py_ssize_t i, n = out.shape[0]
    cdef uint32_t j
    cdef PoissonConst c = _poisson_const(lam)
    with nogil:
        for i in range(n):
            j = 0
            out[i] = _poisson(&c, k0, k1, <uint32_t>i, &j)


def simulate(uint32_t k0, uint32_t k1, long long trials, double up_bin, double down_bin,
             long long n_bins, long long n_th):
    """Run ``trials`` thresholded measurements on one stream.

    Trial ``t`` uses counter ``(t, 0)`` for the prepared state and
    ``(t, 1), (t, 2), ...`` for the per-bin counts.

    Returns:
        Tuple ``(up_trials, up_correct, down_trials, down_correct)``.
    """
    cdef long long t, b, count
    cdef long long up_trials = 0, up_correct = 0, down_trials = 0, down_correct = 0
    cdef uint32_t j
    cdef bint is_up
    cdef PoissonConst cu = _poisson_const(up_bin)
    cdef PoissonConst cd = _poisson_const(down_bin)
    with nogil:
        for t in range(trials):
            is_up = _uniform(k0, k1, <uint32_t>t, 0) < 0.5
            j = 1
            count = 0
            for b in range(n_bins):
                if is_up:
                    count += _poisson(&cu, k0, k1, <uint32_t>t, &j)
                else:
                    count += _poisson(&cd, k0, k1, <uint32_t>t, &j)
            if is_up:
                up_trials += 1
                if count >= n_th:
                    up_correct += 1
            else:
                down_trials += 1
                if count < n_th:
                    down_correct += 1
    return (up_trials, up_correct, down_trials, down_correct)
