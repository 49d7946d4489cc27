"""Pure-Python fallback for the compiled kernels.

Scalar special functions use :mod:`math`; the sampler is vectorized with
numpy over trials but follows the same per-trial counter layout as the
compiled version, so both produce the same draws.
"""

import math

import numpy as np

LN_SQRT_2PI = 0.91893853320467274178
LN_2PI = 1.8378770664093454836

SFERR = (
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
)

S0 = 1.0 / 12.0
S1 = 1.0 / 360.0
S2 = 1.0 / 1260.0
S3 = 1.0 / 1680.0
S4 = 1.0 / 1188.0

TAIL_EPS = 1e-17
_INF = math.inf


def stirlerr(n):
    if n <= 15:
        return SFERR[n]
    nn = float(n)
    nn2 = nn * nn
    if n > 500:
        return (S0 - S1 / nn2) / nn
    if n > 80:
        return (S0 - (S1 - S2 / nn2) / nn2) / nn
    if n > 35:
        return (S0 - (S1 - (S2 - S3 / nn2) / nn2) / nn2) / nn
    return (S0 - (S1 - (S2 - (S3 - S4 / nn2) / nn2) / nn2) / nn2) / nn


def _bd0(x, m):
    if abs(x - m) < 0.1 * (x + m):
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
    return x * math.log(x / m) + m - x


def logfactorial(k):
    if k <= 1:
        return 0.0
    kk = float(k)
    return stirlerr(k) + (kk + 0.5) * math.log(kk) - kk + LN_SQRT_2PI


def poisson_logpmf(k, lam):
    if lam == 0.0:
        return 0.0 if k == 0 else -_INF
    if k < 0:
        return -_INF
    if k == 0:
        return -lam
    return -stirlerr(k) - _bd0(float(k), lam) - 0.5 * (LN_2PI + math.log(k))


def log_poisson_cdf(n, x):
    """ln P(xi <= n - 1) for xi ~ Poisson(x)."""
    if n <= 0:
        return -_INF
    if x == 0.0:
        return 0.0
    if n <= 30 and x <= 30.0:
        t = math.exp(-x)
        s = t
        for k in range(1, n):
            t *= x / k
            s += t
        return math.log(s)
    m = min(int(math.floor(x)), n - 1)
    lp = poisson_logpmf(m, x)
    s = t = 1.0
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
    return lp + math.log(s)


def log_poisson_sf(n, x):
    """ln P(xi >= n) for xi ~ Poisson(x)."""
    if n <= 0:
        return 0.0
    if x == 0.0:
        return -_INF
    m = max(int(math.floor(x)), n)
    lp = poisson_logpmf(m, x)
    s = t = 1.0
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
    return lp + math.log(s)


def _logaddexp(a, b):
    if a == -_INF:
        return b
    if b == -_INF:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


def log_infidelity(n, n_up, n_down):
    return _logaddexp(log_poisson_cdf(n, n_up), log_poisson_sf(n, n_down))


def branch_fidelity(n, n_up, n_down):
    lc = log_poisson_cdf(n, n_up)
    err = math.exp(lc) + math.exp(log_poisson_sf(n, n_down))
    if err <= 0.5:
        return 1.0 - err
    return math.exp(log_poisson_cdf(n, n_down)) - math.exp(lc)


# ---------------------------------------------------------------------------
# Threefry-2x32, 20 rounds

ROT = (13, 15, 26, 6, 17, 29, 16, 24)
_M32 = 0xFFFFFFFF


def threefry2x32(k0, k1, c0, c1):
    ks = (k0 & _M32, k1 & _M32, (0x1BD11BDA ^ k0 ^ k1) & _M32)
    x0 = (c0 + ks[0]) & _M32
    x1 = (c1 + ks[1]) & _M32
    for r in range(20):
        x0 = (x0 + x1) & _M32
        rot = ROT[r % 8]
        x1 = ((x1 << rot) | (x1 >> (32 - rot))) & _M32
        x1 ^= x0
        if r % 4 == 3:
            s = (r + 1) // 4
            x0 = (x0 + ks[s % 3]) & _M32
            x1 = (x1 + ks[(s + 1) % 3] + s) & _M32
    return (x0, x1)


def uniform(k0, k1, c0, c1):
    w0, w1 = threefry2x32(k0, k1, c0, c1)
    return ((w0 >> 5) * 67108864.0 + (w1 >> 6) + 0.5) * (1.0 / 9007199254740992.0)


def _threefry_vec(k0, k1, c0, c1):
    k0 = np.uint32(k0)
    k1 = np.uint32(k1)
    ks = (k0, k1, np.uint32(0x1BD11BDA) ^ k0 ^ k1)
    x0 = c0.astype(np.uint32) + ks[0]
    x1 = c1.astype(np.uint32) + ks[1]
    for r in range(20):
        x0 += x1
        rot = ROT[r % 8]
        x1 = (x1 << np.uint32(rot)) | (x1 >> np.uint32(32 - rot))
        x1 ^= x0
        if r % 4 == 3:
            s = (r + 1) // 4
            x0 += ks[s % 3]
            x1 += ks[(s + 1) % 3] + np.uint32(s)
    return x0, x1


def _uniform_vec(k0, k1, c0, c1):
    w0, w1 = _threefry_vec(k0, k1, c0, c1)
    hi = (w0 >> np.uint32(5)).astype(np.float64)
    lo = (w1 >> np.uint32(6)).astype(np.float64)
    return (hi * 67108864.0 + lo + 0.5) * (1.0 / 9007199254740992.0)


def _logfactorial_vec(k):
    out = np.zeros(k.shape, dtype=np.float64)
    big = k > 1
    kk = k[big]
    kf = kk.astype(np.float64)
    nn2 = kf * kf
    st = np.empty(kf.shape)
    small = kk <= 15
    st[small] = np.asarray(SFERR)[kk[small]]
    r500 = kk > 500
    r80 = (kk > 80) & ~r500
    r35 = (kk > 35) & (kk <= 80)
    r15 = (kk > 15) & (kk <= 35)
    x, y = kf[r500], nn2[r500]
    st[r500] = (S0 - S1 / y) / x
    x, y = kf[r80], nn2[r80]
    st[r80] = (S0 - (S1 - S2 / y) / y) / x
    x, y = kf[r35], nn2[r35]
    st[r35] = (S0 - (S1 - (S2 - S3 / y) / y) / y) / x
    x, y = kf[r15], nn2[r15]
    st[r15] = (S0 - (S1 - (S2 - (S3 - S4 / y) / y) / y) / y) / x
    out[big] = st + (kf + 0.5) * np.log(kf) - kf + LN_SQRT_2PI
    return out


class _PoissonConst:
    def __init__(self, lam):
        self.lam = lam
        self.emlam = math.exp(-lam)
        self.slam = math.sqrt(lam)
        self.loglam = math.log(lam) if lam > 0 else 0.0
        self.b = 0.931 + 2.53 * self.slam
        self.a = -0.059 + 0.02483 * self.b
        self.invalpha = 1.1239 + 1.1328 / (self.b - 3.4)
        self.vr = 0.9277 - 3.6224 / (self.b - 2.0)
        self.loginvalpha = math.log(self.invalpha) if self.invalpha > 0 else 0.0


def _poisson_vec(c, k0, k1, trial, j):
    """Draw one Poisson variate per entry of ``trial``; advances ``j`` in place."""
    n = trial.shape[0]
    out = np.zeros(n, dtype=np.int64)
    if c.lam <= 0.0 or n == 0:
        return out
    if c.lam <= 30.0:
        u = _uniform_vec(k0, k1, trial, j)
        j += np.uint32(1)
        p = np.full(n, c.emlam)
        f = p.copy()
        active = np.nonzero(u > f)[0]
        while active.size:
            out[active] += 1
            p[active] = p[active] * (c.lam / out[active])
            alive = p[active] != 0.0
            active = active[alive]
            f[active] += p[active]
            active = active[u[active] > f[active]]
        return out
    pending = np.arange(n)
    while pending.size:
        tp = trial[pending]
        jp = j[pending]
        U = _uniform_vec(k0, k1, tp, jp) - 0.5
        V = _uniform_vec(k0, k1, tp, jp + np.uint32(1))
        j[pending] = jp + np.uint32(2)
        us = 0.5 - np.abs(U)
        k = np.floor((2.0 * c.a / us + c.b) * U + c.lam + 0.43).astype(np.int64)
        quick = (us >= 0.07) & (V <= c.vr)
        reject = ~quick & ((k < 0) | ((us < 0.013) & (V > us)))
        test = ~quick & ~reject
        accept = quick.copy()
        if test.any():
            kt = k[test]
            lhs = np.log(V[test]) + c.loginvalpha - np.log(c.a / (us[test] * us[test]) + c.b)
            rhs = -c.lam + kt * c.loglam - _logfactorial_vec(kt)
            accept[test] = lhs <= rhs
        out[pending[accept]] = k[accept]
        pending = pending[~accept]
    return out


def sample_poisson(lam, k0, k1, out):
    n = out.shape[0]
    trial = np.arange(n, dtype=np.uint32)
    j = np.zeros(n, dtype=np.uint32)
    out[:] = _poisson_vec(_PoissonConst(lam), k0, k1, trial, j)


_CHUNK = 1 << 18


def simulate(k0, k1, trials, up_bin, down_bin, n_bins, n_th):
    cu = _PoissonConst(up_bin)
    cd = _PoissonConst(down_bin)
    totals = [0, 0, 0, 0]
    for start in range(0, trials, _CHUNK):
        t = np.arange(start, min(trials, start + _CHUNK), dtype=np.uint32)
        is_up = _uniform_vec(k0, k1, t, np.zeros_like(t)) < 0.5
        tu, td = t[is_up], t[~is_up]
        ju = np.ones(tu.shape, dtype=np.uint32)
        jd = np.ones(td.shape, dtype=np.uint32)
        count_u = np.zeros(tu.shape, dtype=np.int64)
        count_d = np.zeros(td.shape, dtype=np.int64)
        for _ in range(n_bins):
            count_u += _poisson_vec(cu, k0, k1, tu, ju)
            count_d += _poisson_vec(cd, k0, k1, td, jd)
        totals[0] += int(tu.size)
        totals[1] += int(np.count_nonzero(count_u >= n_th))
        totals[2] += int(td.size)
        totals[3] += int(np.count_nonzero(count_d < n_th))
    return tuple(totals)
