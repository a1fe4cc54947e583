# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Monte Carlo kernel: per-replication Philox streams + loss loop.

The inner loop regenerates the Philox-4x64-10 sequence for the keyed stream
``(master_seed, replication_index)`` and folds the inverse-transform severity
draws straight into the loss accumulator, so no per-replication Python
objects or temporary arrays are created.  The stream is bit-identical to
``numpy.random.Generator(numpy.random.Philox(key=[master_seed, rep]))``
(verified by test); the pure NumPy fallback in ``_kernels_py`` therefore
consumes exactly the same uniforms.
"""

from libc.stdint cimport uint64_t
from libc.math cimport exp, log1p, pow, sqrt, NAN

from scipy.special.cython_special cimport ndtri

import numpy as np

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t oprisk_mulhilo64(uint64_t a, uint64_t b, uint64_t *hi) {
        __uint128_t p = (__uint128_t)a * (__uint128_t)b;
        *hi = (uint64_t)(p >> 64);
        return (uint64_t)p;
    }
    """
    uint64_t oprisk_mulhilo64(uint64_t a, uint64_t b, uint64_t *hi) noexcept nogil

cdef uint64_t PHILOX_M0 = 0xD2E7470EE14C6C93u
cdef uint64_t PHILOX_M1 = 0xCA5A826395121157u
cdef uint64_t PHILOX_W0 = 0x9E3779B97F4A7C15u
cdef uint64_t PHILOX_W1 = 0xBB67AE8584CAA73Bu
# Smallest uniform the transforms ever see; keeps ndtri/log finite.
cdef double U_FLOOR = 1.1102230246251565e-16  # 2^-53
cdef double EXP_GUARD = 709.0

cdef struct philox_state:
    uint64_t ctr[4]
    uint64_t key[2]
    uint64_t buf[4]
    int buf_pos


cdef void philox_init(philox_state *s, uint64_t k0, uint64_t k1) noexcept nogil:
    s.ctr[0] = 0
    s.ctr[1] = 0
    s.ctr[2] = 0
    s.ctr[3] = 0
    s.key[0] = k0
    s.key[1] = k1
    s.buf_pos = 4


cdef void philox_block(philox_state *s) noexcept nogil:
    cdef uint64_t x0 = s.ctr[0]
    cdef uint64_t x1 = s.ctr[1]
    cdef uint64_t x2 = s.ctr[2]
    cdef uint64_t x3 = s.ctr[3]
    cdef uint64_t k0 = s.key[0]
    cdef uint64_t k1 = s.key[1]
    cdef uint64_t hi0, hi1, lo0, lo1, t0, t2
    cdef int r
    for r in range(10):
        if r > 0:
            k0 += PHILOX_W0
            k1 += PHILOX_W1
        lo0 = oprisk_mulhilo64(PHILOX_M0, x0, &hi0)
        lo1 = oprisk_mulhilo64(PHILOX_M1, x2, &hi1)
        t0 = hi1 ^ x1 ^ k0
        t2 = hi0 ^ x3 ^ k1
        x0 = t0
        x1 = lo1
        x2 = t2
        x3 = lo0
    s.buf[0] = x0
    s.buf[1] = x1
    s.buf[2] = x2
    s.buf[3] = x3
    s.buf_pos = 0


cdef uint64_t philox_next64(philox_state *s) noexcept nogil:
    if s.buf_pos >= 4:
        # Counter increments (with carry) before each block, so the first
        # block is produced at counter value 1 -- same as NumPy's Philox.
        s.ctr[0] += 1
        if s.ctr[0] == 0:
            s.ctr[1] += 1
            if s.ctr[1] == 0:
                s.ctr[2] += 1
                if s.ctr[2] == 0:
                    s.ctr[3] += 1
        philox_block(s)
    cdef uint64_t out = s.buf[s.buf_pos]
    s.buf_pos += 1
    return out


cdef double philox_next_double(philox_state *s) noexcept nogil:
    return (philox_next64(s) >> 11) * (1.0 / 9007199254740992.0)


def raw_stream(master_seed, stream_id, n):
    """First ``n`` raw 64-bit words of the keyed stream (test hook)."""
    cdef long count = int(n)
    cdef uint64_t[::1] out = np.empty(count, dtype=np.uint64)
    cdef philox_state s
    cdef long i
    philox_init(&s, <uint64_t> int(master_seed), <uint64_t> int(stream_id))
    for i in range(count):
        out[i] = philox_next64(&s)
    return np.asarray(out)


def simulate_block(double mu, double t, double rho_corr, int family,
                   double w_rho, double w_c,
                   uint64_t master_seed, long rep_start, long rep_end,
                   long n_cells, double[::1] out_loss,
                   double[::1] out_pair, bint store_pair):
    """Simulate replications [rep_start, rep_end) of the N-cell loss.

    Writes each bank loss into ``out_loss[rep - rep_start]``; when
    ``store_pair`` is set, the first two cell losses of every replication go
    to ``out_pair[2 (rep - rep_start) + (0, 1)]``.  Replications whose
    log-loss exceeds the double-precision exp guard are flagged with NaN and
    counted in the return value.

    family 0 = standard Gaussian severities, 1 = Weibull(w_rho, w_c).
    """
    cdef philox_state s
    cdef long r, i
    cdef double u, x, z, y, acc, f
    cdef double sf = sqrt(rho_corr)
    cdef double sx = sqrt(1.0 - rho_corr)
    cdef double inv_rho = 0.0
    cdef bint corr = rho_corr > 0.0
    cdef bint bad
    cdef long n_overflow = 0
    if family == 1:
        inv_rho = 1.0 / w_rho
    with nogil:
        for r in range(rep_start, rep_end):
            philox_init(&s, master_seed, <uint64_t> r)
            # The first draw always belongs to the common factor, so
            # correlated and independent runs share severity noise.
            u = philox_next_double(&s)
            if u < U_FLOOR:
                u = U_FLOOR
            f = ndtri(u) if corr else 0.0
            acc = 0.0
            bad = False
            for i in range(n_cells):
                u = philox_next_double(&s)
                if u < U_FLOOR:
                    u = U_FLOOR
                if family == 0:
                    x = ndtri(u)
                else:
                    x = pow(-log1p(-u) / w_c, inv_rho)
                z = mu + t * (sf * f + sx * x)
                if z > EXP_GUARD:
                    bad = True
                    break
                y = exp(z)
                acc += y
                if store_pair and i < 2:
                    out_pair[2 * (r - rep_start) + i] = y
            if bad:
                n_overflow += 1
                out_loss[r - rep_start] = NAN
                if store_pair:
                    out_pair[2 * (r - rep_start)] = NAN
                    out_pair[2 * (r - rep_start) + 1] = NAN
            else:
                out_loss[r - rep_start] = acc
    return n_overflow
