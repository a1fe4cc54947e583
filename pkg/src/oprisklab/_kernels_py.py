"""Pure NumPy implementation of the Monte Carlo kernel.

Mirrors :mod:`oprisklab._kernels` draw for draw: each replication consumes
the uniform stream of ``Philox(key=[master_seed, rep])`` in the same order
(one draw for the common factor, then one per cell), applies the same
inverse transforms and the same overflow guard.  The uniform draws and all
pre-exponential quantities are bit-identical to the compiled kernel; final
cell losses can differ by an ulp or two because NumPy's vectorized ``exp``
rounds differently from libm, and the bank-loss sum additionally differs in
the last ulps because NumPy sums pairwise while the compiled loop
accumulates sequentially.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_U_FLOOR = 2.0**-53
_EXP_GUARD = 709.0


def raw_stream(master_seed: int, stream_id: int, n: int) -> np.ndarray:
    """First ``n`` raw 64-bit words of the keyed stream (test hook)."""
    bits = np.random.Philox(key=np.array([master_seed, stream_id], dtype=np.uint64))
    return bits.random_raw(n)


def simulate_block(
    mu: float,
    t: float,
    rho_corr: float,
    family: int,
    w_rho: float,
    w_c: float,
    master_seed: int,
    rep_start: int,
    rep_end: int,
    n_cells: int,
    out_loss: np.ndarray,
    out_pair: np.ndarray,
    store_pair: bool,
) -> int:
    """See :func:`oprisklab._kernels.simulate_block`."""
    sf = np.sqrt(rho_corr)
    sx = np.sqrt(1.0 - rho_corr)
    corr = rho_corr > 0.0
    n_overflow = 0
    for r in range(rep_start, rep_end):
        gen = np.random.Generator(np.random.Philox(key=np.array([master_seed, r], dtype=np.uint64)))
        u = gen.random(n_cells + 1)
        np.maximum(u, _U_FLOOR, out=u)
        f = float(ndtri(u[0])) if corr else 0.0
        if family == 0:
            x = ndtri(u[1:])
        else:
            x = (-np.log1p(-u[1:]) / w_c) ** (1.0 / w_rho)
        z = mu + t * (sf * f + sx * x)
        k = r - rep_start
        if np.any(z > _EXP_GUARD):
            n_overflow += 1
            out_loss[k] = np.nan
            if store_pair:
                out_pair[2 * k] = np.nan
                out_pair[2 * k + 1] = np.nan
            continue
        y = np.exp(z)
        out_loss[k] = y.sum()
        if store_pair:
            out_pair[2 * k] = y[0]
            out_pair[2 * k + 1] = y[1]
    return n_overflow
