"""Numba kernels: the hot loops behind grid fills and the Fisher simulation.

Each work item owns one stream and a disjoint, statically determined set of
output cells, so every kernel is bit-identical for any worker-thread count.
"""

import math
import os

# Allow oversubscription so thread-invariance can be exercised on small hosts.
os.environ.setdefault("NUMBA_NUM_THREADS", str(max(8, os.cpu_count() or 1)))
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

import numba
import numpy as np
from numba import njit, prange

M1 = 2147483647
M2 = 2147462579
NORM = 1.0 / 2147483648.0
TWOPI = 2.0 * math.pi
HALFPI = 0.5 * math.pi


def max_threads() -> int:
    return numba.config.NUMBA_NUM_THREADS


def set_threads(n: int):
    numba.set_num_threads(min(max(1, n), max_threads()))


@njit(inline="always")
def _step(a0, a1, a2, b0, b1, b2):
    # one MRG31k3p step; returns the new state and the output in [1, m1]
    y1 = (4194304 * a1 + 129 * a2) % M1
    a2 = a1
    a1 = a0
    a0 = y1
    y2 = (32768 * b0 + 32769 * b2) % M2
    b2 = b1
    b1 = b0
    b0 = y2
    z = y1 - y2
    if z <= 0:
        z += M1
    return a0, a1, a2, b0, b1, b2, z


@njit(parallel=True, cache=True)
def fill_real(cur, out, nrow, ncol, npad, g0, g1n, mode, rate):
    """Uniform (mode 0) or exponential (mode 1) fill of a strided matrix.

    Work item (i, j) owns cells {(r, c): r = i mod g0, c = j mod g1n} and
    draws from stream i + g0*j (the column-major uniform-kernel ordinal).
    """
    nitems = g0 * g1n
    for w in prange(nitems):
        i = w % g0
        j = w // g0
        a0 = cur[w, 0]
        a1 = cur[w, 1]
        a2 = cur[w, 2]
        b0 = cur[w, 3]
        b1 = cur[w, 4]
        b2 = cur[w, 5]
        for r in range(i, nrow, g0):
            for c in range(j, ncol, g1n):
                a0, a1, a2, b0, b1, b2, z = _step(a0, a1, a2, b0, b1, b2)
                u = z * NORM
                if mode == 0:
                    out[r * npad + c] = u
                else:
                    out[r * npad + c] = -math.log1p(-u) / rate
        cur[w, 0] = a0
        cur[w, 1] = a1
        cur[w, 2] = a2
        cur[w, 3] = b0
        cur[w, 4] = b1
        cur[w, 5] = b2


@njit(parallel=True, cache=True)
def fill_integer(cur, out, nrow, ncol, npad, g0, g1n):
    """Raw integer fill: outputs in [1, 2147483647], layout as fill_real."""
    nitems = g0 * g1n
    for w in prange(nitems):
        i = w % g0
        j = w // g0
        a0 = cur[w, 0]
        a1 = cur[w, 1]
        a2 = cur[w, 2]
        b0 = cur[w, 3]
        b1 = cur[w, 4]
        b2 = cur[w, 5]
        for r in range(i, nrow, g0):
            for c in range(j, ncol, g1n):
                a0, a1, a2, b0, b1, b2, z = _step(a0, a1, a2, b0, b1, b2)
                out[r * npad + c] = z
        cur[w, 0] = a0
        cur[w, 1] = a1
        cur[w, 2] = a2
        cur[w, 3] = b0
        cur[w, 4] = b1
        cur[w, 5] = b2


@njit(parallel=True, cache=True)
def fill_normal(cur, out, nrow, ncol, npad, g0, g1n):
    """Box-Muller fill with paired lanes.

    Lanes (j, j+1) for even j form a pair sharing one work-item row index i.
    Per iteration each lane draws from its own stream (row-major ordinal
    i*g1n + j); lane 0 supplies u1, lane 1 supplies u2, and the pair writes

        cell(j)   = sqrt(-2 log u1) * cos(2 pi u2)
        cell(j+1) = sqrt(-2 log u1) * cos(2 pi u2 - pi/2)

    When the partner lane runs out of columns both streams still advance and
    the partner value is discarded.
    """
    npairs = g0 * (g1n // 2)
    half = g1n // 2
    for p in prange(npairs):
        i = p // half
        j0 = 2 * (p % half)
        s0 = i * g1n + j0
        s1 = s0 + 1
        a0 = cur[s0, 0]
        a1 = cur[s0, 1]
        a2 = cur[s0, 2]
        b0 = cur[s0, 3]
        b1 = cur[s0, 4]
        b2 = cur[s0, 5]
        c0 = cur[s1, 0]
        c1 = cur[s1, 1]
        c2 = cur[s1, 2]
        d0 = cur[s1, 3]
        d1 = cur[s1, 4]
        d2 = cur[s1, 5]
        for r in range(i, nrow, g0):
            ca = j0
            cb = j0 + 1
            while ca < ncol:
                a0, a1, a2, b0, b1, b2, z1 = _step(a0, a1, a2, b0, b1, b2)
                c0, c1, c2, d0, d1, d2, z2 = _step(c0, c1, c2, d0, d1, d2)
                u1 = z1 * NORM
                theta = TWOPI * NORM * z2
                radius = math.sqrt(-2.0 * math.log(u1))
                out[r * npad + ca] = radius * math.cos(theta)
                if cb < ncol:
                    out[r * npad + cb] = radius * math.cos(theta - HALFPI)
                ca += g1n
                cb += g1n
        cur[s0, 0] = a0
        cur[s0, 1] = a1
        cur[s0, 2] = a2
        cur[s0, 3] = b0
        cur[s0, 4] = b1
        cur[s0, 5] = b2
        cur[s1, 0] = c0
        cur[s1, 1] = c1
        cur[s1, 2] = c2
        cur[s1, 3] = d0
        cur[s1, 4] = d1
        cur[s1, 5] = d2


@njit(parallel=True, cache=True)
def fisher_replicates(cur, nrowt, ncolt, lf, threshold, reps, nitems, stats,
                      want_stats):
    """Monte Carlo replicates of the simulated Fisher test.

    Each work item runs `reps` replicates on its own stream: sample a table
    with the given margins by sequential conditional hypergeometric inversion
    (one uniform per free cell, (I-1)(J-1) per replicate), evaluate the
    minus-log-factorial statistic and compare it to the threshold.  Returns
    the total number of replicates at or below the threshold.
    """
    nr = nrowt.shape[0]
    nc = ncolt.shape[0]
    ntot = 0
    for l in range(nr):
        ntot += nrowt[l]
    counts = 0
    for w in prange(nitems):
        a0 = cur[w, 0]
        a1 = cur[w, 1]
        a2 = cur[w, 2]
        b0 = cur[w, 3]
        b1 = cur[w, 4]
        b2 = cur[w, 5]
        mat = np.empty((nr, nc), np.int64)
        jwork = np.empty(nc, np.int64)
        hits = 0
        for rep in range(reps):
            jc = ntot
            for m in range(nc - 1):
                jwork[m] = ncolt[m]
            for l in range(nr - 1):
                ia = nrowt[l]
                ic = jc
                jc -= ia
                for m in range(nc - 1):
                    idv = jwork[m]
                    ie = ic
                    ic -= idv
                    ib = ie - ia
                    ii = ib - idv
                    # always one uniform per free cell, even when forced
                    a0, a1, a2, b0, b1, b2, z = _step(a0, a1, a2, b0, b1, b2)
                    u = z * NORM
                    lo = ia + idv - ie
                    if lo < 0:
                        lo = 0
                    hi = ia if ia < idv else idv
                    if hi <= lo:
                        k = lo
                    else:
                        # start the CDF inversion near the mode, walk outward
                        k = int(ia * (idv / ie) + 0.5)
                        if k < lo:
                            k = lo
                        elif k > hi:
                            k = hi
                        base = lf[ia] + lf[ib] + lf[idv] + lf[ic] - lf[ie]
                        x = math.exp(
                            base - lf[k] - lf[idv - k] - lf[ia - k] - lf[ii + k]
                        )
                        if u > x:
                            acc = x
                            pu = x
                            pd = x
                            ku = k
                            kd = k
                            while True:
                                moved = False
                                if ku < hi:
                                    pu = pu * (idv - ku) * (ia - ku) / (
                                        (ku + 1.0) * (ii + ku + 1.0)
                                    )
                                    ku += 1
                                    acc += pu
                                    moved = True
                                    if u <= acc:
                                        k = ku
                                        break
                                if kd > lo:
                                    pd = pd * kd * (ii + kd) / (
                                        (idv - kd + 1.0) * (ia - kd + 1.0)
                                    )
                                    kd -= 1
                                    acc += pd
                                    moved = True
                                    if u <= acc:
                                        k = kd
                                        break
                                if not moved:
                                    # float round-off leftover; take an endpoint
                                    k = ku
                                    break
                    mat[l, m] = k
                    ia -= k
                    jwork[m] -= k
                mat[l, nc - 1] = ia
            rem = nrowt[nr - 1]
            for m in range(nc - 1):
                mat[nr - 1, m] = jwork[m]
                rem -= jwork[m]
            mat[nr - 1, nc - 1] = rem
            stat = 0.0
            for l in range(nr):
                for m in range(nc):
                    stat -= lf[mat[l, m]]
            if stat <= threshold:
                hits += 1
            if want_stats:
                stats[w * reps + rep] = stat
        counts += hits
        cur[w, 0] = a0
        cur[w, 1] = a1
        cur[w, 2] = a2
        cur[w, 3] = b0
        cur[w, 4] = b1
        cur[w, 5] = b2
    return counts


@njit(cache=True)
def rcont2_table(nrowt, ncolt, lf, state):
    """Sample one random table with the given margins from a 6-entry state.

    Mutates `state` in place; same inversion as fisher_replicates.  Exposed
    separately so the sampler can be tested against exact hypergeometric
    probabilities.
    """
    nr = nrowt.shape[0]
    nc = ncolt.shape[0]
    ntot = 0
    for l in range(nr):
        ntot += nrowt[l]
    mat = np.zeros((nr, nc), np.int64)
    jwork = np.empty(nc, np.int64)
    a0, a1, a2, b0, b1, b2 = (
        state[0], state[1], state[2], state[3], state[4], state[5],
    )
    if nr == 1:
        for m in range(nc):
            mat[0, m] = ncolt[m]
    elif nc == 1:
        for l in range(nr):
            mat[l, 0] = nrowt[l]
    else:
        jc = ntot
        for m in range(nc - 1):
            jwork[m] = ncolt[m]
        for l in range(nr - 1):
            ia = nrowt[l]
            ic = jc
            jc -= ia
            for m in range(nc - 1):
                idv = jwork[m]
                ie = ic
                ic -= idv
                ib = ie - ia
                ii = ib - idv
                a0, a1, a2, b0, b1, b2, z = _step(a0, a1, a2, b0, b1, b2)
                u = z * NORM
                lo = ia + idv - ie
                if lo < 0:
                    lo = 0
                hi = ia if ia < idv else idv
                if hi <= lo:
                    k = lo
                else:
                    k = int(ia * (idv / ie) + 0.5)
                    if k < lo:
                        k = lo
                    elif k > hi:
                        k = hi
                    base = lf[ia] + lf[ib] + lf[idv] + lf[ic] - lf[ie]
                    x = math.exp(
                        base - lf[k] - lf[idv - k] - lf[ia - k] - lf[ii + k]
                    )
                    if u > x:
                        acc = x
                        pu = x
                        pd = x
                        ku = k
                        kd = k
                        while True:
                            moved = False
                            if ku < hi:
                                pu = pu * (idv - ku) * (ia - ku) / (
                                    (ku + 1.0) * (ii + ku + 1.0)
                                )
                                ku += 1
                                acc += pu
                                moved = True
                                if u <= acc:
                                    k = ku
                                    break
                            if kd > lo:
                                pd = pd * kd * (ii + kd) / (
                                    (idv - kd + 1.0) * (ia - kd + 1.0)
                                )
                                kd -= 1
                                acc += pd
                                moved = True
                                if u <= acc:
                                    k = kd
                                    break
                            if not moved:
                                k = ku
                                break
                mat[l, m] = k
                ia -= k
                jwork[m] -= k
            mat[l, nc - 1] = ia
        rem = nrowt[nr - 1]
        for m in range(nc - 1):
            mat[nr - 1, m] = jwork[m]
            rem -= jwork[m]
        mat[nr - 1, nc - 1] = rem
    state[0] = a0
    state[1] = a1
    state[2] = a2
    state[3] = b0
    state[4] = b1
    state[5] = b2
    return mat
