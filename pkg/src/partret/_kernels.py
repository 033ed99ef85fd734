"""Compiled inner loops: batched backward elimination and the pair scan.

Each subset (or each leading pair variable) is handled independently and
writes only to its own output slots, so results do not depend on the number
of threads.
"""
import numpy as np
from numba import config, njit, prange

# the bundled TBB is too old for numba; skip probing it
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

# cell spaces up to this size use dense accumulators, larger ones sort keys
DENSE_LIMIT = 1 << 15

STOP_SINGLE = 0
STOP_RULE = 1

# relative tolerance under which two drop scores count as tied
TIE_RTOL = 1e-12


@njit(cache=True)
def _single_I(xt, y, ybar, v, r):
    n = y.shape[0]
    cnt = np.zeros(r)
    W = np.zeros(r)
    for i in range(n):
        c = xt[v, i]
        cnt[c] += 1.0
        W[c] += y[i]
    s = 0.0
    for c in range(r):
        a = W[c] - cnt[c] * ybar
        s += a * a
    return s / n


@njit(cache=True)
def _dense_step(xt, y, ybar, vars_, ar, k, dvals):
    """Fill dvals[:k] with drop scores; return I of the k-variable partition."""
    n = y.shape[0]
    strides = np.empty(k, np.int64)
    tot = 1
    for j in range(k - 1, -1, -1):
        strides[j] = tot
        tot *= ar[j]
    cnt = np.zeros(tot)
    W = np.zeros(tot)
    for i in range(n):
        key = 0
        for j in range(k):
            key += xt[vars_[j], i] * strides[j]
        cnt[key] += 1.0
        W[key] += y[i]
    a = np.empty(tot)
    ifine = 0.0
    for c in range(tot):
        a[c] = W[c] - cnt[c] * ybar
        ifine += a[c] * a[c]
    ifine /= n
    gsum = np.empty(tot)
    gsq = np.empty(tot)
    for j in range(k):
        st = strides[j]
        blk = st * ar[j]
        ncoarse = tot // ar[j]
        for c in range(ncoarse):
            gsum[c] = 0.0
            gsq[c] = 0.0
        for c in range(tot):
            if cnt[c] == 0.0:
                continue
            ck = (c // blk) * st + c % st
            gsum[ck] += a[c]
            gsq[ck] += a[c] * a[c]
        acc = 0.0
        for c in range(ncoarse):
            acc += gsum[c] * gsum[c] - gsq[c]
        dvals[j] = -acc / (2.0 * n)
    return ifine


@njit(cache=True)
def _sorted_step(xt, y, ybar, vars_, ar, k, dvals):
    n = y.shape[0]
    strides = np.empty(k, np.int64)
    tot = 1
    for j in range(k - 1, -1, -1):
        strides[j] = tot
        tot *= ar[j]
    keys = np.zeros(n, np.int64)
    for i in range(n):
        key = 0
        for j in range(k):
            key += xt[vars_[j], i] * strides[j]
        keys[i] = key
    order = np.argsort(keys, kind="mergesort")
    gkeys = np.empty(n, np.int64)
    ga = np.empty(n)
    g = -1
    prev = -1
    for t in range(n):
        i = order[t]
        if g < 0 or keys[i] != prev:
            g += 1
            gkeys[g] = keys[i]
            ga[g] = 0.0
            prev = keys[i]
        ga[g] += y[i] - ybar
    ng = g + 1
    ifine = 0.0
    for c in range(ng):
        ifine += ga[c] * ga[c]
    ifine /= n
    ckeys = np.empty(ng, np.int64)
    for j in range(k):
        st = strides[j]
        blk = st * ar[j]
        for c in range(ng):
            ckeys[c] = (gkeys[c] // blk) * st + gkeys[c] % st
        corder = np.argsort(ckeys[:ng], kind="mergesort")
        acc = 0.0
        s = 0.0
        sq = 0.0
        for t in range(ng):
            c = corder[t]
            if t > 0 and ckeys[c] != ckeys[corder[t - 1]]:
                acc += s * s - sq
                s = 0.0
                sq = 0.0
            s += ga[c]
            sq += ga[c] * ga[c]
        acc += s * s - sq
        dvals[j] = -acc / (2.0 * n)
    return ifine


@njit(cache=True)
def eliminate_one(xt, arity, y, ybar, subset, thresholds, keep):
    """Backward elimination of one sorted subset.

    ``keep`` (bool, len m) receives the retained positions.  Returns
    (stopping I, stop reason, number of drops).
    """
    m = subset.shape[0]
    vars_ = subset.copy()
    ar = np.empty(m, np.int64)
    pos = np.arange(m)
    for j in range(m):
        ar[j] = arity[vars_[j]]
        keep[j] = False
    dvals = np.empty(m)
    k = m
    t = 0
    nth = thresholds.shape[0]
    while True:
        if k == 1:
            stop_i = _single_I(xt, y, ybar, vars_[0], ar[0])
            reason = STOP_SINGLE
            break
        tot = 1
        big = False
        for j in range(k):
            if tot > DENSE_LIMIT // ar[j]:
                big = True
            tot *= ar[j]
        if big:
            ifine = _sorted_step(xt, y, ybar, vars_, ar, k, dvals)
        else:
            ifine = _dense_step(xt, y, ybar, vars_, ar, k, dvals)
        c = thresholds[t] if t < nth else thresholds[nth - 1]
        fire = True
        dmin = dvals[0]
        for j in range(k):
            if not dvals[j] > c:
                fire = False
            if dvals[j] < dmin:
                dmin = dvals[j]
        if fire:
            stop_i = ifine
            reason = STOP_RULE
            break
        tol = TIE_RTOL * (1.0 + abs(ifine))
        drop = 0
        for j in range(k):
            if dvals[j] <= dmin + tol:
                drop = j
                break
        for j in range(drop, k - 1):
            vars_[j] = vars_[j + 1]
            ar[j] = ar[j + 1]
            pos[j] = pos[j + 1]
        k -= 1
        t += 1
    for j in range(k):
        keep[pos[j]] = True
    return stop_i, reason, t


@njit(parallel=True, cache=True)
def eliminate_batch(xt, arity, y, ybar, subsets, thresholds, keep, stop_i, reasons, ndrops):
    B = subsets.shape[0]
    for b in prange(B):
        s_i, r, t = eliminate_one(xt, arity, y, ybar, subsets[b], thresholds, keep[b])
        stop_i[b] = s_i
        reasons[b] = r
        ndrops[b] = t


@njit(parallel=True, cache=True)
def pair_scan_kernel(xt, arity, y, ybar, vars_, out):
    """I for every pair (vars_[p], vars_[q]), p < q, in row-major pair order."""
    V = vars_.shape[0]
    n = y.shape[0]
    maxr = 0
    for p in range(V):
        if arity[vars_[p]] > maxr:
            maxr = arity[vars_[p]]
    for p in prange(V - 1):
        a = vars_[p]
        ra = arity[a]
        base = p * V - (p * (p + 1)) // 2
        cnt = np.empty(ra * maxr)
        W = np.empty(ra * maxr)
        for q in range(p + 1, V):
            b = vars_[q]
            rb = arity[b]
            ncell = ra * rb
            for c in range(ncell):
                cnt[c] = 0.0
                W[c] = 0.0
            for i in range(n):
                key = xt[a, i] * rb + xt[b, i]
                cnt[key] += 1.0
                W[key] += y[i]
            s = 0.0
            for c in range(ncell):
                d = W[c] - cnt[c] * ybar
                s += d * d
            out[base + q - p - 1] = s / n
