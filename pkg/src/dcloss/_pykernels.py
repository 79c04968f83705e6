"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Same signatures, same outputs. Used when the extension is not built.
"""

import numpy as np


def erasure_windows(u, pi_start, p_gb, p_bb):
    u = np.asarray(u, dtype=np.float64)
    rows, n = u.shape
    if n == 0:
        return np.zeros((rows, 0), dtype=np.uint8)
    # Per slot: next state if the previous slot was good / bad.
    if_good = u < p_gb
    if_bad = u < p_bb
    first = u[:, 0] < pi_start
    if_good[:, 0] = first
    if_bad[:, 0] = first
    # Where both agree the state is forced ("reset"); otherwise the slot
    # either flips (good->bad, bad->good) or copies the previous state.
    reset = if_good == if_bad
    flip = if_good & ~if_bad
    idx = np.arange(n)
    last_reset = np.maximum.accumulate(np.where(reset, idx, 0), axis=1)
    flips = np.cumsum(flip, axis=1, dtype=np.int64)
    base = np.take_along_axis(if_good, last_reset, axis=1)
    parity = (flips - np.take_along_axis(flips, last_reset, axis=1)) & 1
    return (base ^ parity.astype(bool)).astype(np.uint8)


def batch_rank(mats, log, exp, order, binary):
    a = np.asarray(mats).astype(np.int64)
    log = np.asarray(log, dtype=np.int64)
    exp = np.asarray(exp, dtype=np.int64)
    batch, n, k = a.shape
    q1 = order - 1
    rank = np.zeros(batch, dtype=np.int32)
    used = np.zeros((batch, n), dtype=bool)
    rows = np.arange(batch)
    for c in range(k):
        cand = (a[:, :, c] != 0) & ~used
        has = cand.any(axis=1)
        if not has.any():
            continue
        b = rows[has]
        piv = cand[has].argmax(axis=1)
        prow = a[b, piv, :]                        # (m, k)
        lp = log[prow[:, c]]
        target = a[b][:, :, c]                     # (m, n)
        hit = (target != 0) & ~used[b]
        hit[np.arange(b.size), piv] = False
        f = np.where(hit, log[target] - lp[:, None] + q1, 0)
        nz = prow != 0
        prod = exp[f[:, :, None] + log[prow][:, None, :]]
        prod = np.where(hit[:, :, None] & nz[:, None, :], prod, 0)
        sub = a[b]
        if binary:
            sub = sub ^ prod
        else:
            sub = (sub - prod) % order
        a[b] = sub
        used[b, piv] = True
        rank[b] += 1
    return rank
