"""Hot per-round loops with a numba backend and a pure-numpy fallback.

Both backends produce bit-identical results: kept values are always
accumulated sequentially in ascending value order, which is also the order
a brute-force sort-and-slice would use.

Set ``SIRMSR_DISABLE_NUMBA=1`` before import to force the numpy path.
"""

from __future__ import annotations

import os

import numpy as np

ROLE_REGULAR = 0
ROLE_CURED = 1
ROLE_INFECTIOUS = 2

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def _env_disabled() -> bool:
    flag = os.environ.get("SIRMSR_DISABLE_NUMBA", "")
    return flag.strip().lower() in {"1", "true", "yes", "on"}


USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def _msr_round_loop(x, adj, deg, role, f, out):
    n = x.shape[0]
    order = np.argsort(x, kind="mergesort")
    for i in range(n):
        if role[i] == ROLE_INFECTIOUS:
            continue
        # cured agents drop their own value; -1 never matches
        me = i if role[i] == ROLE_REGULAR else -1
        count = deg[i] + 1 if me >= 0 else deg[i]
        lo = f[i]
        hi = count - f[i]
        if hi <= lo:
            return i
        rank = 0
        acc = 0.0
        row = adj[i]
        for p in range(n):
            j = order[p]
            if row[j] or j == me:
                if rank >= lo:
                    acc += x[j]
                rank += 1
                if rank >= hi:
                    break
        out[i] = acc / (hi - lo)
    return -1


def _summarize_loop(x, accounted):
    neg = 0
    lo = np.inf
    hi = -np.inf
    cnt = 0
    for i in range(x.shape[0]):
        v = x[i]
        if v < 0.0:
            neg += 1
        if accounted[i]:
            cnt += 1
            if v < lo:
                lo = v
            if v > hi:
                hi = v
    return neg, lo, hi, cnt


def msr_round_numpy(x, adj, deg, role, f, out):
    """Vectorised MSR round; same contract as the numba kernel.

    Returns the first agent whose kept set would be empty, or -1.
    """
    n = x.shape[0]
    active = role != ROLE_INFECTIOUS
    own = role == ROLE_REGULAR
    count = deg + own.astype(np.int64)
    lo = f.astype(np.int64)
    hi = count - lo
    bad = np.flatnonzero(active & (hi <= lo))
    if bad.size:
        return int(bad[0])
    rows = np.flatnonzero(active)
    if rows.size == 0:
        return -1
    order = np.argsort(x, kind="stable")
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    xs = x[order]
    member = adj[np.ix_(rows, order)]
    own_rows = own[rows]
    member[np.flatnonzero(own_rows), pos[rows[own_rows]]] = True
    rank = np.cumsum(member, axis=1)
    keep = member & (rank > lo[rows, None]) & (rank <= hi[rows, None])
    sums = np.cumsum(np.where(keep, xs[None, :], 0.0), axis=1)[:, -1]
    out[rows] = sums / (hi[rows] - lo[rows])
    return -1


def summarize_numpy(x, accounted):
    neg = int(np.count_nonzero(x < 0.0))
    vals = x[accounted]
    if vals.size == 0:
        return neg, np.inf, -np.inf, 0
    return neg, float(vals.min()), float(vals.max()), int(vals.size)


if HAVE_NUMBA:
    msr_round_numba = numba.njit(cache=True, nogil=True)(_msr_round_loop)
    summarize_numba = numba.njit(cache=True, nogil=True)(_summarize_loop)
else:  # pragma: no cover
    msr_round_numba = None
    summarize_numba = None


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def msr_round(x, adj, deg, role, f, out) -> int:
    """One synchronous MSR round for every non-infectious agent.

    ``out[i]`` is written for regular and cured agents only.  ``adj[i, j]``
    is true when ``j`` is an in-neighbour of ``i``.  Cured agents exclude
    their own value.  Returns the first agent with an empty kept set, or -1.
    """
    if USE_NUMBA:
        return int(msr_round_numba(x, adj, deg, role, f, out))
    return msr_round_numpy(x, adj, deg, role, f, out)


def summarize(x, accounted):
    """(negative count, min, max, size) with min/max over ``accounted``."""
    if USE_NUMBA:
        neg, lo, hi, cnt = summarize_numba(x, accounted)
        return int(neg), float(lo), float(hi), int(cnt)
    return summarize_numpy(x, accounted)
