"""Pure-Python/NumPy fallbacks for the compiled kernels in ``_kernels.pyx``.

Both implementations must produce identical results; the test suite runs the
same checks against each.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def stn_close(D: np.ndarray, n: int, j: int, i: int, w, inf) -> bool:
    """Insert edge j -> i with weight ``w`` into the all-pairs matrix ``D``.

    Returns False (leaving ``D`` untouched) if the edge closes a negative cycle.
    Row ``i`` and column ``j`` cannot change during the update, so it is done in
    place.
    """
    back = D[i, j]
    if back < inf and back + w < 0:
        return False
    if not w < D[j, i]:
        return True
    rows = np.flatnonzero(D[:n, j] < inf)
    cols = np.flatnonzero(D[i, :n] < inf)
    if rows.size == 0 or cols.size == 0:
        return True
    cand = D[rows, j][:, None] + (D[i, cols] + w)[None, :]
    block = np.ix_(rows, cols)
    D[block] = np.minimum(D[block], cand)
    return True


def relaxed_fixpoint(
    pre_ptr: np.ndarray,
    pre_idx: np.ndarray,
    add_ptr: np.ndarray,
    add_idx: np.ndarray,
    cost: np.ndarray,
    sup: np.ndarray,
    inf: int,
) -> None:
    """Additive-cost reachability by repeated sweeps over unit-cost events.

    ``cost`` holds 0 for initially true facts and ``inf`` otherwise; ``sup``
    receives the best supporter (event index) of each reached fact.
    """
    pp = pre_ptr.tolist()
    pi = pre_idx.tolist()
    ap = add_ptr.tolist()
    ai = add_idx.tolist()
    c = cost.tolist()
    s = sup.tolist()
    n_events = len(pp) - 1
    changed = True
    while changed:
        changed = False
        for e in range(n_events):
            total = 1
            for k in range(pp[e], pp[e + 1]):
                v = c[pi[k]]
                if v >= inf:
                    total = -1
                    break
                total += v
            if total < 0:
                continue
            for k in range(ap[e], ap[e + 1]):
                f = ai[k]
                if total < c[f]:
                    c[f] = total
                    s[f] = e
                    changed = True
    cost[:] = c
    sup[:] = s
