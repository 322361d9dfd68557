"""Transportation-simplex kernel (dense, small to mid-size alphabets).

Primal basis is a spanning tree on the bipartite row/column graph with
exactly ``m + n - 1`` cells (zero-valued cells allowed), initialised by the
north-west corner rule. Potentials come from the tree; the entering cell is
the most negative reduced cost (Bland's rule after a run of degenerate
pivots).
"""
import numpy as np

from ._accel import njit

ZERO_MASS = 1e-15


@njit
def _tree_potentials(bi, bj, C, mm, nn, u, v):
    nb = bi.shape[0]
    known_r = np.zeros(mm, dtype=np.bool_)
    known_c = np.zeros(nn, dtype=np.bool_)
    known_r[0] = True
    u[0] = 0.0
    remaining = nb
    done = np.zeros(nb, dtype=np.bool_)
    # spanning tree: repeated sweeps terminate in at most nb passes
    for _ in range(nb + 1):
        if remaining == 0:
            break
        for k in range(nb):
            if done[k]:
                continue
            i = bi[k]
            j = bj[k]
            if known_r[i]:
                v[j] = C[i, j] - u[i]
                known_c[j] = True
                done[k] = True
                remaining -= 1
            elif known_c[j]:
                u[i] = C[i, j] - v[j]
                known_r[i] = True
                done[k] = True
                remaining -= 1


@njit
def _tree_path(bi, bj, mm, nn, start_col, target_row, path):
    """Edges (basis indices) on the tree path from column node to row node.

    Returned in order walking back from ``target_row``; count is returned.
    """
    N = mm + nn
    nb = bi.shape[0]
    parent_edge = np.full(N, -1, dtype=np.int64)
    seen = np.zeros(N, dtype=np.bool_)
    queue = np.empty(N, dtype=np.int64)
    head = 0
    tail = 0
    s = mm + start_col
    queue[tail] = s
    tail += 1
    seen[s] = True
    while head < tail:
        node = queue[head]
        head += 1
        if node == target_row:
            break
        for k in range(nb):
            a = bi[k]
            b = mm + bj[k]
            if a == node and not seen[b]:
                seen[b] = True
                parent_edge[b] = k
                queue[tail] = b
                tail += 1
            elif b == node and not seen[a]:
                seen[a] = True
                parent_edge[a] = k
                queue[tail] = a
                tail += 1
    count = 0
    node = target_row
    while node != s:
        k = parent_edge[node]
        path[count] = k
        count += 1
        if node < mm:
            node = mm + bj[k]
        else:
            node = bi[k]
    return count


@njit
def _solve_balanced(a, b, C, tol, max_iter):
    mm = a.shape[0]
    nn = b.shape[0]
    nb = mm + nn - 1
    bi = np.empty(nb, dtype=np.int64)
    bj = np.empty(nb, dtype=np.int64)
    bx = np.empty(nb, dtype=np.float64)
    s = a.copy()
    d = b.copy()
    i = 0
    j = 0
    for k in range(nb):
        x = min(s[i], d[j])
        bi[k] = i
        bj[k] = j
        bx[k] = max(x, 0.0)
        s[i] -= x
        d[j] -= x
        if i == mm - 1:
            j += 1
        elif j == nn - 1:
            i += 1
        elif s[i] <= d[j]:
            i += 1
        else:
            j += 1

    u = np.zeros(mm)
    v = np.zeros(nn)
    path = np.empty(nb, dtype=np.int64)
    status = 1
    degenerate_run = 0
    for _ in range(max_iter):
        _tree_potentials(bi, bj, C, mm, nn, u, v)
        best = -tol
        ei = -1
        ej = -1
        bland = degenerate_run > mm + nn
        for r in range(mm):
            for c in range(nn):
                red = C[r, c] - u[r] - v[c]
                if red < best:
                    best = red
                    ei = r
                    ej = c
                    if bland:
                        break
            if bland and ei >= 0:
                break
        if ei < 0:
            status = 0
            break
        cnt = _tree_path(bi, bj, mm, nn, ej, ei, path)
        theta = np.inf
        leave = -1
        for t in range(0, cnt, 2):
            k = path[t]
            if bx[k] < theta:
                theta = bx[k]
                leave = k
        for t in range(cnt):
            k = path[t]
            if t % 2 == 0:
                bx[k] -= theta
            else:
                bx[k] += theta
        bx[leave] = theta
        bi[leave] = ei
        bj[leave] = ej
        if theta <= 0.0:
            degenerate_run += 1
        else:
            degenerate_run = 0
    for k in range(nb):
        if bx[k] < 0.0:
            bx[k] = 0.0
    return bi, bj, bx, u, v, status


@njit
def transport_simplex(a, b, C, tol):
    """Exact OT between pmfs ``a`` and ``b`` with cost ``C``.

    Returns ``(value, plan, f, g, status)`` where ``f, g`` are dual
    potentials (``f_i + g_j <= C_ij``, tight on the plan's support) and
    ``status`` is 0 on optimality, 1 if the iteration cap was hit.
    """
    m = a.shape[0]
    n = b.shape[0]
    rows = np.flatnonzero(a > ZERO_MASS)
    cols = np.flatnonzero(b > ZERO_MASS)
    mm = rows.shape[0]
    nn = cols.shape[0]
    aa = a[rows].copy()
    bb = b[cols].copy()
    bb *= aa.sum() / bb.sum()
    Cs = np.empty((mm, nn))
    for r in range(mm):
        for c in range(nn):
            Cs[r, c] = C[rows[r], cols[c]]
    max_iter = 50 * (mm + nn) * (mm + nn) + 100
    bi, bj, bx, u, v, status = _solve_balanced(aa, bb, Cs, tol, max_iter)

    plan = np.zeros((m, n))
    value = 0.0
    for k in range(bi.shape[0]):
        r = rows[bi[k]]
        c = cols[bj[k]]
        plan[r, c] += bx[k]
        value += bx[k] * C[r, c]

    f = np.full(m, np.inf)
    g = np.full(n, np.inf)
    for r in range(mm):
        f[rows[r]] = u[r]
    for c in range(nn):
        g[cols[c]] = v[c]
    # dropped symbols: tightest feasible potential
    for r in range(m):
        if not np.isfinite(f[r]):
            best = np.inf
            for c in range(nn):
                val = C[r, cols[c]] - v[c]
                if val < best:
                    best = val
            f[r] = best
    for c in range(n):
        if not np.isfinite(g[c]):
            best = np.inf
            for r in range(m):
                val = C[r, c] - f[r]
                if val < best:
                    best = val
            g[c] = best
    return value, plan, f, g, status
