"""Compiled inner loops for tour construction and local search.

Costs are always recomputed from coordinates (``xy``), so no kernel needs
an O(n^2) matrix. Tours are held as ``order``/``pos`` arrays.
"""

from __future__ import annotations

import numba
import numpy as np

_jit = numba.njit(cache=True, nogil=True)


@numba.njit(cache=True, inline="always")
def dist(xy, i, j):
    dx = xy[i, 0] - xy[j, 0]
    dy = xy[i, 1] - xy[j, 1]
    return np.int64(np.floor(np.sqrt(dx * dx + dy * dy) + 0.5))


@_jit
def cycle_cost(xy, order):
    n = order.shape[0]
    total = np.int64(0)
    for i in range(n):
        total += dist(xy, order[i], order[(i + 1) % n])
    return total


# ---------------------------------------------------------------- construction


@_jit
def nearest_neighbor_tour(xy, nbr, start, u, k):
    n = xy.shape[0]
    visited = np.zeros(n, dtype=np.bool_)
    order = np.empty(n, dtype=np.int64)
    cand = np.empty(k, dtype=np.int64)
    cand_d = np.empty(k, dtype=np.int64)
    cur = start
    visited[cur] = True
    order[0] = cur
    for step in range(1, n):
        want = min(k, n - step)
        m = 0
        for t in range(nbr.shape[1]):
            c = nbr[cur, t]
            if not visited[c]:
                cand[m] = c
                m += 1
                if m == want:
                    break
        if m < want:
            # neighbor list exhausted: exact scan, keeping (cost, index) order
            m = 0
            for c in range(n):
                if visited[c]:
                    continue
                dc = dist(xy, cur, c)
                if m < want:
                    p = m
                    m += 1
                elif dc < cand_d[m - 1]:
                    p = m - 1
                else:
                    continue
                while p > 0 and cand_d[p - 1] > dc:
                    cand[p] = cand[p - 1]
                    cand_d[p] = cand_d[p - 1]
                    p -= 1
                cand[p] = c
                cand_d[p] = dc
        pick = int(u[step] * m)
        if pick >= m:
            pick = m - 1
        cur = cand[pick]
        visited[cur] = True
        order[step] = cur
    return order


@_jit
def _find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@_jit
def greedy_tour(xy, edges, u, k):
    """Randomized greedy edge matching over ``edges`` (pre-sorted by cost).

    Returns a city order; fragments left when the edge list runs out are
    joined by nearest free endpoint.
    """
    n = xy.shape[0]
    m = edges.shape[0]
    deg = np.zeros(n, dtype=np.int64)
    parent = np.arange(n)
    adj = np.full((n, 2), -1, dtype=np.int64)
    dead = np.zeros(m, dtype=np.bool_)
    picks = np.empty(k, dtype=np.int64)
    added = 0
    head = 0
    draw = 0
    while added < n - 1 and head < m:
        want = 1 if added == 0 else k
        got = 0
        p = head
        while got < want and p < m:
            if not dead[p]:
                a = edges[p, 0]
                b = edges[p, 1]
                if deg[a] < 2 and deg[b] < 2 and _find(parent, a) != _find(parent, b):
                    picks[got] = p
                    got += 1
                else:
                    dead[p] = True
            p += 1
        if got == 0:
            break
        sel = int(u[draw] * got)
        draw += 1
        if sel >= got:
            sel = got - 1
        e = picks[sel]
        dead[e] = True
        a = edges[e, 0]
        b = edges[e, 1]
        adj[a, deg[a]] = b
        adj[b, deg[b]] = a
        deg[a] += 1
        deg[b] += 1
        parent[_find(parent, a)] = _find(parent, b)
        added += 1
        while head < m and dead[head]:
            head += 1
    while added < n - 1:
        a = -1
        for c in range(n):
            if deg[c] < 2:
                a = c
                break
        ra = _find(parent, a)
        best = -1
        best_d = np.iinfo(np.int64).max
        for c in range(n):
            if deg[c] < 2 and _find(parent, c) != ra:
                dc = dist(xy, a, c)
                if dc < best_d:
                    best_d = dc
                    best = c
        adj[a, deg[a]] = best
        adj[best, deg[best]] = a
        deg[a] += 1
        deg[best] += 1
        parent[ra] = _find(parent, best)
        added += 1
    # walk the Hamiltonian path from one of its ends
    start = 0
    for c in range(n):
        if deg[c] < 2:
            start = c
            break
    order = np.empty(n, dtype=np.int64)
    prev = -1
    cur = start
    for i in range(n):
        order[i] = cur
        nxt = adj[cur, 0]
        if nxt == prev or nxt == -1:
            nxt = adj[cur, 1]
        prev = cur
        cur = nxt
    return order


# ---------------------------------------------------------- k-opt reconnection


@_jit
def reconnect(order, pos, rem, add, k, out):
    """Apply a k-exchange if it yields one Hamiltonian cycle.

    ``rem`` holds k current tour edges, ``add`` k new edges. On success the
    new order is written to ``out`` and True is returned; ``order`` and
    ``pos`` are left untouched.
    """
    n = order.shape[0]
    p = np.empty(k, dtype=np.int64)
    for e in range(k):
        a = rem[e, 0]
        b = rem[e, 1]
        if order[(pos[a] + 1) % n] == b:
            p[e] = pos[a]
        elif order[(pos[b] + 1) % n] == a:
            p[e] = pos[b]
        else:
            return False
    ps = np.sort(p)
    for e in range(1, k):
        if ps[e] == ps[e - 1]:
            return False
    seg_start = np.empty(k, dtype=np.int64)
    seg_len = np.empty(k, dtype=np.int64)
    ep_city = np.empty(2 * k, dtype=np.int64)
    for s in range(k):
        a = (ps[s] + 1) % n
        b = ps[(s + 1) % k]
        seg_start[s] = a
        seg_len[s] = (b - a) % n + 1
        ep_city[2 * s] = order[a]
        ep_city[2 * s + 1] = order[b]
    used = np.zeros(k, dtype=np.bool_)
    seen = np.zeros(k, dtype=np.bool_)
    seq_seg = np.empty(k, dtype=np.int64)
    seq_rev = np.empty(k, dtype=np.bool_)
    seq_seg[0] = 0
    seq_rev[0] = False
    seen[0] = True
    exit_city = ep_city[1]
    for step in range(1, k + 1):
        nxt = -1
        for e in range(k):
            if used[e]:
                continue
            if add[e, 0] == exit_city:
                nxt = add[e, 1]
            elif add[e, 1] == exit_city:
                nxt = add[e, 0]
            else:
                continue
            used[e] = True
            break
        if nxt < 0:
            return False
        if step == k:
            if nxt != ep_city[0]:
                return False
            break
        hit = -1
        for q in range(2 * k):
            if ep_city[q] == nxt and not seen[q // 2]:
                hit = q
                break
        if hit < 0:
            return False
        s = hit // 2
        seen[s] = True
        seq_seg[step] = s
        if hit % 2 == 0:
            seq_rev[step] = False
            exit_city = ep_city[2 * s + 1]
        else:
            seq_rev[step] = True
            exit_city = ep_city[2 * s]
    w = 0
    for t in range(k):
        s = seq_seg[t]
        a = seg_start[s]
        ln = seg_len[s]
        if seq_rev[t]:
            for i in range(ln):
                out[w] = order[(a + ln - 1 - i) % n]
                w += 1
        else:
            for i in range(ln):
                out[w] = order[(a + i) % n]
                w += 1
    return True


@_jit
def _tour_nbrs(order, pos, c):
    n = order.shape[0]
    a = order[(pos[c] + 1) % n]
    b = order[(pos[c] - 1 + n) % n]
    if a < b:
        return a, b
    return b, a


@_jit
def _same_edge(a, b, c, d):
    return (a == c and b == d) or (a == d and b == c)


@_jit
def _kopt_from(xy, nbr, order, pos, t1, max_k, rem, add, out, touched):
    """First improving 2- or 3-exchange starting at ``t1``; returns its gain."""
    for side in range(2):
        na, nb = _tour_nbrs(order, pos, t1)
        t2 = na if side == 0 else nb
        g0 = dist(xy, t1, t2)
        for i3 in range(nbr.shape[1]):
            t3 = nbr[t2, i3]
            g1 = g0 - dist(xy, t2, t3)
            if g1 <= 0:
                break
            if t3 == t1:
                continue
            x, y = _tour_nbrs(order, pos, t2)
            if t3 == x or t3 == y:
                continue
            u3, v3 = _tour_nbrs(order, pos, t3)
            for s4 in range(2):
                t4 = u3 if s4 == 0 else v3
                d34 = dist(xy, t3, t4)
                if t4 != t1:
                    gain = g1 + d34 - dist(xy, t4, t1)
                    if gain > 0:
                        rem[0, 0] = t1
                        rem[0, 1] = t2
                        rem[1, 0] = t3
                        rem[1, 1] = t4
                        add[0, 0] = t2
                        add[0, 1] = t3
                        add[1, 0] = t4
                        add[1, 1] = t1
                        if reconnect(order, pos, rem, add, 2, out):
                            touched[0] = t1
                            touched[1] = t2
                            touched[2] = t3
                            touched[3] = t4
                            touched[4] = -1
                            touched[5] = -1
                            return gain
                if max_k < 3:
                    continue
                g2 = g1 + d34
                for i5 in range(nbr.shape[1]):
                    t5 = nbr[t4, i5]
                    g2b = g2 - dist(xy, t4, t5)
                    if g2b <= 0:
                        break
                    if t5 == t3 or t5 == t1:
                        continue
                    x, y = _tour_nbrs(order, pos, t4)
                    if t5 == x or t5 == y:
                        continue
                    u5, v5 = _tour_nbrs(order, pos, t5)
                    for s6 in range(2):
                        t6 = u5 if s6 == 0 else v5
                        if t6 == t1:
                            continue
                        if _same_edge(t5, t6, t1, t2) or _same_edge(t5, t6, t3, t4):
                            continue
                        gain = g2b + dist(xy, t5, t6) - dist(xy, t6, t1)
                        if gain <= 0:
                            continue
                        rem[0, 0] = t1
                        rem[0, 1] = t2
                        rem[1, 0] = t3
                        rem[1, 1] = t4
                        rem[2, 0] = t5
                        rem[2, 1] = t6
                        add[0, 0] = t2
                        add[0, 1] = t3
                        add[1, 0] = t4
                        add[1, 1] = t5
                        add[2, 0] = t6
                        add[2, 1] = t1
                        if reconnect(order, pos, rem, add, 3, out):
                            touched[0] = t1
                            touched[1] = t2
                            touched[2] = t3
                            touched[3] = t4
                            touched[4] = t5
                            touched[5] = t6
                            return gain
    return 0


@_jit
def kopt_descent(xy, nbr, order, max_k, use_dlb):
    """First-improvement 2-opt (max_k=2) or 3-opt (max_k=3) descent.

    With ``use_dlb`` cities are processed from a don't-look-bit queue
    (initially 0..n-1); otherwise every improvement restarts the scan at
    city 0. Returns the improved order and the number of moves applied.
    """
    n = order.shape[0]
    order = order.copy()
    pos = np.empty(n, dtype=np.int64)
    for i in range(n):
        pos[order[i]] = i
    rem = np.empty((3, 2), dtype=np.int64)
    add = np.empty((3, 2), dtype=np.int64)
    out = np.empty(n, dtype=np.int64)
    touched = np.empty(6, dtype=np.int64)
    moves = 0
    if not use_dlb:
        t1 = 0
        while t1 < n:
            if _kopt_from(xy, nbr, order, pos, t1, max_k, rem, add, out, touched) > 0:
                order[:] = out
                for i in range(n):
                    pos[order[i]] = i
                moves += 1
                t1 = 0
            else:
                t1 += 1
        return order, moves
    queue = np.empty(n, dtype=np.int64)
    inq = np.ones(n, dtype=np.bool_)
    for i in range(n):
        queue[i] = i
    qh = 0
    qlen = n
    while qlen > 0:
        t1 = queue[qh]
        qh = (qh + 1) % n
        qlen -= 1
        inq[t1] = False
        while _kopt_from(xy, nbr, order, pos, t1, max_k, rem, add, out, touched) > 0:
            order[:] = out
            for i in range(n):
                pos[order[i]] = i
            moves += 1
            for j in range(6):
                c = touched[j]
                if c >= 0 and c != t1 and not inq[c]:
                    queue[(qh + qlen) % n] = c
                    qlen += 1
                    inq[c] = True
    return order, moves


# -------------------------------------------------------------- Lin-Kernighan


@_jit
def _succ(order, pos, rev, c):
    n = order.shape[0]
    if rev[0] == 0:
        return order[(pos[c] + 1) % n]
    return order[(pos[c] - 1 + n) % n]


@_jit
def _pred(order, pos, rev, c):
    n = order.shape[0]
    if rev[0] == 0:
        return order[(pos[c] - 1 + n) % n]
    return order[(pos[c] + 1) % n]


@_jit
def _flip(order, pos, rev, a, b):
    """Reverse the oriented path a -> ... -> b."""
    n = order.shape[0]
    if rev[0] == 0:
        i = pos[a]
        j = pos[b]
    else:
        i = pos[b]
        j = pos[a]
    ln = (j - i) % n + 1
    if 2 * ln > n:
        # reverse the complement instead and flip the reading direction
        i, j = (j + 1) % n, (i - 1 + n) % n
        ln = n - ln
        rev[0] ^= 1
    for t in range(ln // 2):
        x = (i + t) % n
        y = (j - t + n) % n
        cx = order[x]
        cy = order[y]
        order[x] = cy
        order[y] = cx
        pos[cy] = x
        pos[cx] = y


@_jit
def _in_list(ea, eb, cnt, a, b):
    for i in range(cnt):
        if (ea[i] == a and eb[i] == b) or (ea[i] == b and eb[i] == a):
            return True
    return False


@_jit
def _lk_candidates(xy, nbr, order, pos, rev, t1, last, g, breadth,
                   add_a, add_b, n_add, rem_a, rem_b, n_rem, c3, c4, cs):
    """Best ``breadth`` (t3, t4) continuations from ``last``, by d(t3,t4) - d(last,t3)."""
    m = 0
    nxt = _succ(order, pos, rev, last)
    for i in range(nbr.shape[1]):
        t3 = nbr[last, i]
        d23 = dist(xy, last, t3)
        if g - d23 <= 0:
            break
        if t3 == t1 or t3 == nxt:
            continue
        if _in_list(rem_a, rem_b, n_rem, last, t3):
            continue
        t4 = _pred(order, pos, rev, t3)
        if _in_list(add_a, add_b, n_add, t3, t4):
            continue
        score = dist(xy, t3, t4) - d23
        if m < breadth:
            p = m
            m += 1
        elif score > cs[m - 1]:
            p = m - 1
        else:
            continue
        while p > 0 and cs[p - 1] < score:
            c3[p] = c3[p - 1]
            c4[p] = c4[p - 1]
            cs[p] = cs[p - 1]
            p -= 1
        c3[p] = t3
        c4[p] = t4
        cs[p] = score
    return m


@_jit
def _lk_chain(xy, nbr, order, pos, rev, t1, max_depth, b0, b1, touched, ws):
    """Search one LK move from t1 -> succ(t1); commit it if the gain is positive.

    ``ws`` is a preallocated (17, width) scratch block.
    """
    t2 = _succ(order, pos, rev, t1)
    fa = ws[0]  # flip endpoints, for undo
    fb = ws[1]
    add_a = ws[2]
    add_b = ws[3]
    rem_a = ws[4]
    rem_b = ws[5]
    chain3 = ws[6]
    chain4 = ws[7]
    c3_0 = ws[8]
    c4_0 = ws[9]
    cs_0 = ws[10]
    c3_1 = ws[11]
    c4_1 = ws[12]
    cs_1 = ws[13]
    c3_d = ws[14]
    c4_d = ws[15]
    cs_d = ws[16]

    rem_a[0] = t1
    rem_b[0] = t2
    n_rem = 1
    n_add = 0
    nf = 0
    best_gain = np.int64(0)
    best_len = 0
    g0 = dist(xy, t1, t2)

    m0 = _lk_candidates(xy, nbr, order, pos, rev, t1, t2, g0, b0,
                        add_a, add_b, n_add, rem_a, rem_b, n_rem, c3_0, c4_0, cs_0)
    for i0 in range(m0):
        t3 = c3_0[i0]
        t4 = c4_0[i0]
        _flip(order, pos, rev, t2, t4)
        fa[nf] = t2
        fb[nf] = t4
        chain3[nf] = t3
        chain4[nf] = t4
        nf += 1
        add_a[n_add] = t2
        add_b[n_add] = t3
        n_add += 1
        rem_a[n_rem] = t3
        rem_b[n_rem] = t4
        n_rem += 1
        g1 = g0 - dist(xy, t2, t3) + dist(xy, t3, t4)
        close = g1 - dist(xy, t4, t1)
        if close > best_gain:
            best_gain = close
            best_len = nf

        m1 = 0
        if max_depth >= 2:
            m1 = _lk_candidates(xy, nbr, order, pos, rev, t1, t4, g1, b1,
                                add_a, add_b, n_add, rem_a, rem_b, n_rem, c3_1, c4_1, cs_1)
        for i1 in range(m1):
            s3 = c3_1[i1]
            s4 = c4_1[i1]
            _flip(order, pos, rev, t4, s4)
            fa[nf] = t4
            fb[nf] = s4
            chain3[nf] = s3
            chain4[nf] = s4
            nf += 1
            add_a[n_add] = t4
            add_b[n_add] = s3
            n_add += 1
            rem_a[n_rem] = s3
            rem_b[n_rem] = s4
            n_rem += 1
            g = g1 - dist(xy, t4, s3) + dist(xy, s3, s4)
            close = g - dist(xy, s4, t1)
            if close > best_gain:
                best_gain = close
                best_len = nf
            last = s4
            while nf < max_depth:
                md = _lk_candidates(xy, nbr, order, pos, rev, t1, last, g, 1,
                                    add_a, add_b, n_add, rem_a, rem_b, n_rem, c3_d, c4_d, cs_d)
                if md == 0:
                    break
                u3 = c3_d[0]
                u4 = c4_d[0]
                _flip(order, pos, rev, last, u4)
                fa[nf] = last
                fb[nf] = u4
                chain3[nf] = u3
                chain4[nf] = u4
                nf += 1
                add_a[n_add] = last
                add_b[n_add] = u3
                n_add += 1
                rem_a[n_rem] = u3
                rem_b[n_rem] = u4
                n_rem += 1
                g = g - dist(xy, last, u3) + dist(xy, u3, u4)
                close = g - dist(xy, u4, t1)
                if close > best_gain:
                    best_gain = close
                    best_len = nf
                last = u4
            if best_gain > 0:
                break
            while nf > 1:
                nf -= 1
                _flip(order, pos, rev, fb[nf], fa[nf])
            n_add = 1
            n_rem = 2
        if best_gain > 0:
            break
        while nf > 0:
            nf -= 1
            _flip(order, pos, rev, fb[nf], fa[nf])
        n_add = 0
        n_rem = 1

    if best_gain <= 0:
        return np.int64(0), 0
    while nf > best_len:
        nf -= 1
        _flip(order, pos, rev, fb[nf], fa[nf])
    touched[0] = t1
    touched[1] = t2
    nt = 2
    for i in range(best_len):
        touched[nt] = chain3[i]
        touched[nt + 1] = chain4[i]
        nt += 2
    return best_gain, nt


@_jit
def lin_kernighan(xy, nbr, order, max_depth, b0, b1):
    """LK local search built from sequences of 2-exchange flips.

    Returns the improved order and the total gain.
    """
    n = order.shape[0]
    order = order.copy()
    pos = np.empty(n, dtype=np.int64)
    for i in range(n):
        pos[order[i]] = i
    rev = np.zeros(1, dtype=np.int64)
    touched = np.empty(2 * max_depth + 6, dtype=np.int64)
    ws = np.empty((17, max(max_depth + 2, b0, b1)), dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    inq = np.ones(n, dtype=np.bool_)
    for i in range(n):
        queue[i] = i
    qh = 0
    qlen = n
    total = np.int64(0)
    while qlen > 0:
        t1 = queue[qh]
        qh = (qh + 1) % n
        qlen -= 1
        inq[t1] = False
        improved = True
        while improved:
            improved = False
            for side in range(2):
                if side == 1:
                    rev[0] ^= 1
                gain, nt = _lk_chain(xy, nbr, order, pos, rev, t1, max_depth, b0, b1, touched, ws)
                if side == 1:
                    rev[0] ^= 1
                if gain > 0:
                    total += gain
                    improved = True
                    for j in range(nt):
                        c = touched[j]
                        if c != t1 and not inq[c]:
                            queue[(qh + qlen) % n] = c
                            qlen += 1
                            inq[c] = True
                    break
    out = np.empty(n, dtype=np.int64)
    c = order[0]
    for i in range(n):
        out[i] = c
        c = _succ(order, pos, rev, c)
    return out, total
