"""Depth-first branch and bound over visit orders (numba kernels).

Vertices follow the usual numbering: 0 start, 1..n pickups, n+1..2n
deliveries. The end vertex is implicit; every route closes at zero cost.
Children are tried in increasing vertex order, so the search visits
complete routes in lexicographic order.
"""
import numpy as np

from ._jit import njit
from .kinematics import _energy_coef

OK = 0
QUEUE = 1
CAPACITY = 2
BLOCKED = 3
DEADLINE = 4
NOT_ABOARD = 5
REACH = 6
N_REASONS = 7

OPTIMAL = 0
INFEASIBLE = 1
LIMIT_WITH_INCUMBENT = 2
LIMIT_NO_INCUMBENT = 3

TIME_EPS = 1e-9


@njit
def _unloadable(deck, dlen, dside):
    lo = 0
    hi = dlen - 1
    while lo <= hi:
        if dside[deck[lo]] == 0:
            lo += 1
        elif dside[deck[hi]] == 1:
            hi -= 1
        else:
            return False
    return True


@njit
def _step(n, Q, u, v, t_u, load, deck, dlen, out_deck, visited, qv, serv, ready, due,
          oside, dside, qpred, T):
    """Try task ``v`` after ``u``. Returns (code, start time, load, deck length)."""
    if v <= n:
        p = qpred[v]
        if p > 0 and not visited[p]:
            return QUEUE, 0.0, load, dlen
        if load + qv[v] > Q:
            return CAPACITY, 0.0, load, dlen
        if oside[v] == 0:
            out_deck[0] = v
            for k in range(dlen):
                out_deck[k + 1] = deck[k]
        else:
            for k in range(dlen):
                out_deck[k] = deck[k]
            out_deck[dlen] = v
        if not _unloadable(out_deck, dlen + 1, dside):
            return BLOCKED, 0.0, load, dlen
        new_len = dlen + 1
        new_load = load + qv[v]
    else:
        r = v - n
        if not visited[r]:
            return NOT_ABOARD, 0.0, load, dlen
        if dside[r] == 0:
            if deck[0] != r:
                return BLOCKED, 0.0, load, dlen
            for k in range(1, dlen):
                out_deck[k - 1] = deck[k]
        else:
            if deck[dlen - 1] != r:
                return BLOCKED, 0.0, load, dlen
            for k in range(dlen - 1):
                out_deck[k] = deck[k]
        new_len = dlen - 1
        new_load = load + qv[v]
    t_v = t_u + serv[u] + T[u, v]
    if v > n and t_v < ready[v]:
        t_v = ready[v]
    if t_v + serv[v] > due[v] + TIME_EPS * max(1.0, abs(due[v])):
        return DEADLINE, 0.0, load, dlen
    return OK, t_v, new_load, new_len


@njit
def _reachable(n, u, t_u, visited, serv, ready, due, T):
    """Every open deadline can still be met from ``u`` (travel-time relaxation)."""
    leave = t_u + serv[u]
    for r in range(1, n + 1):
        d = r + n
        if visited[d] or not np.isfinite(due[d]):
            continue
        if visited[r]:
            t = leave + T[u, d]
        else:
            t = leave + T[u, r] + serv[r] + T[r, d]
        if t < ready[d]:
            t = ready[d]
        if t + serv[d] > due[d] + TIME_EPS * max(1.0, abs(due[d])):
            return False
    return True


@njit
def _remaining_bound(n, u, visited, qv, xpos, D, w_rgv, objective, accel, cruise, fric):
    """Admissible cost of finishing from ``u``.

    The vehicle still has to sweep the span of unvisited positions, and every
    unfinished container still has to ride at least its direct distance. Arc
    energy coefficients are monotone and subadditive in distance, so both
    terms underestimate the true remainder.
    """
    lo = np.inf
    hi = -np.inf
    for v in range(1, 2 * n + 1):
        if not visited[v]:
            lo = min(lo, xpos[v])
            hi = max(hi, xpos[v])
    if lo > hi:
        return 0.0
    x = xpos[u]
    sweep = (hi - lo) + min(abs(x - lo), abs(x - hi))
    if objective == 1:
        return sweep
    bound = w_rgv * _energy_coef(accel, cruise, fric, sweep)
    for r in range(1, n + 1):
        d = r + n
        if visited[d]:
            continue
        if visited[r]:
            bound += qv[r] * _energy_coef(accel, cruise, fric, D[u, d])
        else:
            bound += qv[r] * _energy_coef(accel, cruise, fric, D[r, d])
    return bound


@njit
def _tol(x):
    return 1e-9 * max(1.0, abs(x)) if np.isfinite(x) else 0.0


@njit
def _lex_less(a, b):
    for k in range(a.shape[0]):
        if a[k] != b[k]:
            return a[k] < b[k]
    return False


@njit
def search(n, Q, xpos, qv, serv, ready, due, oside, dside, qpred, D, T, C, w_rgv, objective,
           accel, cruise, fric, prefix, inc_cost, inc_route, node_limit, memo_cap, memo_head):
    """Branch and bound; returns (route, cost, nodes, status, prune reasons).

    ``memo_head`` is an empty int->int map owned by the caller (typed dict
    under numba). ``inc_route``/``inc_cost`` seed the incumbent; equal-cost
    routes that come earlier lexicographically still replace a seeded one.
    """
    N = 2 * n
    reasons = np.zeros(N_REASONS, dtype=np.int64)
    route = np.zeros(N + 1, dtype=np.int64)
    best = inc_route.copy()
    best_cost = inc_cost
    seeded = np.isfinite(inc_cost)
    if N == 0:
        return route, 0.0, 0, OPTIMAL, reasons
    dmax = Q if Q < n else n
    tt = np.zeros(N + 1)
    acc = np.zeros(N + 1)
    ld = np.zeros(N + 1, dtype=np.int64)
    deck = np.zeros((N + 1, dmax + 1), dtype=np.int64)
    dl = np.zeros(N + 1, dtype=np.int64)
    nxt = np.ones(N + 1, dtype=np.int64)
    masks = np.zeros(N + 1, dtype=np.int64)
    visited = np.zeros(N + 1, dtype=np.bool_)
    visited[0] = True
    has_due = False
    for v in range(1, N + 1):
        if np.isfinite(due[v]):
            has_due = True
    npre = prefix.shape[0]

    m_next = np.full(memo_cap, -1, dtype=np.int64)
    m_energy = np.zeros(memo_cap)
    m_time = np.zeros(memo_cap)
    m_deck = np.zeros((memo_cap, dmax + 1), dtype=np.int64)
    m_len = np.zeros(memo_cap, dtype=np.int64)
    m_used = 0

    nodes = 0
    limit_hit = False
    d = 0
    while d >= 0:
        if nodes >= node_limit:
            limit_hit = True
            break
        u = route[d]
        v = -1
        if d + 1 < npre:
            if nxt[d] == 1:
                v = prefix[d + 1]
                nxt[d] = N + 1
        else:
            for c in range(nxt[d], N + 1):
                if not visited[c]:
                    v = c
                    break
        if v < 0:
            if d > 0:
                visited[route[d]] = False
            d -= 1
            continue
        nxt[d] = v + 1 if d + 1 >= npre else N + 1
        code, tv, nl, ndl = _step(n, Q, u, v, tt[d], ld[d], deck[d], dl[d], deck[d + 1], visited,
                                  qv, serv, ready, due, oside, dside, qpred, T)
        if code != OK:
            reasons[code] += 1
            continue
        if objective == 0:
            cost = acc[d] + C[u, v] * (w_rgv + ld[d])
        else:
            cost = acc[d] + D[u, v]
        nodes += 1
        if d + 1 == N:
            route[N] = v
            tol = _tol(best_cost)
            if cost < best_cost - tol or (abs(cost - best_cost) <= tol and _lex_less(route, best)):
                best_cost = cost
                best[:] = route
                seeded = False
            continue
        visited[v] = True
        lb = cost + _remaining_bound(n, v, visited, qv, xpos, D, w_rgv, objective, accel, cruise, fric)
        tol = _tol(best_cost)
        if (seeded and lb > best_cost + tol) or (not seeded and lb >= best_cost - tol):
            visited[v] = False
            continue
        if has_due and not _reachable(n, v, tv, visited, serv, ready, due, T):
            reasons[REACH] += 1
            visited[v] = False
            continue
        mask = masks[d] | (np.int64(1) << np.int64(v - 1))
        key = mask * np.int64(N + 1) + np.int64(v)
        dominated = False
        slot = -1
        head = np.int64(-1)
        if key in memo_head:
            head = memo_head[key]
        e = head
        while e >= 0:
            same = m_len[e] == ndl
            if same:
                for k in range(ndl):
                    if m_deck[e, k] != deck[d + 1, k]:
                        same = False
                        break
            if same:
                if m_energy[e] <= cost and (not has_due or m_time[e] <= tv):
                    dominated = True
                    break
                if cost <= m_energy[e] and (not has_due or tv <= m_time[e]):
                    slot = e
                    break
            e = m_next[e]
        if dominated:
            visited[v] = False
            continue
        if slot < 0 and m_used < memo_cap:
            slot = m_used
            m_used += 1
            m_next[slot] = head
            memo_head[key] = slot
        if slot >= 0:
            m_energy[slot] = cost
            m_time[slot] = tv
            m_len[slot] = ndl
            for k in range(ndl):
                m_deck[slot, k] = deck[d + 1, k]
        d += 1
        route[d] = v
        tt[d] = tv
        acc[d] = cost
        ld[d] = nl
        dl[d] = ndl
        masks[d] = mask
        nxt[d] = 1
    have = np.isfinite(best_cost)
    if limit_hit:
        status = LIMIT_WITH_INCUMBENT if have else LIMIT_NO_INCUMBENT
    else:
        status = OPTIMAL if have else INFEASIBLE
    return best, best_cost, nodes, status, reasons


@njit
def enumerate_routes(n, Q, qv, serv, ready, due, oside, dside, qpred, T, prefix, limit):
    """All feasible visit orders, up to ``limit``; returns (routes, count, truncated)."""
    N = 2 * n
    out = np.zeros((max(limit, 1), N + 1), dtype=np.int64)
    if N == 0:
        return out[:1], 1, False
    dmax = Q if Q < n else n
    route = np.zeros(N + 1, dtype=np.int64)
    tt = np.zeros(N + 1)
    ld = np.zeros(N + 1, dtype=np.int64)
    deck = np.zeros((N + 1, dmax + 1), dtype=np.int64)
    dl = np.zeros(N + 1, dtype=np.int64)
    nxt = np.ones(N + 1, dtype=np.int64)
    visited = np.zeros(N + 1, dtype=np.bool_)
    visited[0] = True
    npre = prefix.shape[0]
    count = 0
    truncated = False
    d = 0
    while d >= 0:
        u = route[d]
        v = -1
        if d + 1 < npre:
            if nxt[d] == 1:
                v = prefix[d + 1]
                nxt[d] = N + 1
        else:
            for c in range(nxt[d], N + 1):
                if not visited[c]:
                    v = c
                    break
        if v < 0:
            if d > 0:
                visited[route[d]] = False
            d -= 1
            continue
        nxt[d] = v + 1 if d + 1 >= npre else N + 1
        code, tv, nl, ndl = _step(n, Q, u, v, tt[d], ld[d], deck[d], dl[d], deck[d + 1], visited,
                                  qv, serv, ready, due, oside, dside, qpred, T)
        if code != OK:
            continue
        if d + 1 == N:
            if count >= limit:
                truncated = True
                break
            route[N] = v
            out[count, :] = route
            count += 1
            continue
        visited[v] = True
        d += 1
        route[d] = v
        tt[d] = tv
        ld[d] = nl
        dl[d] = ndl
        nxt[d] = 1
    return out[:count], count, truncated
