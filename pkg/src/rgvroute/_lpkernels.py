"""Bounded-variable dual simplex on an explicit dense basis inverse.

The LP is ``min c.x`` subject to ``A x - s = 0`` with box bounds on the
structural variables ``x`` (columns ``0..n-1``) and on the row activities
``s`` (columns ``n..n+m-1``). Every variable is boxed, so any basis becomes
dual feasible once each nonbasic variable sits at the bound matching the
sign of its reduced cost. Branch and bound exploits this: a node only
changes bounds and then re-runs the dual simplex from whatever basis is at
hand.
"""
import numpy as np

from ._jit import njit

OPTIMAL = 0
INFEASIBLE = 1
ITER_LIMIT = 2
NUMERIC = 3
CUTOFF = 4

PRIMAL_TOL = 1e-7
DUAL_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 100
STALL_BEFORE_BLAND = 1000


@njit
def column_dot(j, n, colptr, rowidx, vals, v):
    """``M[:, j] . v`` for the extended matrix ``M = [A, -I]``."""
    if j >= n:
        return -v[j - n]
    acc = 0.0
    for k in range(colptr[j], colptr[j + 1]):
        acc += vals[k] * v[rowidx[k]]
    return acc


@njit
def column_dense(j, n, m, colptr, rowidx, vals, out):
    out[:] = 0.0
    if j >= n:
        out[j - n] = -1.0
        return
    for k in range(colptr[j], colptr[j + 1]):
        out[rowidx[k]] = vals[k]


@njit
def refactor(n, m, colptr, rowidx, vals, head, binv):
    """Rebuild ``binv`` from the basis header; returns False if singular.

    Basic slack columns are unit vectors, so only the block of basic
    structurals against the rows whose slacks are nonbasic is inverted.
    """
    slack_row_basic = np.zeros(m, dtype=np.bool_)
    ns = 0
    for i in range(m):
        if head[i] >= n:
            slack_row_basic[head[i] - n] = True
        else:
            ns += 1
    pos_s = np.empty(ns, dtype=np.int64)
    rows_x = np.empty(ns, dtype=np.int64)
    k = 0
    for i in range(m):
        if head[i] < n:
            pos_s[k] = i
            k += 1
    k = 0
    for r in range(m):
        if not slack_row_basic[r]:
            if k >= ns:
                return False
            rows_x[k] = r
            k += 1
    if k != ns:
        return False
    row_slot = np.full(m, -1, dtype=np.int64)
    for t in range(ns):
        row_slot[rows_x[t]] = t
    binv[:, :] = 0.0
    kinv = np.zeros((ns, ns))
    if ns > 0:
        K = np.zeros((ns, ns))
        for s in range(ns):
            j = head[pos_s[s]]
            for p in range(colptr[j], colptr[j + 1]):
                t = row_slot[rowidx[p]]
                if t >= 0:
                    K[t, s] = vals[p]
        if abs(np.linalg.det(K)) < 1e-300:
            return False
        kinv = np.linalg.inv(K)
        if not np.all(np.isfinite(kinv)):
            return False
        for s in range(ns):
            for t in range(ns):
                binv[pos_s[s], rows_x[t]] = kinv[s, t]
    # slack positions: v_i = A[row, S] v_S - b_row
    for i in range(m):
        if head[i] < n:
            continue
        row = head[i] - n
        binv[i, row] = -1.0
    # accumulate A[row, S] * binv[pos_s, :] into each basic slack row
    slack_pos = np.full(m, -1, dtype=np.int64)
    for i in range(m):
        if head[i] >= n:
            slack_pos[head[i] - n] = i
    for s in range(ns):
        j = head[pos_s[s]]
        for p in range(colptr[j], colptr[j + 1]):
            r = rowidx[p]
            i = slack_pos[r]
            if i >= 0:
                a = vals[p]
                for t in range(ns):
                    binv[i, rows_x[t]] += a * kinv[s, t]
    return True


@njit
def place_nonbasic(nt, is_basic, lb, ub, d, x):
    for j in range(nt):
        if is_basic[j]:
            continue
        if lb[j] == ub[j]:
            x[j] = lb[j]
        elif d[j] > DUAL_TOL:
            x[j] = lb[j]
        elif d[j] < -DUAL_TOL:
            x[j] = ub[j]
        elif abs(x[j] - lb[j]) <= abs(x[j] - ub[j]):
            x[j] = lb[j]
        else:
            x[j] = ub[j]


@njit
def recompute_primal(n, m, colptr, rowidx, vals, head, is_basic, binv, x):
    """``x_B = -B^-1 N x_N``."""
    rhs = np.zeros(m)
    for j in range(n):
        if is_basic[j] or x[j] == 0.0:
            continue
        for k in range(colptr[j], colptr[j + 1]):
            rhs[rowidx[k]] += vals[k] * x[j]
    for i in range(m):
        j = n + i
        if not is_basic[j]:
            rhs[i] -= x[j]
    xb = binv @ rhs
    for i in range(m):
        x[head[i]] = -xb[i]


@njit
def recompute_dual(n, m, colptr, rowidx, vals, head, is_basic, binv, c, d):
    cb = np.empty(m)
    for i in range(m):
        cb[i] = c[head[i]]
    y = cb @ binv
    nt = n + m
    for j in range(nt):
        if is_basic[j]:
            d[j] = 0.0
        else:
            d[j] = c[j] - column_dot(j, n, colptr, rowidx, vals, y)


@njit
def row_norms(binv, w):
    m = binv.shape[0]
    for i in range(m):
        acc = 0.0
        for k in range(m):
            acc += binv[i, k] * binv[i, k]
        w[i] = acc


@njit
def dual_simplex(n, m, colptr, rowidx, vals, c, lb, ub, head, is_basic, binv, x, d, w, max_iter, bound_cutoff):
    """Run dual simplex iterations from a dual feasible basis.

    Leaving rows are priced by dual steepest edge; ``w`` holds the squared
    norms of the rows of ``binv`` and is kept exact through every update.
    Returns (status, iterations, certificate row). ``bound_cutoff`` stops
    early once the dual objective reaches it (the node can be pruned).
    """
    nt = n + m
    rho = np.empty(m)
    alpha_r = np.zeros(nt)
    alpha_q = np.empty(m)
    it = 0
    since_refactor = 0
    stall = 0
    last_obj = -np.inf
    last_infeas = np.inf
    bland = False
    while it < max_iter:
        # pricing: steepest edge on the primal infeasibility (Bland: lowest index)
        r = -1
        best = 0.0
        best_var = nt + 1
        sum_infeas = 0.0
        for i in range(m):
            j = head[i]
            v = x[j]
            tol = PRIMAL_TOL * max(1.0, abs(v))
            if v < lb[j] - tol:
                infeas = lb[j] - v
            elif v > ub[j] + tol:
                infeas = v - ub[j]
            else:
                continue
            sum_infeas += infeas
            if bland:
                if j < best_var:
                    best_var = j
                    r = i
            else:
                score = infeas * infeas / max(w[i], 1e-12)
                if score > best:
                    best = score
                    r = i
        if r < 0:
            return OPTIMAL, it, -1
        jl = head[r]
        to_upper = x[jl] > ub[jl]
        sgn = 1.0 if to_upper else -1.0
        rho[:] = binv[r, :]
        # pivot row over nonbasic columns
        for j in range(nt):
            if is_basic[j] or lb[j] == ub[j]:
                alpha_r[j] = 0.0
            else:
                alpha_r[j] = column_dot(j, n, colptr, rowidx, vals, rho)
        # Harris two-pass ratio test
        theta_max = np.inf
        for j in range(nt):
            a = alpha_r[j]
            if a == 0.0:
                continue
            at_lb = x[j] <= lb[j] + 0.5 * (ub[j] - lb[j])
            if (at_lb and sgn * a > PIVOT_TOL) or ((not at_lb) and sgn * a < -PIVOT_TOL):
                ratio = (abs(d[j]) + DUAL_TOL) / abs(a)
                if ratio < theta_max:
                    theta_max = ratio
        if theta_max == np.inf:
            return INFEASIBLE, it, r
        q = -1
        best_a = 0.0
        for j in range(nt):
            a = alpha_r[j]
            if a == 0.0:
                continue
            at_lb = x[j] <= lb[j] + 0.5 * (ub[j] - lb[j])
            if (at_lb and sgn * a > PIVOT_TOL) or ((not at_lb) and sgn * a < -PIVOT_TOL):
                if abs(d[j]) / abs(a) <= theta_max:
                    if bland:
                        if q < 0:
                            q = j
                    elif abs(a) > best_a:
                        best_a = abs(a)
                        q = j
        if q < 0:
            return NUMERIC, it, r
        # FTRAN on the sparse entering column
        if q >= n:
            for i in range(m):
                alpha_q[i] = -binv[i, q - n]
        else:
            alpha_q[:] = 0.0
            for k in range(colptr[q], colptr[q + 1]):
                rr = rowidx[k]
                a = vals[k]
                for i in range(m):
                    alpha_q[i] += binv[i, rr] * a
        arq = alpha_q[r]
        if abs(arq) < PIVOT_TOL:
            if since_refactor == 0:
                return NUMERIC, it, r
            ok = refactor(n, m, colptr, rowidx, vals, head, binv)
            if not ok:
                return NUMERIC, it, r
            recompute_primal(n, m, colptr, rowidx, vals, head, is_basic, binv, x)
            recompute_dual(n, m, colptr, rowidx, vals, head, is_basic, binv, c, d)
            row_norms(binv, w)
            since_refactor = 0
            continue
        # dual step
        theta = d[q] / alpha_r[q]
        for j in range(nt):
            if not is_basic[j] and alpha_r[j] != 0.0:
                d[j] -= theta * alpha_r[j]
        d[q] = 0.0
        d[jl] = -theta
        # primal step: leaving variable lands on its violated bound
        target = ub[jl] if to_upper else lb[jl]
        delta_q = (x[jl] - target) / arq
        for i in range(m):
            if alpha_q[i] != 0.0:
                x[head[i]] -= alpha_q[i] * delta_q
        x[q] += delta_q
        x[jl] = target
        # basis change and inverse update
        is_basic[q] = True
        is_basic[jl] = False
        head[r] = q
        piv = binv[r, :] / arq
        for i in range(m):
            f = alpha_q[i]
            if i == r or f == 0.0:
                continue
            acc = 0.0
            for k in range(m):
                v = binv[i, k] - f * piv[k]
                binv[i, k] = v
                acc += v * v
            w[i] = acc
        binv[r, :] = piv
        acc = 0.0
        for k in range(m):
            acc += piv[k] * piv[k]
        w[r] = acc
        # keep nonbasic reduced costs sign-consistent with their bound
        if d[jl] < -DUAL_TOL and lb[jl] != ub[jl] and x[jl] == lb[jl]:
            d[jl] = 0.0
        if d[jl] > DUAL_TOL and lb[jl] != ub[jl] and x[jl] == ub[jl]:
            d[jl] = 0.0
        it += 1
        since_refactor += 1
        if since_refactor >= REFACTOR_EVERY:
            ok = refactor(n, m, colptr, rowidx, vals, head, binv)
            if not ok:
                return NUMERIC, it, r
            recompute_primal(n, m, colptr, rowidx, vals, head, is_basic, binv, x)
            recompute_dual(n, m, colptr, rowidx, vals, head, is_basic, binv, c, d)
            place_nonbasic(nt, is_basic, lb, ub, d, x)
            recompute_primal(n, m, colptr, rowidx, vals, head, is_basic, binv, x)
            row_norms(binv, w)
            since_refactor = 0
        obj = 0.0
        for j in range(n):
            obj += c[j] * x[j]
        if obj >= bound_cutoff:
            # dual objective equals c.x on a dual feasible basis
            return CUTOFF, it, -1
        progress = obj > last_obj + 1e-12 * max(1.0, abs(obj)) or sum_infeas < last_infeas - 1e-9
        if progress:
            stall = 0
            bland = False
            last_infeas = min(last_infeas, sum_infeas)
        else:
            stall += 1
            if stall >= STALL_BEFORE_BLAND:
                bland = True
        last_obj = max(last_obj, obj)
    return ITER_LIMIT, it, -1
