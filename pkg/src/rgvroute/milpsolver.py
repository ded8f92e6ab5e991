"""LP-based branch and bound for :class:`~rgvroute.milp.model.MilpModel`.

The LP engine keeps one working basis for the whole tree. Since every
variable is boxed, switching to another node only means moving bounds and
letting the dual simplex repair primal feasibility.
"""
from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

from . import _lpkernels as K
from .constants import INT_TOL, OPT_TOL, PLUNGE_EVERY
from .milp.assignment import assignment_to_route, route_to_assignment, violations
from .milp.model import MilpModel


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL_FAILURE = "numerical_failure"
    CUTOFF = "cutoff"


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    status: LpStatus
    iterations: int
    certificate: list = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


def _activity_bounds(A: sp.csc_matrix, lb, ub):
    Ar = A.tocsr()
    lo = np.zeros(Ar.shape[0])
    hi = np.zeros(Ar.shape[0])
    for r in range(Ar.shape[0]):
        cols = Ar.indices[Ar.indptr[r] : Ar.indptr[r + 1]]
        a = Ar.data[Ar.indptr[r] : Ar.indptr[r + 1]]
        lo[r] = np.sum(np.minimum(a * lb[cols], a * ub[cols]))
        hi[r] = np.sum(np.maximum(a * lb[cols], a * ub[cols]))
    return lo, hi


class LpEngine:
    """Dual simplex state for one model: bounds, basis and its inverse."""

    def __init__(self, model: MilpModel):
        if not (np.all(np.isfinite(model.lb)) and np.all(np.isfinite(model.ub))):
            raise ValueError("every variable needs finite bounds")
        self.model = model
        A = model.A.tocsc()
        A.sort_indices()
        self.n, self.m = model.num_cols, model.num_rows
        self.colptr = A.indptr.astype(np.int64)
        self.rowidx = A.indices.astype(np.int64)
        self.vals = A.data.astype(np.float64)
        act_lo, act_hi = _activity_bounds(A, model.lb, model.ub)
        row_lo = np.maximum(model.row_lo, act_lo)
        row_hi = np.minimum(model.row_hi, act_hi)
        self.row_lo, self.row_hi = row_lo, row_hi
        nt = self.n + self.m
        self.c = np.zeros(nt)
        self.c[: self.n] = model.obj
        self.lb = np.concatenate([model.lb, row_lo]).astype(np.float64)
        self.ub = np.concatenate([model.ub, row_hi]).astype(np.float64)
        # rows that are infeasible on their own stay visible to the simplex
        bad = self.lb[self.n :] > self.ub[self.n :]
        self.lb[self.n :][bad] = model.row_lo[bad]
        self.ub[self.n :][bad] = model.row_hi[bad]
        self.base_lb = self.lb[: self.n].copy()
        self.base_ub = self.ub[: self.n].copy()
        self.iterations = 0
        self.reset_basis()

    def reset_basis(self):
        n, m = self.n, self.m
        self.head = np.arange(n, n + m, dtype=np.int64)
        self.is_basic = np.zeros(n + m, dtype=np.bool_)
        self.is_basic[n:] = True
        self.binv = -np.eye(m)
        self.w = np.ones(m)
        self.d = self.c.copy()
        self.x = np.zeros(n + m)
        self.x[:n] = self.lb[:n]

    def _sync(self):
        K.place_nonbasic(self.n + self.m, self.is_basic, self.lb, self.ub, self.d, self.x)
        K.recompute_primal(self.n, self.m, self.colptr, self.rowidx, self.vals, self.head, self.is_basic,
                           self.binv, self.x)

    def _refactor(self) -> bool:
        ok = K.refactor(self.n, self.m, self.colptr, self.rowidx, self.vals, self.head, self.binv)
        if ok:
            K.row_norms(self.binv, self.w)
            K.recompute_dual(self.n, self.m, self.colptr, self.rowidx, self.vals, self.head, self.is_basic,
                             self.binv, self.c, self.d)
        return ok

    def basis(self) -> np.ndarray:
        return self.head.copy()

    def set_basis(self, head: np.ndarray) -> None:
        """Install a saved basis header; falls back to the slack basis if singular."""
        if np.array_equal(head, self.head):
            return
        old = self.head.copy()
        self.head[:] = head
        self.is_basic[:] = False
        self.is_basic[self.head] = True
        if not self._refactor():
            self.head[:] = old
            self.is_basic[:] = False
            self.is_basic[self.head] = True
            if not self._refactor():
                self.reset_basis()

    def residual(self) -> float:
        x = self.x[: self.n]
        s = self.x[self.n :]
        act = self.model.A @ x
        return float(np.max(np.abs(act - s) / np.maximum(1.0, np.abs(act)), initial=0.0))

    def solve(self, lb=None, ub=None, cutoff=np.inf, max_iter=1_000_000) -> LpSolution:
        self.lb[: self.n] = self.base_lb if lb is None else lb
        self.ub[: self.n] = self.base_ub if ub is None else ub
        total = 0
        # fixed columns are skipped by the pivot row, so their reduced costs go stale
        K.recompute_dual(self.n, self.m, self.colptr, self.rowidx, self.vals, self.head, self.is_basic,
                         self.binv, self.c, self.d)
        for attempt in range(4):
            self._sync()
            status, its, row = K.dual_simplex(
                self.n, self.m, self.colptr, self.rowidx, self.vals, self.c, self.lb, self.ub, self.head,
                self.is_basic, self.binv, self.x, self.d, self.w, max_iter, cutoff,
            )
            total += its
            self.iterations += its
            if status == K.OPTIMAL and self.residual() > K.PRIMAL_TOL:
                status = K.NUMERIC
            if status != K.NUMERIC:
                break
            if attempt >= 1 or not self._refactor():
                self.reset_basis()
        x = self.x[: self.n].copy()
        obj = float(self.c[: self.n] @ x)
        if status == K.OPTIMAL:
            return LpSolution(x, obj, LpStatus.OPTIMAL, total)
        if status == K.INFEASIBLE:
            ray = self.binv[row, :]
            rows = [self.model.row_names[i] for i in np.nonzero(np.abs(ray) > 1e-9)[0]]
            return LpSolution(x, np.inf, LpStatus.INFEASIBLE, total, rows)
        if status == K.CUTOFF:
            return LpSolution(x, obj, LpStatus.CUTOFF, total)
        if status == K.ITER_LIMIT:
            return LpSolution(x, obj, LpStatus.ITERATION_LIMIT, total)
        return LpSolution(x, obj, LpStatus.NUMERICAL_FAILURE, total)


def solve_lp(model: MilpModel, lb=None, ub=None) -> LpSolution:
    """LP relaxation of ``model`` (binaries relaxed to ``[0, 1]``)."""
    return LpEngine(model).solve(lb, ub)


class MilpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    TIME_LIMIT = "time_limit"
    NODE_LIMIT = "node_limit"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class MilpResult:
    status: MilpStatus
    objective: float
    values: np.ndarray | None
    best_bound: float
    root_bound: float
    nodes: int
    lp_iterations: int
    seconds: float
    first_incumbent_node: int | None = None
    certificate: list = field(default_factory=list)
    bound_trace: list = field(default_factory=list)
    incumbent_trace: list = field(default_factory=list)
    model: MilpModel | None = None

    @property
    def gap(self) -> float:
        if self.values is None or not np.isfinite(self.objective):
            return np.inf
        return max(0.0, self.objective - self.best_bound) / max(1.0, abs(self.objective))

    @property
    def route(self):
        if self.values is None:
            return None
        return assignment_to_route(self.model, self.values)

    @property
    def optimal(self) -> bool:
        return self.status is MilpStatus.OPTIMAL


def _branch_var(model: MilpModel, x, x_cols, y_cols):
    """Most fractional binary, arc variables before path variables."""
    for cols in (x_cols, y_cols):
        if len(cols) == 0:
            continue
        f = x[cols] - np.floor(x[cols])
        score = np.minimum(f, 1.0 - f)
        k = int(np.argmax(score))
        if score[k] > INT_TOL:
            return int(cols[k])
    return -1


def _warm_values(model: MilpModel, incumbent):
    if incumbent is None:
        return None
    if isinstance(incumbent, np.ndarray) and incumbent.shape == (model.num_cols,):
        val = incumbent.astype(float)
    else:
        try:
            val = route_to_assignment(model, incumbent)
        except KeyError:
            return None
    return val if not violations(model, val) else None


def solve_milp(model: MilpModel, time_limit: float | None = None, incumbent=None, *, node_limit: int | None = None,
               plunge_every: int = PLUNGE_EVERY, abs_tol: float = OPT_TOL) -> MilpResult:
    """Best-bound branch and bound with periodic depth-first plunges.

    ``incumbent`` may be a visit order or a full variable vector; it is
    used only if it satisfies the model. Branching picks the most
    fractional ``x`` first and falls back to ``y``.
    """
    t0 = time.perf_counter()
    eng = LpEngine(model)
    x_cols = np.array(sorted(model.x_col.values()), dtype=np.int64)
    y_cols = np.array(sorted(model.y_col.values()), dtype=np.int64)
    base_lb, base_ub = eng.base_lb, eng.base_ub

    best_val = _warm_values(model, incumbent)
    best_obj = float(model.obj @ best_val) if best_val is not None else np.inf
    first_inc = 0 if best_val is not None else None
    inc_trace = [(0, best_obj)] if best_val is not None else []

    # node storage: parent, fixed column, fixed value; bases of open parents
    parent, fcol, fval = [-1], [-1], [0]
    saved: dict[int, list] = {}

    def bounds_of(node):
        lb = base_lb.copy()
        ub = base_ub.copy()
        while node > 0:
            c, v = fcol[node], fval[node]
            lb[c] = ub[c] = v
            node = parent[node]
        return lb, ub

    def cutoff():
        return best_obj - abs_tol if np.isfinite(best_obj) else np.inf

    root = eng.solve(cutoff=cutoff())
    nodes = 1
    if root.status is LpStatus.INFEASIBLE:
        return MilpResult(MilpStatus.INFEASIBLE, np.inf, None, np.inf, np.inf, nodes, eng.iterations,
                          time.perf_counter() - t0, None, root.certificate, model=model)
    if root.status is LpStatus.NUMERICAL_FAILURE:
        return MilpResult(MilpStatus.NUMERICAL_FAILURE, best_obj, best_val, -np.inf, -np.inf, nodes, eng.iterations,
                          time.perf_counter() - t0, first_inc, model=model)
    root_bound = root.objective
    heap: list = []
    seq = 0
    bound_trace = [root_bound]
    best_bound = root_bound
    status = MilpStatus.OPTIMAL

    def process(node, sol):
        """Branch on ``sol``; returns the child to dive into, if any."""
        nonlocal best_obj, best_val, first_inc, seq
        if sol.status is not LpStatus.OPTIMAL or sol.objective >= cutoff():
            return None
        j = _branch_var(model, sol.x, x_cols, y_cols)
        if j < 0:
            val = sol.x.copy()
            val[x_cols] = np.round(val[x_cols])
            if len(y_cols):
                val[y_cols] = np.round(val[y_cols])
            obj = float(model.obj @ val)
            if obj < best_obj - abs_tol and not violations(model, val, tol=1e-6):
                best_obj, best_val = obj, val
                inc_trace.append((nodes, obj))
                if first_inc is None:
                    first_inc = nodes
            return None
        up_first = sol.x[j] >= 0.5
        saved[node] = [eng.basis(), 1]
        kids = []
        for v in ((1, 0) if up_first else (0, 1)):
            parent.append(node)
            fcol.append(j)
            fval.append(v)
            kids.append(len(parent) - 1)
        seq += 1
        heapq.heappush(heap, (sol.objective, seq, kids[1]))
        return kids[0], sol.objective

    dive = process(0, root)
    since_plunge = 0
    while True:
        if dive is None:
            if not heap:
                break
            since_plunge += 1
            bnd, _, node = heapq.heappop(heap)
            if bnd >= cutoff():
                heap.clear()
                break
        else:
            node, bnd = dive
        lo = min(bnd, heap[0][0]) if heap else bnd
        if lo > best_bound:
            best_bound = min(lo, best_obj)
            bound_trace.append(best_bound)
        if time_limit is not None and time.perf_counter() - t0 > time_limit:
            seq += 1
            heapq.heappush(heap, (bnd, seq, node))
            status = MilpStatus.TIME_LIMIT
            break
        if node_limit is not None and nodes >= node_limit:
            seq += 1
            heapq.heappush(heap, (bnd, seq, node))
            status = MilpStatus.NODE_LIMIT
            break
        lb, ub = bounds_of(node)
        entry = saved.get(parent[node])
        if entry is not None:
            if dive is None:
                eng.set_basis(entry[0])
            entry[1] -= 1
            if entry[1] < 0:
                del saved[parent[node]]
        sol = eng.solve(lb, ub, cutoff=cutoff())
        nodes += 1
        if sol.status is LpStatus.NUMERICAL_FAILURE:
            status = MilpStatus.NUMERICAL_FAILURE
            break
        nxt = process(node, sol)
        if dive is not None or since_plunge >= plunge_every:
            dive = nxt
            if nxt is None:
                since_plunge = 0
            elif dive is not None and since_plunge >= plunge_every and heap:
                pass
        else:
            if nxt is not None:
                seq += 1
                heapq.heappush(heap, (nxt[1], seq, nxt[0]))
            dive = None

    if status is MilpStatus.OPTIMAL:
        best_bound = best_obj
        if best_val is None:
            status = MilpStatus.INFEASIBLE
    else:
        open_min = min((h[0] for h in heap), default=best_obj)
        best_bound = max(best_bound, min(open_min, best_obj))
    return MilpResult(status, best_obj, best_val, best_bound, root_bound, nodes, eng.iterations,
                      time.perf_counter() - t0, first_inc, [], bound_trace, inc_trace, model)


# -- cut-benefit benchmark ------------------------------------------------------

BENCH_FIELDS = ("instance", "P", "Q", "cuts", "nodes", "seconds", "root_gap", "root_bound", "objective",
                "reference", "status", "rows", "cols")


def _bench_job(args):
    from .heuristic import rule_sequence
    from .milp.model import build_model
    from .seqsolver import solve_exact
    from .simulator import random_instance

    n, Q, seed, m, cuts, time_limit, rgv = args
    inst = random_instance(seed, n=n, m=m, Q=Q, rgv=rgv)
    ref = solve_exact(inst).energy
    model = build_model(inst, cuts=cuts, floor=True)
    res = solve_milp(model, time_limit=time_limit, incumbent=rule_sequence(inst) + [inst.end])
    return {
        "instance": f"P{n}-Q{Q}-s{seed}",
        "P": n,
        "Q": Q,
        "cuts": cuts,
        "nodes": res.nodes,
        "seconds": round(res.seconds, 3),
        "root_gap": round(max(0.0, ref - res.root_bound) / ref, 6) if ref > 0 else 0.0,
        "root_bound": res.root_bound,
        "objective": res.objective,
        "reference": ref,
        "status": res.status.value,
        "rows": model.num_rows,
        "cols": model.num_cols,
    }


def bench_suite(sizes, capacities, cut_sets, seeds=range(1), *, m: int = 10, time_limit: float | None = 120.0,
                workers: int = 1, rgv=None) -> list[dict]:
    """Solve every (size, capacity, seed) instance under every cut configuration.

    The root gap is measured against the exact sequence-search optimum, so
    it stays meaningful when a run hits its time limit.
    """
    jobs = [(n, Q, s, m, c, time_limit, rgv) for n in sizes for Q in capacities for s in seeds for c in cut_sets]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_bench_job, jobs))
    return [_bench_job(j) for j in jobs]
