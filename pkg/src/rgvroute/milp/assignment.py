"""Translate between visit orders and full MILP variable vectors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..constants import FEAS_TOL, INT_TOL
from .model import MilpModel


@dataclass
class RowViolation:
    name: str
    family: str
    activity: float
    lo: float
    hi: float

    def __str__(self):
        return f"{self.name} [{self.family}]: {self.lo:.6g} <= {self.activity:.6g} <= {self.hi:.6g} fails"


def route_schedule(model: MilpModel, route) -> tuple[np.ndarray, np.ndarray]:
    """Earliest start times and running loads along ``route``.

    Deck rules are deliberately ignored so that infeasible orders can be
    mapped too; rejecting them is the model's job.
    """
    inst = model.inst
    end = inst.end
    s = inst.services
    t = inst.travel_time_matrix
    q = inst.loads
    b = np.zeros(end + 1)
    w = np.zeros(end + 1)
    for u, v in zip(route[:-1], route[1:]):
        tv = b[u] + s[u] + (t[u, v] if v != end else 0.0)
        if inst.is_delivery(v):
            tv = max(tv, inst.request(v).e - s[v])
        b[v] = tv
        w[v] = w[u] + (q[v] if v != end else 0.0)
    return b, w


def route_to_assignment(model: MilpModel, route, b=None) -> np.ndarray:
    """Vector with ``x``/``y`` set from ``route`` and the smallest ``b, w, z``.

    ``b`` overrides the earliest schedule (indexed by vertex). Arcs of
    ``route`` missing from the model raise ``KeyError``.
    """
    route = tuple(int(v) for v in route)
    inst = model.inst
    n = inst.n
    end = inst.end
    val = np.zeros(model.num_cols)
    succ = dict(zip(route[:-1], route[1:]))
    for a in zip(route[:-1], route[1:]):
        val[model.x_col[a]] = 1.0
    pos = {v: k for k, v in enumerate(route)}
    for k in range(1, n + 1):
        lo, hi = pos[k], pos[k + n]
        if lo > hi:
            continue
        for idx in range(lo, hi):
            a = (route[idx], route[idx + 1])
            col = model.y_col.get((k,) + a)
            if col is None:
                raise KeyError(f"arc {a} has no y variable")
            val[col] = 1.0
    b0, w = route_schedule(model, route)
    b = b0 if b is None else np.asarray(b, dtype=float)
    for v, c in model.b_col.items():
        val[c] = b[v]
    for v, c in model.w_col.items():
        val[c] = w[v]
    w_rgv = inst.rgv.w_rgv
    for v, c in model.z_col.items():
        nxt = succ.get(v)
        if nxt is not None and nxt != end:
            val[c] = model.coef[(v, nxt)] * (w_rgv + w[v])
    return val


def assignment_to_route(model: MilpModel, val) -> tuple[int, ...]:
    """Follow the arcs with ``x = 1`` from the start vertex."""
    end = model.inst.end
    nxt = {}
    for a, c in model.x_col.items():
        if val[c] > 0.5:
            nxt[a[0]] = a[1]
    route = [0]
    seen = {0}
    while route[-1] != end:
        v = nxt.get(route[-1])
        if v is None or v in seen:
            raise ValueError("arc values do not form a start-to-end path")
        route.append(v)
        seen.add(v)
    if len(route) != end + 1:
        raise ValueError("path does not visit every vertex")
    return tuple(route)


def violations(model: MilpModel, val, tol: float = FEAS_TOL, families=None) -> list[RowViolation]:
    """Bounds, integrality and rows that ``val`` breaks, scaled by ``tol``."""
    val = np.asarray(val, dtype=float)
    out = []
    scale = tol * np.maximum(1.0, np.abs(model.lb))
    bad = np.where(val < model.lb - scale)[0]
    scale = tol * np.maximum(1.0, np.abs(np.where(np.isfinite(model.ub), model.ub, 0.0)))
    bad = np.union1d(bad, np.where(val > model.ub + scale)[0])
    for c in bad:
        out.append(RowViolation(f"bound:{model.names[c]}", "bound", val[c], model.lb[c], model.ub[c]))
    frac = np.abs(val - np.round(val))
    for c in np.where(model.binary & (frac > INT_TOL))[0]:
        out.append(RowViolation(f"integrality:{model.names[c]}", "integrality", val[c], 0.0, 1.0))
    act = model.A @ val
    mag = np.maximum(1.0, np.abs(model.A).max(axis=1).toarray().ravel() if model.num_rows else 0.0)
    lo_bad = act < model.row_lo - tol * np.maximum(mag, np.abs(np.where(np.isfinite(model.row_lo), model.row_lo, 0)))
    hi_bad = act > model.row_hi + tol * np.maximum(mag, np.abs(np.where(np.isfinite(model.row_hi), model.row_hi, 0)))
    for r in np.where(lo_bad | hi_bad)[0]:
        if families is not None and model.row_family[r] not in families:
            continue
        out.append(RowViolation(model.row_names[r], model.row_family[r], float(act[r]),
                                float(model.row_lo[r]), float(model.row_hi[r])))
    return out


def objective(model: MilpModel, val) -> float:
    return float(model.obj @ np.asarray(val, dtype=float))


@dataclass
class AssignmentReport:
    feasible: bool
    objective: float
    violations: list

    def __bool__(self):
        return self.feasible


def evaluate_assignment(model: MilpModel, values) -> AssignmentReport:
    """Check a full variable vector against every bound and row."""
    val = np.asarray(values, dtype=float)
    if val.shape != (model.num_cols,):
        raise ValueError(f"expected {model.num_cols} values, got shape {val.shape}")
    bad = violations(model, val)
    return AssignmentReport(not bad, objective(model, val), bad)


def evaluate_route_in_model(model: MilpModel, route) -> AssignmentReport:
    """Map ``route`` into the model with its earliest schedule and check it."""
    try:
        val = route_to_assignment(model, route)
    except KeyError as exc:
        return AssignmentReport(False, float("nan"), [RowViolation(f"missing arc {exc}", "arcs", 0.0, 0.0, 0.0)])
    return evaluate_assignment(model, val)


def _row_slack(model: MilpModel, tol: float):
    mag = np.maximum(1.0, np.abs(model.A).max(axis=1).toarray().ravel() if model.num_rows else 0.0)
    lo = np.where(np.isfinite(model.row_lo), model.row_lo, 0.0)
    hi = np.where(np.isfinite(model.row_hi), model.row_hi, 0.0)
    return tol * np.maximum(mag, np.abs(lo)), tol * np.maximum(mag, np.abs(hi))


def routes_in_model(model: MilpModel, orders, tol: float = FEAS_TOL, chunk: int = 4096) -> np.ndarray:
    """Batch version of :func:`evaluate_route_in_model`; one flag per order.

    ``orders`` is an integer array of shape ``(K, 2n + 2)``. Each order is
    mapped with its earliest schedule and checked against every bound and
    row, so the result agrees with the scalar path route by route.
    """
    R = np.atleast_2d(np.asarray(orders, dtype=np.int64))
    inst = model.inst
    n = inst.n
    end = inst.end
    nv = end + 1
    K, L = R.shape
    if L != nv:
        raise ValueError(f"orders must have {nv} entries")
    col_x = np.full((nv, nv), -1, dtype=np.int64)
    for (i, j), c in model.x_col.items():
        col_x[i, j] = c
    col_y = np.full((n + 1, nv, nv), -1, dtype=np.int64)
    for (k, i, j), c in model.y_col.items():
        col_y[k, i, j] = c
    b_cols = np.array([model.b_col[v] for v in range(nv)])
    w_cols = np.array([model.w_col[v] for v in range(end)])
    z_cols = np.array([model.z_col[v] for v in range(end)])
    s = inst.services
    t = inst.travel_time_matrix.copy()
    t[:, end] = 0.0
    q = inst.loads.astype(float)
    q[end] = 0.0
    ready = np.full(nv, -np.inf)
    for v in range(n + 1, 2 * n + 1):
        ready[v] = inst.request(v).e - s[v]
    coef = inst.energy_coef_matrix
    w_rgv = inst.rgv.w_rgv
    lo_slack, hi_slack = _row_slack(model, tol)
    lb_slack = tol * np.maximum(1.0, np.abs(model.lb))
    ub_slack = tol * np.maximum(1.0, np.abs(model.ub))
    out = np.zeros(K, dtype=bool)
    for start in range(0, K, chunk):
        Rc = R[start : start + chunk]
        k = len(Rc)
        rows = np.arange(k)
        ok = np.ones(k, dtype=bool)
        V = np.zeros((k, model.num_cols))
        pos = np.empty((k, nv), dtype=np.int64)
        pos[rows[:, None], Rc] = np.arange(L)[None, :]
        b = np.zeros((k, nv))
        w = np.zeros((k, nv))
        z = np.zeros((k, nv))
        for idx in range(L - 1):
            u, v = Rc[:, idx], Rc[:, idx + 1]
            c = col_x[u, v]
            ok &= c >= 0
            V[rows, np.maximum(c, 0)] = np.where(c >= 0, 1.0, V[rows, np.maximum(c, 0)])
            tv = np.maximum(b[rows, u] + s[u] + t[u, v], ready[v])
            b[rows, v] = tv
            w[rows, v] = w[rows, u] + q[v]
            z[rows, u] = np.where(v != end, coef[u, np.minimum(v, end)] * (w_rgv + w[rows, u]), 0.0)
            for kk in range(1, n + 1):
                on = (idx >= pos[:, kk]) & (idx < pos[:, kk + n])
                if not on.any():
                    continue
                cy = col_y[kk, u, v]
                ok &= ~on | (cy >= 0)
                sel = on & (cy >= 0)
                V[rows[sel], cy[sel]] = 1.0
        V[:, b_cols] = b
        V[:, w_cols] = w[:, :end]
        V[:, z_cols] = z[:, :end]
        ok &= np.all(V >= model.lb - lb_slack, axis=1) & np.all(V <= model.ub + ub_slack, axis=1)
        act = (model.A @ V.T).T
        ok &= np.all(act >= model.row_lo - lo_slack, axis=1) & np.all(act <= model.row_hi + hi_slack, axis=1)
        out[start : start + k] = ok
    return out
