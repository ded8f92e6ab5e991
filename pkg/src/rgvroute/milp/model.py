"""Matrix form of the energy-minimising routing MILP.

Variables, in column order:

* ``x_i_j``   binary, one per arc,
* ``y_k_i_j`` binary, arc ``(i, j)`` between task vertices lies on the
  sub-path from pickup ``k`` to its delivery,
* ``b_i``     service start time,
* ``w_i``     load after serving ``i``,
* ``z_i``     energy of the arc leaving ``i``.

Indicator constraints are compiled to big-M rows. Every row is stored as
``lo <= a @ v <= hi`` in a CSR matrix together with a name and a family tag.
"""
from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from ..instance import Instance
from .arcs import ArcSet, reduce_arcs

INF = np.inf
T1, T2, T3, T4 = 1, 2, 3, 4

GROUP_NAMES = ("g1", "g2", "g3")
CUT_PRESETS = {
    "none": (),
    "g1": ("g1",),
    "g2": ("g2",),
    "g3": ("g3",),
    "g23": ("g2", "g3"),
    "g123": ("g1", "g2", "g3"),
}


def parse_cuts(spec) -> frozenset:
    if spec is None:
        return frozenset()
    if isinstance(spec, str):
        if spec not in CUT_PRESETS:
            raise ValueError(f"unknown cut preset {spec!r}; choose from {sorted(CUT_PRESETS)}")
        return frozenset(CUT_PRESETS[spec])
    groups = frozenset(spec)
    unknown = groups - set(GROUP_NAMES)
    if unknown:
        raise ValueError(f"unknown cut groups {sorted(unknown)}")
    return groups


@dataclass
class MilpModel:
    inst: Instance
    arcs: ArcSet
    names: list
    binary: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    obj: np.ndarray
    A: sp.csr_matrix
    row_lo: np.ndarray
    row_hi: np.ndarray
    row_names: list
    row_family: list
    x_col: dict
    y_col: dict
    b_col: dict
    w_col: dict
    z_col: dict
    eta: dict
    rho: dict
    gamma: dict
    coef: dict
    horizon: float
    cuts: frozenset = frozenset()
    conflict_form: str = "zero"
    cut_families: dict = field(default_factory=dict)

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]

    @property
    def num_cols(self) -> int:
        return self.A.shape[1]

    @property
    def nnz(self) -> int:
        return self.A.nnz

    def family_counts(self) -> dict:
        out: dict = {}
        for f in self.row_family:
            out[f] = out.get(f, 0) + 1
        return out

    def digest(self) -> str:
        h = hashlib.sha256()
        for arr in (self.lb, self.ub, self.obj, self.row_lo, self.row_hi, self.A.indptr, self.A.indices, self.A.data):
            h.update(np.ascontiguousarray(arr).tobytes())
        h.update("\n".join(self.names).encode())
        h.update("\n".join(self.row_names).encode())
        return h.hexdigest()


class RowBuffer:
    """Accumulates rows before they are frozen into a sparse matrix."""

    def __init__(self):
        self.indptr = [0]
        self.indices: list[int] = []
        self.data: list[float] = []
        self.lo: list[float] = []
        self.hi: list[float] = []
        self.names: list[str] = []
        self.family: list[str] = []

    def add(self, name, family, terms, lo=-INF, hi=INF, keep_empty=False):
        merged: dict = {}
        for c, a in terms:
            merged[c] = merged.get(c, 0.0) + a
        merged = {c: a for c, a in merged.items() if a != 0.0}
        if not merged and not keep_empty:
            return False
        for c in sorted(merged):
            self.indices.append(c)
            self.data.append(merged[c])
        self.indptr.append(len(self.indices))
        self.lo.append(lo)
        self.hi.append(hi)
        self.names.append(name)
        self.family.append(family)
        return True

    def __len__(self):
        return len(self.names)

    def matrix(self, ncols: int) -> sp.csr_matrix:
        return sp.csr_matrix(
            (np.array(self.data, dtype=float), np.array(self.indices, dtype=np.int64), np.array(self.indptr, dtype=np.int64)),
            shape=(len(self.names), ncols),
        )


def completion_bound(inst: Instance) -> float:
    """An upper bound on every service completion of any earliest schedule.

    Idle time only occurs while waiting for an early window, after which the
    clock runs through at most every service and ``2n`` travel legs.
    """
    n = inst.n
    if n == 0:
        return 0.0
    pos = inst.positions[:-1]
    span = (np.nanmax(pos) - np.nanmin(pos)) * inst.unit_length
    tmax = float(inst.travel_time_matrix.max()) if span > 0 else 0.0
    emax = max(r.e for r in inst.requests)
    return float(emax + inst.services[1 : 2 * n + 1].sum() + 2 * n * tmax) + 1.0


def latest_completion(inst: Instance, clip: bool = True) -> np.ndarray:
    """Effective deadline per request id (index 0 unused)."""
    horizon = completion_bound(inst)
    L = np.zeros(inst.n + 1)
    for r in inst.requests:
        L[r.id] = min(r.l, horizon) if clip else r.l
    return L


def big_m(inst: Instance, i: int, j: int, L: np.ndarray) -> tuple[float, float]:
    """Big-M pair ``(eta, rho)`` for the time and load rows of arc ``(i, j)``.

    ``L`` holds the latest completion time per request. Delivery start times
    are bounded below by ``e - s`` (completion, not start, must respect the
    early window).
    """
    n = inst.n
    end = 2 * n + 1
    t = inst.travel_time_matrix
    s = inst.services
    q = inst.loads
    Q = inst.Q
    if 1 <= j <= n or j == end:
        early = 0.0
    else:
        early = max(0.0, inst.request(j).e - s[j])
    if i == 0 or 1 <= i <= n:
        if i == 0:
            eta = t[0, j] - early
        else:
            eta = L[i] - s[i + n] - t[i, i + n] + t[i, j] - early
        rho = Q if 1 <= j <= n else Q + q[j]
    else:
        eta = L[i - n] + t[i, j] - early
        rho = Q + q[i] if 1 <= j <= n else Q + q[i] + q[j]
    return float(eta), float(rho)


def _conflict_pairs(types, P, form):
    """(family, k, j, which) triples for the deck conflict rows.

    ``which`` selects the terms: 'pick' sums arcs into j, 'drop' sums arcs
    into j+n.
    """
    by = {t: [i for i in P if types[i] == t] for t in (T1, T2, T3, T4)}
    rows = []
    for tt in (T1, T2):
        for k in by[tt]:
            for j in by[tt]:
                if j != k:
                    rows.append(("lifo", k, j))
    for tt in (T3, T4):
        for k in by[tt]:
            for j in by[tt]:
                if j != k:
                    rows.append(("fifo", k, j))
    if form == "zero":
        for tk, tj in ((T1, T3), (T2, T4)):
            for k in by[tk]:
                for j in by[tj]:
                    rows.append(("cfi", k, j))
        for tk, tj in ((T1, T4), (T2, T3)):
            for k in by[tk]:
                for j in by[tj]:
                    rows.append(("clo", k, j))
    elif form == "inequality":
        for tk, tj in ((T3, T1), (T4, T2)):
            for k in by[tk]:
                for j in by[tj]:
                    rows.append(("cfi_ineq", k, j))
        for tk, tj in ((T4, T1), (T3, T2)):
            for k in by[tk]:
                for j in by[tj]:
                    rows.append(("clo_ineq", k, j))
    else:
        raise ValueError(f"unknown conflict form {form!r}")
    for tk, tj in ((T3, T4), (T4, T3)):
        for k in by[tk]:
            for j in by[tj]:
                rows.append(("deadlock", k, j))
    return rows


def build_model(inst: Instance, arcs: ArcSet | None = None, cuts=(), *, conflict_form: str = "zero",
                clip_horizon: bool = True, literal_cuts: bool = False, floor: bool = False) -> MilpModel:
    """Assemble the routing MILP.

    ``floor`` adds one row per vertex bounding ``z_i`` below by the energy
    of the outgoing arc written through ``x`` and ``y``. The rows hold with
    equality on every route, so they never cut an integer point, but they
    give the relaxation a nonzero bound where the big-M energy rows go slack.
    """
    from .cuts import add_valid_inequalities

    arcs = arcs if arcs is not None else reduce_arcs(inst)
    n = inst.n
    end = 2 * n + 1
    P = list(range(1, n + 1))
    Vp = list(range(1, 2 * n + 1))
    arc_list = sorted(arcs.arcs)
    inner = [a for a in arc_list if a[0] != 0 and a[1] != end]
    types = inst.type_codes
    s = inst.services
    t = inst.travel_time_matrix
    q = inst.loads
    Q = inst.Q
    w_rgv = inst.rgv.w_rgv
    coef_m = inst.energy_coef_matrix
    L = latest_completion(inst, clip_horizon)
    horizon = completion_bound(inst) if clip_horizon else max([r.l for r in inst.requests], default=0.0)

    names: list[str] = []
    lb: list[float] = []
    ub: list[float] = []
    binary: list[bool] = []

    def new_var(name, lo, hi, is_bin):
        names.append(name)
        lb.append(lo)
        ub.append(hi)
        binary.append(is_bin)
        return len(names) - 1

    x_col = {a: new_var(f"x_{a[0]}_{a[1]}", 0.0, 1.0, True) for a in arc_list}
    y_col = {}
    for k in P:
        for a in inner:
            y_col[(k,) + a] = new_var(f"y_{k}_{a[0]}_{a[1]}", 0.0, 1.0, True)

    b_col, w_col, z_col = {}, {}, {}
    b_col[0] = new_var("b_0", 0.0, 0.0, False)
    for v in Vp:
        if v <= n:
            hi = L[v] - s[v + n] - t[v, v + n] - s[v]
            lo = 0.0
        else:
            r = inst.request(v)
            hi = L[v - n] - s[v]
            lo = max(0.0, r.e - s[v])
        b_col[v] = new_var(f"b_{v}", lo, hi, False)
    b_col[end] = new_var(f"b_{end}", 0.0, horizon, False)
    w_col[0] = new_var("w_0", 0.0, 0.0, False)
    for v in Vp:
        w_col[v] = new_var(f"w_{v}", float(max(0, q[v])), float(min(Q, Q + q[v])), False)

    eta, rho, gamma, coef = {}, {}, {}, {}
    for a in arc_list:
        i, j = a
        eta[a], rho[a] = big_m(inst, i, j, L)
        if j != end:
            coef[a] = float(coef_m[i, j])
            gamma[a] = coef[a] * (w_rgv + min(Q, Q + q[i]))
    for v in [0] + Vp:
        zub = max([gamma[a] for a in arc_list if a[0] == v and a[1] != end], default=0.0)
        z_col[v] = new_var(f"z_{v}", 0.0, zub, False)

    rows = RowBuffer()
    out_arcs = {v: [] for v in range(end + 1)}
    in_arcs = {v: [] for v in range(end + 1)}
    for a in arc_list:
        out_arcs[a[0]].append(a)
        in_arcs[a[1]].append(a)

    for v in [0] + Vp:
        rows.add(f"out_{v}", "degree_out", [(x_col[a], 1.0) for a in out_arcs[v]], 1.0, 1.0, keep_empty=True)
    for v in Vp + [end]:
        rows.add(f"in_{v}", "degree_in", [(x_col[a], 1.0) for a in in_arcs[v]], 1.0, 1.0, keep_empty=True)
    for i in P:
        rows.add(f"pair_{i}", "pairing", [(b_col[i + n], 1.0), (b_col[i], -1.0)], s[i] + t[i, i + n])
    qr = inst.queues
    for i in P:
        nx = qr.succ(i) if i in qr.queue_of else None
        if nx is not None:
            rows.add(f"queue_{i}", "queue", [(b_col[nx], 1.0), (b_col[i], -1.0)], s[i])
    for a in arc_list:
        i, j = a
        e_ = eta[a]
        rows.add(f"time_{i}_{j}", "time_link",
                 [(b_col[j], 1.0), (b_col[i], -1.0), (x_col[a], -e_)], s[i] + (t[i, j] if j != end else 0.0) - e_)
    for a in arc_list:
        i, j = a
        if j == end:
            continue
        r_ = rho[a]
        rows.add(f"load_{i}_{j}", "load_link", [(w_col[j], 1.0), (w_col[i], -1.0), (x_col[a], -r_)], q[j] - r_)

    y_out = {(k, v): [] for k in P for v in Vp}
    y_in = {(k, v): [] for k in P for v in Vp}
    for k in P:
        for a in inner:
            c = y_col[(k,) + a]
            y_out[(k, a[0])].append(c)
            y_in[(k, a[1])].append(c)
    for k in P:
        for v in Vp:
            rhs = 1.0 if v == k else (-1.0 if v == k + n else 0.0)
            terms = [(c, 1.0) for c in y_out[(k, v)]] + [(c, -1.0) for c in y_in[(k, v)]]
            rows.add(f"flow_{k}_{v}", "flow", terms, rhs, rhs, keep_empty=True)

    for fam, k, j in _conflict_pairs(types, P, conflict_form):
        pick = [(y_col[(k, i, j)], 1.0) for i in _task_sources(in_arcs, j, end)]
        drop = [(y_col[(k, i, j + n)], 1.0) for i in _task_sources(in_arcs, j + n, end)]
        name = f"{fam}_{k}_{j}"
        if fam == "lifo":
            rows.add(name, "conflict", pick + [(c, -a) for c, a in drop], 0.0, 0.0)
        elif fam == "fifo":
            rows.add(name, "conflict", pick + drop, -INF, 1.0)
        elif fam in ("cfi", "deadlock"):
            rows.add(name, "conflict", pick, 0.0, 0.0)
        elif fam == "clo":
            rows.add(name, "conflict", drop, 0.0, 0.0)
        elif fam == "cfi_ineq":
            rows.add(name, "conflict", drop + [(c, -a) for c, a in pick], -INF, 0.0)
        elif fam == "clo_ineq":
            rows.add(name, "conflict", pick + [(c, -a) for c, a in drop], -INF, 0.0)

    for k in P:
        for a in inner:
            rows.add(f"link_{k}_{a[0]}_{a[1]}", "link", [(y_col[(k,) + a], 1.0), (x_col[a], -1.0)], -INF, 0.0)

    for a in arc_list:
        i, j = a
        if j == end:
            continue
        c = coef[a]
        g = gamma[a]
        rows.add(f"energy_{i}_{j}", "energy", [(z_col[i], 1.0), (w_col[i], -c), (x_col[a], -g)], c * w_rgv - g,
                 keep_empty=True)

    if floor:
        inner_set = set(inner)
        for i in [0] + Vp:
            terms = [(z_col[i], 1.0)]
            for a in out_arcs[i]:
                if a[1] == end:
                    continue
                terms.append((x_col[a], -coef[a] * w_rgv))
                if a in inner_set:
                    terms += [(y_col[(k,) + a], -coef[a] * q[k]) for k in P if q[k] > 0]
            rows.add(f"floor_{i}", "floor", terms, 0.0, INF)

    ncols = len(names)
    obj = np.zeros(ncols)
    for v, c in z_col.items():
        obj[c] = 1.0
    model = MilpModel(
        inst=inst,
        arcs=arcs,
        names=names,
        binary=np.array(binary, dtype=bool),
        lb=np.array(lb, dtype=float),
        ub=np.array(ub, dtype=float),
        obj=obj,
        A=rows.matrix(ncols),
        row_lo=np.array(rows.lo, dtype=float),
        row_hi=np.array(rows.hi, dtype=float),
        row_names=rows.names,
        row_family=rows.family,
        x_col=x_col,
        y_col=y_col,
        b_col=b_col,
        w_col=w_col,
        z_col=z_col,
        eta=eta,
        rho=rho,
        gamma=gamma,
        coef=coef,
        horizon=horizon,
        conflict_form=conflict_form,
    )
    groups = parse_cuts(cuts)
    return add_valid_inequalities(model, groups, literal_cuts) if groups else model


def _task_sources(in_arcs, v, end):
    return [a[0] for a in in_arcs[v] if a[0] != 0 and v != end]


def expected_row_counts(inst: Instance, arcs: ArcSet, conflict_form: str = "zero") -> dict:
    """Closed-form family sizes of the core model (before cuts).

    Conflict families may lose rows whose arcs were all reduced away, so the
    count returned for them is an upper bound.
    """
    n = inst.n
    end = 2 * n + 1
    A = len(arcs)
    A_end = sum(1 for a in arcs.arcs if a[1] == end)
    inner = len(arcs.inner())
    qr = inst.queues
    queue_rows = sum(len(c) - 1 for c in qr.chains)
    types = inst.type_codes
    P = list(range(1, n + 1))
    return {
        "degree_out": 2 * n + 1,
        "degree_in": 2 * n + 1,
        "pairing": n,
        "queue": queue_rows,
        "time_link": A,
        "load_link": A - A_end,
        "flow": 2 * n * n,
        "link": n * inner,
        "energy": A - A_end,
        "conflict_max": len(_conflict_pairs(types, P, conflict_form)),
    }


def model_stats(model: MilpModel) -> dict:
    inst = model.inst
    n = inst.n
    stats = {
        "n": n,
        "Q": inst.Q,
        "arc_mode": model.arcs.mode.value,
        "arcs": len(model.arcs),
        "complete_2n+1_squared": (2 * n + 1) ** 2,
        "complete_2n+2_squared": (2 * n + 2) ** 2,
        "cuts": "+".join(sorted(model.cuts)) or "none",
        "rows": model.num_rows,
        "cols": model.num_cols,
        "binaries": int(model.binary.sum()),
        "nonzeros": model.nnz,
    }
    return stats


def write_stats_csv(models: Iterable[tuple[str, MilpModel]], path) -> None:
    rows = []
    for label, m in models:
        d = {"instance": label}
        d.update(model_stats(m))
        rows.append(d)
    if not rows:
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
