"""Static valid inequalities over the arc variables.

* ``g1``: two-vertex subtour rows, lifted precedence rows for a handful of
  small vertex sets, and the two three-vertex lifted D rows.
* ``g2``: predecessor/successor exclusions implied by LIFO and
  crossing-last-out service.
* ``g3``: the same for FIFO and crossing-last-out service.

Each row reads ``sum(coef * x) <= rhs``; arcs outside the arc set are simply
dropped from the sum. Rows that the variable bounds already imply are not
emitted.

Read narrowly, two of the predecessor/successor sets assume that ``i`` is
picked before ``j`` where the other order is also feasible, and then cut off
deck-feasible routes such as ``0, 2, 1, 6, 3, 7, 4, 5, 8, 9`` with types
``(T1, T3, T2, T4)``. By default the sets are widened to cover both orders;
``literal=True`` keeps the narrow reading for comparison.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np
import scipy.sparse as sp

from .model import INF, MilpModel, RowBuffer, parse_cuts

T1, T2, T3, T4 = 1, 2, 3, 4


class _Sets:
    def __init__(self, model: MilpModel):
        inst = model.inst
        self.n = inst.n
        self.P = set(range(1, self.n + 1))
        ty = inst.type_codes
        self.by = {t: {i for i in self.P if ty[i] == t} for t in (T1, T2, T3, T4)}
        self.type = ty

    def pk(self, *types):
        out = set()
        for t in types:
            out |= self.by[t]
        return out

    def dl(self, pickups):
        return {k + self.n for k in pickups}


def _lifted_precedence(model: MilpModel, buf: RowBuffer, sets: _Sets):
    n = sets.n
    V = set(range(0, 2 * n + 2))
    x = model.x_col

    def emit(name, S, kind):
        S = set(S)
        Sbar = V - S
        terms = [(a, b) for a in S for b in S if a != b]
        if kind == "pi":
            pi = {p for p in sets.P if p + n in S}
            terms += [(a, b) for a in S for b in Sbar & pi]
            terms += [(a, b) for a in S & pi for b in Sbar - pi]
        else:
            sigma = {p + n for p in S & sets.P}
            terms += [(a, b) for a in Sbar & sigma for b in S]
            terms += [(a, b) for a in Sbar - sigma for b in S & sigma]
        _add(buf, name, "g1", [(x[t], 1.0) for t in set(terms) if t in x], len(S) - 1)

    for i in sorted(sets.P):
        for j in sorted(sets.P - {i}):
            emit(f"g1_lp_{i}_{j}", {i, j}, "pi")
            emit(f"g1_lp_{i}_{j + n}", {i, j + n}, "pi")
            emit(f"g1_lp_{i}_{i + n}_{j}", {i, i + n, j}, "pi")
            emit(f"g1_ls_{i + n}_{j + n}", {i + n, j + n}, "sigma")
            emit(f"g1_ls_{i}_{j + n}", {i, j + n}, "sigma")
            emit(f"g1_ls_{i}_{i + n}_{j + n}", {i, i + n, j + n}, "sigma")


def group1(model: MilpModel, buf: RowBuffer, literal=False):
    sets = _Sets(model)
    n = sets.n
    x = model.x_col
    Vp = range(1, 2 * n + 1)
    for u in Vp:
        for v in Vp:
            if u < v:
                _add(buf, f"g1_sub_{u}_{v}", "g1", [(x[a], 1.0) for a in ((u, v), (v, u)) if a in x], 1)
    _lifted_precedence(model, buf, sets)
    for i in sorted(sets.P):
        for j in sorted(sets.P - {i}):
            a = [((i + n, j), 1), ((j, i), 1), ((i, i + n), 1), ((j + n, i + n), 1), ((j, i + n), 2)]
            _add(buf, f"g1_dplus_{i}_{j}", "g1", [(x[t], c) for t, c in a if t in x], 2)
            b = [((i, i + n), 1), ((i + n, j + n), 1), ((j + n, i), 1), ((i, j), 1), ((i, j + n), 2)]
            _add(buf, f"g1_dminus_{i}_{j}", "g1", [(x[t], c) for t, c in b if t in x], 2)


def _g2_pairs(s: _Sets):
    out = []
    for i in sorted(s.by[T1]):
        for j in sorted(s.by[T1] - {i}):
            out.append((i, j, "11"))
    for i in sorted(s.by[T4]):
        for j in sorted(s.by[T1]):
            out.append((i, j, "41"))
    for i in sorted(s.by[T2]):
        for j in sorted(s.by[T2] - {i}):
            out.append((i, j, "22"))
    for i in sorted(s.by[T3]):
        for j in sorted(s.by[T2]):
            out.append((i, j, "32"))
    return out


def _g2_sets(s: _Sets, i, j, case, literal=False):
    """(pred of i+n, succ of j+n, pred of j, succ of i) allowed sets."""
    P = s.P
    pk, dl = s.pk, s.dl
    if case == "11":
        pred_in = pk(T2, T4) | dl(P - (pk(T4) | {i}))
        succ_jn = (P - (pk(T3) | {i, j})) | dl(pk(T2, T3) | {i})
        pred_j = {i} | pk(T2, T4) | dl(P - (pk(T4) | {i, j}))
        succ_i = (P - (pk(T3) | {i})) | dl(pk(T2, T3))
    elif case == "41":
        pred_in = (pk(T2) | (pk(T4) - {i})) | dl(P - (pk(T3) | {i}))
        succ_jn = (P - (pk(T3) | {i, j})) | dl(P - (pk(T3) | {j}))
        pred_j = {0} | pk(T2, T4) | dl(P - (pk(T3) | {i, j}))
        if not literal:
            # j may come first; a T3 request can then finish or sit below j
            pred_j |= pk(T3) | dl(pk(T3) - {i, j})
        succ_i = (P - (pk(T3) | {i})) | dl(pk(T1) | (pk(T4) - {i}))
    elif case == "22":
        pred_in = pk(T1, T3) | dl(P - (pk(T3) | {i}))
        succ_jn = (P - (pk(T4) | {i, j})) | dl(pk(T1, T4) | {i})
        pred_j = {i} | pk(T1, T3) | dl(P - (pk(T3) | {i, j}))
        succ_i = (P - (pk(T4) | {i})) | dl(pk(T1, T4))
    else:  # "32"
        pred_in = (pk(T1) | (pk(T3) - {i})) | dl(P - (pk(T4) | {i}))
        succ_jn = (P - (pk(T4) | {i, j})) | dl(P - (pk(T4) | {j}))
        pred_j = {0} | pk(T1, T3) | dl(P - (pk(T4) | {i, j}))
        if not literal:
            pred_j |= pk(T4) | dl(pk(T4) - {i, j})
        succ_i = (P - (pk(T4) | {i})) | dl(pk(T2) | (pk(T3) - {i}))
    return pred_in, succ_jn, pred_j, succ_i


def group2(model: MilpModel, buf: RowBuffer, literal=False):
    s = _Sets(model)
    n = s.n
    x = model.x_col
    for i, j, case in _g2_pairs(s):
        pred_in, succ_jn, pred_j, succ_i = _g2_sets(s, i, j, case, literal)
        head = (i, j)
        _add(buf, f"g2_pred_{i + n}_after_{i}_{j}", "g2", _head_plus(x, head, _into(x, i + n, pred_in)), 1)
        _add(buf, f"g2_succ_{j + n}_after_{i}_{j}", "g2", _head_plus(x, head, _outof(x, j + n, succ_jn)), 1)
        head = (j + n, i + n)
        _add(buf, f"g2_pred_{j}_after_{j + n}_{i + n}", "g2", _head_plus(x, head, _into(x, j, pred_j)), 1)
        _add(buf, f"g2_succ_{i}_after_{j + n}_{i + n}", "g2", _head_plus(x, head, _outof(x, i, succ_i)), 1)
        arcs = [(i, j), (i + n, j + n), (j + n, i), (i + n, j)]
        _add(buf, f"g2_cross_{i}_{j}", "g2", [(x[a], 1.0) for a in arcs if a in x], 1)
        if case in ("41", "32"):
            arcs = [(i, j), (j, i), (i, i + n), (i + n, j + n)]
            _add(buf, f"g2_empty_{i}_{j}", "g2", [(x[a], 1.0) for a in arcs if a in x], 1)


def _g3_pairs(s: _Sets):
    out = []
    for i in sorted(s.by[T1]):
        for j in sorted(s.by[T4]):
            out.append((i, j, "14"))
    for i in sorted(s.by[T4]):
        for j in sorted(s.by[T4] - {i}):
            out.append((i, j, "44"))
    for i in sorted(s.by[T2]):
        for j in sorted(s.by[T3]):
            out.append((i, j, "23"))
    for i in sorted(s.by[T3]):
        for j in sorted(s.by[T3] - {i}):
            out.append((i, j, "33"))
    return out


def _g3_sets(s: _Sets, i, j, case, literal=False):
    """(succ of i+n, pred of j+n, succ of i, pred of j) allowed sets."""
    P = s.P
    pk, dl = s.pk, s.dl
    if case == "14":
        succ_in = (P - (pk(T3) | {i, j})) | dl(P - (pk(T3) | {i}))
        pred_jn = pk(T2) | (pk(T4) - {j}) | dl(P - (pk(T3) | {j}))
        succ_i = {j} | (pk(T1) - {i}) | pk(T2) | dl(pk(T2, T3) | {i})
        if not literal:
            # with j aboard first, another T4 request can queue behind it
            succ_i |= pk(T4)
        pred_j = {0} | pk(T1) | (pk(T4) - {j}) | dl(P - {i, j})
    elif case == "44":
        succ_in = (P - (pk(T3) | {i, j})) | dl(pk(T2) | {j})
        pred_jn = pk(T2) | (pk(T4) - {i, j}) | dl(pk(T1, T2) | {i})
        succ_i = {j} | pk(T1, T2) | dl(pk(T1) | (pk(T4) - {j}))
        pred_j = {i} | pk(T1) | dl(P - (pk(T3) | {i, j}))
    elif case == "23":
        succ_in = (P - (pk(T4) | {i, j})) | dl(P - (pk(T4) | {i}))
        pred_jn = pk(T1) | (pk(T3) - {j}) | dl(P - (pk(T4) | {j}))
        succ_i = {j} | pk(T1) | (pk(T2) - {i}) | dl(pk(T1, T4) | {i})
        if not literal:
            succ_i |= pk(T3)
        pred_j = {0} | pk(T2) | (pk(T3) - {j}) | dl(P - {i, j})
    else:  # "33"
        succ_in = (P - (pk(T4) | {i, j})) | dl(pk(T1) | {j})
        pred_jn = pk(T1) | (pk(T3) - {i, j}) | dl(pk(T1, T2) | {i})
        succ_i = {j} | pk(T1, T2) | dl(pk(T2) | (pk(T3) - {j}))
        pred_j = {i} | pk(T2) | dl(P - (pk(T4) | {i, j}))
    return succ_in, pred_jn, succ_i, pred_j


def group3(model: MilpModel, buf: RowBuffer, literal=False):
    s = _Sets(model)
    n = s.n
    x = model.x_col
    for i, j, case in _g3_pairs(s):
        succ_in, pred_jn, succ_i, pred_j = _g3_sets(s, i, j, case, literal)
        head = (i, j)
        _add(buf, f"g3_succ_{i + n}_after_{i}_{j}", "g3", _head_plus(x, head, _outof(x, i + n, succ_in)), 1)
        _add(buf, f"g3_pred_{j + n}_after_{i}_{j}", "g3", _head_plus(x, head, _into(x, j + n, pred_jn)), 1)
        head = (i + n, j + n)
        _add(buf, f"g3_succ_{i}_after_{i + n}_{j + n}", "g3", _head_plus(x, head, _outof(x, i, succ_i)), 1)
        _add(buf, f"g3_pred_{j}_after_{i + n}_{j + n}", "g3", _head_plus(x, head, _into(x, j, pred_j)), 1)
        arcs = [(i, j), (j + n, i + n), (j + n, i), (i + n, j)]
        _add(buf, f"g3_cross_{i}_{j}", "g3", [(x[a], 1.0) for a in arcs if a in x], 1)
        if case in ("44", "33"):
            arcs = [(j, i), (i, i + n), (i + n, j + n)]
            _add(buf, f"g3_empty_{i}_{j}", "g3", [(x[a], 1.0) for a in arcs if a in x], 1)


def _into(x, v, allowed):
    """Arcs entering ``v`` from vertices outside ``allowed``."""
    return [a for a in x if a[1] == v and a[0] not in allowed]


def _outof(x, v, allowed):
    return [a for a in x if a[0] == v and a[1] not in allowed]


def _head_plus(x, head, arcs):
    if head not in x:
        return []
    return [(x[head], 1.0)] + [(x[a], 1.0) for a in arcs if a != head]


def _add(buf: RowBuffer, name, family, terms, rhs):
    # x variables live in [0, 1]; skip rows that cannot be violated
    merged: dict = {}
    for c, a in terms:
        merged[c] = merged.get(c, 0.0) + a
    if sum(a for a in merged.values() if a > 0) <= rhs:
        return
    buf.add(name, family, list(merged.items()), -INF, float(rhs))


_GROUPS = {"g1": group1, "g2": group2, "g3": group3}


def cut_rows(model: MilpModel, groups, literal: bool = False) -> RowBuffer:
    buf = RowBuffer()
    for g in sorted(parse_cuts(groups)):
        _GROUPS[g](model, buf, literal)
    return buf


def add_valid_inequalities(model: MilpModel, groups, literal: bool = False) -> MilpModel:
    """Return a copy of ``model`` with the requested cut groups appended."""
    groups = parse_cuts(groups) - model.cuts
    if not groups:
        return model
    buf = cut_rows(model, groups, literal)
    if len(buf) == 0:
        return replace(model, cuts=model.cuts | groups)
    extra = buf.matrix(model.num_cols)
    fam = dict(model.cut_families)
    for f in buf.family:
        fam[f] = fam.get(f, 0) + 1
    return replace(
        model,
        A=sp.vstack([model.A, extra], format="csr"),
        row_lo=np.concatenate([model.row_lo, buf.lo]),
        row_hi=np.concatenate([model.row_hi, buf.hi]),
        row_names=model.row_names + buf.names,
        row_family=model.row_family + buf.family,
        cuts=model.cuts | groups,
        cut_families=fam,
    )
