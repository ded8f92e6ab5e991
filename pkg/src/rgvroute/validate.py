"""Cross-checks between the deck oracle, the sequence search and the MILP.

Used by ``rgvroute validate`` and by the acceptance tests. For every small
random instance:

* the routes the deck accepts are exactly the visit orders whose MILP
  assignment satisfies every row,
* the sequence-search optimum equals the MILP optimum.
"""
from __future__ import annotations

import functools
import itertools
import random
import time
from dataclasses import dataclass, field

import numpy as np

from .constants import OPT_TOL
from .milp.assignment import routes_in_model
from .milp.model import build_model
from .seqsolver import Infeasible, enumerate_feasible, solve_exact
from .simulator import random_instance


@functools.lru_cache(maxsize=16)
def candidate_orders(n: int, *, precedence_only: bool = False) -> np.ndarray:
    """Every order of the ``2n`` task vertices between start and end.

    With ``precedence_only`` only orders that pick each container up before
    delivering it are produced.
    """
    end = 2 * n + 1
    if not precedence_only:
        body = np.array(list(itertools.permutations(range(1, 2 * n + 1))), dtype=np.int64).reshape(-1, 2 * n)
    else:
        out = []

        def rec(prefix, left, picked):
            if not left:
                out.append(tuple(prefix))
                return
            for v in sorted(left):
                if v > n and (v - n) not in picked:
                    continue
                prefix.append(v)
                left.remove(v)
                rec(prefix, left, picked | {v} if v <= n else picked)
                left.add(v)
                prefix.pop()

        rec([], set(range(1, 2 * n + 1)), frozenset())
        body = np.array(out, dtype=np.int64).reshape(-1, 2 * n)
    k = len(body)
    full = np.hstack([np.zeros((k, 1), dtype=np.int64), body, np.full((k, 1), end, dtype=np.int64)])
    full.setflags(write=False)
    return full


@dataclass
class InstanceCheck:
    label: str
    n: int
    Q: int
    deck_routes: int
    model_routes: int
    set_equal: bool
    seq_opt: float | None
    milp_opt: float | None
    opt_equal: bool
    orders_checked: int


@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return all(c.set_equal and c.opt_equal for c in self.checks)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            flag = "ok" if (c.set_equal and c.opt_equal) else "MISMATCH"
            out.append(f"{c.label:<14} n={c.n} Q={c.Q} deck={c.deck_routes} model={c.model_routes} "
                       f"orders={c.orders_checked} seq={c.seq_opt} milp={c.milp_opt} {flag}")
        bad = sum(not (c.set_equal and c.opt_equal) for c in self.checks)
        out.append(f"{len(self.checks)} instances, {bad} mismatches, {self.seconds:.1f}s")
        return out


def check_instance(inst, label: str = "", *, milp: bool = True, full_permutations_up_to: int = 4,
                   cuts="none") -> InstanceCheck:
    """Compare the deck-feasible route set with the MILP-feasible one and the two optima."""
    n = inst.n
    deck = {tuple(r) for r in enumerate_feasible(inst, max_n=max(6, n)).routes}
    orders = candidate_orders(n, precedence_only=n > full_permutations_up_to)
    model = build_model(inst, cuts=cuts)
    ok = routes_in_model(model, orders)
    in_model = {tuple(int(v) for v in o) for o in orders[ok]}
    seq_opt = milp_opt = None
    opt_equal = True
    if milp:
        from .milpsolver import solve_milp

        try:
            seq_opt = solve_exact(inst).energy
        except Infeasible:
            seq_opt = None
        res = solve_milp(build_model(inst, cuts=cuts, floor=True))
        milp_opt = res.objective if res.values is not None else None
        if seq_opt is None or milp_opt is None:
            opt_equal = seq_opt is None and milp_opt is None and res.optimal is False
        else:
            opt_equal = res.optimal and abs(seq_opt - milp_opt) <= OPT_TOL
    return InstanceCheck(label, n, inst.Q, len(deck), len(in_model), deck == in_model, seq_opt, milp_opt,
                         opt_equal, len(orders))


def instance_suite(count: int, max_n: int = 5, seed: int = 0, *, min_n: int = 1):
    """Seeded small instances; every request type appears once ``n >= 4``."""
    rng = random.Random(seed)
    for k in range(count):
        n = rng.randint(min_n, max_n)
        Q = rng.randint(1, 3)
        s = rng.randrange(1 << 30)
        m = rng.randint(3, 8)
        dl = (1.5, 3.0) if rng.random() < 0.25 else None
        yield f"v{k}-s{s % 100000}", random_instance(s, n=n, m=m, Q=Q, deadline_slack=dl)


def run_validation(count: int = 20, max_n: int = 4, seed: int = 0, *, milp: bool = True,
                   full_permutations_up_to: int = 4) -> ValidationReport:
    t0 = time.perf_counter()
    report = ValidationReport()
    for label, inst in instance_suite(count, max_n, seed):
        report.checks.append(check_instance(inst, label, milp=milp, full_permutations_up_to=full_permutations_up_to))
    report.seconds = time.perf_counter() - t0
    return report
