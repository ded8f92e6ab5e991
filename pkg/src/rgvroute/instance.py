"""Stations, typed pickup-and-delivery requests and task vertices.

Vertex numbering for an instance with ``n`` requests:

* ``0``            start vertex (the RGV position),
* ``1..n``         pickups,
* ``n+1..2n``      deliveries, ``i+n`` pairs with pickup ``i``,
* ``2n+1``         virtual end vertex.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum, IntEnum
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .constants import DEFAULT_SERVICE, DEFAULT_UNIT_LENGTH, HORIZON_MAX
from .kinematics import RgvParams


class Side(IntEnum):
    NORTH = 0
    SOUTH = 1

    @property
    def code(self) -> str:
        return "N" if self is Side.NORTH else "S"

    @classmethod
    def parse(cls, value) -> "Side":
        if isinstance(value, Side):
            return value
        if isinstance(value, str):
            key = value.strip().upper()
            if key in ("N", "NORTH"):
                return cls.NORTH
            if key in ("S", "SOUTH"):
                return cls.SOUTH
            raise ValueError(f"unknown side {value!r}")
        return cls(int(value))


class RequestType(Enum):
    T1 = 1  # north -> north
    T2 = 2  # south -> south
    T3 = 3  # north -> south
    T4 = 4  # south -> north


_TYPE_OF_SIDES = {
    (Side.NORTH, Side.NORTH): RequestType.T1,
    (Side.SOUTH, Side.SOUTH): RequestType.T2,
    (Side.NORTH, Side.SOUTH): RequestType.T3,
    (Side.SOUTH, Side.NORTH): RequestType.T4,
}


@dataclass(frozen=True)
class Request:
    id: int
    origin_pos: int
    origin_side: Side
    dest_pos: int
    dest_side: Side
    q: int = 1
    arrival: float = 0.0
    e: float = 0.0
    l: float = HORIZON_MAX
    #: Stand-in for a container already on the deck (initial-load augmentation).
    virtual: bool = False

    def __post_init__(self):
        object.__setattr__(self, "origin_side", Side.parse(self.origin_side))
        object.__setattr__(self, "dest_side", Side.parse(self.dest_side))
        if self.q < 1:
            raise ValueError(f"request {self.id}: load must be >= 1, got {self.q}")
        if self.e > self.l:
            raise ValueError(f"request {self.id}: empty time window [{self.e}, {self.l}]")
        if self.arrival < 0:
            raise ValueError(f"request {self.id}: negative arrival time")

    @property
    def type(self) -> RequestType:
        return classify(self)

    @property
    def has_deadline(self) -> bool:
        return self.l < HORIZON_MAX


def classify(req: Request) -> RequestType:
    return _TYPE_OF_SIDES[(req.origin_side, req.dest_side)]


@dataclass(frozen=True)
class Instance:
    """A static routing instance.

    ``requests[k]`` must carry ``id == k + 1``. ``fixed_prefix`` lists
    vertices that every route has to visit first, in order; it is used to
    encode containers already on the deck (see ``milp.augment``).
    """

    requests: tuple[Request, ...]
    m: int
    Q: int
    start_pos: float = 1
    rgv: RgvParams = field(default_factory=RgvParams)
    service_time: float = DEFAULT_SERVICE
    unit_length: float = DEFAULT_UNIT_LENGTH
    fixed_prefix: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "requests", tuple(self.requests))
        object.__setattr__(self, "fixed_prefix", tuple(int(v) for v in self.fixed_prefix))
        for k, r in enumerate(self.requests):
            if r.id != k + 1:
                raise ValueError(f"request ids must be 1..n in order; position {k} has id {r.id}")
        if self.requests and self.Q < max(r.q for r in self.requests):
            raise ValueError("capacity Q is smaller than the largest request load")
        if self.service_time < 0 or self.unit_length <= 0:
            raise ValueError("service time must be >= 0 and unit length > 0")
        if self.fixed_prefix and self.fixed_prefix[0] != 0:
            raise ValueError("a fixed prefix must start at vertex 0")

    # -- vertex helpers ---------------------------------------------------
    @property
    def n(self) -> int:
        return len(self.requests)

    @property
    def end(self) -> int:
        return 2 * self.n + 1

    @property
    def num_vertices(self) -> int:
        return 2 * self.n + 2

    def request(self, v: int) -> Request:
        n = self.n
        if 1 <= v <= n:
            return self.requests[v - 1]
        if n < v <= 2 * n:
            return self.requests[v - n - 1]
        raise ValueError(f"vertex {v} is not a task vertex")

    def is_pickup(self, v: int) -> bool:
        return 1 <= v <= self.n

    def is_delivery(self, v: int) -> bool:
        return self.n < v <= 2 * self.n

    def pos(self, v: int) -> float:
        return float(self.positions[v])

    def side(self, v: int) -> Side:
        r = self.request(v)
        return r.origin_side if self.is_pickup(v) else r.dest_side

    def load(self, v: int) -> int:
        """Signed load change q_v (q_0 = q_{2n+1} = 0)."""
        return int(self.loads[v])

    def service(self, v: int) -> float:
        return float(self.services[v])

    def types_of(self, t: RequestType) -> list[int]:
        return [r.id for r in self.requests if classify(r) is t]

    @cached_property
    def type_codes(self) -> np.ndarray:
        """Request type as 1..4, indexed by request id (index 0 unused)."""
        out = np.zeros(self.n + 1, dtype=np.int64)
        for r in self.requests:
            out[r.id] = classify(r).value
        return out

    # -- vectorised views -------------------------------------------------
    @cached_property
    def positions(self) -> np.ndarray:
        n = self.n
        p = np.zeros(2 * n + 2)
        p[0] = self.start_pos
        for r in self.requests:
            p[r.id] = r.origin_pos
            p[r.id + n] = r.dest_pos
        p[2 * n + 1] = np.nan
        return p

    @cached_property
    def sides(self) -> np.ndarray:
        n = self.n
        s = np.full(2 * n + 2, -1, dtype=np.int64)
        for r in self.requests:
            s[r.id] = int(r.origin_side)
            s[r.id + n] = int(r.dest_side)
        return s

    @cached_property
    def loads(self) -> np.ndarray:
        n = self.n
        q = np.zeros(2 * n + 2, dtype=np.int64)
        for r in self.requests:
            q[r.id] = r.q
            q[r.id + n] = -r.q
        return q

    @cached_property
    def services(self) -> np.ndarray:
        n = self.n
        s = np.full(2 * n + 2, self.service_time)
        s[0] = 0.0
        s[2 * n + 1] = 0.0
        for r in self.requests:
            if r.virtual:
                s[r.id] = 0.0
        return s

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        """Pairwise vertex distances; every arc into 2n+1 has length 0."""
        p = self.positions.copy()
        p[-1] = 0.0
        d = np.abs(p[:, None] - p[None, :]) * self.unit_length
        d[:, -1] = 0.0
        d[-1, :] = 0.0
        return d

    @cached_property
    def travel_time_matrix(self) -> np.ndarray:
        from .kinematics import travel_time_array

        return travel_time_array(self.rgv, self.distance_matrix)

    @cached_property
    def energy_coef_matrix(self) -> np.ndarray:
        """Per-unit-weight energy of every arc: c_ij(w) = coef_ij * (w_rgv + w)."""
        from .kinematics import energy_coef_array

        return energy_coef_array(self.rgv, self.distance_matrix)

    @cached_property
    def queues(self) -> "QueueRelations":
        return queue_relations(self)

    @property
    def has_time_windows(self) -> bool:
        return any(r.has_deadline or r.e > 0 for r in self.requests)

    # -- construction helpers ---------------------------------------------
    def with_requests(self, requests: Sequence[Request], **changes) -> "Instance":
        return replace(self, requests=tuple(requests), **changes)

    def without_deadlines(self) -> "Instance":
        reqs = [replace(r, e=0.0, l=HORIZON_MAX) for r in self.requests]
        return replace(self, requests=tuple(reqs))


@dataclass(frozen=True)
class QueueRelations:
    """FIFO pickup queues, one per (station, side)."""

    chains: tuple[tuple[int, ...], ...]
    queue_of: dict
    rank: dict

    def succ(self, i: int) -> int | None:
        """Next pickup behind ``i`` in its queue (``i ⊕ 1``), or None."""
        if i not in self.queue_of:
            return None
        chain = self.chains[self.queue_of[i]]
        k = self.rank[i] + 1
        return chain[k] if k < len(chain) else None

    def pred(self, i: int) -> int | None:
        if i not in self.queue_of:
            return None
        chain = self.chains[self.queue_of[i]]
        k = self.rank[i] - 1
        return chain[k] if k >= 0 else None

    def ahead(self, i: int, j: int) -> bool:
        """True if pickup ``i`` is queued in front of ``j`` (``i ◁ j``)."""
        return (
            i in self.queue_of
            and j in self.queue_of
            and self.queue_of[i] == self.queue_of[j]
            and self.rank[i] < self.rank[j]
        )

    def behind(self, i: int, j: int) -> bool:
        return self.ahead(j, i)

    def predecessors(self, i: int) -> tuple[int, ...]:
        if i not in self.queue_of:
            return ()
        return self.chains[self.queue_of[i]][: self.rank[i]]

    def successors(self, i: int) -> tuple[int, ...]:
        if i not in self.queue_of:
            return ()
        return self.chains[self.queue_of[i]][self.rank[i] + 1 :]

    def is_head(self, i: int) -> bool:
        return i in self.queue_of and self.rank[i] == 0

    def is_tail(self, i: int) -> bool:
        return i in self.queue_of and self.rank[i] == len(self.chains[self.queue_of[i]]) - 1

    @property
    def heads(self) -> tuple[int, ...]:
        return tuple(c[0] for c in self.chains)

    @property
    def tails(self) -> tuple[int, ...]:
        return tuple(c[-1] for c in self.chains)


def queue_relations(inst: Instance) -> QueueRelations:
    """Group real pickups by (station, side), ordered by arrival then id.

    Virtual pickups (containers already aboard) belong to no queue.
    """
    groups: dict[tuple, list[Request]] = {}
    for r in inst.requests:
        if r.virtual:
            continue
        groups.setdefault((r.origin_pos, int(r.origin_side)), []).append(r)
    chains = []
    for key in sorted(groups):
        members = sorted(groups[key], key=lambda r: (r.arrival, r.id))
        chains.append(tuple(r.id for r in members))
    chains.sort(key=lambda c: c[0])
    queue_of, rank = {}, {}
    for qi, chain in enumerate(chains):
        for k, i in enumerate(chain):
            queue_of[i] = qi
            rank[i] = k
    return QueueRelations(tuple(chains), queue_of, rank)


def vertex_distance(inst: Instance, i: int, j: int) -> float:
    if i == inst.end or j == inst.end:
        return 0.0
    return abs(inst.pos(i) - inst.pos(j)) * inst.unit_length


# -- JSON encoding ----------------------------------------------------------

def _num(x):
    x = float(x)
    return int(x) if x.is_integer() and abs(x) < 2**53 else x


def instance_to_dict(inst: Instance) -> dict:
    reqs = []
    for r in inst.requests:
        d = {
            "id": r.id,
            "origin": {"pos": _num(r.origin_pos), "side": r.origin_side.code},
            "dest": {"pos": _num(r.dest_pos), "side": r.dest_side.code},
            "q": r.q,
            "arrival": float(r.arrival),
            "e": float(r.e),
            "l": float(r.l),
        }
        if r.virtual:
            d["virtual"] = True
        reqs.append(d)
    out = {
        "n": inst.n,
        "m": inst.m,
        "unit_length": float(inst.unit_length),
        "Q": inst.Q,
        "start_pos": _num(inst.start_pos),
        "rgv": inst.rgv.to_dict(),
        "service_time": float(inst.service_time),
        "requests": reqs,
    }
    if inst.fixed_prefix:
        out["fixed_prefix"] = list(inst.fixed_prefix)
    return out


def instance_from_dict(d: dict) -> Instance:
    reqs = []
    for r in d.get("requests", []):
        reqs.append(
            Request(
                id=int(r["id"]),
                origin_pos=_num(r["origin"]["pos"]),
                origin_side=Side.parse(r["origin"]["side"]),
                dest_pos=_num(r["dest"]["pos"]),
                dest_side=Side.parse(r["dest"]["side"]),
                q=int(r.get("q", 1)),
                arrival=float(r.get("arrival", 0.0)),
                e=float(r.get("e", 0.0)),
                l=float(r.get("l", HORIZON_MAX)),
                virtual=bool(r.get("virtual", False)),
            )
        )
    if "n" in d and int(d["n"]) != len(reqs):
        raise ValueError(f"n={d['n']} but {len(reqs)} requests listed")
    return Instance(
        requests=tuple(reqs),
        m=int(d["m"]),
        Q=int(d["Q"]),
        start_pos=_num(d.get("start_pos", 1)),
        rgv=RgvParams.from_dict(d.get("rgv", {})),
        service_time=float(d.get("service_time", DEFAULT_SERVICE)),
        unit_length=float(d.get("unit_length", DEFAULT_UNIT_LENGTH)),
        fixed_prefix=tuple(d.get("fixed_prefix", ())),
    )


def dumps(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def loads(text: str) -> Instance:
    return instance_from_dict(json.loads(text))


def save(inst: Instance, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(inst))


def load(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def make_instance(specs: Iterable[tuple], m: int, Q: int, **kwargs) -> Instance:
    """Build an instance from ``(origin_pos, origin_side, dest_pos, dest_side[, q[, arrival[, l]]])`` tuples."""
    reqs = []
    for k, s in enumerate(specs):
        o, os_, d, ds = s[:4]
        q = s[4] if len(s) > 4 else 1
        arrival = s[5] if len(s) > 5 else 0.0
        l = s[6] if len(s) > 6 else HORIZON_MAX
        reqs.append(Request(k + 1, o, Side.parse(os_), d, Side.parse(ds), q, arrival, 0.0, l))
    return Instance(tuple(reqs), m=m, Q=Q, **kwargs)
