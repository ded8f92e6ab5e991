"""RGV motion profile: arc travel times and load-dependent arc energy.

The RGV accelerates at ``a`` up to the cruise speed ``v_c``, cruises, and
brakes at ``a``. Short arcs never reach cruise speed (triangular profile).
Energy is the work against rolling friction plus the kinetic energy built up
during acceleration; braking energy is not recovered.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._jit import njit
from .constants import (
    DEFAULT_ACCEL,
    DEFAULT_CRUISE,
    DEFAULT_G,
    DEFAULT_MU,
    DEFAULT_W_RGV,
)


@dataclass(frozen=True)
class RgvParams:
    w_rgv: float = DEFAULT_W_RGV
    accel: float = DEFAULT_ACCEL
    cruise_speed: float = DEFAULT_CRUISE
    mu: float = DEFAULT_MU
    g: float = DEFAULT_G

    def __post_init__(self):
        for name in ("w_rgv", "accel", "cruise_speed", "mu", "g"):
            if not getattr(self, name) > 0:
                raise ValueError(f"RgvParams.{name} must be > 0")

    @property
    def r1(self) -> float:
        """Distance covered while accelerating to cruise speed."""
        return self.cruise_speed**2 / (2.0 * self.accel)

    @property
    def t1(self) -> float:
        return self.cruise_speed / self.accel

    @property
    def friction(self) -> float:
        return self.mu * self.g

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "RgvParams":
        known = {k: float(d[k]) for k in ("w_rgv", "accel", "cruise_speed", "mu", "g") if k in d}
        return cls(**known)


@njit
def _travel_time(accel, cruise, r):
    r1 = cruise * cruise / (2.0 * accel)
    if r <= 2.0 * r1:
        return 2.0 * math.sqrt(r / accel)
    return 2.0 * cruise / accel + (r - 2.0 * r1) / cruise


@njit
def _energy_coef(accel, cruise, fric, r):
    """Energy per unit of moved weight over an arc of length ``r``."""
    if accel <= fric:
        return fric * r
    r1 = cruise * cruise / (2.0 * accel)
    if r <= 2.0 * r1:
        return accel * r
    return 2.0 * (accel - fric) * r1 + fric * r


def travel_time(p: RgvParams, r: float) -> float:
    if r < 0:
        raise ValueError(f"negative distance {r}")
    return float(_travel_time(p.accel, p.cruise_speed, float(r)))


def energy_coefficient(p: RgvParams, r: float) -> float:
    """The weight-independent factor of arc energy (alpha or beta times r)."""
    if r < 0:
        raise ValueError(f"negative distance {r}")
    return float(_energy_coef(p.accel, p.cruise_speed, p.friction, float(r)))


def arc_energy(p: RgvParams, r: float, w_load: float) -> float:
    if r < 0 or w_load < 0:
        raise ValueError(f"negative input r={r}, w_load={w_load}")
    return energy_coefficient(p, r) * (p.w_rgv + w_load)


def travel_time_array(p: RgvParams, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("negative distance")
    r1 = p.r1
    short = 2.0 * np.sqrt(r / p.accel)
    long_ = 2.0 * p.t1 + (r - 2.0 * r1) / p.cruise_speed
    return np.where(r <= 2.0 * r1, short, long_)


def energy_coef_array(p: RgvParams, r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("negative distance")
    fric = p.friction
    if p.accel <= fric:
        return fric * r
    r1 = p.r1
    return np.where(r <= 2.0 * r1, p.accel * r, 2.0 * (p.accel - fric) * r1 + fric * r)
