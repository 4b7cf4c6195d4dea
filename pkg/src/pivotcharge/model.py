"""Physical model shared by every charging scheme.

Units are fixed internally: meters, seconds, joules, watts and radians.
Degrees only appear in configuration (``AntennaPattern.hpbw_deg`` and the
charger sector angle) and are converted on construction.

The received-power law is the short-range Friis form

    P_r = g(phi) * alpha / (d + beta)**2

where ``alpha`` folds together transmitter/receiver gains, rectifier
efficiency, wavelength, polarization loss and transmit power, and ``beta``
is an empirical distance offset that keeps the power finite at d = 0.
An omni-directional transmitter has ``g = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

TWO_PI = 2.0 * math.pi

# Sentinel for "no directive gain" (0 dB transmit antenna).
OMNI = None


def wrap_angle(a: float) -> float:
    """Normalize an angle to the half-open interval (-pi, pi]."""
    if -math.pi < a <= math.pi:
        return a
    a = math.fmod(a + math.pi, TWO_PI)
    if a <= 0.0:
        a += TWO_PI
    return a - math.pi


def bearing(src, dst) -> float:
    """Bearing from ``src`` to ``dst``; 0 when the two points coincide."""
    dx = dst[0] - src[0]
    dy = dst[1] - src[1]
    if dx == 0.0 and dy == 0.0:
        return 0.0
    return math.atan2(dy, dx)


def distance(a, b) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])


@dataclass(frozen=True)
class PropagationParams:
    alpha: float = 36.0
    beta: float = 30.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"alpha and beta must be positive, got {self.alpha}, {self.beta}")

    @property
    def p_at_zero(self) -> float:
        """Gain-free received power at zero distance, alpha / beta**2."""
        return self.alpha / self.beta**2


@dataclass(frozen=True)
class AntennaPattern:
    """Quadratic-in-dB main lobe clipped at a side/back-lobe floor.

    ``G_dB(phi) = max(floor_db, gmax_db - 3 * (2 * phi / hpbw)**2)``, so the
    gain is ``gmax_db`` on boresight and exactly 3 dB lower at
    ``phi = +-hpbw/2``.
    """

    gmax_db: float = 12.0
    hpbw_deg: float = 44.0
    floor_db: float = -10.0

    def __post_init__(self):
        if self.hpbw_deg <= 0:
            raise ValueError("hpbw_deg must be positive")
        if self.floor_db > self.gmax_db:
            raise ValueError("floor_db cannot exceed gmax_db")

    @property
    def hpbw(self) -> float:
        return math.radians(self.hpbw_deg)

    @property
    def gmax_linear(self) -> float:
        return 10.0 ** (self.gmax_db / 10.0)

    def gain_db(self, phi: float) -> float:
        x = 2.0 * phi / self.hpbw
        return max(self.floor_db, self.gmax_db - 3.0 * x * x)


def directive_gain(pattern: AntennaPattern | None, phi: float) -> float:
    """Linear gain factor ``10**(G_dB(phi)/10)`` at ``phi`` radians off boresight."""
    if pattern is OMNI:
        return 1.0
    return 10.0 ** (pattern.gain_db(wrap_angle(phi)) / 10.0)


def received_power(prop: PropagationParams, tx_pos, boresight, pattern, rx_pos) -> float:
    """Power in watts harvested at ``rx_pos`` from a transmitter at ``tx_pos``.

    ``boresight`` and ``pattern`` may both be ``OMNI`` for a 0 dB antenna.
    Coincident points use bearing 0 for the off-boresight angle.
    """
    d = distance(tx_pos, rx_pos)
    if pattern is OMNI or boresight is OMNI:
        g = 1.0
    else:
        g = directive_gain(pattern, bearing(tx_pos, rx_pos) - boresight)
    return g * prop.alpha / (d + prop.beta) ** 2


def derive_tx_power(prop: PropagationParams, tf: float, pattern: AntennaPattern | None = None,
                    include_gain: bool = False) -> float:
    """Transmit power implied by a charging efficiency ``tf``.

    ``tf`` is the ratio of received power at zero distance to transmit
    power. By default the ratio is gain-free (``alpha / beta**2``); with
    ``include_gain`` the boresight gain of ``pattern`` multiplies the
    received side.
    """
    if not (0.0 < tf <= 1.0):
        raise ValueError(f"tf must lie in (0, 1], got {tf}")
    p0 = prop.p_at_zero
    if include_gain and pattern is not OMNI:
        p0 *= pattern.gmax_linear
    return p0 / tf


class Role(IntEnum):
    MEMBER = 0
    CLUSTER_HEAD = 1
    PIVOT_HEAD = 2


@dataclass
class SensorNode:
    id: int
    pos: tuple
    energy: float = 0.0
    role: Role = Role.MEMBER
    target: float = 0.0


@dataclass(frozen=True)
class Scenario:
    """Node placement over a square service area.

    Placement uses numpy's PCG64 bit generator: ``Generator(PCG64(seed)).random((n, 2))``
    scaled by ``area_side``. PCG64 output and the double conversion of
    ``random`` are platform independent.
    """

    area_side: float
    positions: np.ndarray = field(repr=False)
    seed: int = 0

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        if self.area_side <= 0:
            raise ValueError("area_side must be positive")
        if len(pos) and (pos.min() < 0 or pos.max() > self.area_side):
            raise ValueError("node outside the service area")

    @classmethod
    def generate(cls, n: int, area_side: float = 100.0, seed: int = 0) -> "Scenario":
        if n <= 0:
            raise ValueError("empty scenario")
        rng = np.random.Generator(np.random.PCG64(seed))
        return cls(area_side, rng.random((n, 2)) * area_side, seed)

    @property
    def n(self) -> int:
        return len(self.positions)

    def __len__(self):
        return self.n

    def nodes(self):
        return [(i, float(x), float(y)) for i, (x, y) in enumerate(self.positions)]

    def to_dict(self) -> dict:
        return {
            "format": "pivotcharge.scenario/1",
            "area_side": float(self.area_side),
            "seed": int(self.seed),
            "nodes": [{"id": i, "x": x, "y": y} for i, x, y in self.nodes()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        nodes = d["nodes"]
        ids = [nd["id"] for nd in nodes]
        if ids != list(range(len(nodes))):
            raise ValueError("node ids must be contiguous from 0 and in order")
        pos = [(nd["x"], nd["y"]) for nd in nodes]
        return cls(float(d["area_side"]), np.array(pos, dtype=float).reshape(-1, 2), int(d.get("seed", 0)))
