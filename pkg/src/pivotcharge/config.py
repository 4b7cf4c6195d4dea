"""Run configuration: every tunable with its default, loadable from JSON.

File layout (all sections and keys optional, unknown keys rejected)::

    {
      "propagation": {"alpha": 36.0, "beta": 30.0},
      "pattern":     {"gmax_db": 12.0, "hpbw_deg": 44.0, "floor_db": -10.0},
      "charger":     {"dt": 0.0025, "step_len": 0.05, "sector_half_angle_deg": 22.0,
                      "tf": 0.02, "tf_includes_gain": false, "max_steps": 100000000},
      "stage2":      {"dt": 0.0025, "ordering_policy": "max_deficit", "reserve": 2.0,
                      "seller_threshold": null, "serve_radius": 20.0,
                      "stall_window": 5.0, "stall_epsilon": 1e-06, "max_steps": 100000000},
      "targets":     {"et_s": 2.0, "et_p": null, "et_h": null, "singleton_target_ets": false},
      "clustering":  {"r_cl": 10.0},
      "output":      {"sample_every": 100}
    }

``et_p`` / ``et_h`` left null pick the ``DEFAULT_TARGETS`` entry for the nearest node
count.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

from .model import AntennaPattern, PropagationParams, derive_tx_power
from .planner import ChargerConfig
from .stage2 import Stage2Config

# node count -> (ET_p for pivot heads, ET_h for omni cluster heads), joules
DEFAULT_TARGETS = {
    200: (5.5, 5.0),
    175: (5.5, 5.5),
    150: (4.5, 5.5),
    125: (4.5, 6.0),
    100: (4.0, 6.0),
}


def default_head_targets(n: int) -> tuple:
    """(ET_p, ET_h) for the tabulated node count nearest ``n`` (ties -> smaller)."""
    key = min(DEFAULT_TARGETS, key=lambda k: (abs(k - n), k))
    return DEFAULT_TARGETS[key]


@dataclass(frozen=True)
class ChargerSection:
    dt: float = 0.0025
    step_len: float = 0.05
    sector_half_angle_deg: float = 22.0
    tf: float = 0.02
    tf_includes_gain: bool = False
    max_steps: int = 10**8


@dataclass(frozen=True)
class Stage2Section:
    dt: float = 0.0025
    ordering_policy: str = "max_deficit"
    reserve: float = 2.0
    seller_threshold: float | None = None
    serve_radius: float = 20.0
    stall_window: float = 5.0
    stall_epsilon: float = 1e-6
    max_steps: int = 10**8


@dataclass(frozen=True)
class TargetsSection:
    et_s: float = 2.0
    et_p: float | None = None
    et_h: float | None = None
    singleton_target_ets: bool = False


@dataclass(frozen=True)
class ClusteringSection:
    r_cl: float = 10.0


@dataclass(frozen=True)
class OutputSection:
    sample_every: int = 100


@dataclass(frozen=True)
class RunConfig:
    propagation: PropagationParams = field(default_factory=PropagationParams)
    pattern: AntennaPattern = field(default_factory=AntennaPattern)
    charger: ChargerSection = field(default_factory=ChargerSection)
    stage2: Stage2Section = field(default_factory=Stage2Section)
    targets: TargetsSection = field(default_factory=TargetsSection)
    clustering: ClusteringSection = field(default_factory=ClusteringSection)
    output: OutputSection = field(default_factory=OutputSection)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        sections = {f.name: f for f in dataclasses.fields(cls)}
        unknown = set(d) - set(sections)
        if unknown:
            raise ValueError(f"unknown config section(s): {sorted(unknown)}")
        kw = {}
        for name, sub in d.items():
            sub_cls = sections[name].default_factory
            allowed = {f.name for f in dataclasses.fields(sub_cls)}
            bad = set(sub) - allowed
            if bad:
                raise ValueError(f"unknown key(s) in [{name}]: {sorted(bad)}")
            kw[name] = sub_cls(**sub)
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, section: str, **kw) -> "RunConfig":
        return dataclasses.replace(self, **{section: dataclasses.replace(getattr(self, section), **kw)})

    def tx_power(self, pattern=None) -> float:
        return derive_tx_power(self.propagation, self.charger.tf,
                               self.pattern if pattern is None else pattern,
                               self.charger.tf_includes_gain)

    def charger_config(self) -> ChargerConfig:
        c = self.charger
        return ChargerConfig(dt=c.dt, step_len=c.step_len,
                             sector_half_angle=math.radians(c.sector_half_angle_deg),
                             pattern=self.pattern, tx_power=self.tx_power(),
                             max_steps=c.max_steps, sample_every=self.output.sample_every)

    def stage2_config(self) -> Stage2Config:
        s = self.stage2
        return Stage2Config(dt=s.dt, ordering_policy=s.ordering_policy, reserve=s.reserve,
                            seller_threshold=s.seller_threshold, serve_radius=s.serve_radius,
                            stall_window=s.stall_window, stall_epsilon=s.stall_epsilon,
                            max_steps=s.max_steps, sample_every=self.output.sample_every)
