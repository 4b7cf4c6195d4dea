"""Stage 1: a mobile charger with a directional antenna charges the heads.

Every ``dt`` the charger considers, for each undercharged head, two
candidates aimed along the bearing to that head: move ``step_len`` along it,
or stay put. Each candidate is scored by the summed received power of the
undercharged heads inside the angular sector of half-angle
``sector_half_angle`` around the candidate bearing, evaluated from the
position the charger would occupy. The best candidate is taken (ties: Stay
before Move, then the smaller bearing). All nodes harvest from the beam
during the step, using the start-of-step position.

``optimize_start`` repeats the run from every head location and keeps the
fastest one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels as K
from .model import AntennaPattern, PropagationParams, bearing, wrap_angle

log = logging.getLogger(__name__)


class ActionKind(Enum):
    STAY = 0
    MOVE = 1


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    direction: float

    def __post_init__(self):
        object.__setattr__(self, "direction", wrap_angle(self.direction))


@dataclass(frozen=True)
class ChargerState:
    pos: tuple
    boresight: float = 0.0
    elapsed: float = 0.0


@dataclass(frozen=True)
class ChargerConfig:
    dt: float = 0.0025
    step_len: float = 0.05
    sector_half_angle: float = math.radians(22.0)
    pattern: AntennaPattern = field(default_factory=AntennaPattern)
    tx_power: float = 2.0
    max_steps: int = 10**8
    sample_every: int = 100

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.step_len < 0:
            raise ValueError("step_len must be non-negative")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")

    @property
    def speed(self) -> float:
        return self.step_len / self.dt


@dataclass(frozen=True)
class Targets:
    """Energy targets in joules.

    ``head`` is the stage-1 head target (ET_p for pivot heads, ET_h for
    omni cluster heads); ``service`` is the per-node level ET_s.
    """

    head: float = 4.0
    service: float = 2.0
    singleton_target_ets: bool = False

    def head_targets(self, clusters) -> np.ndarray:
        out = np.full(len(clusters), float(self.head))
        if self.singleton_target_ets:
            for k, c in enumerate(clusters.clusters):
                if not c.members:
                    out[k] = self.service
        return out

    def node_targets(self, n: int, clusters) -> np.ndarray:
        out = np.full(n, float(self.service))
        out[np.asarray(clusters.heads, dtype=np.int64)] = self.head_targets(clusters)
        return out


class NonTerminationError(RuntimeError):
    pass


@dataclass
class Stage1Result:
    start: tuple
    steps: int
    dt: float
    energy: np.ndarray
    trajectory: np.ndarray  # rows (t_s, x_m, y_m, bearing_rad, kind) kind 0 stay, 1 move, 2 end
    series: np.ndarray  # rows (t_s, n_at_target, n_overcharged)
    clamps: int = 0
    end_pos: tuple = (0.0, 0.0)

    @property
    def t_cm(self) -> float:
        return self.steps * self.dt


def candidate_actions(state: ChargerState, undercharged_heads) -> list:
    """Move/Stay candidates along the bearing to every undercharged head."""
    if not undercharged_heads:
        raise ValueError("no undercharged heads: stage 1 should have terminated")
    seen = set()
    out = []
    for _, hpos in undercharged_heads:
        b = wrap_angle(bearing(state.pos, hpos))
        if b in seen:
            continue
        seen.add(b)
        out.append(Action(ActionKind.MOVE, b))
        out.append(Action(ActionKind.STAY, b))
    return out


def sector_power(cfg: ChargerConfig, prop: PropagationParams, eval_pos, direction: float,
                 undercharged_heads) -> float:
    """Summed received power of the undercharged heads inside the sector."""
    if not undercharged_heads:
        return 0.0
    pts = np.array([p for _, p in undercharged_heads], dtype=float).reshape(-1, 2)
    pat = cfg.pattern
    return float(K.sector_sum(float(eval_pos[0]), float(eval_pos[1]), float(direction),
                              pts[:, 0].copy(), pts[:, 1].copy(), cfg.sector_half_angle,
                              pat.gmax_db, pat.hpbw, pat.floor_db, prop.alpha, prop.beta))


def plan_step(cfg: ChargerConfig, prop: PropagationParams, state: ChargerState,
              undercharged_heads) -> Action:
    if not undercharged_heads:
        raise ValueError("no undercharged heads: stage 1 should have terminated")
    pts = np.array([p for _, p in undercharged_heads], dtype=float).reshape(-1, 2)
    pat = cfg.pattern
    kind, direction, _ = K.plan(float(state.pos[0]), float(state.pos[1]),
                                pts[:, 0].copy(), pts[:, 1].copy(), cfg.step_len,
                                cfg.sector_half_angle, pat.gmax_db, pat.hpbw, pat.floor_db,
                                prop.alpha, prop.beta)
    return Action(ActionKind(kind), direction)


def _run(scenario, clusters, start, cfg, prop, targets, energy, max_steps):
    pos = np.asarray(scenario.positions, dtype=float)
    heads = np.asarray(clusters.heads, dtype=np.int64)
    pat = cfg.pattern
    status, steps, x, y, clamps, ser, traj = K.stage1(
        pos[:, 0].copy(), pos[:, 1].copy(), heads, targets.head_targets(clusters),
        targets.node_targets(len(pos), clusters), float(targets.service), energy,
        float(start[0]), float(start[1]), float(scenario.area_side),
        cfg.dt, cfg.step_len, cfg.sector_half_angle, pat.gmax_db, pat.hpbw, pat.floor_db,
        prop.alpha, prop.beta, int(max_steps), int(cfg.sample_every), True)
    series = np.column_stack([ser[:, 0] * cfg.dt, ser[:, 1], ser[:, 2]]).astype(float)
    traj = traj.copy()
    traj[:, 0] *= cfg.dt
    res = Stage1Result((float(start[0]), float(start[1])), int(steps), cfg.dt, energy,
                       traj, series, int(clamps), (float(x), float(y)))
    return status, res


def run_stage1(scenario, clusters, start, cfg: ChargerConfig, prop: PropagationParams,
               targets: Targets, energy=None) -> Stage1Result:
    """Charge until every head reaches its stage-1 target.

    ``energy`` defaults to all zeros (nodes start depleted).
    """
    energy = np.zeros(scenario.n) if energy is None else np.array(energy, dtype=float)
    status, res = _run(scenario, clusters, start, cfg, prop, targets, energy, cfg.max_steps)
    if status != 0:
        raise NonTerminationError(
            f"stage 1 exceeded {cfg.max_steps} steps from start {res.start}; "
            f"charger at {res.end_pos}, head energies min "
            f"{energy[clusters.heads].min():.4g} J")
    if res.clamps:
        log.info("charger held at the area boundary on %d steps", res.clamps)
    return res


@dataclass
class StartSearch:
    best_start: tuple
    best_head: int
    result: Stage1Result
    # (head id, steps) per candidate; steps is None when pruned
    candidates: list = field(default_factory=list)

    @property
    def n_runs(self) -> int:
        return len(self.candidates)


def optimize_start(scenario, clusters, cfg: ChargerConfig, prop: PropagationParams,
                   targets: Targets, prune: bool = True) -> StartSearch:
    """Try every head location as the starting spot and keep the fastest.

    Ties go to the lowest head id. With ``prune`` a candidate is abandoned
    as soon as it can no longer beat the best so far; the winner is the
    same as without pruning.
    """
    if len(clusters) == 0:
        raise ValueError("no clusters")
    pos = np.asarray(scenario.positions)
    best = None  # (steps, head, result)
    cands = []
    for h in sorted(clusters.heads):
        budget = cfg.max_steps
        if prune and best is not None:
            budget = best[0] if h < best[1] else best[0] - 1
        energy = np.zeros(scenario.n)
        status, res = _run(scenario, clusters, pos[h], cfg, prop, targets, energy, budget)
        if status != 0:
            if best is None or budget == cfg.max_steps:
                raise NonTerminationError(f"stage 1 from head {h} exceeded {cfg.max_steps} steps")
            cands.append((h, None))
            continue
        cands.append((h, res.steps))
        if best is None or (res.steps, h) < (best[0], best[1]):
            best = (res.steps, h, res)
    steps, h, res = best
    if res.clamps:
        log.info("charger held at the area boundary on %d steps", res.clamps)
    return StartSearch(res.start, h, res, cands)
