"""Stage 2: charged heads (or any overcharged node) top up the rest.

Two schemes share the same step/stall bookkeeping:

pivot
    Each head steers a directional beam at one member of its own cluster
    per step, chosen by ``ordering_policy`` among the members still below
    the service target. All heads act in parallel.
trading
    Every node at or above ``seller_threshold`` is a seller and radiates
    omni-directionally while some undercharged node is within
    ``serve_radius``; it stays a seller until drained to ``reserve``.

In both, every undercharged node harvests the superposition of all active
transmitters (cross-cluster leakage included), and nodes stop harvesting
once they reach the service target. A transmitter drains ``tx_power * dt``
per step but never below ``reserve``; the last step is truncated and its
emitted power scaled by the same fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .model import AntennaPattern, PropagationParams, distance

POLICIES = {"max_deficit": 0, "fifo": 1, "nearest": 2}

COMPLETE = "complete"
STALLED = "stalled"


@dataclass(frozen=True)
class Stage2Config:
    dt: float = 0.0025
    ordering_policy: str = "max_deficit"
    reserve: float = 2.0
    seller_threshold: float | None = None  # None -> the stage-1 head target
    serve_radius: float = 20.0
    stall_window: float = 5.0
    stall_epsilon: float = 1e-6
    max_steps: int = 10**8
    sample_every: int = 100

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.reserve < 0:
            raise ValueError("reserve must be non-negative")
        if self.ordering_policy not in POLICIES:
            raise ValueError(f"unknown ordering policy {self.ordering_policy!r}")


@dataclass
class Stage2Result:
    duration: float
    status: str
    unmet: list
    head_energy_before: dict
    head_energy_after: dict
    energy: np.ndarray
    series: np.ndarray  # rows (t_s from stage-2 start, n_at_target, n_overcharged)
    transmitted: float = 0.0
    received: float = 0.0
    steps: int = 0
    trace: list | None = field(default=None, repr=False)


def next_target(head: int, cluster, energy, policy: str = "max_deficit", positions=None,
                et_s: float = 2.0):
    """Member the head should beam at next, or None when all are satisfied."""
    if head != cluster.head:
        raise ValueError("head does not own this cluster")
    pending = [m for m in cluster.members if energy[m] < et_s]
    if not pending:
        return None
    if policy == "max_deficit":
        key = lambda m: (-(et_s - energy[m]), m)  # noqa: E731
    elif policy == "fifo":
        key = lambda m: m  # noqa: E731
    elif policy == "nearest":
        key = lambda m: (distance(positions[head], positions[m]), m)  # noqa: E731
    else:
        raise ValueError(f"unknown ordering policy {policy!r}")
    return min(pending, key=key)


class _Loop:
    """Shared time loop: sampling, stall detection, result assembly."""

    def __init__(self, energy, cfg, et_s, node_target, heads):
        self.e = energy
        self.cfg = cfg
        self.et_s = et_s
        self.node_target = node_target
        self.heads = list(heads)
        self.before = {h: float(energy[h]) for h in self.heads}
        self.series = [self._counts(0.0)]
        self.transmitted = 0.0
        self.received = 0.0

    def _counts(self, t):
        e = self.e
        return (t, int(np.count_nonzero(e >= self.et_s)),
                int(np.count_nonzero(e >= self.node_target)))

    def run(self, step_fn, undercharged_fn, trace=None):
        cfg = self.cfg
        window = max(1, int(math.ceil(cfg.stall_window / cfg.dt)))
        win_gain = np.zeros(len(self.e))
        steps = 0
        status = COMPLETE
        while undercharged_fn().any():
            if steps >= cfg.max_steps:
                status = STALLED
                break
            before = self.e.copy() if trace is not None else None
            active, gains, tx, rec = step_fn()
            if active == 0:
                status = STALLED
                break
            steps += 1
            self.transmitted += tx
            self.received += float(gains.sum())
            if trace is not None:
                trace.append((before, self.e.copy(), rec))
            win_gain += gains
            if steps % window == 0:
                if not (win_gain >= cfg.stall_epsilon).any():
                    status = STALLED
                    break
                win_gain[:] = 0.0
            if steps % cfg.sample_every == 0:
                self.series.append(self._counts(steps * cfg.dt))
        t = steps * cfg.dt
        if self.series[-1][0] != t:
            self.series.append(self._counts(t))
        under = np.flatnonzero(undercharged_fn())
        unmet = [(int(i), float(self.et_s - self.e[i])) for i in under]
        if unmet:
            status = STALLED
        return Stage2Result(
            duration=t, status=status, unmet=unmet, head_energy_before=self.before,
            head_energy_after={h: float(self.e[h]) for h in self.heads}, energy=self.e,
            series=np.array(self.series, dtype=float), transmitted=self.transmitted,
            received=self.received, steps=steps, trace=trace)


def _csr(clusters, positions):
    ptr, idx, dist = [0], [], []
    for c in clusters.clusters:
        for m in c.members:
            idx.append(m)
            dist.append(distance(positions[c.head], positions[m]))
        ptr.append(len(idx))
    return (np.array(ptr, dtype=np.int64), np.array(idx, dtype=np.int64),
            np.array(dist, dtype=float))


def run_stage2_pivot(scenario, energy, clusters, cfg: Stage2Config, prop: PropagationParams,
                     pattern: AntennaPattern, tx_power: float, et_s: float = 2.0,
                     head_target: float | None = None, trace: bool = False) -> Stage2Result:
    """Directional heads charge their own members.

    ``energy`` (joules per node after stage 1) is copied, not modified.
    With ``trace`` every step records ``(energy_before, energy_after,
    [(head, target, fraction), ...])``.
    """
    pos = np.asarray(scenario.positions, dtype=float)
    n = len(pos)
    e = np.array(energy, dtype=float)
    heads = np.asarray(clusters.heads, dtype=np.int64)
    is_head = np.zeros(n, dtype=bool)
    is_head[heads] = True
    node_target = np.full(n, et_s)
    node_target[heads] = et_s if head_target is None else head_target
    ptr, idx, dist = _csr(clusters, pos)
    pcache = np.zeros((len(idx), n))
    pslot = np.zeros(len(idx), dtype=bool)
    targets = np.empty(len(heads), dtype=np.int64)
    fracs = np.empty(len(heads))
    gains = np.empty(n)
    tx_dt = tx_power * cfg.dt
    px, py = pos[:, 0].copy(), pos[:, 1].copy()
    policy = POLICIES[cfg.ordering_policy]

    def step():
        active = K.pivot_step(e, is_head, heads, ptr, idx, dist, policy, et_s, cfg.reserve,
                              tx_dt, cfg.dt, pcache, pslot, px, py, pattern.gmax_db,
                              pattern.hpbw, pattern.floor_db, prop.alpha, prop.beta,
                              targets, fracs, gains)
        rec = None
        if trace:
            rec = [(int(heads[c]), int(targets[c]), float(fracs[c]))
                   for c in range(len(heads)) if fracs[c] > 0]
        return active, gains, float(fracs.sum()) * tx_dt, rec

    loop = _Loop(e, cfg, et_s, node_target, heads)
    return loop.run(step, lambda: (~is_head) & (e < et_s), [] if trace else None)


def omni_matrix(positions, prop: PropagationParams) -> np.ndarray:
    """0 dB link power between every ordered pair of nodes."""
    pos = np.asarray(positions, dtype=float)
    diff = pos[None, :, :] - pos[:, None, :]
    d = np.hypot(diff[..., 0], diff[..., 1])
    return prop.alpha / (d + prop.beta) ** 2


def run_stage2_trading(scenario, energy, clusters, cfg: Stage2Config, prop: PropagationParams,
                       tx_power: float, et_s: float = 2.0, head_target: float = 5.0,
                       trace: bool = False) -> Stage2Result:
    """Overcharged nodes (heads included) sell energy omni-directionally."""
    pos = np.asarray(scenario.positions, dtype=float)
    n = len(pos)
    e = np.array(energy, dtype=float)
    heads = np.asarray(clusters.heads, dtype=np.int64)
    threshold = head_target if cfg.seller_threshold is None else cfg.seller_threshold
    omni = omni_matrix(pos, prop)
    diff = pos[None, :, :] - pos[:, None, :]
    near = np.hypot(diff[..., 0], diff[..., 1]) <= cfg.serve_radius
    seller = np.zeros(n, dtype=bool)
    fracs = np.empty(n)
    gains = np.empty(n)
    tx_dt = tx_power * cfg.dt
    node_target = np.full(n, et_s)
    node_target[heads] = head_target

    def step():
        active = K.trading_step(e, seller, threshold, et_s, cfg.reserve, tx_dt, cfg.dt, omni,
                                near, fracs, gains)
        rec = None
        if trace:
            rec = [(int(s), -1, float(fracs[s])) for s in np.flatnonzero(fracs > 0)]
        return active, gains, float(fracs.sum()) * tx_dt, rec

    def undercharged():
        # seller flags are refreshed at the start of each step; mirror that here
        sell = (seller & (e > cfg.reserve)) | (e >= threshold)
        return (~sell) & (e < et_s)

    loop = _Loop(e, cfg, et_s, node_target, heads)
    return loop.run(step, undercharged, [] if trace else None)
