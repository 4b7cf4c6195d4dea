"""End-to-end scheme runs, metrics and aggregation.

Schemes:

``pivot``
    cluster -> best-start stage 1 to ET_p -> directional heads charge members.
``trading``
    cluster -> best-start stage 1 to ET_h -> omni energy trading.
``flat``
    single-stage baseline: the same greedy charger, but every node is a
    target at ET_s. It starts at the first selected head (the densest
    inclusion circle) instead of searching all starts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .clustering import Cluster, ClusterSet, cluster_nodes
from .config import RunConfig, default_head_targets
from .model import OMNI, Role, SensorNode
from .planner import Targets, optimize_start, run_stage1
from .stage2 import COMPLETE, STALLED, run_stage2_pivot, run_stage2_trading

log = logging.getLogger(__name__)

SCHEMES = ("pivot", "trading", "flat")


@dataclass(frozen=True)
class SchemeSpec:
    kind: str
    config: RunConfig = field(default_factory=RunConfig)

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise ValueError(f"unknown scheme {self.kind!r}")

    def targets(self, n: int) -> Targets:
        t = self.config.targets
        et_p, et_h = default_head_targets(n)
        if self.kind == "pivot":
            head = t.et_p if t.et_p is not None else et_p
        elif self.kind == "trading":
            head = t.et_h if t.et_h is not None else et_h
        else:
            head = t.et_s
        return Targets(head=float(head), service=float(t.et_s),
                       singleton_target_ets=t.singleton_target_ets)

    def with_head_target(self, value: float) -> "SchemeSpec":
        key = "et_h" if self.kind == "trading" else "et_p"
        return SchemeSpec(self.kind, self.config.replace("targets", **{key: float(value)}))


@dataclass
class RunResult:
    run_id: str
    scheme: str
    n_nodes: int
    seed: int
    status: str
    t_stage1: float
    t_stage2: float
    series: np.ndarray  # rows (t_s, n_at_target, n_overcharged, stage)
    trajectory: np.ndarray  # rows (t_s, x_m, y_m, bearing_rad, kind)
    head_profile: list  # (head_id, e_before_j, e_after_j)
    unmet: list
    received: float
    transmitted: float
    start: tuple
    clusters: ClusterSet
    targets: Targets
    energy: np.ndarray = field(repr=False, default=None)
    n_start_runs: int = 0

    @property
    def t_total(self) -> float:
        return self.t_stage1 + self.t_stage2

    @property
    def efficiency(self) -> float:
        return self.received / self.transmitted if self.transmitted > 0 else 0.0

    def _stage1_end(self):
        rows = self.series[self.series[:, 3] == 1]
        return rows[-1]

    @property
    def overcharged_stage1(self) -> int:
        return int(self._stage1_end()[2])

    @property
    def at_target_stage1(self) -> int:
        return int(self._stage1_end()[1])

    def nodes(self, scenario) -> list:
        """Per-node view of the final state: role, stage-1 target and energy."""
        head_role = {"pivot": Role.PIVOT_HEAD, "trading": Role.CLUSTER_HEAD}.get(self.scheme)
        target = self.targets.node_targets(scenario.n, self.clusters)
        heads = set(self.clusters.heads) if head_role is not None else set()
        return [SensorNode(i, (x, y), float(self.energy[i]),
                           head_role if i in heads else Role.MEMBER, float(target[i]))
                for i, x, y in scenario.nodes()]

    def summary(self) -> dict:
        return {
            "run_id": self.run_id,
            "scheme": self.scheme,
            "n_nodes": self.n_nodes,
            "seed": self.seed,
            "status": self.status,
            "t_stage1": self.t_stage1,
            "t_stage2": self.t_stage2,
            "t_total": self.t_total,
            "n_clusters": len(self.clusters),
            "head_target_j": self.targets.head,
            "et_s_j": self.targets.service,
            "start": list(self.start),
            "n_start_runs": self.n_start_runs,
            "overcharged_stage1": self.overcharged_stage1,
            "at_target_stage1": self.at_target_stage1,
            "received_j": self.received,
            "transmitted_j": self.transmitted,
            "efficiency": self.efficiency,
            "unmet": [[i, d] for i, d in self.unmet],
            "clusters": self.clusters.to_dict(),
        }


def run_id_for(scheme: str, n: int, seed: int) -> str:
    return f"{scheme}-n{n}-s{seed}"


def _merge_series(s1, s2, t1):
    rows = [np.column_stack([s1, np.ones(len(s1))])]
    if s2 is not None and len(s2) > 1:
        tail = s2[1:].copy()
        tail[:, 0] += t1
        rows.append(np.column_stack([tail, np.full(len(tail), 2.0)]))
    return np.vstack(rows)


def run_scheme(scenario, spec: SchemeSpec, run_id: str | None = None, prune: bool = True) -> RunResult:
    if spec.kind == "flat":
        return run_flat_baseline(scenario, spec.config, run_id)
    cfg = spec.config
    n = scenario.n
    targets = spec.targets(n)
    clusters = cluster_nodes(scenario, cfg.clustering.r_cl)
    ccfg = cfg.charger_config()
    search = optimize_start(scenario, clusters, ccfg, cfg.propagation, targets, prune=prune)
    s1 = search.result
    c2 = cfg.stage2_config()
    if spec.kind == "pivot":
        s2 = run_stage2_pivot(scenario, s1.energy, clusters, c2, cfg.propagation, cfg.pattern,
                              cfg.tx_power(), targets.service, targets.head)
    else:
        s2 = run_stage2_trading(scenario, s1.energy, clusters, c2, cfg.propagation,
                                cfg.tx_power(OMNI), targets.service, targets.head)
    profile = [(h, s2.head_energy_before[h], s2.head_energy_after[h]) for h in clusters.heads]
    return RunResult(
        run_id=run_id or run_id_for(spec.kind, n, scenario.seed), scheme=spec.kind,
        n_nodes=n, seed=scenario.seed, status=s2.status, t_stage1=s1.t_cm,
        t_stage2=s2.duration, series=_merge_series(s1.series, s2.series, s1.t_cm),
        trajectory=s1.trajectory, head_profile=profile, unmet=s2.unmet,
        received=float(s1.energy.sum()) + s2.received,
        transmitted=ccfg.tx_power * s1.t_cm + s2.transmitted, start=s1.start,
        clusters=clusters, targets=targets, energy=s2.energy, n_start_runs=search.n_runs)


def run_flat_baseline(scenario, config: RunConfig | None = None, run_id: str | None = None) -> RunResult:
    """Single mobile charger with every node as a target at ET_s; no stage 2."""
    cfg = config or RunConfig()
    n = scenario.n
    et_s = cfg.targets.et_s
    clusters = cluster_nodes(scenario, cfg.clustering.r_cl)
    everyone = ClusterSet(tuple(Cluster(i) for i in range(n)), clusters.r_cl)
    targets = Targets(head=et_s, service=et_s)
    ccfg = cfg.charger_config()
    start = scenario.positions[clusters.heads[0]]
    s1 = run_stage1(scenario, everyone, start, ccfg, cfg.propagation, targets)
    unmet = [(int(i), float(et_s - s1.energy[i])) for i in np.flatnonzero(s1.energy < et_s)]
    return RunResult(
        run_id=run_id or run_id_for("flat", n, scenario.seed), scheme="flat", n_nodes=n,
        seed=scenario.seed, status=COMPLETE if not unmet else STALLED, t_stage1=s1.t_cm,
        t_stage2=0.0, series=_merge_series(s1.series, None, s1.t_cm),
        trajectory=s1.trajectory, head_profile=[], unmet=unmet,
        received=float(s1.energy.sum()), transmitted=ccfg.tx_power * s1.t_cm,
        start=s1.start, clusters=clusters, targets=targets, energy=s1.energy, n_start_runs=1)


def calibrate_target(scenario, scheme: str, base_config: RunConfig | None = None,
                     bounds=(2.0, 12.0), tol: float = 0.1):
    """Smallest stage-1 head target (J, to within ``tol``) for which the
    two-stage run completes.

    Returns ``(value, found)``; ``found`` is False and ``value`` is
    ``bounds[1]`` when even the upper bound stalls. Assumes completion is
    monotone in the target.
    """
    lo, hi = float(bounds[0]), float(bounds[1])
    if not lo < hi:
        raise ValueError(f"invalid bounds {bounds}")
    if scheme not in ("pivot", "trading"):
        raise ValueError("calibration applies to the two-stage schemes only")
    spec = SchemeSpec(scheme, base_config or RunConfig())

    def completes(v):
        return run_scheme(scenario, spec.with_head_target(v)).status == COMPLETE

    if not completes(hi):
        return hi, False
    if completes(lo):
        return lo, True
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if completes(mid):
            hi = mid
        else:
            lo = mid
    return hi, True


SUMMARY_FIELDS = ("scheme", "n_nodes", "n_runs", "t_total_mean", "t_total_min", "t_total_max",
                  "t_stage1_mean", "t_stage2_mean", "completion_rate", "overcharged_stage1_mean")


def summarize(results, keys=("scheme", "n_nodes"), groups=None) -> list:
    """Aggregate run summaries (``RunResult`` or their ``summary()`` dicts)
    per group. Groups named in ``groups`` but without runs are dropped with
    a warning."""
    rows = [r.summary() if isinstance(r, RunResult) else r for r in results]
    if not rows:
        raise ValueError("nothing to summarize")
    by = {}
    for r in rows:
        by.setdefault(tuple(r[k] for k in keys), []).append(r)
    wanted = sorted(by) if groups is None else [tuple(g) for g in groups]
    out = []
    for g in wanted:
        rs = by.get(g)
        if not rs:
            log.warning("no runs for group %s; row omitted", g)
            continue
        t = np.array([r["t_total"] for r in rs])
        row = dict(zip(keys, g))
        row.update(
            n_runs=len(rs),
            t_total_mean=float(t.mean()), t_total_min=float(t.min()), t_total_max=float(t.max()),
            t_stage1_mean=float(np.mean([r["t_stage1"] for r in rs])),
            t_stage2_mean=float(np.mean([r["t_stage2"] for r in rs])),
            completion_rate=float(np.mean([r["status"] == COMPLETE for r in rs])),
            overcharged_stage1_mean=float(np.mean([r["overcharged_stage1"] for r in rs])),
        )
        out.append(row)
    return out
