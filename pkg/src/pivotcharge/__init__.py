"""Two-stage RF charging of wireless rechargeable sensor networks.

A mobile charger with a directional antenna charges cluster heads along a
greedily planned path; the heads then charge their members (``pivot``), or
every overcharged node trades energy omni-directionally (``trading``). A
single-stage ``flat`` charger serves as baseline.
"""

from .clustering import Cluster, ClusterSet, cluster_nodes, inclusion_count
from .config import DEFAULT_TARGETS, RunConfig, default_head_targets
from .engine import (RunResult, SchemeSpec, calibrate_target, run_flat_baseline, run_scheme,
                     summarize)
from .model import (OMNI, AntennaPattern, PropagationParams, Role, Scenario, SensorNode,
                    derive_tx_power, directive_gain, received_power)
from .planner import (Action, ActionKind, ChargerConfig, ChargerState, Targets,
                      candidate_actions, optimize_start, plan_step, run_stage1, sector_power)
from .stage2 import Stage2Config, next_target, run_stage2_pivot, run_stage2_trading

__version__ = "0.1.0"
