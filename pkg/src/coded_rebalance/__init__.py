"""Replicated database rebalancing with coded repair traffic.

The library models an r-replicated balanced database over K nodes, removes
and adds nodes while measuring exactly how many bytes cross the wire, and
checks the results: balance, replication, structural invariance, and the
information-theoretic floor on repair traffic.
"""

from .addition import execute_addition
from .errors import (
    AlignmentError,
    DivisibilityError,
    InfeasibleRemovalError,
    ParameterError,
    ProtocolViolationError,
    RebalanceError,
    ScenarioError,
    TransportError,
)
from .exchange import ExchangeGroup, run_exchange
from .model import (
    ClusterDatabase,
    FileSpec,
    Subfile,
    enumerate_ordered_indices,
    falling_factorial,
    init_database,
    reconstruct_file,
    replication_profile,
    required_file_multiple,
    verify_balanced,
)
from .removal import (
    execute_removal,
    merge_reindex,
    plan_removal,
    repair_bound_counters,
)
from .scenario import (
    Scenario,
    load_scenario,
    parse_scenario,
    run_scenario,
    sweep_removals,
)
from .state import load_state, save_state
from .transport import (
    MemoryBroadcastChannel,
    MessageKind,
    OperationResult,
    SocketBroadcastChannel,
    TransmissionLog,
    make_channel,
)
from .uncoded import execute_removal_uncoded
from .verification import (
    LoadReport,
    addition_load_report,
    canonicalize,
    check_structural_invariance,
    removal_load_report,
    repair_lower_bound,
)

__all__ = [
    "AlignmentError",
    "ClusterDatabase",
    "DivisibilityError",
    "ExchangeGroup",
    "FileSpec",
    "InfeasibleRemovalError",
    "LoadReport",
    "MemoryBroadcastChannel",
    "MessageKind",
    "OperationResult",
    "ParameterError",
    "ProtocolViolationError",
    "RebalanceError",
    "Scenario",
    "ScenarioError",
    "SocketBroadcastChannel",
    "Subfile",
    "TransmissionLog",
    "TransportError",
    "addition_load_report",
    "canonicalize",
    "check_structural_invariance",
    "enumerate_ordered_indices",
    "execute_addition",
    "execute_removal",
    "execute_removal_uncoded",
    "falling_factorial",
    "init_database",
    "load_scenario",
    "load_state",
    "make_channel",
    "merge_reindex",
    "parse_scenario",
    "plan_removal",
    "reconstruct_file",
    "removal_load_report",
    "repair_bound_counters",
    "repair_lower_bound",
    "replication_profile",
    "required_file_multiple",
    "run_exchange",
    "run_scenario",
    "save_state",
    "sweep_removals",
    "verify_balanced",
]

__version__ = "0.1.0"
