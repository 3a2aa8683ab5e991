"""Two-node orchestration over a topic pub/sub transport."""

from .messages import Message, MessageKind
from .orchestrator import RunReport, offload_count, run_scenario, split_batch, sweep
from .scenario import MOBILE, STATIC, ScenarioConfig, config_from_dict, load_scenario
from .transport import InProcBus, SocketEndpoint, SocketListener, socket_pair

__all__ = [
    "MOBILE",
    "STATIC",
    "InProcBus",
    "Message",
    "MessageKind",
    "RunReport",
    "ScenarioConfig",
    "SocketEndpoint",
    "SocketListener",
    "config_from_dict",
    "load_scenario",
    "offload_count",
    "run_scenario",
    "socket_pair",
    "split_batch",
    "sweep",
]
