"""Cell-level simulator of TCP over ATM ABR with ERICA explicit-rate switches."""

from abrsim.engine import Simulator, CancelResult, ExecutionStats
from abrsim.errors import ProtocolError, SchedulingError

__version__ = "0.1.0"

__all__ = [
    "Simulator",
    "CancelResult",
    "ExecutionStats",
    "ProtocolError",
    "SchedulingError",
]
