from .agents import (AgentConfig, CheckpointError, DdpgAgent, DdpgEhAgent,
                     Td3Agent, load_checkpoint, make_agent)
from .buffer import ReplayBuffer
from .nets import Adam, Mlp, soft_update, softmax_value
from .search import (BudgetError, exhaustive_slot_search, grid_search,
                     power_simplex)

__all__ = [
    "AgentConfig", "CheckpointError", "DdpgAgent", "DdpgEhAgent",
    "Td3Agent", "load_checkpoint", "make_agent", "ReplayBuffer", "Adam",
    "Mlp", "soft_update", "softmax_value", "BudgetError",
    "exhaustive_slot_search", "grid_search", "power_simplex",
]
