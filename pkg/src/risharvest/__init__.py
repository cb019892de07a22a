"""Energy harvesting UAV mounted RIS downlink: physics simulator plus the
learning and search stacks that drive it."""

__version__ = "0.1.0"

from .channel import ChannelConfig, ChannelRealization
from .energy import Battery, EhAction, EhConfig, EhProtocol
from .env import EnvConfig, RisEnv, SceneConfig, SlotReport

__all__ = [
    "__version__", "ChannelConfig", "ChannelRealization", "Battery",
    "EhAction", "EhConfig", "EhProtocol", "EnvConfig", "RisEnv",
    "SceneConfig", "SlotReport",
]
