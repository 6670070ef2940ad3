"""Reset/step multi-agent bridge over the orbitsim simulation core."""

__version__ = "0.1.0"

from orbitsim_bridge.env import (
    BRIDGE_ABI_VERSION,
    PROTOCOLS,
    BridgeError,
    CallbackPolicy,
    ClosedHandleError,
    EnvHandle,
    env_close,
    env_reset,
    env_step,
    episode_metrics,
    open_env,
    run_protocol,
)

__all__ = [
    "__version__",
    "BRIDGE_ABI_VERSION",
    "PROTOCOLS",
    "BridgeError",
    "CallbackPolicy",
    "ClosedHandleError",
    "EnvHandle",
    "open_env",
    "env_close",
    "env_reset",
    "env_step",
    "episode_metrics",
    "run_protocol",
]
