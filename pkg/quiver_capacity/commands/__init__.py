from quiver_capacity.commands.capacity import CapacityCommand
from quiver_capacity.commands.check import CheckCommand
from quiver_capacity.commands.gap import GapCommand
from quiver_capacity.commands.probe import ProbeCommand
from quiver_capacity.commands.registry import COMMAND_REGISTRY
from quiver_capacity.commands.scale import ScaleCommand

# Register commands in the global registry
COMMAND_REGISTRY.update({
    "capacity": CapacityCommand,
    "check": CheckCommand,
    "gap": GapCommand,
    "probe": ProbeCommand,
    "scale": ScaleCommand,
})

__all__ = [
    "COMMAND_REGISTRY",
    "CapacityCommand",
    "CheckCommand",
    "GapCommand",
    "ProbeCommand",
    "ScaleCommand",
]
