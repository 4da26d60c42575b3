from typing import Dict, Type

from quiver_capacity.commands.base import BaseCommand

# Sub-command names mapped to their implementation classes
COMMAND_REGISTRY: Dict[str, Type[BaseCommand]] = {}
