import logging
from typing import Any, Dict, Optional

from quiver_capacity.capacity import solve
from quiver_capacity.commands.base import STATUS_EXIT_CODES, BaseCommand, CommandConfig, CommandOutcome, capacity_fields
from quiver_capacity.models import ReportFile


class CapacityConfig(CommandConfig):
    pass


class CapacityCommand(BaseCommand[CapacityConfig]):
    """Compute cap(V, sigma) and, for AJN input, the best constant M(A, c, p)."""

    name = "capacity"

    def __init__(self, config: Dict[str, Any], logger: Optional[logging.Logger] = None) -> None:
        super().__init__(CapacityConfig(**config), logger)

    async def run(self) -> CommandOutcome:
        loaded = self.load()
        result = solve(loaded.datum, self.config.options, logger=self.logger)
        report = ReportFile(command=self.name, **capacity_fields(result))
        return CommandOutcome(report=report, exit_code=STATUS_EXIT_CODES[result.status])
