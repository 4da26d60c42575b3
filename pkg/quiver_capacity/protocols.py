from typing import Protocol, runtime_checkable

from quiver_capacity.models import ReportFile


@runtime_checkable
class CommandOutcomeProtocol(Protocol):
    """A finished command: the report to print and the process exit code."""

    report: ReportFile
    exit_code: int


@runtime_checkable
class CommandProtocol(Protocol):
    """Interface for CLI sub-commands."""

    async def run(self) -> CommandOutcomeProtocol:
        """Load the datum, run the computation and build the report.

        Raises:
            QuiverCapacityError: When the datum cannot be parsed or is invalid.
        """
        ...
