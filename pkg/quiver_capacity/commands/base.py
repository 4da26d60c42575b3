import logging
from abc import ABC, abstractmethod
from typing import Any, Dict, Generic, Optional, TypeVar, Union

from pydantic import BaseModel, ConfigDict, Field

from quiver_capacity.capacity import CapacityReport, SolverStatus
from quiver_capacity.datum_io import LoadedDatum, load_datum
from quiver_capacity.models import ReportFile
from quiver_capacity.protocols import CommandProtocol
from quiver_capacity.settings import SolverOptions

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_UNDECIDED = 3

STATUS_EXIT_CODES: Dict[SolverStatus, int] = {
    SolverStatus.CONVERGED: EXIT_OK,
    SolverStatus.INFEASIBLE: EXIT_INFEASIBLE,
    SolverStatus.MAX_ITERATIONS: EXIT_UNDECIDED,
}


class CommandConfig(BaseModel):
    """
    Base configuration for command implementations.

    Attributes:
        datum (Union[str, Dict[str, Any]]): Datum file path, raw JSON string or parsed document.
        options (SolverOptions): Solver settings after environment and CLI overrides.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    datum: Union[str, Dict[str, Any]]
    options: SolverOptions = Field(default_factory=SolverOptions)


class CommandOutcome(BaseModel):
    report: ReportFile
    exit_code: int


ConfigType = TypeVar("ConfigType", bound=CommandConfig)


class BaseCommand(CommandProtocol, ABC, Generic[ConfigType]):
    """
    Abstract base class for the CLI sub-commands.

    Attributes:
        config (ConfigType): The configuration instance for the command.
        logger (logging.Logger): Logger, defaults to the "QuiverCapacity" logger.
    """

    name: str = ""

    def __init__(self, config: ConfigType, logger: Optional[logging.Logger] = None) -> None:
        self.config: ConfigType = config
        self.logger: logging.Logger = logger or logging.getLogger("QuiverCapacity")
        self.logger.debug(f"{self.__class__.__name__} initialized with options: {self.config.options}")

    def load(self) -> LoadedDatum:
        return load_datum(self.config.datum, self.logger)

    @abstractmethod
    async def run(self) -> CommandOutcome:
        raise NotImplementedError("Subclasses must implement the run method.")


def capacity_fields(result: CapacityReport) -> Dict[str, Any]:
    """ReportFile fields shared by every command that runs the capacity solver."""
    return {
        "status": result.status.value,
        "cap": result.cap,
        "ajn_constant": result.ajn_constant,
        "iterations": result.iterations,
        "residual": result.final_residual,
        "extremizer": [matrix.tolist() for matrix in result.extremizer] if result.extremizer is not None else None,
        "note": result.note,
    }
