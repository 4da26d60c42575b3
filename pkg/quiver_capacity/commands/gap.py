import logging
import math
from typing import Any, Dict, List, Optional, Union

from quiver_capacity.capacity import log_cap_at
from quiver_capacity.commands.base import EXIT_OK, BaseCommand, CommandConfig, CommandOutcome
from quiver_capacity.datum_io import load_sigma
from quiver_capacity.entropy import ajn_gap
from quiver_capacity.models import ReportFile
from quiver_capacity.quiver_model import to_ajn


class GapConfig(CommandConfig):
    """
    Attributes:
        sigma (Union[str, List[Any]]): Sigma file path, raw JSON string or parsed list of matrices.
    """

    sigma: Union[str, List[Any]]


class GapCommand(BaseCommand[GapConfig]):
    """Evaluate the gaussian entropy gap at a given covariance tuple and check it against cap_at."""

    name = "gap"

    def __init__(self, config: Dict[str, Any], logger: Optional[logging.Logger] = None) -> None:
        super().__init__(GapConfig(**config), logger)

    async def run(self) -> CommandOutcome:
        loaded = self.load()
        covariances = load_sigma(self.config.sigma, self.logger)
        ajn = loaded.ajn if loaded.ajn is not None else to_ajn(loaded.datum)

        gap = ajn_gap(ajn, covariances, self.logger)
        log_cap = log_cap_at(loaded.datum, covariances)
        identity_residual = abs(gap + 0.5 * log_cap)
        self.logger.info(f"gap = {gap:.12g}, -log(cap_at)/2 = {-0.5 * log_cap:.12g}")

        report = ReportFile(
            command=self.name,
            status="Evaluated",
            gap=gap,
            cap_at=math.exp(log_cap),
            identity_residual=identity_residual,
        )
        return CommandOutcome(report=report, exit_code=EXIT_OK)
