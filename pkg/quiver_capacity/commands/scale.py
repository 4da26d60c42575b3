import logging
import math
from typing import Any, Dict, Optional

from quiver_capacity.capacity import SolverStatus, solve
from quiver_capacity.commands.base import STATUS_EXIT_CODES, BaseCommand, CommandConfig, CommandOutcome, capacity_fields
from quiver_capacity.datum_io import ajn_to_file, datum_to_file
from quiver_capacity.kraus import ds_residual
from quiver_capacity.models import GroupElementEntry, ReportFile, ResidualsEntry
from quiver_capacity.quiver_model import to_ajn
from quiver_capacity.scaling import act, extremizer_to_group, log_abs_character


class ScaleConfig(CommandConfig):
    pass


class ScaleCommand(BaseCommand[ScaleConfig]):
    """
    Solve, turn the extremizer into g = (Sigma_i^{-1/2}, M_j^{-1/2}) and report g, chi_sigma(g),
    the geometric datum g . V and its doubly-stochastic residuals.
    """

    name = "scale"

    def __init__(self, config: Dict[str, Any], logger: Optional[logging.Logger] = None) -> None:
        super().__init__(ScaleConfig(**config), logger)

    async def run(self) -> CommandOutcome:
        loaded = self.load()
        datum = loaded.datum
        opts = self.config.options
        result = solve(datum, opts, logger=self.logger)
        fields = capacity_fields(result)
        if result.status != SolverStatus.CONVERGED or result.extremizer is None:
            self.logger.info(f"No scaling available: solver stopped with status {result.status.value}")
            return CommandOutcome(
                report=ReportFile(command=self.name, **fields), exit_code=STATUS_EXIT_CODES[result.status]
            )

        g = extremizer_to_group(datum, result.extremizer, tol=opts.tol, logger=self.logger)
        sign, log_abs = log_abs_character(g, datum.sigma)
        scaled = act(g, datum)
        residuals = ds_residual(scaled, self.logger)
        scaled_file = ajn_to_file(to_ajn(scaled)) if loaded.ajn is not None else datum_to_file(scaled)
        self.logger.info(
            f"Scaled datum: worst ds residual {residuals.worst:.3e}, log|chi| = {log_abs:.12g}"
        )

        report = ReportFile(
            command=self.name,
            group_element=GroupElementEntry(
                sources=[block.tolist() for block in g.gv], sinks=[block.tolist() for block in g.gw]
            ),
            character=sign * math.exp(log_abs),
            log_abs_character=log_abs,
            scaled_datum=scaled_file,
            ds_residuals=ResidualsEntry(source=residuals.source, sink=residuals.sink),
            geometric=residuals.worst <= 10 * opts.tol,
            **fields,
        )
        return CommandOutcome(report=report, exit_code=STATUS_EXIT_CODES[result.status])
