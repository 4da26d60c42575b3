import logging
from typing import Any, Dict, Optional

from quiver_capacity.capacity import SolverStatus, solve
from quiver_capacity.commands.base import (
    EXIT_OK,
    EXIT_UNDECIDED,
    STATUS_EXIT_CODES,
    BaseCommand,
    CommandConfig,
    CommandOutcome,
    capacity_fields,
)
from quiver_capacity.models import ReportFile
from quiver_capacity.stability import UniquenessVerdict, endomorphism_dimension, uniqueness_probe_async


class ProbeConfig(CommandConfig):
    pass


class ProbeCommand(BaseCommand[ProbeConfig]):
    """Probe uniqueness of the gaussian extremizer by random restarts and report dim End_Q(V)."""

    name = "probe"

    def __init__(self, config: Dict[str, Any], logger: Optional[logging.Logger] = None) -> None:
        super().__init__(ProbeConfig(**config), logger)

    async def run(self) -> CommandOutcome:
        loaded = self.load()
        datum = loaded.datum
        opts = self.config.options

        result = solve(datum, opts, logger=self.logger)
        fields = capacity_fields(result)
        if result.status == SolverStatus.INFEASIBLE:
            return CommandOutcome(report=ReportFile(command=self.name, **fields), exit_code=STATUS_EXIT_CODES[result.status])

        probe = await uniqueness_probe_async(datum, opts.restarts, opts, max_concurrency=opts.threads, logger=self.logger)
        end_dimension = endomorphism_dimension(datum, opts.rank_tol)
        fields.update({"status": probe.verdict.value})

        report = ReportFile(
            command=self.name,
            uniqueness=probe.verdict.value,
            end_dimension=end_dimension,
            schur=end_dimension == 1,
            restarts=probe.restarts,
            converged_restarts=probe.converged,
            max_deviation=probe.max_deviation,
            witness=[[matrix.tolist() for matrix in member] for member in probe.witness] if probe.witness else None,
            witness_residuals=probe.witness_residuals,
            **fields,
        )
        exit_code = EXIT_UNDECIDED if probe.verdict == UniquenessVerdict.INCONCLUSIVE else EXIT_OK
        return CommandOutcome(report=report, exit_code=exit_code)
