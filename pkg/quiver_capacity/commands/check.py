import logging
from typing import Any, Dict, Optional

from quiver_capacity.capacity import CapacityReport, SolverStatus, solve
from quiver_capacity.commands.base import (
    EXIT_INFEASIBLE,
    EXIT_OK,
    EXIT_UNDECIDED,
    BaseCommand,
    CommandConfig,
    CommandOutcome,
    capacity_fields,
)
from quiver_capacity.errors import ZeroRepresentation
from quiver_capacity.models import ReportFile, ViolatorEntry
from quiver_capacity.scaling import is_geometric
from quiver_capacity.stability import ViolationReport, find_violator


class CheckConfig(CommandConfig):
    pass


def _violator_entry(violation: ViolationReport) -> ViolatorEntry:
    return ViolatorEntry(
        bases=[basis.tolist() for basis in violation.subspaces.bases],
        dimensions=violation.subspaces.dimensions,
        image_dimensions=violation.image_dimensions,
        lhs=violation.lhs,
        rhs=violation.rhs,
        slack=violation.slack,
    )


class CheckCommand(BaseCommand[CheckConfig]):
    """
    Feasibility verdict: a violating subspace tuple certifies infeasibility exactly, a converged
    capacity solve certifies feasibility. Neither gives Inconclusive.
    """

    name = "check"

    def __init__(self, config: Dict[str, Any], logger: Optional[logging.Logger] = None) -> None:
        super().__init__(CheckConfig(**config), logger)

    async def run(self) -> CommandOutcome:
        loaded = self.load()
        datum = loaded.datum
        opts = self.config.options

        result: Optional[CapacityReport] = None
        try:
            result = solve(datum, opts, logger=self.logger)
        except ZeroRepresentation:
            self.logger.info("Zero representation: skipping the capacity solve")
        violation = find_violator(datum, opts.violator_budget, opts.seed, opts.rank_tol, self.logger)
        geometric = is_geometric(datum, tol=10 * opts.tol).is_geometric

        fields: Dict[str, Any] = capacity_fields(result) if result is not None else {}
        if violation is not None:
            status, feasible, exit_code = "Infeasible", False, EXIT_INFEASIBLE
            note = f"semi-stability violated with slack {violation.slack}"
            if result is not None and result.status == SolverStatus.CONVERGED:
                self.logger.warning("Violator found although the solver converged; trusting the exact certificate")
                note += "; solver converged at numerical tolerance"
        elif result is not None and result.status == SolverStatus.CONVERGED:
            status, feasible, exit_code = "Feasible", True, EXIT_OK
            note = "capacity solve converged; no violator found"
        elif result is not None and result.status == SolverStatus.INFEASIBLE:
            status, feasible, exit_code = "Infeasible", False, EXIT_INFEASIBLE
            note = f"no violator found within {opts.violator_budget} evaluations; {result.note}"
        else:
            status, feasible, exit_code = "Inconclusive", None, EXIT_UNDECIDED
            note = "solver did not converge and no violator was found"
        fields.update({"status": status, "note": note})

        report = ReportFile(
            command=self.name,
            feasible=feasible,
            geometric=geometric,
            violator=_violator_entry(violation) if violation is not None else None,
            **fields,
        )
        self.logger.info(f"Feasibility check: {status}")
        return CommandOutcome(report=report, exit_code=exit_code)
