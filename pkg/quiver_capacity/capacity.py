"""
Capacity of a quiver datum and the AJN best constant.

The capacity is evaluated through the source-side determinant-ratio formula

    cap(V, sigma) = inf over Sigma of prod_j det(M_j(Sigma))^{sigma_minus(w_j)} / prod_i det(Sigma_i)^{sigma_plus(v_i)},
    M_j(Sigma) = sum_i sigma_plus(v_i) sum_{a: v_i -> w_j} V(a) Sigma_i V(a)^T,

and minimized by the fixed-point iteration

    Sigma_i <- [ sum_j sigma_minus(w_j) sum_a V(a)^T M_j(Sigma)^{-1} V(a) ]^{-1}

whose fixed points are exactly the gaussian extremizers.
"""

import logging
import math
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from quiver_capacity.errors import (
    DimensionMismatch,
    NotPositiveDefinite,
    SingularAggregate,
    SingularUpdate,
    ZeroRepresentation,
)
from quiver_capacity.linalg import (
    Matrix,
    MatrixField,
    SpdTuple,
    frobenius,
    geometric_mean,
    log_det,
    spd_inverse,
    symmetrize,
)
from quiver_capacity.quiver_model import AjnDatum, QuiverDatum, ensure_valid, from_ajn
from quiver_capacity.settings import SolverOptions

# Relative cap increase that triggers the damped retry of a step.
MONOTONE_SLACK = 1e-12
SAFEGUARD_DAMPING = 0.5


class SolverStatus(str, Enum):
    CONVERGED = "Converged"
    INFEASIBLE = "Infeasible"
    MAX_ITERATIONS = "MaxIterations"


class CapacityReport(BaseModel):
    """
    Result of a capacity solve.

    Attributes:
        status (SolverStatus): Converged, Infeasible (numerically) or MaxIterations.
        cap (float): Capacity at the fixed point; 0 when infeasible; an upper estimate on MaxIterations.
        ajn_constant (float): -log(cap) / 2, +inf when infeasible.
        extremizer (Optional[List[Matrix]]): The det-normalized fixed point when converged.
        iterations (int): Number of fixed-point steps taken.
        final_residual (float): Stationarity residual of the last iterate.
        log_cap_trace (List[float]): log cap_at of every visited iterate.
        note (str): Human-readable detail on how the verdict was reached.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    status: SolverStatus
    cap: float
    ajn_constant: float
    extremizer: Optional[List[MatrixField]] = None
    iterations: int
    final_residual: float
    log_cap_trace: List[float] = []
    note: str = ""

    @property
    def cap_trace(self) -> List[float]:
        """cap_at of every visited iterate; entries past the float range are inf."""
        return [_exp_or_inf(value) for value in self.log_cap_trace]


def _check_tuple(datum: QuiverDatum, sigma: Sequence[Matrix]) -> None:
    if len(sigma) != datum.num_sources:
        raise DimensionMismatch(f"Expected {datum.num_sources} matrices, got {len(sigma)}")
    for index, (matrix, size) in enumerate(zip(sigma, datum.beta.beta_plus)):
        if np.shape(matrix) != (size, size):
            raise DimensionMismatch(f"Sigma_{index + 1} has shape {np.shape(matrix)}, expected {(size, size)}")


def identity_tuple(datum: QuiverDatum) -> SpdTuple:
    return [np.eye(size) for size in datum.beta.beta_plus]


def sink_aggregates(datum: QuiverDatum, sigma: Sequence[Matrix]) -> List[Matrix]:
    """M_j = sum_i sigma_plus(v_i) sum_a V(a) Sigma_i V(a)^T, symmetrized."""
    _check_tuple(datum, sigma)
    aggregates = [np.zeros((size, size)) for size in datum.beta.beta_minus]
    for arrow_id, arrow in enumerate(datum.quiver.arrows):
        matrix = datum.arrow_map(arrow_id)
        aggregates[arrow.sink] += datum.sigma.sigma_plus[arrow.source] * (matrix @ sigma[arrow.source] @ matrix.T)
    return [symmetrize(aggregate) for aggregate in aggregates]


def _aggregate_log_dets(aggregates: Sequence[Matrix]) -> List[float]:
    values: List[float] = []
    for sink, aggregate in enumerate(aggregates):
        try:
            values.append(log_det(aggregate))
        except NotPositiveDefinite as e:
            raise SingularAggregate(f"Sink aggregate M_{sink + 1} is not positive definite") from e
    return values


def log_cap_at(datum: QuiverDatum, sigma: Sequence[Matrix]) -> float:
    aggregates = sink_aggregates(datum, sigma)
    sink_terms = _aggregate_log_dets(aggregates)
    value = sum(weight * term for weight, term in zip(datum.sigma.sigma_minus, sink_terms))
    value -= sum(weight * log_det(matrix) for weight, matrix in zip(datum.sigma.sigma_plus, sigma))
    return float(value)


def _exp_or_inf(value: float) -> float:
    try:
        return math.exp(value)
    except OverflowError:
        return math.inf


def cap_at(datum: QuiverDatum, sigma: Sequence[Matrix]) -> float:
    """
    prod_j det(M_j)^{sigma_minus(w_j)} / prod_i det(Sigma_i)^{sigma_plus(v_i)}, computed in log space.
    Values beyond the float range come back as inf; use log_cap_at to compare them.
    """
    return _exp_or_inf(log_cap_at(datum, sigma))


def cap_dual_at(datum: QuiverDatum, sink_matrices: Sequence[Matrix]) -> float:
    """
    Sink-side formula prod_i det(sum_j sigma_minus(w_j) sum_a V(a)^T Y_j V(a))^{sigma_plus(v_i)}
    / prod_j det(Y_j)^{sigma_minus(w_j)}; its infimum over positive definite Y is also cap(V, sigma).
    """
    if len(sink_matrices) != datum.num_sinks:
        raise DimensionMismatch(f"Expected {datum.num_sinks} matrices, got {len(sink_matrices)}")
    brackets = _weighted_pullbacks(datum, sink_matrices)
    value = 0.0
    for source, bracket in enumerate(brackets):
        try:
            value += datum.sigma.sigma_plus[source] * log_det(bracket)
        except NotPositiveDefinite as e:
            raise SingularUpdate(f"Source bracket for v_{source + 1} is not positive definite") from e
    value -= sum(weight * log_det(matrix) for weight, matrix in zip(datum.sigma.sigma_minus, sink_matrices))
    return _exp_or_inf(value)


def _weighted_pullbacks(datum: QuiverDatum, sink_matrices: Sequence[Matrix]) -> List[Matrix]:
    """B_i = sum_j sigma_minus(w_j) sum_a V(a)^T Y_j V(a)."""
    brackets = [np.zeros((size, size)) for size in datum.beta.beta_plus]
    for arrow_id, arrow in enumerate(datum.quiver.arrows):
        matrix = datum.arrow_map(arrow_id)
        brackets[arrow.source] += datum.sigma.sigma_minus[arrow.sink] * (matrix.T @ sink_matrices[arrow.sink] @ matrix)
    return [symmetrize(bracket) for bracket in brackets]


def _source_brackets(datum: QuiverDatum, sigma: Sequence[Matrix]) -> List[Matrix]:
    inverses: List[Matrix] = []
    for sink, aggregate in enumerate(sink_aggregates(datum, sigma)):
        try:
            inverses.append(spd_inverse(aggregate))
        except NotPositiveDefinite as e:
            raise SingularAggregate(f"Sink aggregate M_{sink + 1} is not positive definite") from e
    return _weighted_pullbacks(datum, inverses)


def normalize_tuple(datum: QuiverDatum, sigma: Sequence[Matrix]) -> SpdTuple:
    """Rescale by a global scalar so that prod_i det(Sigma_i)^{sigma_plus(v_i)} = 1."""
    weighted = sum(weight * log_det(matrix) for weight, matrix in zip(datum.sigma.sigma_plus, sigma))
    scale = math.exp(-weighted / datum.total_dimension)
    return [scale * np.asarray(matrix, dtype=np.float64) for matrix in sigma]


def _invert_brackets(datum: QuiverDatum, brackets: Sequence[Matrix]) -> SpdTuple:
    """
    Sigma_i = B_i^{-1}, up to the global scalar that det-normalizes the result. The scalar is
    applied to the brackets before inverting, so badly scaled data stay inside the float range.
    """
    weighted = 0.0
    for source, (weight, bracket) in enumerate(zip(datum.sigma.sigma_plus, brackets)):
        try:
            weighted += weight * log_det(bracket)
        except NotPositiveDefinite as e:
            raise SingularUpdate(
                f"Fixed-point bracket for v_{source + 1} is singular: a nonzero direction is annihilated"
            ) from e
    scale = math.exp(weighted / datum.total_dimension)

    updated: SpdTuple = []
    for source, bracket in enumerate(brackets):
        try:
            updated.append(spd_inverse(bracket / scale))
        except NotPositiveDefinite as e:
            raise SingularUpdate(
                f"Fixed-point bracket for v_{source + 1} is singular: a nonzero direction is annihilated"
            ) from e
    return updated


def _damped(previous: Sequence[Matrix], raw: Sequence[Matrix], damping: float) -> SpdTuple:
    if damping <= 0.0:
        return list(raw)
    return [geometric_mean(old, new, 1.0 - damping) for old, new in zip(previous, raw)]


def fixed_point_step(datum: QuiverDatum, sigma: Sequence[Matrix], damping: float = 0.0) -> SpdTuple:
    """
    One fixed-point step followed by det-product normalization. With damping t > 0 the new
    Sigma_i is the point at 1 - t on the SPD geodesic from the old one to the raw update.

    Raises:
        SingularAggregate: If some M_j(Sigma) is not positive definite.
        SingularUpdate: If some bracketed sum is not positive definite.
    """
    raw = _invert_brackets(datum, _source_brackets(datum, sigma))
    return normalize_tuple(datum, _damped(sigma, raw, damping))


def _stationarity(sigma: Sequence[Matrix], brackets: Sequence[Matrix]) -> float:
    worst = 0.0
    for matrix, bracket in zip(sigma, brackets):
        inverse = spd_inverse(matrix)
        worst = max(worst, frobenius(bracket - inverse) / frobenius(inverse))
    return worst


def residual(datum: QuiverDatum, sigma: Sequence[Matrix]) -> float:
    """max_i ||B_i(Sigma) - Sigma_i^{-1}||_F / ||Sigma_i^{-1}||_F."""
    return _stationarity(sigma, _source_brackets(datum, sigma))


def _infeasible_report(iterations: int, trace: List[float], final_residual: float, note: str) -> CapacityReport:
    return CapacityReport(
        status=SolverStatus.INFEASIBLE,
        cap=0.0,
        ajn_constant=math.inf,
        iterations=iterations,
        final_residual=final_residual,
        log_cap_trace=trace,
        note=f"numerically infeasible: {note}",
    )


def solve(
    datum: QuiverDatum,
    opts: Optional[SolverOptions] = None,
    initial: Optional[Sequence[Matrix]] = None,
    logger: Optional[logging.Logger] = None,
) -> CapacityReport:
    """
    Compute cap(V, sigma) by the fixed-point iteration started from `initial` (identities by default).

    Stops Converged when the stationarity residual reaches opts.tol, Infeasible when cap_at drops
    below opts.cap_floor or a step hits a singular aggregate/update, MaxIterations otherwise.

    Raises:
        ZeroRepresentation: If every arrow map is zero.
    """
    logger = logger or logging.getLogger("QuiverCapacity")
    opts = opts or SolverOptions()
    ensure_valid(datum, logger)
    if datum.rep.is_zero:
        logger.error("Capacity solve requested for the zero representation")
        raise ZeroRepresentation("The capacity solver needs a nonzero representation")

    start = list(initial) if initial is not None else identity_tuple(datum)
    _check_tuple(datum, start)
    sigma = normalize_tuple(datum, start)
    trace: List[float] = []
    current_residual = math.inf
    logger.info(
        f"Solving capacity: k={datum.num_sources}, m={datum.num_sinks}, N={datum.total_dimension}, "
        f"tol={opts.tol}, max_iter={opts.max_iter}"
    )

    iteration = 0
    while True:
        try:
            log_cap = log_cap_at(datum, sigma)
        except SingularAggregate as e:
            logger.info(f"Infeasible at iteration {iteration}: {e}")
            return _infeasible_report(iteration, trace, current_residual, str(e))
        trace.append(log_cap)
        if log_cap < math.log(opts.cap_floor):
            logger.info(f"Infeasible at iteration {iteration}: log cap {log_cap:.6g} below floor {opts.cap_floor:.1e}")
            return _infeasible_report(iteration, trace, current_residual, f"cap fell below {opts.cap_floor:.1e}")

        brackets = _source_brackets(datum, sigma)
        current_residual = _stationarity(sigma, brackets)
        logger.debug(f"iteration {iteration}: log cap={log_cap:.12g} residual={current_residual:.3e}")

        if current_residual <= opts.tol:
            logger.info(f"Converged after {iteration} iterations: log cap={log_cap:.12g}")
            return CapacityReport(
                status=SolverStatus.CONVERGED,
                cap=_exp_or_inf(log_cap),
                ajn_constant=-0.5 * log_cap,
                extremizer=sigma,
                iterations=iteration,
                final_residual=current_residual,
                log_cap_trace=trace,
                note="fixed point reached",
            )
        if iteration >= opts.max_iter:
            break

        try:
            raw = _invert_brackets(datum, brackets)
            candidate = normalize_tuple(datum, _damped(sigma, raw, opts.damping))
            if log_cap_at(datum, candidate) - log_cap > MONOTONE_SLACK:
                logger.debug(f"iteration {iteration}: cap increased, retrying with damping {SAFEGUARD_DAMPING}")
                retry_damping = 1.0 - (1.0 - opts.damping) * (1.0 - SAFEGUARD_DAMPING)
                candidate = normalize_tuple(datum, _damped(sigma, raw, retry_damping))
        except (SingularUpdate, SingularAggregate, NotPositiveDefinite) as e:
            logger.info(f"Infeasible at iteration {iteration}: {e}")
            return _infeasible_report(iteration, trace, current_residual, str(e))
        sigma = candidate
        iteration += 1

    logger.info(f"Stopped after {opts.max_iter} iterations without convergence; log cap <= {trace[-1]:.12g}")
    return CapacityReport(
        status=SolverStatus.MAX_ITERATIONS,
        cap=_exp_or_inf(trace[-1]),
        ajn_constant=-0.5 * trace[-1],
        iterations=iteration,
        final_residual=current_residual,
        log_cap_trace=trace,
        note="iteration limit reached; cap is an upper estimate",
    )


def ajn_solve(
    ajn: AjnDatum, opts: Optional[SolverOptions] = None, logger: Optional[logging.Logger] = None
) -> CapacityReport:
    """Solve cap(A, c, p) = cap(V_{A,c}, sigma_{c,p}); M(A, c, p) = -log(cap) / 2."""
    return solve(from_ajn(ajn, logger), opts, logger=logger)
