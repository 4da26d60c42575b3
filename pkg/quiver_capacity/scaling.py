"""
Base change group action on representations, the character chi_sigma, and the
scaling of a gaussian extremizer into a geometric (doubly stochastic) datum.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from quiver_capacity.capacity import CapacityReport, SolverStatus, residual, sink_aggregates, solve
from quiver_capacity.errors import (
    DimensionMismatch,
    NotExtremal,
    NotTriangular,
    SingularBlock,
    SplitImbalance,
    ZeroRepresentation,
)
from quiver_capacity.kraus import StochasticResiduals, ds_residual
from quiver_capacity.linalg import Matrix, MatrixField, SpdTuple, inv_sqrt, symmetrize
from quiver_capacity.quiver_model import DimensionVector, QuiverDatum, Weight, restrict
from quiver_capacity.settings import SolverOptions

INVERTIBILITY_TOL = 1e-12


class GroupElement(BaseModel):
    """
    g = (g(v_1), ..., g(v_k), g(w_1), ..., g(w_m)) in GL(beta).

    Attributes:
        gv (List[Matrix]): Source blocks, sizes beta(v_i).
        gw (List[Matrix]): Sink blocks, sizes beta(w_j).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    gv: List[MatrixField]
    gw: List[MatrixField]

    @classmethod
    def identity(cls, datum: QuiverDatum) -> "GroupElement":
        return cls(
            gv=[np.eye(size) for size in datum.beta.beta_plus],
            gw=[np.eye(size) for size in datum.beta.beta_minus],
        )

    def compose(self, other: "GroupElement") -> "GroupElement":
        """Blockwise product self * other, so act(self.compose(h), V) == act(self, act(h, V))."""
        return GroupElement(
            gv=[left @ right for left, right in zip(self.gv, other.gv)],
            gw=[left @ right for left, right in zip(self.gw, other.gw)],
        )


def _block_log_abs_det(block: Matrix, label: str) -> Tuple[float, float]:
    sign, log_abs = np.linalg.slogdet(block)
    dim = block.shape[0]
    norm = float(np.linalg.norm(block, 2)) if dim else 1.0
    if sign == 0 or norm == 0.0 or log_abs <= math.log(INVERTIBILITY_TOL) + dim * math.log(norm):
        raise SingularBlock(f"Group element block {label} is not invertible")
    return float(sign), float(log_abs)


def _check_shapes(g: GroupElement, datum: QuiverDatum) -> None:
    if len(g.gv) != datum.num_sources or len(g.gw) != datum.num_sinks:
        raise DimensionMismatch("Group element has the wrong number of blocks for this quiver")
    for index, (block, size) in enumerate(zip(g.gv, datum.beta.beta_plus)):
        if block.shape != (size, size):
            raise DimensionMismatch(f"g(v_{index + 1}) has shape {block.shape}, expected {(size, size)}")
    for index, (block, size) in enumerate(zip(g.gw, datum.beta.beta_minus)):
        if block.shape != (size, size):
            raise DimensionMismatch(f"g(w_{index + 1}) has shape {block.shape}, expected {(size, size)}")


def act(g: GroupElement, datum: QuiverDatum) -> QuiverDatum:
    """(g . V)(a) = g(ha) V(a) g(ta)^{-1}."""
    _check_shapes(g, datum)
    for index, block in enumerate(g.gv):
        _block_log_abs_det(block, f"v_{index + 1}")
    maps: List[Matrix] = []
    for arrow_id, arrow in enumerate(datum.quiver.arrows):
        source_block = g.gv[arrow.source]
        # V g^{-1} = (g^{-T} V^T)^T
        right = np.linalg.solve(source_block.T, datum.arrow_map(arrow_id).T).T
        maps.append(g.gw[arrow.sink] @ right)
    return datum.with_maps(maps)


def log_abs_character(g: GroupElement, sigma: Weight) -> Tuple[float, float]:
    """(sign, log |chi_sigma(g)|)."""
    sign = 1.0
    value = 0.0
    for index, (block, weight) in enumerate(zip(g.gv, sigma.sigma_plus)):
        block_sign, log_abs = _block_log_abs_det(block, f"v_{index + 1}")
        sign *= block_sign**weight
        value += weight * log_abs
    for index, (block, weight) in enumerate(zip(g.gw, sigma.sigma_minus)):
        block_sign, log_abs = _block_log_abs_det(block, f"w_{index + 1}")
        sign *= block_sign**weight
        value -= weight * log_abs
    return sign, value


def character(g: GroupElement, sigma: Weight) -> float:
    """chi_sigma(g) = prod_i det(g(v_i))^{sigma_plus(v_i)} * prod_j det(g(w_j))^{-sigma_minus(w_j)}."""
    sign, value = log_abs_character(g, sigma)
    return sign * math.exp(value)


class GeometricCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    is_geometric: bool
    residuals: StochasticResiduals


def is_geometric(datum: QuiverDatum, tol: float = 1e-8) -> GeometricCheck:
    residuals = ds_residual(datum)
    return GeometricCheck(is_geometric=residuals.worst <= tol, residuals=residuals)


def extremizer_to_group(
    datum: QuiverDatum, sigma: Sequence[Matrix], tol: float = 1e-6, logger: Optional[logging.Logger] = None
) -> GroupElement:
    """
    g(v_i) = Sigma_i^{-1/2}, g(w_j) = M_j(Sigma)^{-1/2}; g . V is geometric when Sigma is an extremizer.

    Raises:
        NotExtremal: If residual(Sigma) exceeds tol.
    """
    logger = logger or logging.getLogger("QuiverCapacity")
    stationarity = residual(datum, sigma)
    if stationarity > tol:
        logger.error(f"Tuple is not an extremizer: residual {stationarity:.3e} > {tol:.1e}")
        raise NotExtremal(f"Residual {stationarity:.3e} exceeds tolerance {tol:.1e}")
    return GroupElement(
        gv=[inv_sqrt(matrix) for matrix in sigma],
        gw=[inv_sqrt(aggregate) for aggregate in sink_aggregates(datum, sigma)],
    )


def gaussian_extremizers_from_group(g: GroupElement) -> SpdTuple:
    """(g(v_i)^{-1} g(v_i)^{-T})_i."""
    extremizers: SpdTuple = []
    for index, block in enumerate(g.gv):
        _block_log_abs_det(block, f"v_{index + 1}")
        inverse = np.linalg.inv(block)
        extremizers.append(symmetrize(inverse @ inverse.T))
    return extremizers


def transport_extremizer(g: GroupElement, sigma: Sequence[Matrix]) -> SpdTuple:
    """(g(v_i) Sigma_i g(v_i)^T)_i, an extremizer of g . V whenever Sigma extremizes V."""
    return [symmetrize(block @ matrix @ block.T) for block, matrix in zip(g.gv, sigma)]


class CharacterFormulaReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    cap_original: float
    cap_transformed: float
    character: float
    relative_error: float
    status_original: SolverStatus
    status_transformed: SolverStatus


def verify_character_formula(
    datum: QuiverDatum,
    g: GroupElement,
    opts: Optional[SolverOptions] = None,
    logger: Optional[logging.Logger] = None,
) -> CharacterFormulaReport:
    """Compare cap(V, sigma) with chi_sigma(g)^2 cap(g . V, sigma)."""
    original = solve(datum, opts, logger=logger)
    transformed = solve(act(g, datum), opts, logger=logger)
    sign, log_chi = log_abs_character(g, datum.sigma)
    if original.cap > 0.0:
        predicted = math.exp(2.0 * log_chi) * transformed.cap
        relative_error = abs(original.cap - predicted) / original.cap
    else:
        relative_error = 0.0 if transformed.cap == 0.0 else math.inf
    return CharacterFormulaReport(
        cap_original=original.cap,
        cap_transformed=transformed.cap,
        character=sign * math.exp(log_chi),
        relative_error=relative_error,
        status_original=original.status,
        status_transformed=transformed.status,
    )


class DecompositionReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    cap: float
    cap_first: float
    cap_second: float
    ajn_constant: float
    ajn_constant_first: float
    ajn_constant_second: float
    relative_error: float
    statuses: List[SolverStatus]


def _solve_part(
    part: Optional[QuiverDatum], opts: Optional[SolverOptions], logger: Optional[logging.Logger]
) -> CapacityReport:
    if part is None:
        # every vertex space is zero-dimensional: empty products
        return CapacityReport(
            status=SolverStatus.CONVERGED, cap=1.0, ajn_constant=0.0, iterations=0, final_residual=0.0
        )
    try:
        return solve(part, opts, logger=logger)
    except ZeroRepresentation:
        return CapacityReport(
            status=SolverStatus.INFEASIBLE,
            cap=0.0,
            ajn_constant=math.inf,
            iterations=0,
            final_residual=math.inf,
            note="zero representation on a nonzero dimension vector",
        )


def verify_decomposition(
    datum: QuiverDatum,
    split: DimensionVector,
    opts: Optional[SolverOptions] = None,
    logger: Optional[logging.Logger] = None,
) -> DecompositionReport:
    """
    For V(a) = [[V_1(a), X(a)], [0, V_2(a)]] with V_1 of dimension `split`, check
    cap(V, sigma) = cap(V_1, sigma) * cap(V_2, sigma).

    Raises:
        SplitImbalance: If sigma . dim V_1 != 0.
        NotTriangular: If some lower-left block is not exactly zero.
    """
    logger = logger or logging.getLogger("QuiverCapacity")
    if len(split.beta_plus) != datum.num_sources or len(split.beta_minus) != datum.num_sinks:
        raise DimensionMismatch("Split dimension vector has the wrong length")
    for first, total in zip(split.beta_plus + split.beta_minus, datum.beta.beta_plus + datum.beta.beta_minus):
        if not 0 <= first <= total:
            raise DimensionMismatch(f"Split dimension {first} outside [0, {total}]")

    source_side = sum(s * b for s, b in zip(datum.sigma.sigma_plus, split.beta_plus))
    sink_side = sum(s * b for s, b in zip(datum.sigma.sigma_minus, split.beta_minus))
    if source_side != sink_side:
        logger.error(f"Split is unbalanced: {source_side} != {sink_side}")
        raise SplitImbalance(f"sigma . dim V_1 = {source_side - sink_side} != 0")

    for arrow_id, arrow in enumerate(datum.quiver.arrows):
        lower_left = datum.arrow_map(arrow_id)[split.beta_minus[arrow.sink] :, : split.beta_plus[arrow.source]]
        if np.any(lower_left != 0.0):
            logger.error(f"Arrow {arrow_id} is not upper block triangular")
            raise NotTriangular(f"Arrow {arrow_id} has a nonzero lower-left block")

    first_part = restrict(
        datum,
        [range(d) for d in split.beta_plus],
        [range(n) for n in split.beta_minus],
    )
    second_part = restrict(
        datum,
        [range(d, total) for d, total in zip(split.beta_plus, datum.beta.beta_plus)],
        [range(n, total) for n, total in zip(split.beta_minus, datum.beta.beta_minus)],
    )
    whole = solve(datum, opts, logger=logger)
    first = _solve_part(first_part, opts, logger)
    second = _solve_part(second_part, opts, logger)

    product = first.cap * second.cap
    if whole.cap > 0.0:
        relative_error = abs(whole.cap - product) / whole.cap
    else:
        relative_error = 0.0 if product == 0.0 else math.inf
    logger.info(f"Decomposition: cap={whole.cap:.10g}, parts={first.cap:.10g} * {second.cap:.10g}")
    return DecompositionReport(
        cap=whole.cap,
        cap_first=first.cap,
        cap_second=second.cap,
        ajn_constant=whole.ajn_constant,
        ajn_constant_first=first.ajn_constant,
        ajn_constant_second=second.ajn_constant,
        relative_error=relative_error,
        statuses=[whole.status, first.status, second.status],
    )
