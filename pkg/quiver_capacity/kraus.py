"""
The Brascamp-Lieb completely positive operator T_{V,sigma} of a quiver datum.

N x N matrices are split into M x M' blocks: row block q belongs to sink w_j when
q lies in I^-_j (size beta(w_j)), column block r belongs to source v_i when r lies in
I^+_i (size beta(v_i)). Each Kraus operator has a single nonzero block V(a) at (q, r),
so T and T* are applied block by block and never materialized as dense N x N matrices.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from quiver_capacity.errors import DimensionMismatch
from quiver_capacity.linalg import Matrix, MatrixField, frobenius, log_det
from quiver_capacity.quiver_model import QuiverDatum, ensure_valid


class IndexLayout(BaseModel):
    """
    Block layout of the Kraus operators.

    Attributes:
        total_dimension (int): N.
        source_intervals (List[Tuple[int, int]]): I^+_i as half-open 0-based block ranges [start, stop).
        sink_intervals (List[Tuple[int, int]]): I^-_j as half-open 0-based block ranges [start, stop).
        source_offsets (List[int]): Coordinate offset of every column block r, plus N at the end.
        sink_offsets (List[int]): Coordinate offset of every row block q, plus N at the end.
    """

    model_config = ConfigDict(frozen=True)

    total_dimension: int
    source_intervals: List[Tuple[int, int]]
    sink_intervals: List[Tuple[int, int]]
    source_offsets: List[int]
    sink_offsets: List[int]

    @property
    def sink_weight_total(self) -> int:
        """M, the number of row blocks."""
        return len(self.sink_offsets) - 1

    @property
    def source_weight_total(self) -> int:
        """M', the number of column blocks."""
        return len(self.source_offsets) - 1

    def source_slice(self, block: int) -> slice:
        return slice(self.source_offsets[block], self.source_offsets[block + 1])

    def sink_slice(self, block: int) -> slice:
        return slice(self.sink_offsets[block], self.sink_offsets[block + 1])


class KrausBlock(BaseModel):
    """The Kraus operator V^{i,j,a}_{q,r}: block V(a) at block position (q, r)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    source: int
    sink: int
    arrow: int
    q: int
    r: int
    block: MatrixField


class KrausSystem(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    layout: IndexLayout
    blocks: List[KrausBlock]


def _intervals(weights: Sequence[int]) -> List[Tuple[int, int]]:
    bounds = np.concatenate([[0], np.cumsum(weights)]).astype(int)
    return [(int(bounds[index]), int(bounds[index + 1])) for index in range(len(weights))]


def _offsets(weights: Sequence[int], dimensions: Sequence[int]) -> List[int]:
    sizes = np.repeat(np.asarray(dimensions, dtype=int), np.asarray(weights, dtype=int))
    return [int(value) for value in np.concatenate([[0], np.cumsum(sizes)])]


def build_layout(datum: QuiverDatum, logger: Optional[logging.Logger] = None) -> IndexLayout:
    ensure_valid(datum, logger)
    return IndexLayout(
        total_dimension=datum.total_dimension,
        source_intervals=_intervals(datum.sigma.sigma_plus),
        sink_intervals=_intervals(datum.sigma.sigma_minus),
        source_offsets=_offsets(datum.sigma.sigma_plus, datum.beta.beta_plus),
        sink_offsets=_offsets(datum.sigma.sigma_minus, datum.beta.beta_minus),
    )


def build_kraus(datum: QuiverDatum, logger: Optional[logging.Logger] = None) -> KrausSystem:
    """One descriptor per (i, j, a, q, r) with an actual arrow a from v_i to w_j."""
    logger = logger or logging.getLogger("QuiverCapacity")
    layout = build_layout(datum, logger)
    blocks: List[KrausBlock] = []
    for arrow_id, arrow in enumerate(datum.quiver.arrows):
        q_start, q_stop = layout.sink_intervals[arrow.sink]
        r_start, r_stop = layout.source_intervals[arrow.source]
        for q in range(q_start, q_stop):
            for r in range(r_start, r_stop):
                blocks.append(
                    KrausBlock(
                        source=arrow.source,
                        sink=arrow.sink,
                        arrow=arrow_id,
                        q=q,
                        r=r,
                        block=datum.arrow_map(arrow_id),
                    )
                )
    logger.debug(f"Built {len(blocks)} Kraus blocks for N = {layout.total_dimension}")
    return KrausSystem(layout=layout, blocks=blocks)


def _check_square(ks: KrausSystem, matrix: Matrix) -> Matrix:
    size = ks.layout.total_dimension
    array = np.asarray(matrix, dtype=np.float64)
    if array.shape != (size, size):
        raise DimensionMismatch(f"Expected an {size}x{size} matrix, got shape {array.shape}")
    return array


def apply_T(ks: KrausSystem, matrix: Matrix) -> Matrix:
    """T(X) = sum V^T X V; each term maps the (q, q) block of X into the (r, r) block."""
    x = _check_square(ks, matrix)
    result = np.zeros_like(x)
    layout = ks.layout
    for descriptor in ks.blocks:
        rows = layout.sink_slice(descriptor.q)
        cols = layout.source_slice(descriptor.r)
        result[cols, cols] += descriptor.block.T @ x[rows, rows] @ descriptor.block
    return result


def apply_T_star(ks: KrausSystem, matrix: Matrix) -> Matrix:
    """T*(X) = sum V X V^T; block diagonal with respect to the I^- layout."""
    x = _check_square(ks, matrix)
    result = np.zeros_like(x)
    layout = ks.layout
    for descriptor in ks.blocks:
        rows = layout.sink_slice(descriptor.q)
        cols = layout.source_slice(descriptor.r)
        result[rows, rows] += descriptor.block @ x[cols, cols] @ descriptor.block.T
    return result


def block_diagonal_from_tuple(layout: IndexLayout, sigma: Sequence[Matrix]) -> Matrix:
    """N x N block-diagonal X with X_rr = Sigma_i for every r in I^+_i."""
    result = np.zeros((layout.total_dimension, layout.total_dimension))
    for source, (start, stop) in enumerate(layout.source_intervals):
        for r in range(start, stop):
            cols = layout.source_slice(r)
            if result[cols, cols].shape != np.shape(sigma[source]):
                raise DimensionMismatch(f"Sigma_{source + 1} has shape {np.shape(sigma[source])}")
            result[cols, cols] = sigma[source]
    return result


def operator_capacity_at(ks: KrausSystem, matrix: Matrix) -> float:
    """det(T*(X)) / det(X), evaluated through log-determinants."""
    x = _check_square(ks, matrix)
    return float(np.exp(log_det(apply_T_star(ks, x)) - log_det(x)))


class StochasticResiduals(BaseModel):
    """Frobenius residuals of the two geometric-datum equations."""

    model_config = ConfigDict(frozen=True)

    source: List[float]
    sink: List[float]

    @property
    def worst(self) -> float:
        return max(self.source + self.sink)


def ds_residual(datum: QuiverDatum, logger: Optional[logging.Logger] = None) -> StochasticResiduals:
    """
    source_i = || sum_j sigma_minus(w_j) sum_a V(a)^T V(a) - I ||_F
    sink_j   = || sum_i sigma_plus(v_i) sum_a V(a) V(a)^T - I ||_F
    """
    ensure_valid(datum, logger)
    source_sums = [np.zeros((b, b)) for b in datum.beta.beta_plus]
    sink_sums = [np.zeros((b, b)) for b in datum.beta.beta_minus]
    for arrow_id, arrow in enumerate(datum.quiver.arrows):
        matrix = datum.arrow_map(arrow_id)
        source_sums[arrow.source] += datum.sigma.sigma_minus[arrow.sink] * (matrix.T @ matrix)
        sink_sums[arrow.sink] += datum.sigma.sigma_plus[arrow.source] * (matrix @ matrix.T)
    return StochasticResiduals(
        source=[frobenius(total - np.eye(total.shape[0])) for total in source_sums],
        sink=[frobenius(total - np.eye(total.shape[0])) for total in sink_sums],
    )
