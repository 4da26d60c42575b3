"""
Data model for bipartite quivers, weights, representations and AJN data.

Sources are v_1..v_k, sinks are w_1..w_m, and every arrow goes from a source to a
sink. Indices are 0-based in code; the datum file format (see datum_io) is 1-based.
"""

import logging
import math
from typing import List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from quiver_capacity.errors import DimensionMismatch, Imbalance, InvalidAjn, QuiverCapacityError
from quiver_capacity.linalg import DEFAULT_RANK_TOL, Matrix, MatrixField, rank


class Arrow(BaseModel):
    """An arrow from source `source` to sink `sink`."""

    model_config = ConfigDict(frozen=True)

    source: int = Field(ge=0)
    sink: int = Field(ge=0)


class BipartiteQuiver(BaseModel):
    """
    Bipartite quiver with `num_sources` sources and `num_sinks` sinks.

    Attributes:
        num_sources (int): k, the number of source vertices.
        num_sinks (int): m, the number of sink vertices.
        arrows (List[Arrow]): Arrows; the arrow id is the position in this list.
            Several arrows between the same pair are allowed.
    """

    model_config = ConfigDict(frozen=True)

    num_sources: int = Field(gt=0)
    num_sinks: int = Field(gt=0)
    arrows: List[Arrow] = []

    @model_validator(mode="after")
    def _check_arrow_indices(self) -> "BipartiteQuiver":
        for arrow_id, arrow in enumerate(self.arrows):
            if arrow.source >= self.num_sources or arrow.sink >= self.num_sinks:
                raise ValueError(
                    f"Arrow {arrow_id} ({arrow.source} -> {arrow.sink}) references a vertex outside "
                    f"{self.num_sources} sources / {self.num_sinks} sinks"
                )
        return self

    def arrows_between(self, source: int, sink: int) -> List[int]:
        return [a for a, arrow in enumerate(self.arrows) if arrow.source == source and arrow.sink == sink]

    def arrows_from(self, source: int) -> List[int]:
        return [a for a, arrow in enumerate(self.arrows) if arrow.source == source]

    def arrows_into(self, sink: int) -> List[int]:
        return [a for a, arrow in enumerate(self.arrows) if arrow.sink == sink]

    def is_connected(self) -> bool:
        """Connectivity of the underlying undirected graph (sources first, then sinks)."""
        vertex_count = self.num_sources + self.num_sinks
        rows = [arrow.source for arrow in self.arrows]
        cols = [self.num_sources + arrow.sink for arrow in self.arrows]
        adjacency = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(vertex_count, vertex_count))
        component_count, _ = connected_components(adjacency, directed=False)
        return component_count == 1


class Weight(BaseModel):
    """Integral weight: sigma_plus(v_i) > 0 on sources, sigma_minus(w_j) = -sigma(w_j) > 0 on sinks."""

    model_config = ConfigDict(frozen=True)

    sigma_plus: List[int]
    sigma_minus: List[int]


class DimensionVector(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta_plus: List[int]
    beta_minus: List[int]


class QuiverRepresentation(BaseModel):
    """Linear maps V(a) of shape beta(w_j) x beta(v_i), indexed by arrow id."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    maps: List[MatrixField] = []

    @property
    def is_zero(self) -> bool:
        return not any(np.any(matrix != 0.0) for matrix in self.maps)


class QuiverDatum(BaseModel):
    """A quiver datum (V, sigma): quiver, dimension vector, weight and representation."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    quiver: BipartiteQuiver
    beta: DimensionVector
    sigma: Weight
    rep: QuiverRepresentation

    @property
    def num_sources(self) -> int:
        return self.quiver.num_sources

    @property
    def num_sinks(self) -> int:
        return self.quiver.num_sinks

    @property
    def total_dimension(self) -> int:
        """N = sum_i sigma_plus(v_i) beta(v_i)."""
        return sum(s * b for s, b in zip(self.sigma.sigma_plus, self.beta.beta_plus))

    @property
    def sink_total_dimension(self) -> int:
        return sum(s * b for s, b in zip(self.sigma.sigma_minus, self.beta.beta_minus))

    @property
    def sink_weight_total(self) -> int:
        """M = sum_j sigma_minus(w_j)."""
        return sum(self.sigma.sigma_minus)

    @property
    def source_weight_total(self) -> int:
        """M' = sum_i sigma_plus(v_i)."""
        return sum(self.sigma.sigma_plus)

    def arrow_map(self, arrow_id: int) -> Matrix:
        return self.rep.maps[arrow_id]

    def with_maps(self, maps: Sequence[Matrix]) -> "QuiverDatum":
        """Same quiver, dimension vector and weight with new arrow maps."""
        return QuiverDatum(
            quiver=self.quiver,
            beta=self.beta,
            sigma=self.sigma,
            rep=QuiverRepresentation(maps=list(maps)),
        )


class ValidationFinding(BaseModel):
    model_config = ConfigDict(frozen=True)

    severity: Literal["error", "warning"]
    code: str
    message: str


def validate(datum: QuiverDatum) -> List[ValidationFinding]:
    """
    Collect every violated invariant of a quiver datum. An empty list means the datum is valid.

    Errors: length, sign, dimension, arrow_count, shape, imbalance.
    Warnings: zero_representation, disconnected.
    """
    findings: List[ValidationFinding] = []
    k = datum.num_sources
    m = datum.num_sinks

    def error(code: str, message: str) -> None:
        findings.append(ValidationFinding(severity="error", code=code, message=message))

    if len(datum.sigma.sigma_plus) != k or len(datum.beta.beta_plus) != k:
        error("length", f"Expected {k} source weights and dimensions")
    if len(datum.sigma.sigma_minus) != m or len(datum.beta.beta_minus) != m:
        error("length", f"Expected {m} sink weights and dimensions")
    if any(value <= 0 for value in datum.sigma.sigma_plus + datum.sigma.sigma_minus):
        error("sign", "Weight must be positive on sources and negative on sinks (all sigma_plus/minus > 0)")
    if any(value <= 0 for value in datum.beta.beta_plus + datum.beta.beta_minus):
        error("dimension", "Dimension vector entries must be positive")
    if any(f.code == "length" for f in findings):
        return findings

    if len(datum.rep.maps) != len(datum.quiver.arrows):
        error("arrow_count", f"{len(datum.quiver.arrows)} arrows but {len(datum.rep.maps)} matrices")
    else:
        for arrow_id, arrow in enumerate(datum.quiver.arrows):
            expected = (datum.beta.beta_minus[arrow.sink], datum.beta.beta_plus[arrow.source])
            if datum.rep.maps[arrow_id].shape != expected:
                error(
                    "shape",
                    f"Arrow {arrow_id} ({arrow.source} -> {arrow.sink}) has shape "
                    f"{datum.rep.maps[arrow_id].shape}, expected {expected}",
                )

    if datum.total_dimension != datum.sink_total_dimension:
        error(
            "imbalance",
            f"sigma . beta != 0: sum sigma_plus*beta_plus = {datum.total_dimension} but "
            f"sum sigma_minus*beta_minus = {datum.sink_total_dimension}",
        )

    if datum.rep.is_zero:
        findings.append(
            ValidationFinding(severity="warning", code="zero_representation", message="Representation is zero")
        )
    if not datum.quiver.is_connected():
        findings.append(ValidationFinding(severity="warning", code="disconnected", message="Quiver is not connected"))
    return findings


def ensure_valid(datum: QuiverDatum, logger: Optional[logging.Logger] = None) -> None:
    """Raise on the first validation error; warnings are logged only."""
    logger = logger or logging.getLogger("QuiverCapacity")
    for finding in validate(datum):
        if finding.severity == "warning":
            logger.debug(f"Datum warning ({finding.code}): {finding.message}")
            continue
        logger.error(f"Invalid quiver datum ({finding.code}): {finding.message}")
        if finding.code == "imbalance":
            raise Imbalance(finding.message)
        if finding.code in ("length", "arrow_count", "shape"):
            raise DimensionMismatch(finding.message)
        raise QuiverCapacityError(finding.message)


class AjnDatum(BaseModel):
    """
    AJN datum (A, c, p) of dimension vector (d, n).

    Attributes:
        d (List[int]): Source dimensions d_1..d_k.
        n (List[int]): Sink dimensions n_1..n_m.
        c (List[int]): Source exponents c_1..c_k.
        p (List[int]): Sink exponents p_1..p_m.
        maps (List[List[Matrix]]): maps[i][j] = A_ij of shape n_j x d_i (alias "A").
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True, populate_by_name=True)

    d: List[int]
    n: List[int]
    c: List[int]
    p: List[int]
    maps: List[List[MatrixField]] = Field(alias="A")

    @model_validator(mode="after")
    def _check_shapes(self) -> "AjnDatum":
        k, m = len(self.d), len(self.n)
        if k == 0 or m == 0:
            raise ValueError("AJN datum needs at least one source and one sink")
        if len(self.c) != k or len(self.p) != m:
            raise ValueError(f"Expected {k} exponents c and {m} exponents p")
        if any(value <= 0 for value in self.d + self.n + self.c + self.p):
            raise ValueError("Dimensions and exponents must be positive integers")
        if len(self.maps) != k or any(len(row) != m for row in self.maps):
            raise ValueError(f"A must be a {k} x {m} nested list of matrices")
        for i in range(k):
            for j in range(m):
                if self.maps[i][j].shape != (self.n[j], self.d[i]):
                    raise ValueError(
                        f"A[{i}][{j}] has shape {self.maps[i][j].shape}, expected {(self.n[j], self.d[i])}"
                    )
        return self

    @property
    def num_sources(self) -> int:
        return len(self.d)

    @property
    def num_sinks(self) -> int:
        return len(self.n)

    def is_balanced(self) -> bool:
        return sum(c * d for c, d in zip(self.c, self.d)) == sum(p * n for p, n in zip(self.p, self.n))

    def stacked_map(self, sink: int) -> Matrix:
        """A_j = [A_1j ... A_kj] of shape n_j x sum_i d_i."""
        return np.hstack([self.maps[i][sink] for i in range(self.num_sources)])


def check_surjective(ajn: AjnDatum, tol: float = DEFAULT_RANK_TOL) -> List[bool]:
    return [rank(ajn.stacked_map(j), tol) == ajn.n[j] for j in range(ajn.num_sinks)]


def from_ajn(ajn: AjnDatum, logger: Optional[logging.Logger] = None) -> QuiverDatum:
    """
    Build the quiver datum (V_{A,c}, sigma_{c,p}): complete bipartite quiver with one arrow
    per pair (i, j), V(a_ij) = A_ij / sqrt(c_i), sigma_plus = c, sigma_minus = p.

    Raises:
        InvalidAjn: If the datum is unbalanced or some stacked map A_j is not surjective.
    """
    logger = logger or logging.getLogger("QuiverCapacity")
    if not ajn.is_balanced():
        message = (
            f"AJN datum is unbalanced: sum c_i d_i = {sum(c * d for c, d in zip(ajn.c, ajn.d))} "
            f"but sum p_j n_j = {sum(p * n for p, n in zip(ajn.p, ajn.n))}"
        )
        logger.error(message)
        raise InvalidAjn(message)
    surjective = check_surjective(ajn)
    if not all(surjective):
        failing = [j + 1 for j, ok in enumerate(surjective) if not ok]
        message = f"Stacked maps A_j are not surjective for sinks {failing}"
        logger.error(message)
        raise InvalidAjn(message)

    arrows: List[Arrow] = []
    maps: List[Matrix] = []
    for i in range(ajn.num_sources):
        scale = 1.0 / math.sqrt(ajn.c[i])
        for j in range(ajn.num_sinks):
            arrows.append(Arrow(source=i, sink=j))
            maps.append(scale * ajn.maps[i][j])

    datum = QuiverDatum(
        quiver=BipartiteQuiver(num_sources=ajn.num_sources, num_sinks=ajn.num_sinks, arrows=arrows),
        beta=DimensionVector(beta_plus=list(ajn.d), beta_minus=list(ajn.n)),
        sigma=Weight(sigma_plus=list(ajn.c), sigma_minus=list(ajn.p)),
        rep=QuiverRepresentation(maps=maps),
    )
    logger.debug(f"Built quiver datum from AJN datum with N = {datum.total_dimension}")
    return datum


def to_ajn(datum: QuiverDatum) -> AjnDatum:
    """
    Inverse of from_ajn for data with at most one arrow per pair: A_ij = sqrt(sigma_plus(v_i)) V(a_ij).
    Pairs without an arrow get zero blocks.
    """
    k, m = datum.num_sources, datum.num_sinks
    maps: List[List[Matrix]] = []
    for i in range(k):
        row: List[Matrix] = []
        scale = math.sqrt(datum.sigma.sigma_plus[i])
        for j in range(m):
            arrow_ids = datum.quiver.arrows_between(i, j)
            if len(arrow_ids) > 1:
                raise InvalidAjn(f"Source {i + 1} and sink {j + 1} are joined by {len(arrow_ids)} arrows")
            if arrow_ids:
                row.append(scale * datum.arrow_map(arrow_ids[0]))
            else:
                row.append(np.zeros((datum.beta.beta_minus[j], datum.beta.beta_plus[i])))
        maps.append(row)
    return AjnDatum(
        d=list(datum.beta.beta_plus),
        n=list(datum.beta.beta_minus),
        c=list(datum.sigma.sigma_plus),
        p=list(datum.sigma.sigma_minus),
        A=maps,
    )


def restrict(
    datum: QuiverDatum,
    source_coordinates: Sequence[Sequence[int]],
    sink_coordinates: Sequence[Sequence[int]],
) -> Optional[QuiverDatum]:
    """
    Sub-datum on the chosen coordinates of each vertex space: V'(a) = V(a)[sink_coords, source_coords].

    Vertices left with no coordinates are dropped together with their arrows. Returns None when
    every vertex is dropped.
    """
    kept_sources = [i for i in range(datum.num_sources) if len(source_coordinates[i]) > 0]
    kept_sinks = [j for j in range(datum.num_sinks) if len(sink_coordinates[j]) > 0]
    if not kept_sources or not kept_sinks:
        return None

    source_index = {old: new for new, old in enumerate(kept_sources)}
    sink_index = {old: new for new, old in enumerate(kept_sinks)}
    arrows: List[Arrow] = []
    maps: List[Matrix] = []
    for arrow_id, arrow in enumerate(datum.quiver.arrows):
        if arrow.source in source_index and arrow.sink in sink_index:
            arrows.append(Arrow(source=source_index[arrow.source], sink=sink_index[arrow.sink]))
            block = datum.arrow_map(arrow_id)[np.ix_(sink_coordinates[arrow.sink], source_coordinates[arrow.source])]
            maps.append(block)

    return QuiverDatum(
        quiver=BipartiteQuiver(num_sources=len(kept_sources), num_sinks=len(kept_sinks), arrows=arrows),
        beta=DimensionVector(
            beta_plus=[len(source_coordinates[i]) for i in kept_sources],
            beta_minus=[len(sink_coordinates[j]) for j in kept_sinks],
        ),
        sigma=Weight(
            sigma_plus=[datum.sigma.sigma_plus[i] for i in kept_sources],
            sigma_minus=[datum.sigma.sigma_minus[j] for j in kept_sinks],
        ),
        rep=QuiverRepresentation(maps=maps),
    )
