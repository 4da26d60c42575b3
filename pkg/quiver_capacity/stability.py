"""
Semi-stability inequality, violating-subspace search, endomorphism dimension and the
multi-start uniqueness probe for gaussian extremizers.

A tuple of subspaces V'(v_i) violates semi-stability when

    sum_i sigma_plus(v_i) dim V'(v_i) > sum_j sigma_minus(w_j) dim( sum_{i, a: v_i -> w_j} V(a) V'(v_i) ).

A violator is an exact certificate of non-semi-stability; not finding one is only evidence.
"""

import asyncio
import itertools
import logging
import math
from enum import Enum
from typing import Callable, Iterator, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import linalg as scipy_linalg

from quiver_capacity.capacity import CapacityReport, SolverStatus, normalize_tuple, solve
from quiver_capacity.errors import DimensionMismatch
from quiver_capacity.linalg import DEFAULT_RANK_TOL, Matrix, MatrixField, SpdTuple, rank
from quiver_capacity.quiver_model import QuiverDatum
from quiver_capacity.settings import SolverOptions

COORDINATE_ENUMERATION_LIMIT = 4096
ORTHONORMAL_TOL = 1e-10
AGREE_TOL = 1e-5
DIFFER_TOL = 1e-3
DESCENT_ROUNDS = 5


class SubspaceTuple(BaseModel):
    """Orthonormal bases of V'(v_i) inside R^{beta(v_i)}, one per source (possibly with 0 columns)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    bases: List[MatrixField]

    @model_validator(mode="after")
    def _check_orthonormal(self) -> "SubspaceTuple":
        for index, basis in enumerate(self.bases):
            rows, cols = basis.shape
            if cols > rows:
                raise ValueError(f"Basis {index} has more columns ({cols}) than its ambient dimension ({rows})")
            if cols and np.max(np.abs(basis.T @ basis - np.eye(cols))) > ORTHONORMAL_TOL:
                raise ValueError(f"Basis {index} does not have orthonormal columns")
        return self

    @classmethod
    def from_spanning(cls, spanning: Sequence[Matrix]) -> "SubspaceTuple":
        """Orthonormalize arbitrary spanning sets (dependent columns are dropped)."""
        bases: List[Matrix] = []
        for vectors in spanning:
            array = np.asarray(vectors, dtype=np.float64)
            if array.shape[1] == 0 or not np.any(array):
                bases.append(np.zeros((array.shape[0], 0)))
            else:
                bases.append(scipy_linalg.orth(array))
        return cls(bases=bases)

    @property
    def dimensions(self) -> List[int]:
        return [basis.shape[1] for basis in self.bases]


class ViolationReport(BaseModel):
    """
    Attributes:
        subspaces (SubspaceTuple): The evaluated tuple.
        lhs (int): sum_i sigma_plus(v_i) dim V'(v_i).
        rhs (int): sum_j sigma_minus(w_j) dim of the image at w_j.
        slack (int): lhs - rhs; positive means the tuple violates semi-stability.
        image_dimensions (List[int]): Image dimension at every sink.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    subspaces: SubspaceTuple
    lhs: int
    rhs: int
    slack: int
    image_dimensions: List[int]


def _image_blocks(datum: QuiverDatum, bases: Sequence[Matrix], sink: int) -> Matrix:
    columns = [datum.arrow_map(a) @ bases[datum.quiver.arrows[a].source] for a in datum.quiver.arrows_into(sink)]
    if not columns:
        return np.zeros((datum.beta.beta_minus[sink], 0))
    return np.hstack(columns)


def _map_scale(datum: QuiverDatum, sink: int) -> float:
    norms = [float(np.linalg.norm(datum.arrow_map(a), 2)) for a in datum.quiver.arrows_into(sink)]
    return max(norms, default=0.0)


def slack_of(datum: QuiverDatum, subspaces: SubspaceTuple, tol: float = DEFAULT_RANK_TOL) -> ViolationReport:
    if len(subspaces.bases) != datum.num_sources:
        raise DimensionMismatch(f"Expected {datum.num_sources} subspaces, got {len(subspaces.bases)}")
    for index, (basis, size) in enumerate(zip(subspaces.bases, datum.beta.beta_plus)):
        if basis.shape[0] != size:
            raise DimensionMismatch(f"Subspace {index + 1} lives in R^{basis.shape[0]}, expected R^{size}")

    lhs = sum(weight * dim for weight, dim in zip(datum.sigma.sigma_plus, subspaces.dimensions))
    image_dimensions = [
        rank(_image_blocks(datum, subspaces.bases, sink), tol, scale=_map_scale(datum, sink))
        for sink in range(datum.num_sinks)
    ]
    rhs = sum(weight * dim for weight, dim in zip(datum.sigma.sigma_minus, image_dimensions))
    return ViolationReport(
        subspaces=subspaces, lhs=lhs, rhs=rhs, slack=lhs - rhs, image_dimensions=image_dimensions
    )


def _outgoing_stack(datum: QuiverDatum, source: int, sinks: Optional[Sequence[int]] = None) -> Matrix:
    blocks = [
        datum.arrow_map(a)
        for a in datum.quiver.arrows_from(source)
        if sinks is None or datum.quiver.arrows[a].sink in sinks
    ]
    if not blocks:
        return np.zeros((0, datum.beta.beta_plus[source]))
    return np.vstack(blocks)


def _kernel(matrix: Matrix, tol: float) -> Matrix:
    if matrix.shape[0] == 0 or not np.any(matrix):
        return np.eye(matrix.shape[1])
    return scipy_linalg.null_space(matrix, rcond=tol)


def _structured_candidates(datum: QuiverDatum, tol: float) -> Iterator[List[Matrix]]:
    k, m = datum.num_sources, datum.num_sinks
    zero = [np.zeros((size, 0)) for size in datum.beta.beta_plus]
    full = [np.eye(size) for size in datum.beta.beta_plus]

    # common kernels of all maps leaving one source
    for source in range(k):
        bases = list(zero)
        bases[source] = _kernel(_outgoing_stack(datum, source), tol)
        yield bases

    # preimages: everything that avoids the sinks outside J
    sink_subsets: Iterator[Sequence[int]]
    if m <= 10:
        sink_subsets = itertools.chain.from_iterable(itertools.combinations(range(m), size) for size in range(m + 1))
    else:
        sink_subsets = iter([tuple(j for j in range(m) if j != excluded) for excluded in range(m)])
    for kept in sink_subsets:
        avoided = [j for j in range(m) if j not in kept]
        yield [_kernel(_outgoing_stack(datum, source, avoided), tol) for source in range(k)]

    # weakest right singular directions of each source's stacked map
    for source in range(k):
        stacked = _outgoing_stack(datum, source)
        size = datum.beta.beta_plus[source]
        if stacked.shape[0] == 0:
            directions = np.eye(size)
        else:
            _, _, vt = np.linalg.svd(stacked, full_matrices=True)
            directions = vt[::-1].T
        for count in range(1, size + 1):
            for background in (zero, full):
                bases = list(background)
                bases[source] = directions[:, :count]
                yield bases


def _coordinate_candidates(datum: QuiverDatum) -> Iterator[List[Matrix]]:
    if math.prod(2**size for size in datum.beta.beta_plus) > COORDINATE_ENUMERATION_LIMIT:
        return
    per_source = [
        [np.eye(size)[:, list(subset)] for count in range(size + 1) for subset in itertools.combinations(range(size), count)]
        for size in datum.beta.beta_plus
    ]
    for combination in itertools.product(*per_source):
        yield list(combination)


def _random_orthonormal(rng: np.random.Generator, size: int, count: int) -> Matrix:
    if count == 0:
        return np.zeros((size, 0))
    q, _ = np.linalg.qr(rng.standard_normal((size, count)))
    return q


def _descend(datum: QuiverDatum, bases: List[Matrix], tol: float) -> List[Matrix]:
    """Shrink every sink image by one dimension and re-fit the sources to the shrunken images."""
    projectors: List[Matrix] = []
    for sink in range(datum.num_sinks):
        images = _image_blocks(datum, bases, sink)
        size = datum.beta.beta_minus[sink]
        image_dim = rank(images, tol, scale=_map_scale(datum, sink))
        if image_dim == 0:
            projectors.append(np.eye(size))
            continue
        left, _, _ = np.linalg.svd(images, full_matrices=True)
        kept = left[:, : image_dim - 1]
        projectors.append(np.eye(size) - kept @ kept.T)

    refit: List[Matrix] = []
    for source, basis in enumerate(bases):
        count = basis.shape[1]
        size = datum.beta.beta_plus[source]
        gram = np.zeros((size, size))
        for a in datum.quiver.arrows_from(source):
            arrow = datum.quiver.arrows[a]
            matrix = datum.arrow_map(a)
            gram += datum.sigma.sigma_minus[arrow.sink] * (matrix.T @ projectors[arrow.sink] @ matrix)
        _, eigenvectors = scipy_linalg.eigh(0.5 * (gram + gram.T))
        refit.append(eigenvectors[:, :count])
    return refit


def find_violator(
    datum: QuiverDatum,
    budget: int = 10000,
    seed: int = 0,
    tol: float = DEFAULT_RANK_TOL,
    logger: Optional[logging.Logger] = None,
) -> Optional[ViolationReport]:
    """
    Search for a subspace tuple with positive slack using at most `budget` evaluations: structured
    candidates (kernels, preimages, weak singular directions), all coordinate subspaces when there
    are few, then random tuples refined by alternating descent.
    """
    logger = logger or logging.getLogger("QuiverCapacity")
    remaining = budget

    def evaluate(bases: List[Matrix]) -> Optional[ViolationReport]:
        nonlocal remaining
        remaining -= 1
        report = slack_of(datum, SubspaceTuple.from_spanning(bases), tol)
        return report if report.slack > 0 else None

    searches: List[Callable[[], Iterator[List[Matrix]]]] = [
        lambda: _structured_candidates(datum, tol),
        lambda: _coordinate_candidates(datum),
    ]
    for search in searches:
        for bases in search():
            if remaining <= 0:
                logger.debug("Violator search budget exhausted")
                return None
            found = evaluate(bases)
            if found is not None:
                logger.info(f"Found semi-stability violator with slack {found.slack}")
                return found

    rng = np.random.default_rng(seed)
    while remaining > 0:
        profile = [int(rng.integers(0, size + 1)) for size in datum.beta.beta_plus]
        if not any(profile):
            continue
        bases = [_random_orthonormal(rng, size, count) for size, count in zip(datum.beta.beta_plus, profile)]
        for _ in range(DESCENT_ROUNDS):
            if remaining <= 0:
                break
            found = evaluate(bases)
            if found is not None:
                logger.info(f"Found semi-stability violator with slack {found.slack} by descent")
                return found
            bases = _descend(datum, bases, tol)
    logger.debug(f"No violator found within {budget} evaluations")
    return None


def endomorphism_dimension(datum: QuiverDatum, tol: float = DEFAULT_RANK_TOL) -> int:
    """dim End_Q(V): tuples phi with phi(w_j) V(a) = V(a) phi(v_i) for every arrow a: v_i -> w_j."""
    source_sizes = [size * size for size in datum.beta.beta_plus]
    sink_sizes = [size * size for size in datum.beta.beta_minus]
    source_offsets = np.concatenate([[0], np.cumsum(source_sizes)]).astype(int)
    sink_offsets = (source_offsets[-1] + np.concatenate([[0], np.cumsum(sink_sizes)])).astype(int)
    unknowns = int(sink_offsets[-1])

    rows: List[Matrix] = []
    for arrow_id, arrow in enumerate(datum.quiver.arrows):
        matrix = datum.arrow_map(arrow_id)
        sink_dim, source_dim = matrix.shape
        block = np.zeros((sink_dim * source_dim, unknowns))
        # row-major vec: vec(phi_w V) = (I kron V^T) vec(phi_w), vec(V phi_v) = (V kron I) vec(phi_v)
        sink_start = sink_offsets[arrow.sink]
        block[:, sink_start : sink_start + sink_dim * sink_dim] = np.kron(np.eye(sink_dim), matrix.T)
        source_start = source_offsets[arrow.source]
        block[:, source_start : source_start + source_dim * source_dim] -= np.kron(matrix, np.eye(source_dim))
        rows.append(block)

    if not rows:
        return unknowns
    return unknowns - rank(np.vstack(rows), tol)


class UniquenessVerdict(str, Enum):
    UNIQUE = "Unique"
    NON_UNIQUE = "NonUnique"
    INCONCLUSIVE = "Inconclusive"


class UniquenessReport(BaseModel):
    """
    Attributes:
        verdict (UniquenessVerdict): Unique, NonUnique or Inconclusive.
        restarts (int): Number of solves run.
        converged (int): Number of solves that reached a fixed point.
        infeasible (int): Number of solves that reported the datum infeasible.
        max_deviation (float): Largest relative entrywise gap between two normalized extremizers.
        witness (Optional[List[List[Matrix]]]): Two normalized extremizers that differ, when NonUnique.
        witness_residuals (Optional[List[float]]): Stationarity residuals of the witness pair.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    verdict: UniquenessVerdict
    restarts: int
    converged: int
    infeasible: int
    max_deviation: float
    witness: Optional[List[List[MatrixField]]] = None
    witness_residuals: Optional[List[float]] = None


def random_spd_tuple(datum: QuiverDatum, rng: np.random.Generator) -> SpdTuple:
    """W W^T + 0.1 I per source."""
    tuple_: SpdTuple = []
    for size in datum.beta.beta_plus:
        factor = rng.standard_normal((size, size))
        tuple_.append(factor @ factor.T + 0.1 * np.eye(size))
    return tuple_


def _restart_starts(datum: QuiverDatum, restarts: int, seed: int) -> List[SpdTuple]:
    rng = np.random.default_rng(seed)
    return [random_spd_tuple(datum, rng) for _ in range(restarts)]


def _deviation(datum: QuiverDatum, first: Sequence[Matrix], second: Sequence[Matrix]) -> float:
    left = normalize_tuple(datum, first)
    right = normalize_tuple(datum, second)
    worst = 0.0
    for a, b in zip(left, right):
        reference = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))))
        worst = max(worst, float(np.max(np.abs(a - b))) / reference)
    return worst


def _classify(datum: QuiverDatum, reports: Sequence[CapacityReport], opts: SolverOptions) -> UniquenessReport:
    converged = [
        report
        for report in reports
        if report.status == SolverStatus.CONVERGED and report.extremizer is not None and report.final_residual <= opts.tol
    ]
    infeasible = sum(1 for report in reports if report.status == SolverStatus.INFEASIBLE)

    max_deviation = 0.0
    witness: Optional[List[List[Matrix]]] = None
    witness_residuals: Optional[List[float]] = None
    for first, second in itertools.combinations(converged, 2):
        assert first.extremizer is not None and second.extremizer is not None
        deviation = _deviation(datum, first.extremizer, second.extremizer)
        if deviation > max_deviation:
            max_deviation = deviation
        if deviation > DIFFER_TOL and witness is None:
            witness = [normalize_tuple(datum, first.extremizer), normalize_tuple(datum, second.extremizer)]
            witness_residuals = [first.final_residual, second.final_residual]

    if witness is not None:
        verdict = UniquenessVerdict.NON_UNIQUE
    elif len(converged) == len(reports) and len(converged) >= 2 and max_deviation <= AGREE_TOL:
        verdict = UniquenessVerdict.UNIQUE
    else:
        verdict = UniquenessVerdict.INCONCLUSIVE

    return UniquenessReport(
        verdict=verdict,
        restarts=len(reports),
        converged=len(converged),
        infeasible=infeasible,
        max_deviation=max_deviation,
        witness=witness,
        witness_residuals=witness_residuals,
    )


def uniqueness_probe(
    datum: QuiverDatum,
    restarts: int = 20,
    opts: Optional[SolverOptions] = None,
    logger: Optional[logging.Logger] = None,
) -> UniquenessReport:
    """Solve from `restarts` random SPD starts and compare the det-normalized extremizers."""
    logger = logger or logging.getLogger("QuiverCapacity")
    opts = opts or SolverOptions()
    starts = _restart_starts(datum, restarts, opts.seed)
    reports = [solve(datum, opts, initial=start, logger=logger) for start in starts]
    result = _classify(datum, reports, opts)
    logger.info(f"Uniqueness probe: {result.verdict.value} ({result.converged}/{restarts} converged)")
    return result


async def uniqueness_probe_async(
    datum: QuiverDatum,
    restarts: int = 20,
    opts: Optional[SolverOptions] = None,
    max_concurrency: int = 0,
    logger: Optional[logging.Logger] = None,
) -> UniquenessReport:
    """
    Concurrent form of uniqueness_probe. Restart solves run in worker threads, at most
    `max_concurrency` at a time (0 means no limit); results are gathered in start order.
    """
    logger = logger or logging.getLogger("QuiverCapacity")
    opts = opts or SolverOptions()
    starts = _restart_starts(datum, restarts, opts.seed)

    semaphore: Optional[asyncio.Semaphore] = None
    if max_concurrency > 0:
        semaphore = asyncio.Semaphore(max_concurrency)
        logger.debug(f"Max concurrency set to {max_concurrency}")

    async def run_restart(start: SpdTuple, index: int) -> CapacityReport:
        logger.debug(f"Starting restart {index}")
        if semaphore is not None:
            async with semaphore:
                return await asyncio.to_thread(solve, datum, opts, start, logger)
        return await asyncio.to_thread(solve, datum, opts, start, logger)

    reports = await asyncio.gather(*(run_restart(start, index) for index, start in enumerate(starts)))
    result = _classify(datum, reports, opts)
    logger.info(f"Uniqueness probe: {result.verdict.value} ({result.converged}/{restarts} converged)")
    return result
