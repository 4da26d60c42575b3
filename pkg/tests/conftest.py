import logging
import math
from typing import Callable, Iterator, List

import numpy as np
import pytest
from scipy.stats import ortho_group

from quiver_capacity.quiver_model import (
    AjnDatum,
    Arrow,
    BipartiteQuiver,
    DimensionVector,
    QuiverDatum,
    QuiverRepresentation,
    Weight,
    from_ajn,
)
from quiver_capacity.settings import SolverOptions


def make_ajn(d, n, c, p, maps) -> AjnDatum:
    return AjnDatum(d=d, n=n, c=c, p=p, A=maps)


@pytest.fixture(autouse=True)
def reset_logger() -> Iterator[None]:
    """Detach handlers that init_logger bound to per-test directories and captured streams."""
    yield
    logger = logging.getLogger("QuiverCapacity")
    for handler in list(logger.handlers):
        handler.close()
    logger.handlers.clear()
    logger.propagate = True


@pytest.fixture
def opts() -> SolverOptions:
    return SolverOptions(tol=1e-8, max_iter=10000, cap_floor=1e-12)


@pytest.fixture
def epi_ajn() -> AjnDatum:
    """Entropy power inequality: k=2, m=1, scalar maps, c=(1,1), p=(2); cap = 4."""
    return make_ajn([1, 1], [1], [1, 1], [2], [[[[1.0]]], [[[1.0]]]])


@pytest.fixture
def epi_datum(epi_ajn: AjnDatum) -> QuiverDatum:
    return from_ajn(epi_ajn)


@pytest.fixture
def orthogonal_ajn() -> AjnDatum:
    """Two coordinate axes into R^2; geometric with cap = 1."""
    return make_ajn([1, 1], [2], [1, 1], [1], [[[[1.0], [0.0]]], [[[0.0], [1.0]]]])


@pytest.fixture
def orthogonal_datum(orthogonal_ajn: AjnDatum) -> QuiverDatum:
    return from_ajn(orthogonal_ajn)


@pytest.fixture
def infeasible_ajn() -> AjnDatum:
    """A = [1 0], c = (1), p = (2): span(e2) violates semi-stability with slack 1."""
    return make_ajn([2], [1], [1], [2], [[[[1.0, 0.0]]]])


@pytest.fixture
def infeasible_datum(infeasible_ajn: AjnDatum) -> QuiverDatum:
    return from_ajn(infeasible_ajn)


def frame_ajn_datum() -> AjnDatum:
    """Three unit directions at 120 degrees into R^2 scaled to a geometric datum."""
    scale = math.sqrt(2.0 / 3.0)
    maps = []
    for index in range(3):
        angle = 2.0 * math.pi * index / 3.0
        maps.append([[[scale * math.cos(angle)], [scale * math.sin(angle)]]])
    return make_ajn([1, 1, 1], [2], [2, 2, 2], [3], maps)


@pytest.fixture
def frame_ajn() -> AjnDatum:
    return frame_ajn_datum()


@pytest.fixture
def frame_datum(frame_ajn: AjnDatum) -> QuiverDatum:
    return from_ajn(frame_ajn)


@pytest.fixture
def direct_sum_ajn() -> AjnDatum:
    """Two copies of the identity into R^2: polystable but not Schur, extremizers (S, S) for every S."""
    return make_ajn([2, 2], [2], [1, 1], [2], [[np.eye(2)], [np.eye(2)]])


@pytest.fixture
def direct_sum_datum(direct_sum_ajn: AjnDatum) -> QuiverDatum:
    return from_ajn(direct_sum_ajn)


def triangular_ajn_datum(first_offset: float, second_offset: float) -> AjnDatum:
    """A_i1 = [[1, x_i], [0, 1]]: upper triangular with EPI diagonal blocks; cap = 16."""
    return make_ajn(
        [2, 2],
        [2],
        [1, 1],
        [2],
        [[[[1.0, first_offset], [0.0, 1.0]]], [[[1.0, second_offset], [0.0, 1.0]]]],
    )


@pytest.fixture
def triangular_factory() -> Callable[[float, float], AjnDatum]:
    return triangular_ajn_datum


def random_geometric_ajn(source_dims: List[int], seed: int) -> AjnDatum:
    """Column blocks of a random orthogonal matrix, c = 1, p = 1: geometric with cap = 1."""
    size = sum(source_dims)
    q = ortho_group.rvs(size, random_state=seed)
    maps = []
    start = 0
    for dim in source_dims:
        maps.append([q[:, start : start + dim]])
        start += dim
    return make_ajn(source_dims, [size], [1] * len(source_dims), [1], maps)


@pytest.fixture
def geometric_ajns(orthogonal_ajn: AjnDatum, frame_ajn: AjnDatum) -> List[AjnDatum]:
    return [
        orthogonal_ajn,
        frame_ajn,
        random_geometric_ajn([1, 2], seed=1),
        random_geometric_ajn([1, 1, 2], seed=2),
        random_geometric_ajn([2, 2], seed=3),
    ]


def random_scalar_ajns(count: int, seed: int = 0) -> List[AjnDatum]:
    """All-scalar feasible data: positive maps, balanced exponents in 1..3."""
    rng = np.random.default_rng(seed)
    found: List[AjnDatum] = []
    while len(found) < count:
        k = int(rng.integers(2, 4))
        m = int(rng.integers(1, 3))
        c = [int(value) for value in rng.integers(1, 4, size=k)]
        p = [int(value) for value in rng.integers(1, 4, size=m)]
        if sum(c) != sum(p):
            continue
        maps = [[[[float(rng.uniform(0.5, 2.0))]] for _ in range(m)] for _ in range(k)]
        found.append(make_ajn([1] * k, [1] * m, c, p, maps))
    return found


@pytest.fixture
def scalar_ajns() -> List[AjnDatum]:
    return random_scalar_ajns(20)


MULTI_ARROW_LAYOUT = [
    Arrow(source=0, sink=0),
    Arrow(source=0, sink=0),
    Arrow(source=1, sink=0),
    Arrow(source=0, sink=1),
    Arrow(source=1, sink=1),
]


@pytest.fixture
def multi_arrow_datum() -> QuiverDatum:
    """
    Two sources, two sinks, a double arrow v_1 -> w_1; N = 5.

    sigma-stable: with a_i = dim V'(v_i) and b_j the image dimensions, every proper nonzero
    subspace tuple has 2 a_1 + a_2 < 3 b_1 + b_2. The two maps into w_1 have no common kernel
    and v_1 -> w_2 is invertible, so b_1 = 1 and b_2 >= max(a_1, a_2).
    """
    maps = [
        np.array([[1.0, 0.3]]),
        np.array([[-0.2, 1.0]]),
        np.array([[0.8]]),
        np.array([[1.0, 0.4], [-0.3, 0.9]]),
        np.array([[0.5], [1.0]]),
    ]
    return QuiverDatum(
        quiver=BipartiteQuiver(num_sources=2, num_sinks=2, arrows=MULTI_ARROW_LAYOUT),
        beta=DimensionVector(beta_plus=[2, 1], beta_minus=[1, 2]),
        sigma=Weight(sigma_plus=[2, 1], sigma_minus=[3, 1]),
        rep=QuiverRepresentation(maps=maps),
    )


@pytest.fixture
def semistable_multi_arrow_datum() -> QuiverDatum:
    """
    Same quiver with weights (1, 2) / (2, 1): semi-stable but not polystable. The preimage under
    v_1 -> w_2 of the image of v_2 -> w_2, together with all of v_2, is a tight subrepresentation
    (1 + 2 = 2 + 1), so no extremizer exists.
    """
    rng = np.random.default_rng(7)
    shapes = [(1, 2), (1, 2), (1, 1), (2, 2), (2, 1)]
    return QuiverDatum(
        quiver=BipartiteQuiver(num_sources=2, num_sinks=2, arrows=MULTI_ARROW_LAYOUT),
        beta=DimensionVector(beta_plus=[2, 1], beta_minus=[1, 2]),
        sigma=Weight(sigma_plus=[1, 2], sigma_minus=[2, 1]),
        rep=QuiverRepresentation(maps=[rng.standard_normal(shape) for shape in shapes]),
    )


def random_spd(rng: np.random.Generator, size: int) -> np.ndarray:
    factor = rng.standard_normal((size, size))
    return factor @ factor.T + 0.1 * np.eye(size)


@pytest.fixture
def spd_factory() -> Callable[[np.random.Generator, int], np.ndarray]:
    return random_spd
