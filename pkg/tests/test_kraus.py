import numpy as np
import pytest

from quiver_capacity.capacity import cap_at
from quiver_capacity.errors import DimensionMismatch
from quiver_capacity.kraus import (
    apply_T,
    apply_T_star,
    block_diagonal_from_tuple,
    build_kraus,
    build_layout,
    ds_residual,
    operator_capacity_at,
)
from quiver_capacity.quiver_model import from_ajn
from quiver_capacity.scaling import is_geometric


def dense_kraus_operators(ks):
    """Materialize every Kraus operator as an N x N matrix."""
    layout = ks.layout
    size = layout.total_dimension
    operators = []
    for descriptor in ks.blocks:
        dense = np.zeros((size, size))
        dense[layout.sink_slice(descriptor.q), layout.source_slice(descriptor.r)] = descriptor.block
        operators.append(dense)
    return operators


def random_symmetric(rng, size):
    matrix = rng.standard_normal((size, size))
    return 0.5 * (matrix + matrix.T)


def test_layout_of_epi(epi_datum):
    layout = build_layout(epi_datum)
    assert layout.total_dimension == 2
    assert layout.source_intervals == [(0, 1), (1, 2)]
    assert layout.sink_intervals == [(0, 2)]
    assert layout.sink_weight_total == 2
    assert layout.source_weight_total == 2
    assert layout.source_offsets == [0, 1, 2]
    assert layout.sink_offsets == [0, 1, 2]


def test_kraus_block_count(epi_datum, frame_datum, multi_arrow_datum):
    # one block per arrow and per (q, r) pair in I^-_j x I^+_i
    assert len(build_kraus(epi_datum).blocks) == 4
    assert len(build_kraus(frame_datum).blocks) == 3 * 3 * 2
    assert len(build_kraus(multi_arrow_datum).blocks) == 6 + 6 + 3 + 2 + 1


def test_sparse_application_matches_dense_oracle(frame_datum, multi_arrow_datum, triangular_factory):
    rng = np.random.default_rng(5)
    data = [frame_datum, multi_arrow_datum, from_ajn(triangular_factory(0.4, 2.0))]
    for datum in data:
        ks = build_kraus(datum)
        operators = dense_kraus_operators(ks)
        size = ks.layout.total_dimension
        assert size <= 8
        for _ in range(50):
            x = random_symmetric(rng, size)
            dense_t = sum(op.T @ x @ op for op in operators)
            dense_t_star = sum(op @ x @ op.T for op in operators)
            assert np.max(np.abs(apply_T(ks, x) - dense_t)) <= 1e-12
            assert np.max(np.abs(apply_T_star(ks, x) - dense_t_star)) <= 1e-12


def test_t_star_is_block_diagonal(multi_arrow_datum):
    ks = build_kraus(multi_arrow_datum)
    x = random_symmetric(np.random.default_rng(1), ks.layout.total_dimension)
    result = apply_T_star(ks, x)
    layout = ks.layout
    for q in range(layout.sink_weight_total):
        for other in range(layout.sink_weight_total):
            if q != other:
                assert np.allclose(result[layout.sink_slice(q), layout.sink_slice(other)], 0.0)


def test_operator_capacity_matches_determinant_ratio(frame_datum, multi_arrow_datum, spd_factory):
    rng = np.random.default_rng(9)
    for datum in (frame_datum, multi_arrow_datum):
        ks = build_kraus(datum)
        for _ in range(10):
            sigma = [spd_factory(rng, size) for size in datum.beta.beta_plus]
            x = block_diagonal_from_tuple(ks.layout, sigma)
            assert operator_capacity_at(ks, x) == pytest.approx(cap_at(datum, sigma), rel=1e-9)


def test_apply_rejects_wrong_size(epi_datum):
    ks = build_kraus(epi_datum)
    with pytest.raises(DimensionMismatch):
        apply_T(ks, np.eye(3))


def test_ds_residual_of_geometric_and_epi(orthogonal_datum, frame_datum, epi_datum):
    assert ds_residual(orthogonal_datum).worst <= 1e-14
    assert ds_residual(frame_datum).worst <= 1e-12
    residuals = ds_residual(epi_datum)
    assert residuals.source == pytest.approx([1.0, 1.0])
    assert residuals.sink == pytest.approx([1.0])


def test_t_star_is_adjoint_of_t(frame_datum, multi_arrow_datum, triangular_factory):
    rng = np.random.default_rng(12)
    for datum in (frame_datum, multi_arrow_datum, from_ajn(triangular_factory(-0.7, 1.3))):
        ks = build_kraus(datum)
        size = ks.layout.total_dimension
        for _ in range(20):
            x = random_symmetric(rng, size)
            y = random_symmetric(rng, size)
            lhs = float(np.sum(apply_T(ks, x) * y))
            rhs = float(np.sum(x * apply_T_star(ks, y)))
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_geometric_exactly_when_t_is_doubly_stochastic(orthogonal_datum, frame_datum, epi_datum, multi_arrow_datum):
    for datum in (orthogonal_datum, frame_datum, epi_datum, multi_arrow_datum):
        ks = build_kraus(datum)
        identity = np.eye(ks.layout.total_dimension)
        doubly_stochastic = np.allclose(apply_T(ks, identity), identity, atol=1e-10) and np.allclose(
            apply_T_star(ks, identity), identity, atol=1e-10
        )
        assert is_geometric(datum).is_geometric == doubly_stochastic
    assert is_geometric(frame_datum).is_geometric
    assert not is_geometric(epi_datum).is_geometric
