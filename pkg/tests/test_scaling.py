import math

import numpy as np
import pytest

from quiver_capacity.capacity import SolverStatus, cap_at, residual, solve
from quiver_capacity.errors import DimensionMismatch, NotExtremal, NotTriangular, SingularBlock, SplitImbalance
from quiver_capacity.kraus import ds_residual
from quiver_capacity.quiver_model import DimensionVector, from_ajn
from quiver_capacity.scaling import (
    GroupElement,
    act,
    character,
    extremizer_to_group,
    gaussian_extremizers_from_group,
    is_geometric,
    log_abs_character,
    transport_extremizer,
    verify_character_formula,
    verify_decomposition,
)
from quiver_capacity.settings import SolverOptions


def random_group_element(datum, rng) -> GroupElement:
    def block(size):
        return np.eye(size) + 0.3 * rng.standard_normal((size, size))

    return GroupElement(
        gv=[block(size) for size in datum.beta.beta_plus],
        gw=[block(size) for size in datum.beta.beta_minus],
    )


def test_identity_action_keeps_maps(frame_datum):
    acted = act(GroupElement.identity(frame_datum), frame_datum)
    for before, after in zip(frame_datum.rep.maps, acted.rep.maps):
        assert np.allclose(before, after)
    assert character(GroupElement.identity(frame_datum), frame_datum.sigma) == pytest.approx(1.0)


def test_action_is_compatible_with_composition(multi_arrow_datum):
    rng = np.random.default_rng(12)
    g = random_group_element(multi_arrow_datum, rng)
    h = random_group_element(multi_arrow_datum, rng)
    composed = act(g.compose(h), multi_arrow_datum)
    stepwise = act(g, act(h, multi_arrow_datum))
    for left, right in zip(composed.rep.maps, stepwise.rep.maps):
        assert np.allclose(left, right, atol=1e-10)


def test_scalar_group_elements_have_trivial_character(multi_arrow_datum):
    # balanced weights: sum sigma_plus beta_plus - sum sigma_minus beta_minus = 0
    scalar = GroupElement(
        gv=[3.0 * np.eye(size) for size in multi_arrow_datum.beta.beta_plus],
        gw=[3.0 * np.eye(size) for size in multi_arrow_datum.beta.beta_minus],
    )
    sigma = multi_arrow_datum.sigma
    assert character(scalar, sigma) == pytest.approx(1.0)


def test_character_sign_and_value(epi_datum):
    g = GroupElement(gv=[np.array([[-1.0]]), np.array([[2.0]])], gw=[np.array([[0.5]])])
    # (-1)^1 * 2^1 * 0.5^-2
    assert character(g, epi_datum.sigma) == pytest.approx(-8.0)
    sign, log_abs = log_abs_character(g, epi_datum.sigma)
    assert sign == -1.0 and log_abs == pytest.approx(math.log(8.0))


def test_singular_block_is_rejected(epi_datum):
    g = GroupElement(gv=[np.zeros((1, 1)), np.eye(1)], gw=[np.eye(1)])
    with pytest.raises(SingularBlock):
        act(g, epi_datum)
    with pytest.raises(SingularBlock):
        character(g, epi_datum.sigma)


def test_wrong_block_count_is_rejected(epi_datum):
    with pytest.raises(DimensionMismatch):
        act(GroupElement(gv=[np.eye(1)], gw=[np.eye(1)]), epi_datum)


def test_is_geometric(orthogonal_datum, frame_datum, epi_datum):
    assert is_geometric(orthogonal_datum).is_geometric
    assert is_geometric(frame_datum).is_geometric
    check = is_geometric(epi_datum)
    assert not check.is_geometric
    assert check.residuals.worst == pytest.approx(1.0)


def test_epi_scaling(epi_datum, opts):
    report = solve(epi_datum, opts)
    g = extremizer_to_group(epi_datum, report.extremizer)
    assert np.allclose([block[0, 0] for block in g.gv], [1.0, 1.0])
    assert g.gw[0][0, 0] == pytest.approx(1.0 / math.sqrt(2.0))
    assert character(g, epi_datum.sigma) == pytest.approx(2.0)
    _, log_abs = log_abs_character(g, epi_datum.sigma)
    assert abs(report.ajn_constant + log_abs) <= 1e-5
    assert is_geometric(act(g, epi_datum)).is_geometric


def test_not_extremal(epi_datum):
    with pytest.raises(NotExtremal):
        extremizer_to_group(epi_datum, [np.array([[4.0]]), np.array([[1.0]])])


def test_extremizers_recovered_from_group(frame_datum, opts):
    rng = np.random.default_rng(21)
    moved = act(random_group_element(frame_datum, rng), frame_datum)
    report = solve(moved, opts)
    assert report.status == SolverStatus.CONVERGED
    g = extremizer_to_group(moved, report.extremizer, tol=opts.tol)
    for recovered, original in zip(gaussian_extremizers_from_group(g), report.extremizer):
        assert np.allclose(recovered, original, rtol=1e-10, atol=1e-12)


def test_scaled_data_are_geometric_and_formula_holds(
    epi_datum, frame_datum, multi_arrow_datum, scalar_ajns, triangular_factory
):
    tight = SolverOptions(tol=1e-10)
    rng = np.random.default_rng(30)
    data = [
        epi_datum,
        act(random_group_element(frame_datum, rng), frame_datum),
        multi_arrow_datum,
        from_ajn(scalar_ajns[3]),
        from_ajn(triangular_factory(1.5, -0.25)),
    ]
    for datum in data:
        report = solve(datum, tight)
        assert report.status == SolverStatus.CONVERGED
        g = extremizer_to_group(datum, report.extremizer, tol=tight.tol)
        assert ds_residual(act(g, datum)).worst <= 1e-7
        _, log_abs = log_abs_character(g, datum.sigma)
        assert abs(report.ajn_constant + log_abs) <= 1e-5


def test_transported_extremizer_stays_stationary(multi_arrow_datum, opts):
    report = solve(multi_arrow_datum, opts)
    g = random_group_element(multi_arrow_datum, np.random.default_rng(5))
    moved = act(g, multi_arrow_datum)
    transported = transport_extremizer(g, report.extremizer)
    assert residual(moved, transported) <= 1e-6
    _, log_abs = log_abs_character(g, multi_arrow_datum.sigma)
    assert cap_at(moved, transported) == pytest.approx(report.cap * math.exp(-2.0 * log_abs), rel=1e-9)


def test_character_covariance_of_capacity(epi_datum, frame_datum, multi_arrow_datum, scalar_ajns, opts):
    rng = np.random.default_rng(40)
    data = [epi_datum, frame_datum, multi_arrow_datum, from_ajn(scalar_ajns[0]), from_ajn(scalar_ajns[1])]
    for datum in data:
        for _ in range(4):
            result = verify_character_formula(datum, random_group_element(datum, rng), opts)
            assert result.status_original == SolverStatus.CONVERGED
            assert result.status_transformed == SolverStatus.CONVERGED
            assert result.relative_error <= 1e-5


def test_decomposition_of_triangular_data(triangular_factory, opts):
    rng = np.random.default_rng(50)
    split = DimensionVector(beta_plus=[1, 1], beta_minus=[1])
    for _ in range(5):
        offsets = rng.uniform(-2.0, 2.0, size=2)
        datum = from_ajn(triangular_factory(float(offsets[0]), float(offsets[1])))
        result = verify_decomposition(datum, split, opts)
        assert result.ajn_constant == pytest.approx(-2.0 * math.log(2.0), abs=1e-5)
        assert result.cap_first == pytest.approx(4.0, rel=1e-6)
        assert result.cap_second == pytest.approx(4.0, rel=1e-6)
        assert result.relative_error <= 1e-5


def test_decomposition_rejects_bad_splits(triangular_factory, epi_datum, opts):
    datum = from_ajn(triangular_factory(0.3, 0.2))
    with pytest.raises(SplitImbalance):
        verify_decomposition(datum, DimensionVector(beta_plus=[1, 0], beta_minus=[1]), opts)
    lower = datum.with_maps([np.array([[1.0, 0.0], [0.5, 1.0]]), np.eye(2)])
    with pytest.raises(NotTriangular):
        verify_decomposition(lower, DimensionVector(beta_plus=[1, 1], beta_minus=[1]), opts)
    with pytest.raises(DimensionMismatch):
        verify_decomposition(epi_datum, DimensionVector(beta_plus=[2, 0], beta_minus=[1]), opts)
