"""Differential entropies of centered gaussian vectors, in nats."""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np

from quiver_capacity.errors import DimensionMismatch, NotPositiveDefinite, SingularAggregate
from quiver_capacity.linalg import Matrix, log_det, symmetrize
from quiver_capacity.quiver_model import AjnDatum

# Covariances of independent centered gaussians Z_1..Z_k, one per source.
GaussianTuple = List[Matrix]

LOG_2_PI_E = math.log(2.0 * math.pi * math.e)


def gaussian_entropy(covariance: Matrix) -> float:
    """h(N(0, S)) = (d log(2 pi e) + log det S) / 2."""
    dim = np.shape(covariance)[0]
    return 0.5 * (dim * LOG_2_PI_E + log_det(covariance))


def output_covariances(ajn: AjnDatum, covariances: Sequence[Matrix]) -> List[Matrix]:
    """cov(A_j Z) = sum_i A_ij S_i A_ij^T for independent components."""
    if len(covariances) != ajn.num_sources:
        raise DimensionMismatch(f"Expected {ajn.num_sources} covariances, got {len(covariances)}")
    for i, (covariance, size) in enumerate(zip(covariances, ajn.d)):
        if np.shape(covariance) != (size, size):
            raise DimensionMismatch(f"Covariance {i + 1} has shape {np.shape(covariance)}, expected {(size, size)}")

    outputs: List[Matrix] = []
    for j in range(ajn.num_sinks):
        total = np.zeros((ajn.n[j], ajn.n[j]))
        for i in range(ajn.num_sources):
            total += ajn.maps[i][j] @ covariances[i] @ ajn.maps[i][j].T
        outputs.append(symmetrize(total))
    return outputs


def ajn_gap(ajn: AjnDatum, covariances: Sequence[Matrix], logger: Optional[logging.Logger] = None) -> float:
    """
    sum_i c_i h(Z_i) - sum_j p_j h(A_j Z) for independent gaussians Z_i ~ N(0, S_i).

    Its supremum over all covariance tuples is the AJN constant M(A, c, p); for balanced data
    it equals -log(cap_at) / 2 at the same tuple.

    Raises:
        NotPositiveDefinite: If some S_i is not positive definite.
        SingularAggregate: If some cov(A_j Z) is not positive definite.
    """
    logger = logger or logging.getLogger("QuiverCapacity")
    source_term = sum(weight * gaussian_entropy(covariance) for weight, covariance in zip(ajn.c, covariances))

    sink_term = 0.0
    for j, covariance in enumerate(output_covariances(ajn, covariances)):
        try:
            sink_term += ajn.p[j] * gaussian_entropy(covariance)
        except NotPositiveDefinite as e:
            logger.error(f"cov(A_{j + 1} Z) is not positive definite")
            raise SingularAggregate(f"cov(A_{j + 1} Z) is not positive definite") from e
    return float(source_term - sink_term)
