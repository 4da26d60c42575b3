import json
import math
from typing import Annotated, Any, Dict, List, Optional

from pydantic import BaseModel, BeforeValidator, ConfigDict, PlainSerializer

NestedMatrix = List[List[float]]


def _parse_extended_float(value: Any) -> Any:
    if isinstance(value, str) and value in ("inf", "-inf"):
        return math.inf if value == "inf" else -math.inf
    return value


def _serialize_extended_float(value: float) -> Any:
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


# JSON has no infinity literal; infinities travel as the strings "inf" / "-inf".
ExtendedFloat = Annotated[
    float,
    BeforeValidator(_parse_extended_float),
    PlainSerializer(_serialize_extended_float),
]


class GroupElementEntry(BaseModel):
    """Blocks g(v_i) (sources) and g(w_j) (sinks) of a group element."""

    sources: List[NestedMatrix]
    sinks: List[NestedMatrix]


class ViolatorEntry(BaseModel):
    """
    A subspace tuple violating semi-stability.

    Attributes:
        bases (List[NestedMatrix]): Orthonormal basis of V'(v_i) per source, as column matrices.
        dimensions (List[int]): dim V'(v_i).
        image_dimensions (List[int]): Image dimension at every sink.
        lhs (int): Weighted source dimension.
        rhs (int): Weighted image dimension.
        slack (int): lhs - rhs, positive.
    """

    bases: List[NestedMatrix]
    dimensions: List[int]
    image_dimensions: List[int]
    lhs: int
    rhs: int
    slack: int


class ResidualsEntry(BaseModel):
    source: List[float]
    sink: List[float]


class ReportFile(BaseModel):
    """
    JSON report written by every CLI command. Fields a command does not produce are omitted.

    Attributes:
        command (str): Sub-command that produced the report.
        status (str): Converged / Infeasible / MaxIterations, or the verdict of check and probe.
        cap (Optional[float]): Capacity.
        ajn_constant (Optional[ExtendedFloat]): -log(cap) / 2, "inf" when infeasible.
        iterations (Optional[int]): Fixed-point steps taken.
        residual (Optional[float]): Final stationarity residual.
        extremizer (Optional[List[NestedMatrix]]): Det-normalized gaussian extremizer.
        group_element (Optional[GroupElementEntry]): Scaling g built from the extremizer.
        character (Optional[float]): chi_sigma(g).
        log_abs_character (Optional[float]): log |chi_sigma(g)|.
        violator (Optional[ViolatorEntry]): Semi-stability certificate, if one was found.
    """

    model_config = ConfigDict(extra="forbid")

    command: str
    status: str
    note: Optional[str] = None
    cap: Optional[float] = None
    ajn_constant: Optional[ExtendedFloat] = None
    iterations: Optional[int] = None
    residual: Optional[float] = None
    extremizer: Optional[List[NestedMatrix]] = None
    group_element: Optional[GroupElementEntry] = None
    character: Optional[float] = None
    log_abs_character: Optional[float] = None
    violator: Optional[ViolatorEntry] = None
    feasible: Optional[bool] = None
    geometric: Optional[bool] = None
    ds_residuals: Optional[ResidualsEntry] = None
    scaled_datum: Optional[Dict[str, Any]] = None
    gap: Optional[float] = None
    cap_at: Optional[float] = None
    identity_residual: Optional[float] = None
    uniqueness: Optional[str] = None
    end_dimension: Optional[int] = None
    schur: Optional[bool] = None
    restarts: Optional[int] = None
    converged_restarts: Optional[int] = None
    max_deviation: Optional[float] = None
    witness: Optional[List[List[NestedMatrix]]] = None
    witness_residuals: Optional[List[float]] = None

    def to_json(self) -> str:
        """Deterministic JSON: omitted optionals, sorted keys, two-space indent."""
        return json.dumps(self.model_dump(mode="json", exclude_none=True), sort_keys=True, indent=2)
