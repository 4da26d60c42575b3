"""
Datum and sigma files.

A datum file is a UTF-8 JSON document of one of two kinds (vertex indices are 1-based):

    {"kind": "ajn", "d": [...], "n": [...], "c": [...], "p": [...], "A": [[A_11, ...], ...]}
    {"kind": "quiver", "beta_plus": [...], "beta_minus": [...], "sigma_plus": [...],
     "sigma_minus": [...], "arrows": [{"i": 1, "j": 1, "matrix": [[...]]}, ...]}

A sigma file is a JSON list of symmetric positive definite matrices, one per source.
"""

import json
import logging
import os
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError

from quiver_capacity.errors import DatumParseError, QuiverCapacityError
from quiver_capacity.linalg import Matrix, MatrixField, cholesky
from quiver_capacity.quiver_model import (
    AjnDatum,
    Arrow,
    BipartiteQuiver,
    DimensionVector,
    QuiverDatum,
    QuiverRepresentation,
    Weight,
    ensure_valid,
    from_ajn,
)


class AjnFile(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")

    kind: Literal["ajn"] = "ajn"
    d: List[int]
    n: List[int]
    c: List[int]
    p: List[int]
    A: List[List[MatrixField]]


class ArrowEntry(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")

    i: int = Field(ge=1)
    j: int = Field(ge=1)
    matrix: MatrixField


class QuiverFile(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, extra="forbid")

    kind: Literal["quiver"] = "quiver"
    beta_plus: List[int]
    beta_minus: List[int]
    sigma_plus: List[int]
    sigma_minus: List[int]
    arrows: List[ArrowEntry] = []


DatumFile = Annotated[Union[AjnFile, QuiverFile], Field(discriminator="kind")]

_DATUM_ADAPTER: TypeAdapter[Union[AjnFile, QuiverFile]] = TypeAdapter(DatumFile)
_SIGMA_ADAPTER: TypeAdapter[List[MatrixField]] = TypeAdapter(
    List[MatrixField], config=ConfigDict(arbitrary_types_allowed=True)
)


class LoadedDatum(BaseModel):
    """A parsed datum file: the quiver datum, plus the AJN datum when the file was of kind "ajn"."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    datum: QuiverDatum
    ajn: Optional[AjnDatum] = None


def _format_validation_error(error: ValidationError) -> str:
    parts: List[str] = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        parts.append(f"field '{location}': {item['msg']}")
    return "; ".join(parts)


def _read_json(source: Union[str, Dict[str, Any], List[Any]], what: str, logger: logging.Logger) -> Any:
    """Accept a file path, a raw JSON string or already-parsed JSON."""
    if not isinstance(source, str):
        logger.debug(f"Loaded {what} from pre-parsed data")
        return source

    if os.path.exists(source):
        try:
            with open(source, "r", encoding="utf-8") as file:
                text = file.read()
        except OSError as e:
            logger.error(f"Failed reading {what} file {source}: {e}")
            raise DatumParseError(f"Failed to read {what} file {source}: {e}") from e
        origin = source
    elif source.lstrip().startswith(("{", "[")):
        text = source
        origin = "<string>"
    else:
        logger.error(f"{what.capitalize()} file not found: {source}")
        raise DatumParseError(f"{what.capitalize()} file not found: {source}")

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        message = f"{origin}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}"
        logger.error(message)
        raise DatumParseError(message) from e
    logger.debug(f"Loaded {what} from {origin}")
    return data


def _quiver_datum_from_file(parsed: QuiverFile) -> QuiverDatum:
    k, m = len(parsed.beta_plus), len(parsed.beta_minus)
    arrows: List[Arrow] = []
    for index, entry in enumerate(parsed.arrows):
        if entry.i > k or entry.j > m:
            raise DatumParseError(f"field 'arrows.{index}': arrow {entry.i} -> {entry.j} is outside {k} sources / {m} sinks")
        arrows.append(Arrow(source=entry.i - 1, sink=entry.j - 1))
    try:
        return QuiverDatum(
            quiver=BipartiteQuiver(num_sources=k, num_sinks=m, arrows=arrows),
            beta=DimensionVector(beta_plus=parsed.beta_plus, beta_minus=parsed.beta_minus),
            sigma=Weight(sigma_plus=parsed.sigma_plus, sigma_minus=parsed.sigma_minus),
            rep=QuiverRepresentation(maps=[entry.matrix for entry in parsed.arrows]),
        )
    except ValidationError as e:
        raise DatumParseError(_format_validation_error(e)) from e


def load_datum(
    source: Union[str, Dict[str, Any]], logger: Optional[logging.Logger] = None
) -> LoadedDatum:
    """
    Load a datum from a file path, a raw JSON string or a dict and validate it.

    Raises:
        DatumParseError: On malformed JSON or a document that does not match either schema.
        QuiverCapacityError: When the datum parses but violates an invariant (e.g. InvalidAjn, Imbalance).
    """
    logger = logger or logging.getLogger("QuiverCapacity")
    data = _read_json(source, "datum", logger)

    try:
        parsed = _DATUM_ADAPTER.validate_python(data)
    except ValidationError as e:
        message = f"Invalid datum: {_format_validation_error(e)}"
        logger.error(message)
        raise DatumParseError(message) from e

    if isinstance(parsed, AjnFile):
        try:
            ajn = AjnDatum(d=parsed.d, n=parsed.n, c=parsed.c, p=parsed.p, A=parsed.A)
        except ValidationError as e:
            message = f"Invalid AJN datum: {_format_validation_error(e)}"
            logger.error(message)
            raise DatumParseError(message) from e
        datum = from_ajn(ajn, logger)
        ensure_valid(datum, logger)
        logger.info(f"Loaded AJN datum with k={ajn.num_sources}, m={ajn.num_sinks}")
        return LoadedDatum(datum=datum, ajn=ajn)

    datum = _quiver_datum_from_file(parsed)
    ensure_valid(datum, logger)
    logger.info(f"Loaded quiver datum with k={datum.num_sources}, m={datum.num_sinks}, {len(datum.quiver.arrows)} arrows")
    return LoadedDatum(datum=datum)


def load_sigma(source: Union[str, List[Any]], logger: Optional[logging.Logger] = None) -> List[Matrix]:
    """
    Load a tuple of SPD matrices.

    Raises:
        DatumParseError: On malformed JSON or entries that are not finite 2-D matrices.
        NotPositiveDefinite: If some matrix fails Cholesky certification.
    """
    logger = logger or logging.getLogger("QuiverCapacity")
    data = _read_json(source, "sigma", logger)
    try:
        matrices = _SIGMA_ADAPTER.validate_python(data)
    except ValidationError as e:
        message = f"Invalid sigma: {_format_validation_error(e)}"
        logger.error(message)
        raise DatumParseError(message) from e
    for index, matrix in enumerate(matrices):
        try:
            cholesky(matrix)
        except QuiverCapacityError:
            logger.error(f"Sigma matrix {index + 1} is not positive definite")
            raise
    return matrices


def ajn_to_file(ajn: AjnDatum) -> Dict[str, Any]:
    return AjnFile(d=ajn.d, n=ajn.n, c=ajn.c, p=ajn.p, A=ajn.maps).model_dump(mode="json")


def datum_to_file(datum: QuiverDatum) -> Dict[str, Any]:
    entries = [
        ArrowEntry(i=arrow.source + 1, j=arrow.sink + 1, matrix=np.asarray(datum.arrow_map(a)))
        for a, arrow in enumerate(datum.quiver.arrows)
    ]
    return QuiverFile(
        beta_plus=datum.beta.beta_plus,
        beta_minus=datum.beta.beta_minus,
        sigma_plus=datum.sigma.sigma_plus,
        sigma_minus=datum.sigma.sigma_minus,
        arrows=entries,
    ).model_dump(mode="json")
