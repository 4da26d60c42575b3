from quiver_capacity.capacity import CapacityReport, SolverStatus, ajn_solve, cap_at, solve
from quiver_capacity.datum_io import LoadedDatum, load_datum, load_sigma
from quiver_capacity.entropy import ajn_gap, gaussian_entropy
from quiver_capacity.errors import QuiverCapacityError
from quiver_capacity.quiver_model import AjnDatum, QuiverDatum, from_ajn, to_ajn, validate
from quiver_capacity.scaling import GroupElement, act, character, extremizer_to_group
from quiver_capacity.settings import SolverOptions
from quiver_capacity.stability import endomorphism_dimension, find_violator, uniqueness_probe

__all__ = [
    "AjnDatum",
    "CapacityReport",
    "GroupElement",
    "LoadedDatum",
    "QuiverCapacityError",
    "QuiverDatum",
    "SolverOptions",
    "SolverStatus",
    "act",
    "ajn_gap",
    "ajn_solve",
    "cap_at",
    "character",
    "endomorphism_dimension",
    "extremizer_to_group",
    "find_violator",
    "from_ajn",
    "gaussian_entropy",
    "load_datum",
    "load_sigma",
    "solve",
    "to_ajn",
    "uniqueness_probe",
    "validate",
]
