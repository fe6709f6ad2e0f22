"""Spectral theory desk kit for operators on quaternion and octonion modules."""
from .cdnum import CdNumber, basis_mul, find_zero_divisor, kappa
from .diagmodel import DiagSymbol, PowerVector, domain_contains, example52_report, hat_add, hat_mul
from .errors import ComputationError, OctspecError, ValidationError
from .funcalc import Cell, Polynomial, StepFunction, apply, positive_sqrt
from .hmodule import ModuleVector, inner
from .qlop import CdMatrixOperator, QlOperator, component_project
from .spectral import is_positive, resolution_of_identity, resolvents, spectrum

__version__ = "0.1.0"

__all__ = [
    "CdNumber", "basis_mul", "find_zero_divisor", "kappa",
    "DiagSymbol", "PowerVector", "domain_contains", "example52_report", "hat_add", "hat_mul",
    "ComputationError", "OctspecError", "ValidationError",
    "Cell", "Polynomial", "StepFunction", "apply", "positive_sqrt",
    "ModuleVector", "inner",
    "CdMatrixOperator", "QlOperator", "component_project",
    "is_positive", "resolution_of_identity", "resolvents", "spectrum",
]
