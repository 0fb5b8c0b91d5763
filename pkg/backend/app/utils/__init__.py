from .error_handling import (
    OlatError,
    ConfigParseError,
    ArityMismatchError,
    ZeroPolynomialError,
    EndpointRootError,
    MalformedExpressionError,
    MissingPolynomialFamilyError,
    NonExistentialFormulaError,
    UnboundedFiberError,
    DimensionGuardError,
    TheoremViolationError,
    retry_with_refinement,
    timed,
    LatticeValidator,
    FormulaValidator,
    log_stage,
    log_stage_result,
)

__all__ = [
    "OlatError",
    "ConfigParseError",
    "ArityMismatchError",
    "ZeroPolynomialError",
    "EndpointRootError",
    "MalformedExpressionError",
    "MissingPolynomialFamilyError",
    "NonExistentialFormulaError",
    "UnboundedFiberError",
    "DimensionGuardError",
    "TheoremViolationError",
    "retry_with_refinement",
    "timed",
    "LatticeValidator",
    "FormulaValidator",
    "log_stage",
    "log_stage_result",
]
