"""Exact two-hidden-layer superposition networks on the unit cube.

A network here is a sum of 2d+1 branch terms: each branch hashes a point
through a fixed rational inner map and feeds the result to a shared
piecewise-linear outer function.  Every coefficient is a rational number,
so fitted models reproduce their samples exactly and every floating-point
answer ships with a proven error bound.
"""

from .errors import (
    AssemblyError,
    DomainError,
    InputError,
    InternalInvariantError,
    IterationDiverged,
    KsnetError,
    ModelFormatError,
    ParameterError,
    SeparationFailure,
)
from .hashmaps import (
    DEFAULT_SERIES_TOLERANCE,
    BranchValue,
    HashParams,
    IncidenceSystem,
    RangeReport,
    SeparationVerdict,
    build_incidence,
    certify_separation,
    check_ranges,
    lambda_series,
    make_params,
    psi_eval,
    separation_check,
)
from .inner import (
    InnerSpec,
    InnerValue,
    PropertyReport,
    default_inner_spec,
    phi_eval,
    phi_exact,
    verify_inner,
)
from .network import (
    FORMAT_VERSION,
    FastEvaluator,
    KNetModel,
    TopologyReport,
    assemble,
    describe,
    evaluate,
    evaluate_batch,
    load,
    save,
)
from .outer import (
    ClassReport,
    FitReport,
    KnotTable,
    OuterFunction,
    SampleSet,
    fit_exact,
    fit_iterative,
    g_eval,
    merge_report,
)
from .rationals import (
    DigitExpansion,
    ExactRational,
    expand_digits,
    format_rational,
    grid_points,
    make_rational,
    parse_rational,
)

__version__ = "0.1.0"

__all__ = [
    "AssemblyError",
    "BranchValue",
    "ClassReport",
    "DEFAULT_SERIES_TOLERANCE",
    "DigitExpansion",
    "DomainError",
    "ExactRational",
    "FORMAT_VERSION",
    "FastEvaluator",
    "FitReport",
    "HashParams",
    "IncidenceSystem",
    "InnerSpec",
    "InnerValue",
    "InputError",
    "InternalInvariantError",
    "IterationDiverged",
    "KNetModel",
    "KnotTable",
    "KsnetError",
    "ModelFormatError",
    "OuterFunction",
    "ParameterError",
    "PropertyReport",
    "RangeReport",
    "SampleSet",
    "SeparationFailure",
    "SeparationVerdict",
    "TopologyReport",
    "assemble",
    "build_incidence",
    "certify_separation",
    "check_ranges",
    "default_inner_spec",
    "describe",
    "evaluate",
    "evaluate_batch",
    "expand_digits",
    "fit_exact",
    "fit_iterative",
    "format_rational",
    "g_eval",
    "grid_points",
    "lambda_series",
    "load",
    "make_params",
    "make_rational",
    "merge_report",
    "parse_rational",
    "phi_eval",
    "phi_exact",
    "psi_eval",
    "save",
    "separation_check",
    "verify_inner",
]
