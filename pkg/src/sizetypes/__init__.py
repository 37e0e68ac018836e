"""Size-aware types for a first-order list language.

Parsing and desugaring, big-step evaluation over a heap of cons cells,
type checking of polynomial size annotations, and automatic inference of
those annotations by exact interpolation of measured output sizes.
"""

from .poly import Polynomial, UnboundSizeVariable, parse_polynomial
from .syntax import (
    Program, FunDef, ParseError, ScopeError, RestrictionViolation,
    parse_program, parse_expr, desugar, scope_check, validate_restriction, to_source,
)
from .typesys import (
    FirstOrderType, IntType, INT, ListType, SizedType, TypeVar,
    AnnotationError, UnificationFailure, OccursCheck,
    annotate_with_variables, infer_underlying, parse_ftype, type_equiv,
    validate_first_order_type,
)
from .semantics import (
    Closures, Heap, IntVal, Loc, NullVal, NULL, Value,
    BudgetExhausted, DivByZero, NonShapelyObservation, StuckEvaluation,
    closures_from_program, evaluate, footprint, measure_sizes, models,
    parse_value_literal, run_function, value_to_literal, value_to_python,
)
from .checker import (
    CheckResult, Obligation, OutsideFragment, PolyEq, PolyZero, ThetaResult, TypeEq,
    UnknownFunction, check_function, check_program, decide_entailment, theta,
)
from .inference import (
    DegreeCapExceeded, IncompleteMeasurement, InferenceConfig, Inferencer,
    NodeConfiguration, NodeSearchExhausted, SingularSystem, UnsupportedShape,
    derive_polynomial, generate_input, nca_nodes, required_measurements,
    synthesize_inhabitant,
)

__version__ = "0.1.0"
