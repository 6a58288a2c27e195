"""Stratified limit Datalog: analysis, transformation and evaluation."""

from .model import (
    ALL_INTS,
    STAR,
    AllInts,
    Atom,
    BinOp,
    Comparison,
    ContractError,
    Fact,
    Finite,
    Int,
    Kind,
    LimitLogError,
    Literal,
    Obj,
    PredicateInfo,
    Program,
    ProgramError,
    PseudoInterpretation,
    Rule,
    Var,
    entails,
    satisfies,
    satisfies_lub,
)
from .syntax import (
    ParseError,
    check_ordered,
    parse_dataset,
    parse_fact,
    parse_program,
    parse_query,
    print_program,
    print_pseudo,
)
from .analysis import (
    ClassificationReport,
    Stratification,
    StratificationFailure,
    check_limit_linear,
    check_safety,
    check_type_consistent,
    check_type_consistent_reference,
    classify,
    compute_stratification,
    guarded_variables,
)
from .transform import SemiGroundProgram, reduct, semi_ground, tc_rewrite_reduct
from .engine import (
    NO_VALUE,
    EngineConfig,
    EvaluationTrace,
    lub_query,
    materialise_stratified,
    opt_rule,
    pseudo_materialise_positive,
    query,
    step,
)

from .oracle import OracleVerdict, brute_force_materialise, oracle_entails, oracle_lub
from .presburger import PresburgerDocument, emit_presburger
from .oddminsat import brute_force_oddminsat, oddminsat_encode

__version__ = "0.1.0"

__all__ = [
    "ALL_INTS",
    "AllInts",
    "Atom",
    "BinOp",
    "ClassificationReport",
    "Comparison",
    "ContractError",
    "EngineConfig",
    "EvaluationTrace",
    "Fact",
    "Finite",
    "Int",
    "Kind",
    "LimitLogError",
    "Literal",
    "NO_VALUE",
    "Obj",
    "OracleVerdict",
    "ParseError",
    "PredicateInfo",
    "PresburgerDocument",
    "Program",
    "ProgramError",
    "PseudoInterpretation",
    "Rule",
    "STAR",
    "SemiGroundProgram",
    "Stratification",
    "StratificationFailure",
    "Var",
    "brute_force_materialise",
    "brute_force_oddminsat",
    "check_limit_linear",
    "check_ordered",
    "check_safety",
    "check_type_consistent",
    "check_type_consistent_reference",
    "classify",
    "compute_stratification",
    "emit_presburger",
    "entails",
    "guarded_variables",
    "lub_query",
    "materialise_stratified",
    "oddminsat_encode",
    "opt_rule",
    "oracle_entails",
    "oracle_lub",
    "parse_dataset",
    "parse_fact",
    "parse_program",
    "parse_query",
    "print_program",
    "print_pseudo",
    "pseudo_materialise_positive",
    "query",
    "reduct",
    "satisfies",
    "satisfies_lub",
    "semi_ground",
    "step",
    "tc_rewrite_reduct",
]
