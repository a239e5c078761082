"""Term rewriting with classical combinators and e-graph equality saturation."""

from .terms import (
    Atom,
    Compound,
    Lit,
    Term,
    arguments,
    arity,
    eval_builtin,
    inline_anonymous,
    istree,
    operation,
    parse_term,
    print_term,
    similarterm,
)
from .rules import (
    PatLit,
    PatSegment,
    PatTerm,
    PatVar,
    PredicateRef,
    Rule,
    RuleKind,
    Theory,
    parse_rule,
    parse_theory,
)
from .classical import (
    Chain,
    Empty,
    Fixpoint,
    FixpointNoCycle,
    If,
    IfElse,
    PassThrough,
    Postwalk,
    Prewalk,
    RestartedChain,
    apply_rule,
    compile_matcher,
    instantiate,
    rule_rewriter,
)
from .egraph import EGraph, LitNode, OpNode
from .machine import compile_pattern, disassemble, ematch, run_program
from .analysis import (
    Analysis,
    COST_FUNCTIONS,
    analyze,
    astsize,
    astsize_inv,
    extract,
    mult_penalty,
    sign_analysis,
)
from .saturation import (
    AreEqual,
    BackoffScheduler,
    Report,
    SaturationParams,
    SimpleScheduler,
    StopReason,
    eqsat_step,
    prove_equal,
    saturate,
)
from .theories import load_bundled, stream_optimize

__version__ = "0.1.0"
