import pytest
from hypothesis import given, strategies as st

from eqsat.classical import (
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
    parse_strategy,
    rule_rewriter,
)
from eqsat.errors import UnsupportedRuleKind
from eqsat.rules import parse_rule, parse_theory
from eqsat.terms import Atom, Compound, Lit, istree, parse_term, print_term

FOLDER = parse_theory(
    "(+ ~a::number ~b::number) => (+ ~a ~b)\n(* ~a::number ~b::number) => (* ~a ~b)\n"
)


def match(lhs_line, term_src):
    rule = parse_rule(lhs_line, set())
    return compile_matcher(rule.lhs)(parse_term(term_src)), rule


# -- matching ---------------------------------------------------------------


def test_match_simple():
    s, rule = match("(* ~a 1) --> ~a", "(* x 1)")
    assert s == {0: Atom("x")}


def test_match_repeated_variable_consistency():
    s, _ = match("(* ~a ~a) --> ~a", "(* x y)")
    assert s is None
    s, _ = match("(* ~a ~a) --> ~a", "(* x x)")
    assert s == {0: Atom("x")}


def test_match_literal_value_based():
    s, _ = match("(* ~a 1) --> ~a", "(* x 1.0)")
    assert s == {0: Atom("x")}
    s, _ = match("(* ~a 1) --> ~a", "(* x 2)")
    assert s is None


def test_match_segments_shortest_split_first():
    s, _ = match("(f ~~pre 3 ~~post) --> (f ~~pre ~~post)", "(f 1 2 3 4)")
    assert s == {0: (Lit(1), Lit(2)), 1: (Lit(4),)}


def test_match_empty_segment():
    s, _ = match("(f ~~s) --> (f ~~s)", "(f)")
    assert s == {0: ()}


def test_match_variable_operation():
    s, rule = match("(~f ~x) --> (~f (~f ~x))", "(g a)")
    assert s == {0: Atom("g"), 1: Atom("a")}
    assert instantiate(rule.rhs, s) == parse_term("(g (g a))")


def test_match_predicate_gate():
    s, _ = match("(+ ~a::number ~b) --> ~b", "(+ 1 x)")
    assert s == {0: Lit(1), 1: Atom("x")}
    s, _ = match("(+ ~a::number ~b) --> ~b", "(+ y x)")
    assert s is None


def test_match_segment_predicate():
    s, _ = match("(f ~~xs::number) --> (f ~~xs)", "(f 1 2)")
    assert s == {0: (Lit(1), Lit(2))}
    s, _ = match("(f ~~xs::number) --> (f ~~xs)", "(f 1 y)")
    assert s is None


# -- instantiation ----------------------------------------------------------


def test_instantiate_nested():
    rule = parse_rule("(sin (* 2 ~x)) --> (* 2 (* (sin ~x) (cos ~x)))", set())
    s = compile_matcher(rule.lhs)(parse_term("(sin (* 2 z))"))
    assert instantiate(rule.rhs, s) == parse_term("(* 2 (* (sin z) (cos z)))")


def test_instantiate_bare_variable():
    rule = parse_rule("(id ~a) --> ~a", set())
    s = {0: parse_term("(+ 1 2)")}
    assert instantiate(rule.rhs, s) == parse_term("(+ 1 2)")


def test_instantiate_empty_splice():
    rule = parse_rule("(g ~~s) --> (f ~~s)", set())
    assert instantiate(rule.rhs, {0: ()}) == Compound("f", ())


# -- apply_rule -------------------------------------------------------------


def test_apply_rule_rewrite():
    rule = parse_rule("(sin (* 2 ~x)) --> (* 2 (* (sin ~x) (cos ~x)))", set())
    out = apply_rule(rule, parse_term("(sin (* 2 z))"))
    assert out == parse_term("(* 2 (* (sin z) (cos z)))")
    assert apply_rule(rule, parse_term("(sin z)")) is None


def test_apply_rule_root_only():
    rule = parse_rule("(+ ~a::number ~b::number) => (+ ~a ~b)", set())
    assert apply_rule(rule, parse_term("(+ 1 2)")) == Lit(3)
    assert apply_rule(rule, parse_term("(f (+ 1 2))")) is None


def test_apply_rule_dynamic_symbolic_fallback():
    rule = parse_rule("(f ~a) => (g ~a)", set())
    assert apply_rule(rule, parse_term("(f x)")) == parse_term("(g x)")


def test_apply_rule_rejects_egraph_kinds():
    for line in ["(* ~a ~b) == (* ~b ~a)", "(f ~x) != g0"]:
        rule = parse_rule(line, set())
        with pytest.raises(UnsupportedRuleKind):
            apply_rule(rule, parse_term("(* x y)"))


# -- combinators ------------------------------------------------------------


def fold_rw():
    return [rule_rewriter(r) for r in FOLDER.rules]


def test_empty_and_passthrough():
    assert Empty()(parse_term("x")) is None
    assert PassThrough(Empty())(parse_term("x")) == Atom("x")


def test_chain():
    rw = Chain(fold_rw())
    assert rw(parse_term("(+ 1 2)")) == Lit(3)
    assert rw(parse_term("(- 1 2)")) is None


def test_restarted_chain():
    hits = []
    def a(t):
        hits.append("a")
        return Atom("done") if t == Atom("go") else None
    def b(t):
        hits.append("b")
        return Atom("go") if t == Atom("start") else None
    rw = RestartedChain([a, b])
    assert rw(Atom("start")) == Atom("done")
    # a misses, b rewrites, chain restarts from a which then fires
    assert hits[:3] == ["a", "b", "a"]


def test_if_else():
    rw = IfElse(istree, lambda t: Atom("tree"), lambda t: Atom("leaf"))
    assert rw(parse_term("(f x)")) == Atom("tree")
    assert rw(parse_term("x")) == Atom("leaf")
    assert If(istree, lambda t: Atom("tree"))(parse_term("x")) is None


def test_fold_pipeline():
    rw = Fixpoint(Postwalk(Chain(fold_rw())))
    assert rw(parse_term("(+ 1 (+ 2 3))")) == Lit(6)


def test_postwalk_no_match_returns_none():
    assert Postwalk(Empty())(parse_term("(f (g x))")) is None
    # PassThrough keeps per-node identity, so the walk reports the term itself
    t = parse_term("(f (g x))")
    assert Postwalk(PassThrough(Empty()))(t) == t


def test_walk_visit_counts():
    seen = []
    def counter(t):
        seen.append(t)
        return None
    t = parse_term("(f (g x) (h y 1))")
    Postwalk(counter)(t)
    assert len(seen) == 6
    seen.clear()
    Prewalk(counter)(t)
    assert len(seen) == 6
    assert seen[0] == t  # pre-order starts at the root


def test_prewalk_vs_postwalk_order():
    order = []
    def spy(t):
        order.append(print_term(t))
        return None
    t = parse_term("(f (g x))")
    Prewalk(spy)(t)
    assert order == ["(f (g x))", "(g x)", "x"]
    order.clear()
    Postwalk(spy)(t)
    assert order == ["x", "(g x)", "(f (g x))"]


def test_fixpoint_is_fixed_point():
    rw = Postwalk(Chain(fold_rw()))
    out = Fixpoint(rw)(parse_term("(+ 1 (+ 2 (* 2 2)))"))
    assert out == Lit(7)
    assert rw(out) is None


def test_fixpoint_no_cycle_stops():
    flip = rule_rewriter(parse_rule("(* ~a ~b) --> (* ~b ~a)", set()))
    out = FixpointNoCycle(flip)(parse_term("(* x y)"))
    assert out == parse_term("(* y x)")
    # fresh invocation gets a fresh cycle set
    assert FixpointNoCycle(flip)(parse_term("(* x y)")) == parse_term("(* y x)")


# -- matcher soundness property --------------------------------------------

leaf_srcs = st.sampled_from(["~v", "~w", "x", "y", "1", "2"])


@st.composite
def pattern_srcs(draw, depth=3):
    if depth == 0 or draw(st.booleans()):
        return draw(leaf_srcs)
    n = draw(st.integers(1, 3))
    op = draw(st.sampled_from(["f", "g", "+"]))
    args = " ".join(draw(pattern_srcs(depth=depth - 1)) for _ in range(n))
    return f"({op} {args})"


term_leaves = st.sampled_from([Atom("x"), Atom("y"), Lit(1), Lit(2)])
small_terms = st.recursive(
    term_leaves,
    lambda ch: st.builds(
        lambda op, args: Compound(op, tuple(args)),
        st.sampled_from(["f", "g", "+"]),
        st.lists(ch, min_size=1, max_size=3),
    ),
    max_leaves=8,
)


@given(pattern_srcs(), small_terms)
def test_matcher_soundness(pat_src, t):
    rule = parse_rule(f"{pat_src} --> 0", set())
    s = compile_matcher(rule.lhs)(t)
    if s is not None:
        assert instantiate(rule.lhs, s) == t


# -- strategy language ------------------------------------------------------


def test_parse_strategy_default():
    rw = parse_strategy("fixpoint(postwalk(chain(all)))", {"all": fold_rw()})
    assert rw(parse_term("(+ 1 (+ 2 3))")) == Lit(6)


def test_parse_strategy_single_pass():
    rw = parse_strategy("postwalk(chain(all))", {"all": fold_rw()})
    # one postwalk pass folds bottom-up all the way here
    assert rw(parse_term("(+ 1 (+ 2 3))")) == Lit(6)


def test_parse_strategy_errors():
    with pytest.raises(Exception):
        parse_strategy("bogus(chain(all))", {"all": []})
    with pytest.raises(Exception):
        parse_strategy("chain(missing)", {"all": []})
