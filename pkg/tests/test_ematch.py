import pytest
from hypothesis import given, settings, strategies as st

from oracles import enumerate_terms, naive_ematch
from eqsat.egraph import EGraph, OpNode
from eqsat.errors import InconsistentClass, SegmentUnsupported
from eqsat.machine import (
    Bind,
    CheckLit,
    CheckPredicate,
    Compare,
    EMatch,
    LookupGround,
    Yield,
    compile_pattern,
    disassemble,
    ematch,
    run_program,
)
from eqsat.rules import parse_rule
from eqsat.terms import Atom, Compound, Lit, parse_term


def lhs(line):
    return parse_rule(line, set()).lhs


def build(*srcs):
    g = EGraph()
    ids = [g.add_term(parse_term(s)) for s in srcs]
    g.rebuild()
    return g, ids


# -- compilation ------------------------------------------------------------


def test_compile_golden():
    prog = compile_pattern(lhs("(* ~a 1) --> ~a"))
    assert prog.instructions == (
        Bind(0, "*", 2, 1),
        CheckLit(2, 1),
        Yield((1,)),
    )
    assert prog.n_regs == 3


def test_compile_bare_variable():
    prog = compile_pattern(lhs("~x --> ~x"))
    assert prog.instructions == (Yield((0,)),)


def test_compile_repeated_var_compares():
    prog = compile_pattern(lhs("(* (sin ~x) (cos ~x)) --> ~x"))
    compares = [i for i in prog.instructions if isinstance(i, Compare)]
    assert len(compares) == 1


def test_compile_predicate():
    prog = compile_pattern(lhs("(+ ~a::number ~b) --> ~b"))
    checks = [i for i in prog.instructions if isinstance(i, CheckPredicate)]
    assert len(checks) == 1 and checks[0].bindlit


def test_compile_ground_subterm():
    prog = compile_pattern(lhs("(f (g 1 2) ~x) --> ~x"))
    lookups = [i for i in prog.instructions if isinstance(i, LookupGround)]
    assert lookups == [LookupGround(1, parse_term("(g 1 2)"))]
    assert prog.ground_subterms == (parse_term("(g 1 2)"),)


def test_compile_rejects_segments_and_var_ops():
    with pytest.raises(SegmentUnsupported):
        compile_pattern(lhs("(f ~~xs) --> (f ~~xs)"))
    with pytest.raises(SegmentUnsupported):
        compile_pattern(lhs("(~f ~x) --> ~x"))


def test_disassembly_golden():
    prog = compile_pattern(lhs("(* ~a 1) --> ~a"))
    assert disassemble(prog) == "BIND r0 * /2 -> r1\nCHECK_LIT r2 1\nYIELD r1"


def test_compile_deterministic():
    a = compile_pattern(lhs("(f ~x (g ~y ~x)) --> ~y"))
    b = compile_pattern(lhs("(f ~x (g ~y ~x)) --> ~y"))
    assert a == b


# -- execution --------------------------------------------------------------


def test_run_simple_match():
    g, (i,) = build("(* x 1)")
    matches = ematch(g, lhs("(* ~a 1) --> ~a"))
    assert len(matches) == 1
    cid, m = matches[0]
    assert cid == g.find(i)
    assert m.binding_dict() == {0: g.lookup_term(Atom("x"))}


def test_bare_variable_matches_every_class():
    g, _ = build("(f (g x))")
    assert len(ematch(g, lhs("~x --> ~x"))) == g.n_eclasses


def test_ground_pattern():
    g, (i, _) = build("(f a)", "(g b)")
    matches = ematch(g, lhs("(f a) --> done"))
    assert [c for c, _ in matches] == [g.find(i)]
    assert ematch(g, lhs("(f zzz) --> done")) == []


def test_repeated_variable_after_merge():
    g, (i,) = build("(/ (* 2 3) 6)")
    assert ematch(g, lhs("(/ ~a ~a) --> 1")) == []
    g.merge(g.lookup_term(parse_term("(* 2 3)")), g.lookup_term(Lit(6)))
    g.rebuild()
    matches = ematch(g, lhs("(/ ~a ~a) --> 1"))
    assert len(matches) == 1


def test_literal_lifting():
    g, (i,) = build("(+ 2 x)")
    matches = ematch(g, lhs("(+ ~a::number ~b) --> ~b"))
    assert len(matches) == 1
    _, m = matches[0]
    assert m.literal_dict() == {0: 2}


def test_literal_lifting_after_merge():
    # a symbolic class that also holds a literal lifts the literal
    g, (fx, two) = build("(f x)", "2")
    g.merge(g.lookup_term(Atom("x")), two)
    g.rebuild()
    matches = ematch(g, lhs("(f ~a::number) --> ~a"))
    assert len(matches) == 1
    assert matches[0][1].literal_dict() == {0: 2}


def test_inconsistent_class_detected():
    g, (two, three, fx) = build("2", "3", "(f 2)")
    g.merge(two, three)
    g.rebuild()
    with pytest.raises(InconsistentClass):
        ematch(g, lhs("(f ~a::number) --> ~a"))


def test_commutativity_match_count():
    g, _ = build("(+ (* a b) (* c d))")
    matches = ematch(g, lhs("(* ~a ~b) --> (* ~b ~a)"))
    assert len(matches) == 2


def test_determinism():
    g, _ = build("(f (g x) (g y))", "(g (g x))")
    p = lhs("(g ~x) --> ~x")
    assert ematch(g, p) == ematch(g, p)


# -- soundness --------------------------------------------------------------


def test_match_soundness_by_enumeration():
    g, _ = build("(* (sin q) (cos q))", "(* x 1)")
    for cid, m in ematch(g, lhs("(* ~a ~b) --> (* ~b ~a)")):
        a_terms = enumerate_terms(g, m.binding_dict()[0], 4)
        b_terms = enumerate_terms(g, m.binding_dict()[1], 4)
        rep = enumerate_terms(g, cid, 5)
        assert any(
            Compound("*", (ta, tb)) in rep for ta in a_terms for tb in b_terms
        )


# -- oracle equivalence -----------------------------------------------------

_ops = ["f", "g", "+"]
_leaves = [Atom("a"), Atom("b"), Lit(1), Lit(2)]


@st.composite
def graphs(draw):
    g = EGraph()
    pool = [g.add_term(t) for t in _leaves]
    for _ in range(draw(st.integers(1, 8))):
        op = draw(st.sampled_from(_ops))
        n = draw(st.integers(1, 2))
        args = tuple(draw(st.sampled_from(pool)) for _ in range(n))
        pool.append(g.add_enode(OpNode(op, args)))
    for _ in range(draw(st.integers(0, 3))):
        g.merge(draw(st.sampled_from(pool)), draw(st.sampled_from(pool)))
    g.rebuild()
    return g


@st.composite
def pattern_lines(draw, depth=3):
    def pat(d):
        if d == 0 or draw(st.booleans()):
            return draw(st.sampled_from(["~v", "~w", "a", "b", "1", "2"]))
        n = draw(st.integers(1, 2))
        op = draw(st.sampled_from(_ops))
        return f"({op} " + " ".join(pat(d - 1) for _ in range(n)) + ")"

    src = pat(depth)
    return f"{src} --> 0"


@settings(max_examples=60, deadline=None)
@given(graphs(), pattern_lines())
def test_vm_matches_naive_oracle(g, line):
    pattern = lhs(line)
    got = {
        (c, m.bindings) for c, m in ematch(g, pattern)
    }
    assert got == naive_ematch(g, pattern)
