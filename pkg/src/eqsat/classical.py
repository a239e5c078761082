"""Classical (syntactic) rewriting.

The matcher compiler turns a pattern into a chain of per-node matcher
procedures linked by continuation callbacks, in the style of Sussman's
flexible pattern matcher. Segment variables enumerate splits left to right,
shortest first; the first successful substitution wins.
"""

from __future__ import annotations

from typing import Callable, Optional, Sequence, Union

from .errors import ContractViolation, UnsupportedRuleKind
from .rules import (
    PatLit,
    PatSegment,
    PatTerm,
    PatVar,
    Pattern,
    Rule,
    RuleKind,
    resolve_predicate,
)
from .terms import Atom, Compound, Lit, Term, eval_builtin, UnknownBuiltin

Substitution = dict[int, Union[Term, tuple[Term, ...]]]
Rewriter = Callable[[Term], Optional[Term]]

_matcher_cache: dict[int, tuple[Rule, Callable]] = {}


def compile_matcher(lhs: Pattern) -> Callable[[Term], Optional[Substitution]]:
    """Compile a pattern into a root matcher returning the first substitution."""
    m = _compile_one(lhs)

    def match_root(t: Term) -> Optional[Substitution]:
        return m(t, {}, lambda b: b)

    return match_root


def _check_pred(ref, t: Term) -> bool:
    if ref is None:
        return True
    return resolve_predicate(ref).classical(t, ref.params)


def _compile_one(p: Pattern):
    """Matcher for a single term position: fn(term, bindings, succeed)."""
    if isinstance(p, PatVar):
        idx, pred = p.index, p.predicate

        def match_var(t, b, k):
            if idx in b:
                return k(b) if b[idx] == t else None
            if not _check_pred(pred, t):
                return None
            b2 = dict(b)
            b2[idx] = t
            return k(b2)

        return match_var
    if isinstance(p, PatLit):
        want: Term = Atom(p.value) if isinstance(p.value, str) else Lit(p.value)

        def match_lit(t, b, k):
            return k(b) if t == want else None

        return match_lit
    if isinstance(p, PatTerm):
        seq = _compile_seq(p.args)
        op = p.op
        if isinstance(op, PatVar):
            op_idx = op.index

            def match_term_varop(t, b, k):
                if not isinstance(t, Compound):
                    return None
                bound = Atom(t.op)
                if op_idx in b:
                    if b[op_idx] != bound:
                        return None
                    b2 = b
                else:
                    b2 = dict(b)
                    b2[op_idx] = bound
                return seq(t.args, 0, b2, lambda i, b3: k(b3) if i == len(t.args) else None)

            return match_term_varop

        def match_term(t, b, k):
            if not isinstance(t, Compound) or t.op != op:
                return None
            return seq(t.args, 0, b, lambda i, b2: k(b2) if i == len(t.args) else None)

        return match_term
    raise ContractViolation("segment pattern outside argument position")


def _compile_seq(pats: Sequence[Pattern]):
    """Matcher over a run of sibling terms: fn(terms, i, bindings, succeed)."""
    matchers = []
    for p in pats:
        if isinstance(p, PatSegment):
            matchers.append(_segment_matcher(p))
        else:
            matchers.append(_element_matcher(_compile_one(p)))

    def run(ts, i, b, k, js=0):
        if js == len(matchers):
            return k(i, b)
        return matchers[js](ts, i, b, lambda i2, b2: run(ts, i2, b2, k, js + 1))

    return run


def _element_matcher(m):
    def match_elem(ts, i, b, k):
        if i >= len(ts):
            return None
        return m(ts[i], b, lambda b2: k(i + 1, b2))

    return match_elem


def _segment_matcher(p: PatSegment):
    idx, pred = p.index, p.predicate

    def match_seg(ts, i, b, k):
        if idx in b:
            bound = b[idx]
            n = len(bound)
            if ts[i : i + n] == bound:
                return k(i + n, b)
            return None
        for n in range(0, len(ts) - i + 1):  # shortest split first
            chunk = tuple(ts[i : i + n])
            if pred is not None and not all(_check_pred(pred, t) for t in chunk):
                continue
            b2 = dict(b)
            b2[idx] = chunk
            r = k(i + n, b2)
            if r is not None:
                return r
        return None

    return match_seg


# ---------------------------------------------------------------------------
# Instantiation and rule application


def instantiate(rhs: Pattern, s: Substitution) -> Term:
    if isinstance(rhs, PatVar):
        if rhs.index not in s:
            raise ContractViolation(f"unbound variable ~{rhs.name}")
        v = s[rhs.index]
        if isinstance(v, tuple):
            raise ContractViolation(f"segment ~~{rhs.name} used as a single term")
        return v
    if isinstance(rhs, PatLit):
        return Atom(rhs.value) if isinstance(rhs.value, str) else Lit(rhs.value)
    if isinstance(rhs, PatSegment):
        raise ContractViolation("segment outside argument position")
    op = rhs.op
    if isinstance(op, PatVar):
        bound = s.get(op.index)
        if not isinstance(bound, Atom):
            raise ContractViolation(f"operation variable ~{op.name} not bound to a symbol")
        op = bound.name
    args: list[Term] = []
    for a in rhs.args:
        if isinstance(a, PatSegment):
            chunk = s.get(a.index)
            if not isinstance(chunk, tuple):
                raise ContractViolation(f"unbound segment ~~{a.name}")
            args.extend(chunk)
        else:
            args.append(instantiate(a, s))
    return Compound(op, tuple(args))


def eval_dynamic(rhs: Pattern, s: Substitution) -> Term:
    """Instantiate a dynamic RHS, folding builtin nodes over literal children."""
    if isinstance(rhs, PatTerm) and isinstance(rhs.op, str):
        args: list[Term] = []
        for a in rhs.args:
            if isinstance(a, PatSegment):
                chunk = s.get(a.index)
                if not isinstance(chunk, tuple):
                    raise ContractViolation(f"unbound segment ~~{a.name}")
                args.extend(chunk)
            else:
                args.append(eval_dynamic(a, s))
        if len(args) == 2 and all(isinstance(a, Lit) for a in args):
            try:
                return Lit(eval_builtin(rhs.op, [a.value for a in args]))
            except UnknownBuiltin:
                pass
        return Compound(rhs.op, tuple(args))
    return instantiate(rhs, s)


def apply_rule(rule: Rule, t: Term) -> Optional[Term]:
    """Apply a rewrite or dynamic rule at the root; None when not matching."""
    if rule.kind not in (RuleKind.REWRITE, RuleKind.DYNAMIC):
        raise UnsupportedRuleKind(
            f"{rule.kind.value} rules are not supported by the classical backend"
        )
    cached = _matcher_cache.get(id(rule))
    if cached is None or cached[0] is not rule:
        cached = (rule, compile_matcher(rule.lhs))
        _matcher_cache[id(rule)] = cached
    sub = cached[1](t)
    if sub is None:
        return None
    if rule.kind is RuleKind.DYNAMIC:
        return eval_dynamic(rule.rhs, sub)
    return instantiate(rule.rhs, sub)


def rule_rewriter(rule: Rule) -> Rewriter:
    return lambda t: apply_rule(rule, t)


# ---------------------------------------------------------------------------
# Rewriter combinators


def Empty() -> Rewriter:
    return lambda t: None


def Chain(rws: Sequence[Rewriter]) -> Rewriter:
    rws = list(rws)

    def chained(t):
        cur, changed = t, False
        for rw in rws:
            r = rw(cur)
            if r is not None:
                cur, changed = r, True
        return cur if changed else None

    return chained


def RestartedChain(rws: Sequence[Rewriter]) -> Rewriter:
    rws = list(rws)
    plain = Chain(rws)

    def restarted(t):
        for rw in rws:
            r = rw(t)
            if r is not None:
                r2 = plain(r)
                return r2 if r2 is not None else r
        return None

    return restarted


def IfElse(cond: Callable[[Term], bool], rw1: Rewriter, rw2: Rewriter) -> Rewriter:
    return lambda t: rw1(t) if cond(t) else rw2(t)


def If(cond: Callable[[Term], bool], rw: Rewriter) -> Rewriter:
    return IfElse(cond, rw, Empty())


def PassThrough(rw: Rewriter) -> Rewriter:
    def passthrough(t):
        r = rw(t)
        return r if r is not None else t

    return passthrough


def Postwalk(rw: Rewriter, threaded: bool = False, thread_cutoff: int = 100) -> Rewriter:
    # threaded is accepted for interface parity; the walk is serial and the
    # contract is result-equality with the serial traversal.
    def walk(t):
        changed = False
        if isinstance(t, Compound):
            new_args = []
            for a in t.args:
                r = walk(a)
                if r is not None:
                    changed = True
                    new_args.append(r)
                else:
                    new_args.append(a)
            if changed:
                t = Compound(t.op, tuple(new_args))
        r = rw(t)
        if r is not None:
            return r
        return t if changed else None

    return walk


def Prewalk(rw: Rewriter, threaded: bool = False, thread_cutoff: int = 100) -> Rewriter:
    def walk(t):
        r = rw(t)
        changed = r is not None
        cur = r if changed else t
        if isinstance(cur, Compound):
            new_args = []
            child_changed = False
            for a in cur.args:
                ra = walk(a)
                if ra is not None:
                    child_changed = True
                    new_args.append(ra)
                else:
                    new_args.append(a)
            if child_changed:
                cur = Compound(cur.op, tuple(new_args))
                changed = True
        return cur if changed else None

    return walk


def Fixpoint(rw: Rewriter) -> Rewriter:
    def fixed(t):
        cur, changed = t, False
        while True:
            r = rw(cur)
            if r is None or r == cur:
                return cur if changed else None
            cur, changed = r, True

    return fixed


def FixpointNoCycle(rw: Rewriter) -> Rewriter:
    def fixed(t):
        seen = {t}
        cur, changed = t, False
        while True:
            r = rw(cur)
            if r is None or r == cur or r in seen:
                return cur if changed else None
            seen.add(r)
            cur, changed = r, True

    return fixed


# ---------------------------------------------------------------------------
# Strategy mini-language for the CLI

DEFAULT_STRATEGY = "fixpoint(postwalk(chain(all)))"

_STRATEGY_NAMES = {
    "prewalk": Prewalk,
    "postwalk": Postwalk,
    "fixpoint": Fixpoint,
    "passthrough": PassThrough,
}


def parse_strategy(text: str, rulesets: dict[str, list[Rewriter]]) -> Rewriter:
    """Parse e.g. "fixpoint(postwalk(chain(all)))" against named rulesets."""
    text = text.strip()

    def parse(s: str) -> Rewriter:
        s = s.strip()
        if "(" not in s:
            raise ValueError(f"bad strategy fragment {s!r}")
        name, _, rest = s.partition("(")
        if not rest.endswith(")"):
            raise ValueError(f"unbalanced parens in strategy {s!r}")
        inner = rest[:-1]
        name = name.strip()
        if name == "chain":
            key = inner.strip()
            if key not in rulesets:
                raise ValueError(f"unknown ruleset {key!r}")
            return Chain(rulesets[key])
        if name not in _STRATEGY_NAMES:
            raise ValueError(f"unknown strategy combinator {name!r}")
        return _STRATEGY_NAMES[name](parse(inner))

    return parse(text)
