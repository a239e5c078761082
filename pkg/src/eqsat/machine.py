"""Backtracking virtual machine for e-graph pattern matching.

Patterns compile to short instruction programs; machine registers hold
e-class ids. Maximal ground subpatterns are resolved once per search (lookup
only, never growing the graph) and checked with a single instruction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .egraph import EGraph, LitNode, OpNode
from .errors import InconsistentClass, SegmentUnsupported
from .rules import (
    PatLit,
    PatSegment,
    PatTerm,
    PatVar,
    Pattern,
    PredicateRef,
    class_literals,
    resolve_predicate,
)
from .terms import Atom, Compound, Lit, Number, Term, num_eq, print_term


@dataclass(frozen=True)
class Bind:
    reg: int
    op: str
    arity: int
    out_base: int


@dataclass(frozen=True)
class CheckLit:
    reg: int
    value: Union[Number, str]


@dataclass(frozen=True)
class CheckPredicate:
    reg: int
    pred: PredicateRef
    bindlit: bool


@dataclass(frozen=True)
class Compare:
    reg_i: int
    reg_j: int


@dataclass(frozen=True)
class LookupGround:
    reg: int
    ground: Term


@dataclass(frozen=True)
class Yield:
    var_regs: tuple[int, ...]


Instruction = Union[Bind, CheckLit, CheckPredicate, Compare, LookupGround, Yield]


@dataclass(frozen=True)
class EMatchProgram:
    instructions: tuple[Instruction, ...]
    n_regs: int
    ground_subterms: tuple[Term, ...]


@dataclass(frozen=True)
class EMatch:
    class_id: int
    bindings: tuple[tuple[int, int], ...]  # (var index, class id), sorted
    literal_bindings: tuple[tuple[int, Union[Number, str]], ...]

    def binding_dict(self) -> dict[int, int]:
        return dict(self.bindings)

    def literal_dict(self) -> dict[int, Union[Number, str]]:
        return dict(self.literal_bindings)


_LIFTING = {"number", "int", "real"}


def _is_ground(p: Pattern) -> bool:
    if isinstance(p, (PatVar, PatSegment)):
        return False
    if isinstance(p, PatLit):
        return True
    if isinstance(p.op, PatVar):
        return False
    return all(_is_ground(a) for a in p.args)


def _ground_term(p: Pattern) -> Term:
    if isinstance(p, PatLit):
        return Atom(p.value) if isinstance(p.value, str) else Lit(p.value)
    return Compound(p.op, tuple(_ground_term(a) for a in p.args))


def compile_pattern(p: Pattern) -> EMatchProgram:
    instrs: list[Instruction] = []
    grounds: list[Term] = []
    var_regs: dict[int, int] = {}
    next_reg = 1

    def emit(pat: Pattern, reg: int):
        nonlocal next_reg
        if isinstance(pat, PatSegment):
            raise SegmentUnsupported(
                "segment variables are not supported by the e-graph matcher"
            )
        if isinstance(pat, PatVar):
            if pat.index in var_regs:
                instrs.append(Compare(var_regs[pat.index], reg))
                return
            var_regs[pat.index] = reg
            if pat.predicate is not None:
                pred = resolve_predicate(pat.predicate)
                instrs.append(
                    CheckPredicate(reg, pat.predicate, pred.lift in _LIFTING)
                )
            return
        if isinstance(pat, PatLit):
            instrs.append(CheckLit(reg, pat.value))
            return
        if isinstance(pat.op, PatVar):
            raise SegmentUnsupported(
                "operation-position variables are not supported by the e-graph matcher"
            )
        if _is_ground(pat):
            gt = _ground_term(pat)
            grounds.append(gt)
            instrs.append(LookupGround(reg, gt))
            return
        base = next_reg
        next_reg += len(pat.args)
        instrs.append(Bind(reg, pat.op, len(pat.args), base))
        for k, a in enumerate(pat.args):
            emit(a, base + k)

    emit(p, 0)
    n_vars = len(var_regs)
    yield_regs = tuple(var_regs[i] for i in sorted(var_regs))
    assert sorted(var_regs) == list(range(n_vars))
    instrs.append(Yield(yield_regs))
    return EMatchProgram(tuple(instrs), next_reg, tuple(grounds))


def disassemble(prog: EMatchProgram) -> str:
    lines = []
    for ins in prog.instructions:
        if isinstance(ins, Bind):
            lines.append(f"BIND r{ins.reg} {ins.op} /{ins.arity} -> r{ins.out_base}")
        elif isinstance(ins, CheckLit):
            lines.append(f"CHECK_LIT r{ins.reg} {ins.value}")
        elif isinstance(ins, CheckPredicate):
            lift = " lift" if ins.bindlit else ""
            lines.append(f"CHECK_PRED r{ins.reg} {ins.pred.name}{lift}")
        elif isinstance(ins, Compare):
            lines.append(f"COMPARE r{ins.reg_i} r{ins.reg_j}")
        elif isinstance(ins, LookupGround):
            lines.append(f"LOOKUP r{ins.reg} {print_term(ins.ground)}")
        else:
            regs = " ".join(f"r{r}" for r in ins.var_regs)
            lines.append(f"YIELD {regs}")
    return "\n".join(lines)


def run_program(
    g: EGraph,
    prog: EMatchProgram,
    root: int,
    ground_ids: Optional[dict[Term, int]] = None,
) -> list[EMatch]:
    """Depth-first execution; enumeration follows class-node insertion order."""
    if ground_ids is None:
        ground_ids = resolve_grounds(g, prog)
        if ground_ids is None:
            return []
    regs: list[Optional[int]] = [None] * prog.n_regs
    regs[0] = g.find(root)
    lit_regs: dict[int, Union[Number, str]] = {}
    out: list[EMatch] = []
    instrs = prog.instructions

    def step(pc: int):
        ins = instrs[pc]
        if isinstance(ins, Bind):
            cls_nodes = list(g.class_nodes(regs[ins.reg]))
            for node in cls_nodes:
                if (
                    isinstance(node, OpNode)
                    and node.op == ins.op
                    and len(node.children) == ins.arity
                ):
                    for k, ch in enumerate(node.children):
                        regs[ins.out_base + k] = g.find(ch)
                    step(pc + 1)
            return
        if isinstance(ins, CheckLit):
            want = LitNode(ins.value)
            if any(n == want for n in g.class_nodes(regs[ins.reg])):
                step(pc + 1)
            return
        if isinstance(ins, CheckPredicate):
            cid = g.find(regs[ins.reg])
            pred = resolve_predicate(ins.pred)
            if not pred.egraph(g, cid, ins.pred.params):
                return
            if ins.bindlit:
                kind = pred.lift or "number"
                lits = class_literals(g, cid, kind)
                if len(lits) > 1:
                    raise InconsistentClass(
                        f"class c{cid} holds distinct literals {lits}"
                    )
                if lits:
                    lit_regs[ins.reg] = lits[0]
                    step(pc + 1)
                    del lit_regs[ins.reg]
                    return
            step(pc + 1)
            return
        if isinstance(ins, Compare):
            if g.find(regs[ins.reg_i]) == g.find(regs[ins.reg_j]):
                step(pc + 1)
            return
        if isinstance(ins, LookupGround):
            if g.find(regs[ins.reg]) == g.find(ground_ids[ins.ground]):
                step(pc + 1)
            return
        # Yield
        bindings = tuple(
            (i, g.find(regs[r])) for i, r in enumerate(ins.var_regs)
        )
        lits = tuple(
            (i, lit_regs[r]) for i, r in enumerate(ins.var_regs) if r in lit_regs
        )
        out.append(EMatch(g.find(root), bindings, lits))

    step(0)
    return out


def resolve_grounds(g: EGraph, prog: EMatchProgram) -> Optional[dict[Term, int]]:
    """Lookup-only pre-resolution; None when any ground subterm is absent."""
    ids: dict[Term, int] = {}
    for gt in prog.ground_subterms:
        cid = g.lookup_term(gt)
        if cid is None:
            return None
        ids[gt] = cid
    return ids


def ematch(g: EGraph, p: Pattern) -> list[tuple[int, EMatch]]:
    prog = compile_pattern(p)
    return ematch_program(g, prog)


def ematch_program(g: EGraph, prog: EMatchProgram) -> list[tuple[int, EMatch]]:
    ground_ids = resolve_grounds(g, prog)
    if ground_ids is None:
        return []
    out: list[tuple[int, EMatch]] = []
    seen = set()
    for cid in g.canonical_ids():
        for m in run_program(g, prog, cid, ground_ids):
            key = (m.class_id, m.bindings, m.literal_bindings)
            if key not in seen:
                seen.add(key)
                out.append((m.class_id, m))
    return out
