"""Bundled theories and the end-to-end stream fusion optimizer."""

from __future__ import annotations

from importlib import resources
from typing import Optional

from ..analysis import astsize, extract
from ..classical import Chain, Fixpoint, Postwalk, rule_rewriter
from ..egraph import EGraph
from ..rules import RuleKind, Theory, parse_theory
from ..saturation import Report, SaturationParams, saturate
from ..terms import Term, inline_anonymous

BUNDLED = (
    "comm_monoid",
    "comm_group",
    "folder",
    "div_sim",
    "stream",
    "normalize",
    "fold",
    "near_zero_opt",
)


def bundled_source(name: str) -> str:
    if name not in BUNDLED:
        raise KeyError(f"no bundled theory named {name!r}")
    return (
        resources.files(__package__).joinpath("data", f"{name}.theory").read_text()
    )


def load_bundled(name: str) -> Theory:
    return parse_theory(bundled_source(name), name=name)


def stream_optimize(
    t: Term, params: Optional[SaturationParams] = None
) -> tuple[Term, Report]:
    """Saturate with the stream theory, extract by astsize, then clean up the
    result classically (lambda inlining, helper lowering, constant folding)."""
    g = EGraph()
    root = g.add_term(t)
    report = saturate(g, load_bundled("stream"), params)
    best = extract(g, astsize, root)
    classical_rules = [
        rule_rewriter(r)
        for th in (load_bundled("normalize"), load_bundled("fold"))
        for r in th.rules
        if r.kind in (RuleKind.REWRITE, RuleKind.DYNAMIC)
    ]
    cleanup = Fixpoint(Postwalk(Chain([inline_anonymous] + classical_rules)))
    out = cleanup(best)
    if out is None or _astsize(out) > _astsize(best):
        # helper lowering (fand -> lambda) can bloat a term whose functions
        # stay opaque; keep the extracted form unless cleanup paid off
        return best, report
    return out, report


def _astsize(t: Term) -> int:
    return 1 + sum(_astsize(a) for a in getattr(t, "args", ()))
