"""Union-find e-graph with hash-consing and delayed rebuilding.

Congruence repair is deferred: merges enqueue dirty classes on a worklist and
`rebuild` restores the congruence and hashcons invariants in batch, egg-style.
Parent back-edges ((parent e-node, parent class) pairs) stored on child
classes drive the upward propagation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .errors import CapacityExceeded, UnknownId
from .terms import Atom, Compound, Lit, Number, Term, num_eq, num_key, print_number

# Sentinel for "analysis value not computable yet" (distinct from any domain
# value, including None-as-unknown).
MISSING = object()


class LitNode:
    """Leaf e-node: a numeric literal or a bare symbol."""

    __slots__ = ("value",)

    def __init__(self, value: Union[Number, str]):
        self.value = value

    def __eq__(self, other):
        if not isinstance(other, LitNode):
            return NotImplemented
        if isinstance(self.value, str) or isinstance(other.value, str):
            return self.value == other.value
        return num_eq(self.value, other.value)

    def __hash__(self):
        v = self.value
        return hash(("LitNode", v if isinstance(v, str) else num_key(v)))

    def __repr__(self):
        return f"LitNode({self.value!r})"


@dataclass(frozen=True, slots=True)
class OpNode:
    op: str
    children: tuple[int, ...]


ENode = Union[LitNode, OpNode]


class EClass:
    __slots__ = ("id", "nodes", "parents", "data")

    def __init__(self, cid: int):
        self.id = cid
        self.nodes: dict[ENode, None] = {}  # insertion-ordered node set
        self.parents: list[tuple[ENode, int]] = []
        self.data: dict[str, object] = {}


class EGraph:
    def __init__(self, node_limit: Optional[int] = None):
        self._uf: list[int] = []
        self.memo: dict[ENode, int] = {}
        self.classes: dict[int, EClass] = {}
        self.worklist: list[int] = []
        self.root: Optional[int] = None
        self.node_limit = node_limit
        self.version = 0
        self.analyses: dict[str, object] = {}  # registered (eager) analyses
        self.sign_assumptions: Optional[dict[str, float]] = None
        self._caches: dict[str, tuple] = {}

    # -- union-find --------------------------------------------------------

    def find(self, i: int) -> int:
        uf = self._uf
        if not 0 <= i < len(uf):
            raise UnknownId(i)
        root = i
        while uf[root] != root:
            root = uf[root]
        while uf[i] != root:  # path compression
            uf[i], i = root, uf[i]
        return root

    def _alloc(self) -> int:
        cid = len(self._uf)
        self._uf.append(cid)
        return cid

    # -- adding ------------------------------------------------------------

    def canonicalize(self, n: ENode) -> ENode:
        if isinstance(n, OpNode):
            return OpNode(n.op, tuple(self.find(c) for c in n.children))
        return n

    def add_enode(self, n: ENode) -> int:
        n = self.canonicalize(n)
        cid = self.memo.get(n)
        if cid is not None:
            return self.find(cid)
        if self.node_limit is not None and len(self.memo) >= self.node_limit:
            raise CapacityExceeded(f"e-node limit {self.node_limit} reached")
        cid = self._alloc()
        cls = EClass(cid)
        cls.nodes[n] = None
        self.classes[cid] = cls
        self.memo[n] = cid
        if isinstance(n, OpNode):
            for ch in n.children:
                self.classes[self.find(ch)].parents.append((n, cid))
        self.version += 1
        for an in self.analyses.values():
            v = an.make(self, n)
            if v is not MISSING:
                cls.data[an.name] = v
                if an.modify is not None:
                    an.modify(self, cid)
        return cid

    def add_term(self, t: Term) -> int:
        cid = self._add_term(t)
        if self.root is None:
            self.root = cid
        return cid

    def _add_term(self, t: Term) -> int:
        if isinstance(t, Atom):
            return self.add_enode(LitNode(t.name))
        if isinstance(t, Lit):
            return self.add_enode(LitNode(t.value))
        if isinstance(t, Compound):
            children = tuple(self._add_term(a) for a in t.args)
            return self.add_enode(OpNode(t.op, children))
        raise TypeError(f"not a term: {t!r}")

    def lookup(self, n: ENode) -> Optional[int]:
        cid = self.memo.get(self.canonicalize(n))
        return None if cid is None else self.find(cid)

    def lookup_term(self, t: Term) -> Optional[int]:
        if isinstance(t, Atom):
            return self.lookup(LitNode(t.name))
        if isinstance(t, Lit):
            return self.lookup(LitNode(t.value))
        children = []
        for a in t.args:
            cid = self.lookup_term(a)
            if cid is None:
                return None
            children.append(cid)
        return self.lookup(OpNode(t.op, tuple(children)))

    # -- merging and rebuilding --------------------------------------------

    def merge(self, a: int, b: int) -> int:
        a, b = self.find(a), self.find(b)
        if a == b:
            return a
        ca, cb = self.classes[a], self.classes[b]
        # union by parent-list size, ties to the smaller id
        if (len(cb.parents), -b) > (len(ca.parents), -a):
            a, b, ca, cb = b, a, cb, ca
        self._uf[b] = a
        ca.nodes.update(cb.nodes)
        ca.parents.extend(cb.parents)
        for an in self.analyses.values():
            da, db = ca.data.get(an.name, MISSING), cb.data.get(an.name, MISSING)
            if db is not MISSING:
                ca.data[an.name] = db if da is MISSING else an.join(da, db)
        del self.classes[b]
        self.worklist.append(a)
        self.version += 1
        for an in self.analyses.values():
            if an.modify is not None and an.name in ca.data:
                an.modify(self, a)
        return a

    def rebuild(self) -> None:
        while True:
            while self.worklist:
                todo = []
                seen = set()
                for i in self.worklist:
                    c = self.find(i)
                    if c not in seen:
                        seen.add(c)
                        todo.append(c)
                self.worklist = []
                for cid in todo:
                    self._repair(cid)
            if not self.analyses:
                return
            for an in self.analyses.values():
                refresh_analysis(self, an)
            if not self.worklist:  # a modify hook may have merged classes
                return

    def _repair(self, cid: int) -> None:
        cls = self.classes.get(self.find(cid))
        if cls is None:
            return
        for pnode, pid in cls.parents:
            self.memo.pop(pnode, None)
        new_parents: dict[ENode, int] = {}
        for pnode, pid in cls.parents:
            pnode2 = self.canonicalize(pnode)
            pid = self.find(pid)
            if pnode2 in new_parents:
                pid = self.merge(new_parents[pnode2], pid)
            new_parents[pnode2] = self.find(pid)
        cls = self.classes[self.find(cid)]
        cls.parents = list(new_parents.items())
        for pnode, pid in cls.parents:
            self.memo[pnode] = pid
        # re-canonicalize own node set
        nodes: dict[ENode, None] = {}
        for n in cls.nodes:
            nodes[self.canonicalize(n)] = None
        cls.nodes = nodes
        for n in nodes:
            self.memo[n] = self.find(cid)

    # -- inspection --------------------------------------------------------

    @property
    def n_eclasses(self) -> int:
        return len(self.classes)

    @property
    def n_enodes(self) -> int:
        return sum(len(c.nodes) for c in self.classes.values())

    def canonical_ids(self) -> list[int]:
        return sorted(self.classes.keys())

    def class_nodes(self, cid: int) -> Iterable[ENode]:
        return self.classes[self.find(cid)].nodes.keys()

    def getdata(self, cid: int, name: str, default=None):
        return self.classes[self.find(cid)].data.get(name, default)

    def dump(self) -> str:
        lines = []
        for cid in self.canonical_ids():
            cls = self.classes[cid]
            parts = [_node_str(n) for n in cls.nodes]
            line = f"c{cid}: " + ", ".join(parts)
            if cls.data:
                data = ", ".join(f"{k}={v}" for k, v in sorted(cls.data.items()))
                line += f" [data: {data}]"
            lines.append(line)
        return "\n".join(lines)

    def to_dot(self) -> str:
        lines = ["digraph egraph {", "  compound=true;"]
        for cid in self.canonical_ids():
            lines.append(f"  subgraph cluster_{cid} {{")
            lines.append(f'    label="c{cid}";')
            for k, n in enumerate(self.class_nodes(cid)):
                lines.append(f'    n{cid}_{k} [label="{_node_str(n)}"];')
            lines.append("  }")
        for cid in self.canonical_ids():
            for k, n in enumerate(self.class_nodes(cid)):
                if isinstance(n, OpNode):
                    for ch in n.children:
                        ch = self.find(ch)
                        lines.append(f"  n{cid}_{k} -> n{ch}_0;")
        lines.append("}")
        return "\n".join(lines)


def _node_str(n: ENode) -> str:
    if isinstance(n, LitNode):
        return n.value if isinstance(n.value, str) else print_number(n.value)
    inner = " ".join(f"c{c}" for c in n.children)
    return f"({n.op} {inner})" if inner else f"({n.op})"


def refresh_analysis(g: EGraph, analysis, max_passes: Optional[int] = None) -> None:
    """Run make/join (and modify) to fixpoint over the whole graph."""
    from .errors import AnalysisDiverged

    limit = max_passes if max_passes is not None else 10 * max(1, g.n_eclasses)
    name = analysis.name
    for _ in range(limit):
        changed = False
        for cid in g.canonical_ids():
            cls = g.classes.get(cid)
            if cls is None:  # merged away by a modify hook
                continue
            acc = MISSING
            for n in list(cls.nodes):
                v = analysis.make(g, n)
                if v is MISSING:
                    continue
                acc = v if acc is MISSING else analysis.join(acc, v)
            if acc is MISSING:
                continue
            old = cls.data.get(name, MISSING)
            if old is not MISSING:
                acc = analysis.join(old, acc)
            if old is MISSING or not _data_eq(old, acc):
                cls.data[name] = acc
                changed = True
                if analysis.modify is not None:
                    analysis.modify(g, cid)
        if not changed:
            return
    raise AnalysisDiverged(f"analysis {name} did not stabilize in {limit} passes")


def _data_eq(a, b) -> bool:
    if isinstance(a, float) and isinstance(b, float) and math.isnan(a) and math.isnan(b):
        return True
    return a == b
