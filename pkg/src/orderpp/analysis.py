"""Exhaustive per-length analysis of protocols.

Everything here works on the explicit graph of configurations of one length:
forward exploration, SCC condensation, stability, membership and the
decider / semi-decider checks.  Configurations are interned as tuples of
small integers by an :class:`Engine`, which also memoizes the outcomes of every
pair of states; this keeps exploration of product protocols affordable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import AlphabetMismatch, BudgetExceeded
from .protocol import (
    BaseProtocol,
    Opinion,
    Pred,
    Protocol,
    StepWitness,
    _check_config,
    render_config,
    replay,
)
from .rng import SplitMix64

DEFAULT_BUDGET = 5_000_000


class Engine:
    """Interns states of one protocol and generates successors of coded configurations."""

    def __init__(self, p: BaseProtocol):
        self.p = p
        self.codes: dict = {}
        self.states: list = []
        self.top: list = []
        self._pairs: dict = {}

    def code(self, state) -> int:
        c = self.codes.get(state)
        if c is None:
            c = len(self.states)
            self.codes[state] = c
            self.states.append(state)
            self.top.append(self.p.opinion(state) is Opinion.TOP)
        return c

    def encode(self, config) -> tuple:
        return tuple(self.code(s) for s in config)

    def decode(self, coded) -> tuple:
        st = self.states
        return tuple(st[x] for x in coded)

    def _pair(self, a: int, b: int):
        outs = []
        sa, sb = self.states[a], self.states[b]
        for pred, r, s, key in self.p.outcomes(sa, sb):
            if r == sa and s == sb:
                continue
            kind = 0 if pred is Pred.TRUE else (1 if pred is Pred.LT else 2)
            outs.append((kind, self.code(r), self.code(s), key))
        outs = tuple(outs)
        self._pairs[(a, b)] = outs
        return outs

    def successors(self, c: tuple) -> list:
        """Sorted list of (key, i, j, target) with 1-based positions."""
        pairs = self._pairs
        n = len(c)
        found = []
        for i in range(n):
            ci = c[i]
            for j in range(n):
                if i == j:
                    continue
                outs = pairs.get((ci, c[j]))
                if outs is None:
                    outs = self._pair(ci, c[j])
                for kind, r, s, key in outs:
                    if kind == 1 and i > j:
                        continue
                    if kind == 2 and j != i + 1:
                        continue
                    d = list(c)
                    d[i] = r
                    d[j] = s
                    found.append((key, i + 1, j + 1, tuple(d)))
        if len(found) > 1:
            found.sort(key=_order)
        return found

    def targets(self, c: tuple) -> list:
        """Distinct successor configurations, without keys or ordering guarantees beyond determinism."""
        pairs = self._pairs
        n = len(c)
        seen = set()
        out = []
        for i in range(n):
            ci = c[i]
            for j in range(n):
                if i == j:
                    continue
                outs = pairs.get((ci, c[j]))
                if outs is None:
                    outs = self._pair(ci, c[j])
                for kind, r, s, _key in outs:
                    if kind == 1 and i > j:
                        continue
                    if kind == 2 and j != i + 1:
                        continue
                    d = list(c)
                    d[i] = r
                    d[j] = s
                    d = tuple(d)
                    if d not in seen:
                        seen.add(d)
                        out.append(d)
        return out

    def consensus(self, c: tuple) -> Opinion | None:
        top = self.top
        first = top[c[0]]
        for x in c:
            if top[x] != first:
                return None
        return Opinion.TOP if first else Opinion.BOT


def _order(item):
    return (item[0], item[1], item[2])


# --- graphs ---------------------------------------------------------------

class ConfigGraph:
    """Forward closure of a set of root configurations.

    ``adj[v]`` lists successor node indices (no self-loops, no duplicates);
    ``witness[v][k]`` is the first witness (in rule-then-position order)
    producing ``adj[v][k]`` when witnesses are kept.
    """

    def __init__(self, engine: Engine, coded: list, adj: list, witness, roots: list,
                 parent: list):
        self.engine = engine
        self.protocol = engine.p
        self.coded = coded
        self.adj = adj
        self.witness = witness
        self.roots = roots
        self.parent = parent
        self._index = None

    def __len__(self):
        return len(self.coded)

    def node(self, v: int) -> tuple:
        return self.engine.decode(self.coded[v])

    @property
    def nodes(self) -> list:
        return [self.node(v) for v in range(len(self.coded))]

    def index(self, config) -> int:
        if self._index is None:
            self._index = {c: v for v, c in enumerate(self.coded)}
        return self._index[self.engine.encode(config)]

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adj)

    def edges(self) -> list:
        """(source, target, witness) triples in node order."""
        out = []
        for v, targets in enumerate(self.adj):
            for k, t in enumerate(targets):
                w = self.witness[v][k] if self.witness is not None else None
                out.append((v, t, w))
        return out

    def path_to(self, v: int) -> list:
        """Witnesses of a BFS path from a root to node ``v``."""
        chain = []
        while self.parent[v] >= 0:
            chain.append(v)
            v = self.parent[v]
        chain.reverse()
        steps = []
        prev = v
        for nxt in chain:
            target = self.coded[nxt]
            for key, i, j, d in self.engine.successors(self.coded[prev]):
                if d == target:
                    steps.append(StepWitness(key, (i, j)))
                    break
            prev = nxt
        return steps


def explore(p: BaseProtocol, roots: Iterable, budget: int = DEFAULT_BUDGET,
            keep_witnesses: bool = True, engine: Engine | None = None) -> ConfigGraph:
    """Breadth-first forward closure of ``roots`` (configurations of equal length)."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    eng = engine if engine is not None else Engine(p)
    index: dict = {}
    coded: list = []
    parent: list = []
    length = None
    for r in roots:
        r = tuple(r)
        _check_config(p, r)
        if length is None:
            length = len(r)
        elif len(r) != length:
            raise ValueError("all roots must have the same length")
        c = eng.encode(r)
        if c not in index:
            if len(coded) >= budget:
                raise BudgetExceeded(f"more than {budget} configurations", visited=len(coded))
            index[c] = len(coded)
            coded.append(c)
            parent.append(-1)
    root_ids = list(range(len(coded)))
    adj: list = []
    wits: list | None = [] if keep_witnesses else None
    head = 0
    if not keep_witnesses:
        while head < len(coded):
            targets = []
            for d in eng.targets(coded[head]):
                t = index.get(d)
                if t is None:
                    if len(coded) >= budget:
                        raise BudgetExceeded(f"more than {budget} configurations",
                                             visited=len(coded))
                    t = len(coded)
                    index[d] = t
                    coded.append(d)
                    parent.append(head)
                targets.append(t)
            adj.append(targets)
            head += 1
        return ConfigGraph(eng, coded, adj, None, root_ids, parent)
    while head < len(coded):
        c = coded[head]
        targets = []
        seen_t = set()
        tw = []
        for key, i, j, d in eng.successors(c):
            t = index.get(d)
            if t is None:
                if len(coded) >= budget:
                    raise BudgetExceeded(f"more than {budget} configurations", visited=len(coded))
                t = len(coded)
                index[d] = t
                coded.append(d)
                parent.append(head)
            elif t in seen_t:
                continue
            seen_t.add(t)
            targets.append(t)
            tw.append(StepWitness(key, (i, j)))
        adj.append(targets)
        wits.append(tw)
        head += 1
    return ConfigGraph(eng, coded, adj, wits, root_ids, parent)


# --- SCCs -----------------------------------------------------------------

def tarjan(adj: Sequence) -> tuple:
    """Iterative Tarjan; components are emitted sinks first.

    Returns ``(comp_of, components)``.  Every successor component of component
    ``c`` has an index smaller than ``c``.
    """
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list = []
    comp = [-1] * n
    comps: list = []
    counter = 0
    for s in range(n):
        if index[s] != -1:
            continue
        index[s] = low[s] = counter
        counter += 1
        stack.append(s)
        on_stack[s] = True
        work = [(s, 0)]
        while work:
            v, k = work[-1]
            nbrs = adj[v]
            if k < len(nbrs):
                work[-1] = (v, k + 1)
                w = nbrs[k]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    if low[v] < low[u]:
                        low[u] = low[v]
                if low[v] == index[v]:
                    cid = len(comps)
                    members = []
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        comp[w] = cid
                        members.append(w)
                        if w == v:
                            break
                    members.reverse()
                    comps.append(members)
    return comp, comps


@dataclass
class SccReport:
    comp_of: list
    components: list
    successors: list            # condensation DAG: successor component ids
    bottom: list                # ids of bottom components
    consensus: list             # per component: Opinion or None
    stable: list                # per component: Opinion b if every member is b-stable

    def node_stable(self, v: int) -> Opinion | None:
        return self.stable[self.comp_of[v]]


def bscc_condensation(g: ConfigGraph) -> SccReport:
    comp_of, comps = tarjan(g.adj)
    eng = g.engine
    succ = []
    for cid, members in enumerate(comps):
        out = set()
        for v in members:
            for t in g.adj[v]:
                ct = comp_of[t]
                if ct != cid:
                    out.add(ct)
        succ.append(sorted(out))
    bottom = [cid for cid in range(len(comps)) if not succ[cid]]
    consensus = []
    for members in comps:
        ops = {eng.consensus(g.coded[v]) for v in members}
        consensus.append(ops.pop() if len(ops) == 1 else None)
    # a component is b-stable iff it is a uniform b-consensus and all its
    # successors are; successors always carry smaller ids
    stable: list = []
    for cid in range(len(comps)):
        b = consensus[cid]
        if b is not None:
            for ct in succ[cid]:
                if stable[ct] is not b:
                    b = None
                    break
        stable.append(b)
    return SccReport(comp_of, comps, succ, bottom, consensus, stable)


# --- verdicts -------------------------------------------------------------

@dataclass
class Verdict:
    outcome: str                      # PASS, FAIL or SKIP
    length: int | None = None
    initial: tuple | None = None
    reason: str | None = None
    bscc: list | None = None
    trace: list | None = None
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.outcome == "PASS"

    def to_dict(self, p: BaseProtocol | None = None) -> dict:
        out = {"outcome": self.outcome, "length": self.length}
        if self.initial is not None:
            out["initial"] = [str(x) for x in self.initial]
        if self.reason is not None:
            out["reason"] = self.reason
        if self.bscc is not None:
            out["bscc"] = [render_config(p, c) if p is not None else list(map(str, c))
                           for c in self.bscc]
        if self.trace is not None:
            if p is not None and self.initial is not None:
                out["trace"] = trace_to_dicts(p, p.word_config(self.initial), self.trace)
            else:
                out["trace"] = [{"rule": str(w.rule), "positions": list(w.positions)}
                                for w in self.trace]
        out.update(self.details)
        return out


def trace_to_dicts(p: BaseProtocol, start, trace) -> list:
    """Report form of a trace: rule label, positions and the configuration reached."""
    out = []
    c = tuple(start)
    for w in trace:
        c = replay(p, c, w)
        out.append({"rule": p.rule_label(w.rule), "positions": list(w.positions),
                    "to": render_config(p, c)})
    return out


def _words(p: BaseProtocol, n: int):
    return itertools.product(p.letters, repeat=n)


def _bscc_members(g, report, cid):
    return [g.node(v) for v in report.components[cid]]


def check_decider_at_length(p: BaseProtocol, n: int, budget: int = DEFAULT_BUDGET) -> Verdict:
    """PASS iff every initial word of length ``n`` stabilizes to one common opinion."""
    if n < 1:
        raise ValueError("n must be at least 1")
    eng = Engine(p)
    largest = 0
    for u in _words(p, n):
        g = explore(p, [p.word_config(u)], budget, keep_witnesses=False, engine=eng)
        largest = max(largest, len(g))
        rep = bscc_condensation(g)
        seen = None
        for cid in rep.bottom:
            b = rep.consensus[cid]
            if b is None:
                v = rep.components[cid][0]
                return Verdict("FAIL", n, u, "MIXED_BSCC", _bscc_members(g, rep, cid),
                               g.path_to(v))
            if seen is None:
                seen = (b, cid)
            elif seen[0] is not b:
                v = rep.components[cid][0]
                other = rep.components[seen[1]][0]
                return Verdict("FAIL", n, u, "CONFLICTING_BSCCS", _bscc_members(g, rep, cid),
                               g.path_to(v),
                               details={"other_bscc": [render_config(p, c) for c in
                                                       _bscc_members(g, rep, seen[1])],
                                        "other_trace": trace_to_dicts(p, p.word_config(u),
                                                                      g.path_to(other)),
                                        "opinions": [seen[0].value, b.value]})
    return Verdict("PASS", n, details={"max_nodes": largest})


def check_semidecider_at_length(p: BaseProtocol, n: int, oracle,
                                budget: int = DEFAULT_BUDGET) -> Verdict:
    """PASS iff accepted words always stabilize to TOP and rejected ones never reach a TOP-stable configuration."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if set(map(str, oracle.alphabet)) != set(map(str, p.letters)):
        raise AlphabetMismatch(f"oracle alphabet {sorted(map(str, oracle.alphabet))} "
                               f"differs from protocol letters {sorted(map(str, p.letters))}")
    eng = Engine(p)
    largest = 0
    for u in _words(p, n):
        g = explore(p, [p.word_config(u)], budget, keep_witnesses=False, engine=eng)
        largest = max(largest, len(g))
        rep = bscc_condensation(g)
        if oracle.accepts(u):
            for cid in rep.bottom:
                if rep.consensus[cid] is not Opinion.TOP:
                    v = rep.components[cid][0]
                    return Verdict("FAIL", n, u, "ACCEPTED_BUT_BSCC_NOT_TOP",
                                   _bscc_members(g, rep, cid), g.path_to(v))
        else:
            for v in range(len(g)):
                if rep.node_stable(v) is Opinion.TOP:
                    return Verdict("FAIL", n, u, "REJECTED_BUT_TOP_STABLE_REACHABLE",
                                   [g.node(v)], g.path_to(v))
    return Verdict("PASS", n, details={"max_nodes": largest})


def check_decider_up_to(p, n_max, budget=DEFAULT_BUDGET, n_min=1) -> list:
    return [check_decider_at_length(p, n, budget) for n in range(n_min, n_max + 1)]


def check_semidecider_up_to(p, n_max, oracle, budget=DEFAULT_BUDGET, n_min=1) -> list:
    return [check_semidecider_at_length(p, n, oracle, budget) for n in range(n_min, n_max + 1)]


# --- stability and membership ---------------------------------------------

def stable_configs_at_length(p: Protocol, n: int, b: Opinion,
                             budget: int = DEFAULT_BUDGET) -> set:
    """All b-stable configurations of length ``n``, by a backward fixpoint over Q^n."""
    if n < 1:
        raise ValueError("n must be at least 1")
    states = list(p.states)
    total = len(states) ** n
    if total > budget:
        raise BudgetExceeded(f"|Q|^n = {total} exceeds budget {budget}", visited=0)
    eng = Engine(p)
    for s in states:
        eng.code(s)
    all_configs = list(itertools.product(range(len(states)), repeat=n))
    preds: dict = {c: [] for c in all_configs}
    for c in all_configs:
        for _key, _i, _j, d in eng.successors(c):
            preds[d].append(c)
    bad = set()
    frontier = [c for c in all_configs if eng.consensus(c) is not b]
    bad.update(frontier)
    while frontier:
        c = frontier.pop()
        for q in preds[c]:
            if q not in bad:
                bad.add(q)
                frontier.append(q)
    return {eng.decode(c) for c in all_configs if c not in bad}


def is_stable(p: BaseProtocol, c: Sequence, b: Opinion, budget: int = DEFAULT_BUDGET) -> bool:
    """Definitional check: every configuration reachable from ``c`` is a b-consensus."""
    g = explore(p, [tuple(c)], budget, keep_witnesses=False)
    return all(g.engine.consensus(x) is b for x in g.coded)


def membership(p: BaseProtocol, w: Sequence, budget: int = DEFAULT_BUDGET) -> bool:
    """True iff a TOP-stable configuration is reachable from the input word ``w``."""
    g = explore(p, [p.word_config(tuple(w))], budget, keep_witnesses=False)
    rep = bscc_condensation(g)
    return any(b is Opinion.TOP for b in rep.stable)


def language_up_to(p: BaseProtocol, n: int, budget: int = DEFAULT_BUDGET) -> set:
    if n < 1:
        raise ValueError("n must be at least 1")
    eng = Engine(p)
    out = set()
    for k in range(1, n + 1):
        for u in _words(p, k):
            g = explore(p, [p.word_config(u)], budget, keep_witnesses=False, engine=eng)
            if any(b is Opinion.TOP for b in bscc_condensation(g).stable):
                out.add(u)
    return out


def compare_oracle(accepted: set, oracle, n: int, alphabet: Sequence | None = None) -> Verdict:
    """Compare a set of accepted words against an oracle on all words of length 1..n."""
    letters = tuple(alphabet) if alphabet is not None else tuple(oracle.alphabet)
    missing, extra = [], []
    for k in range(1, n + 1):
        for u in itertools.product(letters, repeat=k):
            got = u in accepted
            want = oracle.accepts(u)
            if want and not got:
                missing.append(u)
            elif got and not want:
                extra.append(u)
    if not missing and not extra:
        return Verdict("PASS", n)
    first = min(missing + extra, key=lambda u: (len(u), u))
    return Verdict("FAIL", n, first, "LANGUAGE_MISMATCH",
                   details={"missing": ["".join(map(str, u)) if all(len(str(x)) == 1 for x in u)
                                        else ",".join(map(str, u)) for u in missing],
                            "extra": ["".join(map(str, u)) if all(len(str(x)) == 1 for x in u)
                                      else ",".join(map(str, u)) for u in extra]})


# --- fair runs ------------------------------------------------------------

@dataclass
class FairRunTrace:
    seed: int
    initial: tuple
    steps: list                 # StepWitness or None for a no-op
    final: tuple
    stabilized: bool
    stabilized_opinion: Opinion | None

    def to_dict(self, p: BaseProtocol) -> dict:
        return {
            "seed": self.seed,
            "initial": [str(x) for x in self.initial],
            "steps": [None if w is None else {"rule": p.rule_label(w.rule),
                                              "positions": list(w.positions)}
                      for w in self.steps],
            "final": render_config(p, self.final),
            "stabilized": self.stabilized,
            "stabilized_opinion": (self.stabilized_opinion.value
                                   if self.stabilized_opinion is not None else None),
        }


def simulate_fair_run(p: BaseProtocol, w: Sequence, seed: int, max_steps: int,
                      budget: int = DEFAULT_BUDGET, stop_early: bool = True) -> FairRunTrace:
    """Random run choosing uniformly among enabled steps plus one no-op.

    The forward closure of ``w`` is explored once; a configuration counts as
    stabilized when it lies in a bottom SCC that is a uniform consensus.
    """
    if max_steps < 0:
        raise ValueError("max_steps must be non-negative")
    w = tuple(w)
    g = explore(p, [p.word_config(w)], budget, keep_witnesses=False)
    rep = bscc_condensation(g)
    bottom = set(rep.bottom)
    eng = g.engine
    index = {c: v for v, c in enumerate(g.coded)}

    def settled(v):
        cid = rep.comp_of[v]
        if cid in bottom and rep.consensus[cid] is not None:
            return rep.consensus[cid]
        return None

    rng = SplitMix64(seed)
    v = 0
    steps: list = []
    for _ in range(max_steps):
        if stop_early and settled(v) is not None:
            break
        options = eng.successors(g.coded[v])
        k = rng.below(len(options) + 1)
        if k == len(options):
            steps.append(None)
            continue
        key, i, j, d = options[k]
        steps.append(StepWitness(key, (i, j)))
        v = index[d]
    b = settled(v)
    return FairRunTrace(seed, w, steps, g.node(v), b is not None, b)


# --- DOT ------------------------------------------------------------------

def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(g: ConfigGraph, report: SccReport) -> str:
    p = g.protocol
    bottom = set(report.bottom)
    lines = ["digraph configurations {", "  node [shape=box, fontname=\"monospace\"];"]
    for v in range(len(g)):
        label = _dot_escape(render_config(p, g.node(v)))
        attrs = f'label="{label}"'
        if report.comp_of[v] in bottom:
            attrs += ", style=filled, fillcolor=lightgrey, peripheries=2"
        lines.append(f"  n{v} [{attrs}];")
    for v, t, w in g.edges():
        label = _dot_escape(p.rule_label(w.rule)) if w is not None else ""
        lines.append(f'  n{v} -> n{t} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
