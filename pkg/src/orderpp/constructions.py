"""Protocol compilers and combinators.

Primitive protocols (the ordered-word and exactly-one semi-deciders) are built
explicitly.  The combinators (intersection, union, renaming, the decider
product and the successor handshake) are lazy: a state is a nested tuple and
the outcomes of an interaction are derived from the component protocols when an
analysis asks for them.

Input-saving protocols built here use states of the form ``(letter, rest)``;
explicit primitives store them flat and declare the factorization.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from . import rule_tables
from .errors import AlphabetMismatch, NotInputSaving, ParseError
from .protocol import (
    BaseProtocol,
    LazyProtocol,
    Opinion,
    Pred,
    Protocol,
    Rule,
    materialize,
    render_state,
)

log = logging.getLogger(__name__)

TOP, BOT = Opinion.TOP, Opinion.BOT


def _require_input_saving(p: BaseProtocol):
    if not p.input_saving:
        raise NotInputSaving(f"{p.name} is not input-saving (no input factorization)")


def _same_letters(p1: BaseProtocol, p2: BaseProtocol):
    if set(map(str, p1.letters)) != set(map(str, p2.letters)):
        raise AlphabetMismatch(
            f"{p1.name} reads {sorted(map(str, p1.letters))} but "
            f"{p2.name} reads {sorted(map(str, p2.letters))}")


# --- primitive semi-deciders ---------------------------------------------

def ordered_semidecider(k: int, pred: Pred = Pred.LT) -> Protocol:
    """Semi-decider with stabilizing inputs for 0* 1* ... k*.

    Letters are the strings "0".."k"; a state is ``(letter, belief)``.  An
    agent with belief T that sees a smaller letter to its right drops to F, and
    any F agent may reset itself to T.  ``pred`` guards the misorder rule; the
    successor variant is used by the Turing machine compiler.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    letters = [str(i) for i in range(k + 1)]
    states = [(x, o) for x in letters for o in (TOP, BOT)]
    rules = []
    for x in letters:
        for y in letters:
            if int(x) > int(y):
                for o in (TOP, BOT):
                    rules.append(Rule(((x, TOP), (y, o)), pred, ((x, BOT), (y, o)), "misorder"))
    for x in letters:
        for y in letters:
            for o in (TOP, BOT):
                rules.append(Rule(((x, BOT), (y, o)), Pred.TRUE, ((x, TOP), (y, o)), "reset"))
    return Protocol(states, {s: s[1] for s in states}, [(x, TOP) for x in letters], rules,
                    name=f"ordered-{k}" + ("" if pred is Pred.LT else f"-{pred.value}"),
                    inputs={x: (x, TOP) for x in letters},
                    factor={s: (s[0], s[1]) for s in states},
                    metadata={"rules": rule_tables.ORDERED})


def exactly_one_semidecider(alphabet: Sequence, a) -> Protocol:
    """Semi-decider with stabilizing inputs for words with exactly one ``a``.

    A state is ``(input, last input, belief)``.
    """
    sigma = [str(x) for x in alphabet]
    a = str(a)
    if a not in sigma:
        raise ValueError(f"{a!r} is not in the alphabet")
    beliefs = (TOP, BOT)
    states = [(s, t, o) for s in sigma for t in sigma for o in beliefs]

    def out(state):
        s, t, o = state
        return Opinion.of((o is TOP and s == t) or (s == a != t))

    rules = []

    def unary(pre, post, label):
        for q in states:
            rules.append(Rule((pre, q), Pred.TRUE, (post, q), label))

    others = [s for s in sigma if s != a]
    for s in others:
        for o in beliefs:
            unary((s, a, o), (s, s, BOT), "(1)")
    for s in sigma:
        for o in beliefs:
            unary((a, s, o), (a, a, TOP), "(2)")
    for s in others:
        for o in beliefs:
            rules.append(Rule(((s, s, o), (a, a, TOP)), Pred.TRUE, ((s, s, TOP), (a, a, TOP)), "(3)"))
    for s in sigma:
        for t in sigma:
            for o in beliefs:
                rules.append(Rule(((s, s, o), (t, t, BOT)), Pred.TRUE,
                                  ((s, s, BOT), (t, t, BOT)), "(4)"))
    for o in beliefs:
        for o2 in beliefs:
            rules.append(Rule(((a, a, o), (a, a, o2)), Pred.TRUE, ((a, a, BOT), (a, a, o2)), "(5)"))
    # the rule families overlap on a few instances; keep the first copy
    rules = list(dict.fromkeys(rules))
    inputs = {s: (s, s, TOP if s == a else BOT) for s in sigma}
    return Protocol(states, {q: out(q) for q in states}, list(inputs.values()), rules,
                    name=f"exactly-one-{a}", inputs=inputs,
                    factor={q: (q[0], (q[1], q[2])) for q in states},
                    metadata={"rules": rule_tables.EXACTLY_ONE})


# --- lazy combinators -----------------------------------------------------

class _Combinator(LazyProtocol):
    """Lazy protocol over one or more component protocols."""

    parts: tuple = ()

    def predicates(self) -> set:
        out = {Pred.TRUE} if self._adds_true else set()
        for p in self.parts:
            out |= p.predicates()
        return out

    _adds_true = True

    def non_io_predicates(self) -> set:
        # the rules a combinator adds of its own change one agent only
        out = set()
        for p in self.parts:
            out |= p.non_io_predicates()
        return out


class InputSavingCombinator(_Combinator):
    """States are ``(letter, rest)`` pairs."""

    input_saving = True

    def split(self, state):
        return state

    def join(self, letter, rest):
        return (letter, rest)


class Intersection(InputSavingCombinator):
    """Product of two input-saving protocols with a shared input; output is the conjunction."""

    _adds_true = False

    def __init__(self, first: BaseProtocol, second: BaseProtocol, name: str | None = None):
        _require_input_saving(first)
        _require_input_saving(second)
        _same_letters(first, second)
        super().__init__(name or f"({first.name} & {second.name})")
        self.parts = (first, second)
        self.letters = tuple(first.letters)
        self._init = {}
        for x in self.letters:
            r1 = first.split(first.initial_state(x))[1]
            r2 = second.split(second.initial_state(x))[1]
            self._init[x] = (x, (r1, r2))

    def initial_state(self, letter):
        return self._init[letter]

    def opinion(self, state) -> Opinion:
        x, (r1, r2) = state
        f, g = self.parts
        return Opinion.of(f.opinion(f.join(x, r1)) is TOP and g.opinion(g.join(x, r2)) is TOP)

    def _compute(self, p, q):
        x, (r1, r2) = p
        y, (s1, s2) = q
        f, g = self.parts
        for pred, a, b, key in f.outcomes(f.join(x, r1), f.join(y, s1)):
            yield pred, (x, (f.split(a)[1], r2)), (y, (f.split(b)[1], s2)), (1, key)
        for pred, a, b, key in g.outcomes(g.join(x, r2), g.join(y, s2)):
            yield pred, (x, (r1, g.split(a)[1])), (y, (s1, g.split(b)[1])), (2, key)

    def rule_label(self, key) -> str:
        return f"{key[0]}:{self.parts[key[0] - 1].rule_label(key[1])}"


class Union(InputSavingCombinator):
    """Product with a choice component selecting whose output counts.

    An agent changes its choice when it meets a different choice or when the
    chosen component shows F on either agent of the interaction.
    """

    def __init__(self, first: BaseProtocol, second: BaseProtocol, name: str | None = None):
        _require_input_saving(first)
        _require_input_saving(second)
        _same_letters(first, second)
        super().__init__(name or f"({first.name} | {second.name})")
        self.parts = (first, second)
        self.letters = tuple(first.letters)
        self._init = {}
        for x in self.letters:
            q1, q2 = first.initial_state(x), second.initial_state(x)
            # start on a side that already accepts the single-letter word, if any
            if first.opinion(q1) is TOP:
                choice = 1
            elif second.opinion(q2) is TOP:
                choice = 2
            else:
                choice = 1
            self._init[x] = (x, (first.split(q1)[1], second.split(q2)[1], choice))

    def initial_state(self, letter):
        return self._init[letter]

    def _side_opinion(self, x, rest, i) -> Opinion:
        part = self.parts[i - 1]
        return part.opinion(part.join(x, rest[i - 1]))

    def opinion(self, state) -> Opinion:
        x, rest = state
        return self._side_opinion(x, rest, rest[2])

    def _compute(self, p, q):
        x, (r1, r2, i) = p
        y, (s1, s2, j) = q
        f, g = self.parts
        for pred, a, b, key in f.outcomes(f.join(x, r1), f.join(y, s1)):
            yield pred, (x, (f.split(a)[1], r2, i)), (y, (f.split(b)[1], s2, j)), (1, key)
        for pred, a, b, key in g.outcomes(g.join(x, r2), g.join(y, s2)):
            yield pred, (x, (r1, g.split(a)[1], i)), (y, (s1, g.split(b)[1], j)), (2, key)
        if (i != j or self._side_opinion(x, (r1, r2), i) is BOT
                or self._side_opinion(y, (s1, s2), i) is BOT):
            yield Pred.TRUE, (x, (r1, r2, 3 - i)), q, (3,)

    def rule_label(self, key) -> str:
        if key[0] == 3:
            return "switch"
        return f"{key[0]}:{self.parts[key[0] - 1].rule_label(key[1])}"


def binary_stab(mode: str, first: BaseProtocol, second: BaseProtocol) -> BaseProtocol:
    mode = mode.upper()
    if mode == "INTERSECT":
        return Intersection(first, second)
    if mode == "UNION":
        return Union(first, second)
    raise ValueError(f"mode must be INTERSECT or UNION, not {mode!r}")


DUMMY = "dummy"


class Rename(InputSavingCombinator):
    """Semi-decider for f(L) from an input-saving semi-decider for L.

    ``letter_map`` sends each source letter to a set of target letters.  A
    state is ``(target letter, source state)``; an agent that observes F on
    either side may restart as any source letter whose image contains its
    target letter.
    """

    def __init__(self, base: BaseProtocol, letter_map: Mapping, alphabet: Sequence,
                 preferred: Mapping | None = None, name: str | None = None):
        _require_input_saving(base)
        super().__init__(name or f"rename({base.name})")
        self.parts = (base,)
        self.letters = tuple(alphabet)
        self.letter_map = {s: frozenset(t) for s, t in letter_map.items()}
        unknown = set(self.letter_map) - set(base.letters)
        if unknown:
            raise AlphabetMismatch(f"letter map uses unknown source letters {sorted(map(str, unknown))}")
        preferred = dict(preferred or {})
        self.warnings: list = []
        self.preimage = {}
        self.choice = {}
        for g in self.letters:
            pre = [s for s in base.letters if g in self.letter_map.get(s, ())]
            self.preimage[g] = pre
            if not pre:
                self.choice[g] = None
                continue
            if g in preferred:
                if preferred[g] not in pre:
                    raise ValueError(f"preferred letter {preferred[g]!r} does not map to {g!r}")
                self.choice[g] = preferred[g]
                continue
            tops = [s for s in pre if base.opinion(base.initial_state(s)) is TOP]
            if tops:
                self.choice[g] = tops[0]
            else:
                self.choice[g] = pre[0]
                if len(pre) > 1:
                    msg = f"{name or base.name}: no accepting single-letter choice for {g!r}; using {pre[0]!r}"
                    self.warnings.append(msg)
                    log.debug(msg)
        self._init = {g: (g, base.initial_state(s) if s is not None else DUMMY)
                      for g, s in self.choice.items()}

    def initial_state(self, letter):
        return self._init[letter]

    def opinion(self, state) -> Opinion:
        q = state[1]
        if q == DUMMY:
            return BOT
        return self.parts[0].opinion(q)

    def _compute(self, p, q):
        base = self.parts[0]
        g, s = p
        h, t = q
        if s != DUMMY and t != DUMMY:
            for pred, a, b, key in base.outcomes(s, t):
                yield pred, (g, a), (h, b), (0, key)
        if self.opinion(p) is BOT or self.opinion(q) is BOT:
            for k, sigma in enumerate(self.preimage[g]):
                yield Pred.TRUE, (g, base.initial_state(sigma)), q, (1, k)

    def rule_label(self, key) -> str:
        if key[0] == 1:
            return "revise"
        return self.parts[0].rule_label(key[1])


def rename_stab(base: BaseProtocol, letter_map: Mapping, alphabet: Sequence | None = None,
                preferred: Mapping | None = None) -> Rename:
    if alphabet is None:
        seen = []
        for s in base.letters:
            for g in sorted(letter_map.get(s, ()), key=str):
                if g not in seen:
                    seen.append(g)
        alphabet = seen
    return Rename(base, letter_map, alphabet, preferred)


class Decider(_Combinator):
    """Runs a semi-decider for L and one for its complement side by side.

    A state is ``(plus state, minus state, belief)`` with belief "+" or "-".
    """

    def __init__(self, plus: BaseProtocol, minus: BaseProtocol, name: str | None = None):
        _same_letters(plus, minus)
        super().__init__(name or f"decider({plus.name}, {minus.name})")
        self.parts = (plus, minus)
        self.letters = tuple(plus.letters)
        self._init = {}
        for x in self.letters:
            qp = plus.initial_state(x)
            qm = minus.initial_state(x)
            # one agent never moves, so its plus opinion is the membership bit
            self._init[x] = (qp, qm, "+" if plus.opinion(qp) is TOP else "-")

    def initial_state(self, letter):
        return self._init[letter]

    def _trusted(self, state) -> Opinion:
        qp, qm, s = state
        return self.parts[0].opinion(qp) if s == "+" else self.parts[1].opinion(qm)

    def opinion(self, state) -> Opinion:
        o = self._trusted(state)
        return o if state[2] == "+" else ~o

    def _compute(self, p, q):
        plus, minus = self.parts
        (a1, a2, s), (b1, b2, t) = p, q
        for pred, x, y, key in plus.outcomes(a1, b1):
            yield pred, (x, a2, s), (y, b2, t), (0, key)
        for pred, x, y, key in minus.outcomes(a2, b2):
            yield pred, (a1, x, s), (b1, y, t), (1, key)
        other = "-" if s == "+" else "+"
        if s != t:
            yield Pred.TRUE, (a1, a2, t), q, (2,)
        if self._trusted(p) is BOT:
            yield Pred.TRUE, (a1, a2, other), q, (3,)

    def rule_label(self, key) -> str:
        if key[0] == 0:
            return "+:" + self.parts[0].rule_label(key[1])
        if key[0] == 1:
            return "-:" + self.parts[1].rule_label(key[1])
        return "flip" if key[0] == 2 else "self-flip"


def combine_to_decider(plus: BaseProtocol, minus: BaseProtocol) -> Decider:
    return Decider(plus, minus)


# --- Sigma_2 expressions --------------------------------------------------

@dataclass(frozen=True)
class Sigma2Term:
    """The language A0* a1 A1* ... am Am* (without the empty word)."""

    head: frozenset
    steps: tuple = ()      # ((letter, frozenset alphabet), ...)

    @property
    def m(self) -> int:
        return len(self.steps)

    def accepts(self, word: Sequence) -> bool:
        if len(word) == 0:
            return False
        blocks = [self.head] + [alpha for _x, alpha in self.steps]
        current = {0}
        for x in word:
            nxt = set()
            for i in current:
                if x in blocks[i]:
                    nxt.add(i)
                if i < self.m and self.steps[i][0] == x:
                    nxt.add(i + 1)
            if not nxt:
                return False
            current = nxt
        return self.m in current

    def letters(self) -> set:
        out = set(self.head)
        for x, alpha in self.steps:
            out.add(x)
            out |= alpha
        return out

    def to_dict(self) -> dict:
        return {"A0": sorted(self.head),
                "steps": [{"letter": x, "alphabet": sorted(alpha)} for x, alpha in self.steps]}

    def render(self) -> str:
        def block(alpha):
            return "{" + ",".join(sorted(alpha)) + "}*"
        return " ".join([block(self.head)] + [f"{x} {block(alpha)}" for x, alpha in self.steps])


def term(head: Iterable, *steps) -> Sigma2Term:
    """``term("a", ("b", "a"))`` is a* b a*; alphabets are iterables of letters."""
    return Sigma2Term(frozenset(head), tuple((x, frozenset(alpha)) for x, alpha in steps))


def parse_sigma2(desc) -> tuple:
    """Parse a term list (or ``{"alphabet": .., "terms": ..}``) into (terms, alphabet)."""
    alphabet = None
    if isinstance(desc, dict):
        alphabet = desc.get("alphabet")
        desc = desc.get("terms")
    if not isinstance(desc, list) or not desc:
        raise ParseError("a Sigma2 expression is a non-empty list of terms")
    terms = []
    for k, raw in enumerate(desc):
        try:
            head = frozenset(str(x) for x in raw["A0"])
            steps = tuple((str(s["letter"]), frozenset(str(x) for x in s.get("alphabet", [])))
                          for s in raw.get("steps", []))
        except (KeyError, TypeError) as e:
            raise ParseError(f"terms[{k}]: malformed term ({e})", field=f"terms[{k}]") from None
        terms.append(Sigma2Term(head, steps))
    letters = set()
    for t in terms:
        letters |= t.letters()
    if alphabet is None:
        alphabet = sorted(letters)
    else:
        alphabet = [str(x) for x in alphabet]
        if not letters <= set(alphabet):
            raise ParseError(f"terms use letters outside the alphabet: {sorted(letters - set(alphabet))}")
    return tuple(terms), tuple(alphabet)


@dataclass(frozen=True)
class Sigma2Oracle:
    terms: tuple
    alphabet: tuple

    def accepts(self, word) -> bool:
        return any(t.accepts(tuple(word)) for t in self.terms)


class _Complement:
    def __init__(self, oracle):
        self.oracle = oracle
        self.alphabet = oracle.alphabet

    def accepts(self, word) -> bool:
        return not self.oracle.accepts(word)


def complement_oracle(oracle):
    return _Complement(oracle)


def compile_term(t: Sigma2Term, alphabet: Sequence) -> Rename:
    k = 2 * t.m
    inner: BaseProtocol = ordered_semidecider(k)
    gamma = [str(i) for i in range(k + 1)]
    for j in range(1, k, 2):
        inner = Intersection(inner, exactly_one_semidecider(gamma, str(j)))
    blocks = [t.head] + [alpha for _x, alpha in t.steps]
    f = {}
    for i, alpha in enumerate(blocks):
        f[str(2 * i)] = set(alpha)
    for i, (x, _alpha) in enumerate(t.steps):
        f[str(2 * i + 1)] = {x}
    return Rename(inner, f, alphabet, name=f"term[{t.render()}]")


def compile_sigma2(terms: Sequence[Sigma2Term], alphabet: Sequence | None = None) -> BaseProtocol:
    """IO semi-decider (with stabilizing inputs) for the union of the terms."""
    if not terms:
        raise ValueError("at least one term is required")
    if alphabet is None:
        letters = set()
        for t in terms:
            letters |= t.letters()
        alphabet = sorted(letters)
    parts = [compile_term(t, alphabet) for t in terms]
    out = parts[0]
    for p in parts[1:]:
        out = Union(out, p)
    return out


def compile_decider(pos_terms: Sequence[Sigma2Term], neg_terms: Sequence[Sigma2Term],
                    alphabet: Sequence | None = None) -> Decider:
    """Decider from expressions for a language and for its complement."""
    if alphabet is None:
        letters = set()
        for t in list(pos_terms) + list(neg_terms):
            letters |= t.letters()
        alphabet = sorted(letters)
    return Decider(compile_sigma2(pos_terms, alphabet), compile_sigma2(neg_terms, alphabet))


# --- successor handshake --------------------------------------------------

@dataclass(frozen=True)
class Marker:
    """Auxiliary handshake state: ``mark`` stands for a^d, ``ack`` for b^(ack,d).

    ``delta`` is ``(a, b, c, d, key)`` for the rewritten rule (a,b) ->succ (c,d).
    """

    role: str
    delta: tuple

    def __str__(self):
        a, b, _c, _d, key = self.delta
        tag = render_state(key).replace("<", "").replace(">", "").replace("|", ".")
        if self.role == "mark":
            return f"{render_state(a)}^d{tag}"
        return f"{render_state(b)}^ack{tag}"


def _rewritten(pred: Pred, pre: tuple, post: tuple) -> bool:
    return pred is Pred.SUCC and pre[0] != post[0] and pre[1] != post[1]


class Handshake(LazyProtocol):
    """Lazy successor handshake; each non-IO successor rule becomes four IO steps."""

    def __init__(self, base: BaseProtocol, name: str | None = None):
        super().__init__(name or f"handshake({base.name})")
        self.base = base
        self.letters = tuple(base.letters)

    def initial_state(self, letter):
        return self.base.initial_state(letter)

    def opinion(self, state) -> Opinion:
        if isinstance(state, Marker):
            a, b = state.delta[0], state.delta[1]
            return self.base.opinion(a if state.role == "mark" else b)
        return self.base.opinion(state)

    def _compute(self, p, q):
        base_p = not isinstance(p, Marker)
        base_q = not isinstance(q, Marker)
        if base_p and base_q:
            for pred, r, s, key in self.base.outcomes(p, q):
                if _rewritten(pred, (p, q), (r, s)):
                    yield Pred.SUCC, Marker("mark", (p, q, r, s, key)), q, (1, key, 0)
                else:
                    yield pred, r, s, (0, key)
            return
        if not base_p and p.role == "mark":
            a, b, c, _d, key = p.delta
            ack = Marker("ack", p.delta)
            if base_q and q == b:
                yield Pred.SUCC, p, ack, (1, key, 1)
            if q == ack:
                yield Pred.SUCC, c, q, (1, key, 2)
            else:
                yield Pred.SUCC, a, q, (2,)
        if not base_q and q.role == "ack":
            _a, _b, c, d, key = q.delta
            if p == c:
                yield Pred.SUCC, p, d, (1, key, 3)
            if p != Marker("mark", q.delta):
                yield Pred.SUCC, p, d, (3,)

    def rule_label(self, key) -> str:
        if key[0] == 0:
            return self.base.rule_label(key[1])
        if key[0] == 1:
            step = ("mark", "ack", "commit", "finish")[key[2]]
            return f"{step}[{self.base.rule_label(key[1])}]"
        return "drop-mark" if key[0] == 2 else "drop-ack"

    def predicates(self) -> set:
        return self.base.predicates()

    def non_io_predicates(self) -> set:
        return self.base.non_io_predicates() - {Pred.SUCC}


def handshake_transform(p: BaseProtocol) -> BaseProtocol:
    """Rewrite every non-IO successor rule into the four-step IO handshake.

    Explicit protocols give an explicit result whose metadata lists the
    markers; lazy protocols give a lazy :class:`Handshake`.
    """
    if not isinstance(p, Protocol):
        return Handshake(p)
    targets = [(k, r) for k, r in enumerate(p.rules) if _rewritten(r.pred, r.pre, r.post)]
    if not targets:
        return p
    names = {s: p.state_name(s) for s in p.states}
    states = list(p.states)
    opinions = dict(p.opinions)
    markers = []
    for k, r in targets:
        a, b = r.pre
        c, d = r.post
        delta = (a, b, c, d, k)
        m1, m2 = Marker("mark", delta), Marker("ack", delta)
        for m, base, nm in ((m1, a, f"{names[a]}^d{k}"), (m2, b, f"{names[b]}^ack{k}")):
            states.append(m)
            opinions[m] = p.opinions[base]
            names[m] = nm
        markers.append((r, m1, m2))
    rules = [r for r in p.rules if not _rewritten(r.pred, r.pre, r.post)]
    succ = Pred.SUCC
    meta = []
    for r, m1, m2 in markers:
        a, b = r.pre
        c, d = r.post
        tag = r.label if r.label is not None else f"#{m1.delta[4]}"
        rules += [
            Rule((a, b), succ, (m1, b), f"mark[{tag}]"),
            Rule((m1, b), succ, (m1, m2), f"ack[{tag}]"),
            Rule((m1, m2), succ, (c, m2), f"commit[{tag}]"),
            Rule((c, m2), succ, (c, d), f"finish[{tag}]"),
        ]
        rules += [Rule((m1, x), succ, (a, x), f"drop-mark[{tag}]") for x in states if x != m2]
        rules += [Rule((y, m2), succ, (y, d), f"drop-ack[{tag}]") for y in states if y != m1]
        meta.append({"rule": tag, "mark": names[m1], "ack": names[m2],
                     "pre": [names[a], names[b]], "post": [names[c], names[d]]})
    metadata = dict(p.metadata)
    metadata["handshake"] = meta
    metadata["handshake_rules"] = rule_tables.HANDSHAKE
    return Protocol(states, opinions, p.initial, rules, name=f"handshake({p.name})",
                    metadata=metadata, inputs=p.inputs, names=names)


def handshake_projection(p: BaseProtocol, config: Sequence) -> tuple:
    """Map a configuration of a handshake protocol to one of the original protocol.

    A mark immediately followed by its own ack reads as the rule's first
    result; any other mark reads as its source state; an ack reads as the
    rule's second result.
    """
    config = tuple(config)
    if isinstance(p, Protocol) and "handshake" in p.metadata and not any(
            isinstance(s, Marker) for s in p.states):
        # loaded from a file: markers are plain names described in the metadata
        by_name = {p.state_name(s): s for s in p.states}
        lookup = {}
        for entry in p.metadata["handshake"]:
            a, b = (by_name[x] for x in entry["pre"])
            c, d = (by_name[x] for x in entry["post"])
            delta = (a, b, c, d, entry["rule"])
            lookup[by_name[entry["mark"]]] = Marker("mark", delta)
            lookup[by_name[entry["ack"]]] = Marker("ack", delta)
        config = tuple(lookup.get(s, s) for s in config)
    out = []
    n = len(config)
    for i, s in enumerate(config):
        if not isinstance(s, Marker):
            out.append(s)
        elif s.role == "mark":
            a, _b, c, _d, _k = s.delta
            paired = i + 1 < n and config[i + 1] == Marker("ack", s.delta)
            out.append(c if paired else a)
        else:
            out.append(s.delta[3])
    return tuple(out)


# --- emptiness gadget -----------------------------------------------------

def _fresh(base: str, taken: set) -> str:
    name, k = base, 1
    while name in taken:
        k += 1
        name = f"{base}{k}"
    taken.add(name)
    return name


def canonical_non_decider(letters: Sequence, name: str = "non-decider") -> Protocol:
    """Protocol over ``letters`` in which every pair can end in either consensus."""
    taken: set = set()
    barred = {x: _fresh(f"{x}.bar", taken) for x in map(str, letters)}
    top, sink = _fresh("top", taken), _fresh("sink", taken)
    states = list(barred.values()) + [top, sink]
    opinions = {s: BOT for s in states}
    opinions[top] = TOP
    rules = []
    for x in barred.values():
        for y in barred.values():
            rules.append(Rule((x, y), Pred.TRUE, (x, top), "to-top"))
            rules.append(Rule((x, y), Pred.TRUE, (x, sink), "to-sink"))
        rules.append(Rule((top, x), Pred.TRUE, (top, top), "top-spreads"))
        rules.append(Rule((sink, x), Pred.TRUE, (sink, sink), "sink-spreads"))
    return Protocol(states, opinions, list(barred.values()), rules, name=name,
                    inputs={x: barred[x] for x in barred})


def emptiness_gadget(p: BaseProtocol) -> Protocol:
    """Protocol that is a decider iff ``p`` reaches no TOP-stable configuration."""
    p = materialize(p)
    if any(p.opinion(p.initial_state(x)) is TOP for x in p.letters):
        return canonical_non_decider(p.letters, name=f"gadget({p.name})")
    names = {s: p.state_name(s) for s in p.states}
    taken = set(names.values())
    barred = {}
    for x in p.letters:
        barred[x] = _fresh(f"{x}.bar", taken)
    sink = _fresh("sink", taken)
    states = list(p.states) + list(barred.values()) + [sink]
    opinions = dict(p.opinions)
    for s in list(barred.values()) + [sink]:
        opinions[s] = BOT
        names[s] = s
    rules = list(p.rules)
    for x, bar in barred.items():
        for q in states:
            rules.append(Rule((bar, q), Pred.TRUE, (p.initial_state(x), q), "unbar"))
    for q1 in states:
        for q2 in states:
            if q2 != sink and (opinions[q1] is BOT or opinions[q2] is BOT):
                rules.append(Rule((q1, q2), Pred.TRUE, (q1, sink), "collapse"))
    return Protocol(states, opinions, list(barred.values()), rules, name=f"gadget({p.name})",
                    inputs=dict(barred), names=names,
                    metadata={"gadget_rules": rule_tables.EMPTINESS})
