"""Partially-ordered Parikh automata (poPA).

A poPA reads a word along a path that never goes back down a rank: every
transition either stays in its state (a loop) or moves to a strictly higher
rank.  Each transition carries a counter variable; a run is accepting when it
ends in a final state and the acceptance formula holds for the numbers of times
each variable's transitions were used.

Several transitions may share a variable name, in which case the variable
counts all of them.  This is how a loop labelled by a whole alphabet is written.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial
from typing import Iterable, Sequence

from .analysis import Verdict
from .errors import AlphabetMismatch, ParseError, UnknownName, ValidationError
from .presburger import (
    And, Const, Or, conj, congruence, disj, eval_presburger, linear, minus,
    parse_formula, render_formula, sum_of,
)

# glyph aliases for the bracket letters of the coDyck automata
GLYPHS = {"⊏": "[", "⊐": "]"}


@dataclass(frozen=True)
class Transition:
    src: str
    letter: str
    dst: str
    var: str

    @property
    def is_loop(self) -> bool:
        return self.src == self.dst


@dataclass
class PoPA:
    states: tuple
    rank: dict
    alphabet: tuple
    initial: str
    final: frozenset
    transitions: tuple
    psi: object
    name: str = "popa"
    _loops: dict = field(default=None, init=False, repr=False, compare=False)
    _progress: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        self.states = tuple(self.states)
        self.alphabet = tuple(self.alphabet)
        self.final = frozenset(self.final)
        self.transitions = tuple(self.transitions)
        problems = validate_popa(self)
        if problems:
            raise ValidationError(problems)
        loops: dict = {q: {} for q in self.states}
        progress: dict = {q: [] for q in self.states}
        for t in self.transitions:
            if t.is_loop:
                loops[t.src].setdefault(t.letter, []).append(t.var)
            else:
                progress[t.src].append(t)
        self._loops = loops
        self._progress = progress

    @property
    def variables(self) -> tuple:
        return tuple(sorted({t.var for t in self.transitions}))

    def leq(self, p: str, q: str) -> bool:
        return p == q or self.rank[p] < self.rank[q]

    def accepts(self, word: Sequence) -> bool:
        return popa_membership(self, word) > 0


def validate_popa(a: PoPA) -> list:
    out = []
    ids = set(a.states)
    if len(ids) != len(a.states):
        out.append("duplicate state ids")
    for q in a.states:
        if not isinstance(a.rank.get(q), int):
            out.append(f"state {q!r} has no integer rank")
    if len(set(a.alphabet)) != len(a.alphabet) or not a.alphabet:
        out.append("alphabet must be a non-empty list of distinct letters")
    if a.initial not in ids:
        out.append(f"initial state {a.initial!r} is not a state")
    for q in sorted(a.final - ids):
        out.append(f"final state {q!r} is not a state")
    seen = set()
    for i, t in enumerate(a.transitions):
        where = f"transitions[{i}]"
        if t.src not in ids or t.dst not in ids:
            out.append(f"{where}: unknown state")
            continue
        if t.letter not in a.alphabet:
            out.append(f"{where}: letter {t.letter!r} not in the alphabet")
        if not t.var:
            out.append(f"{where}: missing variable name")
        if t.src != t.dst and not (isinstance(a.rank.get(t.src), int)
                                   and isinstance(a.rank.get(t.dst), int)
                                   and a.rank[t.src] < a.rank[t.dst]):
            out.append(f"{where}: {t.src} -> {t.dst} goes against the state order")
        if t in seen:
            out.append(f"{where}: duplicate transition")
        seen.add(t)
    unknown = a.psi.variables() - {t.var for t in a.transitions}
    for v in sorted(unknown):
        out.append(f"acceptance formula uses {v!r}, which labels no transition")
    return out


def build(name, states: dict, alphabet, initial, final, transitions, psi) -> PoPA:
    """Convenience constructor.

    ``states`` maps id to rank; ``transitions`` holds ``(src, letters, dst, var)``
    where ``letters`` is one letter or an iterable of letters and ``var`` may be
    None for an unnamed transition.
    """
    alphabet = tuple(alphabet)
    out = []
    for k, (src, letters, dst, var) in enumerate(transitions):
        if isinstance(letters, str):
            letters = (letters,)
        for x in letters:
            out.append(Transition(src, x, dst, var or f"_t{k}_{alphabet.index(x)}"))
    if isinstance(psi, str):
        psi = parse_formula(psi)
    return PoPA(tuple(states), dict(states), alphabet, initial, frozenset(final), tuple(out), psi, name)


# --- membership -----------------------------------------------------------

def _compositions(total: int, parts: int):
    """All tuples of ``parts`` naturals summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _multinomial(ks) -> int:
    out = factorial(sum(ks))
    for k in ks:
        out //= factorial(k)
    return out


def _gap_fillings(a: PoPA, state: str, letters: tuple) -> list:
    """Ways to read ``letters`` with loops at ``state``.

    Returns ``(var increments, number of runs)`` pairs.  Loops for the same
    letter with different variables give distinct runs; each split of the
    occurrences among them is counted with its multinomial weight.
    """
    per_letter = []
    for x in sorted(set(letters)):
        c = letters.count(x)
        loops = a._loops[state].get(x)
        if not loops:
            return []
        options = []
        for ks in _compositions(c, len(loops)):
            inc: dict = {}
            for v, k in zip(loops, ks):
                if k:
                    inc[v] = inc.get(v, 0) + k
            options.append((inc, _multinomial(ks)))
        per_letter.append(options)
    out = []
    for combo in itertools.product(*per_letter):
        inc: dict = {}
        weight = 1
        for part, w in combo:
            for v, k in part.items():
                inc[v] = inc.get(v, 0) + k
            weight *= w
        out.append((inc, weight))
    return out


def _parse_letters(a: PoPA, word) -> tuple:
    if isinstance(word, str):
        word = [x for x in word.split(",") if x] if "," in word else list(word)
    word = tuple(GLYPHS.get(x, x) for x in word)
    bad = sorted(set(word) - set(a.alphabet))
    if bad:
        raise AlphabetMismatch(f"letters {bad} are not in the automaton's alphabet", letters=bad)
    return word


def popa_membership(a: PoPA, word) -> int:
    """Number of accepting runs of ``a`` on ``word``.

    Runs are enumerated by skeleton: the progress transitions and the positions
    where they fire, with loops of the current state filling each gap.
    """
    word = _parse_letters(a, word)
    n = len(word)
    zero = {v: 0 for v in a.variables}

    @lru_cache(maxsize=None)
    def gap(state, lo, hi):
        return _gap_fillings(a, state, word[lo:hi])

    total = 0

    def add(counts, inc, extra=None):
        out = dict(counts)
        for v, k in inc.items():
            out[v] += k
        if extra is not None:
            out[extra] += 1
        return out

    def walk(state, pos, counts, weight):
        nonlocal total
        if state in a.final:
            for inc, w in gap(state, pos, n):
                if eval_presburger(a.psi, add(counts, inc)):
                    total += weight * w
        for t in a._progress[state]:
            for j in range(pos, n):
                fill = gap(state, pos, j)
                if not fill:
                    break       # a longer gap cannot be filled either
                if word[j] != t.letter:
                    continue
                for inc, w in fill:
                    walk(t.dst, j + 1, add(counts, inc, t.var), weight * w)

    walk(a.initial, 0, zero, 1)
    return total


def words_up_to(alphabet: Sequence, n: int) -> Iterable[tuple]:
    for k in range(n + 1):
        yield from itertools.product(alphabet, repeat=k)


def language_up_to(a: PoPA, n: int) -> list:
    return [w for w in words_up_to(a.alphabet, n) if popa_membership(a, w) > 0]


def weak_unambiguity_up_to(a: PoPA, n: int) -> Verdict:
    checked = 0
    for w in words_up_to(a.alphabet, n):
        checked += 1
        runs = popa_membership(a, w)
        if runs > 1:
            return Verdict("FAIL", len(w), reason="word with several accepting runs",
                           details={"word": list(w), "accepting_runs": runs, "words_checked": checked})
    return Verdict("PASS", n, details={"words_checked": checked})


# --- normal-form terms ----------------------------------------------------

@dataclass(frozen=True)
class NormalFormTerm:
    """Words ``a0 w1 a1 ... wm am`` whose letter counts satisfy ``phi``.

    ``phi`` speaks about ``y{i}_{letter}`` (the letter read as ``a_i``) and
    ``x{i}_{letter}`` (occurrences of the letter inside ``w_i``).
    """
    m: int
    phi: object
    alphabet: tuple

    @staticmethod
    def step_var(i: int, x: str) -> str:
        return f"y{i}_{x}"

    @staticmethod
    def loop_var(i: int, x: str) -> str:
        return f"x{i}_{x}"


def _rename(f, mapping: dict):
    if isinstance(f, Const):
        return f
    if isinstance(f, (And, Or)):
        return type(f)(tuple(_rename(g, mapping) for g in f.items))
    if hasattr(f, "item"):
        return type(f)(_rename(f.item, mapping))
    coeffs = tuple(sorted((mapping.get(v, v), c) for v, c in f.coeffs))
    if hasattr(f, "modulus"):
        return type(f)(coeffs, f.modulus, f.residue)
    return type(f)(coeffs, f.op, f.bound)


def normalform_to_popa(terms, name: str = "normalform") -> PoPA:
    """Chain automaton for one term, or a union of chains sharing the start state."""
    if isinstance(terms, NormalFormTerm):
        t = terms
        states = {f"q{i}": i for i in range(t.m + 1)}
        states["f"] = t.m + 1
        trans = []
        for i in range(t.m + 1):
            nxt = f"q{i + 1}" if i < t.m else "f"
            for x in t.alphabet:
                trans.append(Transition(f"q{i}", x, nxt, t.step_var(i, x)))
                if i >= 1:
                    trans.append(Transition(f"q{i}", x, f"q{i}", t.loop_var(i, x)))
        return PoPA(tuple(states), states, t.alphabet, "q0", {"f"}, tuple(trans), t.phi, name)

    terms = list(terms)
    if not terms:
        raise ValueError("need at least one term")
    alphabet = terms[0].alphabet
    states = {"q0": 0}
    trans = []
    parts = []
    for j, t in enumerate(terms):
        if t.alphabet != alphabet:
            raise AlphabetMismatch("terms use different alphabets")
        sub = normalform_to_popa(t)
        rename = {v: f"{v}.{j}" for v in sub.variables}
        node = {q: (q if q == "q0" else f"{q}.{j}") for q in sub.states}
        for q in sub.states:
            states.setdefault(node[q], sub.rank[q])
        for tr in sub.transitions:
            trans.append(Transition(node[tr.src], tr.letter, node[tr.dst], rename[tr.var]))
        entered = linear(sum_of(*(rename[t.step_var(0, x)] for x in alphabet)), "=", 1)
        parts.append(conj(_rename(t.phi, rename), entered))
    final = {f"f.{j}" for j in range(len(terms))}
    return PoPA(tuple(states), states, alphabet, "q0", final, tuple(trans), disj(*parts), name)


def median_terms(alphabet=("a", "b"), middle="a") -> list:
    """Median language as two terms: the single letter, and a0 w1 a w2 a2 with |w1| = |w2|."""
    single = NormalFormTerm(0, linear({NormalFormTerm.step_var(0, middle): 1}, "=", 1), tuple(alphabet))
    balance = minus(sum_of(*(NormalFormTerm.loop_var(1, x) for x in alphabet)),
                    sum_of(*(NormalFormTerm.loop_var(2, x) for x in alphabet)))
    longer = NormalFormTerm(2, conj(linear({NormalFormTerm.step_var(1, middle): 1}, "=", 1),
                                    linear(balance, "=", 0)), tuple(alphabet))
    return [single, longer]


# --- built-in automata ----------------------------------------------------

SIGMA = ("a", "b")
OPEN, CLOSE = "[", "]"
DYCK_SIGMA = ("a", OPEN, CLOSE)


def median_popa() -> PoPA:
    return build("median", {"q0": 0, "q1": 1}, SIGMA, "q0", {"q1"},
                 [("q0", SIGMA, "q0", "s"), ("q0", "a", "q1", "e"), ("q1", SIGMA, "q1", "t")],
                 linear(minus(sum_of("s"), sum_of("t")), "=", 0))


def median_complement_popa() -> PoPA:
    others = [x for x in SIGMA if x != "a"]
    trans = [("q0", SIGMA, "q0", "s"), ("q1", SIGMA, "q1", "t")]
    trans += [("q0", x, "q1", f"u_{x}") for x in others]
    equal = linear(minus(sum_of("s"), sum_of("t")), "=", 0)
    stepped = disj(*(linear({f"u_{x}": 1}, "=", 1) for x in others))
    stayed = conj(*(linear({f"u_{x}": 1}, "=", 0) for x in others))
    psi = disj(conj(equal, stepped), conj(congruence({"s": 1}, 2, 0), stayed))
    return build("median_complement", {"q0": 0, "q1": 1}, SIGMA, "q0", {"q0", "q1"}, trans, psi)


def _prefix_sum():
    return sum_of("s", "s'", "t", "t'")


def codyck_popa() -> PoPA:
    trans = [("q0", "a", "q0", "u"),
             ("q0", OPEN, "q1", "s"), ("q0", CLOSE, "q1", "t"),
             ("q1", OPEN, "q1", "s'"), ("q1", CLOSE, "q1", "t'"),
             ("q1", (OPEN, CLOSE), "q2", None), ("q2", (OPEN, CLOSE), "q2", None)]
    psi = conj(linear(minus(sum_of("u"), _prefix_sum()), "=", 0),
               linear(minus(sum_of("t", "t'"), sum_of("s", "s'")), ">", 0))
    return build("codyck", {"q0": 0, "q1": 1, "q2": 2}, DYCK_SIGMA, "q0", {"q1", "q2"}, trans, psi)


def codyck_complement_popa() -> PoPA:
    """Complement of :func:`codyck_popa` over ``{a, [, ]}``.

    Besides the short-suffix and unbalanced cases, this also accepts words
    that start with a bracket and words with an ``a`` after a bracket.
    """
    trans = [("q0", "a", "q0", "u"),
             ("q0", OPEN, "q1", "s"), ("q0", CLOSE, "q1", "t"),
             ("q1", OPEN, "q1", "s'"), ("q1", CLOSE, "q1", "t'"),
             ("q1", OPEN, "q2", "s''"), ("q1", CLOSE, "q2", "t''"),
             ("q2", (OPEN, CLOSE), "q2", None),
             ("q1", "a", "q3", "v"), ("q3", DYCK_SIGMA, "q3", None)]
    no_tail = linear(sum_of("s''", "t''"), "=", 0)
    psi = disj(
        conj(linear(minus(sum_of("u"), _prefix_sum()), ">", 0), no_tail),
        conj(linear(minus(sum_of("u"), _prefix_sum()), "=", 0),
             linear(minus(sum_of("t", "t'"), sum_of("s", "s'")), "<=", 0)),
        conj(linear({"u": 1}, "=", 0), no_tail),
        linear({"v": 1}, ">=", 1),
    )
    return build("codyck_complement", {"q0": 0, "q1": 1, "q2": 2, "q3": 2}, DYCK_SIGMA, "q0",
                 {"q0", "q1", "q2", "q3"}, trans, psi)


def median_normalform_popa() -> PoPA:
    return normalform_to_popa(median_terms(), name="median_normalform")


BUILTINS = {
    "median": median_popa,
    "median_complement": median_complement_popa,
    "codyck": codyck_popa,
    "codyck_complement": codyck_complement_popa,
    "median_normalform": median_normalform_popa,
}


def builtin_popa(name: str) -> PoPA:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise UnknownName(f"unknown built-in automaton {name!r}", name=name) from None


def median_predicate(w: Sequence) -> bool:
    return len(w) % 2 == 1 and w[len(w) // 2] == "a"


def codyck_predicate(w: Sequence) -> bool:
    """w = a^n v with n >= 1, v over brackets, |v| >= n, more ']' than '[' in v[:n]."""
    w = tuple(GLYPHS.get(x, x) for x in w)
    n = 0
    while n < len(w) and w[n] == "a":
        n += 1
    v = w[n:]
    if n == 0 or "a" in v or len(v) < n:
        return False
    head = v[:n]
    return head.count(CLOSE) > head.count(OPEN)


# --- files ----------------------------------------------------------------

def dump_popa(a: PoPA) -> dict:
    return {
        "name": a.name,
        "states": [{"id": q, "rank": a.rank[q]} for q in a.states],
        "alphabet": list(a.alphabet),
        "initial": a.initial,
        "final": sorted(a.final),
        "transitions": [{"from": t.src, "letter": t.letter, "to": t.dst, "var": t.var}
                        for t in a.transitions],
        "psi": render_formula(a.psi),
    }


def popa_from_dict(desc: dict) -> PoPA:
    try:
        states = {str(s["id"]): s["rank"] for s in desc["states"]}
        trans = tuple(Transition(str(t["from"]), GLYPHS.get(str(t["letter"]), str(t["letter"])),
                                 str(t["to"]), str(t.get("var") or f"_t{i}"))
                      for i, t in enumerate(desc["transitions"]))
        alphabet = tuple(GLYPHS.get(str(x), str(x)) for x in desc["alphabet"])
        psi = desc.get("psi", "true")
        psi = parse_formula(psi) if isinstance(psi, str) else psi
        return PoPA(tuple(states), states, alphabet, str(desc["initial"]),
                    frozenset(map(str, desc["final"])), trans, psi, str(desc.get("name", "popa")))
    except (KeyError, TypeError, AttributeError) as e:
        raise ParseError(f"malformed automaton description: {e}") from None


def load_popa(spec: str) -> PoPA:
    """``builtin:<name>`` or a path to a JSON automaton file."""
    if spec.startswith("builtin:"):
        return builtin_popa(spec[len("builtin:"):])
    try:
        with open(spec, encoding="utf-8") as fh:
            desc = json.load(fh)
    except json.JSONDecodeError as e:
        raise ParseError(f"{spec}: line {e.lineno} column {e.colno}: {e.msg}",
                         line=e.lineno, column=e.colno) from None
    return popa_from_dict(desc)
