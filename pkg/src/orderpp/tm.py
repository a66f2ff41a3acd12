"""Linear-bounded Turing machines and their compilation into successor protocols.

Machines have no endmarkers: a move off either end of the tape leaves the
head where it is.  They may only accept on the rightmost cell and have no
transitions out of the accepting state.

A tape cell of the simulated machine is a triple ``(head, symbol, position)``
where ``head`` is a machine state or ``"-"`` and ``position`` is ``"fst"``,
``"-"`` or ``"lst"``.  :class:`TmConfigProtocol` runs the machine on a word of
such cells; :func:`compile_tm` wraps it into a protocol over the input
alphabet.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

from . import rule_tables
from .constructions import (
    Handshake,
    Intersection,
    Rename,
    Union,
    exactly_one_semidecider,
    ordered_semidecider,
)
from .errors import ParseError, TMInvalid
from .protocol import NAME_RE, LazyProtocol, Opinion, Pred, Protocol, Rule

NO_HEAD = "-"
FIRST, MIDDLE, LAST = "fst", "-", "lst"
POSITIONS = (FIRST, MIDDLE, LAST)


@dataclass(frozen=True)
class TuringMachine:
    states: tuple
    initial: str
    accept: str
    reject: str
    input_alphabet: tuple
    tape_alphabet: tuple
    delta: tuple                      # (((p, a), (q, b, "L" | "R")), ...)
    check_length: int = field(default=4, compare=False)

    def moves(self, p, a):
        return [(q, b, d) for (src, (q, b, d)) in self.delta if src == (p, a)]

    def to_dict(self) -> dict:
        return {
            "states": list(self.states), "initial": self.initial, "accept": self.accept,
            "reject": self.reject, "input_alphabet": list(self.input_alphabet),
            "tape_alphabet": list(self.tape_alphabet),
            "delta": [{"from": [p, a], "to": [q, b, d]} for (p, a), (q, b, d) in self.delta],
        }


def tm_from_dict(desc: dict, check_length: int = 4) -> TuringMachine:
    """Build and validate a machine from its JSON description."""
    problems = []
    try:
        states = tuple(str(x) for x in desc["states"])
        initial, accept, reject = str(desc["initial"]), str(desc["accept"]), str(desc["reject"])
        sigma = tuple(str(x) for x in desc["input_alphabet"])
        tape = tuple(str(x) for x in desc["tape_alphabet"])
        raw_delta = desc.get("delta", [])
    except (KeyError, TypeError) as e:
        raise TMInvalid(f"missing or malformed field: {e}", violations=[str(e)]) from None
    delta = []
    for k, entry in enumerate(raw_delta):
        try:
            (p, a), (q, b, d) = entry["from"], entry["to"]
        except (KeyError, TypeError, ValueError):
            problems.append(f"delta[{k}]: expected from:[p,sym] and to:[q,sym,dir]")
            continue
        delta.append(((str(p), str(a)), (str(q), str(b), str(d))))
    m = TuringMachine(states, initial, accept, reject, sigma, tape, tuple(delta), check_length)
    validate_tm(m, problems)
    return m


def load_tm(text: str, check_length: int = 4) -> TuringMachine:
    try:
        desc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"line {e.lineno} column {e.colno}: {e.msg}",
                         line=e.lineno, column=e.colno) from None
    return tm_from_dict(desc, check_length)


def validate_tm(m: TuringMachine, problems: list | None = None) -> None:
    """Raise TM_INVALID listing every violated convention."""
    problems = list(problems or [])
    names = set(m.states)
    if len(names) != len(m.states):
        problems.append("states: duplicate names")
    for x in list(m.states) + list(m.tape_alphabet):
        if not NAME_RE.match(x) or x == NO_HEAD:
            problems.append(f"invalid name {x!r}")
    for role in ("initial", "accept", "reject"):
        if getattr(m, role) not in names:
            problems.append(f"{role}: {getattr(m, role)!r} is not a state")
    if len({m.initial, m.accept, m.reject}) != 3:
        problems.append("initial, accept and reject states must be distinct")
    if not m.input_alphabet:
        problems.append("input_alphabet: must be non-empty")
    if not set(m.input_alphabet) <= set(m.tape_alphabet):
        problems.append("input_alphabet must be contained in tape_alphabet")
    for k, ((p, a), (q, b, d)) in enumerate(m.delta):
        if p not in names or q not in names:
            problems.append(f"delta[{k}]: unknown state")
        if a not in m.tape_alphabet or b not in m.tape_alphabet:
            problems.append(f"delta[{k}]: unknown tape symbol")
        if d not in ("L", "R"):
            problems.append(f"delta[{k}]: direction must be L or R")
        if p == m.accept:
            problems.append(f"delta[{k}]: no transition may leave the accepting state")
    if not problems:
        # acceptance must happen on the rightmost cell; checked on all short inputs
        for n in range(1, m.check_length + 1):
            for w in product(m.input_alphabet, repeat=n):
                bad = _accepts_off_right(m, w)
                if bad is not None:
                    problems.append(f"accepting state entered on cell {bad + 1} of "
                                    f"{''.join(w)!r} (must be the last cell)")
                    break
            if problems:
                break
    if problems:
        raise TMInvalid("; ".join(problems), violations=problems)


def _step(m: TuringMachine, conf):
    state, head, tape = conf
    n = len(tape)
    for q, b, d in m.moves(state, tape[head]):
        t = tape[:head] + (b,) + tape[head + 1:]
        h = min(head + 1, n - 1) if d == "R" else max(head - 1, 0)
        yield (q, h, t)


def _reachable(m: TuringMachine, word: Sequence):
    start = (m.initial, 0, tuple(word))
    seen = {start}
    queue = deque([start])
    while queue:
        conf = queue.popleft()
        yield conf
        for nxt in _step(m, conf):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)


def _accepts_off_right(m, word):
    for state, head, tape in _reachable(m, word):
        if state == m.accept and head != len(tape) - 1:
            return head
    return None


def tm_accepts(m: TuringMachine, word: Sequence) -> bool:
    """Direct simulation: some run from the initial configuration reaches the accepting state."""
    if len(word) == 0:
        return False
    return any(state == m.accept for state, _h, _t in _reachable(m, word))


@dataclass(frozen=True)
class TmOracle:
    machine: TuringMachine

    @property
    def alphabet(self):
        return self.machine.input_alphabet

    def accepts(self, word) -> bool:
        return tm_accepts(self.machine, tuple(word))


# --- protocol over machine configurations ---------------------------------

def cell_alphabet(m: TuringMachine) -> list:
    heads = [NO_HEAD] + list(m.states)
    return [(h, a, pos) for h in heads for a in m.tape_alphabet for pos in POSITIONS]


def valid_configuration(m: TuringMachine, word: Sequence) -> bool:
    """Word of at least two cells with fst/lst exactly at the ends and exactly one head."""
    n = len(word)
    if n < 2:
        return False
    for i, (_h, _a, pos) in enumerate(word):
        if (pos == FIRST) != (i == 0) or (pos == LAST) != (i == n - 1):
            return False
    return sum(1 for h, _a, _p in word if h != NO_HEAD) == 1


class TmConfigProtocol(LazyProtocol):
    """Successor protocol that accepts valid machine configurations leading to acceptance.

    A state is ``(x, (y, z, o))``: the input cell x, the cell y the agent has
    been acting on, the current cell z and a belief o in {"T", "F", "G"}
    ("G" marks an agent taking part in a reset).
    """

    input_saving = True

    def __init__(self, m: TuringMachine):
        super().__init__(f"tm-config({m.initial})")
        self.m = m
        self.letters = tuple(cell_alphabet(m))
        self._letter_set = frozenset(self.letters)
        self.right = [(k, src, dst) for k, (src, dst) in enumerate(m.delta) if dst[2] == "R"]
        self.left = [(k, src, dst) for k, (src, dst) in enumerate(m.delta) if dst[2] == "L"]
        self.metadata = {"rules": rule_tables.TM}

    def initial_state(self, letter):
        return (letter, (letter, letter, "F"))

    def opinion(self, state) -> Opinion:
        x, (y, z, o) = state
        if x not in self._letter_set or o not in "TFG":
            raise KeyError(state)
        return Opinion.of(x == y and o == "T")

    def split(self, state):
        return state

    def join(self, letter, rest):
        return (letter, rest)

    def non_io_predicates(self) -> set:
        return {Pred.SUCC}

    def predicates(self) -> set:
        return {Pred.TRUE, Pred.SUCC}

    def _compute(self, p, q):
        m = self.m
        states = set(m.states)
        x, (y, z, o) = p
        x2, (y2, z2, o2) = q
        succ, true = Pred.SUCC, Pred.TRUE

        def first(y_=y, z_=z, o_=o):
            return (x, (y_, z_, o_))

        def second(y_=y2, z_=z2, o_=o2):
            return (x2, (y_, z_, o_))

        # (1)/(2): the head moves to the neighbouring cell
        for k, (hp, a), (hq, b, _d) in self.right:
            if z[0] == hp and z[1] == a and z2[0] == NO_HEAD:
                yield succ, first(z_=(NO_HEAD, b, z[2])), second(z_=(hq, z2[1], z2[2])), (1, k)
        for k, (hp, a), (hq, b, _d) in self.left:
            if z[0] == NO_HEAD and z2[0] == hp and z2[1] == a:
                yield succ, first(z_=(hq, z[1], z[2])), second(z_=(NO_HEAD, b, z2[2])), (2, k)
        # (3)/(4): a move off the end of the tape stays put
        if x[2] == LAST:
            for k, (hp, a), (hq, b, _d) in self.right:
                if z[0] == hp and z[1] == a:
                    yield true, first(z_=(hq, b, z[2])), q, (3, k)
        if x[2] == FIRST:
            for k, (hp, a), (hq, b, _d) in self.left:
                if z[0] == hp and z[1] == a:
                    yield true, first(z_=(hq, b, z[2])), q, (4, k)
        # (5)/(6): belief propagation
        if x[2] == FIRST and x2[2] == LAST and z2[0] == m.accept:
            yield true, first(o_="T"), q, (5, 0)
        if o == "T":
            yield succ, p, second(o_="T"), (6, 0)
        # (7)-(9): reset after an input change
        if x2[2] == LAST and (x != y or x2 != y2):
            yield true, p, second(o_="G"), (7, 0)
        if o2 == "G":
            yield succ, first(o_="G"), (x2, (x2, x2, "F")), (8, 0)
        if o == "G" and x[2] == FIRST:
            yield true, (x, (x, x, "F")), q, (9, 0)
        # (10)-(12): malformed inputs
        if x[0] in states and x2[0] in states:
            yield true, p, second(o_="F"), (10, 0)
        if x[2] == x2[2] and x[2] in (FIRST, LAST):
            yield true, p, second(o_="F"), (11, 0)
        if x[2] == LAST or x2[2] == FIRST:
            yield succ, first(o_="F"), second(o_="F"), (12, 0)

    def rule_label(self, key) -> str:
        return f"({key[0]})"


# --- compilation pipeline -------------------------------------------------

def shape_protocol(m: TuringMachine) -> Rename:
    """Semi-decider (with stabilizing inputs) for valid initial configurations.

    The cells are renamed from 0* 1* 2* with exactly one 0 and one 2.
    """
    idx = ["0", "1", "2"]
    inner = ordered_semidecider(2, pred=Pred.SUCC)
    inner = Intersection(inner, exactly_one_semidecider(idx, "0"))
    inner = Intersection(inner, exactly_one_semidecider(idx, "2"))
    f = {
        "0": {(m.initial, a, FIRST) for a in m.input_alphabet},
        "1": {(NO_HEAD, a, MIDDLE) for a in m.input_alphabet},
        "2": {(NO_HEAD, a, LAST) for a in m.input_alphabet},
    }
    return Rename(inner, f, cell_alphabet(m), name="tm-shape")


def single_letter_protocol(m: TuringMachine) -> Protocol:
    """Input-saving decider for the one-letter words the machine accepts.

    A lone agent keeps its initial opinion; in larger populations every agent
    eventually turns F.
    """
    sigma = list(m.input_alphabet)
    states = [(a, r) for a in sigma for r in ("fresh", "dead")]
    opinions = {(a, r): Opinion.of(r == "fresh" and tm_accepts(m, (a,))) for a, r in states}
    rules = [Rule(((a, "fresh"), s), Pred.TRUE, ((a, "dead"), s), "die")
             for a in sigma for s in states]
    return Protocol(states, opinions, [(a, "fresh") for a in sigma], rules, name="tm-length-1",
                    inputs={a: (a, "fresh") for a in sigma},
                    factor={s: s for s in states})


def compile_tm(m: TuringMachine, handshake: bool = True):
    """IO successor semi-decider for the machine's language.

    Stages: configuration protocol intersected with the shape protocol, renamed
    to input letters, united with the one-letter decider, then the handshake
    rewrite of the remaining non-IO successor rules.
    """
    validate_tm(m)
    cells = Intersection(shape_protocol(m), TmConfigProtocol(m), name="tm-cells")
    g = {c: {c[1]} for c in cell_alphabet(m) if c[1] in m.input_alphabet}
    words = Rename(cells, g, m.input_alphabet, name="tm-words")
    both = Union(words, single_letter_protocol(m), name="tm-union")
    return Handshake(both, name="tm") if handshake else both


def a_plus_machine() -> TuringMachine:
    """Accepts a+ over {a, b}.

    The machine overwrites each a with A while moving right.  Reading A means
    the last right move stayed put, so the head is on the last cell.
    """
    return tm_from_dict({
        "states": ["p0", "pacc", "prej"], "initial": "p0", "accept": "pacc", "reject": "prej",
        "input_alphabet": ["a", "b"], "tape_alphabet": ["a", "b", "A"],
        "delta": [{"from": ["p0", "a"], "to": ["p0", "A", "R"]},
                  {"from": ["p0", "A"], "to": ["pacc", "A", "R"]}],
    })
