"""Population protocols over totally ordered agents.

A protocol has a finite state set, an opinion per state, a set of input
letters (each identified with an initial state) and transition rules guarded by
a numerical predicate on the positions of the two interacting agents.

Two flavours share one interface:

* :class:`Protocol` stores an explicit, expanded rule list and is what the
  JSON codec reads and writes.
* :class:`LazyProtocol` subclasses compute the outcomes of an interaction on
  demand.  The combinators in :mod:`orderpp.constructions` build product state
  spaces that are far too large to list, so they are evaluated lazily and only
  on the states an analysis actually touches.

States are arbitrary hashable values (strings for hand-written protocols,
nested tuples for products).  :func:`render_state` turns them into the
canonical ASCII names used in files and reports.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Sequence

from .errors import (
    NotInputSaving,
    ParseError,
    SizeBudget,
    UnknownStateError,
    ValidationError,
)

State = Hashable
Config = tuple


class Opinion(enum.Enum):
    TOP = "TOP"
    BOT = "BOT"

    def __invert__(self):
        return Opinion.BOT if self is Opinion.TOP else Opinion.TOP

    @classmethod
    def of(cls, flag: bool) -> "Opinion":
        return cls.TOP if flag else cls.BOT

    @classmethod
    def parse(cls, text) -> "Opinion":
        if isinstance(text, bool):
            return cls.of(text)
        key = str(text).strip()
        table = {"TOP": cls.TOP, "top": cls.TOP, "⊤": cls.TOP, "T": cls.TOP,
                 "BOT": cls.BOT, "bot": cls.BOT, "⊥": cls.BOT, "F": cls.BOT}
        if key not in table:
            raise ValueError(f"not an opinion: {text!r}")
        return table[key]


class Pred(enum.Enum):
    """Numerical predicate on the positions (i, j) of the two agents."""

    TRUE = "true"
    LT = "lt"
    SUCC = "succ"

    def admits(self, i: int, j: int) -> bool:
        if i == j:
            return False
        if self is Pred.TRUE:
            return True
        if self is Pred.LT:
            return i < j
        return j == i + 1

    @classmethod
    def parse(cls, text) -> "Pred":
        key = str(text).strip().lower()
        aliases = {"true": cls.TRUE, "lt": cls.LT, "<": cls.LT,
                   "succ": cls.SUCC, "+1": cls.SUCC}
        if key not in aliases:
            raise ValueError(f"unsupported predicate {text!r}")
        return aliases[key]


@dataclass(frozen=True)
class Rule:
    pre: tuple
    pred: Pred
    post: tuple
    label: str | None = None

    @property
    def is_io(self) -> bool:
        return self.pre[0] == self.post[0] or self.pre[1] == self.post[1]


@dataclass(frozen=True)
class StepWitness:
    """A single step: rule key plus 1-based positions (first agent at i)."""

    rule: Any
    positions: tuple


# --- state names ----------------------------------------------------------

NAME_RE = re.compile(r"^[A-Za-z0-9_.<>|^~!+\-#@]+$")

# Unicode glyphs accepted on input; the canonical (serialized) form is ASCII.
GLYPH_ALIASES = {
    "♔": ".CROWN",
    "→": ".R",
    "←": ".L",
    "⊤": ".TOP",
    "⊥": ".BOT",
    "\u0304": ".bar",
    "\u0331": ".bar",
    "⌛": ".hg",
    "▷": ".gt",
    "◁": ".lt",
    "✓": "ok",
    "✗": "err",
    "⚙": ".G",
}
_PRECOMPOSED = {"\u0101": "a\u0304", "\u0113": "e\u0304", "\u012b": "i\u0304", "\u014d": "o\u0304", "\u016b": "u\u0304"}


def canonical_name(text: str) -> str:
    """Map glyph spellings such as ``a♔⊤`` to their ASCII alias ``a.CROWN.TOP``."""
    text = text.strip()
    for k, v in _PRECOMPOSED.items():
        text = text.replace(k, v)
    out = []
    for ch in text:
        if ch in GLYPH_ALIASES:
            out.append(GLYPH_ALIASES[ch])
        elif ch.isspace():
            continue
        else:
            out.append(ch)
    name = "".join(out)
    if name.startswith(".") and len(name) > 1 and name[1:] in ("ok", "err"):
        name = name[1:]
    return name


def render_state(state) -> str:
    if isinstance(state, str):
        return state
    if isinstance(state, Opinion):
        return "T" if state is Opinion.TOP else "F"
    if isinstance(state, tuple):
        return "<" + "|".join(render_state(s) for s in state) + ">"
    return str(state)


# --- protocols ------------------------------------------------------------

class BaseProtocol:
    """Interface shared by explicit and lazily evaluated protocols."""

    name: str = "protocol"
    letters: tuple = ()

    def initial_state(self, letter):
        raise NotImplementedError

    def opinion(self, state) -> Opinion:
        raise NotImplementedError

    def outcomes(self, p, q) -> Sequence[tuple]:
        """All (pred, r, s, key) with a rule ``p, q ->pred r, s``."""
        raise NotImplementedError

    def has_state(self, state) -> bool:
        raise NotImplementedError

    def rule_label(self, key) -> str:
        return str(key)

    def state_name(self, state) -> str:
        return render_state(state)

    def is_immediate_observation(self) -> bool:
        return not self.non_io_predicates()

    def non_io_predicates(self) -> set:
        """Predicates of the rules that change both agents."""
        raise NotImplementedError

    def predicates(self) -> set:
        raise NotImplementedError

    # input-saving structure: states factor as (letter, rest)
    input_saving = False

    def split(self, state):
        raise NotInputSaving(f"{self.name} is not input-saving")

    def join(self, letter, rest):
        raise NotInputSaving(f"{self.name} is not input-saving")

    def word_config(self, word: Sequence) -> Config:
        if len(word) == 0:
            raise ValueError("empty configurations are not allowed")
        return tuple(self.initial_state(x) for x in word)


class Protocol(BaseProtocol):
    """Explicit protocol with an expanded rule list.

    ``inputs`` maps each input letter to its initial state; by default letters
    are the initial states themselves.  ``factor`` optionally maps each state
    to ``(letter, rest)`` for input-saving protocols.
    """

    def __init__(self, states: Sequence, opinions: dict, initial: Sequence,
                 rules: Sequence[Rule], name: str = "protocol",
                 metadata: dict | None = None, inputs: dict | None = None,
                 factor: dict | None = None, names: dict | None = None):
        self.name = name
        self.states = tuple(states)
        self._state_set = frozenset(self.states)
        self.opinions = dict(opinions)
        self.rules = tuple(rules)
        self.metadata = dict(metadata or {})
        if inputs is None:
            inputs = {q: q for q in initial}
        self.inputs = dict(inputs)
        self.letters = tuple(inputs)
        self.initial = tuple(inputs[x] for x in self.letters)
        self.factor = dict(factor) if factor is not None else None
        self._join = ({v: k for k, v in self.factor.items()}
                      if self.factor is not None else None)
        self.input_saving = self.factor is not None
        self._names = dict(names or {})
        self._index: dict = {}
        for k, r in enumerate(self.rules):
            self._index.setdefault(r.pre, []).append((r.pred, r.post[0], r.post[1], k))

    def __repr__(self):
        return f"Protocol({self.name!r}, {len(self.states)} states, {len(self.rules)} rules)"

    def __eq__(self, other):
        if not isinstance(other, Protocol):
            return NotImplemented
        return (self.states == other.states and self.opinions == other.opinions
                and self.initial == other.initial and self.rules == other.rules
                and self.letters == other.letters)

    __hash__ = None

    def initial_state(self, letter):
        try:
            return self.inputs[letter]
        except KeyError:
            raise UnknownStateError(f"unknown input letter {letter!r}") from None

    def opinion(self, state) -> Opinion:
        return self.opinions[state]

    def outcomes(self, p, q):
        return self._index.get((p, q), ())

    def has_state(self, state) -> bool:
        return state in self._state_set

    def rule_label(self, key) -> str:
        label = self.rules[key].label
        return label if label is not None else f"#{key}"

    def state_name(self, state) -> str:
        name = self._names.get(state)
        return name if name is not None else render_state(state)

    def is_immediate_observation(self) -> bool:
        return all(r.is_io for r in self.rules)

    def non_io_predicates(self) -> set:
        return {r.pred for r in self.rules if not r.is_io}

    def predicates(self) -> set:
        return {r.pred for r in self.rules}

    def split(self, state):
        if self.factor is None:
            return super().split(state)
        return self.factor[state]

    def join(self, letter, rest):
        if self._join is None:
            return super().join(letter, rest)
        return self._join[(letter, rest)]

    def state_by_name(self, name: str):
        table = getattr(self, "_by_name", None)
        if table is None:
            table = {self.state_name(s): s for s in self.states}
            self._by_name = table
        key = canonical_name(name)
        if key not in table:
            raise UnknownStateError(f"unknown state {name!r}", state=name)
        return table[key]


class LazyProtocol(BaseProtocol):
    """Protocol whose interactions are computed on demand and memoized."""

    def __init__(self, name: str):
        self.name = name
        self._cache: dict = {}

    def outcomes(self, p, q):
        key = (p, q)
        hit = self._cache.get(key)
        if hit is None:
            hit = tuple(self._compute(p, q))
            self._cache[key] = hit
        return hit

    def _compute(self, p, q):
        raise NotImplementedError

    def has_state(self, state) -> bool:
        try:
            self.opinion(state)
        except Exception:
            return False
        return True

    # Generic fallbacks scan the states reachable from the inputs; the
    # combinators override them with structural answers.
    def _scan(self):
        states = reachable_states(self)
        for a in states:
            for b in states:
                for pred, r, s, _key in self.outcomes(a, b):
                    yield (a, b), pred, (r, s)

    def non_io_predicates(self) -> set:
        return {pred for pre, pred, post in self._scan()
                if pre[0] != post[0] and pre[1] != post[1]}

    def predicates(self) -> set:
        return {pred for _pre, pred, _post in self._scan()}


# --- step semantics -------------------------------------------------------

def _check_config(p: BaseProtocol, c: Sequence):
    if len(c) == 0:
        raise ValueError("empty configurations are not allowed")
    for s in c:
        if not p.has_state(s):
            raise UnknownStateError(f"state {render_state(s)!r} is not in {p.name}",
                                    state=render_state(s))


def successors(p: BaseProtocol, c: Sequence) -> list:
    """One-step successors of ``c`` excluding no-ops, in rule-then-position order."""
    c = tuple(c)
    _check_config(p, c)
    n = len(c)
    found = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            for pred, r, s, key in p.outcomes(c[i], c[j]):
                if not pred.admits(i + 1, j + 1):
                    continue
                if r == c[i] and s == c[j]:
                    continue
                d = list(c)
                d[i] = r
                d[j] = s
                found.append((key, i + 1, j + 1, tuple(d)))
    found.sort(key=lambda t: (t[0], t[1], t[2]))
    return [(d, StepWitness(key, (i, j))) for key, i, j, d in found]


def replay(p: BaseProtocol, c: Sequence, w: StepWitness) -> Config:
    """Apply a witness to ``c``; raises ``ValueError`` if it does not fit."""
    c = tuple(c)
    i, j = w.positions
    if not (1 <= i <= len(c) and 1 <= j <= len(c)):
        raise ValueError(f"positions {w.positions} out of range")
    for pred, r, s, key in p.outcomes(c[i - 1], c[j - 1]):
        if key == w.rule and pred.admits(i, j):
            d = list(c)
            d[i - 1] = r
            d[j - 1] = s
            return tuple(d)
    raise ValueError(f"rule {w.rule!r} is not enabled at {w.positions}")


def replay_report_trace(p: BaseProtocol, initial: Sequence, steps: Sequence) -> Config:
    """Replay a trace as printed in a report and return the final configuration.

    ``initial`` lists the input letters by name; each step carries a rule
    label, 1-based positions and the configuration it leads to.
    """
    by_name = {str(x): x for x in p.letters}
    try:
        c = p.word_config(tuple(by_name[str(x)] for x in initial))
    except KeyError as e:
        raise ValueError(f"unknown input letter {e.args[0]!r}") from None
    for k, step in enumerate(steps):
        i, j = step["positions"]
        if not (1 <= i <= len(c) and 1 <= j <= len(c)) or i == j:
            raise ValueError(f"step {k}: bad positions {step['positions']}")
        options = []
        for pred, r, s, key in p.outcomes(c[i - 1], c[j - 1]):
            if pred.admits(i, j) and p.rule_label(key) == step["rule"]:
                d = list(c)
                d[i - 1] = r
                d[j - 1] = s
                options.append(tuple(d))
        if "to" in step:
            options = [d for d in options if render_config(p, d) == step["to"]]
        if not options:
            raise ValueError(f"step {k}: rule {step['rule']!r} does not fit at {step['positions']}")
        c = options[0]
    return c


def opinion_consensus(p: BaseProtocol, c: Sequence) -> Opinion | None:
    ops = {p.opinion(s) for s in c}
    if len(ops) == 1:
        return ops.pop()
    return None


# --- codec ----------------------------------------------------------------

def _expand_rules(raw_rules, state_ids, problems):
    rules = []
    for idx, raw in enumerate(raw_rules):
        where = f"rules[{idx}]"
        if not isinstance(raw, dict):
            problems.append(f"{where}: expected an object")
            continue
        try:
            pre = [canonical_name(x) if x != "_" else "_" for x in raw["pre"]]
            post = [canonical_name(x) if x != "_" else "_" for x in raw["post"]]
            pred = Pred.parse(raw.get("pred", "true"))
        except KeyError as e:
            problems.append(f"{where}: missing field {e.args[0]}")
            continue
        except (ValueError, TypeError, AttributeError) as e:
            problems.append(f"{where}: {e}")
            continue
        if len(pre) != 2 or len(post) != 2:
            problems.append(f"{where}: pre and post must be pairs")
            continue
        label = raw.get("label")
        bad = [x for x in pre + post if x != "_" and x not in state_ids]
        if bad:
            for x in bad:
                problems.append(f"{where}: unknown state {x!r}")
            continue
        choices = [state_ids if x == "_" else [x] for x in pre]
        for a in choices[0]:
            for b in choices[1]:
                got = (a, b)
                out = tuple(got[k] if post[k] == "_" else post[k] for k in range(2))
                rules.append(Rule(got, pred, out, label))
    return rules


def validate_protocol(desc: dict) -> Protocol:
    """Build a :class:`Protocol` from a raw description, or raise VALIDATION."""
    problems = []
    if not isinstance(desc, dict):
        raise ValidationError(["protocol description must be an object"])
    raw_states = desc.get("states")
    if not isinstance(raw_states, list) or not raw_states:
        problems.append("states: at least one state is required")
        raw_states = []
    ids, opinions, seen = [], {}, set()
    for k, entry in enumerate(raw_states):
        where = f"states[{k}]"
        if not isinstance(entry, dict) or "id" not in entry:
            problems.append(f"{where}: expected an object with an id")
            continue
        name = canonical_name(str(entry["id"]))
        if not name or not NAME_RE.match(name):
            problems.append(f"{where}: invalid state name {entry['id']!r}")
            continue
        if name in seen:
            problems.append(f"{where}: duplicate state name {name!r}")
            continue
        try:
            op = Opinion.parse(entry.get("opinion", "BOT"))
        except ValueError as e:
            problems.append(f"{where}: {e}")
            continue
        seen.add(name)
        ids.append(name)
        opinions[name] = op
    raw_initial = desc.get("initial")
    if not isinstance(raw_initial, list) or not raw_initial:
        problems.append("initial: the initial set must be non-empty")
        raw_initial = []
    initial = []
    for x in raw_initial:
        name = canonical_name(str(x))
        if name not in seen:
            problems.append(f"initial: unknown state {name!r}")
        elif name not in initial:
            initial.append(name)
    rules = _expand_rules(desc.get("rules", []), ids, problems)
    inputs = None
    if "inputs" in desc:
        inputs = {}
        raw_inputs = desc["inputs"]
        if not isinstance(raw_inputs, dict) or not raw_inputs:
            problems.append("inputs: expected a non-empty letter -> state object")
            raw_inputs = {}
        for letter, target in raw_inputs.items():
            key = canonical_name(str(target))
            if key not in initial:
                problems.append(f"inputs[{letter}]: {key!r} is not an initial state")
            inputs[str(letter)] = key
        if inputs and set(inputs.values()) != set(initial):
            problems.append("inputs: every initial state needs exactly one letter")
    factor = None
    if "factor" in desc:
        factor = {}
        for name, pair in dict(desc["factor"]).items():
            key = canonical_name(name)
            if key not in seen:
                problems.append(f"factor: unknown state {key!r}")
                continue
            factor[key] = (pair[0], pair[1])
        if set(factor) != seen:
            problems.append("factor: every state needs a (letter, rest) pair")
    if problems:
        raise ValidationError(problems)
    p = Protocol(ids, opinions, initial, rules, name=str(desc.get("name", "protocol")),
                 metadata=desc.get("metadata"), factor=factor, inputs=inputs)
    if factor is not None:
        check_input_saving(p)
    return p


def protocol_to_dict(p: Protocol) -> dict:
    name_of = p.state_name
    out = {
        "name": p.name,
        "states": [{"id": name_of(s), "opinion": p.opinions[s].value} for s in p.states],
        "initial": [name_of(s) for s in p.initial],
        "rules": [],
    }
    if any(str(x) != name_of(q) for x, q in p.inputs.items()):
        out["inputs"] = {str(x): name_of(q) for x, q in p.inputs.items()}
    for r in p.rules:
        entry = {"pre": [name_of(r.pre[0]), name_of(r.pre[1])], "pred": r.pred.value,
                 "post": [name_of(r.post[0]), name_of(r.post[1])]}
        if r.label is not None:
            entry["label"] = r.label
        out["rules"].append(entry)
    if p.factor is not None:
        out["factor"] = {name_of(s): [str(p.factor[s][0]), render_state(p.factor[s][1])]
                         for s in p.states}
    if p.metadata:
        out["metadata"] = p.metadata
    return out


def dump_protocol(p: BaseProtocol) -> str:
    if not isinstance(p, Protocol):
        p = materialize(p)
    return json.dumps(protocol_to_dict(p), indent=1, ensure_ascii=True) + "\n"


def load_protocol(text: str) -> Protocol:
    try:
        desc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"line {e.lineno} column {e.colno}: {e.msg}",
                         line=e.lineno, column=e.colno) from None
    if not isinstance(desc, dict):
        raise ParseError("line 1: top-level value must be an object", line=1)
    seen = set()
    for k, entry in enumerate(desc.get("states") or []):
        if isinstance(entry, dict) and "id" in entry:
            name = canonical_name(str(entry["id"]))
            if name in seen:
                raise ParseError(f"states[{k}].id: duplicate state name {name!r}",
                                 field=f"states[{k}].id")
            seen.add(name)
    try:
        return validate_protocol(desc)
    except ValidationError as e:
        raise ParseError("; ".join(e.violations), violations=e.violations) from None


def read_protocol(path) -> Protocol:
    with open(path, encoding="utf-8") as fh:
        return load_protocol(fh.read())


# --- structural helpers ---------------------------------------------------

def reachable_states(p: BaseProtocol, cap: int = 200_000) -> list:
    """States occurring in some interaction closure of the initial states.

    Over-approximates the states that occur in reachable configurations of
    any length (every pair of known states is tried, including equal ones).
    """
    order = []
    seen = set()
    for x in p.letters:
        s = p.initial_state(x)
        if s not in seen:
            seen.add(s)
            order.append(s)
    done = 0
    while done < len(order):
        # pair the next new state with everything known so far (both orders)
        new = order[done]
        done += 1
        k = 0
        while k < done:
            old = order[k]
            k += 1
            for a, b in ((new, old), (old, new)):
                for _pred, r, s, _key in p.outcomes(a, b):
                    for t in (r, s):
                        if t not in seen:
                            seen.add(t)
                            order.append(t)
                            if len(order) > cap:
                                raise SizeBudget(f"more than {cap} states while materializing {p.name}")
    return order


def materialize(p: BaseProtocol, cap: int = 200_000) -> Protocol:
    """Explicit copy of ``p`` restricted to the states reachable from inputs.

    The initial state of each letter is named after the letter.
    """
    if isinstance(p, Protocol):
        return p
    states = reachable_states(p, cap)
    names = {}
    for x in p.letters:
        names[p.initial_state(x)] = str(x)
    labels = {}
    rules = []
    for a in states:
        for b in states:
            for pred, r, s, key in p.outcomes(a, b):
                if key not in labels:
                    labels[key] = p.rule_label(key)
                rules.append(Rule((a, b), pred, (r, s), labels[key]))
    factor = None
    if p.input_saving:
        factor = {s: p.split(s) for s in states}
    return Protocol(states, {s: p.opinion(s) for s in states},
                    [p.initial_state(x) for x in p.letters], rules, name=p.name,
                    inputs={x: p.initial_state(x) for x in p.letters},
                    factor=factor, names=names)


def check_input_saving(p: BaseProtocol, states: Iterable | None = None) -> None:
    """Raise NOT_INPUT_SAVING unless no rule alters an agent's input letter."""
    if not p.input_saving:
        raise NotInputSaving(f"{p.name} declares no input factorization")
    if states is None:
        states = p.states if isinstance(p, Protocol) else reachable_states(p)
    states = list(states)
    for x in p.letters:
        if p.split(p.initial_state(x))[0] != x:
            raise NotInputSaving(f"initial state of {x!r} does not record {x!r}")
    for a in states:
        for b in states:
            for _pred, r, s, key in p.outcomes(a, b):
                if p.split(r)[0] != p.split(a)[0] or p.split(s)[0] != p.split(b)[0]:
                    raise NotInputSaving(f"rule {p.rule_label(key)} changes an input letter")


def flip_opinions(p: Protocol) -> Protocol:
    """Same protocol with every opinion negated."""
    return Protocol(p.states, {s: ~o for s, o in p.opinions.items()}, p.initial,
                    p.rules, name=p.name + "-flipped", metadata=p.metadata,
                    inputs=p.inputs, factor=p.factor, names=p._names)


def parse_states(p: BaseProtocol, text: str) -> Config:
    """Parse a comma-separated configuration; without separators the text is
    split greedily into the longest known state names."""
    if not isinstance(p, Protocol):
        raise ValueError("configurations can only be parsed for explicit protocols")
    names = {p.state_name(s): s for s in p.states}
    return tuple(names[t] for t in _split(text, names, "state"))


def parse_word(p: BaseProtocol, text) -> tuple:
    """Parse an input word over ``p.letters``."""
    if not isinstance(text, str):
        return tuple(text)
    names = {canonical_name(str(x)): x for x in p.letters}
    return tuple(names[t] for t in _split(text, names, "input letter"))


def _split(text: str, names: dict, what: str) -> list:
    text = text.strip()
    if not text:
        raise ValueError("empty configurations are not allowed")
    if "," in text or " " in text:
        toks = [canonical_name(t) for t in re.split(r"[,\s]+", text) if t]
    else:
        flat = canonical_name(text)
        toks, pos = [], 0
        longest = max(len(n) for n in names)
        while pos < len(flat):
            for size in range(min(longest, len(flat) - pos), 0, -1):
                if flat[pos:pos + size] in names:
                    toks.append(flat[pos:pos + size])
                    pos += size
                    break
            else:
                raise UnknownStateError(f"cannot split {text!r} into {what}s", state=text)
    for t in toks:
        if t not in names:
            raise UnknownStateError(f"unknown {what} {t!r}", state=t)
    return toks


def render_config(p: BaseProtocol, c: Sequence) -> str:
    return " ".join(p.state_name(s) for s in c)
