"""Reference languages used to check protocols.

An oracle is any object with an ``alphabet`` tuple and an ``accepts(word)``
method.  :func:`resolve_oracle` understands the ``builtin:`` names used on the
command line and DFA / expression / machine files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

from .errors import ParseError, UnknownName


@dataclass(frozen=True)
class PredicateOracle:
    name: str
    alphabet: tuple
    predicate: Callable

    def accepts(self, word: Sequence) -> bool:
        return bool(self.predicate(tuple(word)))


def astarbstar() -> PredicateOracle:
    return PredicateOracle("astarbstar", ("a", "b"),
                           lambda w: "".join(w).find("ba") < 0)


def majority() -> PredicateOracle:
    return PredicateOracle("majority", ("a", "b"), lambda w: w.count("a") > w.count("b"))


def median() -> PredicateOracle:
    return PredicateOracle("median", ("a", "b"),
                           lambda w: len(w) % 2 == 1 and w[len(w) // 2] == "a")


def ordered(k: int) -> PredicateOracle:
    letters = tuple(str(i) for i in range(k + 1))
    return PredicateOracle(f"ordered:{k}", letters,
                           lambda w: all(int(x) <= int(y) for x, y in zip(w, w[1:])))


def exactly_one(a: str, alphabet: Sequence = ("a", "b")) -> PredicateOracle:
    alphabet = tuple(alphabet)
    if a not in alphabet:
        alphabet = alphabet + (a,)
    return PredicateOracle(f"exactly_one:{a}", alphabet, lambda w: w.count(a) == 1)


@dataclass(frozen=True)
class Dfa:
    alphabet: tuple
    initial: str
    accepting: frozenset
    delta: dict          # (state, letter) -> state; missing entries reject

    @property
    def name(self) -> str:
        return "dfa"

    def accepts(self, word: Sequence) -> bool:
        if len(word) == 0:
            return False
        q = self.initial
        for x in word:
            q = self.delta.get((q, x))
            if q is None:
                return False
        return q in self.accepting


def dfa_from_dict(desc: dict) -> Dfa:
    """``{alphabet, initial, accepting, transitions: {state: {letter: state}}}``."""
    try:
        alphabet = tuple(str(x) for x in desc["alphabet"])
        delta = {}
        for q, row in desc["transitions"].items():
            for x, t in row.items():
                if x not in alphabet:
                    raise ParseError(f"transitions[{q}]: letter {x!r} not in the alphabet")
                delta[(str(q), str(x))] = str(t)
        return Dfa(alphabet, str(desc["initial"]), frozenset(map(str, desc["accepting"])), delta)
    except (KeyError, TypeError, AttributeError) as e:
        raise ParseError(f"malformed DFA description: {e}") from None


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}",
                         line=e.lineno, column=e.colno) from None


BUILTINS = {
    "astarbstar": astarbstar,
    "majority": majority,
    "median": median,
}


def resolve_oracle(spec: str, alphabet: Sequence | None = None):
    """Resolve ``builtin:<name>``, ``dfa:<file>``, ``sigma2:<file>``, ``tm:<file>`` or a DFA path.

    Builtin names: astarbstar, majority, median, ordered:k, exactly_one:a.
    """
    if spec.startswith("builtin:"):
        name = spec[len("builtin:"):]
        if name in BUILTINS:
            return BUILTINS[name]()
        if name.startswith("ordered:"):
            try:
                return ordered(int(name.split(":", 1)[1]))
            except ValueError:
                raise UnknownName(f"bad oracle {spec!r}", name=spec) from None
        if name.startswith("exactly_one:"):
            letter = name.split(":", 1)[1]
            return exactly_one(letter, alphabet or ("a", "b"))
        raise UnknownName(f"unknown builtin oracle {name!r}", name=name)
    if spec.startswith("sigma2:"):
        from .constructions import Sigma2Oracle, parse_sigma2
        terms, letters = parse_sigma2(_read_json(spec[len("sigma2:"):]))
        return Sigma2Oracle(terms, tuple(alphabet) if alphabet else letters)
    if spec.startswith("tm:"):
        from .tm import TmOracle, tm_from_dict
        return TmOracle(tm_from_dict(_read_json(spec[len("tm:"):])))
    path = spec[len("dfa:"):] if spec.startswith("dfa:") else spec
    return dfa_from_dict(_read_json(path))
