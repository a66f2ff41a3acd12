"""Quantifier-free Presburger formulas over natural-number variables.

Atoms are linear constraints ``sum c*x  op  bound`` and congruences
``sum c*x == residue (mod m)``; formulas combine them with and/or/not.

Text form is an s-expression::

    formula := true | false | (and f ...) | (or f ...) | (not f)
             | (< t t) | (<= t t) | (= t t) | (>= t t) | (> t t)
             | (mod m t t)                 ; t == t modulo m, m >= 2
    term    := integer | variable | (+ t ...) | (- t t) | (- t) | (* integer t)
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping

from .errors import ParseError, UnboundVariable

OPS = ("<", "<=", "=", ">=", ">")


@dataclass(frozen=True)
class Linear:
    coeffs: tuple          # ((var, int), ...) sorted by var, no zeros
    op: str
    bound: int

    def variables(self) -> set:
        return {v for v, _c in self.coeffs}


@dataclass(frozen=True)
class Congruence:
    coeffs: tuple
    modulus: int
    residue: int

    def variables(self) -> set:
        return {v for v, _c in self.coeffs}


@dataclass(frozen=True)
class And:
    items: tuple

    def variables(self) -> set:
        return set().union(*(f.variables() for f in self.items)) if self.items else set()


@dataclass(frozen=True)
class Or:
    items: tuple

    def variables(self) -> set:
        return set().union(*(f.variables() for f in self.items)) if self.items else set()


@dataclass(frozen=True)
class Not:
    item: object

    def variables(self) -> set:
        return self.item.variables()


@dataclass(frozen=True)
class Const:
    value: bool

    def variables(self) -> set:
        return set()


TRUE, FALSE = Const(True), Const(False)


def _sum(value: Mapping, coeffs) -> int:
    total = 0
    for v, c in coeffs:
        if v not in value:
            raise UnboundVariable(f"variable {v!r} has no value", variable=v)
        total += c * value[v]
    return total


def eval_presburger(f, value: Mapping) -> bool:
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Linear):
        s = _sum(value, f.coeffs)
        return {"<": s < f.bound, "<=": s <= f.bound, "=": s == f.bound,
                ">=": s >= f.bound, ">": s > f.bound}[f.op]
    if isinstance(f, Congruence):
        return (_sum(value, f.coeffs) - f.residue) % f.modulus == 0
    if isinstance(f, And):
        return all(eval_presburger(g, value) for g in f.items)
    if isinstance(f, Or):
        return any(eval_presburger(g, value) for g in f.items)
    if isinstance(f, Not):
        return not eval_presburger(f.item, value)
    raise TypeError(f"not a formula: {f!r}")


# --- building -------------------------------------------------------------

def _normalize(coeffs: Mapping) -> tuple:
    return tuple(sorted((v, c) for v, c in coeffs.items() if c != 0))


def linear(coeffs: Mapping, op: str, bound: int) -> Linear:
    if op not in OPS:
        raise ValueError(f"unknown comparator {op!r}")
    return Linear(_normalize(coeffs), op, int(bound))


def congruence(coeffs: Mapping, modulus: int, residue: int) -> Congruence:
    if modulus < 2:
        raise ValueError("modulus must be at least 2")
    return Congruence(_normalize(coeffs), int(modulus), int(residue) % modulus)


def conj(*items):
    return And(tuple(items))


def disj(*items):
    return Or(tuple(items))


def sum_of(*names) -> dict:
    """Coefficient map for x1 + x2 + ... (repeated names add up)."""
    out: dict = {}
    for v in names:
        out[v] = out.get(v, 0) + 1
    return out


def minus(left: Mapping, right: Mapping) -> dict:
    out = dict(left)
    for v, c in right.items():
        out[v] = out.get(v, 0) - c
    return out


# --- text form ------------------------------------------------------------

_TOKEN = re.compile(r"\s*(\(|\)|[^\s()]+)")
_VAR = re.compile(r"^[A-Za-z_][A-Za-z0-9_.'\-]*$")


def _tokens(text: str) -> list:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character at offset {pos}", offset=pos)
        out.append(m.group(1))
        pos = m.end()
    return out


def _tree(tokens: list):
    def go(k):
        if k >= len(tokens):
            raise ParseError("unexpected end of formula")
        tok = tokens[k]
        if tok == ")":
            raise ParseError("unexpected ')'")
        if tok != "(":
            return tok, k + 1
        items, k = [], k + 1
        while k < len(tokens) and tokens[k] != ")":
            item, k = go(k)
            items.append(item)
        if k >= len(tokens):
            raise ParseError("missing ')'")
        return items, k + 1

    tree, k = go(0)
    if k != len(tokens):
        raise ParseError("trailing input after formula")
    return tree


def _term(t) -> tuple:
    """Return (coefficient map, constant) for a term tree."""
    if isinstance(t, str):
        if re.fullmatch(r"-?\d+", t):
            return {}, int(t)
        if _VAR.match(t):
            return {t: 1}, 0
        raise ParseError(f"bad term {t!r}")
    if not t:
        raise ParseError("empty term")
    head, args = t[0], t[1:]
    if head == "+":
        coeffs, const = {}, 0
        for a in args:
            c, k = _term(a)
            for v, x in c.items():
                coeffs[v] = coeffs.get(v, 0) + x
            const += k
        return coeffs, const
    if head == "-":
        if len(args) == 1:
            c, k = _term(args[0])
            return {v: -x for v, x in c.items()}, -k
        if len(args) != 2:
            raise ParseError("'-' takes one or two terms")
        c1, k1 = _term(args[0])
        c2, k2 = _term(args[1])
        return minus(c1, c2), k1 - k2
    if head == "*":
        if len(args) != 2 or not isinstance(args[0], str) or not re.fullmatch(r"-?\d+", args[0]):
            raise ParseError("'*' takes an integer and a term")
        c, k = _term(args[1])
        f = int(args[0])
        return {v: f * x for v, x in c.items()}, f * k
    raise ParseError(f"unknown term operator {head!r}")


def _formula(t):
    if isinstance(t, str):
        if t == "true":
            return TRUE
        if t == "false":
            return FALSE
        raise ParseError(f"bad formula {t!r}")
    if not t:
        raise ParseError("empty formula")
    head, args = t[0], t[1:]
    if head == "and":
        return And(tuple(_formula(a) for a in args))
    if head == "or":
        return Or(tuple(_formula(a) for a in args))
    if head == "not":
        if len(args) != 1:
            raise ParseError("'not' takes one formula")
        return Not(_formula(args[0]))
    if head in OPS:
        if len(args) != 2:
            raise ParseError(f"'{head}' takes two terms")
        c1, k1 = _term(args[0])
        c2, k2 = _term(args[1])
        return linear(minus(c1, c2), head, k2 - k1)
    if head == "mod":
        if len(args) != 3 or not re.fullmatch(r"\d+", str(args[0])):
            raise ParseError("'mod' takes a modulus and two terms")
        m = int(args[0])
        if m < 2:
            raise ParseError("modulus must be at least 2")
        c1, k1 = _term(args[1])
        c2, k2 = _term(args[2])
        return congruence(minus(c1, c2), m, k2 - k1)
    raise ParseError(f"unknown formula operator {head!r}")


def parse_formula(text: str):
    return _formula(_tree(_tokens(text)))


def _render_sum(coeffs) -> str:
    parts = []
    for v, c in coeffs:
        parts.append(v if c == 1 else f"(* {c} {v})")
    if not parts:
        return "0"
    return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def render_formula(f) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Linear):
        return f"({f.op} {_render_sum(f.coeffs)} {f.bound})"
    if isinstance(f, Congruence):
        return f"(mod {f.modulus} {_render_sum(f.coeffs)} {f.residue})"
    if isinstance(f, And):
        return "(and" + "".join(" " + render_formula(g) for g in f.items) + ")"
    if isinstance(f, Or):
        return "(or" + "".join(" " + render_formula(g) for g in f.items) + ")"
    if isinstance(f, Not):
        return f"(not {render_formula(f.item)})"
    raise TypeError(f"not a formula: {f!r}")
