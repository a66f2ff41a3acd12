"""Simple regular expressions: unions of products of ``A*`` and ``a?`` atoms.

They denote exactly the subword-downward-closed languages.  A product is a
tuple of atoms; a union is a tuple of products.  Letters are state names.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ParseError, SizeBudget


@dataclass(frozen=True)
class Star:
    alphabet: frozenset

    def accepts(self, x) -> bool:
        return x in self.alphabet


@dataclass(frozen=True)
class Opt:
    letter: object

    def accepts(self, x) -> bool:
        return x == self.letter


EPSILON = ()          # the product with no atoms denotes {ε}
EMPTY = ()            # the union with no products denotes ∅


def star_count(product: Sequence) -> int:
    return sum(1 for a in product if isinstance(a, Star))


def simplify_product(product: Sequence) -> tuple:
    """Drop atoms absorbed by a neighbouring star (``A* B*`` with A ⊆ B, ``a? B*`` with a ∈ B)."""
    atoms = [a for a in product if not (isinstance(a, Star) and not a.alphabet)]
    changed = True
    while changed:
        changed = False
        for k in range(len(atoms) - 1):
            x, y = atoms[k], atoms[k + 1]
            if isinstance(x, Star) and isinstance(y, Star):
                if x.alphabet <= y.alphabet:
                    del atoms[k]
                elif y.alphabet <= x.alphabet:
                    del atoms[k + 1]
                else:
                    continue
            elif isinstance(x, Opt) and isinstance(y, Star) and x.letter in y.alphabet:
                del atoms[k]
            elif isinstance(x, Star) and isinstance(y, Opt) and y.letter in x.alphabet:
                del atoms[k + 1]
            else:
                continue
            changed = True
            break
    return tuple(atoms)


def product_leq(x: Sequence, y: Sequence) -> bool:
    """Language inclusion L(x) ⊆ L(y) by greedy left-to-right simulation."""
    j = 0
    n = len(y)
    for atom in x:
        if isinstance(atom, Star):
            while j < n and not (isinstance(y[j], Star) and atom.alphabet <= y[j].alphabet):
                j += 1
            if j == n:
                return False
        else:
            while j < n and not y[j].accepts(atom.letter):
                j += 1
            if j == n:
                return False
            if isinstance(y[j], Opt):
                j += 1
    return True


def minimize_union(products: Iterable, cap: int | None = None) -> tuple:
    """Remove duplicate products and products contained in another one."""
    uniq = list(dict.fromkeys(simplify_product(p) for p in products))
    # larger products first so that the survivors are the maximal ones
    uniq.sort(key=lambda p: (-len(p), render_product(p)))
    kept: list = []
    for p in uniq:
        if any(product_leq(p, k) for k in kept):
            continue
        kept = [k for k in kept if not product_leq(k, p)]
        kept.append(p)
        if cap is not None and len(kept) > cap:
            raise SizeBudget(f"SRE union exceeds {cap} products")
    kept.sort(key=render_product)
    return tuple(kept)


def _intersect_products(x: tuple, y: tuple, cap: int | None) -> list:
    memo: dict = {}

    def go(i: int, j: int) -> tuple:
        key = (i, j)
        if key in memo:
            return memo[key]
        if i == len(x) or j == len(y):
            res = (EPSILON,)
        else:
            a, b = x[i], y[j]
            parts: list = []
            if isinstance(a, Star) and isinstance(b, Star):
                both = a.alphabet & b.alphabet
                head = (Star(frozenset(both)),) if both else ()
                for rest in go(i + 1, j) + go(i, j + 1):
                    parts.append(head + rest)
            elif isinstance(a, Opt) and isinstance(b, Star):
                if a.letter in b.alphabet:
                    parts.extend((a,) + rest for rest in go(i + 1, j))
                else:
                    parts.extend(go(i + 1, j))
                parts.extend(go(i, j + 1))
            elif isinstance(a, Star) and isinstance(b, Opt):
                if b.letter in a.alphabet:
                    parts.extend((b,) + rest for rest in go(i, j + 1))
                else:
                    parts.extend(go(i, j + 1))
                parts.extend(go(i + 1, j))
            else:
                if a.letter == b.letter:
                    parts.extend((a,) + rest for rest in go(i + 1, j + 1))
                parts.extend(go(i + 1, j))
                parts.extend(go(i, j + 1))
            res = minimize_union(parts, cap)
        memo[key] = res
        return res

    return list(go(0, 0))


def sre_intersect(x: Sequence, y: Sequence, cap: int | None = 100_000) -> tuple:
    """Union of products denoting L(x) ∩ L(y)."""
    parts: list = []
    for p in x:
        for q in y:
            parts.extend(_intersect_products(tuple(p), tuple(q), cap))
    return minimize_union(parts, cap)


def avoid_sre(v: Sequence, states: Sequence) -> tuple:
    """Product denoting the words over ``states`` that do not contain ``v`` as a subword."""
    if len(v) == 0:
        raise ValueError("v must be non-empty")
    universe = frozenset(states)
    atoms: list = []
    for k, letter in enumerate(v):
        rest = universe - {letter}
        if rest:
            atoms.append(Star(rest))
        if k < len(v) - 1:
            atoms.append(Opt(letter))
    return tuple(atoms)


def sre_member(w: Sequence, s: Sequence) -> bool:
    return any(product_member(w, p) for p in s)


def product_member(w: Sequence, product: Sequence) -> bool:
    # the set of live atom positions is upward closed, so its minimum suffices
    pos = 0
    n = len(product)
    for x in w:
        t = pos
        while t < n:
            atom = product[t]
            if atom.accepts(x):
                break
            t += 1
        if t == n:
            return False
        pos = t if isinstance(product[t], Star) else t + 1
    return True


# --- text form ------------------------------------------------------------

def render_atom(atom) -> str:
    if isinstance(atom, Star):
        return "{" + ",".join(sorted(map(str, atom.alphabet))) + "}*"
    return f"[{atom.letter}]"


def render_product(product: Sequence) -> str:
    if not product:
        return "EPS"
    return " ".join(render_atom(a) for a in product)


def render_union(union: Sequence) -> str:
    if not union:
        return "EMPTY"
    return " + ".join(render_product(p) for p in union)


def parse_union(text: str) -> tuple:
    text = text.strip()
    if text == "EMPTY":
        return EMPTY
    products = []
    for chunk in _split_top(text):
        chunk = chunk.strip()
        if chunk == "EPS":
            products.append(EPSILON)
            continue
        atoms = []
        for tok in chunk.split():
            if tok.startswith("{") and tok.endswith("}*"):
                inner = tok[1:-2]
                letters = [x for x in inner.split(",") if x]
                if not letters:
                    raise ParseError(f"empty star alphabet in {tok!r}")
                atoms.append(Star(frozenset(letters)))
            elif tok.startswith("[") and tok.endswith("]") and len(tok) > 2:
                atoms.append(Opt(tok[1:-1]))
            else:
                raise ParseError(f"cannot parse SRE atom {tok!r}")
        products.append(tuple(atoms))
    return tuple(products)


def _split_top(text: str) -> list:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "{[":
            depth += 1
        elif ch in "}]":
            depth -= 1
        if ch == "+" and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts
