"""Length-uniform stable sets via backward reachability over the subword order.

For protocols whose rules use only the TRUE and LT predicates, a step from a
word stays enabled in every superword, so sets that are upward closed under
the subword order are preserved by taking predecessors.  Such sets are
represented by their finite minimal bases; the b-stable configurations are
the complement of the backward closure of the non-b-consensus words.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import BasisBudget, NotImmediateObservation, UnsupportedPredicate
from .protocol import Opinion, Pred, Protocol
from .sre import Star, avoid_sre, sre_intersect, star_count


def subword_leq(u: Sequence, v: Sequence) -> bool:
    """True iff ``u`` embeds into ``v`` order-preservingly."""
    it = iter(v)
    return all(any(x == y for y in it) for x in u)


@dataclass(frozen=True)
class UpwardClosedSet:
    basis: tuple

    def __contains__(self, w) -> bool:
        return any(subword_leq(v, w) for v in self.basis)


def _basis_key(w):
    return (len(w), tuple(map(str, w)))


def minimize_basis(words: Iterable) -> UpwardClosedSet:
    ordered = sorted({tuple(w) for w in words}, key=_basis_key)
    kept: list = []
    for w in ordered:
        if not any(subword_leq(k, w) for k in kept):
            kept.append(w)
    return UpwardClosedSet(tuple(kept))


def _require_subword_predicates(p: Protocol):
    for r in p.rules:
        if r.pred is Pred.SUCC:
            raise UnsupportedPredicate(
                f"rule {r.label or r.pre} uses the successor predicate; "
                "stable sets are only computed for TRUE and LT rules")


def _candidates(v: tuple, first, second, slot1, slot2):
    """Words x·first·y·second·z such that v = x·slot1?·y·slot2?·z."""
    n = len(v)
    for i in range(n + 1):
        for use1 in (False, True):
            if use1 and not (i < n and v[i] == slot1):
                continue
            i2 = i + 1 if use1 else i
            for j in range(i2, n + 1):
                for use2 in (False, True):
                    if use2 and not (j < n and v[j] == slot2):
                        continue
                    j2 = j + 1 if use2 else j
                    yield v[:i] + (first,) + v[i2:j] + (second,) + v[j2:]


def _pre_of_word(p: Protocol, v: tuple) -> set:
    out = set()
    for r in p.rules:
        if r.pre == r.post:
            continue
        a, b = r.pre
        c, d = r.post
        out.update(_candidates(v, a, b, c, d))
        if r.pred is Pred.TRUE:
            # the first agent of the rule sits to the right
            out.update(_candidates(v, b, a, d, c))
    return out


def pre_upward(p: Protocol, U: UpwardClosedSet) -> UpwardClosedSet:
    """Minimal basis of the words with a successor in ``U``."""
    _require_subword_predicates(p)
    words: set = set()
    for v in U.basis:
        words |= _pre_of_word(p, v)
    return minimize_basis(words)


@dataclass(frozen=True)
class StableSet:
    opinion: Opinion
    unstable: UpwardClosedSet        # words that can reach a non-b-consensus
    sre: tuple                       # union of products denoting the b-stable words

    @property
    def max_stars(self) -> int:
        return max((star_count(x) for x in self.sre), default=0)


def unstable_basis(p: Protocol, b: Opinion, cap: int = 100_000) -> UpwardClosedSet:
    """Backward closure of the non-b-consensus words, as a minimal basis."""
    _require_subword_predicates(p)
    current = minimize_basis((q,) for q in p.states if p.opinion(q) is not b)
    fresh = list(current.basis)
    while fresh:
        words: set = set()
        for v in fresh:
            words |= _pre_of_word(p, v)
        merged = minimize_basis(list(current.basis) + list(words))
        if len(merged.basis) > cap:
            raise BasisBudget(f"basis exceeds {cap} words", size=len(merged.basis))
        old = set(current.basis)
        fresh = [w for w in merged.basis if w not in old]
        current = merged
    return current


def stable_set(p: Protocol, b: Opinion, cap: int = 100_000) -> StableSet:
    """The b-stable configurations of every length, as a basis and as an SRE."""
    basis = unstable_basis(p, b, cap)
    union: tuple = ((Star(frozenset(p.states)),),)
    for v in basis.basis:
        union = sre_intersect(union, (avoid_sre(v, p.states),), cap)
    return StableSet(b, basis, union)


@dataclass(frozen=True)
class PumpingConstant:
    k_top: int
    k_bot: int

    @property
    def m(self) -> int:
        return 2 * max(self.k_top, self.k_bot) + 1


def pumping_m(p: Protocol) -> PumpingConstant:
    if not p.is_immediate_observation():
        raise NotImmediateObservation(f"{p.name} is not immediate-observation")
    _require_subword_predicates(p)
    return PumpingConstant(stable_set(p, Opinion.TOP).max_stars,
                           stable_set(p, Opinion.BOT).max_stars)


# --- reducible patterns -----------------------------------------------------

def _split_blocks(x: tuple, m: int):
    """Split ``x`` into m blocks that each use every letter of ``x``, or None."""
    alpha = set(x)
    blocks, cur, seen = [], [], set()
    for letter in x:
        cur.append(letter)
        seen.add(letter)
        if seen == alpha and len(blocks) < m - 1:
            blocks.append(tuple(cur))
            cur, seen = [], set()
    if set(cur) != alpha:
        return None
    blocks.append(tuple(cur))
    return blocks if len(blocks) == m else None


@dataclass(frozen=True)
class Pattern:
    start: int          # 0-based index of the infix
    end: int            # exclusive
    blocks: tuple       # w_1 .. w_m
    middle: tuple       # z
    reduced: tuple      # word with the infix replaced by w_1 ⋯ w_m


def find_reducible_pattern(w: Sequence, m: int, window: int | None = None) -> Pattern | None:
    """Leftmost-shortest infix w1⋯wm z w1⋯wm with equal block alphabets containing α(z)."""
    if m < 1:
        raise ValueError("m must be at least 1")
    w = tuple(w)
    n = len(w)
    limit = n if window is None else min(window, n)
    for s in range(n):
        for total in range(2 * m, min(limit, n - s) + 1):
            for size in range(m, total // 2 + 1):
                zlen = total - 2 * size
                x = w[s:s + size]
                if w[s + size + zlen:s + total] != x:
                    continue
                z = w[s + size:s + size + zlen]
                if not set(z) <= set(x):
                    continue
                blocks = _split_blocks(x, m)
                if blocks is None:
                    continue
                reduced = w[:s] + x + w[s + total:]
                return Pattern(s, s + total, tuple(blocks), z, reduced)
    return None


# --- pumping instances ------------------------------------------------------

@dataclass(frozen=True)
class PumpingInstance:
    prefix: tuple
    blocks: tuple
    middle: tuple
    suffix: tuple

    @property
    def short(self) -> tuple:
        return self.prefix + sum(self.blocks, ()) + self.suffix

    @property
    def long(self) -> tuple:
        body = sum(self.blocks, ())
        return self.prefix + body + self.middle + body + self.suffix


def sample_pumping_instance(rng, letters: Sequence, m: int, max_total: int) -> PumpingInstance | None:
    """Random (u, w_1..w_m, z, v) with equal block alphabets containing z's letters.

    Returns None when even one-letter blocks do not fit in ``max_total``.
    """
    letters = list(letters)
    sizes = [s for s in range(1, len(letters) + 1) if 2 * m * s <= max_total]
    if not sizes:
        return None
    s = sizes[rng.below(len(sizes))]
    pool = list(letters)
    alpha = []
    for _ in range(s):
        alpha.append(pool.pop(rng.below(len(pool))))
    spare = max_total - 2 * m * s
    extra = rng.below(spare // 2 + 1)
    counts = [0] * m
    for _ in range(extra):
        counts[rng.below(m)] += 1
    blocks = []
    for c in counts:
        word = list(alpha)
        for i in range(len(word) - 1, 0, -1):      # shuffle
            j = rng.below(i + 1)
            word[i], word[j] = word[j], word[i]
        for _ in range(c):
            word.insert(rng.below(len(word) + 1), alpha[rng.below(s)])
        blocks.append(tuple(word))
    spare -= 2 * extra
    zlen = rng.below(spare + 1)
    middle = tuple(alpha[rng.below(s)] for _ in range(zlen))
    spare -= zlen
    ulen = rng.below(spare + 1)
    vlen = rng.below(spare - ulen + 1)
    prefix = tuple(letters[rng.below(len(letters))] for _ in range(ulen))
    suffix = tuple(letters[rng.below(len(letters))] for _ in range(vlen))
    return PumpingInstance(prefix, tuple(blocks), middle, suffix)
