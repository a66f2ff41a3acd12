"""Checks shared by the unit tests and the acceptance suite."""

from orderpp.analysis import explore
from orderpp.constructions import handshake_projection
from orderpp.protocol import successors


def random_run(p, word, rng, steps):
    """End configuration of a uniformly random run of at most ``steps`` moves."""
    c = p.word_config(tuple(word))
    for _ in range(steps):
        moves = successors(p, c)
        if not moves:
            break
        c = moves[rng.below(len(moves))][0]
    return c


def handshake_claims(original, transformed, rng, max_len=4, max_steps=12):
    """Sample one run of the transformed protocol and test both projection claims.

    Returns ``(reachable_in_original, normalizes_in_transformed, word, end)``.
    """
    n = 1 + rng.below(max_len)
    letters = list(original.letters)
    word = tuple(letters[rng.below(len(letters))] for _ in range(n))
    end = random_run(transformed, word, rng, rng.below(max_steps + 1))
    target = handshake_projection(transformed, end)
    forward = explore(original, [original.word_config(word)], keep_witnesses=False)
    in_original = target in set(forward.nodes)
    local = explore(transformed, [end], keep_witnesses=False)
    normalizes = target in set(local.nodes)
    return in_original, normalizes, word, end


def random_protocol(rng, preds, max_states=4, max_rules=6, name="random"):
    """Explicit protocol over q0.. drawn with a seeded generator."""
    from orderpp.protocol import Opinion, Protocol, Rule

    k = 2 + rng.below(max_states - 1)
    states = [f"q{i}" for i in range(k)]
    opinions = {s: (Opinion.TOP, Opinion.BOT)[rng.below(2)] for s in states}
    initial = sorted({states[rng.below(k)] for _ in range(2)})
    rules = []
    for _ in range(rng.below(max_rules + 1)):
        a, b, c, d = (states[rng.below(k)] for _ in range(4))
        rules.append(Rule((a, b), preds[rng.below(len(preds))], (c, d)))
    return Protocol(states, opinions, initial, list(dict.fromkeys(rules)), name=name)


def compatibility_violations(p, max_u=3, max_w=5):
    """Pairs u <= w where some step of u has no matching step of w."""
    import itertools

    from orderpp.protocol import successors
    from orderpp.wsts import subword_leq

    def words(n):
        for k in range(1, n + 1):
            yield from itertools.product(p.states, repeat=k)

    succ_u = {u: [d for d, _ in successors(p, u)] for u in words(max_u)}
    bad = []
    checked = 0
    for w in words(max_w):
        succ_w = None
        for u, steps in succ_u.items():
            if not steps or len(u) > len(w) or not subword_leq(u, w):
                continue
            if succ_w is None:
                succ_w = [d for d, _ in successors(p, w)]
            checked += 1
            for u2 in steps:
                if not any(subword_leq(u2, w2) for w2 in succ_w):
                    bad.append((u, w, u2))
    return bad, checked
