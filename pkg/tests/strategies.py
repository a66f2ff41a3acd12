"""Hypothesis strategies shared by the test modules."""

from hypothesis import strategies as st

from orderpp.protocol import Opinion, Pred, Protocol, Rule


@st.composite
def protocols(draw, preds=(Pred.TRUE, Pred.LT), max_states=4, max_rules=6, io=False):
    """Random explicit protocol over states q0..q{k-1}."""
    k = draw(st.integers(2, max_states))
    states = [f"q{i}" for i in range(k)]
    opinions = {s: draw(st.sampled_from([Opinion.TOP, Opinion.BOT])) for s in states}
    initial = draw(st.lists(st.sampled_from(states), min_size=1, max_size=2, unique=True))
    rules = []
    for _ in range(draw(st.integers(0, max_rules))):
        a, b, c, d = (draw(st.sampled_from(states)) for _ in range(4))
        if io and a != c and b != d:
            d = b
        pred = draw(st.sampled_from(list(preds)))
        rules.append(Rule((a, b), pred, (c, d)))
    return Protocol(states, opinions, initial, list(dict.fromkeys(rules)), name="random")
