import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orderpp import corpus
from orderpp.analysis import (
    bscc_condensation, check_decider_at_length, check_semidecider_at_length, compare_oracle,
    explore, language_up_to, membership,
)
from orderpp.constructions import (
    Intersection, Marker, Sigma2Oracle, Union, binary_stab, canonical_non_decider,
    combine_to_decider, compile_decider, compile_sigma2, emptiness_gadget, exactly_one_semidecider,
    handshake_projection, handshake_transform, ordered_semidecider, parse_sigma2, rename_stab,
    term,
)
from orderpp.errors import AlphabetMismatch, NotInputSaving, ParseError
from orderpp.oracles import exactly_one, ordered
from orderpp.protocol import Opinion, Pred, Protocol, Rule, check_input_saving, replay
from orderpp.rng import SplitMix64

from helpers import handshake_claims
from strategies import protocols

A_B_A = term("a", ("b", "a"))
# complement of a*ba* within {a,b}+: no b, or at least two b's
NOT_A_B_A = [term("a"), term("ab", ("b", "ab"), ("b", "ab"))]


def all_words(letters, n):
    return [w for k in range(1, n + 1) for w in itertools.product(letters, repeat=k)]


def accepts_all(letters):
    """Input-saving protocol with language Sigma+ and no rules."""
    states = list(letters)
    return Protocol(states, {s: Opinion.TOP for s in states}, states, [], name="all",
                    inputs={s: s for s in states}, factor={s: (s, None) for s in states})


def reaches_top_stable(p, word):
    return membership(p, word)


# --- primitives -------------------------------------------------------------

@pytest.mark.parametrize("k", [0, 1, 2])
def test_ordered_semidecider(k):
    p = ordered_semidecider(k)
    assert p.is_immediate_observation()
    for n in range(1, 5):
        assert check_semidecider_at_length(p, n, ordered(k)).passed


def test_ordered_sorted_word_has_single_top_bottom():
    p = ordered_semidecider(2)
    g = explore(p, [p.word_config("012")])
    rep = bscc_condensation(g)
    assert len(rep.bottom) == 1 and rep.consensus[rep.bottom[0]] is Opinion.TOP


def test_ordered_misordered_never_stabilizes():
    assert not reaches_top_stable(ordered_semidecider(1), "10")


def test_exactly_one():
    p = exactly_one_semidecider("ab", "a")
    assert p.is_immediate_observation()
    assert membership(p, "a")
    for n in range(1, 5):
        assert check_semidecider_at_length(p, n, exactly_one("a")).passed


def test_exactly_one_aa_cycles():
    p = exactly_one_semidecider("ab", "a")
    g = explore(p, [p.word_config("aa")])
    rep = bscc_condensation(g)
    assert not reaches_top_stable(p, "aa")
    # the beliefs keep changing inside a bottom component
    assert any(len(rep.components[c]) > 1 for c in rep.bottom)


def test_exactly_one_no_a_reaches_bot_and_halts():
    p = exactly_one_semidecider("ab", "a")
    g = explore(p, [p.word_config("bb")])
    rep = bscc_condensation(g)
    (cid,) = rep.bottom
    (v,) = rep.components[cid]
    assert rep.consensus[cid] is Opinion.BOT and not g.adj[v]


def test_primitives_are_input_saving():
    check_input_saving(ordered_semidecider(2))
    check_input_saving(exactly_one_semidecider("abc", "b"))


# --- combinators ------------------------------------------------------------

def test_intersection_ordered_exactly_one():
    gamma = ["0", "1", "2"]
    p = Intersection(ordered_semidecider(2), exactly_one_semidecider(gamma, "1"))
    assert p.is_immediate_observation()

    class Oracle:
        alphabet = gamma

        def accepts(self, w):
            return ordered(2).accepts(w) and list(w).count("1") == 1
    for n in range(1, 5):
        assert check_semidecider_at_length(p, n, Oracle()).passed


def test_intersection_with_sigma_plus_is_identity():
    p = exactly_one_semidecider("ab", "a")
    both = binary_stab("INTERSECT", p, accepts_all("ab"))
    assert language_up_to(both, 4) == language_up_to(p, 4)


def test_union_with_itself_is_identity():
    p = ordered_semidecider(1)
    assert language_up_to(binary_stab("UNION", p, p), 4) == language_up_to(p, 4)


def test_union_matches_union_of_oracles():
    p = Union(exactly_one_semidecider("ab", "a"), exactly_one_semidecider("ab", "b"))
    oracle_words = {w for w in all_words("ab", 4) if w.count("a") == 1 or w.count("b") == 1}
    assert language_up_to(p, 4) == oracle_words


def test_combinators_keep_input_letters():
    p = Union(ordered_semidecider(1), exactly_one_semidecider("01", "1"))
    check_input_saving(p)
    check_input_saving(rename_stab(ordered_semidecider(1), {"0": {"a"}, "1": {"b"}}))


def test_combinators_reject_bad_inputs():
    with pytest.raises(NotInputSaving):
        Intersection(corpus.protocol("abstar"), corpus.protocol("abstar"))
    with pytest.raises(AlphabetMismatch):
        Intersection(ordered_semidecider(1), exactly_one_semidecider("ab", "a"))
    with pytest.raises(ValueError):
        binary_stab("XOR", ordered_semidecider(1), ordered_semidecider(1))


def test_rename_identity_preserves_language():
    p = ordered_semidecider(1)
    r = rename_stab(p, {"0": {"0"}, "1": {"1"}})
    assert language_up_to(r, 4) == language_up_to(p, 4)


def test_rename_single_letter_prefers_accepted_choice():
    # f(0) = f(1) = {x}; both single letters are accepted by 0*1*
    r = rename_stab(exactly_one_semidecider("ab", "a"), {"a": {"x"}, "b": {"x"}})
    assert membership(r, "x")
    assert r.choice["x"] == "a"


def test_rename_empty_image_goes_to_dummy():
    r = rename_stab(ordered_semidecider(1), {"0": {"a"}, "1": {"a"}}, alphabet=["a", "z"])
    assert not membership(r, "z")
    assert membership(r, "aa")


def test_rename_is_io():
    assert rename_stab(ordered_semidecider(1), {"0": {"a"}, "1": {"b"}}).is_immediate_observation()


# --- decider product ----------------------------------------------------------

def test_decider_single_agent():
    plus = exactly_one_semidecider("ab", "a")
    minus = Union(exactly_one_semidecider("ab", "b"), exactly_one_semidecider("ab", "a"))
    d = combine_to_decider(plus, minus)
    assert membership(d, "a")
    assert not membership(d, "b")


def test_decider_preserves_io():
    d = combine_to_decider(ordered_semidecider(1), ordered_semidecider(1))
    assert d.is_immediate_observation()


def test_decider_alphabet_mismatch():
    with pytest.raises(AlphabetMismatch):
        combine_to_decider(ordered_semidecider(1), exactly_one_semidecider("ab", "a"))


# --- Sigma_2 compiler --------------------------------------------------------

def test_compile_sigma2_a_b_a():
    p = compile_sigma2([A_B_A])
    assert p.is_immediate_observation()
    for n in range(1, 4):
        assert check_semidecider_at_length(p, n, Sigma2Oracle((A_B_A,), ("a", "b"))).passed


def test_compile_sigma2_sigma_plus():
    p = compile_sigma2([term("ab")])
    assert language_up_to(p, 3) == set(all_words("ab", 3))


def test_compile_sigma2_union_of_terms():
    t1, t2 = term("a", ("b", "a")), term("b", ("a", "b"))
    p = compile_sigma2([t1, t2])
    want = {w for w in all_words("ab", 3) if t1.accepts(w) or t2.accepts(w)}
    assert language_up_to(p, 3) == want


def test_compile_decider_a_b_a_small():
    d = compile_decider([A_B_A], NOT_A_B_A, alphabet=["a", "b"])
    for n in (1, 2):
        assert check_decider_at_length(d, n).passed
    assert compare_oracle(language_up_to(d, 2), A_B_A, 2, "ab").passed


def test_term_semantics():
    assert A_B_A.accepts("aba") and A_B_A.accepts("b")
    assert not A_B_A.accepts("abb") and not A_B_A.accepts("")
    for w in all_words("ab", 5):
        assert A_B_A.accepts(w) != any(t.accepts(w) for t in NOT_A_B_A)


def test_parse_sigma2():
    terms, alphabet = parse_sigma2([{"A0": ["a"], "steps": [{"letter": "b", "alphabet": ["a"]}]}])
    assert terms == (A_B_A,) and alphabet == ("a", "b")
    with pytest.raises(ParseError):
        parse_sigma2([{"steps": []}])
    with pytest.raises(ParseError):
        parse_sigma2({"alphabet": ["a"], "terms": [{"A0": ["b"]}]})


# --- handshake ---------------------------------------------------------------

def single_succ_rule():
    states = ["a", "b", "c", "d"]
    return Protocol(states, {s: Opinion.TOP for s in states}, ["a", "b"],
                    [Rule(("a", "b"), Pred.SUCC, ("c", "d"), "delta")], name="one-rule")


def test_handshake_four_step_trace():
    p = single_succ_rule()
    h = handshake_transform(p)
    assert h.is_immediate_observation()
    mark, ack = (s for s in h.states if isinstance(s, Marker))
    trace = [("a", "b"), (mark, "b"), (mark, ack), ("c", ack), ("c", "d")]
    g = explore(h, [trace[0]])
    for x, y in zip(trace, trace[1:]):
        assert g.index(y) in g.adj[g.index(x)]
    assert h.opinion(mark) is p.opinion("a") and h.opinion(ack) is p.opinion("b")


def test_handshake_leaves_other_rules_alone():
    p = corpus.protocol("abstar")
    assert handshake_transform(p) is p


def test_handshake_metadata_projection():
    h = handshake_transform(single_succ_rule())
    (entry,) = h.metadata["handshake"]
    assert entry["pre"] == ["a", "b"] and entry["post"] == ["c", "d"]
    mark, ack = (s for s in h.states if isinstance(s, Marker))
    assert handshake_projection(h, (mark, ack)) == ("c", "d")
    assert handshake_projection(h, (mark, "b")) == ("a", "b")
    assert handshake_projection(h, ("c", ack)) == ("c", "d")


@pytest.mark.parametrize("name", ["abstar_succ", "markers"])
def test_handshake_language_equal(name):
    p = corpus.protocol(name)
    h = handshake_transform(p)
    assert Pred.SUCC not in h.non_io_predicates()
    assert language_up_to(h, 4) == language_up_to(p, 4)


@pytest.mark.parametrize("name", ["abstar_succ", "markers"])
def test_handshake_projection_claims(name):
    p = corpus.protocol(name)
    h = handshake_transform(p)
    rng = SplitMix64(5)
    for _ in range(100):
        ok1, ok2, word, end = handshake_claims(p, h, rng)
        assert ok1 and ok2, (word, end)


@settings(max_examples=25, deadline=None)
@given(protocols(preds=(Pred.TRUE, Pred.LT, Pred.SUCC), max_states=3, max_rules=4),
       st.integers(0, 2**32))
def test_handshake_random_protocols(p, seed):
    h = handshake_transform(p)
    assert Pred.SUCC not in h.non_io_predicates()
    assert language_up_to(h, 3) == language_up_to(p, 3)
    rng = SplitMix64(seed)
    for _ in range(5):
        ok1, ok2, _w, _e = handshake_claims(p, h, rng, max_len=3)
        assert ok1 and ok2


# --- emptiness gadget ----------------------------------------------------------

def test_gadget_abstar_fails_with_replayable_trace():
    p = corpus.protocol("abstar")
    g = emptiness_gadget(p)
    v = check_decider_at_length(g, 2)
    assert v.outcome == "FAIL"
    c = g.word_config(v.initial)
    for step in v.trace:
        c = replay(g, c, step)
    assert c in v.bscc


def test_gadget_abstar_both_outcomes_reachable():
    g = emptiness_gadget(corpus.protocol("abstar"))
    graph = explore(g, [g.word_config("ab")])
    rep = bscc_condensation(graph)
    assert {rep.consensus[c] for c in rep.bottom} == {Opinion.TOP, Opinion.BOT}


def test_gadget_empty_language_is_decider():
    g = emptiness_gadget(corpus.protocol("empty"))
    for n in range(1, 5):
        assert check_decider_at_length(g, n).passed
    assert language_up_to(g, 4) == set()


def test_gadget_top_initial_letter_gives_non_decider():
    g = emptiness_gadget(corpus.protocol("exists_a"))
    assert g.states == canonical_non_decider("ab").states
    assert check_decider_at_length(g, 2).outcome == "FAIL"


def late_top():
    # every letter is BOT, but two agents together can turn TOP for good
    states = ["a", "b", "t"]
    opinions = {"a": Opinion.BOT, "b": Opinion.BOT, "t": Opinion.TOP}
    rules = [Rule(("a", "b"), Pred.LT, ("t", "t")), Rule(("t", "a"), Pred.TRUE, ("t", "t")),
             Rule(("t", "b"), Pred.TRUE, ("t", "t"))]
    return Protocol(states, opinions, ["a", "b"], rules, name="late-top")


def test_gadget_barred_construction():
    p = late_top()
    g = emptiness_gadget(p)
    assert {"a.bar", "b.bar", "sink"} <= set(g.states)
    assert check_decider_at_length(g, 2).outcome == "FAIL"
    assert check_decider_at_length(g, 1).passed
    # from ba no TOP-stable configuration is reachable in the original
    graph = explore(g, [g.word_config("ba")])
    rep = bscc_condensation(graph)
    assert {rep.consensus[c] for c in rep.bottom} == {Opinion.BOT}


def test_gadget_preserves_io():
    assert emptiness_gadget(corpus.protocol("abstar_io")).is_immediate_observation()
