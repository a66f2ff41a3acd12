import json
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orderpp.errors import AlphabetMismatch, ParseError, UnknownName, ValidationError
from orderpp.popa import (
    BUILTINS, NormalFormTerm, PoPA, Transition, build, builtin_popa, codyck_predicate,
    dump_popa, load_popa, median_predicate, normalform_to_popa, popa_from_dict, popa_membership,
    weak_unambiguity_up_to, words_up_to,
)
from orderpp.presburger import FALSE, TRUE, congruence, eval_presburger, linear, parse_formula


def brute_force_runs(a: PoPA, word) -> int:
    """Count accepting transition sequences by plain enumeration."""
    by_src = {}
    for t in a.transitions:
        by_src.setdefault((t.src, t.letter), []).append(t)
    total = 0

    def walk(q, i, used):
        nonlocal total
        if i == len(word):
            if q in a.final:
                counts = Counter(t.var for t in used)
                if eval_presburger(a.psi, {v: counts.get(v, 0) for v in a.variables}):
                    total += 1
            return
        for t in by_src.get((q, word[i]), ()):
            walk(t.dst, i + 1, used + [t])

    walk(a.initial, 0, [])
    return total


def test_median_popa_examples():
    a = builtin_popa("median")
    assert popa_membership(a, "bab") == 1
    assert popa_membership(a, "a") == 1
    assert popa_membership(a, "ba") == 0


def test_median_and_codyck_formulas():
    assert eval_presburger(congruence({"x": 1}, 2, 0), {"x": 4})
    assert eval_presburger(parse_formula("(= s t)"), {"s": 1, "t": 1})
    assert eval_presburger(parse_formula("(> (+ t t') (+ s s'))"), {"t": 1, "t'": 0, "s": 0, "s'": 0})


def test_codyck_examples():
    assert builtin_popa("codyck").accepts("a⊐")
    assert builtin_popa("codyck").accepts(("a", "]"))
    assert not builtin_popa("codyck").accepts("a⊏")
    assert builtin_popa("codyck_complement").accepts("aa")


@pytest.mark.parametrize("name,predicate", [("median", median_predicate),
                                            ("median_normalform", median_predicate),
                                            ("codyck", codyck_predicate)])
def test_builtin_semantics(name, predicate):
    a = builtin_popa(name)
    for w in words_up_to(a.alphabet, 7):
        assert a.accepts(w) == predicate(w), w


@pytest.mark.parametrize("name", ["median", "codyck"])
def test_complements_partition(name):
    a, b = builtin_popa(name), builtin_popa(f"{name}_complement")
    for w in words_up_to(a.alphabet, 7):
        assert a.accepts(w) != b.accepts(w), w


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtins_weakly_unambiguous(name):
    v = weak_unambiguity_up_to(builtin_popa(name), 7)
    assert v.passed, v.details


def test_parallel_transitions_are_ambiguous():
    a = build("twice", {"q0": 0, "q1": 1}, ["a"], "q0", {"q1"},
              [("q0", "a", "q1", "x"), ("q0", "a", "q1", "y")], TRUE)
    v = weak_unambiguity_up_to(a, 1)
    assert v.outcome == "FAIL"
    assert v.details["word"] == ["a"] and v.details["accepting_runs"] == 2


def test_loop_multinomial_count():
    # two a-loops on one state: a word a^k has 2^k runs
    a = build("loops", {"q0": 0}, ["a"], "q0", {"q0"},
              [("q0", "a", "q0", "x"), ("q0", "a", "q0", "y")], TRUE)
    for k in range(5):
        assert popa_membership(a, "a" * k) == 2 ** k == brute_force_runs(a, "a" * k)


def test_validation():
    with pytest.raises(ValidationError) as e:
        PoPA(("p", "q"), {"p": 1, "q": 0}, ("a",), "p", {"z"},
             (Transition("p", "a", "q", "x"), Transition("p", "b", "p", "y")),
             parse_formula("(= w 0)"))
    text = " ".join(e.value.violations)
    assert "against the state order" in text and "'z'" in text
    assert "not in the alphabet" in text and "'w'" in text
    with pytest.raises(ValidationError):
        build("dup", {"q": 0}, ["a"], "q", {"q"}, [("q", "a", "q", "x"), ("q", "a", "q", "x")], TRUE)


def test_word_over_wrong_alphabet():
    with pytest.raises(AlphabetMismatch):
        popa_membership(builtin_popa("median"), "abc")


def test_unknown_builtin():
    with pytest.raises(UnknownName):
        builtin_popa("nope")


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_file_roundtrip(name, tmp_path):
    a = builtin_popa(name)
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(dump_popa(a)))
    b = load_popa(str(path))
    assert b == a
    assert load_popa(f"builtin:{name}") == a


def test_malformed_file():
    with pytest.raises(ParseError):
        popa_from_dict({"states": []})


def test_normalform_single_letter():
    t = NormalFormTerm(0, linear({"y0_a": 1}, "=", 1), ("a", "b"))
    a = normalform_to_popa(t)
    assert len(a.states) == 2
    assert [w for w in words_up_to(a.alphabet, 4) if a.accepts(w)] == [("a",)]


def test_normalform_unsatisfiable_is_empty():
    t = NormalFormTerm(2, FALSE, ("a", "b"))
    a = normalform_to_popa(t)
    assert not any(a.accepts(w) for w in words_up_to(a.alphabet, 6))


def test_normalform_chain_language():
    # a0 w1 a1 with w1 holding as many a's as b's and a1 = b
    t = NormalFormTerm(1, parse_formula("(and (= x1_a x1_b) (= y1_b 1))"), ("a", "b"))
    a = normalform_to_popa(t)
    for w in words_up_to(a.alphabet, 6):
        want = len(w) >= 2 and w[-1] == "b" and w[1:-1].count("a") == w[1:-1].count("b")
        assert a.accepts(w) == want


# --- random automata against the brute-force oracle -------------------------

@st.composite
def small_popas(draw):
    k = draw(st.integers(1, 4))
    states = {f"q{i}": i for i in range(k)}
    names = list(states)
    trans = []
    for _ in range(draw(st.integers(0, 7))):
        i = draw(st.integers(0, k - 1))
        j = draw(st.integers(i, k - 1))
        letter = draw(st.sampled_from("ab"))
        var = draw(st.sampled_from(["x", "y", "z", "w"]))
        t = Transition(names[i], letter, names[j], var)
        if t not in trans:
            trans.append(t)
    used = sorted({t.var for t in trans})
    if used:
        coeffs = {v: draw(st.integers(-2, 2)) for v in used}
        psi = draw(st.sampled_from([
            linear(coeffs, draw(st.sampled_from(["<", "<=", "=", ">=", ">"])), draw(st.integers(-2, 2))),
            congruence(coeffs, 2, draw(st.integers(0, 1))),
            TRUE]))
    else:
        psi = TRUE
    final = draw(st.sets(st.sampled_from(names), min_size=1))
    return PoPA(tuple(names), states, ("a", "b"), "q0", frozenset(final), tuple(trans), psi)


@settings(max_examples=150, deadline=None)
@given(small_popas())
def test_membership_matches_brute_force(a):
    for w in words_up_to(a.alphabet, 6):
        assert popa_membership(a, w) == brute_force_runs(a, w), w


@settings(max_examples=50, deadline=None)
@given(small_popas())
def test_unambiguity_verdict_agrees_with_counts(a):
    v = weak_unambiguity_up_to(a, 4)
    worst = max(brute_force_runs(a, w) for w in words_up_to(a.alphabet, 4))
    assert v.passed == (worst <= 1)
