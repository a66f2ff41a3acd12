import itertools

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orderpp import corpus
from orderpp.analysis import (
    bscc_condensation, check_decider_at_length, check_semidecider_at_length, compare_oracle,
    explore, export_dot, is_stable, language_up_to, membership, simulate_fair_run,
    stable_configs_at_length,
)
from orderpp.errors import BudgetExceeded
from orderpp.oracles import astarbstar, majority, median
from orderpp.protocol import Opinion, Pred, flip_opinions, parse_states, replay

from strategies import protocols

REFERENCE_NODES = {
    "v0": "a♔⊤ a♔⊤ b♔⊥",
    "v1": "a→⊥ a←⊥ b♔⊥",
    "v2": "a→⊥ a♔⊤ b←⊥",
    "v3": "a♔⊤ a→⊥ b←⊥",
    "v4": "a→⊤ a♔⊤ b←⊥",
    "v5": "a→⊥ a♔⊤ b←⊤",
    "vT": "a→⊤ a♔⊤ b←⊤",
}
REFERENCE_EDGES = [("v0", "v1"), ("v0", "v2"), ("v0", "v3"), ("v1", "v2"), ("v2", "v4"),
                   ("v2", "v5"), ("v4", "v2"), ("v5", "v2"), ("v3", "v2"), ("v4", "vT"),
                   ("v5", "vT")]


@pytest.fixture(scope="module")
def median_aab():
    p = corpus.protocol("median")
    g = explore(p, [p.word_config("aab")])
    return p, g, bscc_condensation(g)


def test_median_aab_graph_size(median_aab):
    # regression values for the literal rule table (see the reference-graph tests below)
    _p, g, _rep = median_aab
    assert (len(g), g.edge_count) == (10, 20)


def test_median_aab_contains_reference_graph(median_aab):
    p, g, _rep = median_aab
    idx = {k: g.index(parse_states(p, v)) for k, v in REFERENCE_NODES.items()}
    for a, b in REFERENCE_EDGES:
        assert idx[b] in g.adj[idx[a]], (a, b)


def test_median_aab_unique_top_bottom(median_aab):
    p, g, rep = median_aab
    assert len(rep.bottom) == 1
    (members,) = [rep.components[c] for c in rep.bottom]
    assert [g.node(v) for v in members] == [parse_states(p, REFERENCE_NODES["vT"])]
    assert rep.consensus[rep.bottom[0]] is Opinion.TOP


def test_median_two_cycle(median_aab):
    p, g, _rep = median_aab
    v2, v5 = g.index(parse_states(p, REFERENCE_NODES["v2"])), g.index(parse_states(p, REFERENCE_NODES["v5"]))
    assert v5 in g.adj[v2] and v2 in g.adj[v5]


def test_bot_consensus_not_stable():
    p = corpus.protocol("median")
    c = parse_states(p, REFERENCE_NODES["v1"])
    assert not is_stable(p, c, Opinion.BOT)


def test_explore_budget():
    p = corpus.protocol("median")
    with pytest.raises(BudgetExceeded):
        explore(p, [p.word_config("aab")], budget=3)
    # a budget that suffices gives the same graph as the default
    small = explore(p, [p.word_config("aab")], budget=10)
    assert len(small) == 10


def test_explore_is_deterministic(median_aab):
    p, g, rep = median_aab
    g2 = explore(p, [p.word_config("aab")])
    assert g2.coded == g.coded and g2.adj == g.adj
    assert export_dot(g2, bscc_condensation(g2)) == export_dot(g, rep)


def test_dot_single_node():
    p = corpus.protocol("empty")
    g = explore(p, [p.word_config("a")])
    text = export_dot(g, bscc_condensation(g))
    assert text.count("->") == 0 and text.count("[label=") == 1


def test_dot_two_cycle_edges(median_aab):
    _p, g, rep = median_aab
    text = export_dot(g, rep)
    assert text.count("->") == 20


@pytest.mark.parametrize("n", range(1, 6))
def test_abstar_decider(n):
    assert check_decider_at_length(corpus.protocol("abstar"), n).passed


def test_abstar_language():
    p = corpus.protocol("abstar")
    assert compare_oracle(language_up_to(p, 5), astarbstar(), 5).passed


def test_majority_language_and_tie():
    p = corpus.protocol("majority")
    assert compare_oracle(language_up_to(p, 5), majority(), 5).passed
    assert not membership(p, "aabb")


def test_median_language():
    p = corpus.protocol("median")
    assert compare_oracle(language_up_to(p, 5), median(), 5).passed


def test_compare_oracle_reports_difference():
    v = compare_oracle({("a",)}, astarbstar(), 2)
    assert v.outcome == "FAIL"
    assert "b" in v.details["missing"] and "ab" in v.details["missing"]


def test_exists_a_is_not_decider_counterexample_replays():
    # a protocol that is not a decider: its FAIL trace must replay
    p = corpus.protocol("markers")
    for n in range(2, 5):
        v = check_decider_at_length(p, n)
        if v.outcome == "FAIL":
            c = p.word_config(v.initial)
            for w in v.trace:
                c = replay(p, c, w)
            assert c in v.bscc
            return
    pytest.fail("expected a FAIL verdict")


def test_semidecider_rejects_wrong_oracle():
    v = check_semidecider_at_length(corpus.protocol("abstar"), 2, majority())
    assert v.outcome == "FAIL"


def test_simulate_deterministic_and_stop_early():
    p = corpus.protocol("abstar")
    t1 = simulate_fair_run(p, "ab", seed=7, max_steps=10, stop_early=False)
    t2 = simulate_fair_run(p, "ab", seed=7, max_steps=10, stop_early=False)
    assert t1 == t2
    assert t1.steps == [None] * 10 and t1.stabilized
    assert simulate_fair_run(p, "ab", seed=7, max_steps=10).steps == []


def test_simulate_reaches_stability_on_median():
    p = corpus.protocol("median")
    t = simulate_fair_run(p, "aab", seed=1, max_steps=10_000)
    assert t.stabilized and t.stabilized_opinion is Opinion.TOP


# --- properties ------------------------------------------------------------

configs = st.integers(1, 4)


@settings(max_examples=60, deadline=None)
@given(protocols(preds=(Pred.TRUE, Pred.LT, Pred.SUCC)), st.data())
def test_bottom_sccs_match_networkx(p, data):
    n = data.draw(configs)
    c = tuple(data.draw(st.lists(st.sampled_from(p.states), min_size=n, max_size=n)))
    g = explore(p, [c])
    rep = bscc_condensation(g)
    G = nx.DiGraph()
    G.add_nodes_from(range(len(g)))
    G.add_edges_from((v, t) for v, ts in enumerate(g.adj) for t in ts)
    cond = nx.condensation(G)
    want = {frozenset(cond.nodes[x]["members"]) for x in cond if cond.out_degree(x) == 0}
    got = {frozenset(rep.components[cid]) for cid in rep.bottom}
    assert got == want


@settings(max_examples=40, deadline=None)
@given(protocols(preds=(Pred.TRUE, Pred.LT, Pred.SUCC), max_states=3), st.integers(1, 4),
       st.sampled_from([Opinion.TOP, Opinion.BOT]))
def test_stable_configs_match_definition(p, n, b):
    stable = stable_configs_at_length(p, n, b)
    for c in itertools.product(p.states, repeat=n):
        assert (c in stable) == is_stable(p, c, b)


@settings(max_examples=40, deadline=None)
@given(protocols(max_states=3), st.data())
def test_membership_iff_stable_reachable(p, data):
    n = data.draw(st.integers(1, 4))
    w = tuple(data.draw(st.lists(st.sampled_from(p.letters), min_size=n, max_size=n)))
    stable = stable_configs_at_length(p, n, Opinion.TOP)
    g = explore(p, [p.word_config(w)])
    assert membership(p, w) == any(x in stable for x in g.nodes)


@settings(max_examples=30, deadline=None)
@given(protocols(max_states=3), st.integers(1, 4))
def test_budget_is_monotone(p, n):
    w = p.letters[:1] * n
    full = explore(p, [p.word_config(w)])
    bigger = explore(p, [p.word_config(w)], budget=len(full) + 5)
    assert bigger.coded == full.coded


@settings(max_examples=30, deadline=None)
@given(protocols(max_states=3))
def test_decider_complement_partitions(p):
    n = 3
    if not all(check_decider_at_length(p, k).passed for k in range(1, n + 1)):
        return
    yes = language_up_to(p, n)
    no = language_up_to(flip_opinions(p), n)
    every = {w for k in range(1, n + 1) for w in itertools.product(p.letters, repeat=k)}
    assert yes | no == every and not (yes & no)


@settings(max_examples=30, deadline=None)
@given(protocols(preds=(Pred.TRUE, Pred.LT, Pred.SUCC), max_states=3), st.integers(0, 2**32))
def test_simulation_replays(p, seed):
    w = p.letters[:1] * 3
    t = simulate_fair_run(p, w, seed, 50)
    c = p.word_config(w)
    for step in t.steps:
        if step is not None:
            c = replay(p, c, step)
    assert c == t.final
