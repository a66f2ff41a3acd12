"""Explore the median protocol on a,a,b and show how it settles.

Run: python3 demos/median_walkthrough.py
"""

from orderpp import corpus
from orderpp.analysis import bscc_condensation, explore, simulate_fair_run
from orderpp.protocol import render_config


def main():
    p = corpus.protocol("median")
    g = explore(p, [p.word_config("aab")])
    rep = bscc_condensation(g)
    print(f"configurations reachable from a,a,b: {len(g)} ({g.edge_count} edges)")
    for v in range(len(g)):
        print("  ", render_config(p, g.node(v)))
    for cid in rep.bottom:
        members = [render_config(p, g.node(v)) for v in rep.components[cid]]
        print(f"bottom component {members} has consensus {rep.consensus[cid]}")

    run = simulate_fair_run(p, "aab", seed=1, max_steps=40)
    taken = sum(1 for s in run.steps if s is not None)
    print(f"random fair run: {taken} rule firings, stabilized={run.stabilized}, "
          f"opinion={run.stabilized_opinion}")


if __name__ == "__main__":
    main()
