"""Build protocols from pieces, compute stable sets and try the pumping reduction.

Run: python3 demos/compile_and_pump.py
"""

from orderpp import corpus
from orderpp.analysis import check_semidecider_at_length, membership
from orderpp.constructions import Sigma2Oracle, compile_sigma2, handshake_transform, term
from orderpp.protocol import Opinion, Pred
from orderpp.sre import render_union
from orderpp.wsts import find_reducible_pattern, pumping_m, stable_set


def main():
    aba = term("a", ("b", "a"))
    semi = compile_sigma2([aba])
    oracle = Sigma2Oracle((aba,), ("a", "b"))
    print("semi-decider for a*ba*: "
          + ", ".join(f"n={n} {check_semidecider_at_length(semi, n, oracle).outcome}"
                      for n in range(1, 4)))

    succ = corpus.protocol("abstar_succ")
    h = handshake_transform(succ)
    print(f"handshake: {len(h.states)} states, successor rules left non-IO: "
          f"{Pred.SUCC in h.non_io_predicates()}")

    p = corpus.protocol("abstar")
    print("TOP-stable configurations of ab-star:", render_union(stable_set(p, Opinion.TOP).sre))

    io = corpus.protocol("abstar_io")
    m = pumping_m(io).m
    word = "a" * 11
    pat = find_reducible_pattern(word, m)
    print(f"pumping constant m={m}; {word} reduces to {''.join(pat.reduced)}; "
          f"membership {membership(io, word)} vs {membership(io, pat.reduced)}")


if __name__ == "__main__":
    main()
