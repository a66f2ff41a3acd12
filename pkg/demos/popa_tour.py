"""Run the built-in partially-ordered Parikh automata and check unambiguity.

Run: python3 demos/popa_tour.py
"""

from orderpp.popa import builtin_popa, popa_membership, weak_unambiguity_up_to, words_up_to


def main():
    median = builtin_popa("median")
    for w in ("a", "bab", "ba", "abb"):
        print(f"median on {w!r}: {popa_membership(median, w)} accepting run(s)")
    for name in ("median", "median_complement", "codyck", "codyck_complement"):
        a = builtin_popa(name)
        size = sum(1 for w in words_up_to(a.alphabet, 5) if a.accepts(w))
        v = weak_unambiguity_up_to(a, 5)
        print(f"{name}: {size} accepted words up to length 5, weakly unambiguous: {v.passed}")


if __name__ == "__main__":
    main()
