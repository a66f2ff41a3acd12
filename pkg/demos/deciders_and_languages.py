"""Check a few protocols per population size and compare their languages to oracles.

Run: python3 demos/deciders_and_languages.py
"""

from orderpp import corpus
from orderpp.analysis import check_decider_at_length, compare_oracle, language_up_to
from orderpp.oracles import astarbstar, majority


def main():
    for name, oracle in (("abstar", astarbstar()), ("majority", majority())):
        p = corpus.protocol(name)
        verdicts = [check_decider_at_length(p, n) for n in range(1, 5)]
        print(f"{name}: decider per length "
              + ", ".join(f"n={v.length} {v.outcome}" for v in verdicts))
        accepted = language_up_to(p, 4)
        print(f"  accepted words up to length 4: {sorted(''.join(w) for w in accepted)}")
        print(f"  oracle comparison: {compare_oracle(accepted, oracle, 4).outcome}")

    markers = corpus.protocol("markers")
    v = check_decider_at_length(markers, 4)
    print(f"markers at n=4: {v.outcome} ({v.reason})")
    if v.trace:
        for step in v.to_dict(markers)["trace"]:
            print(f"  {step['rule']} at {step['positions']} -> {step['to']}")


if __name__ == "__main__":
    main()
